"""Error-analysis diagnostics for the sampling operator.

Quantifies how far the discrete setup is from the ideal orthonormal one:
deviation of the discrete Gram matrix from the identity (spectral and
max-row-sum), weighted coherence between high-order rows and the leading
columns, a dual-certificate check for support recovery, and computable
upper bounds on the error committed by truncating the expansion.

The infinite operator is approximated by a finite surrogate with K_diag
columns; quantities involving a tail are reported together with the
surrogate size so the analytic tail estimates can take over beyond it.
"""

from __future__ import annotations

import numpy as np
import numpy.linalg as la
from dataclasses import dataclass

from .basis import BasisSpec, leading_indices, nested_rank
from .grid import build_pointset, generate
from .sampling import (
    SamplingMatrix,
    WeightVector,
    build_matrix,
    make_weights,
)

REPORT_COLUMNS = ("h", "xi", "N", "M", "R", "K", "E2", "Einf", "F",
                  "sigma_min", "alpha", "theta", "trunc_w", "trunc_wtilde")


@dataclass(frozen=True)
class CertificateResult:
    alpha: float
    theta: float
    satisfied: bool


@dataclass(frozen=True)
class DiagnosticsReport:
    """One diagnostics row; field order matches the CSV column order.

    Rows produced by partial studies may carry nan in the certificate or
    truncation columns; fully populated rows are finite and nonnegative
    throughout.
    """

    h: float
    xi: float
    N: int
    M: int
    R: int
    K: int
    E2: float
    Einf: float
    F: float
    sigma_min: float
    alpha: float
    theta: float
    trunc_w: float
    trunc_wtilde: float

    def astuple(self):
        return (self.h, self.xi, self.N, self.M, self.R, self.K, self.E2,
                self.Einf, self.F, self.sigma_min, self.alpha, self.theta,
                self.trunc_w, self.trunc_wtilde)


def _weight_array(W, K: int) -> np.ndarray:
    w = W.w if isinstance(W, WeightVector) else np.asarray(W, dtype=float)
    if len(w) != K:
        raise ValueError("weight length %d does not match K=%d" % (len(w), K))
    return w


def compute_E(U: SamplingMatrix, M: int):
    """Gram deviation of the leading M block: spectral and max-row-sum."""
    B = U.leading(M)
    D = np.eye(M) - B.conj().T @ B
    E2 = float(la.norm(D, 2))
    Einf = float(np.max(np.sum(np.abs(D), axis=1)))
    return E2, Einf


def compute_F(U: SamplingMatrix, W, M: int, R: int) -> float:
    """Weighted coherence of tail rows against the leading M columns.

    Rows are the elements outside the leading R, columns the leading M, of
    the inverse-weighted discrete Gram.  R ranges over the storage of U, so
    the caller controls the surrogate size through K.
    """
    K = U.n_columns
    if not 1 <= M <= R:
        raise ValueError("need 1 <= M <= R")
    if R >= K:
        raise ValueError("tail block is empty: need R < K")
    w = _weight_array(W, K)
    C = U.entries.conj().T @ U.leading(M)
    rows = np.sum(np.abs(C), axis=1) / w
    tail = np.ones(K, bool)
    tail[leading_indices(U.basis, K, R)] = False
    return float(np.max(rows[tail]))


def check_dual_certificate(U: SamplingMatrix, W, delta, signs=None,
                           ) -> CertificateResult:
    """Check the support-recovery certificate for a candidate support.

    alpha measures invertibility of the Gram restricted to the support;
    theta the worst off-support correlation of the certificate vector built
    from the sign pattern.  Both below 1 means minimizers are essentially
    confined to the support.
    """
    K = U.n_columns
    delta = np.asarray(delta, dtype=int)
    if delta.size == 0:
        raise ValueError("support set is empty")
    if len(np.unique(delta)) != len(delta):
        raise ValueError("support indices repeat")
    if delta.min() < 0 or delta.max() >= K:
        raise ValueError("support index out of range")
    w = _weight_array(W, K)
    if signs is None:
        signs = np.ones(len(delta))
    else:
        signs = np.asarray(signs)
        if signs.shape != (len(delta),) \
                or not np.allclose(np.abs(signs), 1.0, atol=1e-12):
            raise ValueError("signs must be unit-modulus, one per index")

    B = U.entries[:, delta]
    G = B.conj().T @ B
    alpha = float(la.norm(G - np.eye(len(delta)), 2))
    if alpha >= 1.0:
        return CertificateResult(alpha=alpha, theta=np.inf, satisfied=False)
    try:
        inner = la.solve(G, w[delta] * signs)
    except la.LinAlgError:
        return CertificateResult(alpha=alpha, theta=np.inf, satisfied=False)
    u = (U.entries.conj().T @ (B @ inner)) / w
    off = np.ones(K, bool)
    off[delta] = False
    theta = float(np.max(np.abs(u[off]))) if off.any() else 0.0
    return CertificateResult(alpha=alpha, theta=theta,
                             satisfied=alpha < 1.0 and theta < 1.0)


def truncation_bound(U: SamplingMatrix, weights_ext, coeffs_ext,
                     wtilde_mode: bool = False) -> float:
    """Upper bound on the extra error from truncating the expansion at K.

    coeffs_ext and weights_ext describe the function in a storage longer
    than K; everything outside the leading K counts as tail.  The plain
    mode multiplies the weighted tail norm by 1 + ||leading weights|| over
    the smallest nonzero singular value; the wtilde mode instead reweights
    the tail by sqrt(position) * w^2, which is sharper when the weights
    grow.  Returns infinity when the singular value vanishes.
    """
    K = U.n_columns
    x = np.asarray(coeffs_ext)
    L = len(x)
    if L < K:
        raise ValueError("extended coefficients shorter than the truncation")
    w = _weight_array(weights_ext, L)
    lead = leading_indices(U.basis, L, K)
    tail = np.ones(L, bool)
    tail[lead] = False
    if not tail.any():
        return 0.0
    tail_l1w = float(w[tail] @ np.abs(x[tail]))
    s = la.svd(U.entries, compute_uv=False)
    if s[0] == 0.0:
        return np.inf
    rank = int(np.count_nonzero(s > 1e-10 * s[0]))
    sigma = float(s[rank - 1])
    if sigma <= 0.0:
        return np.inf
    if wtilde_mode:
        wt = np.sqrt(nested_rank(U.basis, L)) * w ** 2
        return tail_l1w + float(wt[tail] @ np.abs(x[tail])) / sigma
    lead_norm = float(la.norm(w[lead]))
    return tail_l1w * (1.0 + lead_norm / sigma)


def _admissible(basis: BasisSpec, h: float, M: int) -> bool:
    # Mesh-width regimes under which the decay laws are stated.
    if basis.is_complex:
        return h * M <= 1.0
    return h * M * M <= 1.0


def _fit_loglog(hs, vals):
    hs = np.asarray(hs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    keep = vals > 0
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(np.log(hs[keep]), np.log(vals[keep]), 1)[0]
    return float(slope)


def scaling_study(basis: BasisSpec, grid_kind: str, M: int,
                  n_levels: int = 7, N0: int | None = None, seed: int = 0,
                  weight_gamma: float = 1.0, amplitude: float = 0.75):
    """Measure how the Gram deviations decay under grid refinement.

    Runs n_levels grids with N doubling from N0, keeps the levels in the
    admissible mesh regime, and fits log-log slopes of E2, Einf and F
    against the fill distance.  Returns (rows, slopes) where slopes maps
    quantity name to fitted decay exponent.

    Jittered grids draw fresh points per level from a seed sequence, so the
    study is reproducible for a fixed seed.
    """
    if n_levels < 5:
        raise ValueError("need at least 5 refinement levels")
    if N0 is None:
        N0 = 33 if basis.is_complex else 65
    R = 2 * M
    K = 2 * R
    children = np.random.SeedSequence(seed).spawn(n_levels)
    rows = []
    for lvl in range(n_levels):
        n = N0 * 2 ** lvl
        pts = generate(grid_kind, n, seed=children[lvl], amplitude=amplitude)
        ps = build_pointset(pts, basis)
        if not _admissible(basis, ps.h, M):
            continue
        U = build_matrix(basis, ps, K)
        if basis.is_complex:
            W = make_weights(basis, K, "fourier_gamma", gamma=weight_gamma)
        else:
            W = make_weights(basis, K, "poly_gamma", gamma=weight_gamma)
        E2, Einf = compute_E(U, M)
        F = compute_F(U, W, M, R)
        s = la.svd(U.entries, compute_uv=False)
        r = int(np.count_nonzero(s > 1e-10 * s[0])) if s[0] > 0 else 0
        sigma = float(s[r - 1]) if r else 0.0
        cert = check_dual_certificate(
            U, W, leading_indices(basis, K, M))
        rows.append(DiagnosticsReport(
            h=ps.h, xi=ps.xi, N=n, M=M, R=R, K=K, E2=E2, Einf=Einf, F=F,
            sigma_min=sigma, alpha=cert.alpha, theta=cert.theta,
            trunc_w=float("nan"), trunc_wtilde=float("nan")))
    if len(rows) < 5:
        raise ValueError(
            "only %d levels admissible; start from a finer grid" % len(rows))
    hs = [r.h for r in rows]
    slopes = {
        "E2": _fit_loglog(hs, [r.E2 for r in rows]),
        "Einf": _fit_loglog(hs, [r.Einf for r in rows]),
        "F": _fit_loglog(hs, [r.F for r in rows]),
    }
    return rows, slopes


def write_report_csv(path, reports) -> None:
    """Comma-separated table of diagnostics rows in the documented order."""
    with open(path, "w") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for rep in reports:
            cells = []
            for name, val in zip(REPORT_COLUMNS, rep.astuple()):
                if name in ("N", "M", "R", "K"):
                    cells.append("%d" % val)
                else:
                    cells.append("%.17g" % val)
            fh.write(",".join(cells) + "\n")
    return None
