"""Sampling-operator assembly, weight vectors, and truncation-degree selection.

The discrete sampling operator takes a coefficient vector of length K to the
weighted point values of the synthesized function: entry (n, i) equals
sqrt(tau_n) * phi_i(t_n).  Rows are scaled so that the Euclidean norm on data
space matches the discrete inner product induced by the cell measures.

Degree selection offers two policies.  The search policy doubles K until the
numerical rank of the matrix stops growing and its smallest nonzero singular
value clears the requested threshold.  The formula policy evaluates a closed
form in the mesh parameters, with a constant calibrated once per basis so the
two policies agree on a reference grid.
"""

from __future__ import annotations

import math

import numpy as np
from dataclasses import dataclass

from .basis import (
    BasisSpec,
    eval_table,
    frequencies,
    leading_indices,
    linf_norms,
)
from .grid import DegenerateGridError, PointSet, build_pointset

# Relative cutoff below which singular values count as zero.
RANK_RTOL = 1e-10

# Hard cap for the doubling search; larger requests are treated as divergent.
MAX_TRUNCATION = 2 ** 16

WEIGHT_SCHEMES = ("poly_gamma", "fourier_gamma", "unit", "custom")


class TruncationSearchError(RuntimeError):
    """Degree selection exceeded the hard cap without meeting its target."""


@dataclass(frozen=True)
class SamplingMatrix:
    """Dense N x K sampling matrix with its provenance."""

    entries: np.ndarray
    basis: BasisSpec
    pointset: PointSet

    @property
    def shape(self):
        return self.entries.shape

    @property
    def n_points(self) -> int:
        return self.entries.shape[0]

    @property
    def n_columns(self) -> int:
        return self.entries.shape[1]

    def column_labels(self) -> np.ndarray:
        """Degree (Jacobi) or frequency (Fourier) of each stored column."""
        K = self.n_columns
        if self.basis.is_complex:
            return frequencies(K)
        return np.arange(K)

    def leading(self, M: int) -> np.ndarray:
        """The N x M block spanning the first M elements of the system.

        For Jacobi this is the first M columns; for Fourier it is the
        centered contiguous slice holding the M lowest frequencies.
        """
        idx = leading_indices(self.basis, self.n_columns, M)
        return self.entries[:, idx[0]:idx[-1] + 1]


@dataclass(frozen=True)
class WeightVector:
    """Positive weights for the weighted l1 objective.

    violates_growth marks vectors that dip below the sup norm of the
    corresponding basis function somewhere.  Such weights fall outside the
    guarantees and are only produced on request.
    """

    w: np.ndarray
    scheme: str
    gamma: float | None = None
    violates_growth: bool = False

    def __len__(self) -> int:
        return len(self.w)


def build_matrix(basis: BasisSpec, ps: PointSet, K: int) -> SamplingMatrix:
    """Assemble the N x K matrix with entries sqrt(tau_n) * phi_i(t_n)."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if ps.basis.label() != basis.label():
        raise ValueError(
            "point set was built for measure %s, not %s"
            % (ps.basis.label(), basis.label()))
    table = eval_table(basis, K, ps.points)
    entries = np.sqrt(ps.tau)[:, None] * table
    entries.setflags(write=False)
    return SamplingMatrix(entries=entries, basis=basis, pointset=ps)


def _entries(A) -> np.ndarray:
    if isinstance(A, SamplingMatrix):
        return A.entries
    return np.asarray(A)


def _singular_values(entries: np.ndarray) -> np.ndarray:
    if entries.size == 0:
        raise ValueError("empty matrix has no singular values")
    try:
        return np.linalg.svd(entries, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "SVD failed on a %s matrix: %s" % (entries.shape, exc))


def _numerical_rank(s: np.ndarray) -> int:
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_RTOL * s[0]))


def min_singular_value(A) -> float:
    """Smallest singular value of A viewed as an operator on K-vectors.

    A wide matrix (more columns than rows) necessarily annihilates part of
    its domain, so the result is exactly 0 in that case.
    """
    entries = _entries(A)
    n, k = entries.shape
    if k > n:
        return 0.0
    return float(_singular_values(entries)[-1])


def smallest_nonzero_singular_value(A) -> float:
    """Smallest singular value above the numerical-rank cutoff."""
    s = _singular_values(_entries(A))
    r = _numerical_rank(s)
    if r == 0:
        raise ValueError("zero matrix has no nonzero singular values")
    return float(s[r - 1])


def make_weights(basis: BasisSpec, K: int, scheme: str = "unit",
                 gamma: float = 0.0, relax: bool = False,
                 custom=None) -> WeightVector:
    """Build a weight vector of length K under the named scheme.

    poly_gamma:    w at position i (1-based) is i**gamma times the sup norm
                   of the i-th function.  With relax=True the sup-norm factor
                   is dropped, giving the literal i**gamma.
    fourier_gamma: w at frequency j is 1 + |j|**gamma.
    unit:          w equals the sup norm of each function (the smallest
                   admissible choice).
    custom:        caller-supplied positive vector, validated only.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if scheme not in WEIGHT_SCHEMES:
        raise ValueError("unknown weight scheme %r" % (scheme,))
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")

    if scheme == "custom":
        if custom is None:
            raise ValueError("custom scheme requires a weight array")
        w = np.asarray(custom, dtype=float).copy()
        if len(w) != K:
            raise ValueError("custom weights must have length K")
        gval = None
    elif scheme == "fourier_gamma":
        if not basis.is_complex:
            raise ValueError("fourier_gamma weights need the Fourier system")
        w = 1.0 + np.abs(frequencies(K)) ** float(gamma)
        gval = float(gamma)
    else:
        if basis.is_complex and scheme == "poly_gamma":
            raise ValueError("poly_gamma weights are position-based; "
                             "use fourier_gamma for the Fourier system")
        sup = linf_norms(basis, K)
        if scheme == "unit":
            w = sup.copy()
            gval = None
        else:
            pos = np.arange(1, K + 1, dtype=float)
            w = pos ** float(gamma)
            if not relax:
                w = w * sup
            gval = float(gamma)

    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be positive and finite")
    sup = linf_norms(basis, K)
    violates = bool(np.any(w < sup * (1.0 - 1e-12)))
    w.setflags(write=False)
    return WeightVector(w=w, scheme=scheme, gamma=gval,
                        violates_growth=violates)


# Calibrated constants for the formula policy, keyed by basis label.
_FORMULA_CONSTANTS: dict = {}

# Reference grid used for calibration: 20 cell midpoints, so the fill
# distance and the ghost-padded separation both equal 1/20.
_CALIBRATION_N = 20
_CALIBRATION_EPS = 0.5


def _formula_value(C: float, eps: float, r: float, h: float, xi: float) -> float:
    base = math.sqrt(2.0) * C * (1.0 + 1.0 / eps)
    return base ** (1.0 / r) * h ** (1.0 / (2.0 * r)) * xi ** (-1.0 - 1.0 / r)


def _calibration_constant(basis: BasisSpec) -> float:
    key = basis.label()
    if key not in _FORMULA_CONSTANTS:
        n = _CALIBRATION_N
        pts = -1.0 + (2.0 * np.arange(1, n + 1) - 1.0) / n
        ps = build_pointset(pts, basis)
        K0 = choose_K(basis, ps, _CALIBRATION_EPS, policy="sigma_search")
        # Invert the r=1 formula so it reproduces K0 on this grid.
        raw = _formula_value(1.0, _CALIBRATION_EPS, 1.0, ps.h, ps.xi)
        _FORMULA_CONSTANTS[key] = K0 / raw
    return _FORMULA_CONSTANTS[key]


def choose_K(basis: BasisSpec, ps: PointSet, epsilon: float,
             policy: str = "sigma_search", r: float = 1.0,
             max_K: int = MAX_TRUNCATION) -> int:
    """Pick the truncation degree K for a given point set.

    sigma_search doubles K from N upward and stops once the numerical rank
    of the sampling matrix matches that at 2K and the smallest nonzero
    singular value exceeds 1 - epsilon.  theorem_formula evaluates the
    calibrated closed form; it needs a positive separation parameter and a
    smoothness order r.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")

    if policy == "theorem_formula":
        if r <= 0:
            raise ValueError("smoothness order r must be positive")
        if ps.degenerate or ps.xi <= 0.0:
            raise DegenerateGridError(
                "formula policy needs separated points away from the ends; "
                "use sigma_search on this grid")
        C = _calibration_constant(basis)
        K = int(math.ceil(_formula_value(C, epsilon, r, ps.h, ps.xi)))
        K = max(K, 1)
        if K > max_K:
            raise TruncationSearchError(
                "formula policy requests K=%d beyond the cap %d" % (K, max_K))
        return K
    if policy != "sigma_search":
        raise ValueError("unknown policy %r" % (policy,))

    K = max(1, ps.n)
    s = _singular_values(build_matrix(basis, ps, K).entries)
    while True:
        if 2 * K > max_K:
            raise TruncationSearchError(
                "no K below the cap %d reached the singular-value target"
                % (max_K,))
        s2 = _singular_values(build_matrix(basis, ps, 2 * K).entries)
        rank = _numerical_rank(s)
        if rank > 0 and rank == _numerical_rank(s2) \
                and s[rank - 1] > 1.0 - epsilon:
            return K
        K, s = 2 * K, s2


def save_matrix(path, A) -> None:
    """Write a matrix as plain text: header line "N K", then one row per line.

    Real matrices store K numbers per row.  Complex matrices store 2K, the
    real and imaginary parts of each entry adjacent, so files stay diffable
    across implementations.
    """
    entries = _entries(A)
    n, k = entries.shape
    with open(path, "w") as fh:
        fh.write("%d %d\n" % (n, k))
        for row in entries:
            if np.iscomplexobj(entries):
                flat = np.empty(2 * k)
                flat[0::2], flat[1::2] = row.real, row.imag
            else:
                flat = row
            fh.write(" ".join("%.17g" % v for v in flat) + "\n")


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by save_matrix; dtype inferred from row width."""
    with open(path) as fh:
        header = fh.readline().split()
        n, k = int(header[0]), int(header[1])
        rows = [np.array(fh.readline().split(), dtype=float)
                for _ in range(n)]
    out = np.vstack(rows)
    if out.shape[1] == 2 * k:
        return out[:, 0::2] + 1j * out[:, 1::2]
    if out.shape[1] != k:
        raise ValueError("row width %d matches neither K nor 2K" % out.shape[1])
    return out
