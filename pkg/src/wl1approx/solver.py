"""Solvers for the four fitting problems on sampled data.

Weighted l1 minimization comes in two modes.  Equality mode finds the
minimum-weighted-l1 coefficient vector interpolating the data exactly; it
runs a splitting method whose iterates stay on the constraint set, so only
the objective needs to converge.  Inequality mode relaxes the constraint to
a Euclidean ball of radius eta around the data and runs a primal-dual
scheme.  Both report a rigorous duality gap; equality mode additionally
tries to certify an exact sparse optimum by checking the optimality system
on the active support, which typically terminates it in a few hundred
iterations.

Least squares (plain and oracle) and synthesis round out the toolbox.  A
tiny-instance linear-programming oracle is included for cross-checking the
l1 path on real data.
"""

from __future__ import annotations

import numpy as np
import numpy.linalg as la
from dataclasses import dataclass

from .basis import BasisSpec, eval_table
from .sampling import SamplingMatrix, WeightVector, make_weights

STATUS_CONVERGED = "converged"
STATUS_MAX_ITER = "max_iter"
STATUS_INFEASIBLE = "infeasible_detected"

TOL_FEAS = 1e-9   # relative to ||y||
TOL_GAP = 1e-8    # relative to max(1, objective)
MAX_ITER = 200000

MODES = ("equality", "inequality")


@dataclass(frozen=True)
class SamplingProblem:
    """A weighted-l1 instance: matrix, scaled data, weights, noise radius."""

    A: SamplingMatrix
    y: np.ndarray
    w: WeightVector
    eta: float = 0.0

    @property
    def weight_array(self) -> np.ndarray:
        return self.w.w


@dataclass(frozen=True)
class SolveResult:
    z: np.ndarray
    objective: float
    feasibility_residual: float
    duality_gap: float
    iterations: int
    status: str
    # Objective values of the running-average iterate at each progress
    # check; decreasing up to small oscillations once past the warmup.
    objective_history: tuple = ()


def make_problem(A: SamplingMatrix, samples, weights, eta: float = 0.0,
                 ) -> SamplingProblem:
    """Assemble a problem from raw point samples f(t_n) + e_n.

    The data vector absorbs the same sqrt(tau_n) row scaling as the matrix,
    so the constraint residual is measured in the discrete norm.
    """
    samples = np.asarray(samples)
    n, K = A.shape
    if samples.shape != (n,):
        raise ValueError("expected %d samples, got %r" % (n, samples.shape))
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples contain NaN or infinity")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if isinstance(weights, WeightVector):
        wv = weights
    else:
        wv = make_weights(A.basis, K, scheme="custom", custom=weights)
    if len(wv) != K:
        raise ValueError("weight vector length %d, matrix has %d columns"
                         % (len(wv), K))
    y = np.sqrt(A.pointset.tau) * samples
    y.setflags(write=False)
    return SamplingProblem(A=A, y=y, w=wv, eta=float(eta))


def l1_objective(z, w) -> float:
    """Weighted l1 norm sum_i w_i |z_i|."""
    w = np.asarray(w)
    return float(w @ np.abs(np.asarray(z)))


def _soft(z: np.ndarray, t) -> np.ndarray:
    """Modulus soft-thresholding; works for real and complex entries."""
    m = np.abs(z)
    scale = np.maximum(0.0, 1.0 - t / np.where(m > 0, m, 1.0))
    return z * scale


def _certificate(A, Ah, y, w, support, feas_abs):
    """Try to certify an exact optimum on a candidate support.

    Solves the constraint restricted to the support, then looks for a dual
    vector reproducing the weighted sign pattern there while staying within
    the weight bound elsewhere.  Returns (z, objective, gap) on success,
    None if any optimality condition fails.
    """
    K = A.shape[1]
    S = np.asarray(support)
    zs = None
    # Shrink away numerically-zero entries so the sign pattern is stable.
    for _ in range(4):
        if not len(S):
            return None
        zs, *_ = la.lstsq(A[:, S], y, rcond=None)
        keep = np.abs(zs) > 1e-10 * max(1e-300, np.abs(zs).max())
        if keep.all():
            break
        S = S[keep]
    if not len(S) or la.norm(A[:, S] @ zs - y) > feas_abs:
        return None
    sgn = zs / np.abs(zs)
    AS = A[:, S]
    target = w[S] * sgn
    vc, *_ = la.lstsq(AS.conj().T, target, rcond=None)
    if la.norm(AS.conj().T @ vc - target) > 1e-9 * max(1.0, la.norm(w[S])):
        return None
    gv = np.abs(Ah @ vc) / w
    off = np.ones(K, bool)
    off[S] = False
    if off.any() and gv[off].max() > 1 + 1e-9:
        return None
    zp = np.zeros(K, dtype=A.dtype)
    zp[S] = zs
    objp = float(w[S] @ np.abs(zs))
    dval = float(np.real(np.vdot(y, vc / max(1.0, gv.max()))))
    return zp, objp, objp - dval


def _solve_equality(A, y, w, tol_feas, tol_gap, max_iter,
                    check_every=25, relax=1.7):
    """Interpolating weighted-l1 solve.

    Works in the column-scaled variable zt = w*z, where the objective is the
    plain l1 norm and thresholds are uniform.  Each iterate is projected
    exactly onto the affine constraint set through a cached factorization,
    so feasibility holds throughout and the first of the two stopping rules
    to fire (generic duality gap from the running multiplier, or the exact
    support certificate) ends the run.
    """
    N, K = A.shape
    At = A / w[None, :]
    Ath = At.conj().T
    # One economy SVD serves the affine projection, the reachability screen
    # and the running dual.  Factoring At itself, instead of the Gram matrix
    # At At^H, keeps the attainable accuracy linear in the condition number;
    # the rank cut absorbs grids with coinciding rows, such as period-aliased
    # endpoint pairs.
    Us, Sv, Vh = la.svd(At, full_matrices=False)
    keep = Sv > (Sv[0] * 1e-12 if Sv[0] > 0 else 0)
    Ur = Us[:, keep]
    Sr = Sv[keep]
    Vr = Vh[keep]
    Uy = Ur.conj().T @ y
    q = Vr.conj().T @ (Uy / Sr)
    ynorm = la.norm(y)
    feas_abs = tol_feas * max(ynorm, 1e-300)
    base_res = la.norm(y - Ur @ Uy)
    if base_res > max(10 * feas_abs, 1e-12):
        # y is not reachable: no feasible point exists.
        return (q / w, 0, STATUS_INFEASIBLE, float(w @ np.abs(q / w)),
                base_res, np.inf, ())
    Ah = A.conj().T
    rho = 1.0 / max(np.abs(q).max(), 1e-300)
    s = np.zeros(K, dtype=A.dtype)
    u = np.zeros(K, dtype=A.dtype)
    xsum = np.zeros(K, dtype=A.dtype)
    hist = []
    obj = gap = np.inf
    x = q.copy()
    for k in range(1, max_iter + 1):
        d = s - u
        x = d - Vr.conj().T @ (Vr @ d) + q
        xr = relax * x + (1 - relax) * s
        s_old = s
        s = _soft(xr + u, 1.0 / rho)
        u = u + xr - s
        xsum += x
        if k % check_every == 0:
            # In the scaled variable the objective is the plain l1 norm.
            obj = float(np.abs(x).sum())
            hist.append(float(np.abs(xsum).sum() / k))
            nu = Ur @ ((Vr @ (rho * u)) / Sr)
            gnu = np.abs(Ath @ nu)
            dval = float(np.real(np.vdot(y, nu / max(1.0, gnu.max()))))
            gap = obj - dval
            if gap <= tol_gap * max(1.0, obj):
                z = x / w
                return (z, k, STATUS_CONVERGED, obj,
                        la.norm(A @ z - y), gap, tuple(hist))
            S = np.flatnonzero(np.abs(s) > 0)
            if len(S):
                got = _certificate(A, Ah, y, w, S, feas_abs)
                if got is not None and got[2] <= tol_gap * max(1.0, got[1]):
                    zp, objp, gapp = got
                    return (zp, k, STATUS_CONVERGED, objp,
                            la.norm(A @ zp - y), gapp, tuple(hist))
            # Rebalance the penalty when primal/dual residuals drift apart.
            rp = la.norm(x - s)
            rd = rho * la.norm(s - s_old)
            if rp > 10 * rd and rp > 1e-14:
                rho *= 2
                u /= 2
            elif rd > 10 * rp and rd > 1e-14:
                rho /= 2
                u *= 2
    z = x / w
    return (z, max_iter, STATUS_MAX_ITER, obj,
            la.norm(A @ z - y), gap, tuple(hist))


def _solve_inequality(A, y, w, eta, tol_feas, tol_gap, max_iter,
                      check_every=50):
    """Primal-dual solve of the ball-constrained problem (eta > 0)."""
    N, K = A.shape
    L = la.norm(A, 2)
    sig = tau = 0.99 / L
    z = np.zeros(K, dtype=A.dtype)
    v = np.zeros(N, dtype=A.dtype)
    zbar = z.copy()
    zsum = np.zeros(K, dtype=A.dtype)
    Ah = A.conj().T
    feas_abs = tol_feas * max(la.norm(y), 1e-300)
    wt = tau * w
    # Minimum-norm correction used to push the running average inside the
    # residual ball before its objective is recorded, so the monitored
    # sequence is made of attainable values and decreases toward the
    # optimum instead of creeping up from below.
    Us, Sv, Vh = la.svd(A, full_matrices=False)
    keep = Sv > (Sv[0] * 1e-12 if Sv[0] > 0 else 0)
    Urk, Srk, Vrk = Us[:, keep], Sv[keep], Vh[keep]

    def feasible_objective(za):
        r = A @ za - y
        rn = la.norm(r)
        if rn > eta:
            corr = (r * (eta / rn if eta > 0 else 0.0)) - r
            za = za + Vrk.conj().T @ ((Urk.conj().T @ corr) / Srk)
        return l1_objective(za, w)

    hist = []
    obj = feas = gap = np.inf
    for k in range(1, max_iter + 1):
        r = v + sig * (A @ zbar) - sig * y
        nr = la.norm(r) / sig
        shrink = min(1.0, eta / nr) if nr > 0 else 0.0
        v = (1.0 - shrink) * r
        znew = _soft(z - tau * (Ah @ v), wt)
        zbar = 2 * znew - z
        z = znew
        zsum += z
        if k % check_every == 0:
            res = la.norm(A @ z - y)
            feas = max(res - eta, 0.0)
            obj = float(w @ np.abs(z))
            hist.append(feasible_objective(zsum / k))
            g = Ah @ v
            scale = max(1.0, np.max(np.abs(g) / w))
            vt = v / scale
            dval = -float(np.real(np.vdot(y, vt))) - eta * la.norm(vt)
            gap = obj - dval
            if feas <= feas_abs and gap <= tol_gap * max(1.0, obj):
                return z, k, STATUS_CONVERGED, obj, feas, gap, tuple(hist)
    return z, max_iter, STATUS_MAX_ITER, obj, feas, gap, tuple(hist)


def solve_weighted_l1(p: SamplingProblem, mode: str = "equality",
                      tol_feas: float = TOL_FEAS, tol_gap: float = TOL_GAP,
                      max_iter: int = MAX_ITER) -> SolveResult:
    """Minimize sum_i w_i |z_i| over the selected constraint set.

    equality:   A z = y exactly (eta ignored).
    inequality: ||A z - y|| <= eta; with eta = 0 this reduces to the
                equality path, which handles the limit far better than the
                ball projection does.
    """
    if mode not in MODES:
        raise ValueError("unknown mode %r" % (mode,))
    A = p.A.entries
    y = np.asarray(p.y)
    w = np.asarray(p.weight_array, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("data contains NaN or infinity")

    if mode == "inequality" and p.eta > 0:
        # Quick reachability screen: even the best l2 fit may sit outside
        # the ball, in which case the feasible set is empty.
        res_min = _min_residual(A, y)
        if res_min > p.eta + 10 * tol_feas * max(la.norm(y), 1e-300):
            return SolveResult(
                z=np.zeros(A.shape[1], dtype=A.dtype),
                objective=0.0,
                feasibility_residual=max(la.norm(y) - p.eta, 0.0),
                duality_gap=np.inf, iterations=0,
                status=STATUS_INFEASIBLE)
        out = _solve_inequality(A, y, w, p.eta, tol_feas, tol_gap, max_iter)
        eta = p.eta
    else:
        out = _solve_equality(A, y, w, tol_feas, tol_gap, max_iter)
        eta = 0.0
    z, its, status, obj, res, gap, hist = out
    if status == STATUS_INFEASIBLE:
        feas = res
    else:
        feas = max(res - eta, 0.0)
    return SolveResult(z=z, objective=float(obj),
                       feasibility_residual=float(feas),
                       duality_gap=float(gap), iterations=its,
                       status=status, objective_history=hist)


def _min_residual(A, y) -> float:
    """Distance from y to the range of A."""
    zhat, *_ = la.lstsq(A, y, rcond=None)
    return float(la.norm(A @ zhat - y))


def solve_least_squares(A: SamplingMatrix, y, M: int) -> np.ndarray:
    """Least-squares fit against the leading M basis elements.

    Minimum-norm solution on rank-deficient blocks.  The returned length-M
    vector uses the same storage order as a size-M truncation, so it can be
    fed straight to synthesize.
    """
    y = np.asarray(y)
    block = A.leading(M)
    z, *_ = la.lstsq(block, y, rcond=None)
    return z


def oracle_least_squares(A: SamplingMatrix, y, f_true, resolution: int = 10000):
    """Best least-squares truncation size in hindsight.

    Sweeps M from 1 to min(N, K), measuring each fit's sup error against the
    true function, and returns (best M, its coefficients).  Needs the truth,
    so this is an expository tool, not a practical method.
    """
    n, K = A.shape
    grid = _cheb_grid(resolution)
    fg = np.asarray(f_true(grid))
    table = eval_table(A.basis, min(n, K), grid)
    best = (np.inf, None, None)
    for M in range(1, min(n, K) + 1):
        z = solve_least_squares(A, y, M)
        approx = _leading_block(table, A.basis, M) @ z
        err = float(np.max(np.abs(approx - fg)))
        if err < best[0]:
            best = (err, M, z)
    return best[1], best[2]


def _leading_block(table, basis, M):
    K = table.shape[1]
    if basis.is_complex:
        lo = K // 2 - M // 2
        return table[:, lo:lo + M]
    return table[:, :M]


def synthesize(z, basis: BasisSpec, t):
    """Evaluate sum_i z_i phi_i at t (scalar or array)."""
    z = np.asarray(z)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    vals = eval_table(basis, len(z), tt) @ z
    if np.isscalar(t) or np.ndim(t) == 0:
        return vals[0]
    return vals


def _cheb_grid(resolution: int) -> np.ndarray:
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    return np.cos(np.pi * np.arange(resolution) / (resolution - 1))[::-1]


def sup_error(f_true, z, basis: BasisSpec, resolution: int = 10000) -> float:
    """Max pointwise error of the synthesized approximant on a dense grid.

    The grid clusters near the ends, where polynomial approximants
    misbehave first.
    """
    grid = _cheb_grid(resolution)
    approx = synthesize(z, basis, grid)
    return float(np.max(np.abs(approx - np.asarray(f_true(grid)))))


def lp_oracle(A, y, w):
    """Exact equality-mode objective via linear programming (real data only).

    Splits z into positive and negative parts and hands the result to a
    simplex/interior solver.  Only for small cross-check instances.
    """
    from scipy.optimize import linprog

    entries = A.entries if isinstance(A, SamplingMatrix) else np.asarray(A)
    if np.iscomplexobj(entries) or np.iscomplexobj(np.asarray(y)):
        raise ValueError("the LP reformulation needs real data")
    n, K = entries.shape
    w = np.asarray(w, dtype=float)
    cost = np.concatenate([w, w])
    Aeq = np.hstack([entries, -entries])
    res = linprog(cost, A_eq=Aeq, b_eq=np.asarray(y), method="highs",
                  bounds=[(0, None)] * (2 * K))
    if not res.success:
        raise RuntimeError("LP oracle failed: %s" % (res.message,))
    z = res.x[:K] - res.x[K:]
    return z, float(res.fun)


def save_result(path, result: SolveResult) -> None:
    """Plain-text record: status header, scalars, then one coefficient per
    line (real and imaginary parts for complex data)."""
    with open(path, "w") as fh:
        fh.write("status %s\n" % result.status)
        fh.write("objective %.17g\n" % result.objective)
        fh.write("feasibility_residual %.17g\n" % result.feasibility_residual)
        fh.write("duality_gap %.17g\n" % result.duality_gap)
        fh.write("iterations %d\n" % result.iterations)
        for zi in result.z:
            if np.iscomplexobj(result.z):
                fh.write("%.17g %.17g\n" % (zi.real, zi.imag))
            else:
                fh.write("%.17g\n" % zi)
