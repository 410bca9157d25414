"""Orthonormal function systems on [-1, 1].

Two families are supported, both orthonormal with respect to a probability
measure on [-1, 1]:

* Jacobi polynomials with parameters (alpha, beta), alpha, beta > -1, under
  the normalized weight c * (1-t)^alpha * (1+t)^beta.  Legendre corresponds
  to (0, 0) and Chebyshev to (-1/2, -1/2).
* Complex exponentials exp(i j pi t) for integer frequencies j, under the
  uniform probability measure 1/2.

Functions are addressed by a 1-based storage index.  For Jacobi, index i
holds degree i - 1.  For the exponentials, a truncation size K holds the K
frequencies -floor(K/2), ..., ceil(K/2) - 1 in ascending order, so that any
stored frequency j satisfies |j| <= ceil(K/2).
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import betaln, gammaln, roots_jacobi, roots_legendre

JACOBI = "jacobi"
FOURIER = "fourier"

_LOG2 = np.log(2.0)


@dataclass(frozen=True)
class BasisSpec:
    """Identifies one of the supported orthonormal systems."""

    kind: str
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in (JACOBI, FOURIER):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == JACOBI and (self.alpha <= -1.0 or self.beta <= -1.0):
            raise ValueError("Jacobi parameters must satisfy alpha, beta > -1")

    @property
    def is_complex(self) -> bool:
        return self.kind == FOURIER

    def label(self) -> str:
        if self.kind == FOURIER:
            return "fourier"
        return f"jacobi:{self.alpha:g},{self.beta:g}"


def jacobi(alpha: float, beta: float) -> BasisSpec:
    return BasisSpec(JACOBI, float(alpha), float(beta))


def legendre() -> BasisSpec:
    return BasisSpec(JACOBI, 0.0, 0.0)


def chebyshev() -> BasisSpec:
    return BasisSpec(JACOBI, -0.5, -0.5)


def fourier() -> BasisSpec:
    return BasisSpec(FOURIER)


def growth_exponent(spec: BasisSpec) -> float:
    """Exponent q such that the sup norms grow like index^(q + 1/2).

    For the exponentials the sup norms are constant, matching q = -1/2.
    """
    if spec.kind == FOURIER:
        return -0.5
    return max(spec.alpha, spec.beta, -0.5)


def frequencies(K: int) -> np.ndarray:
    """Stored frequencies for a size-K exponential basis, ascending."""
    if K < 1:
        raise ValueError("K must be >= 1")
    half = K // 2
    return np.arange(-half, K - half)


def leading_indices(spec: BasisSpec, K: int, M: int) -> np.ndarray:
    """0-based storage positions of the M lowest-order basis functions.

    Jacobi: the first M degrees.  Exponentials: the M frequencies centered
    on zero, which form a contiguous slice of the storage order.
    """
    if not 1 <= M <= K:
        raise ValueError("need 1 <= M <= K")
    if spec.kind == JACOBI:
        return np.arange(M)
    lo = K // 2 - M // 2
    return np.arange(lo, lo + M)


def nested_rank(spec: BasisSpec, K: int) -> np.ndarray:
    """Per storage position, the smallest truncation size containing it.

    For Jacobi this is just the 1-based index.  For the exponentials,
    frequency j first appears at size 2j+1 (j >= 0) or -2j (j < 0).
    """
    if spec.kind == JACOBI:
        return np.arange(1, K + 1)
    j = frequencies(K)
    return np.where(j >= 0, 2 * j + 1, -2 * j)


def _check_domain(t: np.ndarray):
    if np.any(np.abs(t) > 1.0 + 1e-12):
        raise ValueError("evaluation points must lie in [-1, 1]")


def log_weight_mass(alpha: float, beta: float) -> float:
    """log of int_{-1}^{1} (1-t)^alpha (1+t)^beta dt."""
    return (alpha + beta + 1.0) * _LOG2 + betaln(alpha + 1.0, beta + 1.0)


def kappa(alpha: float, beta: float, j) -> np.ndarray:
    """Squared norm of the degree-j Jacobi polynomial under the raw weight
    (1-t)^alpha (1+t)^beta.  Evaluated in log space; j may be an array."""
    j = np.asarray(j, dtype=float)
    if np.any(j < 0):
        raise ValueError("degree must be >= 0")
    ab = alpha + beta
    # j = 0 needs care: (ab+1)*Gamma(ab+1) = Gamma(ab+2) stays finite as
    # ab -> -1 even though the two factors do not.
    with np.errstate(divide="ignore", invalid="ignore"):
        general = (
            (ab + 1.0) * _LOG2
            - np.log(2.0 * j + ab + 1.0)
            + gammaln(j + alpha + 1.0)
            + gammaln(j + beta + 1.0)
            - gammaln(j + 1.0)
            - gammaln(j + ab + 1.0)
        )
    at_zero = (
        (ab + 1.0) * _LOG2
        + gammaln(alpha + 1.0)
        + gammaln(beta + 1.0)
        - gammaln(ab + 2.0)
    )
    out = np.exp(np.where(j == 0, at_zero, general))
    return out if out.ndim else float(out)


def _log_phi_scale(alpha: float, beta: float, j) -> np.ndarray:
    """log of the factor turning P_j^(alpha,beta) into a unit-norm function
    under the probability measure."""
    j = np.asarray(j, dtype=float)
    logk = np.log(kappa(alpha, beta, j))
    return -0.5 * (logk - log_weight_mass(alpha, beta))


def _jacobi_raw_table(alpha: float, beta: float, n_max: int, t: np.ndarray) -> np.ndarray:
    """Classical (unnormalized) Jacobi polynomials P_0..P_n_max at t,
    columns by degree, via the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    ab = alpha + beta
    P = np.empty((t.size, n_max + 1))
    P[:, 0] = 1.0
    if n_max >= 1:
        P[:, 1] = (alpha + 1.0) + (ab + 2.0) * (t - 1.0) / 2.0
    for j in range(2, n_max + 1):
        c1 = 2.0 * j * (j + ab) * (2.0 * j + ab - 2.0)
        c2 = (2.0 * j + ab - 1.0) * (alpha**2 - beta**2)
        c3 = (2.0 * j + ab - 2.0) * (2.0 * j + ab - 1.0) * (2.0 * j + ab)
        c4 = 2.0 * (j + alpha - 1.0) * (j + beta - 1.0) * (2.0 * j + ab)
        P[:, j] = ((c2 + c3 * t) * P[:, j - 1] - c4 * P[:, j - 2]) / c1
    return P


def eval_table(spec: BasisSpec, K: int, t) -> np.ndarray:
    """Evaluate the first K basis functions at the points t.

    Parameters
    ----------
    spec : BasisSpec
    K : int
        Number of functions (storage order).
    t : array_like
        Points in [-1, 1].

    Returns
    -------
    ndarray of shape (len(t), K), real for Jacobi, complex for the
    exponential system.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(t)
    if K < 1:
        raise ValueError("K must be >= 1")
    if spec.kind == FOURIER:
        return np.exp(1j * np.pi * _reduced_phase(t, frequencies(K)))
    P = _jacobi_raw_table(spec.alpha, spec.beta, K - 1, t)
    scale = np.exp(_log_phi_scale(spec.alpha, spec.beta, np.arange(K)))
    return P * scale


def _reduced_phase(t: np.ndarray, freqs) -> np.ndarray:
    # Fold t*j into [0, 2) before the complex exponential.  The extended
    # working precision keeps the fold error below one double ulp even for
    # large frequencies, where the plain product t*j has absolute error
    # growing like |j| * eps; aliased frequency pairs then agree to within
    # an ulp instead of drifting apart.
    outer = np.multiply.outer(np.asarray(t, dtype=np.longdouble), freqs)
    return np.remainder(outer, 2.0).astype(float)


def eval_basis(spec: BasisSpec, i: int, t) -> np.ndarray:
    """Evaluate a single basis function at the points t.

    For Jacobi, `i` is the 1-based storage index (degree i - 1).  For the
    exponential system, `i` is the frequency itself (any integer).
    """
    return eval_deriv(spec, i, t, order=0)


def _deriv_factor(alpha: float, beta: float, j: int) -> float:
    # d/dt P_j^(a,b) = factor * P_{j-1}^(a+1,b+1); the factor equals
    # sqrt(lambda_j * kappa_j^(a,b) / kappa_{j-1}^(a+1,b+1)) with
    # lambda_j = j * (j + a + b + 1), computed in log space.
    lam = j * (j + alpha + beta + 1.0)
    logk_num = np.log(kappa(alpha, beta, j))
    logk_den = np.log(kappa(alpha + 1.0, beta + 1.0, j - 1))
    return float(np.sqrt(lam) * np.exp(0.5 * (logk_num - logk_den)))


def eval_deriv(spec: BasisSpec, i: int, t, order: int = 1) -> np.ndarray:
    """Derivative of order 0, 1 or 2 of one basis function at points t.

    Jacobi derivatives use the parameter-shift identity, so that the
    derivative of degree j is proportional to the degree j-1 polynomial
    with parameters (alpha+1, beta+1).  For the exponential system `i` is
    the frequency and the derivative is (i*pi*j)^k times the function.
    """
    if order not in (0, 1, 2):
        raise ValueError("derivative order must be 0, 1 or 2")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(t)
    if spec.kind == FOURIER:
        phase = _reduced_phase(t, np.array([i]))[:, 0]
        return (1j * np.pi * i) ** order * np.exp(1j * np.pi * phase)
    if i < 1:
        raise ValueError("storage index must be >= 1")
    j = i - 1
    if j < order:
        return np.zeros(t.size)
    factor = np.exp(_log_phi_scale(spec.alpha, spec.beta, j))
    a, b, jj = spec.alpha, spec.beta, j
    for _ in range(order):
        factor *= _deriv_factor(a, b, jj)
        a, b, jj = a + 1.0, b + 1.0, jj - 1
    return factor * _jacobi_raw_table(a, b, jj, t)[:, jj]


def _log_binom(x: float, k: float) -> float:
    return gammaln(x + 1.0) - gammaln(k + 1.0) - gammaln(x - k + 1.0)


def linf_norm(spec: BasisSpec, i: int) -> float:
    """Sup norm over [-1, 1] of basis function i.

    When max(alpha, beta) >= -1/2 the maximum of a Jacobi polynomial sits
    at an endpoint, where closed forms exist.  Otherwise the maximum is
    interior and is located numerically.
    """
    if spec.kind == FOURIER:
        return 1.0
    if i < 1:
        raise ValueError("storage index must be >= 1")
    return float(linf_norms(spec, i)[-1])


def linf_norms(spec: BasisSpec, K: int) -> np.ndarray:
    """Sup norms of the first K basis functions (storage order)."""
    if spec.kind == FOURIER:
        return np.ones(K)
    a, b = spec.alpha, spec.beta
    j = np.arange(K, dtype=float)
    scale = _log_phi_scale(a, b, j)
    if max(a, b) >= -0.5:
        log_at_plus1 = np.array([_log_binom(jj + a, jj) for jj in j])
        log_at_minus1 = np.array([_log_binom(jj + b, jj) for jj in j])
        return np.exp(scale + np.maximum(log_at_plus1, log_at_minus1))
    # both parameters < -1/2: interior maximum, grid plus refinement
    out = np.empty(K)
    grid = np.cos(np.pi * np.arange(4096) / 4095.0)[::-1]
    table = np.abs(eval_table(spec, K, grid))
    for idx in range(K):
        best = int(np.argmax(table[:, idx]))
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, grid.size - 1)]
        out[idx] = _golden_max(lambda x: abs(eval_basis(spec, idx + 1, x)[0]), lo, hi)
    return out


def _golden_max(fn: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-10) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = fn(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = fn(x1)
    return max(f1, f2)


class ProjectionResult(NamedTuple):
    coeffs: np.ndarray
    converged: bool
    nodes: int


@lru_cache(maxsize=64)
def _jacobi_rule(Q: int, alpha: float, beta: float):
    x, w = roots_jacobi(Q, alpha, beta)
    return x, w * np.exp(-log_weight_mass(alpha, beta))


@lru_cache(maxsize=64)
def _legendre_rule(Q: int):
    x, w = roots_legendre(Q)
    return x, 0.5 * w


def project_coefficients(f: Callable, spec: BasisSpec, M: int,
                         tol: float = 1e-12, max_nodes: int = 8192) -> ProjectionResult:
    """First M generalized coefficients of f by Gauss quadrature.

    The quadrature order is doubled until two consecutive refinements agree
    to `tol` (relative, sup over coefficients).  A failure to converge is
    reported through the `converged` flag, not an exception.
    """
    if M < 1:
        raise ValueError("M must be >= 1")

    def coeffs_at(Q: int) -> np.ndarray:
        if spec.kind == JACOBI:
            x, w = _jacobi_rule(Q, spec.alpha, spec.beta)
        else:
            x, w = _legendre_rule(Q)
        fx = np.asarray(f(x))
        table = eval_table(spec, M, x)
        return table.conj().T @ (w * fx)

    Q = max(64, 2 * M)
    prev = coeffs_at(Q)
    while True:
        Q *= 2
        cur = coeffs_at(Q)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return ProjectionResult(cur, True, Q)
        if Q >= max_nodes:
            return ProjectionResult(cur, False, Q)
        prev = cur
