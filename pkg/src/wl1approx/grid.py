"""Scattered point sets on [-1, 1] and their geometric quantities.

A point set carries the Voronoi cells of its nodes, the measure of each
cell under the basis's probability measure (quadrature weights tau), the
fill distance h, and the half minimal separation xi.  The separation
includes ghost points reflecting the interval endpoints; the reflection
rule is selectable and defaults to the one matching the basis family.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .basis import BasisSpec, FOURIER, legendre


class DegenerateGridError(ValueError):
    """Raised for point sets that violate the strict-ordering requirements."""


GHOST_REFLECT = "reflect"    # t_0 = -t_1 - 2, t_{N+1} = 2 - t_N
GHOST_ENDPOINT = "endpoint"  # t_0 = -1, t_{N+1} = 1


@dataclass(frozen=True)
class PointSet:
    """Sorted nodes plus derived cell geometry.

    Fields
    ------
    points : ndarray, strictly increasing, inside [-1, 1]
    edges : ndarray of length N+1; cell n is [edges[n], edges[n+1]]
    tau : ndarray, probability measure of each cell; sums to 1
    h : float, fill distance
    xi : float, half minimal separation including ghost points
    degenerate : bool, True when xi == 0 (points touching an endpoint
        under the reflect rule); flagged rather than fatal
    ghost_rule : which endpoint reflection produced xi
    """

    points: np.ndarray
    edges: np.ndarray
    tau: np.ndarray
    h: float
    xi: float
    degenerate: bool
    ghost_rule: str
    basis: BasisSpec = field(default_factory=legendre)

    @property
    def n(self) -> int:
        return self.points.size


def _validate_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        raise DegenerateGridError("empty point set")
    if np.any(np.abs(pts) > 1.0):
        raise ValueError("points must lie in [-1, 1]")
    if pts.size > 1:
        gaps = np.diff(pts)
        if np.any(gaps < 0):
            raise DegenerateGridError("points must be sorted ascending")
        if np.any(gaps == 0):
            raise DegenerateGridError("duplicate points")
    return pts


def _measure_cdf(basis: BasisSpec, x: np.ndarray) -> np.ndarray:
    """CDF of the basis probability measure at x in [-1, 1]."""
    if basis.kind == FOURIER:
        return (np.asarray(x) + 1.0) / 2.0
    # Jacobi measure c*(1-t)^a*(1+t)^b maps to a Beta distribution under
    # u = (1+t)/2, which betainc evaluates with full endpoint accuracy.
    u = np.clip((np.asarray(x) + 1.0) / 2.0, 0.0, 1.0)
    return betainc(basis.beta + 1.0, basis.alpha + 1.0, u)


def cell_measures(basis: BasisSpec, edges: np.ndarray) -> np.ndarray:
    """Measure of each cell [edges[n], edges[n+1]] under the basis measure."""
    cdf = _measure_cdf(basis, edges)
    return np.diff(cdf)


def build_pointset(points, basis: BasisSpec, ghost_rule: str | None = None) -> PointSet:
    """Assemble a PointSet with cells, weights and density metrics.

    Parameters
    ----------
    points : array_like
        Strictly increasing values in [-1, 1].
    basis : BasisSpec
        Determines the measure for the quadrature weights and, when
        ghost_rule is None, the endpoint reflection convention
        ("endpoint" for the exponential system, "reflect" otherwise).
    ghost_rule : {"reflect", "endpoint"}, optional
    """
    pts = _validate_points(points)
    if ghost_rule is None:
        ghost_rule = GHOST_ENDPOINT if basis.kind == FOURIER else GHOST_REFLECT
    if ghost_rule not in (GHOST_REFLECT, GHOST_ENDPOINT):
        raise ValueError(f"unknown ghost rule {ghost_rule!r}")

    mids = (pts[1:] + pts[:-1]) / 2.0
    edges = np.concatenate([[-1.0], mids, [1.0]])
    tau = cell_measures(basis, edges)

    gaps = np.diff(pts)
    h = max(pts[0] + 1.0, 1.0 - pts[-1], gaps.max() / 2.0 if gaps.size else 0.0)
    if ghost_rule == GHOST_REFLECT:
        ghost_gaps = [pts[0] + 1.0, 1.0 - pts[-1]]  # t_1 - t_0 over 2 etc.
    else:
        ghost_gaps = [(pts[0] + 1.0) / 2.0, (1.0 - pts[-1]) / 2.0]
    xi = min(list(gaps / 2.0) + ghost_gaps)
    return PointSet(points=pts, edges=edges, tau=tau, h=float(h), xi=float(xi),
                    degenerate=(xi == 0.0), ghost_rule=ghost_rule, basis=basis)


def generate(kind: str, N: int, seed: int | None = None,
             amplitude: float = 1.0) -> np.ndarray:
    """Generate an N-point set of the named family.

    kinds: "equispaced" (endpoints included), "jittered" (equispaced plus
    uniform perturbations of at most amplitude/2 times the spacing),
    "uniform_random", "chebyshev" (Gauss nodes, sorted ascending).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if kind == "equispaced":
        if N == 1:
            return np.array([0.0])
        # One exact-integer division per point gives correctly rounded
        # coordinates; resolution-critical identities between frequencies
        # on rational grids survive at the last ulp this way.
        return (2.0 * np.arange(N) - (N - 1)) / float(N - 1)
    if kind == "jittered":
        base = generate("equispaced", N)
        spacing = 2.0 / (N - 1) if N > 1 else 2.0
        rng = np.random.default_rng(seed)
        pts = base + rng.uniform(-amplitude * spacing / 2.0,
                                 amplitude * spacing / 2.0, N)
        return np.sort(np.clip(pts, -1.0, 1.0))
    if kind == "uniform_random":
        rng = np.random.default_rng(seed)
        return np.sort(rng.uniform(-1.0, 1.0, N))
    if kind == "chebyshev":
        return np.cos((2.0 * np.arange(N, 0, -1) - 1.0) * np.pi / (2.0 * N))
    raise ValueError(f"unknown point family {kind!r}")


def discrete_inner_product(ps: PointSet, f_values, g_values) -> complex:
    """Quadrature inner product sum tau_n f(t_n) conj(g(t_n))."""
    f = np.asarray(f_values).ravel()
    g = np.asarray(g_values).ravel()
    if f.size != ps.n or g.size != ps.n:
        raise ValueError("value vectors must match the number of points")
    out = np.sum(ps.tau * f * np.conj(g))
    return complex(out) if np.iscomplexobj(out) else float(out)


def save_points(path, points):
    """One point per line, 17 significant digits."""
    pts = np.asarray(points, dtype=float).ravel()
    with open(path, "w") as fh:
        for p in pts:
            fh.write(f"{p:.17g}\n")


def load_points(path) -> np.ndarray:
    pts = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                pts.append(float(line))
    if not pts:
        raise DegenerateGridError(f"no points found in {path}")
    return np.asarray(pts)
