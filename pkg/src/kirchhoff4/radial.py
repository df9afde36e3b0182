"""Radial discretization of the unit ball in R^4.

Profiles are radial functions u(r) on (0, 1] under clamped boundary
conditions u(1) = u'(1) = 0.  Two grid schemes are provided:

``spectral-even``
    Collocation at Gauss-Radau points of the variable s = r^2 (weight s,
    endpoint s = 1 included, s = 0 excluded).  Smooth radial functions on
    R^4 are smooth in s, so the interpolant is an even polynomial in r and
    the radial Laplacian

        lap u = u'' + (3/r) u' = 4 s U''(s) + 8 U'(s),   u(r) = U(r^2),

    has no singular term at the origin.  Differentiation matrices are
    assembled through the Chebyshev coefficient transform in extended
    precision, which keeps the fourth-order operator accurate to ~1e-12
    on smooth data.

``uniform-fd``
    Nodes i/n with five-point finite-difference stencils and a composite
    piecewise-quadratic quadrature whose r^3 moments are integrated
    exactly.  Kept as an independent cross-check of the spectral scheme.

Quadrature weights target radial volume integrals: for a radial integrand
v, int_B v dx = |S^3| * int_0^1 v(r) r^3 dr with |S^3| = 2 pi^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numpy.polynomial.polynomial as npoly
from numpy.polynomial import chebyshev as ncheb
from numpy.polynomial import legendre as nleg
from scipy.special import roots_jacobi

__all__ = [
    "SURFACE_3SPHERE",
    "RadialGrid",
    "RadialFunction",
    "build_grid",
    "laplacian4",
    "log_weight",
    "weight_values",
    "ball_integral",
    "w_inner",
    "w_norm",
    "lebesgue_norm",
    "full_sobolev_norm",
    "pointwise_bound_coeff",
    "enforce_clamped",
    "random_clamped_profile",
    "clamped_even_basis",
    "write_profile_csv",
    "read_profile_csv",
]

SURFACE_3SPHERE = 2.0 * np.pi**2  # area of the unit sphere S^3 in R^4

GRID_SCHEMES = ("spectral-even", "uniform-fd")

_MIN_NODES = 8  # fourth-order operator needs a handful of interior nodes


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Immutable radial grid on (0, 1] with quadrature and derivatives.

    nodes        radii r_i, strictly increasing, last node r = 1
    quad_weights weights w_i with sum w_i v(r_i) ~ int_0^1 v(r) r^3 dr
    d1, d2       dense operators mapping nodal values to u'(r_i), u''(r_i)
    lap          dense operator for the radial Laplacian u'' + (3/r) u'
    """

    n: int
    scheme: str
    nodes: np.ndarray
    quad_weights: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    lap: np.ndarray

    def __post_init__(self):
        for name in ("nodes", "quad_weights", "d1", "d2", "lap"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __repr__(self):  # arrays are noise in logs
        return f"RadialGrid(n={self.n}, scheme={self.scheme!r})"


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Nodal values of a radial profile on a fixed grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"expected {self.grid.n} nodal values, got shape {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def scaled(self, t: float) -> "RadialFunction":
        return RadialFunction(self.grid, t * self.values)

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        self._check_same_grid(other)
        return RadialFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "RadialFunction") -> "RadialFunction":
        self._check_same_grid(other)
        return RadialFunction(self.grid, self.values - other.values)

    def _check_same_grid(self, other: "RadialFunction"):
        if other.grid is not self.grid:
            raise ValueError("operands live on different grids")

    def __repr__(self):
        return f"RadialFunction(n={self.grid.n}, max|u|={np.abs(self.values).max():.3g})"


# ---------------------------------------------------------------------------
# grid construction
# ---------------------------------------------------------------------------


def _solve_extended(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gauss-Jordan solve in extended precision (numpy.linalg lacks it)."""
    a = np.array(a, dtype=np.longdouble)
    b = np.array(b, dtype=np.longdouble)
    n = a.shape[0]
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        b[k] = b[k] / a[k, k]
        a[k] = a[k] / a[k, k]
        for i in range(n):
            if i != k and a[i, k] != 0.0:
                b[i] -= a[i, k] * b[k]
                a[i] -= a[i, k] * a[k]
    return b


def _build_spectral(n: int):
    # Radau-Jacobi nodes in x on [-1, 1] for weight (1 + x): interior nodes
    # are the zeros of the degree n-1 Jacobi(1, 1) polynomial, plus x = 1.
    # The resulting interpolatory rule integrates polynomials of degree
    # 2n - 2 in x exactly, hence even polynomials of degree 4n - 4 in r.
    x_int, _ = roots_jacobi(n - 1, 1.0, 1.0)
    x = np.append(x_int, 1.0)
    s = (x + 1.0) / 2.0
    r = np.sqrt(s)

    # Interpolatory weights from Legendre moments of (1 + x):
    # int P_k(x) (1 + x) dx = 2 delta_k0 + (2/3) delta_k1.
    moments = np.zeros(n)
    moments[0] = 2.0
    if n > 1:
        moments[1] = 2.0 / 3.0
    lam = _solve_extended(nleg.legvander(x, n - 1).T, moments)
    # int_0^1 v r^3 dr = (1/8) int v((x+1)/2) (1+x) dx
    quad = np.asarray(lam / 8.0, dtype=float)
    if quad.min() <= 0.0:
        raise RuntimeError(f"non-positive quadrature weight at n={n}")

    # Differentiation through the Chebyshev coefficient transform.  The
    # products are formed in extended precision so the fourth-order
    # operator keeps ~1e-12 accuracy on smooth data at n = 64.
    xl = x.astype(np.longdouble)
    sl = s.astype(np.longdouble)
    rl = r.astype(np.longdouble)
    vand = ncheb.chebvander(xl, n - 1)
    coef = _solve_extended(vand, np.eye(n, dtype=np.longdouble))
    dcheb = np.zeros((n, n), dtype=np.longdouble)
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        d = ncheb.chebder(e)
        dcheb[: len(d), k] = d
    ds = 2.0 * (vand @ dcheb @ coef)          # d/ds, since s = (x + 1)/2
    dss = 4.0 * (vand @ (dcheb @ dcheb) @ coef)
    d1 = (2.0 * rl[:, None] * ds).astype(float)               # u'(r)  = 2 r U'(s)
    d2 = (4.0 * sl[:, None] * dss + 2.0 * ds).astype(float)   # u''(r) = 4 s U'' + 2 U'
    lap = (4.0 * sl[:, None] * dss + 8.0 * ds).astype(float)  # u'' + (3/r) u'
    for mat in (d1, d2, lap):  # constants must differentiate to exactly zero
        mat[np.arange(n), np.arange(n)] -= mat.sum(axis=1)
    return r, quad, d1, d2, lap


def _fd_stencil_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at z from nodes x
    (Fornberg's recursion)."""
    n = len(x)
    w = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    w[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1] - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = ((x[i] - z) * w[k, j] - k * w[k - 1, j]) / c3
            w[0, j] = (x[i] - z) * w[0, j] / c3
        c1 = c2
    return w


def _build_uniform(n: int):
    r = np.arange(1, n + 1) / float(n)
    d1 = np.zeros((n, n))
    d2 = np.zeros((n, n))
    width = min(5, n)
    half = width // 2
    for i in range(n):
        if i < half:
            # profiles are even in r: reflect nodes through the origin so
            # the stencil stays centered (one-sided differences would lose
            # most of their accuracy against the amplified (3/r) u' term)
            signed = np.concatenate([-r[half - 1 - i :: -1], r[: i + half + 1]])
            fold = np.concatenate(
                [np.arange(half - 1 - i, -1, -1), np.arange(0, i + half + 1)]
            )
            w = _fd_stencil_weights(r[i], signed, 2)
            for j, owner in enumerate(fold):
                d1[i, owner] += w[1, j]
                d2[i, owner] += w[2, j]
        else:
            lo = min(i - half, n - width)
            idx = np.arange(lo, lo + width)
            w = _fd_stencil_weights(r[i], r[idx], 2)
            d1[i, idx] = w[1]
            d2[i, idx] = w[2]
    for mat in (d1, d2):  # constants must differentiate to exactly zero
        mat[np.arange(n), np.arange(n)] -= mat.sum(axis=1)
    lap = d2 + (3.0 / r)[:, None] * d1

    # Composite interpolatory quadrature: on each panel integrate the
    # quartic through five neighboring nodes against exact r^3 moments,
    # in a panel-centered variable to avoid cancellation.  The leading
    # panel [0, r_0] carries no node and uses the extrapolated quartic.
    quad = np.zeros(n)
    stencil = min(5, n)
    panels = [(0.0, r[0], tuple(range(stencil)))]
    for j in range(n - 1):
        lo = min(max(j - stencil // 2 + 1, 0), n - stencil)
        panels.append((r[j], r[j + 1], tuple(range(lo, lo + stencil))))
    for a, b, idx in panels:
        xs = r[list(idx)]
        c = 0.5 * (a + b)
        rcubed = npoly.polypow([c, 1.0], 3)
        for loc, i in enumerate(idx):
            others = [xs[k] for k in range(len(idx)) if k != loc]
            num = [1.0]
            den = 1.0
            for o in others:
                num = npoly.polymul(num, [c - o, 1.0])
                den *= xs[loc] - o
            anti = npoly.polyint(npoly.polymul(num, rcubed))
            quad[i] += (npoly.polyval(b - c, anti) - npoly.polyval(a - c, anti)) / den
    return r, quad, d1, d2, lap


@lru_cache(maxsize=32)
def build_grid(n: int, scheme: str = "spectral-even") -> RadialGrid:
    """Construct a radial grid; deterministic for fixed (n, scheme)."""
    if scheme not in GRID_SCHEMES:
        raise ValueError(f"unknown grid scheme {scheme!r}; choose from {GRID_SCHEMES}")
    if n < _MIN_NODES:
        raise ValueError(f"n={n} is too coarse for a fourth-order operator (need n >= {_MIN_NODES})")
    if scheme == "spectral-even":
        r, quad, d1, d2, lap = _build_spectral(n)
    else:
        r, quad, d1, d2, lap = _build_uniform(n)
    return RadialGrid(n=n, scheme=scheme, nodes=r, quad_weights=quad, d1=d1, d2=d2, lap=lap)


# ---------------------------------------------------------------------------
# weight, integrals and norms
# ---------------------------------------------------------------------------


def log_weight(r: float, beta: float) -> float:
    """Singular logarithmic weight (log(e/r))^beta = (1 - log r)^beta.

    Strictly decreasing in r, equal to 1 at r = 1.  beta = 0 is accepted
    as the degenerate unweighted mode used by closed-form oracles.
    """
    if not 0.0 < r <= 1.0:
        raise ValueError(f"radius must lie in (0, 1], got {r}")
    _check_beta(beta)
    return float((1.0 - np.log(r)) ** beta)


def _check_beta(beta: float):
    if beta == 0.0:
        return
    if not 0.0 < beta < 1.0:
        raise ValueError(f"weight exponent must lie in (0, 1) (or 0 for the unweighted mode), got {beta}")


def weight_values(grid: RadialGrid, beta: float) -> np.ndarray:
    """Nodal values of the logarithmic weight."""
    _check_beta(beta)
    return (1.0 - np.log(grid.nodes)) ** beta


def _nodal(v, grid=None):
    if isinstance(v, RadialFunction):
        return v.grid, v.values
    if grid is None:
        raise ValueError("a grid is required for plain nodal arrays")
    return grid, np.asarray(v, dtype=float)


def ball_integral(v, grid: RadialGrid | None = None) -> float:
    """Integral over the unit ball of R^4 of a radial nodal field."""
    grid, vals = _nodal(v, grid)
    return SURFACE_3SPHERE * float(grid.quad_weights @ vals)


def w_inner(u: RadialFunction, v: RadialFunction, beta: float) -> float:
    """Weighted scalar product int_B w(x) (lap u)(lap v) dx."""
    if u.grid is not v.grid:
        raise ValueError("operands live on different grids")
    grid = u.grid
    lu = grid.lap @ u.values
    lv = grid.lap @ v.values
    wq = grid.quad_weights * weight_values(grid, beta)
    return SURFACE_3SPHERE * float(wq @ (lu * lv))


def w_norm(u: RadialFunction, beta: float) -> float:
    """Norm of the weighted space: (int_B w |lap u|^2 dx)^(1/2)."""
    return float(np.sqrt(max(w_inner(u, u, beta), 0.0)))


def lebesgue_norm(u: RadialFunction, s: float) -> float:
    """Lebesgue norm |u|_s = (int_B |u|^s dx)^(1/s) on the ball."""
    if s < 1.0:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {s}")
    val = ball_integral(np.abs(u.values) ** s, u.grid)
    return float(max(val, 0.0) ** (1.0 / s))


def full_sobolev_norm(u: RadialFunction, beta: float) -> float:
    """Norm with the lower-order terms included:
    (int u^2 + int |grad u|^2 + int w |lap u|^2)^(1/2), |grad u| = |u'|."""
    grid = u.grid
    du = grid.d1 @ u.values
    low = ball_integral(u.values**2 + du**2, grid)
    return float(np.sqrt(max(low, 0.0) + max(w_inner(u, u, beta), 0.0)))


def pointwise_bound_coeff(r: float, beta: float) -> float:
    """Coefficient C(r) of the radial pointwise estimate |u(r)| <= C(r) ||u||.

    C(r) = |(log(e/r))^(1-beta) - 1|^(1/2) / (2 sqrt(2) pi sqrt(1-beta)).
    Increases as r decreases and vanishes as r -> 1.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"radius must lie in (0, 1), got {r}")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"weight exponent must lie in [0, 1), got {beta}")
    core = abs((1.0 - np.log(r)) ** (1.0 - beta) - 1.0) ** 0.5
    return float(core / (2.0 * np.sqrt(2.0) * np.pi * np.sqrt(1.0 - beta)))


# ---------------------------------------------------------------------------
# clamped profiles
# ---------------------------------------------------------------------------


def enforce_clamped(u: RadialFunction) -> RadialFunction:
    """Project nodal values onto the clamped subspace u(1) = u'(1) = 0.

    Subtracts a constant to zero the boundary value and a multiple of
    r^2 - 1 (which vanishes at r = 1) to zero the boundary derivative;
    both corrections are even polynomials, so smoothness is preserved.
    """
    grid = u.grid
    vals = u.values - u.values[-1]
    slope = float(grid.d1[-1] @ vals)
    vals = vals - 0.5 * slope * (grid.nodes**2 - 1.0)
    return RadialFunction(grid, vals)


def clamped_even_basis(x: np.ndarray, count: int) -> np.ndarray:
    """Values of the clamped even-Chebyshev basis at x = 2 r^2 - 1.

    phi_k = T_k + a_k T_{k+1} + b_k T_{k+2} with coefficients chosen so
    that phi_k(1) = phi_k'(1) = 0 for every k; columns are phi_0..phi_{count-1}.
    """
    k = np.arange(count)
    a = -4.0 * (k + 1.0) / (2.0 * k + 3.0)
    b = (2.0 * k + 1.0) / (2.0 * k + 3.0)
    t = ncheb.chebvander(np.asarray(x, dtype=float), count + 1)
    return t[:, :count] + a * t[:, 1 : count + 1] + b * t[:, 2 : count + 2]


def random_clamped_profile(grid: RadialGrid, rng: np.random.Generator, modes: int | None = None) -> RadialFunction:
    """Random smooth clamped profile with 1/(1+k^2)-decaying coefficients.

    The expansion lives in the clamped even-Chebyshev basis of the
    variable 2 r^2 - 1, so the same (seeded) draw represents the same
    underlying function on every grid scheme.
    """
    count = min(modes if modes is not None else 24, grid.n - 2)
    coeffs = rng.standard_normal(count) / (1.0 + np.arange(count) ** 2)
    x = 2.0 * grid.nodes**2 - 1.0
    vals = clamped_even_basis(x, count) @ coeffs
    return enforce_clamped(RadialFunction(grid, vals))


def laplacian4(u: RadialFunction) -> RadialFunction:
    """Radial Laplacian on R^4: lap u = u''(r) + (3/r) u'(r)."""
    return RadialFunction(u.grid, u.grid.lap @ u.values)


# ---------------------------------------------------------------------------
# profile CSV exchange
# ---------------------------------------------------------------------------


def write_profile_csv(u: RadialFunction, path) -> None:
    """Write a profile as two-column CSV (header "r,u", ascending r)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("r,u\n")
        for r, val in zip(u.grid.nodes, u.values):
            fh.write(f"{r:.17g},{val:.17g}\n")


def read_profile_csv(grid: RadialGrid, path) -> RadialFunction:
    """Read a profile written by write_profile_csv onto a matching grid."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.n, 2):
        raise ValueError(f"profile has {data.shape[0]} rows, grid expects {grid.n}")
    if not np.allclose(data[:, 0], grid.nodes, rtol=0.0, atol=1e-12):
        raise ValueError("profile radii do not match the grid nodes")
    return RadialFunction(grid, data[:, 1])
