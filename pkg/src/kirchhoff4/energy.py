"""Energy functional, weak derivative action, and fibering maps.

For a profile u in the weighted space with squared norm S = ||u||^2,

    J(u) = (1/2) G(S) - (1/q) int_B |u|^q dx - int_B F(u) dx.

The weak action <J'(u), phi> and the Riesz representative of J'(u) in the
weighted scalar product (the Sobolev gradient used for descent) both
reduce to dense linear algebra on the collocation grid.  The fibering map
t -> J(t u) and its derivative drive the Nehari projection; they are
evaluated through precomputed direction moments so that root finding
costs O(n) per point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import (
    KirchhoffSpec,
    ModelParams,
    NonlinearitySpec,
    RangeOverflowError,
    F_values,
    f_values,
)
from .radial import (
    SURFACE_3SPHERE,
    RadialFunction,
    RadialGrid,
    clamped_even_basis,
    weight_values,
    w_inner,
)

__all__ = [
    "EnergyBreakdown",
    "energy",
    "weak_action",
    "sobolev_gradient",
    "fibering",
    "fibering_deriv",
    "nehari_residual",
    "FiberMap",
    "operator_cache",
]

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class EnergyBreakdown:
    """The three terms of J(u); total = kirchhoff - power - reaction."""

    kirchhoff_term: float
    power_term: float
    f_term: float
    total: float


class _WOperators:
    """Per-(grid, beta) dense operators for the weighted inner product.

    vol      volume quadrature weights (2 pi^2 q_i)
    wvol     weighted quadrature weights (2 pi^2 q_i w(r_i))
    gram     nodal Gram matrix of the weighted scalar product
    basis    columns spanning the discrete clamped subspace
    The Riesz solve is diagonally normalized and Cholesky-factored once;
    one step of iterative refinement keeps the defining equations of the
    gradient satisfied to near machine precision.
    """

    def __init__(self, grid: RadialGrid, beta: float):
        self.grid = grid
        self.beta = beta
        self.vol = SURFACE_3SPHERE * grid.quad_weights
        self.wvol = self.vol * weight_values(grid, beta)
        self.gram = grid.lap.T @ (self.wvol[:, None] * grid.lap)
        raw = self._clamped_basis(grid)
        diag = np.einsum("ij,ij->j", raw, self.gram @ raw)
        if np.any(diag <= 0.0):
            raise RuntimeError("weighted Gram matrix is not positive definite")
        # columns normalized to unit weighted norm: the solve is then
        # naturally equilibrated and its defining equations hold to ~1e-12
        self.basis = raw / np.sqrt(diag)
        self.a = self.basis.T @ self.gram @ self.basis
        eigs = np.linalg.eigvalsh(self.a)
        self.eig_min = float(eigs[0])
        self.eig_max = float(eigs[-1])
        self.cond = self.eig_max / self.eig_min if self.eig_min > 0.0 else np.inf
        if self.cond > _COND_LIMIT:
            warnings.warn(
                f"weighted Gram matrix condition estimate {self.cond:.3g} exceeds {_COND_LIMIT:g} "
                f"(grid n={grid.n}, scheme={grid.scheme})",
                RuntimeWarning,
                stacklevel=2,
            )
        self.cho = cho_factor(self.a)

    @staticmethod
    def _clamped_basis(grid: RadialGrid) -> np.ndarray:
        n = grid.n
        if grid.scheme == "spectral-even":
            # hierarchical polynomial basis spanning the whole discrete
            # clamped subspace
            x = 2.0 * grid.nodes**2 - 1.0
            return clamped_even_basis(x, n - 2)
        # Nodal basis on the uniform grid (polynomial modes alias near the
        # boundary there): unit vectors at interior nodes corrected through
        # the next-to-boundary value so that u(1) = 0 and (d1 u)(1) = 0.
        last = grid.d1[-1]
        basis = np.zeros((n, n - 2))
        for i in range(n - 2):
            basis[i, i] = 1.0
            basis[n - 2, i] = -last[i] / last[n - 2]
        return basis

    def riesz(self, load: np.ndarray) -> np.ndarray:
        """Solve w_inner(v, phi) = <load, phi> over the clamped subspace."""
        b = self.basis.T @ load
        y = cho_solve(self.cho, b)
        y += cho_solve(self.cho, b - self.a @ y)
        return self.basis @ y


@lru_cache(maxsize=16)
def operator_cache(grid: RadialGrid, beta: float) -> _WOperators:
    return _WOperators(grid, beta)


# ---------------------------------------------------------------------------
# energy and weak action
# ---------------------------------------------------------------------------


def energy(u: RadialFunction, params: ModelParams) -> EnergyBreakdown:
    """Evaluate J(u) term by term."""
    ops = operator_cache(u.grid, params.beta)
    lu = u.grid.lap @ u.values
    norm_sq = float(ops.wvol @ (lu * lu))
    kirch = 0.5 * float(params.kirchhoff.G(norm_sq))
    power = float(ops.vol @ np.abs(u.values) ** params.q) / params.q
    reaction = float(ops.vol @ F_values(params.nonlinearity, u.values))
    return EnergyBreakdown(kirch, power, reaction, kirch - power - reaction)


def weak_action(u: RadialFunction, phi: RadialFunction, params: ModelParams) -> float:
    """Directional derivative <J'(u), phi>; linear in phi."""
    if u.grid is not phi.grid:
        raise ValueError("operands live on different grids")
    ops = operator_cache(u.grid, params.beta)
    g_val = float(params.kirchhoff.g(_norm_sq(ops, u.values)))
    head = g_val * w_inner(u, phi, params.beta)
    vals = u.values
    nodal = np.abs(vals) ** (params.q - 2.0) * vals + f_values(params.nonlinearity, vals)
    return head - float(ops.vol @ (nodal * phi.values))


def _norm_sq(ops: _WOperators, values: np.ndarray) -> float:
    lu = ops.grid.lap @ values
    return float(ops.wvol @ (lu * lu))


def sobolev_gradient(u: RadialFunction, params: ModelParams) -> RadialFunction:
    """Riesz representative v of J'(u): w_inner(v, phi) = <J'(u), phi>
    for every phi in the discrete clamped subspace; v = 0 exactly at
    discrete critical points."""
    ops = operator_cache(u.grid, params.beta)
    load = _residual_load(ops, u.values, params)
    return RadialFunction(u.grid, ops.riesz(load))


def _residual_load(ops: _WOperators, values: np.ndarray, params: ModelParams) -> np.ndarray:
    """Nodal load vector rho with <J'(u), phi> = rho . phi_values."""
    g_val = float(params.kirchhoff.g(_norm_sq(ops, values)))
    nodal = np.abs(values) ** (params.q - 2.0) * values + f_values(params.nonlinearity, values)
    return g_val * (ops.gram @ values) - ops.vol * nodal


def nehari_residual(u: RadialFunction, params: ModelParams) -> float:
    """<J'(u), u>: zero precisely on the Nehari set."""
    return weak_action(u, u, params)


# ---------------------------------------------------------------------------
# fibering map
# ---------------------------------------------------------------------------


class FiberMap:
    """Scalar restriction t -> J(t u) reduced to moments of the direction.

    power_moments holds (exponent e, moment M) pairs contributing
    -(t^e / e) M to the value; the exponential tail of the reaction term
    (absent for the pure-power functional and for alpha0 = 0) is carried
    through nodal data.  Synthetic moment sets exercise the projection
    root finder without any grid.
    """

    def __init__(
        self,
        kirchhoff: KirchhoffSpec,
        norm_sq: float,
        power_moments: tuple,
        tail_spec: NonlinearitySpec | None = None,
        values: np.ndarray | None = None,
        vol: np.ndarray | None = None,
    ):
        self.kirchhoff = kirchhoff
        self.norm_sq = float(norm_sq)
        self.power_moments = tuple((float(e), float(m)) for e, m in power_moments)
        self.tail_spec = tail_spec
        if tail_spec is not None:
            mask = np.abs(values) > 0.0
            self.values = values[mask]
            self.vol = vol[mask]
        else:
            self.values = None
            self.vol = None

    # --- builders -------------------------------------------------------

    @classmethod
    def full(cls, u: RadialFunction, params: ModelParams) -> "FiberMap":
        """Fibering map of the full energy J along direction u."""
        ops = operator_cache(u.grid, params.beta)
        vals = u.values
        s = _norm_sq(ops, vals)
        nl = params.nonlinearity
        i_q = float(ops.vol @ np.abs(vals) ** params.q)
        i_p = float(ops.vol @ np.abs(vals) ** params.p)
        if nl.alpha0 == 0.0:
            moments = ((params.q, i_q), (params.p, (nl.cp + 1.0) * i_p))
            return cls(params.kirchhoff, s, moments)
        moments = ((params.q, i_q), (params.p, nl.cp * i_p))
        return cls(params.kirchhoff, s, moments, tail_spec=nl, values=vals, vol=ops.vol)

    @classmethod
    def pure_power(cls, u: RadialFunction, params: ModelParams) -> "FiberMap":
        """Fibering map of the auxiliary functional (1/2) G(||u||^2) - (1/p) |u|_p^p."""
        ops = operator_cache(u.grid, params.beta)
        s = _norm_sq(ops, u.values)
        i_p = float(ops.vol @ np.abs(u.values) ** params.p)
        return cls(params.kirchhoff, s, ((params.p, i_p),))

    # --- tail integrals ---------------------------------------------------

    def _tail_scale_limit(self) -> float:
        if self.tail_spec is None:
            return np.inf
        vmax = float(np.abs(self.values).max()) if len(self.values) else 0.0
        if vmax == 0.0:
            return np.inf
        return self.tail_spec.guard_scale() / vmax

    def _tail_deriv(self, t: float, saturate: bool) -> float:
        if self.tail_spec is None:
            return 0.0
        nl = self.tail_spec
        tv = t * self.values
        at = np.abs(tv)
        with np.errstate(over="ignore"):  # inf keeps the sign information
            arg = nl.alpha0 * at**nl.gamma
            if saturate:
                arg = np.minimum(arg, 700.0)
            head = at ** (nl.p - 2.0) * tv * np.exp(arg)
            return float(self.vol @ (head * self.values))

    def _tail_deriv2(self, t: float) -> float:
        if self.tail_spec is None:
            return 0.0
        nl = self.tail_spec
        tv = t * self.values
        at = np.abs(tv)
        with np.errstate(over="ignore"):
            arg = nl.alpha0 * at**nl.gamma
            body = at ** (nl.p - 2.0) * np.exp(arg) * (nl.p - 1.0 + nl.gamma * arg)
            return float(self.vol @ (body * self.values**2))

    def _tail_value(self, t: float) -> float:
        if self.tail_spec is None:
            return 0.0
        nl = self.tail_spec
        tail = F_values(nl, t * self.values) - nl.cp * np.abs(t * self.values) ** nl.p / nl.p
        return float(self.vol @ tail)

    # --- map, derivative, curvature --------------------------------------

    def value(self, t: float) -> float:
        s = t * t * self.norm_sq
        out = 0.5 * float(self.kirchhoff.G(s))
        for e, m in self.power_moments:
            out -= t**e / e * m
        return out - self._tail_value(t)

    def deriv(self, t: float, saturate: bool = False) -> float:
        """d/dt J(t u) = g(t^2 S) t S - sum t^(e-1) M - tail.

        With saturate=True the exponential argument is capped, which keeps
        the sign information (the tail dominates far beyond the guard)
        without overflowing; used by bracketing and sweep diagnostics.
        """
        s = t * t * self.norm_sq
        out = float(self.kirchhoff.g(s)) * t * self.norm_sq
        for e, m in self.power_moments:
            out -= t ** (e - 1.0) * m
        if self.tail_spec is not None and not saturate:
            limit = self._tail_scale_limit()
            if t > limit:
                raise RangeOverflowError(
                    f"fibering scale {t:.3g} exceeds the overflow guard ({limit:.3g})"
                )
        return out - self._tail_deriv(t, saturate)

    def deriv2(self, t: float) -> float:
        s = t * t * self.norm_sq
        out = 2.0 * float(self.kirchhoff.g_prime(s)) * (t * self.norm_sq) ** 2
        out += float(self.kirchhoff.g(s)) * self.norm_sq
        for e, m in self.power_moments:
            out -= (e - 1.0) * t ** (e - 2.0) * m
        return out - self._tail_deriv2(t)


def fibering(u: RadialFunction, t: float, params: ModelParams) -> float:
    """J(t u), evaluated through the energy of the scaled profile, so that
    fibering(c u, t) and fibering(u, c t) follow the same computation."""
    if t < 0.0:
        raise ValueError("fibering scale must be nonnegative")
    return energy(u.scaled(t), params).total


def fibering_deriv(u: RadialFunction, t: float, params: ModelParams) -> float:
    """d/dt J(t u); equals weak_action(t u, u) by the chain rule."""
    if t < 0.0:
        raise ValueError("fibering scale must be nonnegative")
    return FiberMap.full(u, params).deriv(t)
