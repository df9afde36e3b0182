"""Nehari projection and constrained ground-state minimization.

Every nonzero direction u admits a unique scale t_u > 0 at which
d/dt J(t u) = 0; the map u -> t_u u retracts directions onto the Nehari
set.  The ground level

    m = inf { J(w) : <J'(w), w> = 0, w != 0 }

is approximated by multi-start projected descent: each start draws a
random smooth clamped profile, and every iteration takes a Sobolev
gradient step at the current projected point, renormalizes, reprojects
and backtracks on the projected energy.  The same machinery applied to
the pure-power functional

    J_p(u) = (1/2) G(||u||^2) - (1/p) |u|_p^p

produces the auxiliary level m_p that calibrates the admissible range of
the power coefficient cp and the closed-form cap on m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import FiberMap, energy, nehari_residual, operator_cache
from .model import (
    ModelParams,
    RangeOverflowError,
    adams_constant,
    f_prime_values,
    f_values,
)
from .radial import RadialFunction, RadialGrid, random_clamped_profile

__all__ = [
    "ProjectionError",
    "NehariPoint",
    "SearchConfig",
    "StartRecord",
    "GroundStateResult",
    "AuxResult",
    "BoundsReport",
    "project",
    "project_scale",
    "t_leq_one_check",
    "ground_state",
    "aux_ground_state",
    "level_bounds",
    "min_admissible_cp",
    "resolve_auto_cp",
    "power_envelope_max",
]

_BOUND_SLACK = 1e-8       # absolute slack on level-bound comparisons
_ROOT_WIDTH = 1e-12       # bisection bracket width for the projection scale
# The bracket window must cover the admissible-cp regime, where the huge
# power coefficient pushes projection scales of unit directions far below
# one; the floor only exists to diagnose directions whose reaction term
# overwhelms every representable scale.
_SCALE_FLOOR = 1e-120
_SCALE_CEIL = 1e120


class ProjectionError(RuntimeError):
    """Raised when no Nehari projection scale can be bracketed."""


@dataclass(frozen=True)
class NehariPoint:
    """A direction with its unique projection onto the Nehari set."""

    direction: RadialFunction
    t_u: float
    projected: RadialFunction
    energy: float
    residual: float


# ---------------------------------------------------------------------------
# scalar projection
# ---------------------------------------------------------------------------


def project_scale(fiber: FiberMap, tol: float = _ROOT_WIDTH) -> float:
    """Root of the fibering derivative on (0, inf).

    The derivative is positive for small scales and negative for large
    ones, so doubling/halving from t = 1 brackets the root; past the
    exponential overflow guard the reaction tail certainly dominates and
    the derivative is treated as negative.  Bisection to the requested
    width is followed by a safeguarded Newton polish.
    """

    def d(t: float) -> float:
        try:
            val = fiber.deriv(t)
        except RangeOverflowError:
            return -math.inf
        if math.isnan(val):
            raise ProjectionError(f"fibering derivative is NaN at scale {t:.3g}")
        return val

    v1 = d(1.0)
    if v1 == 0.0:
        return 1.0
    if v1 > 0.0:
        lo, hi = 1.0, 2.0
        while d(hi) > 0.0:
            lo, hi = hi, 2.0 * hi
            if hi > _SCALE_CEIL:
                raise ProjectionError(
                    "no sign change of the fibering derivative below the scale "
                    f"ceiling {_SCALE_CEIL:.0e}; the direction has a degenerate "
                    "reaction moment"
                )
    else:
        lo, hi = 0.5, 1.0
        while d(lo) <= 0.0:
            lo, hi = 0.5 * lo, lo
            if lo < _SCALE_FLOOR:
                raise ProjectionError(
                    "fibering derivative is negative down to the scale floor "
                    f"{_SCALE_FLOOR:.0e}; nodal values overflow before projection"
                )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):  # bracket has hit adjacent floats
            break
        if d(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    # Safeguarded Newton polish: quadratic convergence down to the
    # floating-point root, falling back to bisection whenever the Newton
    # iterate leaves the sign-change bracket.
    t = 0.5 * (lo + hi)
    for _ in range(30):
        val = d(t)
        if val > 0.0:
            lo = t
        else:
            hi = t
        try:
            slope = fiber.deriv2(t)
        except RangeOverflowError:
            slope = 0.0
        t_new = t - val / slope if math.isfinite(slope) and slope != 0.0 else 0.5 * (lo + hi)
        if not (lo < t_new < hi) or not math.isfinite(t_new):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 4.0 * np.finfo(float).eps * abs(t):
            t = t_new
            break
        t = t_new
    return t


def project(u: RadialFunction, params: ModelParams) -> NehariPoint:
    """Unique Nehari projection of a nonzero direction.

    The root is located for the unit-norm direction and rescaled, which
    keeps the per-ulp granularity of the residual proportional to the
    projected point rather than to the raw direction scale, and makes the
    scaling law t(c u) = t(u)/c hold by construction.
    """
    ops = operator_cache(u.grid, params.beta)
    with np.errstate(over="ignore"):
        lu = u.grid.lap @ u.values
        norm_sq = float(ops.wvol @ (lu * lu))
    # zero detection must stay relative: at the self-consistent power
    # coefficient the legitimate Nehari scales are themselves tiny
    if norm_sq <= 1e-280:
        raise ProjectionError("direction is numerically zero")
    if not math.isfinite(norm_sq):
        raise ProjectionError(
            "nodal values overflow the weighted norm; no projection scale is representable"
        )
    nrm = math.sqrt(norm_sq)
    unit = u.scaled(1.0 / nrm)
    t = project_scale(FiberMap.full(unit, params))
    # The root was located on the moment form of the derivative; polish it
    # on the quadrature form of the residual (a slightly different float
    # path whose difference grows with the Kirchhoff scale) so that the
    # reported residual sits at its own rounding floor.
    t, res = _polish_on_residual(unit, params, t)
    w = unit.scaled(t)
    return NehariPoint(
        direction=u,
        t_u=t / nrm,
        projected=w,
        energy=energy(w, params).total,
        residual=res,
    )


def _polish_on_residual(u: RadialFunction, params: ModelParams, t0: float):
    """Drive the measured residual <J'(t u), t u> to its rounding floor.

    The root finder works on the moment form of the fibering derivative;
    the quadrature form evaluated at the scaled profile differs by a few
    ulps of the Kirchhoff terms.  A short sign-bracketed bisection on the
    measured residual (decreasing in t near the fibering maximum) picks
    the float scale that minimizes it.
    """

    def h(t: float) -> float:
        try:
            return nehari_residual(u.scaled(t), params)
        except RangeOverflowError:
            return -math.inf

    best_t, best_h = t0, h(t0)
    if best_h == 0.0:
        return best_t, best_h
    eps = float(np.finfo(float).eps)
    step = 16.0 * eps * t0
    if best_h > 0.0:
        lo, f_lo = t0, best_h
        hi = t0 + step
        f_hi = h(hi)
        while f_hi > 0.0:
            if abs(f_hi) < abs(best_h):
                best_t, best_h = hi, f_hi
            step *= 4.0
            lo, f_lo = hi, f_hi
            hi = hi + step
            f_hi = h(hi)
            if hi > 4.0 * t0:
                return best_t, best_h
    else:
        hi, f_hi = t0, best_h
        lo = t0 - step
        f_lo = h(lo)
        while f_lo <= 0.0:
            if abs(f_lo) < abs(best_h):
                best_t, best_h = lo, f_lo
            step *= 4.0
            lo = lo - step
            f_lo = h(lo)
            if lo < 0.25 * t0:
                return best_t, best_h
    for _ in range(80):
        if abs(f_hi) < abs(best_h):
            best_t, best_h = hi, f_hi
        if abs(f_lo) < abs(best_h):
            best_t, best_h = lo, f_lo
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        f_mid = h(mid)
        if f_mid > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return best_t, best_h


def t_leq_one_check(u: RadialFunction, params: ModelParams) -> bool:
    """For directions on or inside the Nehari set (residual <= 0), the
    projection scale cannot exceed one."""
    res = nehari_residual(u, params)
    ops = operator_cache(u.grid, params.beta)
    lu = u.grid.lap @ u.values
    norm_sq = float(ops.wvol @ (lu * lu))
    if res > 1e-10 * (1.0 + norm_sq):
        raise ValueError(
            f"precondition violated: Nehari residual {res:.3g} is positive"
        )
    return project(u, params).t_u <= 1.0 + 1e-10


# ---------------------------------------------------------------------------
# descent machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    starts: int = 8
    max_iter: int = 300
    tol: float = 1e-6
    seed: int = 1

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("need at least one start")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class StartRecord:
    index: int
    energy: float
    gradient_norm: float
    norm: float
    iterations: int
    converged: bool
    trace: tuple = ()  # accepted projected energies, in iteration order

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "energy": self.energy,
            "gradient_norm": self.gradient_norm,
            "norm": self.norm,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class GroundStateResult:
    minimizer: RadialFunction
    m: float
    gradient_norm: float
    starts: int
    per_start_energies: list
    converged: bool
    per_start: list
    residual: float
    minimizer_norm: float
    min_nehari_norm: float
    coercivity_margin: float


@dataclass(frozen=True)
class AuxResult:
    w_p: RadialFunction
    m_p: float
    p_norm_p: float
    gradient_norm: float
    starts: int
    per_start_energies: list
    converged: bool
    per_start: list
    min_nehari_norm: float


class _Functional:
    """Adapter between the descent loop and the two energies it minimizes."""

    def __init__(self, grid: RadialGrid, params: ModelParams, pure_power: bool):
        self.grid = grid
        self.params = params
        self.pure_power = pure_power
        self.ops = operator_cache(grid, params.beta)

    def norm(self, values: np.ndarray) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            lu = self.grid.lap @ values
            out = float(self.ops.wvol @ (lu * lu))
        return math.sqrt(max(out, 0.0)) if math.isfinite(out) else math.inf

    def w_dot(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.ops.wvol @ ((self.grid.lap @ x) * (self.grid.lap @ y)))

    def fiber(self, u: RadialFunction) -> FiberMap:
        if self.pure_power:
            return FiberMap.pure_power(u, self.params)
        return FiberMap.full(u, self.params)

    def value(self, values: np.ndarray) -> float:
        if self.pure_power:
            s = self.norm(values) ** 2
            i_p = float(self.ops.vol @ np.abs(values) ** self.params.p)
            return 0.5 * float(self.params.kirchhoff.G(s)) - i_p / self.params.p
        return energy(RadialFunction(self.grid, values), self.params).total

    def _nodal_force(self, values: np.ndarray) -> np.ndarray:
        if self.pure_power:
            return np.abs(values) ** (self.params.p - 2.0) * values
        q = self.params.q
        return np.abs(values) ** (q - 2.0) * values + f_values(self.params.nonlinearity, values)

    def _nodal_stiffness(self, values: np.ndarray) -> np.ndarray:
        if self.pure_power:
            p = self.params.p
            return (p - 1.0) * np.abs(values) ** (p - 2.0)
        q = self.params.q
        return (q - 1.0) * np.abs(values) ** (q - 2.0) + f_prime_values(
            self.params.nonlinearity, values
        )

    def load(self, values: np.ndarray) -> np.ndarray:
        s = self.norm(values) ** 2
        g_val = float(self.params.kirchhoff.g(s))
        return g_val * (self.ops.gram @ values) - self.ops.vol * self._nodal_force(values)

    def gradient(self, values: np.ndarray) -> np.ndarray:
        return self.ops.riesz(self.load(values))

    def gradient_floor(self, values: np.ndarray) -> float:
        """Rounding floor of the gradient norm.

        The load is a cancellation of terms whose componentwise magnitude
        is `parts`; its evaluation noise is of order eps * parts, and the
        Riesz solve amplifies a worst-aligned perturbation by at most
        sqrt(lam_max)/lam_min in the weighted norm.  The gradient of an
        exact discrete critical point cannot be resolved below this level
        in double precision."""
        s = self.norm(values) ** 2
        g_val = float(self.params.kirchhoff.g(s))
        parts = np.abs(g_val * (self.ops.gram @ values)) + np.abs(
            self.ops.vol * self._nodal_force(values)
        )
        eps = float(np.finfo(float).eps)
        lever = math.sqrt(self.ops.eig_max) / self.ops.eig_min
        # factor 4 covers the sqrt(n)-type accumulation of the dot products
        return 4.0 * eps * lever * float(np.linalg.norm(self.ops.basis.T @ parts))

    def hessian_matrix(self, values: np.ndarray) -> np.ndarray:
        """Second derivative of the energy on the clamped basis."""
        s = self.norm(values) ** 2
        g_val = float(self.params.kirchhoff.g(s))
        g_slope = float(self.params.kirchhoff.g_prime(s))
        basis = self.ops.basis
        b = basis.T @ (self.ops.gram @ values)
        stiff = self.ops.vol * self._nodal_stiffness(values)
        return g_val * self.ops.a + 2.0 * g_slope * np.outer(b, b) - (basis.T * stiff) @ basis


def _newton_polish(func: _Functional, values: np.ndarray, steps: int = 8):
    """Newton iteration on the critical-point system J'(w) = 0.

    Started at a descent iterate near the minimum, each step solves the
    reduced Hessian system on the clamped basis and is accepted only if
    the gradient norm decreases, so the polish can only improve the
    stationarity of the reported minimizer.
    """
    basis = func.ops.basis
    gn = func.norm(func.gradient(values))
    for _ in range(steps):
        try:
            hess = func.hessian_matrix(values)
            rhs = -(basis.T @ func.load(values))
            delta = basis @ np.linalg.solve(hess, rhs)
        except (RangeOverflowError, np.linalg.LinAlgError):
            break
        scale, improved = 1.0, False
        for _ in range(12):
            trial = values + scale * delta
            try:
                gn_try = func.norm(func.gradient(trial))
            except RangeOverflowError:
                gn_try = math.inf
            if gn_try < gn:
                values, gn, improved = trial, gn_try, True
                break
            scale *= 0.5
        if not improved:
            break
    return values, gn


_ARMIJO = 1e-4
# Energy comparisons near a minimum sit on the rounding floor of the
# quadrature sums; the line search tolerates that much noise so the
# terminal iterations are not rejected spuriously.
_ENERGY_NOISE = 1e-13


def _finish_start(
    func: _Functional,
    w_vals: np.ndarray,
    index: int,
    iterations: int,
    search: SearchConfig,
    trace: tuple = (),
):
    """Newton-polish a descent iterate, restore feasibility, judge convergence.

    The polish targets the free critical-point system; afterwards the
    point is projected back onto the Nehari set along its own ray (a
    near-identity step when the polish succeeded), so every reported
    level is the energy of a genuine constrained point.  Convergence uses
    the requested tolerance, widened by the computable rounding floor of
    the gradient: at the scale of this problem the gradient of an exact
    discrete critical point still evaluates to a nonzero rounding
    residue, which no further iteration can reduce.
    """
    w_vals, _ = _newton_polish(func, w_vals)
    nrm = func.norm(w_vals)
    if nrm > 0.0:
        direction = RadialFunction(func.grid, w_vals / nrm)
        t = project_scale(func.fiber(direction))
        w_vals = t * direction.values
    grad_norm = func.norm(func.gradient(w_vals))
    w_norm_val = func.norm(w_vals)
    # the constraint residual after reprojection is limited by the float
    # lattice of the ray scale; its ray component is part of the floor
    ray = abs(float(w_vals @ func.load(w_vals))) / w_norm_val if w_norm_val > 0.0 else 0.0
    floor = 2.0 * (func.gradient_floor(w_vals) + ray)
    converged = grad_norm <= max(search.tol * (1.0 + w_norm_val), floor)
    record = StartRecord(
        index=index,
        energy=func.value(w_vals),
        gradient_norm=grad_norm,
        norm=w_norm_val,
        iterations=iterations,
        converged=converged,
        trace=trace,
    )
    return record, w_vals


def _descend_main(func: _Functional, u0: RadialFunction, search: SearchConfig, index: int):
    """Projected Sobolev-gradient descent from one start direction.

    Returns (record, minimizer values, min observed Nehari norm,
    worst coercivity margin across accepted projected points).
    """
    g0 = func.params.kirchhoff.g0
    coer = 0.25 - 1.0 / func.params.q

    nrm = func.norm(u0.values)
    if nrm <= 0.0:
        raise ProjectionError("start direction is numerically zero")
    u = RadialFunction(func.grid, u0.values / nrm)
    t = project_scale(func.fiber(u))
    w_vals = t * u.values
    e_val = func.value(w_vals)

    min_norm = func.norm(w_vals)
    coer_margin = e_val - coer * g0 * min_norm**2
    step = 1.0
    iterations = 0
    prev_vals = prev_grad = None
    trace = [e_val]

    for iterations in range(1, search.max_iter + 1):
        grad = func.gradient(w_vals)
        grad_norm = func.norm(grad)
        w_norm_val = func.norm(w_vals)
        # working rule is relative in the point's own scale (the requested
        # absolute criterion is vacuous when the minimizer is tiny)
        if grad_norm <= search.tol * min(w_norm_val, 1.0 + w_norm_val):
            break
        # Barzilai-Borwein initial step from the last curvature pair; the
        # backtracking below keeps the projected energy monotone.
        a = min(4.0 * step, 1e6)
        if prev_vals is not None:
            s_vec = w_vals - prev_vals
            y_vec = grad - prev_grad
            sy = func.w_dot(s_vec, y_vec)
            yy = func.w_dot(y_vec, y_vec)
            if sy > 0.0 and yy > 0.0:
                a = min(max(sy / yy, 1e-12), 1e8)
        prev_vals, prev_grad = w_vals, grad
        accepted = False
        while a > 1e-20:
            trial = w_vals - a * grad
            trial_norm = func.norm(trial)
            if math.isfinite(trial_norm) and trial_norm > 1e-12:
                u_try = RadialFunction(func.grid, trial / trial_norm)
                try:
                    t_try = project_scale(func.fiber(u_try))
                    w_try = t_try * u_try.values
                    e_try = func.value(w_try)
                except (ProjectionError, RangeOverflowError):
                    e_try = math.inf
                if e_try <= e_val - _ARMIJO * a * grad_norm**2 + _ENERGY_NOISE * (1.0 + abs(e_val)):
                    accepted = True
                    break
            a *= 0.5
        if not accepted:
            break
        step, w_vals, e_val = a, w_try, e_try
        trace.append(e_val)
        pn = func.norm(w_vals)
        min_norm = min(min_norm, pn)
        coer_margin = min(coer_margin, e_val - coer * g0 * pn**2)

    record, w_vals = _finish_start(func, w_vals, index, iterations, search, tuple(trace))
    min_norm = min(min_norm, record.norm)
    coer_margin = min(coer_margin, record.energy - coer * g0 * record.norm**2)
    return record, w_vals, min_norm, coer_margin


def _descend_aux(func: _Functional, u0: RadialFunction, search: SearchConfig, index: int):
    """Constrained minimization of the pure-power functional.

    Along each ray the projected level is a strictly decreasing function
    of the Lebesgue moment |u|_p^p (envelope identity: the scale of the
    fibering maximum does not contribute to first order), so minimizing
    over directions is equivalent to maximizing |u|_p^p on the unit
    sphere of the weighted norm.  That ascent is power-iteration-like and
    far better conditioned than descending the projected level, whose
    values grow like the inverse square of the moment.
    """
    p = func.params.p
    ops = func.ops
    nrm = func.norm(u0.values)
    if nrm <= 0.0:
        raise ProjectionError("start direction is numerically zero")
    u = u0.values / nrm
    moment = float(ops.vol @ np.abs(u) ** p)
    step = 1.0
    iterations = 0
    for iterations in range(1, search.max_iter + 1):
        load = ops.vol * (p * np.abs(u) ** (p - 2.0) * u)
        v = ops.riesz(load)
        v_t = v - func.w_dot(v, u) * u
        vt_norm = func.norm(v_t)
        if vt_norm <= 1e-13 * p * moment:
            break
        accepted = False
        a = min(4.0 * step, 1e12)
        while a > 1e-30:
            trial = u + a * v_t
            trial_norm = func.norm(trial)
            if math.isfinite(trial_norm) and trial_norm > 0.0:
                u_try = trial / trial_norm
                m_try = float(ops.vol @ np.abs(u_try) ** p)
                if m_try >= moment + _ARMIJO * a * vt_norm**2 / max(1.0, trial_norm):
                    accepted = True
                    break
            a *= 0.5
        if not accepted:
            break
        step, u, moment = a, u_try, m_try

    direction = RadialFunction(func.grid, u)
    t = project_scale(func.fiber(direction))
    record, w_vals = _finish_start(func, t * u, index, iterations, search)
    return record, w_vals, record.norm, math.inf


def _minimize(func: _Functional, search: SearchConfig, extra_starts: tuple, descend):
    starts = [
        random_clamped_profile(func.grid, np.random.default_rng([search.seed, k]))
        for k in range(search.starts)
    ]
    starts.extend(extra_starts)
    records, minimizers = [], []
    min_norm = math.inf
    coer_margin = math.inf
    for k, u0 in enumerate(starts):
        rec, vals, mn, cm = descend(func, u0, search, k)
        records.append(rec)
        minimizers.append(vals)
        min_norm = min(min_norm, mn)
        coer_margin = min(coer_margin, cm)
    best = min(range(len(records)), key=lambda k: (records[k].energy, k))
    return records, minimizers[best], records[best], min_norm, coer_margin


def ground_state(
    grid: RadialGrid,
    params: ModelParams,
    search: SearchConfig,
    extra_starts: tuple = (),
) -> GroundStateResult:
    """Multi-start minimization of the projected energy over directions.

    extra_starts supplies additional start directions (the bounds pipeline
    passes the auxiliary minimizer, whose projection certifies the level
    caps).  Identical (grid, params, search) inputs reproduce the result
    bit for bit.
    """
    func = _Functional(grid, params, pure_power=False)
    records, best_vals, best, min_norm, coer_margin = _minimize(
        func, search, tuple(extra_starts), _descend_main
    )
    # report the winner through the full projection so the residual of the
    # published minimizer sits at its rounding floor (projection acts on
    # the normalized direction; the minimizer itself may be tiny)
    best_norm = func.norm(best_vals)
    point = project(RadialFunction(grid, best_vals / best_norm), params)
    minimizer = point.projected
    return GroundStateResult(
        minimizer=minimizer,
        m=point.energy,
        gradient_norm=func.norm(func.gradient(minimizer.values)),
        starts=len(records),
        per_start_energies=[r.energy for r in records],
        converged=best.converged,
        per_start=records,
        residual=point.residual,
        minimizer_norm=func.norm(minimizer.values),
        min_nehari_norm=min(min_norm, func.norm(minimizer.values)),
        coercivity_margin=coer_margin,
    )


def aux_ground_state(grid: RadialGrid, params: ModelParams, search: SearchConfig) -> AuxResult:
    """Ground level of the pure-power functional (no q-term, no reaction)."""
    if params.p <= 4.0:
        raise ValueError(f"auxiliary problem needs p > 4, got {params.p}")
    func = _Functional(grid, params, pure_power=True)
    records, best_vals, best, min_norm, _ = _minimize(func, search, (), _descend_aux)
    w_p = RadialFunction(grid, best_vals)
    p_norm_p = float(func.ops.vol @ np.abs(best_vals) ** params.p)
    return AuxResult(
        w_p=w_p,
        m_p=best.energy,
        p_norm_p=p_norm_p,
        gradient_norm=best.gradient_norm,
        starts=len(records),
        per_start_energies=[r.energy for r in records],
        converged=best.converged,
        per_start=records,
        min_nehari_norm=min_norm,
    )


# ---------------------------------------------------------------------------
# level bounds
# ---------------------------------------------------------------------------


def power_envelope_max(a: float, c: float, p: float) -> float:
    """max over xi > 0 of (a xi^2 - c xi^p / p) = a (2a/c)^(2/(p-2)) (p-2)/p."""
    if a <= 0.0 or c <= 0.0 or p <= 2.0:
        raise ValueError("envelope needs a > 0, c > 0, p > 2")
    return a * (2.0 * a / c) ** (2.0 / (p - 2.0)) * (p - 2.0) / p


def _tau_pair(m_p: float, params: ModelParams) -> tuple:
    """Two published variants of the quadratic cap coefficient.

    tau_threshold enters the admissibility threshold for cp;
    tau_cap is the variant consistent with the cap derivation from the
    auxiliary norm bound (always the larger of the two for q > 4).
    """
    g0 = params.kirchhoff.g0
    g1 = float(params.kirchhoff.g(1.0))
    p, q = params.p, params.q
    tau_threshold = g1 / (2.0 * g0) + (g1 / g0**2) * (p / (p - 4.0)) * m_p
    tau_cap = g1 / (2.0 * g0) + (g1 / (4.0 * g0**2)) * (p * q / (p - q)) * m_p
    return tau_threshold, tau_cap


def _cp_threshold(tau: float, m_p: float, params: ModelParams) -> float:
    """Admissibility threshold: cp must exceed
    max{1, 2 tau^(p/2) (4 q^2 (p-2) m_p / (g0 (q-4)(p-q)) *
        (2 (alpha0 + delta)/alpha_adams)^(1-beta))^((p-2)/2)}."""
    p, q = params.p, params.q
    g0 = params.kirchhoff.g0
    budget = (2.0 * (params.alpha0 + params.delta) / adams_constant(params.beta)) ** (1.0 - params.beta)
    inner = 4.0 * q**2 * (p - 2.0) * m_p / (g0 * (q - 4.0) * (p - q)) * budget
    return max(1.0, 2.0 * tau ** (p / 2.0) * inner ** ((p - 2.0) / 2.0))


def min_admissible_cp(aux: AuxResult, params: ModelParams) -> float:
    """Smallest admissible power coefficient for the given auxiliary level."""
    tau_threshold, _ = _tau_pair(aux.m_p, params)
    return _cp_threshold(tau_threshold, aux.m_p, params)


def resolve_auto_cp(grid: RadialGrid, params: ModelParams, search: SearchConfig):
    """Solve the auxiliary problem and fix cp = 1.1 x its admissibility
    threshold.

    Both published variants of the cap coefficient are honored (the max of
    the two thresholds is taken), so the existence hypothesis holds under
    either reading and the closed-form level cap is guaranteed by the
    comparison chain.  Returns the resolved parameters together with the
    auxiliary result, whose minimizer should seed the main solve: its
    projection certifies the level caps and, in the resolved regime, the
    reaction term is dominated by the pure power, so the auxiliary
    extremal is also the best available start direction.
    """
    aux = aux_ground_state(grid, params, search)
    tau_threshold, tau_cap = _tau_pair(aux.m_p, params)
    thr = max(
        _cp_threshold(tau_threshold, aux.m_p, params),
        _cp_threshold(tau_cap, aux.m_p, params),
    )
    return params.with_cp(1.1 * thr), aux, thr


@dataclass(frozen=True)
class BoundsReport:
    """Every computed level quantity with the pass flag of each inequality.

    level_below_closed_form is None when cp does not clear the threshold
    (the closed-form cap is only asserted above it).
    """

    m: float
    m_p: float
    p_norm_p: float
    tau_threshold: float
    tau_cap: float
    adams_alpha: float
    cp_used: float
    cp_threshold: float
    cp_threshold_cap_variant: float
    aux_pnorm_cap: float
    level_cap_from_pnorm: float
    level_cap_from_aux: float
    level_cap_closed_form: float
    aux_pnorm_ok: bool
    cp_above_threshold: bool
    level_below_aux_cap: bool
    level_below_closed_form: bool | None

    def to_dict(self) -> dict:
        out = {}
        for name, val in self.__dict__.items():
            out[name] = val
        return out

    @property
    def all_passed(self) -> bool:
        flags = [self.aux_pnorm_ok, self.level_below_aux_cap]
        if self.level_below_closed_form is not None:
            flags.append(self.level_below_closed_form)
        return all(flags)


def level_bounds(m: float, aux: AuxResult, params: ModelParams) -> BoundsReport:
    """Evaluate every level inequality relating m, m_p and the constants."""
    p, q = params.p, params.q
    g0 = params.kirchhoff.g0
    cp = params.cp
    m_p, pnorm = aux.m_p, aux.p_norm_p

    tau_threshold, tau_cap = _tau_pair(m_p, params)
    adams = adams_constant(params.beta)

    aux_pnorm_cap = p * q / (p - q) * m_p
    cap_from_pnorm = power_envelope_max(tau_cap, cp, p) * pnorm
    cap_from_aux = tau_cap * (2.0 * tau_cap / cp) ** (2.0 / (p - 2.0)) * (q * (p - 2.0) / (p - q)) * m_p
    cap_closed_form = g0 * (q - 4.0) / (4.0 * q) * (adams / (2.0 * (params.alpha0 + params.delta))) ** (1.0 - params.beta)

    cp_threshold = _cp_threshold(tau_threshold, m_p, params)
    cp_threshold_cap = _cp_threshold(tau_cap, m_p, params)
    cp_ok = cp > cp_threshold

    return BoundsReport(
        m=m,
        m_p=m_p,
        p_norm_p=pnorm,
        tau_threshold=tau_threshold,
        tau_cap=tau_cap,
        adams_alpha=adams,
        cp_used=cp,
        cp_threshold=cp_threshold,
        cp_threshold_cap_variant=cp_threshold_cap,
        aux_pnorm_cap=aux_pnorm_cap,
        level_cap_from_pnorm=cap_from_pnorm,
        level_cap_from_aux=cap_from_aux,
        level_cap_closed_form=cap_closed_form,
        aux_pnorm_ok=bool(pnorm <= aux_pnorm_cap + _BOUND_SLACK),
        cp_above_threshold=bool(cp_ok),
        level_below_aux_cap=bool(m <= cap_from_aux + _BOUND_SLACK),
        level_below_closed_form=bool(m <= cap_closed_form + _BOUND_SLACK) if cp_ok else None,
    )
