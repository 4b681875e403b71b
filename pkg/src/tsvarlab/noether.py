"""Symmetry generators, invariance checks, and conserved-quantity reports.

Two invariance notions are implemented: state transformations at fixed time
(compared integrand by integrand) and joint time/state transformations
(compared cell integral by cell integral over the image grid; equality on
every elementary cell is equivalent to equality on every subwindow).  The
associated conserved quantities are evaluated along trajectories and their
forward-difference residuals are reported, never asserted: the residual
profile is the measured object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from ._dual import Dual
from .calculus import GridFunction
from .timescale import TimeScaleGrid, graininess, kappa
from .variational import Problem, _cell_error, _traj_values

_EPS_STEP = 1e-5  # central-difference step for d/deps at 0


@dataclass(frozen=True)
class SymmetryGenerator:
    """Infinitesimal generator (tau, xi), optionally with exact finite maps.

    ``tau`` and each ``xi`` component are expressions over (t, q1..qn); the
    optional exact family ``tbar``/``qbar`` may also reference eps.  When no
    family is given, the first-order family t + eps*tau, q + eps*xi is used
    (higher-order terms identically zero).
    """

    dim: int
    tau: ex.Expression
    xi: tuple[ex.Expression, ...]
    tbar: ex.Expression | None = None
    qbar: tuple[ex.Expression, ...] | None = None

    def __post_init__(self):
        if len(self.xi) != self.dim:
            raise ValueError(f"xi must have {self.dim} components")
        if (self.tbar is None) != (self.qbar is None):
            raise ValueError("exact family needs both tbar and qbar")
        if self.qbar is not None and len(self.qbar) != self.dim:
            raise ValueError(f"qbar must have {self.dim} components")

    @property
    def has_family(self) -> bool:
        return self.tbar is not None

    def _env(self, t: float, qvec, eps: float | None = None) -> dict:
        env = {"t": t}
        for k in range(self.dim):
            env[f"q{k + 1}"] = qvec[k]
        if eps is not None:
            env["eps"] = eps
        return env

    def tau_at(self, t: float, qvec) -> float:
        return ex.evaluate(self.tau, self._env(t, qvec))

    def xi_at(self, t: float, qvec) -> np.ndarray:
        env = self._env(t, qvec)
        return np.array([ex.evaluate(c, env) for c in self.xi])

    def tbar_at(self, t: float, qvec, eps: float) -> float:
        if self.tbar is not None:
            return ex.evaluate(self.tbar, self._env(t, qvec, eps))
        return t + eps * self.tau_at(t, qvec)

    def qbar_at(self, t: float, qvec, eps: float) -> np.ndarray:
        if self.qbar is not None:
            env = self._env(t, qvec, eps)
            return np.array([ex.evaluate(c, env) for c in self.qbar])
        return np.asarray(qvec) + eps * self.xi_at(t, qvec)


def make_generator(dim: int, tau: str = "0", xi=None, tbar: str | None = None, qbar=None) -> SymmetryGenerator:
    """Parse generator expressions; xi defaults to all-zero components."""
    if xi is None:
        xi = ("0",) * dim
    tau_tree = ex.parse(tau, dim, allow=("t", "q"))
    xi_trees = tuple(ex.parse(c, dim, allow=("t", "q")) for c in xi)
    tbar_tree = ex.parse(tbar, dim, allow=("t", "q", "eps")) if tbar is not None else None
    qbar_trees = (
        tuple(ex.parse(c, dim, allow=("t", "q", "eps")) for c in qbar) if qbar is not None else None
    )
    return SymmetryGenerator(dim, tau_tree, xi_trees, tbar_tree, qbar_trees)


def validate_family(gen: SymmetryGenerator, times, qvals) -> None:
    """Check the exact family against its generator on sampled arguments.

    At eps = 0 the maps must reproduce (t, q) to 1e-12; their central
    finite-difference eps-derivative (step 1e-6) must match (tau, xi) to
    1e-6.  Raises ValueError on the first violation.
    """
    if not gen.has_family:
        return
    h = 1e-6
    for t, qvec in zip(times, qvals):
        t0 = gen.tbar_at(t, qvec, 0.0)
        if abs(t0 - t) > 1e-12 * max(1.0, abs(t)):
            raise ValueError(f"tbar at eps=0 is {t0!r}, expected t={t!r}")
        q0 = gen.qbar_at(t, qvec, 0.0)
        if np.any(np.abs(q0 - qvec) > 1e-12 * np.maximum(1.0, np.abs(qvec))):
            raise ValueError(f"qbar at eps=0 differs from q at t={t!r}")
        dt = (gen.tbar_at(t, qvec, h) - gen.tbar_at(t, qvec, -h)) / (2 * h)
        tau = gen.tau_at(t, qvec)
        if abs(dt - tau) > 1e-6 * max(1.0, abs(tau)):
            raise ValueError(
                f"d tbar/d eps at 0 is {dt!r} but tau={tau!r} at t={t!r}"
            )
        dq = (gen.qbar_at(t, qvec, h) - gen.qbar_at(t, qvec, -h)) / (2 * h)
        xi = gen.xi_at(t, qvec)
        if np.any(np.abs(dq - xi) > 1e-6 * np.maximum(1.0, np.abs(xi))):
            raise ValueError(f"d qbar/d eps at 0 does not match xi at t={t!r}")


# ---------------------------------------------------------------------------
# Invariance


def invariance_residual_pointwise(p: Problem, q: GridFunction, gen: SymmetryGenerator) -> GridFunction:
    """Pointwise defect dL/dy . xi-jumped + dL/dv . xi-differenced.

    The generator is sampled along the trajectory as a grid function
    t -> xi(t, q(t)); its jump composition and delta derivative are the
    grid operations, exactly as the necessary condition composes them.
    """
    vals = _traj_values(p, q)
    t = p.grid.array
    mu = graininess(p.grid)
    xi_grid = np.array([gen.xi_at(t[i], vals[i]) for i in range(len(t))])
    xi_sigma = xi_grid[1:]
    xi_delta = (xi_grid[1:] - xi_grid[:-1]) / mu[:, None]
    r = np.empty(len(t) - 1)
    for i in range(len(t) - 1):
        y = vals[i + 1]
        v = (vals[i + 1] - vals[i]) / mu[i]
        try:
            _, _, d2, d3 = p.lagrangian.value_and_partials(t[i], y, v)
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
        r[i] = float(d2 @ xi_sigma[i] + d3 @ xi_delta[i])
    return GridFunction(kappa(p.grid), r)


@dataclass(frozen=True)
class InvarianceReport:
    mode: str  # "fixed-time" or "time-transform"
    eps_values: tuple[float, ...]
    cell_times: np.ndarray  # left endpoint of each compared cell
    discrepancies: np.ndarray  # (n_eps, n_cells) absolute differences
    per_eps_max: np.ndarray
    max_discrepancy: float
    action_value: float
    action_eps_derivative: float  # central difference at eps = 0


def _original_cells(p: Problem, vals: np.ndarray) -> np.ndarray:
    t = p.grid.array
    mu = graininess(p.grid)
    cells = np.empty(len(t) - 1)
    for i in range(len(t) - 1):
        y = vals[i + 1]
        v = (vals[i + 1] - vals[i]) / mu[i]
        try:
            cells[i] = mu[i] * p.lagrangian.value(t[i], y, v)
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
    return cells


def check_invariance_fixed_time(
    p: Problem, q: GridFunction, gen: SymmetryGenerator, eps_list
) -> InvarianceReport:
    """Compare the integrand along transformed states against the original.

    The transformation moves only the state; cells keep their graininess, so
    integrand equality per cell is the subinterval-quantified definition.
    """
    vals = _traj_values(p, q)
    t = p.grid.array
    mu = graininess(p.grid)
    if gen.has_family:
        validate_family(gen, t, vals)
    eps_values = tuple(float(e) for e in eps_list)
    ncell = len(t) - 1

    def integrands(eps: float) -> np.ndarray:
        qbar = np.array([gen.qbar_at(t[i], vals[i], eps) for i in range(len(t))])
        out = np.empty(ncell)
        for i in range(ncell):
            y = qbar[i + 1]
            v = (qbar[i + 1] - qbar[i]) / mu[i]
            try:
                out[i] = p.lagrangian.value(t[i], y, v)
            except ex.EvalError as exc:
                raise _cell_error(exc, i, t[i]) from None
        return out

    base = integrands(0.0)
    disc = np.empty((len(eps_values), ncell))
    for e, eps in enumerate(eps_values):
        disc[e] = np.abs(integrands(eps) - base)
    d_action = float(
        np.sum(mu * integrands(_EPS_STEP)) - np.sum(mu * integrands(-_EPS_STEP))
    ) / (2 * _EPS_STEP)
    per_eps = disc.max(axis=1) if ncell else np.zeros(len(eps_values))
    return InvarianceReport(
        mode="fixed-time",
        eps_values=eps_values,
        cell_times=t[:-1].copy(),
        discrepancies=disc,
        per_eps_max=per_eps,
        max_discrepancy=float(per_eps.max(initial=0.0)),
        action_value=float(np.sum(mu * base)),
        action_eps_derivative=d_action,
    )


def check_invariance_time_transform(
    p: Problem, q: GridFunction, gen: SymmetryGenerator, eps_list
) -> InvarianceReport:
    """Compare cell integrals over the transformed time scale with the originals.

    The grid map t -> tbar(t, q(t), eps) must be strictly increasing; its
    image is a new time scale on which the jump operator automatically
    commutes with the map.  Cell-by-cell equality of the two integrals is
    the subinterval-quantified definition of invariance.
    """
    vals = _traj_values(p, q)
    t = p.grid.array
    mu = graininess(p.grid)
    if gen.has_family:
        validate_family(gen, t, vals)
    eps_values = tuple(float(e) for e in eps_list)
    ncell = len(t) - 1

    def transformed_cells(eps: float) -> np.ndarray:
        tbar = np.array([gen.tbar_at(t[i], vals[i], eps) for i in range(len(t))])
        if not np.all(np.diff(tbar) > 0):
            raise ValueError(
                f"transformed times are not strictly increasing at eps={eps!r}"
            )
        # the image of the grid map is itself a time scale; its jump operator
        # is index-aligned with the original, so transported cells line up
        image = TimeScaleGrid(tuple(tbar), intent=p.grid.intent, step_hint=None)
        qbar = np.array([gen.qbar_at(t[i], vals[i], eps) for i in range(len(t))])
        mubar = graininess(image)
        out = np.empty(ncell)
        for i in range(ncell):
            y = qbar[i + 1]
            v = (qbar[i + 1] - qbar[i]) / mubar[i]
            try:
                out[i] = mubar[i] * p.lagrangian.value(image.points[i], y, v)
            except ex.EvalError as exc:
                raise _cell_error(exc, i, image.points[i]) from None
        return out

    base = _original_cells(p, vals)
    disc = np.empty((len(eps_values), ncell))
    for e, eps in enumerate(eps_values):
        disc[e] = np.abs(transformed_cells(eps) - base)
    d_action = float(
        np.sum(transformed_cells(_EPS_STEP)) - np.sum(transformed_cells(-_EPS_STEP))
    ) / (2 * _EPS_STEP)
    per_eps = disc.max(axis=1) if ncell else np.zeros(len(eps_values))
    return InvarianceReport(
        mode="time-transform",
        eps_values=eps_values,
        cell_times=t[:-1].copy(),
        discrepancies=disc,
        per_eps_max=per_eps,
        max_discrepancy=float(per_eps.max(initial=0.0)),
        action_value=float(np.sum(base)),
        action_eps_derivative=d_action,
    )


# ---------------------------------------------------------------------------
# Conserved quantities


@dataclass(frozen=True)
class ResidualProfile:
    times: np.ndarray
    residuals: np.ndarray
    max_abs: float


@dataclass(frozen=True)
class ConservationReport:
    """Sampled conserved-quantity values and their forward-difference residuals."""

    times: np.ndarray  # kappa-truncated grid points carrying C
    values: np.ndarray
    residual_times: np.ndarray  # doubly truncated points carrying delta C / delta t
    residuals: np.ndarray
    max_abs_residual: float


def _profile(times: np.ndarray, values: np.ndarray) -> ResidualProfile:
    resid = (values[1:] - values[:-1]) / (times[1:] - times[:-1])
    return ResidualProfile(
        times=times[:-1].copy(),
        residuals=resid,
        max_abs=float(np.max(np.abs(resid), initial=0.0)),
    )


def conservation_residual(report: ConservationReport) -> ResidualProfile:
    """Recompute delta C / delta t from the C samples by forward differencing.

    No chain rule is involved anywhere: the residual is literally the
    difference quotient of the sampled quantity.
    """
    if len(report.values) < 2:
        raise ValueError("conservation residual needs at least 2 C samples")
    return _profile(report.times, report.values)


def _report_from_samples(times: np.ndarray, values: np.ndarray) -> ConservationReport:
    prof = _profile(times, values)
    return ConservationReport(
        times=times,
        values=values,
        residual_times=prof.times,
        residuals=prof.residuals,
        max_abs_residual=prof.max_abs,
    )


def noether_quantity_fixed_time(
    p: Problem, q: GridFunction, gen: SymmetryGenerator
) -> ConservationReport:
    """C = dL/dv . xi(t, q) along the trajectory, with residual profile."""
    vals = _traj_values(p, q)
    t = p.grid.array
    mu = graininess(p.grid)
    ncell = len(t) - 1
    c = np.empty(ncell)
    for i in range(ncell):
        y = vals[i + 1]
        v = (vals[i + 1] - vals[i]) / mu[i]
        try:
            _, _, _, d3 = p.lagrangian.value_and_partials(t[i], y, v)
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
        c[i] = np.sum(d3 * gen.xi_at(t[i], vals[i]))
    return _report_from_samples(t[:-1].copy(), c)


def noether_quantity(
    p: Problem, q: GridFunction, gen: SymmetryGenerator, *, mu_mode: str = "grid"
) -> ConservationReport:
    """Full conserved quantity with both the state and the time generator.

    C = dL/dv . xi + [L - dL/dv . v - dL/dt * mu] * tau, every L argument at
    (t, jumped state, difference quotient), tau and xi at (t, q(t)).  With
    mu_mode="zero" the graininess term is dropped (continuum-intent
    evaluation), which reproduces the classical energy-momentum quantity.
    """
    if mu_mode not in ("grid", "zero"):
        raise ValueError("mu_mode must be 'grid' or 'zero'")
    vals = _traj_values(p, q)
    t = p.grid.array
    mu = graininess(p.grid)
    ncell = len(t) - 1
    c = np.empty(ncell)
    for i in range(ncell):
        y = vals[i + 1]
        v = (vals[i + 1] - vals[i]) / mu[i]
        try:
            lval, d1, _, d3 = p.lagrangian.value_and_partials(t[i], y, v)
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
        mu_term = mu[i] if mu_mode == "grid" else 0.0
        bracket = lval - float(d3 @ v) - d1 * mu_term
        c[i] = np.sum(d3 * gen.xi_at(t[i], vals[i])) + bracket * gen.tau_at(t[i], vals[i])
    return _report_from_samples(t[:-1].copy(), c)


# ---------------------------------------------------------------------------
# Extended-Lagrangian identities (time-reparameterization device)


@dataclass(frozen=True)
class ExtendedPartialsReport:
    times: np.ndarray
    r: float
    value_composite: np.ndarray  # reparameterized Lagrangian value
    value_reference: np.ndarray  # plain integrand L(t, jumped q, v)
    d4_forward: np.ndarray  # derivative in the time-rate slot, dual route
    d4_formula: np.ndarray  # L - dL/dv . v/r - dL/dt * mu * r at shifted args
    d5_forward: np.ndarray  # (K, n) derivative in the velocity slot, dual route
    d5_formula: np.ndarray
    max_value_error: float
    max_d4_error: float
    max_d5_error: float


def extended_lagrangian_partials(p: Problem, q: GridFunction, r: float = 1.0) -> ExtendedPartialsReport:
    """Differentiate the reparameterized Lagrangian L(s - mu*r, q, v/r) * r.

    Forward-mode duals differentiate the composite in the (r, v) slots; the
    results are compared against the closed-form right-hand sides.  At r = 1
    the composite value reproduces the plain integrand, and the two partials
    reduce to dL/dv and L - dL/dv . v - dL/dt * mu.
    """
    if r == 0.0:
        raise ValueError("time-rate r must be nonzero")
    vals = _traj_values(p, q)
    t = p.grid.array
    mu = graininess(p.grid)
    n = p.dim
    ncell = len(t) - 1
    basis = np.eye(1 + n)

    value_c = np.empty(ncell)
    value_ref = np.empty(ncell)
    d4_fwd = np.empty(ncell)
    d4_form = np.empty(ncell)
    d5_fwd = np.empty((ncell, n))
    d5_form = np.empty((ncell, n))

    for i in range(ncell):
        st = t[i + 1]  # jumped time; the time state follows s(t) = t
        y = vals[i + 1]
        v = (vals[i + 1] - vals[i]) / mu[i]

        r_dual = Dual(float(r), basis[0])
        env = {"t": st - mu[i] * r_dual}
        for k in range(n):
            env[f"qs{k + 1}"] = y[k]
            env[f"qd{k + 1}"] = Dual(v[k], basis[1 + k]) / r_dual
        try:
            out = p.lagrangian.eval_env(env) * r_dual
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
        grads = out.b if isinstance(out.b, np.ndarray) else np.zeros(1 + n)
        value_c[i] = out.a
        d4_fwd[i] = grads[0]
        d5_fwd[i] = grads[1:]

        shifted_t = st - mu[i] * r
        vr = v / r
        try:
            lval, d1, _, d3 = p.lagrangian.value_and_partials(shifted_t, y, vr)
            value_ref[i] = p.lagrangian.value(t[i], y, v)
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
        d5_form[i] = d3
        d4_form[i] = lval - float(d3 @ vr) - d1 * mu[i] * r

    return ExtendedPartialsReport(
        times=t[:-1].copy(),
        r=float(r),
        value_composite=value_c,
        value_reference=value_ref,
        d4_forward=d4_fwd,
        d4_formula=d4_form,
        d5_forward=d5_fwd,
        d5_formula=d5_form,
        max_value_error=float(np.max(np.abs(value_c - value_ref), initial=0.0)),
        max_d4_error=float(np.max(np.abs(d4_fwd - d4_form), initial=0.0)),
        max_d5_error=float(np.max(np.abs(d5_fwd - d5_form), initial=0.0)),
    )
