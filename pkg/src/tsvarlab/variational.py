"""Action functionals, Euler-Lagrange residuals, and the extremal solver.

The action is the delta integral of L(t, q at the next point, forward
difference quotient) over the grid window.  Stationarity of that sum with
respect to the interior values yields the discrete Euler-Lagrange system;
:func:`solve_el` solves it by Newton iteration with an exact block
tridiagonal Jacobian assembled from nested dual numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from ._dual import Dual
from .calculus import GridFunction
from .timescale import TimeScaleGrid, graininess, kappa


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    def __init__(self, message: str, gradient_norm: float, iterations: int):
        super().__init__(message)
        self.gradient_norm = gradient_norm
        self.iterations = iterations


class SingularJacobian(SolverError):
    def __init__(self, block_index: int, time: float):
        super().__init__(
            f"singular Jacobian pivot at interior point {block_index} (t={time!r})"
        )
        self.block_index = block_index
        self.time = time


@dataclass(frozen=True)
class Lagrangian:
    """Evaluator of L(t, y, v) with y the jumped state and v the delta derivative.

    Partial derivatives come from forward-mode duals through the parsed
    expression; the evaluator accepts any real t, not only grid points.
    """

    dim: int
    expression: ex.Expression
    source: str

    @classmethod
    def from_text(cls, text: str, dim: int) -> "Lagrangian":
        if dim < 1:
            raise ValueError("Lagrangian dimension must be >= 1")
        tree = ex.parse(text, dim, allow=("t", "qs", "qd"))
        return cls(dim, tree, text)

    def _env(self, t, y, v) -> dict:
        env = {"t": t}
        for k in range(self.dim):
            env[f"qs{k + 1}"] = y[k]
            env[f"qd{k + 1}"] = v[k]
        return env

    def value(self, t: float, y, v) -> float:
        return ex.evaluate(self.expression, self._env(t, y, v))

    def value_and_partials(self, t: float, y, v):
        """Returns (L, dL/dt, dL/dy as (n,), dL/dv as (n,)) in one dual pass."""
        n = self.dim
        m = 1 + 2 * n
        basis = np.eye(m)
        seed = {"t": basis[0]}
        for k in range(n):
            seed[f"qs{k + 1}"] = basis[1 + k]
            seed[f"qd{k + 1}"] = basis[1 + n + k]
        val, grad = ex.diff_eval(self.expression, self._env(t, y, v), seed)
        if not isinstance(grad, np.ndarray):
            grad = np.zeros(m)
        return val, grad[0], grad[1 : 1 + n].copy(), grad[1 + n :].copy()

    def partials(self, t: float, y, v):
        _, d1, d2, d3 = self.value_and_partials(t, y, v)
        return d1, d2, d3

    def eval_env(self, env: dict):
        """Raw expression evaluation; entries may be duals (used by composites)."""
        return ex.evaluate(self.expression, env)


@dataclass(frozen=True)
class Problem:
    """Fundamental variational problem: grid, Lagrangian, boundary values."""

    grid: TimeScaleGrid
    lagrangian: Lagrangian
    qa: np.ndarray
    qb: np.ndarray

    def __post_init__(self):
        qa = np.atleast_1d(np.array(self.qa, dtype=float))
        qb = np.atleast_1d(np.array(self.qb, dtype=float))
        n = self.lagrangian.dim
        if qa.shape != (n,) or qb.shape != (n,):
            raise ValueError(f"boundary values must have shape ({n},)")
        qa.setflags(write=False)
        qb.setflags(write=False)
        object.__setattr__(self, "qa", qa)
        object.__setattr__(self, "qb", qb)

    @property
    def dim(self) -> int:
        return self.lagrangian.dim


Trajectory = GridFunction  # vector-valued grid function with (N, n) values


def make_problem(grid: TimeScaleGrid, lagrangian_text: str, dim: int, qa, qb) -> Problem:
    return Problem(grid, Lagrangian.from_text(lagrangian_text, dim), qa, qb)


def as_trajectory(p: Problem, values) -> GridFunction:
    vals = np.array(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape != (len(p.grid), p.dim):
        raise ValueError(
            f"trajectory values must have shape ({len(p.grid)}, {p.dim}), got {vals.shape}"
        )
    return GridFunction(p.grid, vals)


def linear_guess(p: Problem) -> GridFunction:
    """Componentwise linear interpolation between the boundary values."""
    t = p.grid.array
    w = (t - t[0]) / (t[-1] - t[0])
    vals = p.qa[None, :] + w[:, None] * (p.qb - p.qa)[None, :]
    vals[0] = p.qa
    vals[-1] = p.qb
    return GridFunction(p.grid, vals)


def _traj_values(p: Problem, q: GridFunction) -> np.ndarray:
    vals = q.values
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape != (len(p.grid), p.dim):
        raise ValueError("trajectory does not match the problem grid/dimension")
    return vals


def _cell_error(exc: ex.EvalError, i: int, t: float) -> ex.EvalError:
    return ex.EvalError(f"cell {i} at t={t!r}: {exc.message}", exc.column)


def action(p: Problem, q: GridFunction) -> float:
    """Delta integral of the composed integrand over the whole window."""
    vals = _traj_values(p, q)
    t = p.grid.array
    mu = graininess(p.grid)
    total = 0.0
    for i in range(len(t) - 1):
        y = vals[i + 1]
        v = (vals[i + 1] - vals[i]) / mu[i]
        try:
            total += mu[i] * p.lagrangian.value(t[i], y, v)
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
    return total


def _cell_partials(p: Problem, vals: np.ndarray):
    """d2 and d3 of L at every cell (left endpoints of the grid)."""
    t = p.grid.array
    mu = graininess(p.grid)
    ncell = len(t) - 1
    d2 = np.empty((ncell, p.dim))
    d3 = np.empty((ncell, p.dim))
    for i in range(ncell):
        y = vals[i + 1]
        v = (vals[i + 1] - vals[i]) / mu[i]
        try:
            _, _, d2[i], d3[i] = p.lagrangian.value_and_partials(t[i], y, v)
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
    return d2, d3


def el_residual(p: Problem, q: GridFunction) -> GridFunction:
    """Euler-Lagrange defect on the doubly truncated grid.

    residual(t_i) = delta-derivative of dL/dv minus dL/dy, evaluated with
    all L arguments at (t, jumped state, difference quotient); one n-vector
    for each of the first N - 2 grid points.
    """
    if len(p.grid) < 3:
        raise ValueError("Euler-Lagrange residual needs a grid with at least 3 points")
    vals = _traj_values(p, q)
    mu = graininess(p.grid)
    d2, d3 = _cell_partials(p, vals)
    resid = (d3[1:] - d3[:-1]) / mu[: len(d3) - 1, None] - d2[:-1]
    return GridFunction(kappa(kappa(p.grid)), resid)


def stationarity_gradient(p: Problem, q: GridFunction) -> np.ndarray:
    """Exact gradient of the action with respect to the interior values.

    Assembled cell by cell from the partials of each cell term: the cell
    left of point j contributes mu * dL/dy + dL/dv, the cell right of j
    contributes -dL/dv.  Shape (N - 2, n).
    """
    if len(p.grid) < 3:
        raise ValueError("stationarity gradient needs a grid with at least 3 points")
    vals = _traj_values(p, q)
    mu = graininess(p.grid)
    d2, d3 = _cell_partials(p, vals)
    return mu[:-1, None] * d2[:-1] + d3[:-1] - d3[1:]


@dataclass(frozen=True)
class SolveResult:
    trajectory: GridFunction
    iterations: int
    gradient_norm: float
    action_value: float


def _cell_hessian(p: Problem, t: float, mu_i: float, q_left: np.ndarray, q_right: np.ndarray):
    """Second derivatives of one cell term with respect to (q_left, q_right).

    Returns a symmetric (2n, 2n) matrix computed by nested duals: the inner
    level seeds one direction, the outer level carries all 2n directions as
    a vector tangent, so each pass fills one Hessian row exactly.
    """
    n = p.dim
    m = 2 * n
    basis = np.eye(m)
    y = q_right
    v = (q_right - q_left) / mu_i
    hess = np.empty((m, m))
    for b in range(m):
        env = {"t": t}
        for k in range(n):
            inner_qs = 1.0 if b == n + k else 0.0
            inner_qd = ((1.0 if b == n + k else 0.0) - (1.0 if b == k else 0.0)) / mu_i
            outer_qs = basis[n + k]
            outer_qd = (basis[n + k] - basis[k]) / mu_i
            env[f"qs{k + 1}"] = Dual(Dual(y[k], inner_qs), Dual(outer_qs, 0.0))
            env[f"qd{k + 1}"] = Dual(Dual(v[k], inner_qd), Dual(outer_qd, 0.0))
        out = p.lagrangian.eval_env(env)
        if isinstance(out, Dual) and isinstance(out.b, Dual):
            row = out.b.b
        else:
            row = np.zeros(m)
        hess[b] = mu_i * (row if isinstance(row, np.ndarray) else np.full(m, row))
    return hess


def _interior_hessian(p: Problem, vals: np.ndarray):
    """Block tridiagonal Hessian of the action over interior points."""
    t = p.grid.array
    mu = graininess(p.grid)
    n = p.dim
    ncell = len(t) - 1
    m = len(t) - 2
    blocks_a = np.empty((ncell, n, n))
    blocks_b = np.empty((ncell, n, n))
    blocks_c = np.empty((ncell, n, n))
    for i in range(ncell):
        try:
            hc = _cell_hessian(p, t[i], mu[i], vals[i], vals[i + 1])
        except ex.EvalError as exc:
            raise _cell_error(exc, i, t[i]) from None
        blocks_a[i] = hc[:n, :n]
        blocks_b[i] = hc[:n, n:]
        blocks_c[i] = hc[n:, n:]
    diag = blocks_c[:m] + blocks_a[1 : m + 1]
    upper = blocks_b[1:m]
    return diag, upper


def _block_tridiag_solve(p: Problem, diag, upper, rhs):
    """Thomas elimination on n-by-n blocks; singular pivots are reported."""
    m = diag.shape[0]
    dhat = diag.copy()
    rhat = rhs.copy()
    interior_times = p.grid.points[1:-1]
    for j in range(1, m):
        try:
            w = np.linalg.solve(dhat[j - 1].T, upper[j - 1]).T
        except np.linalg.LinAlgError:
            raise SingularJacobian(j - 1, interior_times[j - 1]) from None
        dhat[j] = dhat[j] - w @ upper[j - 1]
        rhat[j] = rhat[j] - w @ rhat[j - 1]
    x = np.empty_like(rhat)
    try:
        x[m - 1] = np.linalg.solve(dhat[m - 1], rhat[m - 1])
    except np.linalg.LinAlgError:
        raise SingularJacobian(m - 1, interior_times[m - 1]) from None
    for j in range(m - 2, -1, -1):
        try:
            x[j] = np.linalg.solve(dhat[j], rhat[j] - upper[j] @ x[j + 1])
        except np.linalg.LinAlgError:
            raise SingularJacobian(j, interior_times[j]) from None
    return x


def solve_el(
    p: Problem,
    guess: GridFunction | None = None,
    *,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> SolveResult:
    """Newton iteration for an extremal of the discrete action.

    Convergence when the gradient max-norm drops below tol * (1 + |action|);
    backtracking halves the step up to 30 times on non-decrease of the
    gradient norm.  Boundary values are held bit-exactly; the result is a
    stationary point, not necessarily a minimizer.
    """
    if len(p.grid) < 3:
        raise ValueError("boundary-value solve needs a grid with at least 3 points")
    vals = _traj_values(p, guess if guess is not None else linear_guess(p)).copy()
    vals[0] = p.qa
    vals[-1] = p.qb

    def grad_norm(candidate):
        g = stationarity_gradient(p, GridFunction(p.grid, candidate))
        return g, float(np.max(np.abs(g)))

    g, gnorm = grad_norm(vals)
    for it in range(max_iter + 1):
        act = action(p, GridFunction(p.grid, vals))
        if gnorm <= tol * (1.0 + abs(act)):
            return SolveResult(GridFunction(p.grid, vals), it, gnorm, act)
        if it == max_iter:
            raise NonConvergence(
                f"no convergence after {max_iter} iterations "
                f"(gradient max-norm {gnorm:.3e})",
                gnorm,
                it,
            )
        diag, upper = _interior_hessian(p, vals)
        step = _block_tridiag_solve(p, diag, upper, -g)
        accepted = False
        scale = 1.0
        for _ in range(31):
            trial = vals.copy()
            trial[1:-1] += scale * step
            try:
                g_trial, gnorm_trial = grad_norm(trial)
            except ex.EvalError:
                gnorm_trial = np.inf
            if gnorm_trial < gnorm:
                vals, g, gnorm = trial, g_trial, gnorm_trial
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            raise NonConvergence(
                f"line search failed at iteration {it + 1} "
                f"(gradient max-norm {gnorm:.3e})",
                gnorm,
                it + 1,
            )
    raise AssertionError("unreachable")
