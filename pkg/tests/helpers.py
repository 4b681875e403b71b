"""Shared randomized-instance generators and brute-force oracles.

Everything here is deliberately independent of the library internals it is
used to check: finite differences use plain arithmetic, action sums are
hand-rolled loops, and the recurrence oracles integrate closed forms.
"""

import numpy as np

import tsvarlab as tv


def random_grid(rng, max_points=50, moderate=False):
    """Random grid drawn from all five constructors.

    With moderate=True the graininess stays small enough (roughly <= 32)
    that identity tests with a relative 1e-12 tolerance are not swamped by
    the scale of individual terms.
    """
    kind = rng.integers(0, 5)
    n = int(rng.integers(3, max_points + 1))
    if kind == 0:
        a = int(rng.integers(-10, 10))
        return tv.integers(a, a + n - 1)
    if kind == 1:
        h = float(rng.uniform(0.05, 2.0))
        a = float(rng.uniform(-5, 5))
        return tv.uniform(a, a + (n - 1) * h, h)
    if kind == 2:
        if moderate:
            n0 = int(rng.integers(-2, 2))
            span = min(n - 1, 4)
        else:
            n0 = int(rng.integers(-3, 4))
            span = min(n - 1, 16)
        return tv.power2(n0, n0 + span)
    if kind == 3:
        gaps = rng.uniform(0.05, 1.5, size=n - 1)
        pts = np.concatenate([[rng.uniform(-5, 5)], gaps]).cumsum()
        return tv.explicit(pts)
    h = float(rng.uniform(0.05 if moderate else 0.01, 0.5))
    a = float(rng.uniform(-2, 2))
    return tv.sampled(a, a + rng.uniform(2.5, 8.5) * h, h)


def random_values(rng, shape, scale=10.0):
    return rng.uniform(-scale, scale, size=shape)


def random_smooth_lagrangian_text(rng, dim):
    """Random smooth Lagrangian over (t, qs*, qd*), safe on any real arguments."""
    terms = []
    for k in range(1, dim + 1):
        a, b, c, d = rng.uniform(-2, 2, size=4)
        terms.append(f"{a:.6f} * qd{k}^2")
        terms.append(f"{b:.6f} * qs{k}^2")
        terms.append(f"{c:.6f} * qs{k} * qd{k}")
        terms.append(f"{d:.6f} * sin(qs{k})")
    e, f = rng.uniform(-2, 2, size=2)
    terms.append(f"{e:.6f} * cos(t)")
    terms.append(f"{f:.6f} * t * qd1")
    return " + ".join(terms)


def random_quadratic_lagrangian_text(rng, dim):
    """Convex-in-velocity quadratic Lagrangian; Newton solves it in one step."""
    terms = []
    for k in range(1, dim + 1):
        a = rng.uniform(0.5, 2.0)
        b = rng.uniform(-0.3, 0.3)
        c = rng.uniform(0.0, 0.3)
        d = rng.uniform(-1.0, 1.0)
        terms.append(f"{a:.6f} * qd{k}^2")
        terms.append(f"{b:.6f} * qs{k} * qd{k}")
        terms.append(f"{c:.6f} * qs{k}^2")
        terms.append(f"{d:.6f} * qs{k}")
    g = rng.uniform(-0.5, 0.5)
    terms.append(f"{g:.6f} * cos(t) * qs1")
    return " + ".join(terms)


def random_generator(rng, dim):
    """Random polynomial state generator (tau fixed to zero)."""
    xi = []
    for k in range(1, dim + 1):
        a, b = rng.uniform(-1.5, 1.5, size=2)
        c = rng.uniform(-0.4, 0.4)
        xi.append(f"{a:.6f} + {b:.6f} * q{k} + {c:.6f} * t")
    return tv.make_generator(dim, tau="0", xi=xi)


def brute_action(problem, values):
    """Hand-rolled action sum; independent of tsvarlab.action."""
    t = list(problem.grid.points)
    total = 0.0
    for i in range(len(t) - 1):
        mu = t[i + 1] - t[i]
        y = values[i + 1]
        v = (values[i + 1] - values[i]) / mu
        total += mu * problem.lagrangian.value(t[i], y, v)
    return total


def fd_action_gradient(problem, values, step=1e-6):
    """Central finite differences of the action in every interior component."""
    vals = np.array(values, dtype=float)
    npts, dim = vals.shape
    grad = np.zeros((npts - 2, dim))
    for j in range(1, npts - 1):
        for k in range(dim):
            plus = vals.copy()
            minus = vals.copy()
            plus[j, k] += step
            minus[j, k] -= step
            grad[j - 1, k] = (brute_action(problem, plus) - brute_action(problem, minus)) / (
                2 * step
            )
    return grad


def gravity_oracle_trajectory(grid, qa, qb):
    """Closed-form extremal of L = v^2/2 - y: velocity drops by mu per cell.

    Solves for the initial velocity hitting qb, then integrates the
    recurrence directly; no library calls.
    """
    t = list(grid.points)
    mus = [t[i + 1] - t[i] for i in range(len(t) - 1)]
    # q(b) = qa + v0*sum(mu) - sum over cells of mu_i * (accumulated drop)
    drop = 0.0
    acc = 0.0
    for i, m in enumerate(mus):
        drop += m * acc
        acc += m
    v0 = (qb - qa + drop) / sum(mus)
    q = [qa]
    v = v0
    for m in mus:
        q.append(q[-1] + m * v)
        v -= m
    return np.array(q)


def recurrence_oracle_power2(qa, qb, npoints):
    """Extremal of the doubling-grid quadratic problem via q_{k+1} = 3 q_k - q_{k-1}.

    Shooting on the free value q_1: the map q_1 -> q_{N-1} is affine, so two
    evaluations pin it down exactly.
    """

    def run(q1):
        seq = [qa, q1]
        for _ in range(npoints - 2):
            seq.append(3 * seq[-1] - seq[-2])
        return seq

    lo = run(0.0)[-1]
    hi = run(1.0)[-1]
    q1 = (qb - lo) / (hi - lo)
    seq = run(q1)[:npoints]
    assert abs(seq[-1] - qb) < 1e-9 * max(1.0, abs(qb))
    return np.array(seq)
