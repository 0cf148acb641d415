"""Whittle index of a Gilbert-Elliott arm as a function of the belief.

The subsidised single-arm problem: passive earns the subsidy ``lam`` and the
belief drifts as ``tau(w) = w p11 + (1 - w) p01``; active earns ``w B`` and
the belief resets to ``p11`` or ``p01`` depending on the observed state.

``whittle_index`` solves the indifference equation under the threshold policy
whose threshold is the queried belief. Under that policy the number of passive
slots before the belief re-enters the active set has a closed form, so the
values at the two reset points follow from a 2x2 linear system and the index
from one linear equation in ``lam``. ``value_iteration_oracle`` and
``oracle_index`` solve the same problem by brute force on a belief grid and
serve only as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"value iteration stalled after {iterations} sweeps, residual {residual:.3e}")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ArmModel:
    p11: float
    p01: float
    bandwidth: float = 1.0
    beta: float = 0.9999

    def __post_init__(self):
        for name in ("p11", "p01"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta!r}")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be nonnegative")
        if self.p11 == 1.0 and self.p01 == 0.0:
            raise ValueError("p11=1 and p01=0: belief never moves, index undefined")


def _passive_steps(x: float, g: float, rho: float, w0: float) -> Optional[int]:
    """Slots spent passive from belief ``x`` before the belief is >= ``g``.

    ``None`` when the belief never reaches the threshold.
    """
    if x >= g:
        return 0
    if rho == 0.0:
        return 1 if w0 >= g else None
    if rho >= 1.0:
        # drift too slow to resolve in double precision
        return None
    if rho < 0.0:
        # oscillation around w0 with shrinking amplitude: only the first
        # overshoot above w0 can clear the threshold
        return 1 if w0 + (x - w0) * rho >= g else None
    if x >= w0 or w0 <= g:
        return None
    k = max(1, math.ceil(math.log((w0 - g) / (w0 - x)) / math.log(rho)))
    while k > 1 and w0 + (x - w0) * rho ** (k - 1) >= g:
        k -= 1
    while w0 + (x - w0) * rho**k < g:
        k += 1
    return k


def _unit_index(omega: float, p11: float, p01: float, beta: float) -> float:
    rho = p11 - p01
    w0 = p01 / (1.0 - p11 + p01)

    # V(x) = ka*lam + kb + kc*V(p11) + kd*V(p01) under the threshold policy
    def terms(x):
        steps = _passive_steps(x, omega, rho, w0)
        if steps is None:
            return 1.0 / (1.0 - beta), 0.0, 0.0, 0.0
        y = x if steps == 0 else w0 + (x - w0) * rho**steps
        bl = beta**steps
        return (1.0 - bl) / (1.0 - beta), bl * y, bl * beta * y, bl * beta * (1.0 - y)

    a1, b1, c1, d1 = terms(p11)
    a0, b0, c0, d0 = terms(p01)
    det = (1.0 - c1) * (1.0 - d0) - d1 * c0
    # V(p11) = s1*lam + r1, V(p01) = s0*lam + r0
    s1 = (a1 * (1.0 - d0) + d1 * a0) / det
    s0 = (a0 * (1.0 - c1) + c0 * a1) / det
    r1 = (b1 * (1.0 - d0) + d1 * b0) / det
    r0 = (b0 * (1.0 - c1) + c0 * b1) / det

    act_s = beta * (omega * s1 + (1.0 - omega) * s0)
    act_r = omega + beta * (omega * r1 + (1.0 - omega) * r0)
    at, bt, ct, dt = terms(omega * p11 + (1.0 - omega) * p01)
    pas_s = 1.0 + beta * (at + ct * s1 + dt * s0)
    pas_r = beta * (bt + ct * r1 + dt * r0)
    return (act_r - pas_r) / (pas_s - act_s)


def whittle_index(omega: float, arm: ArmModel) -> float:
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"belief must lie in [0, 1], got {omega!r}")
    return arm.bandwidth * _unit_index(omega, arm.p11, arm.p01, arm.beta)


class IndexTable:
    """Index precomputed on a uniform belief grid, linearly interpolated."""

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-d and of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        self.grid = grid
        self.values = values
        self._vals = values.tolist()
        self._n = len(grid)
        self._uniform = bool(np.allclose(grid, np.linspace(grid[0], grid[-1], self._n)))

    @classmethod
    def for_arm(cls, arm: ArmModel, grid_size: int = 2001) -> "IndexTable":
        grid = np.linspace(0.0, 1.0, grid_size)
        return cls(grid, [whittle_index(float(w), arm) for w in grid])

    def __call__(self, omega: float) -> float:
        if not self._uniform:
            return float(np.interp(omega, self.grid, self.values))
        lo, hi = self.grid[0], self.grid[-1]
        pos = (omega - lo) / (hi - lo) * (self._n - 1)
        if pos <= 0.0:
            return self._vals[0]
        k = int(pos)
        if k >= self._n - 1:
            return self._vals[-1]
        frac = pos - k
        return self._vals[k] + frac * (self._vals[k + 1] - self._vals[k])


@dataclass
class OracleSolution:
    grid: np.ndarray
    values: np.ndarray
    active: np.ndarray  # True where activating is (weakly) optimal
    iterations: int

    def value(self, omega: float) -> float:
        return float(np.interp(omega, self.grid, self.values))


def value_iteration_oracle(
    arm: ArmModel,
    lam: float,
    grid_size: int = 2001,
    tol: float = 1e-9,
    max_iter: int = 200_000,
) -> OracleSolution:
    """Subsidised single-arm value function by successive approximation."""
    if grid_size < 101:
        raise ValueError("grid_size must be >= 101")
    beta, b = arm.beta, arm.bandwidth
    grid = np.linspace(0.0, 1.0, grid_size)
    drift = grid * arm.p11 + (1.0 - grid) * arm.p01
    v = np.zeros(grid_size)
    # stop on the contraction bound ||V - V*|| <= beta/(1-beta) * ||dV||
    stop = tol * (1.0 - beta) / beta
    for it in range(1, max_iter + 1):
        v11 = np.interp(arm.p11, grid, v)
        v01 = np.interp(arm.p01, grid, v)
        passive = lam + beta * np.interp(drift, grid, v)
        active = grid * b + beta * (grid * v11 + (1.0 - grid) * v01)
        new = np.maximum(passive, active)
        residual = float(np.max(np.abs(new - v)))
        v = new
        if residual < stop:
            return OracleSolution(grid, v, active >= passive, it)
    raise ConvergenceError(residual, max_iter)


def oracle_index(omega: float, arm: ArmModel, grid_size: int = 2001, tol: float = 1e-7) -> float:
    """Indifference subsidy at ``omega`` found by bisection on the oracle."""

    def passive_gain(lam):
        sol = value_iteration_oracle(arm, lam, grid_size)
        v11, v01 = sol.value(arm.p11), sol.value(arm.p01)
        passive = lam + arm.beta * sol.value(omega * arm.p11 + (1.0 - omega) * arm.p01)
        active = omega * arm.bandwidth + arm.beta * (omega * v11 + (1.0 - omega) * v01)
        return passive - active

    lo, hi = -arm.bandwidth - 1.0, 2.0 * arm.bandwidth + 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if passive_gain(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
