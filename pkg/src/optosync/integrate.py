"""Fixed-step RK4 and adaptive RKF45 time integration onto a uniform output grid."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .dynamics import Model
from .errors import NonFiniteState, OptosyncError, UnknownChannel

DEFAULT_DT = 1e-3        # ns
DEFAULT_DISCARD = 500.0  # ns


class Method(str, enum.Enum):
    RK4 = "RK4"
    RKF45 = "RKF45"


@dataclass(frozen=True)
class IntegrationPlan:
    t0: float = 0.0
    t1: float = 2500.0
    dt: float = DEFAULT_DT
    sample_stride: int = 1
    discard: float = DEFAULT_DISCARD
    method: Method = Method.RK4
    rtol: float = 1e-10
    atol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ValueError(f"need t1 > t0, got t0={self.t0}, t1={self.t1}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValueError(f"sample_stride must be an integer >= 1, got {self.sample_stride}")
        object.__setattr__(self, "sample_stride", int(self.sample_stride))
        if not 0 <= self.discard < self.t1 - self.t0:
            raise ValueError(f"discard must lie in [0, t1 - t0), got {self.discard}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("RKF45 tolerances must be positive")

    @property
    def n_steps(self) -> int:
        return int(math.floor((self.t1 - self.t0) / self.dt + 1e-9))

    @property
    def discard_steps(self) -> int:
        # first recorded step is the first at or after t0 + discard
        return min(int(math.ceil(self.discard / self.dt - 1e-9)), self.n_steps)

    @property
    def n_samples(self) -> int:
        return (self.n_steps - self.discard_steps) // self.sample_stride + 1

    @property
    def sample_dt(self) -> float:
        return self.dt * self.sample_stride

    def times(self) -> np.ndarray:
        idx = self.discard_steps + self.sample_stride * np.arange(self.n_samples)
        return self.t0 + idx * self.dt

    def to_dict(self) -> dict:
        return {
            "t0": self.t0, "t1": self.t1, "dt": self.dt,
            "sample_stride": self.sample_stride, "discard": self.discard,
            "method": self.method.value, "rtol": self.rtol, "atol": self.atol,
        }


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled orbit.  ``states[i]`` is the state at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    channels: tuple[str, ...]
    plan: IntegrationPlan | None = None
    final_state: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def dt(self) -> float:
        if len(self.times) < 2:
            return self.plan.sample_dt if self.plan else float("nan")
        return float(self.times[1] - self.times[0])

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.states[:, self.channels.index(name)]
        except ValueError:
            raise UnknownChannel(f"trajectory has no channel {name!r}") from None

    def complex_channel(self, mode: str) -> np.ndarray:
        """Cavity amplitude ``alpha_mode`` as a complex series."""
        return self.channel(f"re_alpha_{mode}") + 1j * self.channel(f"im_alpha_{mode}")

    def window(self, start: float | None = None, stop: float | None = None) -> "Trajectory":
        lo = 0 if start is None else int(np.searchsorted(self.times, start, side="left"))
        hi = len(self.times) if stop is None else int(np.searchsorted(self.times, stop, side="right"))
        return replace(self, times=self.times[lo:hi], states=self.states[lo:hi])


# ------------------------------------------------------------------ RK4 core

@njit(cache=True)
def _rk4_step(kernel, t, y, p, dt, k1, k2, k3, k4, tmp):
    m = y.shape[0]
    kernel(t, y, p, k1)
    for q in range(m):
        tmp[q] = y[q] + 0.5 * dt * k1[q]
    kernel(t + 0.5 * dt, tmp, p, k2)
    for q in range(m):
        tmp[q] = y[q] + 0.5 * dt * k2[q]
    kernel(t + 0.5 * dt, tmp, p, k3)
    for q in range(m):
        tmp[q] = y[q] + dt * k3[q]
    kernel(t + dt, tmp, p, k4)
    h6 = dt / 6.0
    for q in range(m):
        y[q] += h6 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])


@njit(cache=True)
def _all_finite(y):
    for q in range(y.shape[0]):
        if not np.isfinite(y[q]):
            return False
    return True


@njit(cache=True)
def _rk4_run(kernel, y0, p, t0, dt, n_steps, first, stride, cols, out):
    """Integrate ``n_steps``; record ``y[cols]`` at steps first, first+stride, ...

    Returns -1 on success, otherwise the step index at which the state
    first became non-finite.  ``y0`` is overwritten with the final state.
    """
    m = y0.shape[0]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    y = y0
    j = 0
    if first == 0:
        for c in range(cols.shape[0]):
            out[0, c] = y[cols[c]]
        j = 1
    for i in range(1, n_steps + 1):
        _rk4_step(kernel, t0 + (i - 1) * dt, y, p, dt, k1, k2, k3, k4, tmp)
        if not _all_finite(y):
            return i
        if i >= first and (i - first) % stride == 0:
            for c in range(cols.shape[0]):
                out[j, c] = y[cols[c]]
            j += 1
    return -1


def step_rk4(rhs, state, t: float, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``dy/dt = rhs(t, y)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    y = np.asarray(state, dtype=np.float64)
    k1 = np.asarray(rhs(t, y))
    k2 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k1))
    k3 = np.asarray(rhs(t + 0.5 * dt, y + 0.5 * dt * k2))
    k4 = np.asarray(rhs(t + dt, y + dt * k3))
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(t + dt)
    return out


def _python_rk4_run(model, y, t0, dt, n_steps, first, stride, cols, out):
    rhs = model.rhs
    j = 0
    if first == 0:
        out[0] = y[cols]
        j = 1
    for i in range(1, n_steps + 1):
        try:
            y[:] = step_rk4(rhs, y, t0 + (i - 1) * dt, dt)
        except NonFiniteState:
            return i
        if i >= first and (i - first) % stride == 0:
            out[j] = y[cols]
            j += 1
    return -1


def _columns(model: Model, channels) -> tuple[np.ndarray, tuple[str, ...]]:
    if channels is None:
        return np.arange(model.dim, dtype=np.int64), tuple(model.channels)
    channels = tuple(channels)
    return np.array([model.index(c) for c in channels], dtype=np.int64), channels


def integrate(model: Model, ic, plan: IntegrationPlan, channels=None) -> Trajectory:
    """Integrate ``model`` from ``ic`` with fixed-step RK4 and return the post-discard orbit.

    ``channels`` optionally restricts which state components are stored.
    Identical inputs give bit-identical output.
    """
    if plan.method is Method.RKF45:
        return integrate_adaptive(model, ic, plan, channels)
    y = model.check_state(ic).copy()
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(plan.t0, "initial condition is not finite")
    cols, names = _columns(model, channels)
    out = np.empty((plan.n_samples, len(cols)))
    args = (y, plan.t0, plan.dt, plan.n_steps, plan.discard_steps, plan.sample_stride, cols, out)
    if model.jitted:
        status = _rk4_run(model.kernel, y, model.params, *args[1:])
    else:
        status = _python_rk4_run(model, *args)
    if status >= 0:
        raise NonFiniteState(plan.t0 + status * plan.dt)
    return Trajectory(plan.times(), out, names, plan, y)


def advance(model: Model, state, duration: float, dt: float = DEFAULT_DT) -> np.ndarray:
    """Final state after integrating exactly ``duration`` ns (nothing recorded).

    The step is shrunk, never grown, so that a whole number of steps fits.
    """
    n = max(1, int(math.ceil(duration / dt - 1e-9)))
    h = duration / n
    plan = IntegrationPlan(0.0, n * h, h, sample_stride=1, discard=(n - 0.5) * h)
    return integrate(model, state, plan, channels=()).final_state


# ------------------------------------------------------------------ RKF45

# Fehlberg 4(5) tableau
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = np.array([
    [0, 0, 0, 0, 0],
    [1 / 4, 0, 0, 0, 0],
    [3 / 32, 9 / 32, 0, 0, 0],
    [1932 / 2197, -7200 / 2197, 7296 / 2197, 0, 0],
    [439 / 216, -8, 3680 / 513, -845 / 4104, 0],
    [-8 / 27, 2, -3544 / 2565, 1859 / 4104, -11 / 40],
])
_B4 = np.array([25 / 216, 0, 1408 / 2565, 2197 / 4104, -1 / 5, 0])
_B5 = np.array([16 / 135, 0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])


@njit(cache=True)
def _rkf45_run(kernel, y, p, t0, t1, h0, rtol, atol, grid, cols, out, max_steps):
    """Adaptive RKF45 (4th-order propagation) with cubic Hermite dense output.

    Fills ``out`` at times ``grid`` (ascending, within [t0, t1]).  Returns
    (status, accepted, rejected); status -1 on success, -2 if max_steps was
    hit, otherwise the index of the grid point at which the state blew up.
    """
    m = y.shape[0]
    k = np.empty((6, m))
    tmp = np.empty(m)
    y4 = np.empty(m)
    f0 = np.empty(m)
    f1 = np.empty(m)
    t = t0
    h = h0
    g = 0
    ng = grid.shape[0]
    while g < ng and grid[g] <= t0:
        for c in range(cols.shape[0]):
            out[g, c] = y[cols[c]]
        g += 1
    accepted = 0
    rejected = 0
    kernel(t, y, p, f0)
    while t < t1 and accepted + rejected < max_steps:
        if t + h > t1:
            h = t1 - t
        for q in range(m):
            k[0, q] = f0[q]
        for s in range(1, 6):
            for q in range(m):
                acc = y[q]
                for r in range(s):
                    acc += h * _A[s, r] * k[r, q]
                tmp[q] = acc
            kernel(t + _C[s] * h, tmp, p, k[s])
        err = 0.0
        for q in range(m):
            a4 = y[q]
            a5 = y[q]
            for s in range(6):
                a4 += h * _B4[s] * k[s, q]
                a5 += h * _B5[s] * k[s, q]
            y4[q] = a4
            sc = atol + rtol * max(abs(y[q]), abs(a4))
            e = abs(a5 - a4) / sc
            if e > err:
                err = e
        if not np.isfinite(err):
            err = 1e10
        if err <= 1.0:
            kernel(t + h, y4, p, f1)
            # dense output on (t, t + h]
            while g < ng and grid[g] <= t + h:
                th = (grid[g] - t) / h
                h10 = th * (1 - th) ** 2
                h01 = th * th * (3 - 2 * th)
                h11 = th * th * (th - 1)
                for c in range(cols.shape[0]):
                    q = cols[c]
                    out[g, c] = y[q] + h01 * (y4[q] - y[q]) + h * (h10 * f0[q] + h11 * f1[q])
                g += 1
            t += h
            for q in range(m):
                y[q] = y4[q]
                f0[q] = f1[q]
            if not _all_finite(y):
                return g, accepted, rejected
            accepted += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejected += 1
            fac = max(0.1, 0.9 * err ** -0.25)
        h *= fac
    if t < t1:
        return -2, accepted, rejected
    while g < ng:
        for c in range(cols.shape[0]):
            out[g, c] = y[cols[c]]
        g += 1
    return -1, accepted, rejected


def _python_rkf45_run(model, y, t0, t1, h0, rtol, atol, grid, cols, out, max_steps):
    # slow path for plain-Python vector fields; same algorithm as _rkf45_run
    rhs = model.rhs
    t, h, g = t0, h0, 0
    while g < len(grid) and grid[g] <= t0:
        out[g] = y[cols]
        g += 1
    accepted = rejected = 0
    f0 = rhs(t, y)
    while t < t1 and accepted + rejected < max_steps:
        h = min(h, t1 - t)
        ks = [f0]
        for s in range(1, 6):
            ks.append(rhs(t + _C[s] * h, y + h * sum(_A[s, r] * ks[r] for r in range(s))))
        ks = np.array(ks)
        y4 = y + h * (_B4 @ ks)
        y5 = y + h * (_B5 @ ks)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y4))
        err = float(np.max(np.abs(y5 - y4) / sc))
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            f1 = rhs(t + h, y4)
            while g < len(grid) and grid[g] <= t + h:
                th = (grid[g] - t) / h
                out[g] = (y[cols] + th * th * (3 - 2 * th) * (y4[cols] - y[cols])
                          + h * (th * (1 - th) ** 2 * f0[cols] + th * th * (th - 1) * f1[cols]))
                g += 1
            t += h
            y[:] = y4
            f0 = f1
            if not np.all(np.isfinite(y)):
                return g, accepted, rejected
            accepted += 1
            h *= 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejected += 1
            h *= max(0.1, 0.9 * err ** -0.25)
    if t < t1:
        return -2, accepted, rejected
    out[g:] = y[cols]
    return -1, accepted, rejected


def integrate_adaptive(model: Model, ic, plan: IntegrationPlan, channels=None,
                       max_steps: int = 50_000_000) -> Trajectory:
    """RKF45 with step-size control, resampled onto the same grid as :func:`integrate`.

    ``plan.dt`` only sets the output grid and the first trial step.  The
    returned ``meta`` records accepted and rejected step counts.
    """
    y = model.check_state(ic).copy()
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(plan.t0, "initial condition is not finite")
    cols, names = _columns(model, channels)
    grid = plan.times()
    out = np.empty((len(grid), len(cols)))
    args = (y, plan.t0, plan.t1, plan.dt, plan.rtol, plan.atol, grid, cols, out, max_steps)
    if model.jitted:
        status, acc, rej = _rkf45_run(model.kernel, y, model.params, *args[1:])
    else:
        status, acc, rej = _python_rkf45_run(model, *args)
    if status == -2:
        raise OptosyncError(f"RKF45 exceeded {max_steps} steps")
    if status >= 0:
        raise NonFiniteState(float(grid[min(status, len(grid) - 1)]))
    return Trajectory(grid, out, names, plan, y, {"accepted_steps": acc, "rejected_steps": rej})

