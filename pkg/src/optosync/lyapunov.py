"""Largest Lyapunov exponent by two-trajectory renormalization (Wolf) and by a
tangent vector propagated along the orbit (Benettin).

Both estimators evolve the full state but may measure separations on a subset
of channels, e.g. the weak cavity plus its resonator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import Model
from .errors import DegenerateSeparation, NonFiniteState
from .integrate import DEFAULT_DT, _all_finite, _rk4_step, advance

_OK, _NONFINITE, _DEGENERATE = 0, 1, 2
_UNMEASURED_CAP = 1e100


class LleMethod(str, enum.Enum):
    WOLF = "WOLF"
    BENETTIN = "BENETTIN"

    @classmethod
    def coerce(cls, value) -> "LleMethod":
        return value if isinstance(value, cls) else cls(str(value).upper())


@dataclass(frozen=True)
class LleOptions:
    t_total: float = 1000.0          # ns of accumulation
    discard: float = 500.0           # ns integrated before accumulation starts
    dt: float = DEFAULT_DT
    renorm_interval: float | None = None  # default: a quarter of the model's period
    d0: float = 1e-8                 # initial separation, relative to max(|y|, 1)
    channels: tuple[str, ...] | None = None
    n_blocks: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.channels is not None:
            object.__setattr__(self, "channels", tuple(self.channels))
        if not (self.t_total > 0 and self.dt > 0 and self.d0 > 0):
            raise ValueError("t_total, dt and d0 must be positive")
        if self.discard < 0:
            raise ValueError("discard must be >= 0")
        if self.n_blocks < 2:
            raise ValueError("need at least two blocks for a standard error")

    def to_dict(self) -> dict:
        return {
            "t_total": self.t_total, "discard": self.discard, "dt": self.dt,
            "renorm_interval": self.renorm_interval, "d0": self.d0,
            "channels": list(self.channels) if self.channels is not None else None,
            "n_blocks": self.n_blocks, "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class LleEstimate:
    lle: float                 # 1/ns (1/time unit of the model)
    stderr: float
    n_renormalizations: int
    method: LleMethod
    convergence: np.ndarray    # running estimate after each renormalization
    renorm_interval: float
    channels: tuple[str, ...] = ()
    local_rates: np.ndarray = field(default=None, repr=False)

    @property
    def is_chaotic(self) -> bool:
        return self.lle > 0

    def to_dict(self) -> dict:
        return {
            "lle": self.lle,
            "stderr": self.stderr,
            "n_renormalizations": self.n_renormalizations,
            "method": self.method.value,
            "renorm_interval": self.renorm_interval,
            "channels": list(self.channels),
        }


# ----------------------------------------------------------------- kernels

@njit(cache=True)
def _masked_norm(a, mask):
    acc = 0.0
    for q in range(a.shape[0]):
        if mask[q]:
            acc += a[q] * a[q]
    return math.sqrt(acc)


@njit(cache=True)
def _wolf_run(kernel, y, z, p, t0, dt, n_int, spi, mask, d_rel, rates):
    # the companion is reset to d_rel * max(|y|, 1) after each interval, so the
    # separation stays resolvable when the orbit itself grows or shrinks
    m = y.shape[0]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    t = t0
    tau = spi * dt
    for q in range(m):
        tmp[q] = z[q] - y[q]
    d_prev = _masked_norm(tmp, mask)
    for r in range(n_int):
        for i in range(spi):
            _rk4_step(kernel, t, y, p, dt, k1, k2, k3, k4, tmp)
            _rk4_step(kernel, t, z, p, dt, k1, k2, k3, k4, tmp)
            t += dt
        if not (_all_finite(y) and _all_finite(z)):
            return _NONFINITE, r
        for q in range(m):
            tmp[q] = z[q] - y[q]
        d = _masked_norm(tmp, mask)
        if d == 0.0 or not np.isfinite(d):
            return _DEGENERATE, r
        rates[r] = math.log(d / d_prev) / tau
        yn = 0.0
        for q in range(m):
            yn += y[q] * y[q]
        scale = d_rel * max(math.sqrt(yn), 1.0) / d
        for q in range(m):
            z[q] = y[q] + tmp[q] * scale
        for q in range(m):
            tmp[q] = z[q] - y[q]
        d_prev = _masked_norm(tmp, mask)
        if d_prev == 0.0:
            return _DEGENERATE, r
    return _OK, n_int


@njit(cache=True)
def _fd_dir(kernel, t, y, w, p, h_rel, sel, want, fp, fm, yp, out):
    # adds J(y) w_sel to out, w_sel = w restricted to channels where sel == want
    m = y.shape[0]
    wn = 0.0
    yn = 0.0
    for q in range(m):
        if sel[q] == want:
            wn += w[q] * w[q]
        yn += y[q] * y[q]
    if wn == 0.0:
        return
    h = h_rel * max(math.sqrt(yn), 1.0) / math.sqrt(wn)
    for q in range(m):
        yp[q] = y[q] + h * w[q] if sel[q] == want else y[q]
    kernel(t, yp, p, fp)
    for q in range(m):
        yp[q] = y[q] - h * w[q] if sel[q] == want else y[q]
    kernel(t, yp, p, fm)
    for q in range(m):
        out[q] += (fp[q] - fm[q]) / (2.0 * h)


@njit(cache=True)
def _jvp(kernel, t, y, w, p, h_rel, mask, fp, fm, yp, out):
    # J(y) w by central differences, taken separately along the measured and
    # unmeasured parts of w so each gets a step matched to its own size
    for q in range(y.shape[0]):
        out[q] = 0.0
    _fd_dir(kernel, t, y, w, p, h_rel, mask, True, fp, fm, yp, out)
    _fd_dir(kernel, t, y, w, p, h_rel, mask, False, fp, fm, yp, out)


@njit(cache=True)
def _tangent_step(kernel, t, y, w, p, dt, h_rel, mask, ky, kw, ys, ws, fp, fm, yp):
    # RK4 on the augmented system (y, w), dw/dt = J(y) w
    m = y.shape[0]
    for s in range(4):
        if s == 0:
            c = 0.0
            for q in range(m):
                ys[q] = y[q]
                ws[q] = w[q]
        else:
            c = 1.0 if s == 3 else 0.5
            for q in range(m):
                ys[q] = y[q] + c * dt * ky[s - 1, q]
                ws[q] = w[q] + c * dt * kw[s - 1, q]
        kernel(t + c * dt, ys, p, ky[s])
        _jvp(kernel, t + c * dt, ys, ws, p, h_rel, mask, fp, fm, yp, kw[s])
    h6 = dt / 6.0
    for q in range(m):
        y[q] += h6 * (ky[0, q] + 2.0 * ky[1, q] + 2.0 * ky[2, q] + ky[3, q])
        w[q] += h6 * (kw[0, q] + 2.0 * kw[1, q] + 2.0 * kw[2, q] + kw[3, q])


@njit(cache=True)
def _benettin_run(kernel, y, w, p, t0, dt, n_int, spi, mask, h_rel, rates):
    m = y.shape[0]
    ky = np.empty((4, m))
    kw = np.empty((4, m))
    ys = np.empty(m)
    ws = np.empty(m)
    fp = np.empty(m)
    fm = np.empty(m)
    yp = np.empty(m)
    t = t0
    tau = spi * dt
    for r in range(n_int):
        for i in range(spi):
            _tangent_step(kernel, t, y, w, p, dt, h_rel, mask, ky, kw, ys, ws, fp, fm, yp)
            t += dt
        if not (_all_finite(y) and _all_finite(w)):
            return _NONFINITE, r
        d = _masked_norm(w, mask)
        if d == 0.0 or not np.isfinite(d):
            return _DEGENERATE, r
        rates[r] = math.log(d) / tau
        for q in range(m):
            w[q] /= d
        # unmeasured channels decoupled from the measured ones would otherwise
        # grow without bound; a part 1e100 times larger than the measured one
        # cannot be driving it, so shrinking it leaves the estimate intact
        full = 0.0
        for q in range(m):
            full += w[q] * w[q]
        full = math.sqrt(full)
        if full > _UNMEASURED_CAP:
            c = _UNMEASURED_CAP / full
            for q in range(m):
                if not mask[q]:
                    w[q] *= c
    return _OK, n_int


# ----------------------------------------------------------------- drivers

def _prepare(model: Model, ic, opts: LleOptions):
    if not model.jitted:
        raise TypeError("Lyapunov estimators need a numba-compiled vector field")
    y = model.check_state(ic).copy()
    if opts.discard > 0:
        y = advance(model, y, opts.discard, opts.dt)
    tau = opts.renorm_interval
    if tau is None:
        if model.period is None:
            raise ValueError(f"model {model.name!r} has no natural period; set renorm_interval")
        tau = 0.25 * model.period
    spi = max(1, int(round(tau / opts.dt)))
    tau = spi * opts.dt
    n_int = int(math.floor(opts.t_total / tau + 1e-9))
    if n_int < opts.n_blocks:
        raise ValueError(f"t_total allows {n_int} renormalizations, fewer than n_blocks={opts.n_blocks}")
    channels = tuple(model.channels) if opts.channels is None else opts.channels
    mask = np.zeros(model.dim, dtype=np.bool_)
    for c in channels:
        mask[model.index(c)] = True
    # the perturbation spans the full state so that separation growing in
    # unmeasured channels (e.g. a driving branch) can feed the measured ones
    rng = np.random.default_rng(opts.seed)
    direction = rng.standard_normal(model.dim)
    direction /= np.linalg.norm(direction[mask])
    return y, direction, mask, spi, tau, n_int, channels


def _finish(status, where, rates, n_int, tau, method, opts, channels, t_start):
    if status == _NONFINITE:
        raise NonFiniteState(t_start + (where + 1) * tau)
    if status == _DEGENERATE:
        raise DegenerateSeparation(
            f"separation collapsed below representable precision after {where} renormalizations")
    running = np.cumsum(rates) / np.arange(1, n_int + 1)
    lle = float(running[-1])
    usable = n_int - n_int % opts.n_blocks
    blocks = rates[n_int - usable:].reshape(opts.n_blocks, -1).mean(axis=1)
    stderr = float(blocks.std(ddof=1) / math.sqrt(opts.n_blocks))
    return LleEstimate(lle, stderr, n_int, method, running, tau, channels, rates)


def lle_wolf(model: Model, ic, opts: LleOptions = LleOptions()) -> LleEstimate:
    """Two-trajectory estimate: a companion orbit is kept ``d0`` away from the
    fiducial, rescaled along the separation after each interval, and the
    mean log stretching rate is reported."""
    y, direction, mask, spi, tau, n_int, channels = _prepare(model, ic, opts)
    d0 = opts.d0 * max(float(np.linalg.norm(y)), 1.0)
    z = y + d0 * direction
    if np.array_equal(z, y):
        raise DegenerateSeparation("d0 is below the floating-point resolution of the state")
    rates = np.empty(n_int)
    status, where = _wolf_run(model.kernel, y, z, model.params, opts.discard, opts.dt,
                              n_int, spi, mask, opts.d0, rates)
    return _finish(status, where, rates, n_int, tau, LleMethod.WOLF, opts, channels, opts.discard)


def lle_benettin(model: Model, ic, opts: LleOptions = LleOptions(),
                 fd_step: float = 1e-6) -> LleEstimate:
    """Tangent-vector estimate.  The linearized flow is integrated alongside
    the orbit with ``J(y) w`` taken as a central directional difference of
    the vector field; ``w`` is renormalized after each interval."""
    y, w, mask, spi, tau, n_int, channels = _prepare(model, ic, opts)
    rates = np.empty(n_int)
    status, where = _benettin_run(model.kernel, y, w, model.params, opts.discard, opts.dt,
                                  n_int, spi, mask, fd_step, rates)
    return _finish(status, where, rates, n_int, tau, LleMethod.BENETTIN, opts, channels,
                   opts.discard)


def estimate_lle(model: Model, ic, opts: LleOptions = LleOptions(),
                 method: LleMethod | str = LleMethod.WOLF) -> LleEstimate:
    method = LleMethod.coerce(method)
    return lle_wolf(model, ic, opts) if method is LleMethod.WOLF else lle_benettin(model, ic, opts)
