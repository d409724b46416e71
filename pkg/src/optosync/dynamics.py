"""Classical mean-field equations of motion for the four setups.

Every system is written as a numba kernel ``kernel(t, y, p, out)`` acting on a
flat real state vector and a packed float parameter vector.  Conventions:

* cavity:     d(alpha)/dt = -i (delta + g u) alpha - (gamma/2) alpha + eps
* mechanics:  du/dt = v,  dv/dt = -omega^2 u - Gamma v + 2 omega g |alpha|^2
* B setups:   the weak resonator also feels ``2 omega_j k (u_s - r u_j)`` with
  ``r = zpf_ratio`` (ratio of weak to strong zero-point lengths).

With ``include_weak_backaction`` the weak cavities push on the shared
resonator (A setups), and in the B setups the strong resonator feels the
reaction of the spring, ``-2 omega_s k (u_s / r - u_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from numba import njit
from numba.extending import is_jitted

from .errors import LayoutMismatch
from .model import ModelParams, Setup

LAYOUTS: dict[Setup, tuple[str, ...]] = {
    Setup.CS_A: ("re_alpha_s", "im_alpha_s", "re_alpha_1", "im_alpha_1",
                 "re_alpha_2", "im_alpha_2", "u", "v"),
    Setup.CS_B: ("re_alpha_s", "im_alpha_s", "u_s", "v_s",
                 "re_alpha_1", "im_alpha_1", "u_1", "v_1",
                 "re_alpha_2", "im_alpha_2", "u_2", "v_2"),
    Setup.PS_A: ("re_alpha_s", "im_alpha_s", "re_alpha_w", "im_alpha_w", "u", "v"),
    Setup.PS_B: ("re_alpha_s", "im_alpha_s", "u_s", "v_s",
                 "re_alpha_w", "im_alpha_w", "u_w", "v_w"),
}


# ------------------------------------------------------------------ kernels

@njit(inline="always")
def _cavity(y, out, i, delta, gamma, g, eps, u):
    w = delta + g * u
    re = y[i]
    im = y[i + 1]
    out[i] = w * im - 0.5 * gamma * re + eps
    out[i + 1] = -w * re - 0.5 * gamma * im


@njit(inline="always")
def _intensity(y, i):
    return y[i] * y[i] + y[i + 1] * y[i + 1]


@njit(cache=True)
def cs_a_kernel(t, y, p, out):
    # p: [cav s, cav 1, cav 2 (delta, gamma, g, eps) x3, omega, Gamma, backaction]
    u = y[6]
    v = y[7]
    _cavity(y, out, 0, p[0], p[1], p[2], p[3], u)
    _cavity(y, out, 2, p[4], p[5], p[6], p[7], u)
    _cavity(y, out, 4, p[8], p[9], p[10], p[11], u)
    om = p[12]
    force = p[2] * _intensity(y, 0)
    if p[14] != 0.0:
        force += p[6] * _intensity(y, 2) + p[10] * _intensity(y, 4)
    out[6] = v
    out[7] = -om * om * u - p[13] * v + 2.0 * om * force


@njit(cache=True)
def cs_b_kernel(t, y, p, out):
    # p: [cav s, 1, 2 (x4)], omega_s, Gamma_s, omega_1, Gamma_1,
    #    omega_2, Gamma_2, k_1, k_2, zpf_ratio, backaction
    us = y[2]
    u1 = y[6]
    u2 = y[10]
    r = p[20]
    _cavity(y, out, 0, p[0], p[1], p[2], p[3], us)
    _cavity(y, out, 4, p[4], p[5], p[6], p[7], u1)
    _cavity(y, out, 8, p[8], p[9], p[10], p[11], u2)

    om = p[12]
    fs = 2.0 * om * p[2] * _intensity(y, 0)
    if p[21] != 0.0:
        fs -= 2.0 * om * (p[18] * (us / r - u1) + p[19] * (us / r - u2))
    out[2] = y[3]
    out[3] = -om * om * us - p[13] * y[3] + fs

    om = p[14]
    out[6] = y[7]
    out[7] = (-om * om * u1 - p[15] * y[7] + 2.0 * om * p[6] * _intensity(y, 4)
              + 2.0 * om * p[18] * (us - r * u1))
    om = p[16]
    out[10] = y[11]
    out[11] = (-om * om * u2 - p[17] * y[11] + 2.0 * om * p[10] * _intensity(y, 8)
               + 2.0 * om * p[19] * (us - r * u2))


@njit(cache=True)
def ps_a_kernel(t, y, p, out):
    # p: [cav s (x4), cav w (x4), omega, Gamma, backaction]
    u = y[4]
    v = y[5]
    _cavity(y, out, 0, p[0], p[1], p[2], p[3], u)
    _cavity(y, out, 2, p[4], p[5], p[6], p[7], u)
    om = p[8]
    force = p[2] * _intensity(y, 0)
    if p[10] != 0.0:
        force += p[6] * _intensity(y, 2)
    out[4] = v
    out[5] = -om * om * u - p[9] * v + 2.0 * om * force


@njit(cache=True)
def ps_b_kernel(t, y, p, out):
    # p: [cav s (x4), cav w (x4), omega_s, Gamma_s, omega_w, Gamma_w, k, zpf_ratio, backaction]
    us = y[2]
    uw = y[6]
    r = p[13]
    _cavity(y, out, 0, p[0], p[1], p[2], p[3], us)
    _cavity(y, out, 4, p[4], p[5], p[6], p[7], uw)

    om = p[8]
    fs = 2.0 * om * p[2] * _intensity(y, 0)
    if p[14] != 0.0:
        fs -= 2.0 * om * p[12] * (us / r - uw)
    out[2] = y[3]
    out[3] = -om * om * us - p[9] * y[3] + fs

    om = p[10]
    out[6] = y[7]
    out[7] = (-om * om * uw - p[11] * y[7] + 2.0 * om * p[6] * _intensity(y, 4)
              + 2.0 * om * p[12] * (us - r * uw))


KERNELS = {
    Setup.CS_A: cs_a_kernel,
    Setup.CS_B: cs_b_kernel,
    Setup.PS_A: ps_a_kernel,
    Setup.PS_B: ps_b_kernel,
}


def pack_params(p: ModelParams) -> np.ndarray:
    """Flatten ``p`` into the float vector its kernel expects."""
    vals: list[float] = []
    for name in p.setup.cavity_names:
        c = p.cavities[name]
        vals += [c.delta, c.gamma, c.g, c.eps]
    for name in p.setup.resonator_names:
        r = p.resonators[name]
        vals += [r.omega, r.damping]
    vals += [p.couplings[k] for k in p.setup.coupling_names]
    if p.setup in (Setup.CS_B, Setup.PS_B):
        vals.append(p.zpf_ratio)
    vals.append(1.0 if p.include_weak_backaction else 0.0)
    return np.asarray(vals, dtype=np.float64)


# ------------------------------------------------------------------ models

@dataclass(frozen=True, eq=False)
class Model:
    """A vector field ``kernel(t, y, params, out)`` plus its state layout.

    ``kernel`` may be a numba ``@njit`` function (fast path in the
    integrators) or any plain Python callable with the same signature.
    """

    name: str
    kernel: Callable
    params: np.ndarray
    channels: tuple[str, ...]
    period: float | None = None  # slowest natural period, sets default LLE intervals

    @property
    def dim(self) -> int:
        return len(self.channels)

    @property
    def jitted(self) -> bool:
        return is_jitted(self.kernel)

    def index(self, channel: str) -> int:
        try:
            return self.channels.index(channel)
        except ValueError:
            from .errors import UnknownChannel
            raise UnknownChannel(f"model {self.name!r} has no channel {channel!r}") from None

    def check_state(self, state) -> np.ndarray:
        y = np.ascontiguousarray(state, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != self.dim:
            raise LayoutMismatch(
                f"{self.name}: state has shape {y.shape}, layout needs ({self.dim},)")
        return y

    def rhs(self, t: float, state) -> np.ndarray:
        y = self.check_state(state)
        out = np.empty_like(y)
        self.kernel(float(t), y, self.params, out)
        return out


def build_model(p: ModelParams) -> Model:
    slowest = min(r.omega for r in p.resonators.values())
    return Model(p.setup.value, KERNELS[p.setup], pack_params(p), LAYOUTS[p.setup],
                 period=2.0 * np.pi / slowest)


def _evaluate(setup: Setup, state, p: ModelParams) -> np.ndarray:
    if p.setup is not setup:
        raise LayoutMismatch(f"parameters are for {p.setup.value}, expected {setup.value}")
    return build_model(p).rhs(0.0, state)


def rhs_cs_a(state, p: ModelParams) -> np.ndarray:
    """Time derivative of a CS_A state (one resonator shared by s, 1, 2)."""
    return _evaluate(Setup.CS_A, state, p)


def rhs_cs_b(state, p: ModelParams) -> np.ndarray:
    """Time derivative of a CS_B state (three resonators, weak ones spring-coupled to s)."""
    return _evaluate(Setup.CS_B, state, p)


def rhs_ps_a(state, p: ModelParams) -> np.ndarray:
    return _evaluate(Setup.PS_A, state, p)


def rhs_ps_b(state, p: ModelParams) -> np.ndarray:
    return _evaluate(Setup.PS_B, state, p)


RHS = {
    Setup.CS_A: rhs_cs_a,
    Setup.CS_B: rhs_cs_b,
    Setup.PS_A: rhs_ps_a,
    Setup.PS_B: rhs_ps_b,
}


def make_state(setup: Setup | str, alpha: Mapping[str, complex] | None = None,
               mech: Mapping[str, tuple[float, float]] | None = None) -> np.ndarray:
    """Assemble a state vector from complex cavity amplitudes and (u, v) pairs.

    Unspecified entries are zero.  ``mech`` keys are resonator names
    (``"m"`` for the shared resonator of the A setups).
    """
    setup = Setup(setup)
    layout = LAYOUTS[setup]
    y = np.zeros(len(layout))
    for name, a in (alpha or {}).items():
        if name not in setup.cavity_names:
            raise LayoutMismatch(f"{setup.value} has no cavity {name!r}")
        y[layout.index(f"re_alpha_{name}")] = complex(a).real
        y[layout.index(f"im_alpha_{name}")] = complex(a).imag
    for name, (u, v) in (mech or {}).items():
        if name not in setup.resonator_names:
            raise LayoutMismatch(f"{setup.value} has no resonator {name!r}")
        suffix = "" if name == "m" else f"_{name}"
        y[layout.index(f"u{suffix}")] = u
        y[layout.index(f"v{suffix}")] = v
    return y


def subsystem_channels(setup: Setup | str, mode: str) -> tuple[str, ...]:
    """Channels of one cavity together with the resonator it couples to."""
    setup = Setup(setup)
    if setup in (Setup.CS_A, Setup.PS_A):
        mech = ("u", "v")
    else:
        mech = (f"u_{mode}", f"v_{mode}")
    return (f"re_alpha_{mode}", f"im_alpha_{mode}") + mech


# ------------------------------------------------------- reference systems

@njit(cache=True)
def lorenz_kernel(t, y, p, out):
    sigma, rho, beta = p[0], p[1], p[2]
    out[0] = sigma * (y[1] - y[0])
    out[1] = y[0] * (rho - y[2]) - y[1]
    out[2] = y[0] * y[1] - beta * y[2]


@njit(cache=True)
def linear_cavity_kernel(t, y, p, out):
    # d(alpha)/dt = -(i delta + gamma/2) alpha + eps; gamma < 0 antidamps
    _cavity(y, out, 0, p[0], p[1], 0.0, p[2], 0.0)


@njit(cache=True)
def oscillator_kernel(t, y, p, out):
    out[0] = y[1]
    out[1] = -p[0] * p[0] * y[0] - p[1] * y[1]


@njit(cache=True)
def zero_kernel(t, y, p, out):
    for i in range(y.shape[0]):
        out[i] = 0.0


def lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> Model:
    return Model("lorenz", lorenz_kernel, np.array([sigma, rho, beta]), ("x", "y", "z"))


def linear_cavity(delta: float, gamma: float, eps: float = 0.0) -> Model:
    return Model("linear_cavity", linear_cavity_kernel,
                 np.array([delta, gamma, eps], dtype=np.float64), ("re_alpha", "im_alpha"))


def oscillator(omega: float = 1.0, damping: float = 0.0) -> Model:
    return Model("oscillator", oscillator_kernel, np.array([omega, damping], dtype=np.float64),
                 ("u", "v"), period=2.0 * np.pi / omega)


def zero_field(dim: int) -> Model:
    return Model("zero", zero_kernel, np.zeros(1), tuple(f"y{i}" for i in range(dim)))
