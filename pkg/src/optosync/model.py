"""Canonical units and parameter containers for the four optomechanical setups.

Internal units: time in ns, every rate in rad/ns.  Mechanical displacement is
carried as ``u = x / x_zpf`` and cavity amplitudes as dimensionless complex
numbers, so masses and zero-point lengths never enter the equations of motion
(only the ratio of zero-point lengths between coupled resonators survives, as
``zpf_ratio``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
from scipy.constants import hbar as HBAR

from .errors import EmptyTrajectory, MissingParameter, NonPositiveInput, NonPositiveRate, ParameterError

#: Hz -> rad/ns
HZ_TO_RAD_PER_NS = 2.0 * math.pi * 1e-9


class Setup(str, enum.Enum):
    CS_A = "CS_A"
    CS_B = "CS_B"
    PS_A = "PS_A"
    PS_B = "PS_B"

    @property
    def cavity_names(self) -> tuple[str, ...]:
        return ("s", "1", "2") if self in (Setup.CS_A, Setup.CS_B) else ("s", "w")

    @property
    def resonator_names(self) -> tuple[str, ...]:
        return {
            Setup.CS_A: ("m",),
            Setup.CS_B: ("s", "1", "2"),
            Setup.PS_A: ("m",),
            Setup.PS_B: ("s", "w"),
        }[self]

    @property
    def coupling_names(self) -> tuple[str, ...]:
        return {Setup.CS_B: ("k_1", "k_2"), Setup.PS_B: ("k",)}.get(self, ())

    @property
    def weak_mode(self) -> str:
        """Cavity whose phase/regime is compared against the strong mode."""
        return "1" if self in (Setup.CS_A, Setup.CS_B) else "w"


@dataclass(frozen=True)
class RateInput:
    """A rate quoted as an ordinary frequency ``f`` (Hz), i.e. ``X/2pi = f``."""

    label: str
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise NonPositiveRate(self.label, self.value)


@dataclass(frozen=True)
class Cavity:
    delta: float  # detuning, rad/ns, any sign
    gamma: float  # amplitude damping, rad/ns
    g: float      # single-photon optomechanical coupling, rad/ns
    eps: float    # drive strength, rad/ns


@dataclass(frozen=True)
class Resonator:
    omega: float    # natural frequency, rad/ns
    damping: float  # Gamma, rad/ns


@dataclass(frozen=True)
class ModelParams:
    setup: Setup
    cavities: Mapping[str, Cavity]
    resonators: Mapping[str, Resonator]
    couplings: Mapping[str, float] = field(default_factory=dict)
    zpf_ratio: float = 1.0
    include_weak_backaction: bool = False

    def __post_init__(self):
        setup = Setup(self.setup)
        object.__setattr__(self, "setup", setup)
        object.__setattr__(self, "cavities", dict(self.cavities))
        object.__setattr__(self, "resonators", dict(self.resonators))
        object.__setattr__(self, "couplings", {k: float(v) for k, v in self.couplings.items()})
        _check_names("cavities", self.cavities, setup.cavity_names, setup)
        _check_names("resonators", self.resonators, setup.resonator_names, setup)
        _check_names("couplings", self.couplings, setup.coupling_names, setup)

        for name, cav in self.cavities.items():
            _finite(f"delta_{name}", cav.delta)
            _positive(f"gamma_{name}", cav.gamma)
            _nonneg(f"g_{name}", cav.g)
            _nonneg(f"eps_{name}", cav.eps)
        for name, res in self.resonators.items():
            _positive(f"omega_{name}", res.omega)
            _positive(f"Gamma_{name}", res.damping)
        for name, k in self.couplings.items():
            _nonneg(name, k)
        _positive("zpf_ratio", self.zpf_ratio)
        if setup is Setup.CS_B and self.couplings["k_1"] != self.couplings["k_2"]:
            raise ParameterError("CS_B requires identical mechanical couplings k_1 == k_2")

    def cavity(self, name: str) -> Cavity:
        return self.cavities[name]

    def resonator(self, name: str) -> Resonator:
        return self.resonators[name]

    def with_cavity(self, name: str, **changes) -> "ModelParams":
        cavities = dict(self.cavities)
        cavities[name] = replace(cavities[name], **changes)
        return replace(self, cavities=cavities)

    def with_resonator(self, name: str, **changes) -> "ModelParams":
        resonators = dict(self.resonators)
        resonators[name] = replace(resonators[name], **changes)
        return replace(self, resonators=resonators)

    def with_couplings(self, **changes) -> "ModelParams":
        couplings = dict(self.couplings)
        couplings.update(changes)
        return replace(self, couplings=couplings)

    def to_hz(self) -> dict[str, float]:
        """Inverse of :func:`to_angular`: every rate as ordinary frequency in Hz."""
        out = {}
        for name, cav in self.cavities.items():
            out[f"delta_{name}"] = cav.delta / HZ_TO_RAD_PER_NS
            out[f"gamma_{name}"] = cav.gamma / HZ_TO_RAD_PER_NS
            out[f"g_{name}"] = cav.g / HZ_TO_RAD_PER_NS
            out[f"eps_{name}"] = cav.eps / HZ_TO_RAD_PER_NS
        for name, res in self.resonators.items():
            out[f"omega_{name}"] = res.omega / HZ_TO_RAD_PER_NS
            out[f"Gamma_{name}"] = res.damping / HZ_TO_RAD_PER_NS
        for name, k in self.couplings.items():
            out[name] = k / HZ_TO_RAD_PER_NS
        return out


def _check_names(kind, given, expected, setup):
    missing = [n for n in expected if n not in given]
    if missing:
        raise MissingParameter(f"{kind}[{missing[0]!r}]", setup.value)
    extra = sorted(set(given) - set(expected))
    if extra:
        raise ParameterError(f"setup {setup.value} has no {kind} {extra}")


def _finite(name, value):
    if not math.isfinite(value):
        raise ParameterError(f"parameter {name!r} must be finite, got {value!r}")


def _positive(name, value):
    if not math.isfinite(value) or value <= 0:
        raise NonPositiveRate(name, value)


def _nonneg(name, value):
    if not math.isfinite(value) or value < 0:
        raise NonPositiveRate(name, value)


def rate_labels(setup: Setup | str) -> list[str]:
    """Every rate label :func:`to_angular` expects for ``setup``."""
    setup = Setup(setup)
    labels = []
    for c in setup.cavity_names:
        labels += [f"delta_{c}", f"gamma_{c}", f"g_{c}", f"eps_{c}"]
    for r in setup.resonator_names:
        labels += [f"omega_{r}", f"Gamma_{r}"]
    labels += list(setup.coupling_names)
    return labels


def to_angular(
    inputs: Iterable[RateInput],
    setup: Setup | str,
    *,
    zpf_ratio: float = 1.0,
    include_weak_backaction: bool = False,
) -> ModelParams:
    """Build :class:`ModelParams` from rates quoted in Hz (``omega = 2 pi f``, per ns).

    Labels follow :func:`rate_labels`, e.g. ``omega_m`` for the CS_A resonator
    or ``k`` for the PS_B mechanical coupling.
    """
    setup = Setup(setup)
    values = {}
    for item in inputs:
        if not isinstance(item, RateInput):
            item = RateInput(*item)
        values[item.label] = item.value * HZ_TO_RAD_PER_NS
    for label in rate_labels(setup):
        if label not in values:
            raise MissingParameter(label, setup.value)
    extra = sorted(set(values) - set(rate_labels(setup)))
    if extra:
        raise ParameterError(f"unknown rate labels for {setup.value}: {extra}")

    cavities = {
        c: Cavity(
            delta=values[f"delta_{c}"],
            gamma=values[f"gamma_{c}"],
            g=values[f"g_{c}"],
            eps=values[f"eps_{c}"],
        )
        for c in setup.cavity_names
    }
    resonators = {
        r: Resonator(omega=values[f"omega_{r}"], damping=values[f"Gamma_{r}"])
        for r in setup.resonator_names
    }
    couplings = {k: values[k] for k in setup.coupling_names}
    return ModelParams(
        setup=setup,
        cavities=cavities,
        resonators=resonators,
        couplings=couplings,
        zpf_ratio=zpf_ratio,
        include_weak_backaction=include_weak_backaction,
    )


def derive_zpf(mass: float, omega: float) -> float:
    """Zero-point displacement ``sqrt(hbar / (2 m omega))`` in metres.

    ``mass`` in kg, ``omega`` in rad/s.
    """
    if not (mass > 0 and math.isfinite(mass)):
        raise NonPositiveInput(f"mass must be positive, got {mass!r}")
    if not (omega > 0 and math.isfinite(omega)):
        raise NonPositiveInput(f"omega must be positive, got {omega!r}")
    return math.sqrt(HBAR / (2.0 * mass * omega))


# ---------------------------------------------------------------- regime check

@dataclass(frozen=True)
class RegimeReport:
    """Strong-coupling small-detuning diagnostics.

    ``gs_xbar``/``gw_xbar`` are ``g * mean|u|`` for the strong and the weak
    cavity (rad/ns).  ``ratios`` and ``satisfied`` are keyed by
    ``"gs_xbar/delta_s"``, ``"gs_xbar/gamma_s"``, ``"gw_xbar/delta_w"``,
    ``"gw_xbar/gamma_w"``.
    """

    gs_xbar: float
    gw_xbar: float
    ratios: Mapping[str, float]
    satisfied: Mapping[str, bool]
    threshold: float

    @property
    def all_satisfied(self) -> bool:
        return all(self.satisfied.values())

    @property
    def strong_satisfied(self) -> bool:
        return self.satisfied["gs_xbar/delta_s"] and self.satisfied["gs_xbar/gamma_s"]

    @property
    def weak_satisfied(self) -> bool:
        return self.satisfied["gw_xbar/delta_w"] and self.satisfied["gw_xbar/gamma_w"]

    def to_dict(self) -> dict:
        return {
            "gs_xbar": self.gs_xbar,
            "gw_xbar": self.gw_xbar,
            "ratios": dict(self.ratios),
            "satisfied": dict(self.satisfied),
            "threshold": self.threshold,
        }


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return num / abs(den)


def regime_from_means(params: ModelParams, ubar_strong: float, ubar_weak: float,
                      threshold: float = 10.0) -> RegimeReport:
    """Regime report from precomputed mean |u| of the strong/weak resonators."""
    strong = params.cavities["s"]
    weak = params.cavities[params.setup.weak_mode]
    gs_x = strong.g * ubar_strong
    gw_x = weak.g * ubar_weak
    ratios = {
        "gs_xbar/delta_s": _ratio(gs_x, strong.delta),
        "gs_xbar/gamma_s": _ratio(gs_x, strong.gamma),
        "gw_xbar/delta_w": _ratio(gw_x, weak.delta),
        "gw_xbar/gamma_w": _ratio(gw_x, weak.gamma),
    }
    satisfied = {k: bool(v > threshold) for k, v in ratios.items()}
    return RegimeReport(gs_x, gw_x, ratios, satisfied, threshold)


def validate_regime(params: ModelParams, traj, threshold: float = 10.0) -> RegimeReport:
    """Check ``g * mean|u| >> detuning`` and ``>> damping`` for strong and weak cavities.

    ``traj`` must already exclude the transient.  Which displacement channel
    belongs to which cavity follows the setup: one shared ``u`` in the A
    setups, ``u_s``/``u_w`` (or ``u_1``) in the B setups.
    """
    from .signal import mean_abs

    if traj is None or len(traj.times) == 0:
        raise EmptyTrajectory("regime check needs a non-empty trajectory")
    setup = params.setup
    if setup in (Setup.CS_A, Setup.PS_A):
        strong_ch = weak_ch = "u"
    else:
        strong_ch, weak_ch = "u_s", f"u_{setup.weak_mode}"
    if len(traj.times) < 2:
        ubar_s = abs(float(traj.channel(strong_ch)[0]))
        ubar_w = abs(float(traj.channel(weak_ch)[0]))
    else:
        ubar_s = mean_abs(traj.channel(strong_ch), traj.times)
        ubar_w = mean_abs(traj.channel(weak_ch), traj.times)
    return regime_from_means(params, ubar_s, ubar_w, threshold)


def as_float_array(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64)
