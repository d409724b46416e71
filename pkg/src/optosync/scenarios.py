"""Named parameter sets for every studied configuration, the analysis pipeline
that runs on them, and a sweep harness over any scalar setting.

Rates are stored in Hz (ordinary frequency) and converted to rad/ns only when
a model is built, so a configuration survives serialization bit-for-bit.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Sequence

import numpy as np

from .dynamics import LAYOUTS, build_model, make_state, subsystem_channels
from .errors import BadPath, OptosyncError, StageError, UnknownChannel, UnknownPreset
from .integrate import IntegrationPlan, Trajectory, integrate
from .lyapunov import LleEstimate, LleMethod, LleOptions, estimate_lle
from .model import ModelParams, RateInput, RegimeReport, Setup, rate_labels, to_angular, validate_regime
from .signal import analytic_signal
from .sync import (LockVerdict, PhaseRatio, SyncVerdict, amplitude_error, cos_phase_error,
                   detect_complete_sync, detect_phase_lock, phase_ratio, TERMINAL_WINDOW)

MHz = 1e6
GHz = 1e9


class Analysis(str, enum.Enum):
    LLE = "lle"
    COMPLETE_SYNC = "complete-sync"
    PHASE_LOCK = "phase-lock"
    REGIME = "regime-report"


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Everything needed to reproduce one run.

    ``rates`` maps the labels of :func:`~optosync.model.rate_labels` to Hz.
    ``ic`` is a full state vector in the layout of ``setup``.  ``channels``
    selects what is recorded (None keeps every channel).
    """

    name: str
    setup: Setup
    rates: Mapping[str, float]
    ic: np.ndarray
    plan: IntegrationPlan
    analyses: tuple[Analysis, ...]
    channels: tuple[str, ...] | None = None
    lle: LleOptions = LleOptions()
    lle_method: LleMethod = LleMethod.WOLF
    sync_modes: tuple[str, str] = ("1", "2")
    regime_threshold: float = 10.0
    zpf_ratio: float = 1.0
    include_weak_backaction: bool = False
    export_stride: int = 1
    description: str = ""
    figure: str = ""

    def __post_init__(self):
        setup = Setup(self.setup)
        object.__setattr__(self, "setup", setup)
        object.__setattr__(self, "rates", {k: float(v) for k, v in self.rates.items()})
        object.__setattr__(self, "ic", np.array(self.ic, dtype=np.float64))
        object.__setattr__(self, "analyses", tuple(Analysis(a) for a in self.analyses))
        object.__setattr__(self, "lle_method", LleMethod.coerce(self.lle_method))
        object.__setattr__(self, "sync_modes", tuple(self.sync_modes))
        if self.channels is not None:
            object.__setattr__(self, "channels", tuple(self.channels))
        if not self.analyses:
            raise ValueError(f"scenario {self.name!r} requests no analyses")
        layout = LAYOUTS[setup]
        if self.ic.shape != (len(layout),):
            raise ValueError(f"initial state has shape {self.ic.shape}, layout needs ({len(layout)},)")
        for c in (self.channels or ()) + (self.lle.channels or ()):
            if c not in layout:
                raise UnknownChannel(f"{setup.value} has no channel {c!r}")
        if self.export_stride < 1:
            raise ValueError("export_stride must be >= 1")
        self.params  # validates the rate set

    @property
    def params(self) -> ModelParams:
        return to_angular([RateInput(k, v) for k, v in self.rates.items()], self.setup,
                          zpf_ratio=self.zpf_ratio,
                          include_weak_backaction=self.include_weak_backaction)

    @property
    def layout(self) -> tuple[str, ...]:
        return LAYOUTS[self.setup]

    def lock_target(self) -> float:
        """Expected phase ratio under locking, ``G_s / G_w``."""
        gs = self.rates["g_s"]
        gw = self.rates[f"g_{self.setup.weak_mode}"]
        r = self.zpf_ratio if self.setup in (Setup.CS_B, Setup.PS_B) else 1.0
        return gs * r / gw

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "setup": self.setup.value,
            "rates": dict(self.rates),
            "ic": {c: float(v) for c, v in zip(self.layout, self.ic)},
            "plan": self.plan.to_dict(),
            "analyses": [a.value for a in self.analyses],
            "channels": list(self.channels) if self.channels is not None else None,
            "lle": self.lle.to_dict(),
            "lle_method": self.lle_method.value,
            "sync_modes": list(self.sync_modes),
            "regime_threshold": self.regime_threshold,
            "zpf_ratio": self.zpf_ratio,
            "include_weak_backaction": self.include_weak_backaction,
            "export_stride": self.export_stride,
            "description": self.description,
            "figure": self.figure,
        }

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


# ------------------------------------------------------------------ presets

_FIG3 = dict(
    delta_s=0.13 * GHz, gamma_s=0.24 * GHz, g_s=0.126 * GHz, eps_s=15.4 * GHz,
    delta_1=13 * MHz, gamma_1=0.24 * GHz, g_1=0.126 * GHz, eps_1=22 * MHz,
    delta_2=13 * MHz, gamma_2=0.24 * GHz, g_2=0.126 * GHz, eps_2=22 * MHz,
    omega_m=0.346 * GHz, Gamma_m=2.8 * MHz,
)

_FIG5 = dict(
    delta_s=0.13 * GHz, gamma_s=0.24 * GHz, g_s=0.126 * GHz, eps_s=15.4 * GHz,
    delta_1=26 * MHz, gamma_1=0.24 * GHz, g_1=25.2 * MHz, eps_1=22 * MHz,
    delta_2=26 * MHz, gamma_2=0.24 * GHz, g_2=25.2 * MHz, eps_2=22 * MHz,
    omega_s=0.346 * GHz, Gamma_s=2.8 * MHz,
    omega_1=0.346 * GHz, Gamma_1=2.8 * MHz,
    omega_2=0.346 * GHz, Gamma_2=2.8 * MHz,
    k_1=1.29 * MHz, k_2=1.29 * MHz,
)

_FIG7 = dict(
    delta_s=0.13 * GHz, gamma_s=0.24 * GHz, g_s=0.126 * GHz, eps_s=15.4 * GHz,
    delta_w=26 * MHz, gamma_w=52 * MHz, g_w=25.2 * MHz, eps_w=0.22 * GHz,
    omega_m=0.346 * GHz, Gamma_m=2.8 * MHz,
)

_FIG9 = dict(
    {k: v for k, v in _FIG7.items() if not k.endswith("_m")},
    omega_s=0.346 * GHz, Gamma_s=2.8 * MHz,
    omega_w=0.346 * GHz, Gamma_w=2.8 * MHz,
    k=1.29 * MHz,
)

# records: complete-sync runs start at t = 0 so the settle time is visible;
# the others drop a 500 ns transient.  Phase analyses need 0.004 ns sampling
# to resolve instantaneous frequencies of several hundred rad/ns.
_CS_CHAOS = IntegrationPlan(0.0, 2500.0, 1e-3, sample_stride=10, discard=500.0)
_CS_SYNC = IntegrationPlan(0.0, 2000.0, 1e-3, sample_stride=10, discard=0.0)
_PS = IntegrationPlan(0.0, 5500.0, 1e-3, sample_stride=4, discard=500.0)

_A = (Analysis.LLE,)
_SYNC = (Analysis.COMPLETE_SYNC,)
_LOCK = (Analysis.PHASE_LOCK, Analysis.REGIME)


def _lle_opts(setup: Setup, mode: str, **kw) -> LleOptions:
    return LleOptions(channels=subsystem_channels(setup, mode), **kw)


def _spec(name, setup, rates, plan, analyses, ic=None, description="", figure="",
          export_stride=10, **kw) -> ScenarioConfig:
    setup = Setup(setup)
    state = make_state(setup, **(ic or {}))
    return ScenarioConfig(
        name=name, setup=setup, rates=rates, ic=state, plan=plan, analyses=analyses,
        lle=kw.pop("lle", _lle_opts(setup, setup.weak_mode)), export_stride=export_stride,
        description=description, figure=figure, **kw)


def _fig4(g):
    return dict(_FIG3, g_1=g, g_2=g)


_FIG4_IC = {"alpha": {"1": 0.1 + 0.1j, "2": 0.1j}}
_FIG6_IC = {"alpha": {"1": 0.01j, "2": 0.01 + 0.01j}}


def _fig6(ratio):
    k = ratio * _FIG5["gamma_1"]
    return dict(_FIG5, k_1=k, k_2=k)


def _fig8(gw):
    return dict(_FIG7, eps_w=1.1 * GHz, g_w=gw)


def _fig10(ratio):
    return dict(_FIG9, g_s=0.126 * GHz, g_w=0.126 * GHz, k=ratio * _FIG9["gamma_s"])


_BUILDERS = {
    "fig3a": lambda: _spec("fig3a", "CS_A", dict(_FIG3, eps_s=0.0, g_s=0.0), _CS_CHAOS, _A,
                           description="weak branch alone, strong cavity switched off",
                           figure="Fig. 3(a)", lle=_lle_opts(Setup.CS_A, "1", t_total=2000.0)),
    "fig3b": lambda: _spec("fig3b", "CS_A", dict(_FIG3), _CS_CHAOS, _A,
                           description="weak branch driven by the chaotic strong branch",
                           figure="Fig. 3(b)"),
    "fig4_g1": lambda: _spec("fig4_g1", "CS_A", _fig4(0.126 * GHz), _CS_SYNC, _SYNC, _FIG4_IC,
                             description="complete sync of two weak cavities, g = 0.126 GHz",
                             figure="Fig. 4"),
    "fig4_g2": lambda: _spec("fig4_g2", "CS_A", _fig4(25.2 * MHz), _CS_SYNC, _SYNC, _FIG4_IC,
                             description="complete sync of two weak cavities, g = 25.2 MHz",
                             figure="Fig. 4"),
    "fig4_g3": lambda: _spec("fig4_g3", "CS_A", _fig4(12.6 * MHz), _CS_SYNC, _SYNC, _FIG4_IC,
                             description="complete sync of two weak cavities, g = 12.6 MHz",
                             figure="Fig. 4"),
    "fig5a": lambda: _spec("fig5a", "CS_B", _fig6(0.0), _CS_CHAOS, _A,
                           description="three resonators, weak ones uncoupled (k = 0)",
                           figure="Fig. 5(a)"),
    "fig5b": lambda: _spec("fig5b", "CS_B", dict(_FIG5), _CS_CHAOS, _A,
                           description="three resonators, spring coupling k = 1.29 MHz",
                           figure="Fig. 5(b)"),
    "fig6_k1e-4": lambda: _spec("fig6_k1e-4", "CS_B", _fig6(1e-4), _CS_SYNC, _SYNC, _FIG6_IC,
                                description="complete sync vs spring coupling, k/gamma = 1e-4",
                                figure="Fig. 6"),
    "fig6_k1e-2": lambda: _spec("fig6_k1e-2", "CS_B", _fig6(1e-2), _CS_SYNC, _SYNC, _FIG6_IC,
                                description="complete sync vs spring coupling, k/gamma = 1e-2",
                                figure="Fig. 6"),
    "fig6_k1": lambda: _spec("fig6_k1", "CS_B", _fig6(1.0), _CS_SYNC, _SYNC, _FIG6_IC,
                             description="complete sync vs spring coupling, k/gamma = 1",
                             figure="Fig. 6"),
    "fig7": lambda: _spec("fig7", "PS_A", dict(_FIG7), _PS, _A + _LOCK,
                          description="strong and weak cavity on one resonator",
                          figure="Fig. 7", export_stride=25),
    "fig8a": lambda: _spec("fig8a", "PS_A", _fig8(1.26 * MHz), _PS, _LOCK,
                           description="phase ratio, G_s/G_w = 100", figure="Fig. 8(a)",
                           export_stride=25),
    "fig8b": lambda: _spec("fig8b", "PS_A", _fig8(12.6 * MHz), _PS, _LOCK,
                           description="phase ratio, G_s/G_w = 10", figure="Fig. 8(b)",
                           export_stride=25),
    "fig8c": lambda: _spec("fig8c", "PS_A", _fig8(0.126 * GHz), _PS, _LOCK,
                           description="phase ratio, G_s/G_w = 1", figure="Fig. 8(c)",
                           export_stride=25),
    "fig9": lambda: _spec("fig9", "PS_B", dict(_FIG9), _PS, _A + _LOCK,
                          description="strong and weak cavity on spring-coupled resonators",
                          figure="Fig. 9", export_stride=25),
    "fig10a": lambda: _spec("fig10a", "PS_B", _fig10(1e-3), _PS, _LOCK,
                            description="phase ratio, k/gamma_s = 1e-3", figure="Fig. 10(a)",
                            export_stride=25),
    "fig10b": lambda: _spec("fig10b", "PS_B", _fig10(1e-2), _PS, _LOCK,
                            description="phase ratio, k/gamma_s = 1e-2", figure="Fig. 10(b)",
                            export_stride=25),
    "fig10c": lambda: _spec("fig10c", "PS_B", _fig10(1e3), _PS, _LOCK,
                            description="phase ratio, k/gamma_s = 1e3", figure="Fig. 10(c)",
                            export_stride=25),
}

PRESET_NAMES: tuple[str, ...] = tuple(_BUILDERS)


def preset(name: str) -> ScenarioConfig:
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    return build()


def list_presets() -> list[tuple[str, str, str]]:
    """(name, description, figure) for every preset."""
    out = []
    for name in PRESET_NAMES:
        c = preset(name)
        out.append((name, c.description, c.figure))
    return out


# ----------------------------------------------------------------- pipeline

@dataclass(eq=False)
class ScenarioReport:
    config: ScenarioConfig
    lle: LleEstimate | None = None
    sync: SyncVerdict | None = None
    lock: LockVerdict | None = None
    regime: RegimeReport | None = None
    errors: dict[str, dict] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    trajectory: Trajectory | None = field(default=None, repr=False)
    series: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "config_digest": self.config.digest(),
            "lle": self.lle.to_dict() if self.lle else None,
            "sync": self.sync.to_dict() if self.sync else None,
            "lock": self.lock.to_dict() if self.lock else None,
            "regime": self.regime.to_dict() if self.regime else None,
            "errors": dict(self.errors),
            "outputs": dict(self.outputs),
        }


def _error_record(stage: str, exc: Exception) -> dict:
    return {"stage": stage, "type": type(exc).__name__, "message": str(exc)}


def _complete_sync(cfg: ScenarioConfig, traj: Trajectory, report: ScenarioReport):
    i, j = cfg.sync_modes
    amp = amplitude_error(traj, i, j)
    ph = cos_phase_error(traj, i, j)
    n = len(traj.times)
    start = n - int(round(TERMINAL_WINDOW * n))
    scale = float(np.mean(np.abs(traj.complex_channel(i)[start:])))
    report.series["amplitude_error"] = amp
    report.series["phase_error"] = ph
    report.sync = detect_complete_sync(amp, ph, traj.times, amp_scale=scale)


def _phase_lock(cfg: ScenarioConfig, traj: Trajectory, report: ScenarioReport):
    w = cfg.setup.weak_mode
    sig_s = analytic_signal(traj.channel("re_alpha_s"), times=traj.times, source="re_alpha_s")
    sig_w = analytic_signal(traj.channel(f"re_alpha_{w}"), times=traj.times,
                            source=f"re_alpha_{w}")
    ratio = phase_ratio(sig_s, sig_w)
    report.series["ratio_times"] = ratio.times
    report.series["phase_ratio"] = ratio.values
    report.lock = detect_phase_lock(ratio, cfg.lock_target())


def run_scenario(config: ScenarioConfig, keep_trajectory: bool = True) -> ScenarioReport:
    """Integrate ``config`` and run every requested analysis.

    A failing integration raises :class:`StageError` tagged ``"integrate"``;
    a failing analysis is recorded in ``report.errors`` under its own name
    so the remaining analyses still run.
    """
    report = ScenarioReport(config)
    try:
        params = config.params
        model = build_model(params)
    except OptosyncError as exc:
        raise StageError("configure", exc) from exc

    needs_traj = any(a is not Analysis.LLE for a in config.analyses) or keep_trajectory
    traj = None
    if needs_traj:
        try:
            traj = integrate(model, config.ic, config.plan, config.channels)
        except OptosyncError as exc:
            raise StageError("integrate", exc) from exc

    for a in config.analyses:
        try:
            if a is Analysis.LLE:
                report.lle = estimate_lle(model, config.ic, config.lle, config.lle_method)
            elif a is Analysis.COMPLETE_SYNC:
                _complete_sync(config, traj, report)
            elif a is Analysis.PHASE_LOCK:
                _phase_lock(config, traj, report)
            elif a is Analysis.REGIME:
                report.regime = validate_regime(params, traj, config.regime_threshold)
        except (OptosyncError, ValueError, ArithmeticError) as exc:
            report.errors[a.value] = _error_record(a.value, exc)
    if keep_trajectory:
        report.trajectory = traj
    return report


# -------------------------------------------------------------------- sweep

_PLAN_FIELDS = {f.name for f in fields(IntegrationPlan)}
_LLE_FIELDS = {"t_total", "discard", "dt", "renorm_interval", "d0", "n_blocks", "seed"}
_TOP_FIELDS = {"zpf_ratio", "regime_threshold"}


def set_path(config: ScenarioConfig, path: str, value) -> ScenarioConfig:
    """Copy of ``config`` with the scalar at ``path`` replaced.

    Paths: ``rates.<label>`` (or a bare rate label, in Hz), ``plan.<field>``,
    ``lle.<field>``, ``zpf_ratio``, ``regime_threshold``.  Several rate labels
    joined by ``+`` are set together, e.g. ``k_1+k_2`` or ``g_1+g_2``.
    """
    head, _, tail = path.partition(".")
    if not tail:
        head, tail = ("rates", path) if path not in _TOP_FIELDS else (path, "")
    try:
        if head == "rates":
            labels = tail.split("+")
            valid = rate_labels(config.setup)
            bad = [lb for lb in labels if lb not in valid]
            if bad:
                raise BadPath(f"{config.setup.value} has no rate {bad[0]!r}")
            rates = dict(config.rates)
            for lb in labels:
                rates[lb] = float(value)
            return replace(config, rates=rates)
        if head == "plan" and tail in _PLAN_FIELDS:
            v = value if tail in ("method",) else (int(value) if tail == "sample_stride" else float(value))
            return replace(config, plan=replace(config.plan, **{tail: v}))
        if head == "lle" and tail in _LLE_FIELDS:
            v = int(value) if tail in ("n_blocks", "seed") else float(value)
            return replace(config, lle=replace(config.lle, **{tail: v}))
        if head in _TOP_FIELDS and not tail:
            return replace(config, **{head: float(value)})
    except BadPath:
        raise
    raise BadPath(f"cannot address {path!r}")


@dataclass(eq=False)
class SweepReport:
    base: ScenarioConfig
    param_path: str
    values: list
    reports: list[ScenarioReport]

    def __iter__(self):
        return iter(zip(self.values, self.reports))

    def to_dict(self) -> dict:
        return {
            "base": self.base.name,
            "param_path": self.param_path,
            "points": [{"value": v, "report": r.to_dict()} for v, r in self],
        }


def _run_quiet(cfg: ScenarioConfig) -> ScenarioReport:
    return run_scenario(cfg, keep_trajectory=False)


def sweep(base: ScenarioConfig, param_path: str, values: Sequence, workers: int = 1,
          keep_trajectories: bool = False) -> SweepReport:
    """Run ``base`` once per value at ``param_path``; results keep input order.

    With ``workers > 1`` points run in separate processes.
    """
    values = list(values)
    configs = [set_path(base, param_path, v) for v in values]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_quiet, configs))
    else:
        reports = [run_scenario(c, keep_trajectory=keep_trajectories) for c in configs]
    return SweepReport(base, param_path, values, reports)
