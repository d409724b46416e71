"""Synchronization errors, phase ratios and the verdicts built on them."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import GridMismatch, PhaseTooSmall, UnknownChannel, WindowTooShort
from .integrate import Trajectory
from .signal import AnalyticSignal

TERMINAL_WINDOW = 0.2
AMP_REL_TOL = 1e-3
PHASE_TOL = 1e-3
LOCK_TOL = 0.05
BAND_TOL = 0.1
RATIO_FLOOR = 10.0  # rad
GAP_AMPLITUDE = 1e-12


def _alpha(traj: Trajectory, mode: str) -> np.ndarray:
    try:
        return traj.complex_channel(mode)
    except UnknownChannel:
        raise UnknownChannel(f"trajectory has no cavity mode {mode!r}") from None


def amplitude_error(traj: Trajectory, mode_i: str, mode_j: str) -> np.ndarray:
    """``|alpha_j(t)| - |alpha_i(t)|``."""
    return np.abs(_alpha(traj, mode_j)) - np.abs(_alpha(traj, mode_i))


def _cos_arg(a: np.ndarray) -> np.ndarray:
    mag = np.abs(a)
    out = np.full(a.shape, np.nan)
    ok = mag >= GAP_AMPLITUDE
    out[ok] = a.real[ok] / mag[ok]
    return out


def cos_phase_error(traj: Trajectory, mode_i: str, mode_j: str) -> np.ndarray:
    """``cos(arg alpha_j) - cos(arg alpha_i)``; NaN where either field is ~0."""
    return _cos_arg(_alpha(traj, mode_j)) - _cos_arg(_alpha(traj, mode_i))


@dataclass(frozen=True)
class PhaseRatio:
    times: np.ndarray
    values: np.ndarray


def phase_ratio(sig_s: AnalyticSignal, sig_w: AnalyticSignal,
                ratio_floor: float = RATIO_FLOOR) -> PhaseRatio:
    """``psi_s(t) / psi_w(t)`` on the shared interior grid.

    Samples before ``|psi_w|`` last sits at or below ``ratio_floor`` are
    dropped, so the early-time division blow-up never reaches the output.
    """
    if sig_s.times.shape != sig_w.times.shape or not np.array_equal(sig_s.times, sig_w.times):
        raise GridMismatch("analytic signals are not on a common time grid")
    keep = sig_s.interior & sig_w.interior
    idx = np.flatnonzero(keep)
    small = np.abs(sig_w.phase[idx]) <= ratio_floor
    if small.any():
        idx = idx[np.flatnonzero(small)[-1] + 1:]
    if idx.size < 2:
        raise PhaseTooSmall(f"|psi_w| never exceeds the floor of {ratio_floor} rad in the interior")
    return PhaseRatio(sig_s.times[idx], sig_s.phase[idx] / sig_w.phase[idx])


def _window_start(n: int, window: float) -> int:
    if not 0.0 < window <= 1.0:
        raise WindowTooShort(f"window fraction must lie in (0, 1], got {window}")
    start = n - int(round(window * n))
    if n - start < 2:
        raise WindowTooShort(f"terminal window holds {n - start} samples, need >= 2")
    return start


@dataclass(frozen=True)
class SyncVerdict:
    synchronized: bool
    settle_time: float | None
    terminal_amp_error: float    # max |amp err| in window / amp_scale
    terminal_phase_error: float  # max |cos-phase err| in window
    amp_tol: float
    phase_tol: float
    window: float
    amp_scale: float

    def to_dict(self) -> dict:
        return asdict(self)


def detect_complete_sync(amp_err, phase_err, times=None, *, amp_scale: float = 1.0,
                         amp_tol: float = AMP_REL_TOL, phase_tol: float = PHASE_TOL,
                         window: float = TERMINAL_WINDOW) -> SyncVerdict:
    """Decide whether both error series have died out over the terminal window.

    ``amp_tol`` is relative to ``amp_scale`` (pass the window mean of
    ``|alpha_1|``).  NaN gap markers in ``phase_err`` are ignored.
    """
    amp = np.abs(np.asarray(amp_err, dtype=np.float64))
    ph = np.abs(np.asarray(phase_err, dtype=np.float64))
    if amp.shape != ph.shape:
        raise GridMismatch("error series differ in length")
    n = amp.shape[0]
    times = np.arange(n, dtype=np.float64) if times is None else np.asarray(times, dtype=np.float64)
    start = _window_start(n, window)
    scale = float(amp_scale) if amp_scale > 0 else 1.0

    term_amp = float(np.max(amp[start:])) / scale
    ph_win = ph[start:]
    term_ph = float(np.nanmax(ph_win)) if np.any(np.isfinite(ph_win)) else float("nan")
    synchronized = bool(term_amp < amp_tol and term_ph < phase_tol)

    settle = None
    if synchronized:
        bad = (amp >= amp_tol * scale) | (np.nan_to_num(ph, nan=0.0) >= phase_tol)
        last = np.flatnonzero(bad)
        settle = float(times[0] if last.size == 0 else times[last[-1] + 1])
    return SyncVerdict(synchronized, settle, term_amp, term_ph, amp_tol, phase_tol, window, scale)


@dataclass(frozen=True)
class LockVerdict:
    locked: bool
    ratio_mean: float
    ratio_band_width: float
    target: float
    deviation: float
    tol: float
    band_tol: float
    window: float

    def to_dict(self) -> dict:
        return asdict(self)


def detect_phase_lock(ratio_series, target: float, *, tol: float = LOCK_TOL,
                      band_tol: float = BAND_TOL, window: float = TERMINAL_WINDOW) -> LockVerdict:
    """Locked when the terminal-window mean sits within ``tol`` (relative) of
    ``target`` and the window's max-min spread is below ``band_tol``."""
    values = ratio_series.values if isinstance(ratio_series, PhaseRatio) else ratio_series
    r = np.asarray(values, dtype=np.float64)
    w = r[_window_start(r.shape[0], window):]
    mean = float(w.mean())
    band = float(w.max() - w.min())
    dev = abs(mean - target) / abs(target)
    return LockVerdict(bool(dev < tol and band < band_tol), mean, band, float(target), dev,
                       tol, band_tol, window)
