"""Analytic signal, Hilbert transform, phase unwrapping and time averages."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantSignal, EdgeIndex, EmptyTrajectory, NonUniformSampling

EDGE_FRACTION = 0.05
MIN_SAMPLES = 64


@dataclass(frozen=True, eq=False)
class AnalyticSignal:
    """``s + i H[s] = A exp(i psi)`` of one detrended real observable.

    ``interior`` is False on the first and last ``edge_fraction`` of samples,
    where the DFT-based transform suffers from wrap-around.
    """

    times: np.ndarray
    signal: np.ndarray
    hilbert: np.ndarray
    amplitude: np.ndarray
    wrapped_phase: np.ndarray
    phase: np.ndarray
    interior: np.ndarray
    source: str = ""
    offset: float = 0.0

    @property
    def interior_slice(self) -> slice:
        idx = np.flatnonzero(self.interior)
        return slice(int(idx[0]), int(idx[-1]) + 1) if idx.size else slice(0, 0)


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def hilbert_fft(x, pad: bool = True) -> np.ndarray:
    """Hilbert transform of a real sequence via the DFT.

    Negative-frequency bins are zeroed and positive ones doubled (DC and
    Nyquist kept); the imaginary part of the inverse transform is returned.
    With ``pad`` the sequence is zero-padded to the next power of two.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    nfft = _next_pow2(n) if pad else n
    spec = np.fft.fft(x, nfft)
    h = np.zeros(nfft)
    h[0] = 1.0
    if nfft % 2 == 0:
        h[nfft // 2] = 1.0
        h[1:nfft // 2] = 2.0
    else:
        h[1:(nfft + 1) // 2] = 2.0
    return np.fft.ifft(spec * h)[:n].imag


def _check_uniform(times: np.ndarray) -> float:
    steps = np.diff(times)
    dt = float(steps.mean())
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-6 * abs(dt):
        raise NonUniformSampling("samples must be uniformly spaced in time")
    return dt


def edge_mask(n: int, edge_fraction: float = EDGE_FRACTION) -> np.ndarray:
    margin = int(math.ceil(edge_fraction * n))
    mask = np.zeros(n, dtype=bool)
    mask[margin:n - margin] = True
    return mask


def analytic_signal(samples, dt: float | None = None, *, times=None, source: str = "",
                    edge_fraction: float = EDGE_FRACTION, pad: bool = True) -> AnalyticSignal:
    """Build the analytic signal of a uniformly sampled real series.

    The series mean is removed first; a DC offset would otherwise move the
    rotation centre and corrupt the phase.  Give either ``dt`` or ``times``.
    """
    s = np.asarray(samples, dtype=np.float64)
    n = s.shape[0]
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    if times is None:
        if dt is None or not dt > 0:
            raise ValueError("give a positive dt or explicit times")
        times = np.arange(n) * dt
    else:
        times = np.asarray(times, dtype=np.float64)
        if times.shape != s.shape:
            raise ValueError("times and samples differ in length")
        _check_uniform(times)

    offset = float(s.mean())
    x = s - offset
    scale = float(np.max(np.abs(s))) or 1.0
    if float(np.max(np.abs(x))) <= 1e-12 * scale:
        raise ConstantSignal("signal is constant after detrending; phase is undefined")
    h = hilbert_fft(x, pad=pad)
    wrapped = np.arctan2(h, x)
    return AnalyticSignal(
        times=times,
        signal=x,
        hilbert=h,
        amplitude=np.hypot(x, h),
        wrapped_phase=wrapped,
        phase=unwrap_phase(wrapped),
        interior=edge_mask(n, edge_fraction),
        source=source,
        offset=offset,
    )


def unwrap_phase(wrapped) -> np.ndarray:
    """Add multiples of 2 pi so consecutive differences fall in (-pi, pi]."""
    x = np.asarray(wrapped, dtype=np.float64)
    if x.size < 2:
        return x.copy()
    d = np.diff(x)
    folded = math.pi - np.mod(math.pi - d, 2.0 * math.pi)
    turns = np.rint((folded - d) / (2.0 * math.pi))
    k = np.concatenate(([0.0], np.cumsum(turns)))
    return x + 2.0 * math.pi * k


def hilbert_pv_direct(samples, dt: float, index: int,
                      edge_fraction: float = EDGE_FRACTION) -> float:
    """Hilbert transform at one sample by direct principal-value quadrature.

    Slow reference used to check :func:`hilbert_fft`.  The singularity is
    subtracted, ``PV int s(tau)/(t - tau) = int (s(tau) - s(t))/(t - tau) +
    s(t) ln((t - a)/(b - t))`` over the record [a, b]; the remaining smooth
    integrand is summed with the trapezoidal rule, with the singular sample
    replaced by its limit ``-s'(t)`` (central difference).
    """
    s = np.asarray(samples, dtype=np.float64)
    n = s.shape[0]
    margin = int(math.ceil(edge_fraction * n))
    if not margin <= index < n - margin or index < 1 or index > n - 2:
        raise EdgeIndex(f"index {index} lies in the edge margin of a {n}-sample record")
    s = s - s.mean()
    offsets = (index - np.arange(n)) * dt  # t - tau
    f = np.empty(n)
    nz = offsets != 0.0
    f[nz] = (s[nz] - s[index]) / offsets[nz]
    f[index] = -(s[index + 1] - s[index - 1]) / (2.0 * dt)
    integral = dt * (f.sum() - 0.5 * (f[0] + f[-1]))
    t_minus_a = index * dt
    b_minus_t = (n - 1 - index) * dt
    integral += s[index] * math.log(t_minus_a / b_minus_t)
    return integral / math.pi


def mean_abs(series, times) -> float:
    """Time average of ``|series|`` over the record (trapezoidal rule)."""
    x = np.abs(np.asarray(series, dtype=np.float64))
    t = np.asarray(times, dtype=np.float64)
    if x.size < 2 or t.size != x.size:
        raise EmptyTrajectory("need at least two samples with matching times")
    span = t[-1] - t[0]
    return float(np.trapezoid(x, t) / span)
