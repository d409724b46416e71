"""Configuration documents, CSV trajectory export and SVG figure emission."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dynamics import LAYOUTS
from .errors import (ConfigSyntaxError, ConfigValidationError, EmptySeries, IoError,
                     OptosyncError)
from .integrate import IntegrationPlan, Method, Trajectory
from .lyapunov import LleMethod, LleOptions
from .model import Setup, rate_labels
from .scenarios import Analysis, ScenarioConfig

# ------------------------------------------------------------------- units

UNITS = {"Hz": 1, "kHz": 10**3, "MHz": 10**6, "GHz": 10**9}
_RATE_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([kMG]?Hz)?\s*$")


def parse_rate(value) -> float:
    """``"0.346 GHz"`` -> 346000000.0.  Bare numbers are taken as Hz.

    Scaling is done in decimal arithmetic, so ``"0.346 GHz"`` and
    ``"346 MHz"`` give the identical float.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a rate: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _RATE_RE.match(str(value))
    if not m:
        raise ValueError(f"not a rate: {value!r} (expected e.g. '0.346 GHz')")
    return float(Decimal(m.group(1)) * UNITS[m.group(2) or "Hz"])


def format_rate(hz: float) -> str:
    """Inverse of :func:`parse_rate`, in the largest unit not exceeding ``hz``."""
    hz = float(hz)
    if not math.isfinite(hz):
        raise ValueError(f"rate must be finite, got {hz!r}")
    if hz == 0.0:
        return "0 Hz"
    unit = "Hz"
    for name, scale in UNITS.items():
        if abs(hz) >= scale:
            unit = name
    d = (Decimal(repr(hz)) / UNITS[unit]).normalize()
    text = format(d, "f")
    return f"{text} {unit}"


# ------------------------------------------------------------- config files

def config_to_document(cfg: ScenarioConfig) -> dict:
    d = cfg.to_dict()
    d["rates"] = {k: format_rate(v) for k, v in cfg.rates.items()}
    d["initial_state"] = d.pop("ic")
    return d


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_document(cfg), indent=2) + "\n"


def _need(doc: Mapping, key: str, where: str = ""):
    if key not in doc:
        raise ConfigValidationError(f"missing field {where + key!r}", field=where + key)
    return doc[key]


def _as(kind, value, name):
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int and (isinstance(value, bool) or float(value) != int(value)):
            raise TypeError
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigValidationError(f"field {name!r} must be {kind.__name__}, got {value!r}",
                                    field=name) from None


def _plan(doc: Mapping) -> IntegrationPlan:
    known = {"t0": float, "t1": float, "dt": float, "sample_stride": int, "discard": float,
             "rtol": float, "atol": float}
    kw = {}
    for key, value in doc.items():
        if key == "method":
            try:
                kw["method"] = Method(str(value).upper())
            except ValueError:
                raise ConfigValidationError(f"unknown method {value!r}", field="plan.method") from None
        elif key in known:
            kw[key] = _as(known[key], value, f"plan.{key}")
        else:
            raise ConfigValidationError(f"unknown field 'plan.{key}'", field=f"plan.{key}")
    try:
        return IntegrationPlan(**kw)
    except ValueError as exc:
        raise ConfigValidationError(f"plan: {exc}", field="plan") from None


def _lle(doc: Mapping) -> LleOptions:
    known = {"t_total": float, "discard": float, "dt": float, "d0": float,
             "n_blocks": int, "seed": int}
    kw = {}
    for key, value in doc.items():
        if key == "renorm_interval":
            kw[key] = None if value is None else _as(float, value, "lle.renorm_interval")
        elif key == "channels":
            kw[key] = None if value is None else tuple(value)
        elif key in known:
            kw[key] = _as(known[key], value, f"lle.{key}")
        else:
            raise ConfigValidationError(f"unknown field 'lle.{key}'", field=f"lle.{key}")
    try:
        return LleOptions(**kw)
    except ValueError as exc:
        raise ConfigValidationError(f"lle: {exc}", field="lle") from None


def document_to_config(doc: Mapping) -> ScenarioConfig:
    if not isinstance(doc, Mapping):
        raise ConfigValidationError("top level must be an object", field="")
    try:
        setup = Setup(_need(doc, "setup"))
    except ValueError:
        raise ConfigValidationError(f"unknown setup {doc['setup']!r}", field="setup") from None

    raw_rates = _need(doc, "rates")
    if not isinstance(raw_rates, Mapping):
        raise ConfigValidationError("'rates' must be an object", field="rates")
    rates = {}
    for label in rate_labels(setup):
        if label not in raw_rates:
            raise ConfigValidationError(f"missing rate 'rates.{label}' for setup {setup.value}",
                                        field=f"rates.{label}")
        try:
            rates[label] = parse_rate(raw_rates[label])
        except ValueError as exc:
            raise ConfigValidationError(str(exc), field=f"rates.{label}") from None
    extra = sorted(set(raw_rates) - set(rates))
    if extra:
        raise ConfigValidationError(f"setup {setup.value} has no rate {extra[0]!r}",
                                    field=f"rates.{extra[0]}")

    layout = LAYOUTS[setup]
    ic = np.zeros(len(layout))
    for key, value in (doc.get("initial_state") or {}).items():
        if key not in layout:
            raise ConfigValidationError(f"{setup.value} has no channel {key!r}",
                                        field=f"initial_state.{key}")
        ic[layout.index(key)] = _as(float, value, f"initial_state.{key}")

    analyses = _need(doc, "analyses")
    try:
        analyses = tuple(Analysis(a) for a in analyses)
    except (ValueError, TypeError):
        raise ConfigValidationError(f"unknown analysis in {analyses!r}", field="analyses") from None
    try:
        lle_method = LleMethod.coerce(doc.get("lle_method", "WOLF"))
    except ValueError:
        raise ConfigValidationError(f"unknown lle_method {doc['lle_method']!r}",
                                    field="lle_method") from None

    try:
        return ScenarioConfig(
            name=str(_need(doc, "name")),
            setup=setup,
            rates=rates,
            ic=ic,
            plan=_plan(doc.get("plan", {})),
            analyses=analyses,
            channels=doc.get("channels"),
            lle=_lle(doc.get("lle", {})),
            lle_method=lle_method,
            sync_modes=tuple(doc.get("sync_modes", ("1", "2"))),
            regime_threshold=_as(float, doc.get("regime_threshold", 10.0), "regime_threshold"),
            zpf_ratio=_as(float, doc.get("zpf_ratio", 1.0), "zpf_ratio"),
            include_weak_backaction=_as(bool, doc.get("include_weak_backaction", False),
                                        "include_weak_backaction"),
            export_stride=_as(int, doc.get("export_stride", 1), "export_stride"),
            description=str(doc.get("description", "")),
            figure=str(doc.get("figure", "")),
        )
    except ConfigValidationError:
        raise
    except (OptosyncError, ValueError, KeyError) as exc:
        name = getattr(exc, "name", None)
        raise ConfigValidationError(str(exc), field=name) from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse a JSON scenario document.

    Raises :class:`ConfigSyntaxError` with a (line, column) position for
    malformed JSON and :class:`ConfigValidationError` naming the field for
    missing or invalid content.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"{exc.msg} at line {exc.lineno}, column {exc.colno}",
                                position=(exc.lineno, exc.colno)) from None
    return document_to_config(doc)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return parse_config(text)


# -------------------------------------------------------------------- CSV

def _columns_of(data, channels):
    if isinstance(data, Trajectory):
        times = data.times
        names = tuple(data.channels) if channels is None else tuple(channels)
        cols = [data.channel(c) for c in names]
    else:
        times, series = data
        names = tuple(series) if channels is None else tuple(channels)
        cols = [np.asarray(series[c]) for c in names]
    return np.asarray(times), names, cols


def write_csv(data, path, channels: Sequence[str] | None = None, stride: int = 1) -> Path:
    """Write a trajectory (or ``(times, {name: values})``) as CSV.

    Header ``t_ns,<channels>``; values use the shortest decimal string that
    round-trips to the same double; LF line endings.
    """
    times, names, cols = _columns_of(data, channels)
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t_ns",) + names)
            for i in range(0, len(times), stride):
                w.writerow([repr(float(times[i]))] + [repr(float(c[i])) for c in cols])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Header and data (one row per sample) of a file from :func:`write_csv`."""
    try:
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    header = tuple(rows[0])
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(header))
    return header, data


# -------------------------------------------------------------------- SVG

@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: str = "#1f4e99"
    values: np.ndarray | None = None  # per-point scalar mapped to colour


@dataclass
class Panel:
    series: list[Series]
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""


@dataclass(frozen=True)
class PlotStyle:
    panel_width: int = 520
    panel_height: int = 300
    margin: int = 56
    max_points: int = 4000
    font_size: int = 12
    stroke: float = 1.0
    marker_radius: float = 2.5


# a short perceptually ordered ramp, dark blue -> yellow
_RAMP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]],
                 dtype=float)


def _ramp(v: np.ndarray) -> list[str]:
    lo, hi = float(np.min(v)), float(np.max(v))
    t = np.zeros_like(v, dtype=float) if hi == lo else (v - lo) / (hi - lo)
    pos = t * (len(_RAMP) - 1)
    i = np.minimum(pos.astype(int), len(_RAMP) - 2)
    f = (pos - i)[:, None]
    rgb = np.rint(_RAMP[i] * (1 - f) + _RAMP[i + 1] * f).astype(int)
    return [f"#{r:02x}{g:02x}{b:02x}" for r, g, b in rgb]


def _thin(s: Series, max_points: int) -> Series:
    n = len(s.x)
    if n <= max_points:
        return s
    idx = np.unique(np.linspace(0, n - 1, max_points).astype(int))
    return Series(s.x[idx], s.y[idx], s.label, s.color,
                  None if s.values is None else s.values[idx])


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    first = math.ceil(lo / step) * step
    return [first + k * step for k in range(int((hi - first) / step + 1e-9) + 1)]


def _panel_svg(panel: Panel, x0: float, y0: float, style: PlotStyle) -> list[str]:
    series = [_thin(s, style.max_points) for s in panel.series]
    xs = np.concatenate([s.x for s in series])
    ys = np.concatenate([s.y for s in series])
    finite = np.isfinite(xs) & np.isfinite(ys)
    if not finite.any():
        raise EmptySeries("panel has no finite points")
    xlo, xhi = float(xs[finite].min()), float(xs[finite].max())
    ylo, yhi = float(ys[finite].min()), float(ys[finite].max())
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    m = style.margin
    w = style.panel_width - 1.5 * m
    h = style.panel_height - 1.5 * m
    left, top = x0 + m, y0 + 0.5 * m

    def px(x):
        return left + (x - xlo) / (xhi - xlo) * w

    def py(y):
        return top + h - (y - ylo) / (yhi - ylo) * h

    out = ['<g class="panel">',
           f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(w)}" height="{_fmt(h)}" '
           'fill="none" stroke="#444"/>']
    fs = style.font_size
    for t in _ticks(xlo, xhi):
        out.append(f'<text x="{_fmt(px(t))}" y="{_fmt(top + h + fs + 4)}" font-size="{fs}" '
                   f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(ylo, yhi):
        out.append(f'<text x="{_fmt(left - 6)}" y="{_fmt(py(t) + fs / 3)}" font-size="{fs}" '
                   f'text-anchor="end">{t:.4g}</text>')
    if panel.title:
        out.append(f'<text x="{_fmt(left + w / 2)}" y="{_fmt(top - 8)}" font-size="{fs + 2}" '
                   f'text-anchor="middle">{_esc(panel.title)}</text>')
    if panel.xlabel:
        out.append(f'<text x="{_fmt(left + w / 2)}" y="{_fmt(top + h + 2 * fs + 10)}" '
                   f'font-size="{fs}" text-anchor="middle">{_esc(panel.xlabel)}</text>')
    if panel.ylabel:
        cx, cy = x0 + fs, top + h / 2
        out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" font-size="{fs}" text-anchor="middle" '
                   f'transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{_esc(panel.ylabel)}</text>')

    for s in series:
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        if ok.sum() == 1 or len(s.x) == 1:
            i = int(np.flatnonzero(ok)[0])
            out.append(f'<circle cx="{_fmt(px(s.x[i]))}" cy="{_fmt(py(s.y[i]))}" '
                       f'r="{style.marker_radius}" fill="{s.color}"/>')
            continue
        if s.values is not None:
            colors = _ramp(np.asarray(s.values, dtype=float))
            for i in range(len(s.x) - 1):
                if ok[i] and ok[i + 1]:
                    out.append(f'<line x1="{_fmt(px(s.x[i]))}" y1="{_fmt(py(s.y[i]))}" '
                               f'x2="{_fmt(px(s.x[i + 1]))}" y2="{_fmt(py(s.y[i + 1]))}" '
                               f'stroke="{colors[i]}" stroke-width="{style.stroke}"/>')
            continue
        # NaN gaps split the polyline
        runs = np.split(np.arange(len(s.x)), np.flatnonzero(~ok))
        for run in runs:
            run = run[ok[run]]
            if run.size >= 2:
                pts = " ".join(f"{_fmt(px(s.x[i]))},{_fmt(py(s.y[i]))}" for i in run)
                out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" '
                           f'stroke-width="{style.stroke}"/>')
    out.append("</g>")
    return out


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_svg(panels: Panel | Sequence[Panel], style: PlotStyle = PlotStyle()) -> str:
    """Standalone SVG with the panels stacked vertically.

    Output depends only on the input, so equal inputs give byte-identical
    documents.  A one-point series is drawn as a single marker.
    """
    if isinstance(panels, Panel):
        panels = [panels]
    panels = list(panels)
    if not panels or any(not p.series or all(len(s.x) == 0 for s in p.series) for p in panels):
        raise EmptySeries("nothing to plot")
    for p in panels:
        for s in p.series:
            if len(s.x) != len(s.y):
                raise ValueError(f"series {s.label!r}: x and y differ in length")
    W = style.panel_width
    H = style.panel_height * len(panels)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif">',
           f'<rect width="{W}" height="{H}" fill="white"/>']
    for k, p in enumerate(panels):
        p = Panel([s for s in p.series if len(s.x)], p.title, p.xlabel, p.ylabel)
        out += _panel_svg(p, 0.0, k * style.panel_height, style)
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ----------------------------------------------------- standard figure sets

def phase_portrait(traj: Trajectory, mode: str, color_by: str, stride: int = 1) -> Panel:
    """Re/Im of ``alpha_mode`` coloured by a fourth variable (e.g. ``v``)."""
    a = traj.complex_channel(mode)[::stride]
    c = traj.channel(color_by)[::stride]
    return Panel([Series(a.real, a.imag, f"alpha_{mode}", values=c)],
                 title=f"alpha_{mode}, colour: {color_by}",
                 xlabel=f"Re alpha_{mode}", ylabel=f"Im alpha_{mode}")


def error_panels(times, amp_err, phase_err, stride: int = 1) -> list[Panel]:
    t = np.asarray(times)[::stride]
    return [Panel([Series(t, np.asarray(amp_err)[::stride], "amplitude error")],
                  title="amplitude error", xlabel="t (ns)", ylabel="|a_j| - |a_i|"),
            Panel([Series(t, np.asarray(phase_err)[::stride], "phase error", color="#a33")],
                  title="phase error", xlabel="t (ns)", ylabel="cos arg a_j - cos arg a_i")]


def ratio_panel(times, ratio, target: float | None = None, stride: int = 1) -> Panel:
    t = np.asarray(times)[::stride]
    series = [Series(t, np.asarray(ratio)[::stride], "psi_s / psi_w")]
    if target is not None and len(t):
        series.append(Series(np.array([t[0], t[-1]]), np.array([target, target]),
                             "target", color="#999"))
    return Panel(series, title="phase ratio", xlabel="t (ns)", ylabel="psi_s / psi_w")


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path
