"""Command-line entry point.

    optosync run --preset fig7 --out results/
    optosync sweep --preset fig6_k1 --param k_1+k_2 --values "24 kHz,2.4 MHz,240 MHz"
    optosync lle --preset fig3b --method benettin
    optosync list-presets

Exit status: 0 success, 1 analysis error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .dynamics import build_model
from .errors import (BadPath, ConfigError, IoError, OptosyncError, StageError, UnknownPreset)
from .io import (error_panels, load_config, parse_rate, phase_portrait, ratio_panel, render_svg,
                 serialize_config, write_csv, write_text)
from .lyapunov import LleMethod, estimate_lle
from .scenarios import PRESET_NAMES, ScenarioConfig, list_presets, preset, run_scenario, sweep

log = logging.getLogger("optosync")

EXIT_OK, EXIT_ANALYSIS, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else preset(args.preset)
    plan = cfg.plan
    if getattr(args, "dt", None) is not None:
        plan = replace(plan, dt=args.dt)
    if getattr(args, "duration", None) is not None:
        plan = replace(plan, t1=plan.t0 + plan.discard + args.duration)
    return replace(cfg, plan=plan) if plan is not cfg.plan else cfg


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _figures(report, out: Path, cfg: ScenarioConfig) -> dict[str, str]:
    files = {}
    traj = report.trajectory
    s = cfg.export_stride
    if traj is not None and len(traj.times) > 1:
        color = "v" if "v" in traj.channels else f"v_{cfg.setup.weak_mode}"
        for mode in cfg.setup.cavity_names:
            doc = render_svg(phase_portrait(traj, mode, color, stride=s))
            files[f"portrait_{mode}"] = str(write_text(out / f"portrait_{mode}.svg", doc).name)
    if "amplitude_error" in report.series:
        doc = render_svg(error_panels(traj.times, report.series["amplitude_error"],
                                      report.series["phase_error"], stride=s))
        files["errors"] = str(write_text(out / "errors.svg", doc).name)
    if "phase_ratio" in report.series:
        doc = render_svg(ratio_panel(report.series["ratio_times"], report.series["phase_ratio"],
                                     cfg.lock_target(), stride=s))
        files["phase_ratio"] = str(write_text(out / "phase_ratio.svg", doc).name)
    return files


def cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_scenario(cfg)
    outputs = {"config": write_text(out / "config.json", serialize_config(cfg)).name}
    if report.trajectory is not None:
        outputs["trajectory"] = write_csv(report.trajectory, out / "trajectory.csv",
                                          stride=cfg.export_stride).name
    outputs.update(_figures(report, out, cfg))
    outputs["report"] = "report.json"
    report.outputs = dict(sorted(outputs.items()))
    write_text(out / "report.json", _dump(report.to_dict()))
    manifest = {"created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
                "files": report.outputs}
    write_text(out / "manifest.json", _dump(manifest))
    print(_dump(_summary(report)), end="")
    return EXIT_ANALYSIS if report.errors else EXIT_OK


def _summary(report) -> dict:
    d = report.to_dict()
    return {"name": report.config.name, "lle": d["lle"], "sync": d["sync"], "lock": d["lock"],
            "regime": d["regime"], "errors": d["errors"]}


def _value(text: str) -> float:
    return parse_rate(text)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    try:
        values = [_value(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc), field="values") from None
    if not values:
        raise ConfigError("no sweep values given", field="values")
    rep = sweep(cfg, args.param, values, workers=args.workers)
    doc = rep.to_dict()
    text = _dump(doc)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_text(out / "sweep.json", text)
    rows = [{"value": v, **_summary(r)} for v, r in rep]
    print(_dump(rows), end="")
    return EXIT_ANALYSIS if any(r.errors for _, r in rep) else EXIT_OK


def cmd_lle(args) -> int:
    cfg = _config(args)
    model = build_model(cfg.params)
    est = estimate_lle(model, cfg.ic, cfg.lle, LleMethod.coerce(args.method))
    print(_dump({"name": cfg.name, **est.to_dict()}), end="")
    return EXIT_OK


def cmd_list(args) -> int:
    width = max(len(n) for n in PRESET_NAMES)
    for name, desc, fig in list_presets():
        print(f"{name:<{width}}  {fig:<11}  {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="optosync", description="Chaos synchronization in optomechanical networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--preset", choices=PRESET_NAMES, metavar="NAME")
        g.add_argument("--config", metavar="FILE", help="JSON scenario document")

    r = sub.add_parser("run", help="run one scenario and write report, CSV and plots")
    source(r)
    r.add_argument("--out", default="out", metavar="DIR")
    r.add_argument("--dt", type=float, metavar="NS")
    r.add_argument("--duration", type=float, metavar="NS", help="recorded span after the discard")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario for several values of one parameter")
    source(s)
    s.add_argument("--param", required=True, metavar="PATH",
                   help="e.g. g_w, k_1+k_2, plan.dt, lle.t_total")
    s.add_argument("--values", required=True, metavar="V1,V2,...",
                   help="comma-separated; rates may carry Hz/kHz/MHz/GHz")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", metavar="DIR")
    s.add_argument("--dt", type=float, metavar="NS")
    s.add_argument("--duration", type=float, metavar="NS")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("lle", help="largest Lyapunov exponent only")
    source(e)
    e.add_argument("--method", choices=["wolf", "benettin"], default="wolf", type=str.lower)
    e.set_defaults(func=cmd_lle)

    ls = sub.add_parser("list-presets", help="names, figure references and descriptions")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UnknownPreset, BadPath, IoError) as exc:
        print(f"optosync: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StageError, OptosyncError, ArithmeticError) as exc:
        print(f"optosync: analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
