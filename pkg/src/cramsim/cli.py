"""Command-line entry point.

Subcommands: ``calibrate``, ``gate-sweep``, ``adder``, ``projection``,
``run-schedule``, and ``preset`` (bundled experiment recipes ``fig4``,
``fig5``, ``fig6``).  Every run writes CSV data files, a deterministic
config snapshot, and PNG figures (suppress with ``--no-figures``) into the
output directory.  Exit codes: 0 success, 2 usage/configuration, 3
calibration failure, 4 capacity, 1 internal.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, compiler, device, reports, vcl
from .analysis import SimConfig
from .device import MtjParams
from .errors import (CalibrationError, CapacityError, ConfigError,
                     CramSimError, ParameterError, ScheduleError)
from .gates import ProbGate
from .models import GateModel

DEFAULT_GATES = ("NAND", "MAJ3", "MAJ5")
DEFAULT_TMR_PERCENTS = (109.0, 150.0, 200.0, 250.0, 300.0)
DEFAULT_PULSE_WIDTHS = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
DEFAULT_CIRCUITS = ("adder:4", "mult:4", "dot:4x4")


@dataclass
class ExperimentConfig:
    """Run settings merged from the config file and command-line flags."""

    seed: int = 0
    trials: int = 10_000
    out_dir: str = "cramsim-out"
    device: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    adder: dict = field(default_factory=dict)
    projection: dict = field(default_factory=dict)
    write_error_rate: float = 0.0
    row_width: int | None = None
    workers: int = 1
    figures: bool = True

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def apply_args(self, args: argparse.Namespace) -> None:
        for attr, key in (("seed", "seed"), ("trials", "trials"),
                          ("out", "out_dir"), ("row_width", "row_width"),
                          ("workers", "workers"),
                          ("write_error_rate", "write_error_rate")):
            value = getattr(args, attr, None)
            if value is not None:
                setattr(self, key, value)
        if getattr(args, "no_figures", False):
            self.figures = False
        if getattr(args, "model", None):
            self.model["kind"] = args.model
        if getattr(args, "delta", None) is not None:
            self.model["delta"] = args.delta
        if getattr(args, "pulse_width", None) is not None:
            self.model.setdefault("pulse_width", args.pulse_width)
            self.sweep["pulse_width"] = args.pulse_width
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not (0.0 <= self.write_error_rate <= 1.0):
            raise ConfigError("write_error_rate must be in [0,1]")

    def snapshot(self) -> dict:
        return {
            "seed": self.seed, "trials": self.trials, "out_dir": self.out_dir,
            "device": self.device, "model": self.model, "sweep": self.sweep,
            "adder": self.adder, "projection": self.projection,
            "write_error_rate": self.write_error_rate,
            "row_width": self.row_width, "workers": self.workers,
            "figures": self.figures,
        }


_CAL_CACHE: dict = {}


def resolve_params(cfg: ExperimentConfig) -> MtjParams:
    dev = cfg.device
    if "params" in dev:
        return MtjParams.from_dict(dev["params"])
    if "params_file" in dev:
        path = Path(dev["params_file"])
        if not path.exists():
            raise ConfigError(f"device params file not found: {path}")
        return MtjParams.load(path)
    anchors = [tuple(a) for a in dev.get("anchors", device.DEFAULT_ANCHORS)]
    target = tuple(dev.get("gate_target", device.DEFAULT_GATE_TARGET))
    v_logic = float(dev.get("v_logic", device.ANCHOR_V_LOGIC))
    key = (tuple(anchors), target, v_logic)
    if key not in _CAL_CACHE:
        _CAL_CACHE[key] = device.calibrate_from_anchors(anchors, target, v_logic)
    return _CAL_CACHE[key]


def resolve_model(cfg: ExperimentConfig, params: MtjParams | None = None) -> GateModel:
    spec = cfg.model
    kind = spec.get("kind", "physics")
    if kind == "ideal":
        return GateModel.ideal()
    if kind == "table":
        if "per_step" in spec:
            return GateModel.from_step_tables(
                [ProbGate.from_dict(t) for t in spec["per_step"]]
            )
        if "tables" in spec:
            return GateModel.from_tables(
                {k: ProbGate.from_dict(t) for k, t in spec["tables"].items()}
            )
        if "delta" in spec:
            return GateModel.from_delta(float(spec["delta"]))
        raise ConfigError("table model needs 'delta', 'tables', or 'per_step'")
    if kind == "physics":
        params = params if params is not None else resolve_params(cfg)
        return GateModel.physics(
            params,
            pulse_width=float(spec.get("pulse_width", 1e-3)),
            objective=spec.get("objective", "mean"),
        )
    raise ConfigError(f"unknown model kind {kind!r}")


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports.write_json(out / "config.json", cfg.snapshot())
    reports.write_json(out / "run_meta.json",
                       {"tool": "cramsim", "version": "0.1.0"},
                       with_timestamp=True)
    return out


def cmd_calibrate(cfg: ExperimentConfig) -> int:
    if "anchors" not in cfg.device:
        raise ConfigError("calibrate requires device anchors in the config file")
    out = _out_dir(cfg)
    anchors = [tuple(a) for a in cfg.device["anchors"]]
    target = tuple(cfg.device.get("gate_target", device.DEFAULT_GATE_TARGET))
    v_logic = float(cfg.device.get("v_logic", device.ANCHOR_V_LOGIC))
    params = device.calibrate_from_anchors(anchors, target, v_logic)
    params.save(out / "params.json")
    report = device.calibration_report(params, anchors, v_logic)
    reports.write_json(out / "calibration_report.json", report)
    print(f"calibrated: r_p0={params.r_p0:.1f} ohm, r_ap0={params.r_ap0:.1f} ohm, "
          f"v_h={params.v_h:.4f} V, delta_th={params.delta_th:.2f}, "
          f"v_c0={params.v_c0:.4f} V")
    print(f"wrote {out / 'params.json'}")
    return 0


def cmd_gate_sweep(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    params = resolve_params(cfg)
    params.save(out / "params.json")
    sw = cfg.sweep
    v_min = float(sw.get("v_min", 0.0))
    v_max = float(sw.get("v_max", 1.0))
    v_step = float(sw.get("v_step", 1e-3))
    if not (v_max > v_min and v_step > 0):
        raise ConfigError(f"empty drive grid: [{v_min}, {v_max}] step {v_step}")
    pulse = float(sw.get("pulse_width", 1e-3))
    gates = tuple(sw.get("gates", DEFAULT_GATES))
    v_abs = np.arange(v_min, v_max + 0.5 * v_step, v_step)

    all_rows = []
    summary = []
    for gate in gates:
        sweep = vcl.sweep_gate(gate, params, pulse, v_abs)
        all_rows.extend(reports.gate_sweep_rows(sweep))
        for objective, series in (("mean", sweep.mean_error),
                                  ("worst", sweep.worst_error)):
            idx = int(np.argmin(series))
            resp = sweep.response_at(idx)
            summary.append((gate, objective, resp.v_logic, pulse,
                            resp.mean_accuracy, resp.worst_accuracy))
        if cfg.figures:
            reports.plot_gate_sweep(sweep, out / f"gate_sweep_{gate}.png")
    reports.write_csv(out / "gate_sweep.csv", reports.GATE_SWEEP_HEADER, all_rows)
    reports.write_csv(
        out / "gate_optima.csv",
        ("gate", "objective", "v_star", "pulse_width", "mean_accuracy",
         "worst_accuracy"),
        summary,
    )
    for gate, objective, v_star, _, mean_acc, worst_acc in summary:
        print(f"{gate} ({objective}): v*={v_star:+.3f} V, "
              f"mean={mean_acc:.4f}, worst={worst_acc:.4f}")
    return 0


def cmd_adder(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    params = resolve_params(cfg)
    model = resolve_model(cfg, params)
    designs = tuple(cfg.adder.get("designs", ("maj-not", "all-nand")))
    schedules = {}
    for design in designs:
        if design == "maj-not":
            schedules[design] = compiler.full_adder_maj_not()
        elif design == "all-nand":
            schedules[design] = compiler.full_adder_all_nand()
        else:
            raise ConfigError(f"unknown adder design {design!r}")

    maps = {}
    rows = []
    summary = []
    for design, sched in schedules.items():
        sim = SimConfig(model=model, trials=cfg.trials, seed=cfg.seed,
                        write_error_rate=cfg.write_error_rate)
        amap = analysis.accuracy_map(sched, sim)
        maps[design] = amap
        for state, port, acc in amap.rows:
            rows.append((design, state, port, acc))
        summary.append((design, amap.overall, amap.trials, amap.method))
        print(f"{design}: overall accuracy {amap.overall * 100:.1f}% "
              f"(n={amap.trials})")
    reports.write_csv(out / "adder_accuracy_map.csv",
                      ("design", "input_state", "output_port", "accuracy"), rows)
    reports.write_csv(out / "adder_summary.csv",
                      ("design", "overall_accuracy", "trials", "method"), summary)
    if cfg.figures:
        reports.plot_accuracy_maps(maps, out / "adder_accuracy_maps.png")
    return 0


def parse_circuit(spec: str):
    """Parse a circuit spec: adder:N, mult:N, or dot:NxK."""
    try:
        name, _, arg = spec.partition(":")
        if name == "adder":
            sched = compiler.ripple_carry_adder(int(arg))
            return sched, {"cin": 0}
        if name == "mult":
            return compiler.array_multiplier(int(arg)), {}
        if name == "dot":
            n, _, k = arg.partition("x")
            return compiler.dot_product(int(n), int(k)), {}
    except (ValueError, ParameterError) as exc:
        raise ConfigError(f"bad circuit spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown circuit kind in {spec!r}")


def cmd_projection(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    params = resolve_params(cfg)
    params.save(out / "params.json")
    proj = cfg.projection
    tmr_percents = tuple(float(t) for t in proj.get("tmr_percents",
                                                    DEFAULT_TMR_PERCENTS))
    pulse_widths = tuple(float(p) for p in proj.get("pulse_widths",
                                                    DEFAULT_PULSE_WIDTHS))
    circuits = tuple(proj.get("circuits", DEFAULT_CIRCUITS))
    base_pulse = float(proj.get("base_pulse_width", 1e-3))
    if not circuits:
        raise ConfigError("projection needs a non-empty circuit list")
    if not tmr_percents or not pulse_widths:
        raise ConfigError("projection needs TMR percents and pulse widths")

    err_rows = vcl.min_error_vs_tmr("NAND", params, tmr_percents, pulse_widths)
    reports.write_csv(
        out / "nand_min_error.csv",
        ("gate", "tmr_percent", "pulse_width", "min_error", "v_star"),
        [(r["gate"], r["tmr_percent"], r["pulse_width"], r["min_error"],
          r["v_star"]) for r in err_rows],
    )
    if cfg.figures:
        reports.plot_min_error(err_rows, out / "nand_min_error.png")

    deltas = {}
    for tmr in tmr_percents:
        scaled = device.scale_tmr(params, tmr / 100.0)
        deltas[tmr], _ = vcl.min_nand_error(scaled, base_pulse)

    jobs = []
    for spec in circuits:
        sched, fixed = parse_circuit(spec)
        narrow = sched.meta.get("circuit") in (
            "ripple_carry_adder", "full_adder_all_nand", "full_adder_maj_not"
        )
        for tmr in tmr_percents:
            jobs.append((spec, sched, fixed, tmr, deltas[tmr], narrow))

    def run_job(job):
        spec, sched, fixed, tmr, delta, narrow = job
        trials = cfg.trials
        samples = int(proj.get("input_samples", 10_000))
        if sched.meta.get("circuit") == "dot_product":
            trials = int(proj.get("dot_trials", 100))
            samples = int(proj.get("dot_input_samples", 2000))
        sim = SimConfig(model=GateModel.from_delta(delta), trials=trials,
                        seed=cfg.seed, write_error_rate=cfg.write_error_rate,
                        input_samples=samples, fixed_inputs=fixed)
        rep = analysis.evaluate_ned(sched, sim, prefer_exact=narrow)
        return {
            "circuit": spec, "tmr_percent": tmr, "delta": delta,
            "ned": rep.ned, "ned_accuracy": rep.ned_accuracy,
            "mean_error_distance": rep.mean_error_distance,
            "output_bits": rep.output_bits, "method": rep.method,
            "inputs_evaluated": rep.inputs_evaluated,
            "enumerated": rep.enumerated,
            "trials": rep.trials if rep.trials is not None else "",
        }

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            ned_rows = list(pool.map(run_job, jobs))
    else:
        ned_rows = [run_job(j) for j in jobs]

    header = ("circuit", "tmr_percent", "delta", "ned", "ned_accuracy",
              "mean_error_distance", "output_bits", "method",
              "inputs_evaluated", "enumerated", "trials")
    reports.write_csv(out / "ned_projection.csv", header,
                      [[r[k] for k in header] for r in ned_rows])
    if cfg.figures:
        reports.plot_ned(ned_rows, out / "ned_projection.png")
    for r in ned_rows:
        print(f"{r['circuit']} @ TMR {r['tmr_percent']:g}%: "
              f"delta={r['delta']:.3g}, NED={r['ned']:.3g} "
              f"({r['method']})")
    return 0


def _parse_inputs(sched: compiler.Schedule, text: str) -> dict[str, int]:
    """Accepts "A=1,B=0" port bits or "a=5,b=3" operand integers."""
    bits: dict[str, int] = {}
    operands = sched.meta.get("operands", {})
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, value = item.partition("=")
        name = name.strip()
        if not value.strip():
            raise ConfigError(f"bad input assignment {item!r}")
        ivalue = int(value)
        if name in sched.input_ports:
            bits[name] = ivalue & 1
        elif name in operands:
            ports = operands[name]
            if ports and isinstance(ports[0], list):
                raise ConfigError(
                    f"operand {name!r} is a vector; assign element ports instead"
                )
            for i, port in enumerate(ports):
                bits[port] = (ivalue >> i) & 1
        else:
            raise ConfigError(f"unknown input {name!r}")
    return bits


def cmd_run_schedule(cfg: ExperimentConfig, schedule_path: str,
                     inputs: str | None) -> int:
    path = Path(schedule_path)
    if not path.exists():
        raise ConfigError(f"schedule file not found: {path}")
    sched = compiler.Schedule.load(path)
    issues = compiler.validate_schedule(sched)
    if issues:
        raise ScheduleError(f"invalid schedule: {issues}")
    if cfg.row_width is not None and sched.cell_count > cfg.row_width:
        raise CapacityError(
            f"schedule needs {sched.cell_count} cells, row width is {cfg.row_width}"
        )
    out = _out_dir(cfg)
    model = resolve_model(cfg)
    fixed = _parse_inputs(sched, inputs) if inputs else {}
    sim = SimConfig(model=model, trials=cfg.trials, seed=cfg.seed,
                    write_error_rate=cfg.write_error_rate, fixed_inputs=fixed)
    dist = analysis.monte_carlo(sched, sim)
    rows = []
    for key in sorted(dist.per_input):
        bits = analysis.input_bits_for_key(sched, key, fixed)
        label = "".join(str(bits[n]) for n in sched.input_order)
        for value in sorted(dist.per_input[key]):
            rows.append((label, value, dist.per_input[key][value]))
    reports.write_csv(out / "schedule_outputs.csv",
                      ("input_state", "output_value", "probability"), rows)
    print(f"evaluated {len(dist.per_input)} input state(s) x {cfg.trials} trials")
    return 0


def cmd_preset(cfg: ExperimentConfig, name: str) -> int:
    if name == "fig4":
        cfg.sweep.setdefault("gates", list(DEFAULT_GATES))
        return cmd_gate_sweep(cfg)
    if name == "fig5":
        cfg.model.setdefault("kind", "physics")
        return cmd_adder(cfg)
    if name == "fig6":
        cfg.projection.setdefault("circuits",
                                  ["adder:4", "mult:4", "dot:4x1", "dot:4x2",
                                   "dot:4x4"])
        return cmd_projection(cfg)
    raise ConfigError(f"unknown preset {name!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cramsim",
        description="MTJ computational-RAM simulator: gate physics, circuit "
                    "schedules, and accuracy projections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="RNG seed")
        p.add_argument("--trials", type=int, default=None,
                       help="trials per input state")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--row-width", type=int, default=None, dest="row_width",
                       help="enforce a maximum row width (e.g. 7)")
        p.add_argument("--model", choices=("physics", "table", "ideal"),
                       default=None, help="gate model")
        p.add_argument("--delta", type=float, default=None,
                       help="error rate for the table model")
        p.add_argument("--pulse-width", type=float, default=None,
                       dest="pulse_width", help="drive pulse width in seconds")
        p.add_argument("--write-error-rate", type=float, default=None,
                       dest="write_error_rate", help="memory write error rate")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel worker threads")
        p.add_argument("--no-figures", action="store_true", dest="no_figures",
                       help="skip PNG figure rendering")

    common(sub.add_parser("calibrate", help="fit device parameters to anchors"))
    common(sub.add_parser("gate-sweep",
                          help="mean output level and accuracy vs drive voltage"))
    common(sub.add_parser("adder", help="1-bit full-adder accuracy maps"))
    common(sub.add_parser("projection",
                          help="gate error vs TMR and circuit NED tables"))
    p_run = sub.add_parser("run-schedule", help="evaluate a schedule file")
    common(p_run)
    p_run.add_argument("--schedule", required=True, help="schedule JSON file")
    p_run.add_argument("--inputs", default=None,
                       help='input assignment, e.g. "A=1,B=0,C=1" or "a=5,b=3"')
    p_pre = sub.add_parser("preset", help="run a bundled experiment recipe")
    common(p_pre)
    p_pre.add_argument("name", choices=("fig4", "fig5", "fig6"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            if not Path(args.config).exists():
                raise ConfigError(f"config file not found: {args.config}")
            cfg = ExperimentConfig.load(args.config)
        else:
            cfg = ExperimentConfig()
        cfg.apply_args(args)
        if args.command == "calibrate":
            return cmd_calibrate(cfg)
        if args.command == "gate-sweep":
            return cmd_gate_sweep(cfg)
        if args.command == "adder":
            return cmd_adder(cfg)
        if args.command == "projection":
            return cmd_projection(cfg)
        if args.command == "run-schedule":
            return cmd_run_schedule(cfg, args.schedule, args.inputs)
        if args.command == "preset":
            return cmd_preset(cfg, args.name)
        raise ConfigError(f"unknown command {args.command!r}")
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        if getattr(exc, "residuals", None) is not None:
            print(f"residuals: {exc.residuals}", file=sys.stderr)
        return 3
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, ParameterError, ScheduleError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CramSimError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
