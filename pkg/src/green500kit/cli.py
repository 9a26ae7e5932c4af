"""Command-line front end.

Exit codes: 0 ok, 1 rule violation, 2 input or parse error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import aggregation, methodology, powermodel, report, roofline, telemetry, window_analysis
from .errors import Green500Error, ParseError

log = logging.getLogger("green500kit")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


def _load_traces(paths: list[str]) -> telemetry.PowerTrace:
    if not paths:
        raise ParseError("at least one --trace is required")
    return telemetry.merge_traces(telemetry.load_trace(p) for p in paths)


def _default_window(run: methodology.RunRecord, level: int) -> methodology.MeasurementWindow:
    if methodology.level_rule(level).window_rule is None:
        return methodology.MeasurementWindow(run.t_start, run.t_end)
    lo, hi, _ = methodology.l1_bounds(run)
    return methodology.MeasurementWindow(lo, hi)


def cmd_measure(args) -> dict:
    trace = _load_traces(args.trace)
    run = methodology.load_run(args.run)
    w = methodology.MeasurementWindow.parse(args.window) if args.window else \
        _default_window(run, args.level)
    rep = methodology.compliance_report(trace, run, w, args.level, args.network_w,
                                        args.tolerance)
    body = rep.to_json()
    return report.make_report(
        "measure", rep.ok,
        inputs={"traces": args.trace, "run": args.run, "run_record": run.to_json()},
        parameters={"level": args.level, "window": f"{w.w0!r}:{w.w1!r}",
                    "network_w": args.network_w, "tolerance": args.tolerance},
        verdicts={"window": body["window_verdict"], "fraction": body["fraction_verdict"],
                  "consistency": body["consistency"]},
        metrics={"avg_power_w": rep.avg_power, "system_power_w": rep.system_power,
                 "efficiency_mflops_per_w": rep.efficiency,
                 "implied_avg_power_from_reported_w": (
                     methodology.implied_power(run.performance, run.reported_efficiency)
                     if run.reported_efficiency else None)},
    )


def cmd_windows(args) -> dict:
    trace = _load_traces(args.trace)
    run = methodology.load_run(args.run)
    res = window_analysis.exploit_gap(trace, run, args.step, args.workers)
    rep = report.make_report(
        "windows", True,
        inputs={"traces": args.trace, "run": args.run},
        parameters={"step": args.step, "workers": args.workers},
        verdicts={},
        metrics=res.summary(),
    )
    rep["_curve_csv"] = res.curve_csv()
    return rep


def cmd_extrapolate(args) -> dict:
    run = methodology.load_run(args.run) if args.run else None
    measured = args.measured_nodes or (run.nodes_measured if run else None)
    total = args.total_nodes or (run.nodes_total if run else None)
    if measured is None or total is None:
        raise ParseError("node counts needed: --measured-nodes/--total-nodes or --run")
    if args.power is not None:
        power = args.power
        source = {"power_w": power}
    else:
        if run is None:
            raise ParseError("--trace needs --run (or pass --power)")
        trace = _load_traces(args.trace)
        w = methodology.MeasurementWindow.parse(args.window) if args.window else \
            methodology.MeasurementWindow(run.t_start, run.t_end)
        power = telemetry.average_power(trace, w.w0, w.w1)
        source = {"traces": args.trace, "window": f"{w.w0!r}:{w.w1!r}"}
    system = aggregation.extrapolate_power(power, measured, total, args.network_w)
    metrics = {"measured_avg_power_w": power, "extrapolated_power_w": system}
    if args.nodes:
        stats = aggregation.variability(aggregation.load_node_samples(args.nodes))
        bound = aggregation.extrapolation_uncertainty(stats)
        metrics.update(variability=stats.to_json(), uncertainty_rel=bound,
                       extrapolated_power_bounds_w=[system * (1 - bound), system * (1 + bound)])
    if run is not None:
        metrics["efficiency_mflops_per_w"] = methodology.efficiency(run.performance, system)
    return report.make_report(
        "extrapolate", True,
        inputs={**source, "run": args.run, "nodes": args.nodes},
        parameters={"measured_nodes": measured, "total_nodes": total,
                    "network_w": args.network_w},
        verdicts={}, metrics=metrics,
    )


def cmd_synth(args) -> dict:
    raw = powermodel.load_json(args.params)
    params = powermodel.HplTraceParams.from_json(raw)
    dt = args.dt or raw.get("dt") or params.duration / 1000
    trace = powermodel.synth_hpl_trace(params, float(dt))
    Path(args.trace_out).write_text(telemetry.dump_csv(trace))
    full = telemetry.average_power(trace, trace.start, trace.end)
    return report.make_report(
        "synth", True,
        inputs={"params": args.params},
        parameters={"dt": float(dt), "trace_out": args.trace_out},
        verdicts={},
        metrics={"samples": len(trace), "full_run_avg_power_w": full},
    )


def cmd_plan(args) -> dict:
    node = roofline.NodeConfig.from_json(roofline.load_json(args.inventory))
    jobs_raw = roofline.load_json(args.jobs) if args.jobs else []
    if isinstance(jobs_raw, dict):
        jobs_raw = jobs_raw.get("jobs", [])
    jobs = [roofline.LatticeJob.from_json(j) for j in jobs_raw]
    if args.kernel:
        kraw = roofline.load_json(args.kernel)
        kernel = roofline.KernelModel(float(kraw["arithmetic_intensity"]),
                                      float(kraw.get("bandwidth_efficiency", 1.0)))
    else:
        kernel = roofline.DSLASH
    placements = [roofline.place_job(j, node, kernel, args.penalty).to_json() for j in jobs]
    thr = roofline.node_throughput(node, jobs, kernel, args.penalty)
    metrics = {
        "chip_gflops": [roofline.kernel_perf(c, kernel) for c in node.chips],
        "node_gpu_memory_bytes": node.gpu_memory,
        "placements": placements,
        "throughput": thr.to_json(),
    }
    if args.modes:
        mraw = roofline.load_json(args.modes)
        modes = [roofline.OperatingMode(str(m["name"]), float(m["performance_gflops"]),
                                        float(m["power_w"])) for m in mraw]
        best = roofline.mode_select(modes)
        metrics["selected_mode"] = {"name": best.name, "gflops_per_w": best.gflops_per_w}
    return report.make_report(
        "plan", True,
        inputs={"inventory": args.inventory, "jobs": args.jobs, "kernel": args.kernel,
                "modes": args.modes},
        parameters={"penalty": args.penalty, "arithmetic_intensity": kernel.arithmetic_intensity,
                    "bandwidth_efficiency": kernel.bandwidth_efficiency},
        verdicts={}, metrics=metrics,
    )


def cmd_report(args) -> dict:
    with open(args.input) as fh:
        return report.loads(fh.read())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="green500kit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here")
    common.add_argument("--format", choices=("json", "text", "csv"), default="json")

    traced = argparse.ArgumentParser(add_help=False)
    traced.add_argument("--trace", action="append", default=[], help="trace file (repeatable)")

    s = sub.add_parser("measure", parents=[common, traced], help="validate a measurement")
    s.add_argument("--run", required=True)
    s.add_argument("--level", type=int, choices=(1, 2, 3), default=1)
    s.add_argument("--window", help="w0:w1 in trace seconds")
    s.add_argument("--network-w", type=float, default=0.0)
    s.add_argument("--tolerance", type=float, default=methodology.DEFAULT_TOLERANCE)
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("windows", parents=[common, traced], help="sweep Level-1 windows")
    s.add_argument("--run", required=True)
    s.add_argument("--step", type=float)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_windows)

    s = sub.add_parser("extrapolate", parents=[common, traced],
                       help="scale metered power to the full system")
    s.add_argument("--power", type=float, help="measured average power in W")
    s.add_argument("--run")
    s.add_argument("--window")
    s.add_argument("--measured-nodes", type=int)
    s.add_argument("--total-nodes", type=int)
    s.add_argument("--network-w", type=float, default=0.0)
    s.add_argument("--nodes", help="node_id,efficiency_mflops_per_w CSV")
    s.set_defaults(func=cmd_extrapolate)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic HPL trace")
    s.add_argument("--params", required=True)
    s.add_argument("--trace-out", required=True, help="CSV trace output path")
    s.add_argument("--dt", type=float)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("plan", parents=[common], help="roofline placement and mode choice")
    s.add_argument("--inventory", required=True)
    s.add_argument("--jobs")
    s.add_argument("--kernel")
    s.add_argument("--modes")
    s.add_argument("--penalty", type=float, default=roofline.DEFAULT_MULTI_GPU_PENALTY)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("report", parents=[common], help="render a saved report")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        rep = args.func(args)
    except (Green500Error, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        if isinstance(exc, (KeyError, TypeError)):
            exc = f"bad input document: {exc}"
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL

    curve = rep.pop("_curve_csv", None)
    if args.command != "report":
        rep["provenance"]["argv"] = argv
    if args.out:
        Path(args.out).write_text(report.dumps(rep))
        if curve is not None:
            Path(args.out).with_suffix(".curve.csv").write_text(curve)
    if args.format == "text":
        sys.stdout.write(report.render_text(rep))
    elif args.format == "csv" and curve is not None:
        sys.stdout.write(curve)
    else:
        sys.stdout.write(report.dumps(rep))
    return EXIT_OK if rep.get("ok", True) else EXIT_VIOLATION
