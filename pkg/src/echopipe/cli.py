"""Command-line interface: ``simulate``, ``reconstruct``, ``benchmark``.

Diagnostics go to stderr; tables, records, and data go to stdout.  Exit
status: 0 success, 1 processing failure, 2 usage error.

Phantom spec file (JSON)::

    {"scatterers": [[x_m, z_m, amplitude], ...],
     "pulse": {"center_frequency": 5e6, "n_cycles": 2}}

Context spec file (JSON): the WFRF metadata object (speed_of_sound,
sampling_frequency, n_elements, pitch, tx_scheme, optional rx_channel_map
and time_zero_offset).  Pipeline spec files follow the schema documented in
:mod:`echopipe.pipeline`.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .environment import Environment, Phantom, SimulatorSource, open_dataset
from .errors import EchopipeError
from .formats import context_from_dict, write_pgm, write_wfrf
from .pipeline import BenchmarkResult, PipelineGraph, benchmark, bmode_chain, build_graph, execute
from .presets import (
    PRESET_NAMES,
    preset_environment,
    preset_mode_label,
    preset_pipeline,
)
from .types import BmodeImage

_DTYPES = {"f32": np.float32, "f64": np.float64}


def _load_json(path, what):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise EchopipeError(f"{what} file not found: {path}")
    except json.JSONDecodeError as exc:
        raise EchopipeError(f"{what} file {path} is not valid JSON: {exc}")


def _load_phantom(path) -> Phantom:
    raw = _load_json(path, "phantom spec")
    pulse = raw.get("pulse", {})
    return Phantom(
        scatterers=tuple(tuple(s) for s in raw["scatterers"]),
        center_frequency=float(pulse.get("center_frequency", 5e6)),
        n_cycles=float(pulse.get("n_cycles", 2.0)),
    )


def _load_pipeline(path) -> PipelineGraph:
    if path is None:
        return build_graph(bmode_chain())
    return build_graph(_load_json(path, "pipeline spec"))


def _cmd_simulate(args) -> int:
    phantom = _load_phantom(args.phantom)
    ctx = context_from_dict(_load_json(args.ctx, "context spec"))
    source = SimulatorSource(
        phantom,
        ctx,
        n_samples=args.n_samples,
        dtype=_DTYPES[args.dtype],
        seed=args.seed,
        noise_std=args.noise_std,
        max_frames=args.frames,
    )
    frames = [frame for frame, _ in Environment(source)]
    write_wfrf(args.out, frames, ctx)
    print(f"wrote {len(frames)} frame(s) to {args.out}", file=sys.stderr)
    return 0


def _cmd_reconstruct(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = _load_pipeline(args.pipeline)
    n_written = 0
    with open_dataset(args.input) as env:
        for index, obs in enumerate(env):
            outputs, _ = execute(graph, obs)
            for out_name, value in outputs.items():
                if not (isinstance(value, BmodeImage) and value.stage == "display"):
                    raise EchopipeError(
                        f"output node {out_name!r} is not a display image; "
                        "reconstruct needs a display-stage pipeline output"
                    )
                suffix = f"_{out_name}" if len(outputs) > 1 else ""
                stem = f"frame_{index:04d}{suffix}"
                write_pgm(value, out_dir / f"{stem}.pgm")
                if args.figures:
                    from .report import save_bmode_figure

                    save_bmode_figure(value, out_dir / f"{stem}.png", title=stem)
                n_written += 1
    if n_written == 0:
        raise EchopipeError(f"no frames in {args.input}")
    print(f"wrote {n_written} image(s) to {out_dir}", file=sys.stderr)
    return 0


def _benchmark_runs(args):
    """Yield (mode_label, graph, environment) per requested run."""
    runs = []
    if args.synthetic:
        for preset in args.synthetic:
            env = preset_environment(preset, dtype=_DTYPES[args.dtype], seed=args.seed)
            spec = (
                _load_json(args.pipeline, "pipeline spec")
                if args.pipeline
                else preset_pipeline(preset)
            )
            label = preset_mode_label(env._source.ctx)
            runs.append((label, build_graph(spec), env))
    if args.input:
        env = open_dataset(args.input)
        label = preset_mode_label(env._source._reader.context)
        graph = _load_pipeline(args.pipeline)
        runs.append((label, graph, env))
    return runs


def _cmd_benchmark(args) -> int:
    from .report import (
        format_records,
        format_table,
        make_report,
        save_timing_figure,
        write_csv,
    )

    runs = _benchmark_runs(args)
    if not runs:
        raise EchopipeError("benchmark needs --synthetic <preset> and/or --in <wfrf>")
    results: list[tuple[str, PipelineGraph, BenchmarkResult]] = []
    for label, graph, env in runs:
        with env:
            result = benchmark(graph, env, n_frames=args.frames, warmup=args.warmup)
        results.append((label, graph, result))
        print(
            f"{label}: {result.n_frames} frame(s) measured, "
            f"{result.timing.total_ms:.1f} ms/frame median",
            file=sys.stderr,
        )
    report = make_report(results)
    if args.format == "table":
        print(format_table(report))
    else:
        print(format_records(report))
    if args.report_dir:
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        write_csv(report, report_dir / "benchmark.csv")
        save_timing_figure(report, report_dir / "benchmark.png")
        print(f"wrote benchmark.csv and benchmark.png to {report_dir}", file=sys.stderr)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echopipe",
        description="Ultrasound B-mode reconstruction pipelines over raw RF data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="synthesize RF frames into a WFRF file")
    p_sim.add_argument("--phantom", required=True, help="phantom spec JSON")
    p_sim.add_argument("--ctx", required=True, help="acquisition context JSON")
    p_sim.add_argument("--out", required=True, help="output WFRF path")
    p_sim.add_argument("--frames", type=int, default=1)
    p_sim.add_argument("--n-samples", type=int, default=2048)
    p_sim.add_argument("--dtype", choices=sorted(_DTYPES), default="f64")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--noise-std", type=float, default=0.0)
    p_sim.set_defaults(func=_cmd_simulate)

    p_rec = sub.add_parser("reconstruct", help="reconstruct a WFRF file to PGM images")
    p_rec.add_argument("--in", dest="input", required=True, help="input WFRF path")
    p_rec.add_argument("--pipeline", help="pipeline spec JSON (default: B-mode chain)")
    p_rec.add_argument("--out-dir", required=True)
    p_rec.add_argument(
        "--figures", action="store_true",
        help="also render a PNG figure per frame",
    )
    p_rec.set_defaults(func=_cmd_reconstruct)

    p_bench = sub.add_parser("benchmark", help="per-stage timing of a pipeline")
    p_bench.add_argument(
        "--synthetic", action="append", choices=PRESET_NAMES, default=[],
        help="benchmark a synthetic preset (repeatable)",
    )
    p_bench.add_argument("--in", dest="input", help="benchmark a WFRF dataset")
    p_bench.add_argument("--pipeline", help="pipeline spec JSON")
    p_bench.add_argument("--frames", type=int, default=1)
    p_bench.add_argument("--warmup", type=int, default=1)
    p_bench.add_argument("--format", choices=("table", "records"), default="table")
    p_bench.add_argument("--dtype", choices=sorted(_DTYPES), default="f32")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument(
        "--report-dir", help="write benchmark.csv and benchmark.png here"
    )
    p_bench.set_defaults(func=_cmd_benchmark)
    return parser


def cli_main(argv=None) -> int:
    """Entry point; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except EchopipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> int:
    return cli_main()


if __name__ == "__main__":
    sys.exit(cli_main())
