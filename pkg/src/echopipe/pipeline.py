"""Dataflow-graph engine: build operator graphs from a declarative spec,
execute them per frame, and capture per-stage wall time.

Pipeline spec schema (JSON-compatible dict)::

    {
      "nodes": [
        {"name": "bf", "kind": "beamform",
         "params": {"window": "rectangular", "f_number": 0.0,
                    "interpolation": "linear", "grid": {"mode": "auto"}}},
        {"name": "analytic", "kind": "analytic_signal"},
        {"name": "env", "kind": "envelope"},
        {"name": "dyn", "kind": "dynamic_adjustment", "params": {"range_db": 30.0}}
      ],
      "edges": [
        {"from": "bf", "to": "analytic"},
        {"from": "analytic", "to": "env"},
        {"from": "env", "to": "dyn"}
      ],
      "inputs": ["bf"],
      "outputs": ["dyn"]
    }

``inputs`` nodes receive the (frame, context) observation on their single
port; multi-input operators address ports with ``"to_port"`` on edges.
Registered operator kinds: identity, fir_filter, beamform, analytic_signal,
envelope, dynamic_adjustment, sliding_moments, hk_estimator.
"""

from __future__ import annotations

import graphlib
import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import qus, sigproc
from .beamform import DasPlan, das_beamform
from .environment import Environment
from .errors import (
    CycleDetected,
    InsufficientFrames,
    InvalidMetadata,
    OperatorFailed,
    PortMismatch,
    UnknownOperator,
    WrongStage,
)
from .types import (
    AcquisitionContext,
    ApodizationSpec,
    BmodeImage,
    ImageGrid,
    RfFrame,
    default_grid,
)

OBSERVATION = "observation"


@dataclass(frozen=True)
class OperatorKind:
    """Registered operator: port typing plus a factory building the callable."""

    name: str
    input_kinds: tuple[str, ...]
    output_kind: str
    factory: object  # params dict -> callable(*inputs)


OPERATOR_REGISTRY: dict[str, OperatorKind] = {}


def register_operator(kind: OperatorKind) -> None:
    OPERATOR_REGISTRY[kind.name] = kind


def _expect_image(value, stage, op_name):
    if not isinstance(value, BmodeImage):
        raise WrongStage(f"{op_name} expects a BmodeImage, got {type(value).__name__}")
    if value.stage != stage:
        raise WrongStage(f"{op_name} expects stage {stage!r}, got {value.stage!r}")
    return value


class _IdentityOp:
    def __init__(self, params):
        pass

    def __call__(self, value):
        return value


class _FirFilterOp:
    """Filters raw channel data along the sample axis; context passes through."""

    def __init__(self, params):
        self.spec = sigproc.FirSpec(np.asarray(params["coefficients"], dtype=np.float64))

    def __call__(self, obs):
        frame, ctx = obs
        filtered = sigproc.fir_filter(frame.data, self.spec, axis=-1)
        return RfFrame(filtered.astype(frame.dtype, copy=False)), ctx


class _BeamformOp:
    """DAS node; caches grid and delay tables across frames of one source."""

    def __init__(self, params):
        self.apod = ApodizationSpec(
            window=params.get("window", "rectangular"),
            f_number=float(params.get("f_number", 0.0)),
        )
        self.interp = params.get("interpolation", "linear")
        self.n_threads = params.get("n_threads")
        self.grid_spec = params.get("grid", {"mode": "auto"})
        self._grid_key = None
        self._grid = None
        self._plan = None

    def _resolve_grid(self, ctx: AcquisitionContext, n_samples: int) -> ImageGrid:
        spec = self.grid_spec
        if "x_positions" in spec or "z_positions" in spec:
            if self._grid is None:
                self._grid = ImageGrid(
                    np.asarray(spec["x_positions"], dtype=np.float64),
                    np.asarray(spec["z_positions"], dtype=np.float64),
                )
            return self._grid
        key = (id(ctx), n_samples)
        if key != self._grid_key:
            mode = spec.get("mode", "auto")
            if mode == "auto":
                mode = "pw" if ctx.is_pw else "sta"
            self._grid = default_grid(ctx, n_samples, mode, spec.get("n_z"))
            self._grid_key = key
        return self._grid

    def __call__(self, obs):
        frame, ctx = obs
        grid = self._resolve_grid(ctx, frame.n_samples)
        if self._plan is None or not self._plan.matches(
            ctx, grid, self.apod, frame.dtype, frame.n_rx
        ):
            self._plan = DasPlan(ctx, grid, self.apod, frame.dtype, frame.n_rx)
        return das_beamform(
            frame, ctx, grid, self.apod, self.interp,
            n_threads=self.n_threads, plan=self._plan,
        )


class _AnalyticSignalOp:
    def __init__(self, params):
        pass

    def __call__(self, img):
        img = _expect_image(img, "rf", "analytic_signal")
        z = sigproc.analytic_signal(img.data, axis=0)
        return BmodeImage(z, stage="complex_analytic", grid=img.grid)


class _EnvelopeOp:
    def __init__(self, params):
        pass

    def __call__(self, img):
        img = _expect_image(img, "complex_analytic", "envelope")
        return BmodeImage(sigproc.envelope(img.data), stage="envelope", grid=img.grid)


class _DynamicAdjustmentOp:
    def __init__(self, params):
        self.range_db = float(params.get("range_db", 30.0))

    def __call__(self, img):
        img = _expect_image(img, "envelope", "dynamic_adjustment")
        disp = sigproc.dynamic_adjustment(img.data, self.range_db)
        return BmodeImage(disp.astype(img.data.dtype, copy=False), stage="display",
                          grid=img.grid)


class _SlidingMomentsOp:
    def __init__(self, params):
        self.window = tuple(params["window"])
        self.stride = tuple(params.get("stride", (1, 1)))

    def __call__(self, img):
        img = _expect_image(img, "envelope", "sliding_moments")
        return qus.sliding_moments(img.data, self.window, self.stride)


class _HkEstimatorOp:
    def __init__(self, params):
        self.window = tuple(params["window"])
        self.stride = tuple(params.get("stride", (1, 1)))
        if "model_path" in params:
            self.model = qus.load_model(params["model_path"])
        else:
            self.model = params["model"]

    def __call__(self, img):
        img = _expect_image(img, "envelope", "hk_estimator")
        return qus.estimate_hk_map(img.data, self.window, self.stride, self.model)


register_operator(OperatorKind("identity", ("any",), "any", _IdentityOp))
register_operator(OperatorKind("fir_filter", (OBSERVATION,), OBSERVATION, _FirFilterOp))
register_operator(OperatorKind("beamform", (OBSERVATION,), "rf_image", _BeamformOp))
register_operator(
    OperatorKind("analytic_signal", ("rf_image",), "complex_image", _AnalyticSignalOp)
)
register_operator(
    OperatorKind("envelope", ("complex_image",), "envelope_image", _EnvelopeOp)
)
register_operator(
    OperatorKind(
        "dynamic_adjustment", ("envelope_image",), "display_image", _DynamicAdjustmentOp
    )
)
register_operator(
    OperatorKind(
        "sliding_moments", ("envelope_image",), "moment_maps", _SlidingMomentsOp
    )
)
register_operator(
    OperatorKind("hk_estimator", ("envelope_image",), "hk_map", _HkEstimatorOp)
)


@dataclass
class Node:
    name: str
    kind: OperatorKind
    params: dict
    fn: object


@dataclass
class PipelineGraph:
    nodes: dict[str, Node]
    edges: list[tuple[str, str, int]]  # (src, dst, dst_port)
    inputs: list[str]
    outputs: list[str]
    order: list[str]

    def node_kind(self, name: str) -> str:
        return self.nodes[name].kind.name


@dataclass(frozen=True)
class StageTiming:
    """Wall-clock milliseconds per stage plus the whole-frame total."""

    stages: tuple[tuple[str, float], ...]
    total_ms: float

    @property
    def fps(self) -> float:
        return 1000.0 / self.total_ms if self.total_ms > 0 else float("inf")

    def stage_ms(self, name: str) -> float:
        for stage, ms in self.stages:
            if stage == name:
                return ms
        raise KeyError(name)


def build_graph(spec: dict) -> PipelineGraph:
    """Validate a declarative pipeline spec and build an executable graph."""
    nodes: dict[str, Node] = {}
    for raw in spec.get("nodes", []):
        name = raw["name"]
        kind_name = raw["kind"]
        if kind_name not in OPERATOR_REGISTRY:
            raise UnknownOperator(kind_name)
        if name in nodes:
            raise InvalidMetadata("nodes", f"duplicate node name {name!r}")
        kind = OPERATOR_REGISTRY[kind_name]
        params = raw.get("params", {})
        try:
            fn = kind.factory(params)
        except KeyError as exc:
            raise InvalidMetadata(f"{name}.params", f"missing parameter {exc}") from exc
        nodes[name] = Node(name=name, kind=kind, params=params, fn=fn)
    if not nodes:
        raise InvalidMetadata("nodes", "pipeline needs at least one node")

    inputs = list(spec.get("inputs", []))
    outputs = list(spec.get("outputs", []))
    for section, names in (("inputs", inputs), ("outputs", outputs)):
        for name in names:
            if name not in nodes:
                raise InvalidMetadata(section, f"unknown node {name!r}")
    if not inputs:
        raise InvalidMetadata("inputs", "pipeline needs at least one input node")
    if not outputs:
        raise InvalidMetadata("outputs", "pipeline needs at least one output node")

    edges: list[tuple[str, str, int]] = []
    fed: dict[tuple[str, int], tuple] = {}
    for raw in spec.get("edges", []):
        src, dst = raw["from"], raw["to"]
        port = int(raw.get("to_port", 0))
        edge_desc = (src, dst, port)
        for end in (src, dst):
            if end not in nodes:
                raise PortMismatch(edge_desc, "an existing node", f"missing {end!r}")
        arity = len(nodes[dst].kind.input_kinds)
        if not 0 <= port < arity:
            raise PortMismatch(edge_desc, f"port < {arity}", f"port {port}")
        if (dst, port) in fed:
            raise PortMismatch(edge_desc, "exactly one incoming edge",
                               "second edge into the same port")
        produced = nodes[src].kind.output_kind
        expected = nodes[dst].kind.input_kinds[port]
        if "any" not in (produced, expected) and produced != expected:
            raise PortMismatch(edge_desc, expected, produced)
        fed[(dst, port)] = edge_desc
        edges.append(edge_desc)

    for name, node in nodes.items():
        arity = len(node.kind.input_kinds)
        if name in inputs:
            if arity != 1:
                raise PortMismatch((OBSERVATION, name, 0), "single-port input node",
                                   f"{arity} ports")
            if (name, 0) in fed:
                raise PortMismatch(fed[(name, 0)], "no incoming edge on an input node",
                                   "edge into the observation port")
            expected = node.kind.input_kinds[0]
            if expected not in (OBSERVATION, "any"):
                raise PortMismatch((OBSERVATION, name, 0), expected, OBSERVATION)
        else:
            for port in range(arity):
                if (name, port) not in fed:
                    raise PortMismatch((None, name, port), "exactly one incoming edge",
                                       "no edge")

    sorter = graphlib.TopologicalSorter(
        {name: set() for name in nodes}
    )
    for src, dst, _ in edges:
        sorter.add(dst, src)
    try:
        order = list(sorter.static_order())
    except graphlib.CycleError as exc:
        raise CycleDetected(exc.args[1]) from exc

    return PipelineGraph(nodes=nodes, edges=edges, inputs=inputs, outputs=outputs,
                         order=order)


def execute(
    graph: PipelineGraph, obs: tuple[RfFrame, AcquisitionContext]
) -> tuple[dict, StageTiming]:
    """Run every node once in topological order on one observation.

    Returns the values of the declared output nodes plus per-stage timing.
    Node failures re-raise as :class:`OperatorFailed` naming the node.
    """
    incoming: dict[str, list] = {name: [] for name in graph.nodes}
    for src, dst, port in graph.edges:
        incoming[dst].append((port, src))
    values: dict[str, object] = {}
    stages = []
    t_start = time.perf_counter()
    for name in graph.order:
        node = graph.nodes[name]
        if name in graph.inputs:
            args = [obs]
        else:
            args = [values[src] for _, src in sorted(incoming[name])]
        t0 = time.perf_counter()
        try:
            result = node.fn(*args)
        except Exception as exc:
            raise OperatorFailed(name, exc) from exc
        stages.append((name, (time.perf_counter() - t0) * 1000.0))
        values[name] = result
    total_ms = (time.perf_counter() - t_start) * 1000.0
    timing = StageTiming(stages=tuple(stages), total_ms=total_ms)
    return {name: values[name] for name in graph.outputs}, timing


@dataclass
class BenchmarkResult:
    """Aggregated per-stage medians plus the per-frame samples behind them."""

    timing: StageTiming
    per_frame: list[StageTiming]
    n_frames: int
    warmup: int
    outputs: list[dict] | None = None


def benchmark(
    graph: PipelineGraph,
    env: Environment,
    n_frames: int,
    warmup: int = 0,
    keep_outputs: bool = False,
) -> BenchmarkResult:
    """Median per-stage and total ms/frame over ``n_frames`` observations.

    The first ``warmup`` observations are executed and discarded (JIT
    compilation, caches).  Raises :class:`InsufficientFrames` when the
    environment cannot supply ``warmup + n_frames`` observations.
    """
    if n_frames < 1:
        raise InsufficientFrames(f"need at least 1 measured frame, got {n_frames}")
    per_frame: list[StageTiming] = []
    outputs: list[dict] | None = [] if keep_outputs else None
    for i in range(warmup + n_frames):
        obs = env.next_observation()
        if obs is None:
            raise InsufficientFrames(
                f"environment exhausted after {i} of {warmup + n_frames} frames"
            )
        outs, timing = execute(graph, obs)
        if i >= warmup:
            per_frame.append(timing)
            if keep_outputs:
                outputs.append(outs)

    stage_names = [name for name, _ in per_frame[0].stages]
    stages = tuple(
        (name, statistics.median(t.stage_ms(name) for t in per_frame))
        for name in stage_names
    )
    total = statistics.median(t.total_ms for t in per_frame)
    agg = StageTiming(stages=stages, total_ms=total)
    return BenchmarkResult(
        timing=agg, per_frame=per_frame, n_frames=n_frames, warmup=warmup,
        outputs=outputs,
    )


def bmode_chain(
    range_db: float = 30.0,
    window: str = "rectangular",
    f_number: float = 0.0,
    interpolation: str = "linear",
    grid: dict | None = None,
) -> dict:
    """Spec dict for the standard reconstruction chain:
    beamform -> analytic signal -> envelope -> dynamic adjustment."""
    return {
        "nodes": [
            {
                "name": "beamform",
                "kind": "beamform",
                "params": {
                    "window": window,
                    "f_number": f_number,
                    "interpolation": interpolation,
                    "grid": grid or {"mode": "auto"},
                },
            },
            {"name": "analytic_signal", "kind": "analytic_signal"},
            {"name": "envelope", "kind": "envelope"},
            {
                "name": "dynamic_adjustment",
                "kind": "dynamic_adjustment",
                "params": {"range_db": range_db},
            },
        ],
        "edges": [
            {"from": "beamform", "to": "analytic_signal"},
            {"from": "analytic_signal", "to": "envelope"},
            {"from": "envelope", "to": "dynamic_adjustment"},
        ],
        "inputs": ["beamform"],
        "outputs": ["dynamic_adjustment"],
    }
