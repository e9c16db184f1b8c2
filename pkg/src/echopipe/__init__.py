"""echopipe: ultrasound B-mode reconstruction as composable dataflow pipelines.

Raw RF channel data from a dataset or simulator flows through operator
graphs (Delay-and-Sum beamforming for synthetic-aperture and plane-wave
transmits, FIR filtering, analytic-signal envelope detection, dynamic-range
adjustment, sliding-moment QUS estimation) with per-stage timing capture.
"""

from .beamform import (
    DasPlan,
    INTERPOLATION_MODES,
    active_aperture,
    das_beamform,
    das_beamform_oracle,
)
from .environment import (
    Environment,
    Phantom,
    SimulatorSource,
    next_observation,
    open_dataset,
    open_simulator,
    simulate_rf,
)
from .formats import read_wfrf, write_pgm, write_wfrf
from .pipeline import (
    BenchmarkResult,
    PipelineGraph,
    StageTiming,
    benchmark,
    bmode_chain,
    build_graph,
    execute,
)
from .qus import (
    DenseLayer,
    DenseModel,
    HkParamsMap,
    MomentMaps,
    dense_forward,
    estimate_hk_map,
    load_model,
    save_model,
    sliding_moments,
)
from .sigproc import (
    FirSpec,
    analytic_signal,
    dynamic_adjustment,
    envelope,
    fir_filter,
)
from .types import (
    AcquisitionContext,
    ApodizationSpec,
    BmodeImage,
    ImageGrid,
    PwScheme,
    RfFrame,
    StaScheme,
    centered_rx_map,
    default_grid,
    validate_pair,
)

__version__ = "0.1.0"
