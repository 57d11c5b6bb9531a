"""Approximation-error propagation and precision-reduction exploration
for fixed-point spiking neural networks.

The package models a single spiking layer twice: bit-exactly on raw
Q16.16 integers, and abstractly with interval numbers that carry the
error introduced by cutting fractional bits off stored parameters.
Watchers placed along the interval flow drive a search that backs off
per-weight precision until the output spike counters are pinned down.
"""

from .fixedpoint import (
    MAX_CUT,
    FixQ16x16,
    OutOfRangeError,
    error_bounds,
    max_truncation_error,
    quantize,
    truncate,
    truncate_raw,
    truncation_error,
    truncation_error_raw,
)
from .interval import GRID, Interval, IntervalOverflowError
from .ianum import IaNum, TriBool, cmp_gt, from_exact, from_param
from .snn import (
    ExactSemantics,
    FlowObserver,
    IaSemantics,
    LayerParams,
    LayerState,
    ModelFormatError,
    load_model,
    run,
    run_exact,
    run_exact_batch,
    run_ia,
    save_model,
    step,
)
from .encode import (
    EncoderConfig,
    Image,
    UnreachableTargetError,
    calibrate_rate,
    encode,
    expected_total_spikes,
    load_idx,
    load_train,
    save_train,
)
from .explore import (
    ExplorationReport,
    Watcher,
    WatcherBank,
    acceptable_range,
    explore,
    load_cuts,
    write_cuts,
    write_report_csv,
    write_report_json,
)
from .oracle import (
    TruncationAssignment,
    apply_assignment,
    argmax_match,
    check_containment,
    combination_count,
    full_assignment_count,
    run_truncated,
)

__version__ = "0.1.0"
