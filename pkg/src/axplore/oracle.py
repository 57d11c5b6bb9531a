"""Brute-force verification of the interval model.

Everything here goes through the bit-exact integer simulator, never
through the interval algebra, so it can serve as an independent check:
concrete truncated runs, containment sampling against interval counters,
classification comparison by counter argmax, and the size of the search
space the sampling stands in for.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .fixedpoint import MAX_CUT, truncate_raw
from .snn import LayerParams, run_exact, run_exact_batch, run_ia


@dataclass(frozen=True)
class TruncationAssignment:
    """Concrete cut depths for every stored parameter of a layer."""

    weights: np.ndarray  # (n_neurons, n_inputs) depths in [0, 15]
    thresh: int = 0
    reset: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.int64)
        object.__setattr__(self, "weights", w)
        if w.size and (w.min() < 0 or w.max() > MAX_CUT):
            raise ValueError(f"weight cut depths outside [0, {MAX_CUT}]")
        for name in ("thresh", "reset"):
            k = getattr(self, name)
            if not 0 <= k <= MAX_CUT:
                raise ValueError(f"{name} cut depth {k} outside [0, {MAX_CUT}]")

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.weights.tobytes())
        h.update(bytes([self.thresh, self.reset]))
        return h.hexdigest()[:12]


def apply_assignment(params: LayerParams, assignment: TruncationAssignment) -> LayerParams:
    """New layer whose raw words are truncated per the assignment."""
    if assignment.weights.shape != params.weights.shape:
        raise ValueError(
            f"assignment shape {assignment.weights.shape} != weights {params.weights.shape}"
        )
    mask = (np.int64(1) << assignment.weights) - 1
    return LayerParams(
        n_inputs=params.n_inputs,
        n_neurons=params.n_neurons,
        weights=params.weights & ~mask,
        v_thresh=truncate_raw(params.v_thresh, assignment.thresh),
        v_reset=truncate_raw(params.v_reset, assignment.reset),
        exp_decay=params.exp_decay,
        w_inh=params.w_inh,
    )


def run_truncated(params: LayerParams, assignment: TruncationAssignment, train) -> List[int]:
    return run_exact(apply_assignment(params, assignment), train)


@dataclass(frozen=True)
class Violation:
    """One exact counter that escaped its interval."""

    train_index: int
    assignment_hash: str
    neuron: int
    counter: int
    lo: int
    hi: int


def _batch_counters(
    params: LayerParams,
    weight_cuts: np.ndarray,
    thresh_cuts: np.ndarray,
    reset_cuts: np.ndarray,
    train,
) -> np.ndarray:
    """Exact counters for a batch of assignments, vectorized over the batch."""
    mask = (np.int64(1) << weight_cuts) - 1
    weights = params.weights[None, :, :] & ~mask
    v_thresh = params.v_thresh & ~((np.int64(1) << thresh_cuts) - 1)
    v_reset = params.v_reset & ~((np.int64(1) << reset_cuts) - 1)
    return run_exact_batch(weights, v_thresh, v_reset, params.exp_decay, params.w_inh, train)


def check_containment(
    params: LayerParams,
    cuts: np.ndarray,
    trains: Sequence,
    samples: int = 1000,
    seed: int = 0,
    *,
    cut_thresh: int = 0,
    cut_reset: int = 0,
    exhaustive: bool = False,
) -> List[Violation]:
    """Sample truncation assignments below `cuts` and test counter containment.

    Runs the interval model once per train at the full cut depths, then
    checks that the exact counters of every sampled assignment fall
    inside the interval counters. Violations are returned as data; an
    empty list is the expected outcome. With ``exhaustive=True`` the
    whole assignment lattice is enumerated instead of sampled (use only
    on tiny layers).
    """
    if samples < 1 and not exhaustive:
        raise ValueError("samples must be >= 1")
    cuts = np.asarray(cuts, dtype=np.int64)
    n, m = params.n_neurons, params.n_inputs
    if cuts.shape != (n, m):
        raise ValueError(f"cut matrix shape {cuts.shape} != ({n}, {m})")

    if exhaustive:
        space = [range(int(k) + 1) for k in cuts.reshape(-1)]
        space.append(range(cut_thresh + 1))
        space.append(range(cut_reset + 1))
        combos = np.array(list(itertools.product(*space)), dtype=np.int64)
        weight_cuts = combos[:, : n * m].reshape(-1, n, m)
        thresh_cuts = combos[:, n * m]
        reset_cuts = combos[:, n * m + 1]
    else:
        rng = np.random.default_rng(seed)
        weight_cuts = rng.integers(0, cuts + 1, size=(samples, n, m), dtype=np.int64)
        thresh_cuts = rng.integers(0, cut_thresh + 1, size=samples, dtype=np.int64)
        reset_cuts = rng.integers(0, cut_reset + 1, size=samples, dtype=np.int64)

    violations: List[Violation] = []
    for t_index, train in enumerate(trains):
        intervals = run_ia(params, train, cuts, cut_thresh=cut_thresh, cut_reset=cut_reset)
        lo = np.array([int(iv.lo) for iv in intervals], dtype=np.int64)
        hi = np.array([int(iv.hi) for iv in intervals], dtype=np.int64)
        counters = _batch_counters(params, weight_cuts, thresh_cuts, reset_cuts, train)
        bad = np.argwhere((counters < lo[None, :]) | (counters > hi[None, :]))
        for b, neuron in bad:
            assignment = TruncationAssignment(
                weights=weight_cuts[b], thresh=int(thresh_cuts[b]), reset=int(reset_cuts[b])
            )
            violations.append(
                Violation(
                    train_index=t_index,
                    assignment_hash=assignment.digest(),
                    neuron=int(neuron),
                    counter=int(counters[b, neuron]),
                    lo=int(lo[neuron]),
                    hi=int(hi[neuron]),
                )
            )
    return violations


def write_violations_csv(violations: Sequence[Violation], path: Union[str, Path]) -> None:
    lines = ["assignment_hash,neuron,exact_counter,interval_lo,interval_hi"]
    for v in violations:
        lines.append(f"{v.assignment_hash},{v.neuron},{v.counter},{v.lo},{v.hi}")
    Path(path).write_text("\n".join(lines) + "\n")


def argmax_match(counters_a: Sequence, counters_b: Sequence) -> bool:
    """True when the lowest-index maximal counter is the same on both sides."""
    a = list(counters_a)
    b = list(counters_b)
    if len(a) != len(b):
        raise ValueError(f"counter lengths differ: {len(a)} vs {len(b)}")
    return a.index(max(a)) == b.index(max(b))


def combination_count(n: int, r: int) -> int:
    """Exact C(n, r) by the multiplicative formula; division stays exact."""
    if r < 0 or n < 0 or r > n:
        raise ValueError(f"need 0 <= r <= n, got n={n}, r={r}")
    r = min(r, n - r)
    out = 1
    for i in range(1, r + 1):
        out = out * (n - r + i) // i
    return out


def full_assignment_count(n_params: int, levels: int = MAX_CUT + 1) -> int:
    """Size of the true per-parameter search space: `levels` ** `n_params`.

    The fixed-size combination figure counts only the ways to pick which
    16 values change; this is the lattice the exploration actually walks.
    """
    return levels**n_params
