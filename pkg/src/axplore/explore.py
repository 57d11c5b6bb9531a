"""Watcher-driven search for per-weight precision reductions.

Hidden watchers observe the error interval after every weight
accumulation (plus diagnostics after decay and inhibition); one active
watcher per neuron observes the output spike counter. A round evaluates
the interval model at the current cut depths over every train. For each
neuron whose active watcher fired, the fired hidden watchers are walked
from the end of the flow backward and each backs its weight's cut depth
off by one bit. The loop ends when a full round fires no active watcher
(converged) or when every depth reaches zero (exhausted).

The acceptable error range is global by default and held constant across
rounds; individual :class:`Watcher` objects carry their own copy, which
is the override point for experiments with per-point tolerances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .fixedpoint import MAX_CUT, check_cut, error_bounds
from .ianum import IaNum
from .interval import Interval
from .snn import FlowObserver, IaSemantics, LayerParams, run


class ExplorationError(RuntimeError):
    """Simulator failure during exploration, annotated with the round."""


def acceptable_range(max_cut: int) -> Interval:
    """Default tolerance: [0, midpoint of the worst-case error at `max_cut`].

    Truncation errors spread uniformly between the two limits, so the
    midpoint is the natural budget for a single observation point.
    """
    bounds = error_bounds(max_cut)
    return Interval(Fraction(0), (bounds.lo + bounds.hi) / 2)


@dataclass
class Watcher:
    """Observation point comparing a monitored error interval to a tolerance.

    `fired` latches on the first violation and is cleared only by
    :meth:`reset` at the start of a round; setting it is commutative and
    idempotent, so observation order never matters.
    """

    kind: str  # "hidden" or "active"
    acceptable: Interval
    target: Tuple

    fired: bool = False

    def compare_data(self, x: IaNum) -> None:
        if not self.acceptable.encloses(x.error):
            self.fired = True

    def watch_fired(self) -> bool:
        return self.fired

    def reset(self) -> None:
        self.fired = False


class WatcherBank(FlowObserver):
    """Full set of watchers for one layer, wired into the interval flow."""

    def __init__(self, n_neurons: int, n_inputs: int, acceptable: Interval):
        self.acceptable = acceptable
        self.weight_watchers = [
            [Watcher("hidden", acceptable, ("weight", i, j)) for j in range(n_inputs)]
            for i in range(n_neurons)
        ]
        self.decay_watchers = [Watcher("hidden", acceptable, ("decay", i)) for i in range(n_neurons)]
        self.inhibit_watchers = [
            Watcher("hidden", acceptable, ("inhibit", i)) for i in range(n_neurons)
        ]
        self.active_watchers = [
            Watcher("active", acceptable, ("counter", i)) for i in range(n_neurons)
        ]

    def all_watchers(self) -> List[Watcher]:
        flat: List[Watcher] = []
        for row in self.weight_watchers:
            flat.extend(row)
        flat.extend(self.decay_watchers)
        flat.extend(self.inhibit_watchers)
        flat.extend(self.active_watchers)
        return flat

    def reset_all(self) -> None:
        for w in self.all_watchers():
            w.reset()

    # flow hooks

    def after_accumulate(self, neuron: int, j: int, acc: IaNum) -> None:
        self.weight_watchers[neuron][j].compare_data(acc)

    def after_decay(self, neuron: int, v: IaNum) -> None:
        self.decay_watchers[neuron].compare_data(v)

    def after_inhibit(self, neuron: int, v: IaNum) -> None:
        self.inhibit_watchers[neuron].compare_data(v)

    def after_count(self, neuron: int, counter: Interval) -> None:
        # The counter's uncertainty, viewed as a subtractive error on the
        # upper count. Any usable tolerance sits below one whole spike,
        # so the watcher fires exactly when the count is not pinned down.
        as_ian = IaNum(Interval.point(counter.hi), Interval(Fraction(0), counter.width()))
        self.active_watchers[neuron].compare_data(as_ian)


@dataclass
class RoundRecord:
    """Outcome of one exploration round, taken after its decrements."""

    index: int
    neurons_involved: int
    fraction: float
    active_fired: int
    hidden_fired: int
    decrements: int
    min_cut: int
    max_cut: int
    histogram: Dict[int, int]


@dataclass
class ExplorationReport:
    rounds: List[RoundRecord]
    converged: bool
    stalled: bool
    cap_hit: bool
    final_cuts: np.ndarray

    def rounds_with_changes(self) -> int:
        return sum(1 for r in self.rounds if r.decrements > 0)


def _cut_stats(cuts: np.ndarray) -> Tuple[int, int, Dict[int, int]]:
    values, counts = np.unique(cuts, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(values, counts)}
    return int(cuts.min()), int(cuts.max()), hist


def explore(
    params: LayerParams,
    trains: Sequence,
    *,
    acceptable: Optional[Interval] = None,
    init_cut: int = MAX_CUT,
    cut_thresh: int = 0,
    cut_reset: int = 0,
    max_rounds: Optional[int] = None,
    bank: Optional[WatcherBank] = None,
) -> ExplorationReport:
    """Run the full exploration loop and report per-round involvement.

    `trains` is a non-empty sequence of spike trains; watcher flags are
    OR-ed across all of them within a round. `acceptable` defaults to
    :func:`acceptable_range` of `init_cut`. A round that fires active
    watchers but cannot attribute any of them to a weight stalls the
    search; the report flags it and `converged` stays False.
    """
    if len(trains) == 0:
        raise ValueError("explore needs at least one spike train")
    check_cut(init_cut)
    if init_cut < 1:
        raise ValueError("init_cut must be >= 1; nothing to explore at 0")
    n, m = params.n_neurons, params.n_inputs
    tau = acceptable if acceptable is not None else acceptable_range(init_cut)
    if bank is None:
        bank = WatcherBank(n, m, tau)

    cuts = np.full((n, m), init_cut, dtype=np.int64)
    rounds: List[RoundRecord] = []
    converged = False
    stalled = False
    cap_hit = False

    while (cuts > 0).any():
        if max_rounds is not None and len(rounds) >= max_rounds:
            cap_hit = True
            break
        index = len(rounds) + 1
        bank.reset_all()
        sem = IaSemantics(
            params, cuts, cut_thresh=cut_thresh, cut_reset=cut_reset, observer=bank
        )
        try:
            for train in trains:
                run(train, sem)
        except Exception as exc:
            raise ExplorationError(f"simulator failed in round {index}: {exc}") from exc

        fired_neurons = [i for i in range(n) if bank.active_watchers[i].watch_fired()]
        hidden_fired = sum(
            1 for row in bank.weight_watchers for w in row if w.watch_fired()
        ) + sum(1 for w in bank.decay_watchers if w.watch_fired()) + sum(
            1 for w in bank.inhibit_watchers if w.watch_fired()
        )

        involved = set()
        decrements = 0
        for i in fired_neurons:
            # Backward over the flow: the weight accumulations in reverse
            # order (decay/inhibit diagnostics carry no cut to reduce).
            for j in reversed(range(m)):
                if bank.weight_watchers[i][j].watch_fired() and cuts[i, j] > 0:
                    cuts[i, j] -= 1
                    decrements += 1
                    involved.add(i)

        min_cut, max_cut_now, hist = _cut_stats(cuts)
        rounds.append(
            RoundRecord(
                index=index,
                neurons_involved=len(involved),
                fraction=len(involved) / n,
                active_fired=len(fired_neurons),
                hidden_fired=hidden_fired,
                decrements=decrements,
                min_cut=min_cut,
                max_cut=max_cut_now,
                histogram=hist,
            )
        )

        if not fired_neurons:
            converged = True
            break
        if decrements == 0:
            stalled = True
            break

    return ExplorationReport(
        rounds=rounds,
        converged=converged,
        stalled=stalled,
        cap_hit=cap_hit,
        final_cuts=cuts,
    )


REPORT_COLUMNS = ("round", "neurons_involved", "fraction", "active_fired", "min_k", "max_k")


def write_report_csv(report: ExplorationReport, path: Union[str, Path]) -> None:
    lines = [",".join(REPORT_COLUMNS)]
    for r in report.rounds:
        lines.append(
            f"{r.index},{r.neurons_involved},{r.fraction:.6f},{r.active_fired},{r.min_cut},{r.max_cut}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_json(report: ExplorationReport, path: Union[str, Path]) -> None:
    doc = {
        "converged": report.converged,
        "stalled": report.stalled,
        "cap_hit": report.cap_hit,
        "rounds": [
            {
                "round": r.index,
                "neurons_involved": r.neurons_involved,
                "fraction": r.fraction,
                "active_fired": r.active_fired,
                "hidden_fired": r.hidden_fired,
                "decrements": r.decrements,
                "min_k": r.min_cut,
                "max_k": r.max_cut,
                "histogram": {str(k): v for k, v in r.histogram.items()},
            }
            for r in report.rounds
        ],
        "final_cuts": [[int(x) for x in row] for row in report.final_cuts],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def write_cuts(path: Union[str, Path], cuts: np.ndarray) -> None:
    """Row-major integer matrix, one neuron per line."""
    lines = [" ".join(str(int(x)) for x in row) for row in np.asarray(cuts)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_cuts(path: Union[str, Path]) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            rows.append([int(tok) for tok in line.split()])
    cuts = np.array(rows, dtype=np.int64)
    if cuts.size and (cuts.min() < 0 or cuts.max() > MAX_CUT):
        raise ValueError(f"{path}: cut depths outside [0, {MAX_CUT}]")
    return cuts
