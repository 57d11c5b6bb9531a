"""Single-layer spiking network compute flow.

Per timestep and per neuron: accumulate weights selected by input spikes
(or decay by a right shift when the input vector is silent), compare the
membrane potential against the layer threshold, reset and count on a
spike, then apply lateral inhibition across the layer.

One generic engine drives two interchangeable scalar semantics:

* :class:`ExactSemantics` runs on raw Q16.16 integers and is the
  bit-exact reference.
* :class:`IaSemantics` runs on :class:`~axplore.ianum.IaNum` values and
  soundly over-approximates every concrete run whose parameters were
  truncated by at most the configured cut depths.

Fire decisions of a step are taken from pre-inhibition potentials;
inhibition is applied after all of the step's decisions, so neuron order
within the layer does not matter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .fixedpoint import RAW_MAX, RAW_MIN, FixQ16x16, quantize
from .ianum import IaNum, TriBool, cmp_gt, from_param
from .interval import Interval

MODEL_FIELDS = ("n_inputs", "n_neurons", "weights", "v_thresh", "v_reset", "exp_decay", "w_inh")


class ModelFormatError(ValueError):
    """Model file is malformed or inconsistent."""


@dataclass
class LayerParams:
    """Weights and neuron constants of one fully connected spiking layer.

    All numeric fields are raw Q16.16 words. A single threshold and a
    single reset value apply to the whole layer; `w_inh` is the lateral
    inhibition magnitude (0 disables inhibition).
    """

    n_inputs: int
    n_neurons: int
    weights: np.ndarray  # (n_neurons, n_inputs) raw words
    v_thresh: int
    v_reset: int
    exp_decay: int
    w_inh: int = 0

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.int64)
        if self.weights.shape != (self.n_neurons, self.n_inputs):
            raise ModelFormatError(
                f"weights shape {self.weights.shape} != ({self.n_neurons}, {self.n_inputs})"
            )
        for name in ("v_thresh", "v_reset", "w_inh"):
            raw = getattr(self, name)
            if not RAW_MIN <= raw <= RAW_MAX:
                raise ModelFormatError(f"{name}={raw} outside signed 32-bit range")
        if self.weights.size and not (
            (self.weights >= RAW_MIN).all() and (self.weights <= RAW_MAX).all()
        ):
            raise ModelFormatError("weight raw word outside signed 32-bit range")
        if self.exp_decay < 1:
            raise ModelFormatError(f"exp_decay must be >= 1, got {self.exp_decay}")
        if not self.v_reset < self.v_thresh:
            raise ModelFormatError("v_reset must be below v_thresh")
        self.weights.flags.writeable = False

    @classmethod
    def from_floats(
        cls,
        weights: Sequence[Sequence[float]],
        v_thresh: float,
        v_reset: float,
        exp_decay: int,
        w_inh: float = 0.0,
    ) -> "LayerParams":
        """Quantize float parameters into a layer (convenience for fixtures)."""
        w = np.array([[quantize(x).raw for x in row] for row in weights], dtype=np.int64)
        return cls(
            n_inputs=w.shape[1],
            n_neurons=w.shape[0],
            weights=w,
            v_thresh=quantize(v_thresh).raw,
            v_reset=quantize(v_reset).raw,
            exp_decay=exp_decay,
            w_inh=quantize(w_inh).raw,
        )


def save_model(params: LayerParams, path: Union[str, Path]) -> None:
    doc = {
        "n_inputs": params.n_inputs,
        "n_neurons": params.n_neurons,
        "weights": [int(x) for x in params.weights.reshape(-1)],
        "v_thresh": params.v_thresh,
        "v_reset": params.v_reset,
        "exp_decay": params.exp_decay,
        "w_inh": params.w_inh,
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path: Union[str, Path]) -> LayerParams:
    """Read a layer from the JSON model document (raw words row-major)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    missing = [k for k in MODEL_FIELDS if k not in doc]
    if missing:
        raise ModelFormatError(f"{path}: missing fields {missing}")
    n_inputs, n_neurons = int(doc["n_inputs"]), int(doc["n_neurons"])
    flat = doc["weights"]
    if len(flat) != n_inputs * n_neurons:
        raise ModelFormatError(
            f"{path}: expected {n_inputs * n_neurons} weights, found {len(flat)}"
        )
    weights = np.array(flat, dtype=np.int64).reshape(n_neurons, n_inputs)
    return LayerParams(
        n_inputs=n_inputs,
        n_neurons=n_neurons,
        weights=weights,
        v_thresh=int(doc["v_thresh"]),
        v_reset=int(doc["v_reset"]),
        exp_decay=int(doc["exp_decay"]),
        w_inh=int(doc["w_inh"]),
    )


class FlowObserver:
    """No-op observation hooks called by :class:`IaSemantics` after each flow operation.

    Flag-style observers must be commutative and idempotent so trains
    within a round could be evaluated in any order or in parallel.
    """

    def after_accumulate(self, neuron: int, j: int, acc: IaNum) -> None:
        pass

    def after_decay(self, neuron: int, v: IaNum) -> None:
        pass

    def after_inhibit(self, neuron: int, v: IaNum) -> None:
        pass

    def after_count(self, neuron: int, counter: Interval) -> None:
        pass


@dataclass
class LayerState:
    """Per-neuron membrane potential and output spike counter."""

    v: list
    counters: list


class ExactSemantics:
    """Bit-exact simulation on raw Q16.16 integers.

    Potentials are plain Python integers on the raw lattice, so layer
    sums keep full headroom instead of saturating at the storage format.
    """

    def __init__(self, params: LayerParams):
        self.params = params
        self._w = [[int(x) for x in row] for row in params.weights]
        self._thresh = params.v_thresh
        self._reset = params.v_reset
        self._decay = params.exp_decay
        self._inh = params.w_inh

    def new_state(self) -> LayerState:
        n = self.params.n_neurons
        return LayerState(v=[0] * n, counters=[0] * n)

    def accumulate(self, v: int, i: int, j: int) -> int:
        return v + self._w[i][j]

    def decay(self, v: int, i: int) -> int:
        return v >> self._decay

    def fire_outcome(self, v: int, i: int) -> bool:
        return v > self._thresh

    def after_fire(self, v: int, fired: bool, i: int) -> int:
        return self._reset if fired else v

    def count(self, counter: int, fired: bool, i: int) -> int:
        return counter + 1 if fired else counter

    def inhibits(self) -> bool:
        return self._inh != 0

    def inhibit(self, v: int, outcomes: List[bool], i: int) -> int:
        peers = sum(outcomes) - outcomes[i]
        return v - self._inh * peers


_UNIT = Interval.point(1)
_MAYBE = Interval(0, 1)


class IaSemantics:
    """Sound over-approximation of every run with per-weight cut depths.

    `cuts[i][j]` is the deepest truncation admitted for weight (i, j);
    `cut_thresh` / `cut_reset` play the same role for the layer constants.
    An optional :class:`FlowObserver` sees the result of every operation.
    """

    def __init__(
        self,
        params: LayerParams,
        cuts: Optional[np.ndarray] = None,
        *,
        cut_thresh: int = 0,
        cut_reset: int = 0,
        observer: Optional[FlowObserver] = None,
    ):
        n, m = params.n_neurons, params.n_inputs
        if cuts is None:
            cuts = np.zeros((n, m), dtype=np.int64)
        cuts = np.asarray(cuts)
        if cuts.shape != (n, m):
            raise ValueError(f"cut matrix shape {cuts.shape} != ({n}, {m})")
        self.params = params
        self.observer = observer or FlowObserver()
        self._w = [
            [from_param(FixQ16x16(int(params.weights[i, j])), int(cuts[i, j])) for j in range(m)]
            for i in range(n)
        ]
        self._thresh = from_param(FixQ16x16(params.v_thresh), cut_thresh)
        self._reset = from_param(FixQ16x16(params.v_reset), cut_reset)
        self._decay = params.exp_decay
        self._inh = Fraction(params.w_inh, 1 << 16)
        self._zero = from_param(FixQ16x16(0), 0)

    def new_state(self) -> LayerState:
        n = self.params.n_neurons
        zero = Interval.point(0)
        return LayerState(v=[self._zero] * n, counters=[zero] * n)

    def accumulate(self, v: IaNum, i: int, j: int) -> IaNum:
        acc = v.add(self._w[i][j])
        self.observer.after_accumulate(i, j, acc)
        return acc

    def decay(self, v: IaNum, i: int) -> IaNum:
        out = v.shr(self._decay)
        self.observer.after_decay(i, out)
        return out

    def fire_outcome(self, v: IaNum, i: int) -> TriBool:
        return cmp_gt(v, self._thresh)

    def after_fire(self, v: IaNum, outcome: TriBool, i: int) -> IaNum:
        if outcome is TriBool.TRUE:
            return self._reset
        if outcome is TriBool.FALSE:
            return v
        # Both branches stay feasible: join them componentwise.
        return IaNum(
            v.value.hull(self._reset.value),
            v.error.hull(self._reset.error),
        )

    def count(self, counter: Interval, outcome: TriBool, i: int) -> Interval:
        if outcome is TriBool.TRUE:
            counter = counter.add(_UNIT)
        elif outcome is TriBool.UNCERTAIN:
            counter = counter.add(_MAYBE)
        self.observer.after_count(i, counter)
        return counter

    def inhibits(self) -> bool:
        return self._inh != 0

    def inhibit(self, v: IaNum, outcomes: List[TriBool], i: int) -> IaNum:
        lo = hi = 0
        for j, out in enumerate(outcomes):
            if j == i:
                continue
            if out is TriBool.TRUE:
                lo += 1
                hi += 1
            elif out is TriBool.UNCERTAIN:
                hi += 1
        if hi == 0:
            return v
        term = IaNum(
            Interval(lo, hi).mul(Interval.point(self._inh)),
            Interval.point(0),
        )
        out = v.sub(term)
        self.observer.after_inhibit(i, out)
        return out


def step(state: LayerState, spikes, sem) -> list:
    """Advance the layer one timestep; returns per-neuron fire outcomes."""
    bits = np.asarray(spikes, dtype=bool).reshape(-1)
    if bits.size != sem.params.n_inputs:
        raise ValueError(f"spike vector length {bits.size} != n_inputs {sem.params.n_inputs}")
    active = np.flatnonzero(bits)
    n = sem.params.n_neurons
    v = state.v
    if active.size == 0:
        for i in range(n):
            v[i] = sem.decay(v[i], i)
    else:
        cols = [int(j) for j in active]
        for i in range(n):
            acc = v[i]
            for j in cols:
                acc = sem.accumulate(acc, i, j)
            v[i] = acc
    outcomes = [sem.fire_outcome(v[i], i) for i in range(n)]
    for i in range(n):
        v[i] = sem.after_fire(v[i], outcomes[i], i)
        state.counters[i] = sem.count(state.counters[i], outcomes[i], i)
    if sem.inhibits():
        for i in range(n):
            v[i] = sem.inhibit(v[i], outcomes, i)
    return outcomes


def run(train, sem) -> list:
    """Fold :func:`step` over a spike train from a zeroed state; returns counters."""
    state = sem.new_state()
    for spikes in train:
        step(state, spikes, sem)
    return state.counters


def run_exact(params: LayerParams, train) -> List[int]:
    return run(train, ExactSemantics(params))


def run_ia(
    params: LayerParams,
    train,
    cuts: Optional[np.ndarray] = None,
    *,
    cut_thresh: int = 0,
    cut_reset: int = 0,
    observer: Optional[FlowObserver] = None,
) -> List[Interval]:
    sem = IaSemantics(
        params, cuts, cut_thresh=cut_thresh, cut_reset=cut_reset, observer=observer
    )
    return run(train, sem)


def run_exact_batch(
    weights: np.ndarray,
    v_thresh: np.ndarray,
    v_reset: np.ndarray,
    exp_decay: int,
    w_inh: int,
    train,
) -> np.ndarray:
    """Vectorized exact runs for a batch of parameter sets sharing one train.

    `weights` is (batch, n_neurons, n_inputs) raw words; `v_thresh` and
    `v_reset` are per-batch raw words. Semantics match
    :class:`ExactSemantics` element by element; int64 gives the same
    headroom as the scalar engine for any realistic layer.
    """
    weights = np.asarray(weights, dtype=np.int64)
    batch, n, _ = weights.shape
    v_thresh = np.broadcast_to(np.asarray(v_thresh, dtype=np.int64), (batch,))[:, None]
    v_reset = np.broadcast_to(np.asarray(v_reset, dtype=np.int64), (batch,))[:, None]
    v = np.zeros((batch, n), dtype=np.int64)
    counters = np.zeros((batch, n), dtype=np.int64)
    for spikes in train:
        bits = np.asarray(spikes, dtype=bool).reshape(-1)
        active = np.flatnonzero(bits)
        if active.size == 0:
            v >>= exp_decay
        else:
            v += weights[:, :, active].sum(axis=2)
        fired = v > v_thresh
        counters += fired
        v = np.where(fired, v_reset, v)
        if w_inh != 0:
            peers = fired.sum(axis=1, keepdims=True) - fired
            v -= np.int64(w_inh) * peers
    return counters
