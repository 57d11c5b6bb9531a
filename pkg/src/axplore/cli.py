"""Command-line front end: encode, simulate, explore, verify, report.

Every command is a pure function of the config file, environment
variables, and input files; identical inputs give byte-identical
outputs. Exit codes: 0 success (explore: converged), 1 verification
failure or non-convergence, 2 configuration or IO problems.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import encode as enc
from . import explore as xp
from . import oracle
from .interval import Interval
from .snn import LayerParams, load_model, run_exact, run_ia

DATA_DIR_ENV = "AXPLORE_DATA_DIR"

DEFAULT_IMAGE_FILES = ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte")
DEFAULT_LABEL_FILES = ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte")


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    model: Path
    data_dir: Path
    output_dir: Path
    cache_dir: Path
    images_file: Optional[Path]
    labels_file: Optional[Path]
    timesteps: int
    rate_scale: Optional[float]
    target_total: Optional[float]
    seed: int
    image_count: int
    max_rounds: Optional[int]
    tau: Optional[Interval]
    init_cut: int
    cut_thresh: int
    cut_reset: int
    verify_samples: int
    verify_seed: int


def _parse_tau(raw) -> Optional[Interval]:
    if raw is None:
        return None
    # Accept a decimal string or JSON number for the upper bound; the
    # string form reads exactly ("0.001" or "1/65536").
    hi = Fraction(str(raw))
    if hi < 0:
        raise CliError(f"tau must be nonnegative, got {raw}")
    return Interval(Fraction(0), hi)


def load_config(path: Path, overrides: Optional[dict] = None) -> RunConfig:
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, leaf = key.partition(".")
        if leaf:
            doc.setdefault(section, {})[leaf] = value
        else:
            doc[key] = value
    base = path.resolve().parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    encoder = doc.get("encoder", {})
    exploration = doc.get("exploration", {})
    verify = doc.get("verify", {})

    if "model" not in doc:
        raise CliError(f"{path}: missing 'model'")
    data_dir = os.environ.get(DATA_DIR_ENV) or doc.get("data_dir", ".")
    output_dir = resolve(doc.get("output_dir", "out"))
    cache_dir = resolve(doc["cache_dir"]) if "cache_dir" in doc else output_dir / "spikes"

    image_count = int(exploration.get("image_count", 1))
    if image_count < 1:
        raise CliError(f"{path}: image_count must be >= 1, got {image_count}")

    timesteps = int(encoder.get("timesteps", enc.DEFAULT_TIMESTEPS))
    rate_scale = encoder.get("rate_scale")
    target_total = encoder.get("target_total")
    if rate_scale is None and target_total is None:
        target_total = enc.DEFAULT_TARGET_TOTAL

    max_rounds = exploration.get("max_rounds")
    return RunConfig(
        model=resolve(doc["model"]),
        data_dir=resolve(data_dir),
        output_dir=output_dir,
        cache_dir=cache_dir,
        images_file=resolve(doc["images_file"]) if "images_file" in doc else None,
        labels_file=resolve(doc["labels_file"]) if "labels_file" in doc else None,
        timesteps=timesteps,
        rate_scale=float(rate_scale) if rate_scale is not None else None,
        target_total=float(target_total) if target_total is not None else None,
        seed=int(encoder.get("seed", 0)),
        image_count=image_count,
        max_rounds=int(max_rounds) if max_rounds is not None else None,
        tau=_parse_tau(exploration.get("tau")),
        init_cut=int(exploration.get("init_cut", 15)),
        cut_thresh=int(exploration.get("cut_thresh", 0)),
        cut_reset=int(exploration.get("cut_reset", 0)),
        verify_samples=int(verify.get("samples", 200)),
        verify_seed=int(verify.get("seed", 0)),
    )


def _find_dataset(cfg: RunConfig) -> tuple[Path, Path]:
    def locate(explicit: Optional[Path], names) -> Path:
        candidates = [explicit] if explicit else [cfg.data_dir / n for n in names]
        tried = []
        for cand in candidates:
            if cand is None:
                continue
            for p in (cand, cand.with_name(cand.name + ".gz")):
                if p.exists():
                    return p
                tried.append(str(p))
        raise CliError("dataset file missing; looked for: " + ", ".join(tried))

    images = locate(cfg.images_file, DEFAULT_IMAGE_FILES)
    labels = locate(cfg.labels_file, DEFAULT_LABEL_FILES)
    return images, labels


def _load_model(cfg: RunConfig) -> LayerParams:
    if not cfg.model.exists():
        raise CliError(f"model file not found: {cfg.model}")
    return load_model(cfg.model)


def _cache_paths(cfg: RunConfig) -> List[Path]:
    paths = sorted(cfg.cache_dir.glob("img_*.spkt"))
    if not paths:
        raise CliError(f"no spike caches under {cfg.cache_dir}; run 'axplore encode' first")
    return paths[: cfg.image_count]


def _load_trains(cfg: RunConfig, params: LayerParams) -> List[np.ndarray]:
    trains = []
    for p in _cache_paths(cfg):
        train = enc.load_train(p)
        if train.shape[1] != params.n_inputs:
            raise CliError(f"{p}: cache width {train.shape[1]} != model n_inputs {params.n_inputs}")
        trains.append(train)
    return trains


def cmd_encode(cfg: RunConfig) -> int:
    images_path, labels_path = _find_dataset(cfg)
    images = enc.load_idx(images_path, labels_path)[: cfg.image_count]
    if not images:
        raise CliError("dataset is empty")
    if cfg.rate_scale is not None:
        rate = cfg.rate_scale
    else:
        rate = enc.calibrate_rate(images, cfg.timesteps, cfg.target_total)
    config = enc.EncoderConfig(timesteps=cfg.timesteps, rate_scale=rate, seed=cfg.seed)
    cfg.cache_dir.mkdir(parents=True, exist_ok=True)
    totals = []
    manifest = ["index,label,total_spikes"]
    for image in images:
        train = enc.encode(image, config)
        enc.save_train(cfg.cache_dir / f"img_{image.index:05d}.spkt", train)
        total = int(train.sum())
        totals.append(total)
        manifest.append(f"{image.index},{image.label},{total}")
    (cfg.cache_dir / "manifest.csv").write_text("\n".join(manifest) + "\n")
    print(f"encoded {len(images)} images at rate_scale={rate:.6g}, "
          f"mean total spikes {np.mean(totals):.1f}")
    return 0


def cmd_simulate(cfg: RunConfig, mode: str, cuts_path: Optional[Path]) -> int:
    params = _load_model(cfg)
    trains = _load_trains(cfg, params)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output_dir / f"counters_{mode}.csv"
    if mode == "exact":
        lines = ["image,neuron,counter"]
        for idx, train in enumerate(trains):
            for neuron, c in enumerate(run_exact(params, train)):
                lines.append(f"{idx},{neuron},{c}")
    else:
        cuts = xp.load_cuts(cuts_path) if cuts_path else np.zeros(
            (params.n_neurons, params.n_inputs), dtype=np.int64
        )
        if cuts.shape != (params.n_neurons, params.n_inputs):
            raise CliError(f"cut matrix shape {cuts.shape} does not match the model")
        lines = ["image,neuron,lo,hi"]
        for idx, train in enumerate(trains):
            intervals = run_ia(
                params, train, cuts, cut_thresh=cfg.cut_thresh, cut_reset=cfg.cut_reset
            )
            for neuron, iv in enumerate(intervals):
                lines.append(f"{idx},{neuron},{int(iv.lo)},{int(iv.hi)}")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")
    return 0


def cmd_explore(cfg: RunConfig) -> int:
    params = _load_model(cfg)
    trains = _load_trains(cfg, params)
    report = xp.explore(
        params,
        trains,
        acceptable=cfg.tau,
        init_cut=cfg.init_cut,
        cut_thresh=cfg.cut_thresh,
        cut_reset=cfg.cut_reset,
        max_rounds=cfg.max_rounds,
    )
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    xp.write_cuts(cfg.output_dir / "best_cuts.txt", report.final_cuts)
    xp.write_report_csv(report, cfg.output_dir / "report.csv")
    xp.write_report_json(report, cfg.output_dir / "report.json")
    status = "converged" if report.converged else (
        "stalled" if report.stalled else ("round cap hit" if report.cap_hit else "exhausted")
    )
    print(f"exploration {status} after {len(report.rounds)} rounds; "
          f"cut depths in [{report.final_cuts.min()}, {report.final_cuts.max()}]")
    return 0 if report.converged else 1


def cmd_verify(cfg: RunConfig, cuts_path: Path) -> int:
    params = _load_model(cfg)
    trains = _load_trains(cfg, params)
    cuts = xp.load_cuts(cuts_path)
    if cuts.shape != (params.n_neurons, params.n_inputs):
        raise CliError(f"{cuts_path}: shape {cuts.shape} does not match the model")
    violations = oracle.check_containment(
        params,
        cuts,
        trains,
        samples=cfg.verify_samples,
        seed=cfg.verify_seed,
        cut_thresh=cfg.cut_thresh,
        cut_reset=cfg.cut_reset,
    )
    assignment = oracle.TruncationAssignment(
        weights=cuts, thresh=cfg.cut_thresh, reset=cfg.cut_reset
    )
    matches = 0
    for train in trains:
        full = run_exact(params, train)
        reduced = oracle.run_truncated(params, assignment, train)
        matches += oracle.argmax_match(full, reduced)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    oracle.write_violations_csv(violations, cfg.output_dir / "violations.csv")
    print(f"containment violations: {len(violations)}")
    print(f"argmax matches: {matches}/{len(trains)}")
    ok = not violations and matches == len(trains)
    return 0 if ok else 1


def cmd_report(report_path: Path, out_path: Path) -> int:
    if not report_path.exists():
        raise CliError(f"report file not found: {report_path}")
    lines = report_path.read_text().splitlines()
    if not lines or not lines[0].startswith("round,"):
        raise CliError(f"{report_path}: not an exploration report CSV")
    header = lines[0].split(",")
    fraction_col = header.index("fraction")
    out_lines = ["round,percent_involved"]
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split(",")
        out_lines.append(f"{cells[0]},{100.0 * float(cells[fraction_col]):.4f}")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(out_lines) + "\n")
    print(f"wrote {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="axplore",
        description="Interval-model precision exploration for fixed-point spiking networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--output-dir", type=Path, default=None, help="override output_dir")
        p.add_argument("--image-count", type=int, default=None, help="override image count")

    p_encode = sub.add_parser("encode", help="encode dataset images into spike train caches")
    common(p_encode)
    p_encode.add_argument("--seed", type=int, default=None, help="override encoder seed")

    p_sim = sub.add_parser("simulate", help="run the exact or interval simulator over the caches")
    common(p_sim)
    p_sim.add_argument("--mode", choices=("exact", "ia"), default="exact")
    p_sim.add_argument("--cuts", type=Path, default=None, help="cut matrix for ia mode")

    p_explore = sub.add_parser("explore", help="run the watcher-driven precision exploration")
    common(p_explore)
    p_explore.add_argument("--max-rounds", type=int, default=None, help="override round cap")

    p_verify = sub.add_parser("verify", help="sample truncations and compare classifications")
    common(p_verify)
    p_verify.add_argument("--cuts", required=True, type=Path)

    p_report = sub.add_parser("report", help="convert a report CSV into a percentage series")
    p_report.add_argument("--report", required=True, type=Path)
    p_report.add_argument("--out", required=True, type=Path)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.report, args.out)
        # Command-line paths resolve against the caller's directory, not
        # the config file's.
        overrides = {
            "output_dir": str(args.output_dir.resolve()) if args.output_dir else None,
            "exploration.image_count": args.image_count,
        }
        if args.command == "encode":
            overrides["encoder.seed"] = args.seed
            return cmd_encode(load_config(args.config, overrides))
        if args.command == "simulate":
            return cmd_simulate(load_config(args.config, overrides), args.mode, args.cuts)
        if args.command == "explore":
            overrides["exploration.max_rounds"] = args.max_rounds
            return cmd_explore(load_config(args.config, overrides))
        if args.command == "verify":
            return cmd_verify(load_config(args.config, overrides), args.cuts)
        raise CliError(f"unknown command {args.command}")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
