"""Dataset ingestion and rate-coded spike train generation.

Images come from the standard IDX container (28x28 grayscale plus label
files). Each pixel becomes an independent Bernoulli spike source per
timestep, the discrete-time limit of a Poisson process: intensity p
spikes with probability ``rate_scale * p``. Draws come from a
counter-based Philox stream keyed by (seed, image index), so encoding is
reproducible bit for bit and images can be encoded in any order or in
parallel.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28
N_PIXELS = IMAGE_SIDE * IMAGE_SIDE

#: Defaults reproducing roughly 3500 spikes per encoded digit image.
DEFAULT_TIMESTEPS = 350
DEFAULT_TARGET_TOTAL = 3500

CACHE_MAGIC = b"SPKT"
CACHE_VERSION = 1


class IdxFormatError(ValueError):
    """Container file cannot be used."""


class BadMagicError(IdxFormatError):
    pass


class DimensionMismatchError(IdxFormatError):
    pass


class CountMismatchError(IdxFormatError):
    pass


class TruncatedFileError(IdxFormatError):
    pass


class UnreachableTargetError(ValueError):
    """Requested spike budget cannot be met with a valid rate."""


class CacheFormatError(ValueError):
    """Spike train cache file is malformed."""


@dataclass(frozen=True)
class Image:
    """One 28x28 grayscale digit: flat row-major pixels plus its label."""

    pixels: np.ndarray  # (784,) uint8
    label: int
    index: int  # position in the source file, used as the stream key


def _read_bytes(path: Union[str, Path]) -> bytes:
    data = Path(path).read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def load_idx(images_path: Union[str, Path], labels_path: Union[str, Path]) -> List[Image]:
    """Parse paired IDX image/label files (optionally gzipped) in file order."""
    img = _read_bytes(images_path)
    if len(img) < 16:
        raise TruncatedFileError(f"{images_path}: header incomplete")
    magic, count, rows, cols = struct.unpack_from(">IIII", img)
    if magic != IMAGE_MAGIC:
        raise BadMagicError(f"{images_path}: magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")
    if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
        raise DimensionMismatchError(f"{images_path}: {rows}x{cols} images, expected 28x28")
    body = img[16:]
    if len(body) < count * N_PIXELS:
        raise TruncatedFileError(f"{images_path}: pixel data ends mid-record")

    lab = _read_bytes(labels_path)
    if len(lab) < 8:
        raise TruncatedFileError(f"{labels_path}: header incomplete")
    lmagic, lcount = struct.unpack_from(">II", lab)
    if lmagic != LABEL_MAGIC:
        raise BadMagicError(f"{labels_path}: magic {lmagic:#010x}, expected {LABEL_MAGIC:#010x}")
    if lcount != count:
        raise CountMismatchError(f"{count} images vs {lcount} labels")
    labels = lab[8:]
    if len(labels) < lcount:
        raise TruncatedFileError(f"{labels_path}: label data ends mid-record")

    pixels = np.frombuffer(body, dtype=np.uint8, count=count * N_PIXELS)
    pixels = pixels.reshape(count, N_PIXELS)
    return [Image(pixels=pixels[i], label=labels[i], index=i) for i in range(count)]


@dataclass(frozen=True)
class EncoderConfig:
    timesteps: int = DEFAULT_TIMESTEPS
    rate_scale: float = 1.0 / (DEFAULT_TIMESTEPS * 255)
    seed: int = 0

    def __post_init__(self):
        if self.timesteps < 1:
            raise ValueError(f"timesteps must be >= 1, got {self.timesteps}")
        if not 0.0 <= self.rate_scale * 255 <= 1.0:
            raise ValueError(
                f"rate_scale {self.rate_scale} puts max pixel probability outside [0, 1]"
            )


def _stream(seed: int, image_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, image_index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def encode(image: Union[Image, np.ndarray, Sequence[int]], config: EncoderConfig, *, image_index: int = None) -> np.ndarray:
    """Spike train (timesteps, n_pixels) bool for one image.

    The draw for (pixel, timestep) depends only on the config seed, the
    image index, and those two coordinates.
    """
    if isinstance(image, Image):
        pixels = image.pixels
        if image_index is None:
            image_index = image.index
    else:
        pixels = np.asarray(image, dtype=np.uint8).reshape(-1)
        if image_index is None:
            image_index = 0
    probs = config.rate_scale * pixels.astype(np.float64)
    rng = _stream(config.seed, image_index)
    draws = rng.random((config.timesteps, pixels.size))
    return draws < probs[None, :]


def expected_total_spikes(pixels, config: EncoderConfig) -> float:
    """Closed-form expectation of the total spike count of one encoding."""
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1)
    return float(config.timesteps * config.rate_scale * pixels.sum())


def calibrate_rate(images: Sequence, timesteps: int, target_total: float) -> float:
    """Rate scale whose expected total spike count over `images` hits `target_total`.

    Raises :class:`UnreachableTargetError` when the target would need a
    per-step probability above 1 for the brightest pixel, or is not
    positive.
    """
    if target_total <= 0:
        raise UnreachableTargetError(f"target_total must be positive, got {target_total}")
    if timesteps < 1:
        raise ValueError(f"timesteps must be >= 1, got {timesteps}")
    totals = [float(np.asarray(im.pixels if isinstance(im, Image) else im, dtype=np.float64).sum()) for im in images]
    mean_total = float(np.mean(totals)) if totals else 0.0
    if mean_total == 0.0:
        raise UnreachableTargetError("images carry zero total intensity")
    rate = target_total / (timesteps * mean_total)
    if rate * 255 > 1.0:
        raise UnreachableTargetError(
            f"target {target_total} needs rate_scale {rate:.3g}, beyond the probability bound"
        )
    return rate


def save_train(path: Union[str, Path], train: np.ndarray) -> None:
    """Write a spike train cache: 16-byte header then LSB-first packed rows."""
    train = np.asarray(train, dtype=bool)
    timesteps, width = train.shape
    header = struct.pack("<4sIII", CACHE_MAGIC, CACHE_VERSION, timesteps, width)
    packed = np.packbits(train, axis=1, bitorder="little")
    Path(path).write_bytes(header + packed.tobytes())


def load_train(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise CacheFormatError(f"{path}: header incomplete")
    magic, version, timesteps, width = struct.unpack_from("<4sIII", data)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"{path}: bad magic {magic!r}")
    if version != CACHE_VERSION:
        raise CacheFormatError(f"{path}: unsupported version {version}")
    row_bytes = (width + 7) // 8
    body = data[16:]
    if len(body) != timesteps * row_bytes:
        raise CacheFormatError(f"{path}: body is {len(body)} bytes, expected {timesteps * row_bytes}")
    rows = np.frombuffer(body, dtype=np.uint8).reshape(timesteps, row_bytes)
    return np.unpackbits(rows, axis=1, count=width, bitorder="little").astype(bool)
