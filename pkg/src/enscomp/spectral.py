"""Radial frequency profiles of exported last-layer feature maps.

Each 2-D map slice is Fourier transformed (unnormalized forward DFT,
zero frequency shifted to the matrix center), amplitudes are averaged
over every sample and channel, radially binned against the half-diagonal
frequency in [0, 1], log-transformed, and shifted so the lowest-frequency
bin reads zero.  The resulting relative log-amplitude curve is what the
per-model frequency comparison operates on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, ShapeError

FMAP_MAGIC = b"FMAP"
FMAP_VERSION = 1
_FMAP_HEADER = struct.Struct("<4sIQIII")  # magic, version, samples, channels, h, w

LOG_FLOOR = 1e-12
DEFAULT_BINS = 20


@dataclass(frozen=True)
class FeatureMapSet:
    """Exported feature tensor (samples x channels x height x width) for one model."""

    model_id: str
    maps: np.ndarray

    def __post_init__(self):
        maps = np.ascontiguousarray(self.maps, dtype=np.float64)
        if maps.ndim != 4:
            raise ShapeError(f"{self.model_id!r}: feature maps must be 4-D, got {maps.ndim}-D")
        s, c, h, w = maps.shape
        if s < 1 or c < 1:
            raise ShapeError(f"{self.model_id!r}: empty feature map set {maps.shape}")
        if h < 2 or w < 2:
            raise ShapeError(f"{self.model_id!r}: maps must be at least 2x2, got {h}x{w}")
        if not np.all(np.isfinite(maps)):
            raise DataError(f"{self.model_id!r}: non-finite feature map value")
        maps.flags.writeable = False
        object.__setattr__(self, "maps", maps)

    @property
    def n_samples(self) -> int:
        return self.maps.shape[0]

    @property
    def n_channels(self) -> int:
        return self.maps.shape[1]


@dataclass(frozen=True)
class SpectralProfile:
    """Radially binned spectrum: bin centers in [0, 1] and a value per bin.

    For finished model profiles the values are relative log amplitudes
    (lowest bin pinned to zero); empty bins carry NaN.  ``sample_count``
    is the number of 2-D map slices that went into the average.
    """

    bin_centers: np.ndarray
    values: np.ndarray
    sample_count: int

    def __post_init__(self):
        centers = np.ascontiguousarray(self.bin_centers, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if centers.shape != values.shape or centers.ndim != 1:
            raise ShapeError(f"bin_centers {centers.shape} and values {values.shape} must match 1-D")
        if centers.size < 2:
            raise ShapeError("need at least 2 bins")
        if not np.all(np.diff(centers) > 0):
            raise DataError("bin centers must be strictly increasing")
        centers.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "bin_centers", centers)
        object.__setattr__(self, "values", values)

    @property
    def n_bins(self) -> int:
        return self.bin_centers.size


def dft2_amplitude(map2d: np.ndarray) -> np.ndarray:
    """Magnitude of the centered 2-D DFT (unnormalized forward transform)."""
    map2d = np.asarray(map2d, dtype=np.float64)
    if map2d.ndim != 2:
        raise ShapeError(f"expected a 2-D map, got {map2d.ndim}-D")
    return np.abs(np.fft.fftshift(np.fft.fft2(map2d)))


def _radial_bin_index(h: int, w: int, n_bins: int) -> np.ndarray:
    """Per-cell bin index from center distance over the half-diagonal."""
    cy, cx = h // 2, w // 2
    y = np.arange(h)[:, None] - cy
    x = np.arange(w)[None, :] - cx
    dist = np.sqrt(y * y + x * x)
    half_diag = np.sqrt(h * h + w * w) / 2.0
    norm = dist / half_diag
    idx = np.minimum((norm * n_bins).astype(np.int64), n_bins - 1)
    return idx


def _bin_means(amplitude: np.ndarray, n_bins: int) -> np.ndarray:
    """Average cell values per radial bin; NaN marks empty bins."""
    h, w = amplitude.shape
    idx = _radial_bin_index(h, w, n_bins).ravel()
    sums = np.bincount(idx, weights=amplitude.ravel(), minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return means


def bin_centers(n_bins: int) -> np.ndarray:
    return (np.arange(n_bins) + 0.5) / n_bins


def radial_profile(amplitude: np.ndarray, n_bins: int = DEFAULT_BINS) -> SpectralProfile:
    """Radially bin one amplitude matrix (pre-log, absolute amplitudes)."""
    amplitude = np.asarray(amplitude, dtype=np.float64)
    if amplitude.ndim != 2:
        raise ShapeError(f"expected a 2-D amplitude matrix, got {amplitude.ndim}-D")
    if n_bins < 2:
        raise ShapeError(f"n_bins must be >= 2, got {n_bins}")
    return SpectralProfile(bin_centers(n_bins), _bin_means(amplitude, n_bins), 1)


def profile_model(maps: FeatureMapSet, n_bins: int = DEFAULT_BINS,
                  average: str = "amplitude") -> SpectralProfile:
    """Relative log-amplitude profile averaged over all samples and channels.

    ``average="amplitude"`` (default) averages DFT amplitudes across map
    slices before the log; ``average="log"`` log-transforms each slice's
    amplitude first and averages those, as a sensitivity check.  Either
    way the lowest-frequency bin is shifted to zero, which also makes the
    profile invariant to positive rescaling of the input maps.
    """
    if average not in ("amplitude", "log"):
        raise DataError(f"average must be 'amplitude' or 'log', got {average!r}")
    if n_bins < 2:
        raise ShapeError(f"n_bins must be >= 2, got {n_bins}")
    s, c, h, w = maps.maps.shape
    slices = maps.maps.reshape(s * c, h, w)
    amplitudes = np.abs(np.fft.fftshift(np.fft.fft2(slices, axes=(-2, -1)), axes=(-2, -1)))
    if not np.any(amplitudes > 0):
        raise DataError(f"{maps.model_id!r}: all-zero feature maps have an empty spectrum")

    if average == "amplitude":
        mean_amp = amplitudes.mean(axis=0)
        binned = _bin_means(mean_amp, n_bins)
        values = np.log(np.maximum(binned, LOG_FLOOR))
    else:
        log_amp = np.log(np.maximum(amplitudes, LOG_FLOOR)).mean(axis=0)
        values = _bin_means(log_amp, n_bins)
    values = values - values[0]
    return SpectralProfile(bin_centers(n_bins), values, s * c)


def profile_distance(a: SpectralProfile, b: SpectralProfile) -> float:
    """Root-mean-square difference between two profiles with matching bins."""
    if a.n_bins != b.n_bins:
        raise ShapeError(f"bin counts differ: {a.n_bins} vs {b.n_bins}")
    if np.any(np.isnan(a.values)) or np.any(np.isnan(b.values)):
        raise DataError("profiles with undefined (empty) bins cannot be compared")
    diff = a.values - b.values
    return float(np.sqrt(np.mean(diff * diff)))


# ---------------------------------------------------------------------------
# FMAP v1 binary format
# ---------------------------------------------------------------------------

def read_feature_maps(path, model_id: str | None = None) -> FeatureMapSet:
    """Read an FMAP v1 file (float32 LE, sample/channel/row-major)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _FMAP_HEADER.size:
        raise FormatError(f"{path}: truncated FMAP header ({len(raw)} bytes)")
    magic, version, s, c, h, w = _FMAP_HEADER.unpack_from(raw)
    if magic != FMAP_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FMAP_MAGIC!r}")
    if version != FMAP_VERSION:
        raise FormatError(f"{path}: unsupported FMAP version {version}")
    expected = s * c * h * w * 4
    payload = raw[_FMAP_HEADER.size:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: header declares {s}x{c}x{h}x{w} ({expected} payload bytes) "
            f"but file carries {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(s, c, h, w).astype(np.float64)
    return FeatureMapSet(model_id or path.stem, data)


def write_feature_maps(path, maps: np.ndarray) -> None:
    """Write a 4-D feature tensor as FMAP v1."""
    maps = np.asarray(maps)
    if maps.ndim != 4:
        raise ShapeError(f"feature maps must be 4-D, got {maps.ndim}-D")
    s, c, h, w = maps.shape
    with open(path, "wb") as fh:
        fh.write(_FMAP_HEADER.pack(FMAP_MAGIC, FMAP_VERSION, s, c, h, w))
        fh.write(np.ascontiguousarray(maps, dtype="<f4").tobytes())
