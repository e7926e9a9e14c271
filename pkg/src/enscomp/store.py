"""Loading, validation, and immutable storage of per-model prediction matrices.

Score files come in two flavors: the ENSL v1 binary format (little-endian
header + float32 payload, bit-exact round trip) and plain CSV with one row
of class scores per sample.  Scores are held as float64 in memory so that
downstream fusion sums over ~1000-class probability vectors keep headroom;
writing back to ENSL narrows to float32, which recovers the original bytes
for data that came from an ENSL file.

A :class:`Registry` bundles the prediction sets of every model with the
shared ground-truth labels and asserts shape consistency once, at
construction.  Registries are immutable afterwards and safe to share
across worker threads.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError, ShapeError

ENSL_MAGIC = b"ENSL"
ENSL_VERSION = 1
_ENSL_HEADER = struct.Struct("<4sIQI")  # magic, version, n_samples, n_classes


class Category(enum.Enum):
    """Architecture family of a classifier."""

    CNN = "CNN"
    TRANSFORMER = "TRANSFORMER"
    MLP = "MLP"

    @property
    def letter(self):
        """Single-letter code used in category patterns (C, T, M)."""
        return {"CNN": "C", "TRANSFORMER": "T", "MLP": "M"}[self.value]


def _as_category(value) -> Category:
    if isinstance(value, Category):
        return value
    try:
        return Category(str(value).upper())
    except ValueError:
        valid = ", ".join(c.value for c in Category)
        raise ConfigError(f"unknown category {value!r} (expected one of {valid})") from None


@dataclass(frozen=True)
class ModelMeta:
    """Identity and bookkeeping for one model's exported scores."""

    id: str
    display_name: str
    category: Category
    latency_s: float | None = None
    source_path: str = ""

    def __post_init__(self):
        if not self.id:
            raise ConfigError("model id must be a non-empty string")
        object.__setattr__(self, "category", _as_category(self.category))
        if self.latency_s is not None:
            lat = float(self.latency_s)
            if not math.isfinite(lat) or lat < 0:
                raise ConfigError(
                    f"model {self.id!r}: latency_s must be finite and >= 0, got {self.latency_s!r}"
                )
            object.__setattr__(self, "latency_s", lat)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PredictionSet:
    """One model's score matrix (n_samples x n_classes) plus its metadata."""

    meta: ModelMeta
    scores: np.ndarray

    def __post_init__(self):
        scores = np.ascontiguousarray(self.scores, dtype=np.float64)
        if scores.ndim != 2:
            raise ShapeError(f"model {self.meta.id!r}: scores must be 2-D, got {scores.ndim}-D")
        n, k = scores.shape
        if n < 1:
            raise ShapeError(f"model {self.meta.id!r}: need at least 1 sample, got {n}")
        if k < 2:
            raise ShapeError(f"model {self.meta.id!r}: need at least 2 classes, got {k}")
        bad = np.argwhere(~np.isfinite(scores))
        if bad.size:
            r, c = (int(v) for v in bad[0])
            raise DataError(
                f"model {self.meta.id!r}: non-finite score at row {r}, column {c}",
                row=r,
                column=c,
            )
        object.__setattr__(self, "scores", _freeze(scores))

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]

    @property
    def n_classes(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class LabelSet:
    """Ground-truth class index per sample."""

    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ShapeError(f"labels must be 1-D, got {labels.ndim}-D")
        if self.n_classes < 2:
            raise ShapeError(f"need at least 2 classes, got {self.n_classes}")
        if labels.size:
            lo, hi = int(labels.min()), int(labels.max())
            if lo < 0 or hi >= self.n_classes:
                bad = int(np.argmax((labels < 0) | (labels >= self.n_classes)))
                raise DataError(
                    f"label {int(labels[bad])} at line {bad} outside [0, {self.n_classes})",
                    row=bad,
                )
        object.__setattr__(self, "labels", _freeze(labels))

    @property
    def n_samples(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class Registry:
    """Ordered, shape-consistent collection of prediction sets plus labels.

    ``scores_are`` records how the stored matrices should be interpreted by
    fusion: ``"logits"`` (default, softmax is applied once) or ``"probs"``
    (rows are already probabilities and are summed as stored).
    """

    models: tuple[PredictionSet, ...]
    labels: LabelSet
    scores_are: str = "logits"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        models = tuple(self.models)
        if not models:
            raise ConfigError("registry needs at least one model")
        if self.scores_are not in ("logits", "probs"):
            raise ConfigError(f"scores_are must be 'logits' or 'probs', got {self.scores_are!r}")
        first = models[0]
        seen = {}
        for m in models:
            if m.meta.id in seen:
                raise ConfigError(f"duplicate model id {m.meta.id!r}")
            seen[m.meta.id] = m
            if (m.n_samples, m.n_classes) != (first.n_samples, first.n_classes):
                raise ShapeError(
                    f"model {m.meta.id!r} is {m.n_samples}x{m.n_classes} but model "
                    f"{first.meta.id!r} is {first.n_samples}x{first.n_classes}"
                )
        if self.labels.n_samples != first.n_samples:
            raise ShapeError(
                f"labels have {self.labels.n_samples} samples but model "
                f"{first.meta.id!r} has {first.n_samples}"
            )
        if self.labels.n_classes != first.n_classes:
            raise ShapeError(
                f"labels declare {self.labels.n_classes} classes but model "
                f"{first.meta.id!r} has {first.n_classes}"
            )
        object.__setattr__(self, "models", models)

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(m.meta.id for m in self.models)

    @property
    def n_samples(self) -> int:
        return self.models[0].n_samples

    @property
    def n_classes(self) -> int:
        return self.models[0].n_classes

    def get(self, model_id: str) -> PredictionSet:
        for m in self.models:
            if m.meta.id == model_id:
                return m
        raise ConfigError(f"unknown model id {model_id!r}; valid ids: {', '.join(self.ids)}")

    def subset(self, ids) -> list[PredictionSet]:
        return [self.get(i) for i in ids]


def build_registry(predictions, labels: LabelSet, scores_are: str = "logits",
                   provenance: dict | None = None) -> Registry:
    """Validate and assemble a registry, preserving insertion order."""
    return Registry(tuple(predictions), labels, scores_are, provenance or {})


# ---------------------------------------------------------------------------
# ENSL v1 binary score format
# ---------------------------------------------------------------------------

def read_scores_binary(path) -> np.ndarray:
    """Read an ENSL v1 file into a float64 matrix (values bit-exact from float32)."""
    raw = Path(path).read_bytes()
    if len(raw) < _ENSL_HEADER.size:
        raise FormatError(f"{path}: truncated ENSL header ({len(raw)} bytes)")
    magic, version, n_samples, n_classes = _ENSL_HEADER.unpack_from(raw)
    if magic != ENSL_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {ENSL_MAGIC!r}")
    if version != ENSL_VERSION:
        raise FormatError(f"{path}: unsupported ENSL version {version}")
    expected = n_samples * n_classes * 4
    payload = raw[_ENSL_HEADER.size:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: header declares {n_samples}x{n_classes} "
            f"({expected} payload bytes) but file carries {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n_samples, n_classes)
    return data.astype(np.float64)


def write_scores_binary(path, scores: np.ndarray) -> None:
    """Write a score matrix as ENSL v1 (float32 little-endian payload)."""
    scores = np.asarray(scores)
    if scores.ndim != 2:
        raise ShapeError(f"scores must be 2-D, got {scores.ndim}-D")
    n, k = scores.shape
    with open(path, "wb") as fh:
        fh.write(_ENSL_HEADER.pack(ENSL_MAGIC, ENSL_VERSION, n, k))
        fh.write(np.ascontiguousarray(scores, dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# CSV score format
# ---------------------------------------------------------------------------

def _looks_numeric(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def read_scores_csv(path) -> np.ndarray:
    """Read a score CSV (one sample per row); a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise FormatError(f"{path}: empty score file")
    if rows and rows[0] and not _looks_numeric(rows[0][0].strip()):
        rows = rows[1:]
        if not rows:
            raise FormatError(f"{path}: header but no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=np.float64)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise FormatError(f"{path}: row {r} has {len(row)} columns, expected {width}")
        for c, tok in enumerate(row):
            try:
                out[r, c] = float(tok)
            except ValueError:
                raise FormatError(f"{path}: row {r}, column {c}: not a number: {tok!r}") from None
    return out


def load_predictions(path, meta: ModelMeta) -> PredictionSet:
    """Load a score file (ENSL binary or CSV, sniffed by magic bytes)."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"{path}: no such file")
    with open(path, "rb") as fh:
        head = fh.read(4)
    scores = read_scores_binary(path) if head == ENSL_MAGIC else read_scores_csv(path)
    meta = replace(meta, source_path=str(path))
    return PredictionSet(meta, scores)


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------

def read_labels(path, n_classes: int) -> LabelSet:
    """Read one decimal class index per line."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(int(text))
            except ValueError:
                raise FormatError(f"{path}: line {lineno}: not an integer: {text!r}") from None
    if not values:
        raise FormatError(f"{path}: empty label file")
    return LabelSet(np.array(values, dtype=np.int64), n_classes)


def write_labels(path, labels: np.ndarray) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(labels).ravel():
            fh.write(f"{int(v)}\n")


# ---------------------------------------------------------------------------
# Registry config (JSON)
# ---------------------------------------------------------------------------

def load_registry(config_path, labels_path=None, scores_are=None) -> Registry:
    """Load a registry from a JSON config file.

    The config lists per model: id, display_name, category, scores path,
    optional latency_s.  Relative paths resolve against the config file's
    directory.  ``labels_path`` and ``scores_are`` override the config keys
    when given.
    """
    config_path = Path(config_path)
    try:
        config = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{config_path}: invalid JSON: {exc}") from None
    if not isinstance(config, dict) or "models" not in config:
        raise FormatError(f"{config_path}: config must be an object with a 'models' list")
    base = config_path.parent

    predictions = []
    for entry in config["models"]:
        for key in ("id", "display_name", "category", "scores"):
            if key not in entry:
                raise FormatError(f"{config_path}: model entry missing {key!r}: {entry}")
        meta = ModelMeta(
            id=entry["id"],
            display_name=entry["display_name"],
            category=entry["category"],
            latency_s=entry.get("latency_s"),
        )
        predictions.append(load_predictions(base / entry["scores"], meta))
    if not predictions:
        raise ConfigError(f"{config_path}: config lists no models")

    if labels_path is None:
        if "labels" not in config:
            raise ConfigError(f"{config_path}: no labels path in config and none given")
        labels_path = base / config["labels"]
    labels = read_labels(labels_path, predictions[0].n_classes)

    mode = scores_are or config.get("scores_are", "logits")
    provenance = {k: config[k] for k in ("generator",) if k in config}
    provenance["config_path"] = str(config_path)
    provenance["labels_path"] = str(labels_path)
    return build_registry(predictions, labels, mode, provenance)


def write_registry_config(config_path, entries, labels_file, scores_are="logits",
                          generator=None) -> None:
    """Write a registry config JSON next to its score files.

    ``entries`` is a list of dicts with keys id, display_name, category,
    scores, and optionally latency_s.
    """
    config = {
        "labels": str(labels_file),
        "scores_are": scores_are,
        "models": entries,
    }
    if generator:
        config["generator"] = generator
    Path(config_path).write_text(json.dumps(config, indent=2) + "\n")
