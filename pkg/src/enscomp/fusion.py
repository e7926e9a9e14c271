"""Softmax-sum fusion of model scores and the accuracy-gain metric.

The fused prediction for a sample is the argmax of the element-wise sum of
each member's softmax row; ensemble accuracy is the fraction of samples
where that argmax hits the ground truth, and the gain is measured against
the best standalone member.  All arithmetic is float64; argmax ties break
toward the lowest class index.

Members are summed in id-sorted order regardless of how the caller lists
them, so any permutation of the same members produces bit-identical
results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .store import LabelSet, PredictionSet, Registry


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting each row's maximum."""
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class ProbabilityCache:
    """Per-model probability matrices, computed once and reused across ensembles.

    In a k-sweep each model participates in C(M-1, k-1) ensembles, so the
    softmax is by far the dominant repeated cost; this cache removes it.
    With ``mode="probs"`` the stored score rows are taken as probabilities
    and used unchanged.
    """

    def __init__(self, mode: str = "logits"):
        if mode not in ("logits", "probs"):
            raise ConfigError(f"scores_are must be 'logits' or 'probs', got {mode!r}")
        self.mode = mode
        self._cache: dict[str, np.ndarray] = {}

    @classmethod
    def for_registry(cls, registry: Registry) -> "ProbabilityCache":
        cache = cls(registry.scores_are)
        for model in registry:
            cache.get(model)
        return cache

    def get(self, model: PredictionSet) -> np.ndarray:
        probs = self._cache.get(model.meta.id)
        if probs is None:
            if self.mode == "logits":
                probs = softmax_rows(model.scores)
            else:
                probs = model.scores
            probs.flags.writeable = False
            self._cache[model.meta.id] = probs
        return probs


@dataclass(frozen=True)
class EnsembleScore:
    """Fusion outcome for one set of members."""

    member_ids: tuple[str, ...]
    soft_acc: float
    acc_gain: float
    fused_predictions: np.ndarray | None = None


def standalone_accuracy(model: PredictionSet, labels: LabelSet) -> float:
    """Top-1 accuracy of a single model (lowest-index argmax tie rule)."""
    if model.n_samples != labels.n_samples:
        raise ShapeError(
            f"model {model.meta.id!r} has {model.n_samples} samples, labels have {labels.n_samples}"
        )
    preds = np.argmax(model.scores, axis=1)
    return float(np.mean(preds == labels.labels))


def acc_gain(soft_acc: float, member_accs) -> float:
    """Ensemble accuracy minus the best standalone member accuracy."""
    member_accs = list(member_accs)
    if not member_accs:
        raise ConfigError("member_accs must be non-empty")
    return soft_acc - max(member_accs)


def fuse_soft(members, labels: LabelSet, *, cache: ProbabilityCache | None = None,
              keep_predictions: bool = False,
              member_accs=None) -> EnsembleScore:
    """Fuse two or more members by summed softmax rows and score the result.

    ``member_accs`` lets a sweep pass pre-computed standalone accuracies
    (keyed positionally to ``members``); otherwise they are computed here.
    """
    members = list(members)
    if len(members) < 2:
        raise ConfigError(f"fusion needs at least 2 members, got {len(members)}")
    n, k = members[0].n_samples, members[0].n_classes
    for m in members:
        if (m.n_samples, m.n_classes) != (n, k):
            raise ShapeError(
                f"model {m.meta.id!r} is {m.n_samples}x{m.n_classes}, "
                f"expected {n}x{k}"
            )
    if labels.n_samples != n:
        raise ShapeError(f"labels have {labels.n_samples} samples, members have {n}")
    if cache is None:
        cache = ProbabilityCache()

    # id-sorted summation order makes the result permutation-invariant
    fused = np.zeros((n, k), dtype=np.float64)
    for m in sorted(members, key=lambda m: m.meta.id):
        fused += cache.get(m)
    predictions = np.argmax(fused, axis=1)
    soft = float(np.mean(predictions == labels.labels))

    if member_accs is None:
        member_accs = [standalone_accuracy(m, labels) for m in members]
    gain = acc_gain(soft, member_accs)
    return EnsembleScore(
        member_ids=tuple(m.meta.id for m in members),
        soft_acc=soft,
        acc_gain=gain,
        fused_predictions=predictions if keep_predictions else None,
    )
