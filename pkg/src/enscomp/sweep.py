"""Exhaustive evaluation of every size-k model combination in a registry.

Enumeration is lexicographic over model indices, evaluation is an
embarrassingly parallel map over immutable registry data, and results are
merged back in enumeration order, so the output is identical for any
worker count.  Per-model softmax matrices, standalone accuracies, and
correctness vectors are computed once up front and shared by every
combination.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .correlation import aggregate_partial_correlation, correctness_vector
from .errors import ConfigError
from .fusion import ProbabilityCache, acc_gain, standalone_accuracy
from .store import Registry

LATENCY_MODES = ("sum", "max", "off")

# letters sorted C < M < T form the canonical pattern string
_PATTERN_ORDER = {"C": 0, "M": 1, "T": 2}


def classify_pattern(metas) -> str:
    """Canonical category-letter multiset of an ensemble, e.g. CCT or CMT."""
    metas = list(metas)
    if not metas:
        raise ConfigError("pattern needs at least one member")
    letters = [m.category.letter for m in metas]
    return "".join(sorted(letters, key=_PATTERN_ORDER.__getitem__))


def canonical_pattern(text: str) -> str:
    """Normalize a user-typed pattern (e.g. TCC) to canonical letter order."""
    letters = [ch.upper() for ch in text.strip()]
    for ch in letters:
        if ch not in _PATTERN_ORDER:
            raise ConfigError(f"invalid pattern letter {ch!r} in {text!r} (use C, M, T)")
    if not letters:
        raise ConfigError("empty category pattern")
    return "".join(sorted(letters, key=_PATTERN_ORDER.__getitem__))


def enumerate_combinations(model_count: int, k: int) -> list:
    """All C(model_count, k) index tuples, lexicographic."""
    if not 2 <= k <= model_count:
        raise ConfigError(f"k must satisfy 2 <= k <= {model_count}, got {k}")
    return list(itertools.combinations(range(model_count), k))


@dataclass(frozen=True)
class EnsembleResult:
    """One sweep record: who was fused and how it scored."""

    member_ids: tuple[str, ...]
    display_names: tuple[str, ...]
    member_accs: tuple[float, ...]
    soft_acc: float
    acc_gain: float
    pattern: str
    latency_s: float | None = None
    partial_correlation: float | None = None


@dataclass(frozen=True)
class SweepResult:
    """All ensemble records for one (registry, k) sweep plus run metadata."""

    records: tuple[EnsembleResult, ...]
    k: int
    n_models: int
    latency_mode: str

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _aggregate_latency(metas, mode):
    latencies = [m.latency_s for m in metas]
    if any(v is None for v in latencies):
        return None
    return sum(latencies) if mode == "sum" else max(latencies)


def run_sweep(registry: Registry, k: int = 3, *, latency_mode: str = "sum",
              require_latency: bool = False, compute_correlation: bool | None = None,
              workers: int = 1) -> SweepResult:
    """Evaluate every size-k combination of registry models.

    ``latency_mode`` picks the aggregation rule (sum = sequential execution,
    max = parallel, off = none).  Missing per-model latencies leave the
    aggregate absent unless ``require_latency`` is set, which instead fails
    naming the offending model.  ``compute_correlation`` defaults to "only
    when k == 3", the triple the correlation statistic is defined for.
    """
    if latency_mode not in LATENCY_MODES:
        raise ConfigError(f"latency_mode must be one of {LATENCY_MODES}, got {latency_mode!r}")
    if len(registry) < k:
        raise ConfigError(f"registry has {len(registry)} models, cannot sweep k={k}")
    if require_latency and latency_mode != "off":
        for m in registry:
            if m.meta.latency_s is None:
                raise ConfigError(f"model {m.meta.id!r} has no latency_s but latency_mode="
                                  f"{latency_mode!r} was requested")
    if compute_correlation is None:
        compute_correlation = k == 3

    models = registry.models
    cache = ProbabilityCache.for_registry(registry)
    probs = [cache.get(m) for m in models]
    accs = [standalone_accuracy(m, registry.labels) for m in models]
    correct = [correctness_vector(m, registry.labels).astype(bool) for m in models]
    y = registry.labels

    def evaluate(combo):
        fused = probs[combo[0]] + probs[combo[1]]
        for i in combo[2:]:
            fused = fused + probs[i]
        predictions = np.argmax(fused, axis=1)
        soft = float(np.mean(predictions == y.labels))
        member_accs = [accs[i] for i in combo]
        metas = [models[i].meta for i in combo]

        partial = None
        if compute_correlation and len(combo) == 3:
            # id-sorted vector order, matching triple_partial_correlation bitwise
            by_id = sorted(combo, key=lambda i: models[i].meta.id)
            partial = aggregate_partial_correlation([correct[i] for i in by_id])

        return EnsembleResult(
            member_ids=tuple(m.id for m in metas),
            display_names=tuple(m.display_name for m in metas),
            member_accs=tuple(member_accs),
            soft_acc=soft,
            acc_gain=acc_gain(soft, member_accs),
            pattern=classify_pattern(metas),
            latency_s=None if latency_mode == "off" else _aggregate_latency(metas, latency_mode),
            partial_correlation=partial,
        )

    combos = list(enumerate_combinations(len(models), k))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(evaluate, combos, chunksize=max(1, len(combos) // (workers * 4))))
    else:
        records = [evaluate(c) for c in combos]

    return SweepResult(tuple(records), k, len(models), latency_mode)


def rank(results: SweepResult, key: str = "acc_gain", top: int | None = None,
         pattern_filter: str | None = None) -> list[EnsembleResult]:
    """Top records by key, descending; ties break on member ids."""
    if key not in ("acc_gain", "soft_acc"):
        raise ConfigError(f"rank key must be 'acc_gain' or 'soft_acc', got {key!r}")
    records = list(results)
    if pattern_filter is not None:
        wanted = canonical_pattern(pattern_filter)
        records = [r for r in records if r.pattern == wanted]
    records.sort(key=lambda r: (-getattr(r, key), r.member_ids))
    if top is not None:
        records = records[:top]
    return records


def pareto_frontier(results: SweepResult) -> list[EnsembleResult]:
    """Records not dominated in the (latency, gain) plane, latency ascending.

    A record is dominated when another has latency <= and gain >= with at
    least one strict inequality.
    """
    records = list(results)
    for r in records:
        if r.latency_s is None:
            raise ConfigError(
                f"ensemble {';'.join(r.member_ids)} has no aggregate latency; "
                "run the sweep with latencies to use the frontier"
            )
    # ascending latency; within a latency tie, descending gain
    ordered = sorted(records, key=lambda r: (r.latency_s, -r.acc_gain, r.member_ids))
    frontier = []
    best_gain = -math.inf          # best gain at strictly smaller latency
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j].latency_s == ordered[i].latency_s:
            j += 1
        group_best = ordered[i].acc_gain
        if group_best > best_gain:
            frontier.extend(r for r in ordered[i:j] if r.acc_gain == group_best)
            best_gain = group_best
        i = j
    return frontier


def pattern_counts(results: SweepResult) -> dict[str, int]:
    """How many sweep records fall into each category pattern."""
    counts: dict[str, int] = {}
    for r in results:
        counts[r.pattern] = counts.get(r.pattern, 0) + 1
    return dict(sorted(counts.items()))
