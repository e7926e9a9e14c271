"""Error-overlap statistics for model triples.

Each member's hits are encoded as a binary correctness vector, and the
triple is summarized through pairwise Pearson coefficients, the multiple
correlation coefficient of each member against the other two, and a
sample-size-adjusted aggregate.  The mistake-filtered subset (samples
where at least one member is wrong) supplies the effective sample count:
it gates the minimum-evidence check and enters the adjustment as n.  The
coefficients themselves are taken over the full vectors; conditioning
them on the filter would manufacture negative correlation between even
independent models (samples where everyone is right are exactly the ones
excluded), and the statistic would then track selection strength instead
of true error overlap.

Undefined is a first-class outcome here, not an exception: a zero-variance
or collinear triple yields a report with ``r_adjusted=None`` and a reason,
so a single pathological combination cannot abort a several-hundred-entry
sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError, InsufficientSamplesError, ShapeError
from .store import LabelSet

_RADICAND_TOL = 1e-12


def correctness_vector(model, labels: LabelSet) -> np.ndarray:
    """1 where the model's top-1 prediction equals the label, else 0."""
    preds = np.argmax(model.scores, axis=1)
    return (preds == labels.labels).astype(np.float64)


def mistake_filter(members, labels: LabelSet) -> np.ndarray:
    """Ascending indices of samples where at least one member is wrong."""
    members = list(members)
    if not members:
        raise ShapeError("mistake_filter needs at least one member")
    all_correct = np.ones(labels.n_samples, dtype=bool)
    for m in members:
        if m.n_samples != labels.n_samples:
            raise ShapeError(
                f"model {m.meta.id!r} has {m.n_samples} samples, labels have {labels.n_samples}"
            )
        all_correct &= np.argmax(m.scores, axis=1) == labels.labels
    return np.flatnonzero(~all_correct)


def pearson(a, b) -> float | None:
    """Product-moment coefficient, or None when either vector is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"vectors must be 1-D and equal length, got {a.shape} vs {b.shape}")
    if a.size < 2:
        return None
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        return None
    r = float(np.dot(da, db)) / math.sqrt(va * vb)
    return min(1.0, max(-1.0, r))


def multiple_correlation(r_xz: float, r_yz: float, r_xy: float) -> float:
    """Correlation of Z with the best linear combination of X and Y.

    Computed from the three pairwise coefficients; the radicand is clamped
    into [0, 1] when floating point places it marginally outside, and a
    radicand clearly outside that range means the three inputs cannot come
    from one correlation matrix.
    """
    for name, r in (("r_xz", r_xz), ("r_yz", r_yz), ("r_xy", r_xy)):
        if not -1.0 <= r <= 1.0:
            raise DomainError(f"{name}={r} outside [-1, 1]")
    if abs(r_xy) == 1.0:
        raise DegenerateError("independent variables are collinear (|r_xy| = 1)")
    radicand = (r_xz * r_xz + r_yz * r_yz - 2.0 * r_xy * r_yz * r_xz) / (1.0 - r_xy * r_xy)
    if radicand < -_RADICAND_TOL or radicand > 1.0 + _RADICAND_TOL:
        raise DomainError(f"inconsistent correlation triple (R^2 = {radicand})")
    return math.sqrt(min(1.0, max(0.0, radicand)))


def adjusted_correlation(r_multiple: float, n: int, k_ind: int) -> float:
    """Small-sample adjustment of the squared coefficient; negatives clamp to 0."""
    if n <= k_ind + 1:
        raise InsufficientSamplesError(
            f"need more than {k_ind + 1} samples for {k_ind} independents, got {n}"
        )
    adj_sq = 1.0 - (1.0 - r_multiple * r_multiple) * (n - 1) / (n - k_ind - 1)
    return math.sqrt(max(0.0, adj_sq))


def _pairwise(vecs):
    """(r_01, r_02, r_12) over three equal-length vectors."""
    return pearson(vecs[0], vecs[1]), pearson(vecs[0], vecs[2]), pearson(vecs[1], vecs[2])


def _multiples_and_mean_adjusted(r_01, r_02, r_12, n):
    """Eq-by-eq aggregate: one multiple coefficient per dependent member,
    adjusted for sample size, averaged.  Raises on degenerate input."""
    pair_r = {(0, 1): r_01, (0, 2): r_02, (1, 2): r_12}
    multiples = []
    for dep in range(3):
        a, b = [i for i in range(3) if i != dep]
        multiples.append(
            multiple_correlation(pair_r[(a, dep) if a < dep else (dep, a)],
                                 pair_r[(b, dep) if b < dep else (dep, b)],
                                 pair_r[(a, b)])
        )
    adjusted = [adjusted_correlation(r, n, 2) for r in multiples]
    return tuple(multiples), float(np.mean(adjusted))


@dataclass(frozen=True)
class CorrelationReport:
    """Full output of the triple analysis.

    Member ids are listed in the (id-sorted) order used for the pairwise
    coefficients: ``r_xy`` pairs members 0 and 1, ``r_xz`` 0 and 2,
    ``r_yz`` 1 and 2.  ``r_multiple`` holds one value per choice of
    dependent member, in the same member order; ``r_adjusted`` is the mean
    of their sample-size-adjusted versions, or None with
    ``undefined_reason`` set.
    """

    member_ids: tuple[str, str, str]
    n_filtered: int
    r_xy: float | None
    r_xz: float | None
    r_yz: float | None
    r_multiple: tuple[float, float, float] | None
    r_adjusted: float | None
    undefined_reason: str | None = None


def triple_partial_correlation(members, labels: LabelSet) -> CorrelationReport:
    """Full correlation pipeline for three members.

    The mistake filter sets the effective sample count n (reported and
    used by the adjustment); the coefficients run over the full
    correctness vectors, see the module docstring for why.
    """
    members = list(members)
    if len(members) != 3:
        raise ShapeError(f"exactly 3 members required, got {len(members)}")
    members = sorted(members, key=lambda m: m.meta.id)
    ids = tuple(m.meta.id for m in members)

    kept = mistake_filter(members, labels)
    n = int(kept.size)
    if n < 4:
        raise InsufficientSamplesError(
            f"only {n} samples with at least one mistake; need >= 4"
        )
    vecs = [correctness_vector(m, labels) for m in members]
    r_01, r_02, r_12 = _pairwise(vecs)

    if r_01 is None or r_02 is None or r_12 is None:
        return CorrelationReport(ids, n, r_01, r_02, r_12, None, None,
                                 "zero-variance correctness vector")
    try:
        multiples, mean_adjusted = _multiples_and_mean_adjusted(r_01, r_02, r_12, n)
    except DegenerateError:
        return CorrelationReport(ids, n, r_01, r_02, r_12, None, None, "collinear")
    except DomainError:
        return CorrelationReport(ids, n, r_01, r_02, r_12, None, None,
                                 "inconsistent correlation triple")
    return CorrelationReport(ids, n, r_01, r_02, r_12, multiples, mean_adjusted, None)


def aggregate_partial_correlation(correct_vectors) -> float | None:
    """Sweep-column variant fed from cached boolean correctness vectors.

    Same statistic as :func:`triple_partial_correlation`, but every
    undefined outcome (too few mistakes, zero variance, collinear) maps to
    None instead of raising, so one pathological triple cannot abort a
    full sweep.
    """
    v0, v1, v2 = correct_vectors
    n = int(np.count_nonzero(~(v0 & v1 & v2)))
    if n < 4:
        return None
    vecs = [v.astype(np.float64) for v in (v0, v1, v2)]
    r_01, r_02, r_12 = _pairwise(vecs)
    if r_01 is None or r_02 is None or r_12 is None:
        return None
    try:
        _, mean_adjusted = _multiples_and_mean_adjusted(r_01, r_02, r_12, n)
    except (DegenerateError, DomainError, InsufficientSamplesError):
        return None
    return mean_adjusted
