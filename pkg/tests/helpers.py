"""Shared builders for test registries and naive reference implementations."""

import numpy as np

from enscomp import Category, LabelSet, ModelMeta, PredictionSet, Registry

CATS = (Category.CNN, Category.TRANSFORMER, Category.MLP)


def make_model(i, scores, category=None, latency=None):
    meta = ModelMeta(id=f"m{i:02d}", display_name=f"model-{i:02d}",
                     category=category or CATS[i % 3], latency_s=latency)
    return PredictionSet(meta, np.asarray(scores, dtype=np.float64))


def make_registry(score_list, labels, n_classes=None, scores_are="logits",
                  latencies=None):
    labels = np.asarray(labels)
    k = n_classes or np.asarray(score_list[0]).shape[1]
    models = tuple(
        make_model(i, s, latency=None if latencies is None else latencies[i])
        for i, s in enumerate(score_list)
    )
    return Registry(models, LabelSet(labels, k), scores_are=scores_are)


def random_registry(rng, n_models=3, n_samples=20, n_classes=4, latencies=None):
    scores = [rng.standard_normal((n_samples, n_classes)) for _ in range(n_models)]
    labels = rng.integers(0, n_classes, size=n_samples)
    return make_registry(scores, labels, n_classes, latencies=latencies)


def naive_softmax_fusion(score_list, labels):
    """Per-sample reference fusion in extended precision, no vectorization."""
    n, k = score_list[0].shape
    preds = []
    hits = 0
    for i in range(n):
        fused = [np.longdouble(0)] * k
        for scores in score_list:
            row = [np.longdouble(v) for v in scores[i]]
            m = max(row)
            exps = [np.exp(v - m) for v in row]
            total = sum(exps)
            for j in range(k):
                fused[j] += exps[j] / total
        best = 0
        for j in range(1, k):
            if fused[j] > fused[best]:
                best = j
        preds.append(best)
        hits += int(best == labels[i])
    return np.array(preds), hits / n
