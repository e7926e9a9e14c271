"""Synthetic registries with controlled accuracy and error correlation.

Correctness is driven by an equicorrelated Gaussian threshold model: each
sample draws a shared latent g ~ N(0,1) and each model an independent
e_l ~ N(0,1); model l is correct when sqrt(rho)*g + sqrt(1-rho)*e_l falls
below the normal quantile of its target accuracy.  One knob (rho) therefore
moves every pairwise correctness correlation up or down together, which is
what the correlation-versus-gain experiments need.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from .errors import ConfigError
from .store import (Category, LabelSet, ModelMeta, PredictionSet, Registry,
                    write_labels, write_registry_config, write_scores_binary)

RNG_NAME = "numpy-pcg64"  # np.random.default_rng; recorded in registry metadata

# Fraction of the margin used as logit noise.  Small enough that the lead
# class keeps the argmax with overwhelming probability.
NOISE_FRACTION = 0.1


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one synthetic registry."""

    n_samples: int
    n_classes: int
    model_specs: tuple  # of (target_accuracy, Category)
    pairwise_rho: float
    confidence_margin: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")
        if not self.model_specs:
            raise ConfigError("model_specs is empty")
        specs = []
        for acc, category in self.model_specs:
            acc = float(acc)
            if not 0.0 < acc < 1.0:
                raise ConfigError(
                    f"target accuracy must lie in (0, 1) for the threshold "
                    f"construction, got {acc}"
                )
            specs.append((acc, Category(category)))
        object.__setattr__(self, "model_specs", tuple(specs))
        if not 0.0 <= self.pairwise_rho < 1.0:
            raise ConfigError(
                f"pairwise_rho must lie in [0, 1), got {self.pairwise_rho}"
            )
        if not self.confidence_margin > 0:
            raise ConfigError(
                f"confidence_margin must be positive, got {self.confidence_margin}"
            )

    @property
    def n_models(self) -> int:
        return len(self.model_specs)


def _model_id(i: int) -> str:
    return f"s{i + 1:02d}"


def generate(spec: SynthSpec) -> Registry:
    """Draw one registry. Deterministic given the seed; single RNG stream."""
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n_samples, spec.n_classes
    rho = spec.pairwise_rho
    margin = spec.confidence_margin
    sigma = NOISE_FRACTION * margin

    g = rng.standard_normal(n)
    labels = rng.integers(0, k, size=n)
    w_shared = np.sqrt(rho)
    w_own = np.sqrt(1.0 - rho)

    predictions = []
    for i, (acc, category) in enumerate(spec.model_specs):
        e = rng.standard_normal(n)
        z = w_shared * g + w_own * e
        correct = z < norm.ppf(acc)

        # uniform over the k-1 classes that are not the label
        wrong = rng.integers(0, k - 1, size=n)
        wrong = wrong + (wrong >= labels)

        scores = rng.standard_normal((n, k)) * sigma
        lead = np.where(correct, labels, wrong)
        scores[np.arange(n), lead] += margin

        meta = ModelMeta(id=_model_id(i), display_name=f"synth{i + 1:02d}",
                         category=category)
        predictions.append(PredictionSet(meta, scores))

    provenance = {
        "rng": RNG_NAME,
        "seed": int(spec.seed),
        "pairwise_rho": float(rho),
        "confidence_margin": float(margin),
        "target_accuracies": [float(a) for a, _ in spec.model_specs],
    }
    return Registry(tuple(predictions), LabelSet(labels, k),
                    scores_are="logits", provenance=provenance)


def correlation_target(rho_latent: float, acc_a: float, acc_b: float) -> float:
    """Expected phi coefficient between two threshold correctness indicators.

    P(both correct) is the bivariate-normal probability below the two
    thresholds, integrated numerically; the phi coefficient then follows
    from the 2x2 contingency margins.
    """
    if not 0.0 <= rho_latent <= 1.0:
        raise ConfigError(f"rho_latent must lie in [0, 1], got {rho_latent}")
    for acc in (acc_a, acc_b):
        if not 0.0 < acc < 1.0:
            raise ConfigError(f"accuracies must lie in (0, 1), got {acc}")
    if rho_latent == 0.0:
        return 0.0
    t_a = norm.ppf(acc_a)
    t_b = norm.ppf(acc_b)
    if rho_latent == 1.0:
        p_both = min(acc_a, acc_b)
    else:
        s = np.sqrt(1.0 - rho_latent * rho_latent)

        def integrand(x):
            return norm.pdf(x) * norm.cdf((t_b - rho_latent * x) / s)

        p_both, _ = quad(integrand, -np.inf, t_a)
    cov = p_both - acc_a * acc_b
    denom = np.sqrt(acc_a * (1 - acc_a) * acc_b * (1 - acc_b))
    return float(cov / denom)


def synth_to_dir(spec: SynthSpec, out_dir, latencies=None) -> Path:
    """Generate a registry and write it as ENSL files + labels + config.

    Returns the config path.  ``latencies`` optionally assigns one
    latency_s per model so latency-dependent analyses run on synthetic
    data too.
    """
    registry = generate(spec)
    if latencies is not None and len(latencies) != len(registry):
        raise ConfigError(
            f"got {len(latencies)} latencies for {len(registry)} models"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for i, model in enumerate(registry):
        fname = f"{model.meta.id}.ensl"
        write_scores_binary(out_dir / fname, model.scores)
        entry = {
            "id": model.meta.id,
            "display_name": model.meta.display_name,
            "category": model.meta.category.name,
            "scores": fname,
        }
        if latencies is not None:
            entry["latency_s"] = float(latencies[i])
        entries.append(entry)

    write_labels(out_dir / "labels.txt", registry.labels.labels)
    config_path = out_dir / "registry.json"
    write_registry_config(config_path, entries, "labels.txt",
                          scores_are="logits", generator=registry.provenance)
    return config_path
