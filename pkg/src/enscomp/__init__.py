"""Softmax-ensemble evaluation toolkit.

Exhaustive ensemble sweeps over stored model outputs, the error
correlation statistic behind "why fusion helps", radial feature-map
spectra, and a synthetic generator for controlled experiments.
"""

from ._version import __version__
from .correlation import (CorrelationReport, adjusted_correlation,
                          aggregate_partial_correlation, correctness_vector,
                          mistake_filter, multiple_correlation, pearson,
                          triple_partial_correlation)
from .errors import (ConfigError, DataError, DegenerateError, DomainError,
                     EnscompError, FormatError, InsufficientSamplesError,
                     ShapeError)
from .fusion import (EnsembleScore, ProbabilityCache, acc_gain, fuse_soft,
                     softmax_rows, standalone_accuracy)
from .spectral import (FeatureMapSet, SpectralProfile, dft2_amplitude,
                       profile_distance, profile_model, radial_profile,
                       read_feature_maps, write_feature_maps)
from .store import (Category, LabelSet, ModelMeta, PredictionSet, Registry,
                    build_registry, load_predictions, load_registry,
                    read_labels, read_scores_binary, read_scores_csv,
                    write_labels, write_registry_config, write_scores_binary)
from .sweep import (EnsembleResult, SweepResult, canonical_pattern,
                    classify_pattern, enumerate_combinations, pareto_frontier,
                    pattern_counts, rank, run_sweep)
from .synth import SynthSpec, correlation_target, generate, synth_to_dir

__all__ = [
    "__version__",
    # errors
    "EnscompError", "FormatError", "DataError", "ShapeError", "ConfigError",
    "DomainError", "DegenerateError", "InsufficientSamplesError",
    # store
    "Category", "ModelMeta", "PredictionSet", "LabelSet", "Registry",
    "build_registry", "load_predictions", "load_registry", "read_labels",
    "read_scores_binary", "read_scores_csv", "write_labels",
    "write_registry_config", "write_scores_binary",
    # fusion
    "EnsembleScore", "ProbabilityCache", "softmax_rows", "standalone_accuracy",
    "acc_gain", "fuse_soft",
    # sweep
    "EnsembleResult", "SweepResult", "enumerate_combinations", "run_sweep",
    "rank", "pareto_frontier", "classify_pattern", "canonical_pattern",
    "pattern_counts",
    # correlation
    "CorrelationReport", "correctness_vector", "mistake_filter", "pearson",
    "multiple_correlation", "adjusted_correlation",
    "triple_partial_correlation", "aggregate_partial_correlation",
    # spectral
    "FeatureMapSet", "SpectralProfile", "dft2_amplitude", "radial_profile",
    "profile_model", "profile_distance", "read_feature_maps",
    "write_feature_maps",
    # synth
    "SynthSpec", "generate", "correlation_target", "synth_to_dir",
]
