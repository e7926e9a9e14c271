"""Batch command-line interface.

Subcommands: evaluate (full combination sweep with report artifacts),
correlate (one triple's correlation report), spectrum (feature-map
profiles), synth (synthetic registry generation), rank (quick top table).

Every flag can also be supplied through an environment variable named
ENSCOMP_<FLAG> (dashes become underscores, e.g. ENSCOMP_LATENCY_MODE);
an explicit flag wins over the environment.  Errors print one line to
stderr in the form ``error: <Code>: <message>`` and exit nonzero; exit
status 0 means every requested artifact was written.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import report
from ._version import __version__
from .correlation import triple_partial_correlation
from .errors import ConfigError, EnscompError
from .spectral import DEFAULT_BINS, profile_distance, profile_model, read_feature_maps
from .store import Category, Registry, load_registry
from .sweep import LATENCY_MODES, canonical_pattern, pareto_frontier, rank, run_sweep
from .synth import SynthSpec, synth_to_dir

ENV_PREFIX = "ENSCOMP_"


def _env(flag: str, default=None, cast=None):
    """Environment fallback for one flag; empty values count as unset."""
    raw = os.environ.get(ENV_PREFIX + flag.replace("-", "_").upper())
    if raw is None or raw == "":
        return default
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return cast(raw) if cast else raw


def _require(value, flag: str):
    if value is None:
        raise ConfigError(
            f"--{flag} is required (flag or {ENV_PREFIX}{flag.replace('-', '_').upper()})"
        )
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for a sweep-backed run."""

    registry: Path
    labels: Path | None
    k: int
    latency_mode: str | None  # None = resolve from available metadata
    scores_are: str | None
    workers: int
    out: Path | None
    formats: tuple[str, ...] = ("csv", "json")

    def __post_init__(self):
        if not self.registry.is_file():
            raise ConfigError(f"registry config not found: {self.registry}")
        if self.labels is not None and not self.labels.is_file():
            raise ConfigError(f"labels file not found: {self.labels}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.latency_mode is not None and self.latency_mode not in LATENCY_MODES:
            raise ConfigError(
                f"latency-mode must be one of {', '.join(LATENCY_MODES)}"
            )
        bad = set(self.formats) - {"csv", "json"}
        if bad or not self.formats:
            raise ConfigError("formats must be a nonempty subset of: csv, json")


def _run_config(args) -> RunConfig:
    return RunConfig(
        registry=Path(_require(args.registry, "registry")),
        labels=None if args.labels is None else Path(args.labels),
        k=args.k,
        latency_mode=args.latency_mode,
        scores_are=args.scores_are,
        workers=args.workers,
        out=None if getattr(args, "out", None) is None else Path(args.out),
        formats=tuple(f.strip() for f in args.formats.split(",") if f.strip()),
    )


def _load(config: RunConfig) -> Registry:
    return load_registry(config.registry, labels_path=config.labels,
                         scores_are=config.scores_are)


def _resolve_latency(config: RunConfig, registry: Registry):
    """Pick the effective latency mode.

    An explicit sum/max demands latency metadata on every model; with no
    explicit choice, sum is used when every model carries a latency and
    latency handling is switched off otherwise.
    """
    if config.latency_mode is not None:
        return config.latency_mode, config.latency_mode != "off"
    if all(m.meta.latency_s is not None for m in registry):
        return "sum", False
    return "off", False


def _registry_inputs(config: RunConfig, registry: Registry) -> list:
    inputs = [str(config.registry)]
    inputs += [m.meta.source_path for m in registry if m.meta.source_path]
    labels = config.labels or registry.provenance.get("labels_path")
    if labels and Path(labels).is_file():
        inputs.append(str(labels))
    return inputs


def _config_dict(config: RunConfig, latency_mode: str) -> dict:
    return {
        "registry": str(config.registry),
        "labels": None if config.labels is None else str(config.labels),
        "k": config.k,
        "latency_mode": latency_mode,
        "scores_are": config.scores_are or "from-config",
        "workers": config.workers,
        "formats": list(config.formats),
    }


def _pct(v: float) -> str:
    return f"{v * 100.0:.2f}%"


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def cmd_evaluate(args) -> int:
    config = _run_config(args)
    out_dir = _require(config.out, "out")
    registry = _load(config)
    latency_mode, require_latency = _resolve_latency(config, registry)

    sweep = run_sweep(registry, k=config.k, latency_mode=latency_mode,
                      require_latency=require_latency, workers=config.workers)

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, writer, *wargs):
        path = out_dir / name
        writer(path, *wargs)
        written.append(path)
        return path

    if "csv" in config.formats:
        emit("sweep.csv", report.write_sweep_csv, sweep)
        emit("top_overall.csv", report.write_ranked_csv,
             rank(sweep, top=args.top), sweep.k)
        emit("top_by_pattern.csv", report.write_top_by_pattern_csv, sweep, args.top)
    if "json" in config.formats:
        emit("sweep.json", report.write_sweep_json, sweep,
             {"registry": str(config.registry)})

    with_latency = latency_mode != "off" and all(
        r.latency_s is not None for r in sweep.records)
    frontier = None
    if with_latency:
        frontier = pareto_frontier(sweep)
        emit("pareto.csv", report.write_pareto_csv, frontier)

    with_correlation = any(r.partial_correlation is not None for r in sweep.records)
    if with_correlation:
        emit("gain_vs_correlation.csv", report.write_scatter_csv, sweep)

    if not args.no_figures and (with_correlation or with_latency):
        from . import figures
        if with_correlation:
            emit("gain_vs_correlation.png", lambda p, s: figures.fig_gain_vs_correlation(s, p), sweep)
        if with_latency:
            emit("gain_vs_latency.png",
                 lambda p, s, f: figures.fig_gain_vs_latency(s, f, p), sweep, frontier)

    emit("manifest.json", report.write_manifest, "evaluate",
         _config_dict(config, latency_mode), _registry_inputs(config, registry),
         list(written))

    best = rank(sweep, top=1)[0]
    print(f"models: {len(registry)}  k: {sweep.k}  combinations: {len(sweep)}")
    print(f"best ensemble: {';'.join(best.member_ids)}  "
          f"soft_acc: {_pct(best.soft_acc)}  acc_gain: {_pct(best.acc_gain)}")
    print(f"wrote {len(written)} artifacts to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# correlate
# ---------------------------------------------------------------------------

def cmd_correlate(args) -> int:
    config = _run_config(args)
    registry = _load(config)
    ids = [m.strip() for m in _require(args.members, "members").split(",") if m.strip()]
    if len(ids) != 3:
        raise ConfigError(f"--members needs exactly 3 comma-separated ids, got {len(ids)}")
    members = registry.subset(ids)

    rep = triple_partial_correlation(members, registry.labels)

    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "correlation.json"
    report.write_correlation_json(path, rep)
    manifest = out_dir / "manifest.json"
    report.write_manifest(manifest, "correlate",
                          {"registry": str(config.registry), "members": ids},
                          _registry_inputs(config, registry), [path])

    print(f"members: {';'.join(rep.member_ids)}  filtered n: {rep.n_filtered}")
    if rep.r_adjusted is None:
        print(f"aggregate: undefined ({rep.undefined_reason})")
    else:
        print(f"pairwise r: {rep.r_xy:.6f} {rep.r_xz:.6f} {rep.r_yz:.6f}")
        print(f"aggregate partial correlation: {rep.r_adjusted:.6f}")
    print(f"wrote 2 artifacts to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    paths = args.fmap or _env("fmap", None, lambda s: s.split(os.pathsep))
    if not paths:
        raise ConfigError("spectrum needs at least one feature-map file (--fmap)")
    if args.bins < 2:
        raise ConfigError(f"bins must be >= 2, got {args.bins}")
    out_dir = Path(_require(args.out, "out"))
    out_dir.mkdir(parents=True, exist_ok=True)

    profiles = {}
    for p in paths:
        fmap = read_feature_maps(p)
        if fmap.model_id in profiles:
            raise ConfigError(f"duplicate feature-map id {fmap.model_id!r}")
        profiles[fmap.model_id] = profile_model(fmap, n_bins=args.bins)

    written = []
    for model_id in sorted(profiles):
        path = out_dir / f"profile_{model_id}.csv"
        report.write_profile_csv(path, profiles[model_id])
        written.append(path)

    ids = sorted(profiles)
    matrix = [[profile_distance(profiles[a], profiles[b]) for b in ids] for a in ids]
    dist_path = out_dir / "profile_distances.csv"
    report.write_distance_matrix_csv(dist_path, ids, matrix)
    written.append(dist_path)

    if not args.no_figures:
        from . import figures
        fig_path = out_dir / "profiles.png"
        figures.fig_profiles(profiles, fig_path)
        written.append(fig_path)

    manifest = out_dir / "manifest.json"
    report.write_manifest(manifest, "spectrum",
                          {"bins": args.bins, "fmaps": [str(p) for p in paths]},
                          [str(p) for p in paths], written)

    print(f"profiled {len(ids)} models over {args.bins} bins")
    print(f"wrote {len(written) + 1} artifacts to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

_SYNTH_CATEGORIES = (Category.CNN, Category.TRANSFORMER, Category.MLP)


def cmd_synth(args) -> int:
    out_dir = Path(_require(args.out, "out"))
    accs = [float(a) for a in str(args.acc).split(",")]
    if len(accs) == 1:
        accs = accs * args.models
    if len(accs) != args.models:
        raise ConfigError(f"got {len(accs)} accuracies for {args.models} models")

    model_specs = tuple(
        (acc, _SYNTH_CATEGORIES[i % len(_SYNTH_CATEGORIES)])
        for i, acc in enumerate(accs)
    )
    spec = SynthSpec(n_samples=args.samples, n_classes=args.classes,
                     model_specs=model_specs, pairwise_rho=args.rho,
                     confidence_margin=args.margin, seed=args.seed)

    latencies = None
    if args.with_latency:
        # separate stream so score bytes stay independent of this flag
        latencies = np.random.default_rng([args.seed, 1]).uniform(
            0.05, 0.5, args.models)

    config_path = synth_to_dir(spec, out_dir, latencies=latencies)

    score_files = sorted(out_dir.glob("*.ensl"))
    outputs = score_files + [out_dir / "labels.txt", config_path]
    manifest = out_dir / "manifest.json"
    report.write_manifest(manifest, "synth",
                          {"models": args.models, "samples": args.samples,
                           "classes": args.classes, "rho": args.rho,
                           "acc": accs, "margin": args.margin,
                           "seed": args.seed,
                           "with_latency": bool(args.with_latency)},
                          [], outputs)

    print(f"generated {args.models} models x {args.samples} samples "
          f"({args.classes} classes, rho={args.rho}, seed={args.seed})")
    print(f"registry config: {config_path}")
    return 0


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------

def cmd_rank(args) -> int:
    config = _run_config(args)
    registry = _load(config)
    latency_mode, require_latency = _resolve_latency(config, registry)
    sweep = run_sweep(registry, k=config.k, latency_mode=latency_mode,
                      require_latency=require_latency, workers=config.workers)

    pattern = canonical_pattern(args.pattern) if args.pattern else None
    top = rank(sweep, key=args.key, top=args.top, pattern_filter=pattern)

    print(f"{'rank':>4}  {'members':<24} {'pattern':<8} "
          f"{'soft_acc':>9} {'acc_gain':>9}")
    for pos, rec in enumerate(top, start=1):
        print(f"{pos:>4}  {';'.join(rec.member_ids):<24} {rec.pattern:<8} "
              f"{_pct(rec.soft_acc):>9} {_pct(rec.acc_gain):>9}")

    if config.out is not None:
        config.out.mkdir(parents=True, exist_ok=True)
        path = config.out / "rank.csv"
        report.write_ranked_csv(path, top, sweep.k)
        manifest = config.out / "manifest.json"
        report.write_manifest(manifest, "rank",
                              {**_config_dict(config, latency_mode),
                               "key": args.key, "top": args.top,
                               "pattern": pattern},
                              _registry_inputs(config, registry), [path])
        print(f"wrote 2 artifacts to {config.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_registry_args(sub, with_out: bool = True):
    sub.add_argument("--registry", default=_env("registry"),
                     help="registry config JSON")
    sub.add_argument("--labels", default=_env("labels"),
                     help="labels file override")
    sub.add_argument("--k", type=int, default=_env("k", 3, int),
                     help="ensemble size (default 3)")
    sub.add_argument("--latency-mode", choices=LATENCY_MODES,
                     default=_env("latency-mode"),
                     help="latency aggregation: sum, max, or off "
                          "(default: sum when all models carry latency, else off)")
    sub.add_argument("--scores-are", choices=("logits", "probs"),
                     default=_env("scores-are"),
                     help="override the config's score interpretation")
    sub.add_argument("--workers", type=int, default=_env("workers", 1, int),
                     help="worker threads for the sweep (default 1)")
    sub.add_argument("--formats", default=_env("formats", "csv,json"),
                     help="comma list from {csv,json} (default both)")
    if with_out:
        sub.add_argument("--out", default=_env("out"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enscomp",
        description="Softmax-ensemble evaluation: exhaustive combination "
                    "sweeps, error-correlation analysis, and feature-map "
                    "spectra.")
    parser.add_argument("--version", action="version",
                        version=f"enscomp {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    ev = subs.add_parser("evaluate", help="full combination sweep with artifacts")
    _add_registry_args(ev)
    ev.add_argument("--top", type=int, default=_env("top", 5, int),
                    help="rows per top table (default 5)")
    ev.add_argument("--no-figures", action="store_true",
                    default=_env("no-figures", False, bool),
                    help="skip PNG rendering")
    ev.set_defaults(func=cmd_evaluate)

    co = subs.add_parser("correlate", help="correlation report for one triple")
    _add_registry_args(co)
    co.add_argument("--members", default=_env("members"),
                    help="exactly 3 comma-separated model ids")
    co.set_defaults(func=cmd_correlate)

    sp = subs.add_parser("spectrum", help="radial spectrum profiles of FMAP files")
    sp.add_argument("--fmap", nargs="+", default=None,
                    help="FMAP v1 feature-map files (one per model)")
    sp.add_argument("--bins", type=int, default=_env("bins", DEFAULT_BINS, int),
                    help=f"radial bin count (default {DEFAULT_BINS})")
    sp.add_argument("--out", default=_env("out"), help="output directory")
    sp.add_argument("--no-figures", action="store_true",
                    default=_env("no-figures", False, bool),
                    help="skip PNG rendering")
    sp.set_defaults(func=cmd_spectrum)

    sy = subs.add_parser("synth", help="generate a synthetic registry")
    sy.add_argument("--models", type=int, default=_env("models", 8, int))
    sy.add_argument("--samples", type=int, default=_env("samples", 2000, int))
    sy.add_argument("--classes", type=int, default=_env("classes", 10, int))
    sy.add_argument("--rho", type=float, default=_env("rho", 0.0, float),
                    help="latent error correlation in [0, 1)")
    sy.add_argument("--acc", default=_env("acc", "0.8"),
                    help="target accuracy, single value or comma list")
    sy.add_argument("--margin", type=float, default=_env("margin", 1.0, float),
                    help="logit lead of the favored class")
    sy.add_argument("--seed", type=int, default=_env("seed", 0, int))
    sy.add_argument("--with-latency", action="store_true",
                    default=_env("with-latency", False, bool),
                    help="attach synthetic per-model latencies")
    sy.add_argument("--out", default=_env("out"), help="output directory")
    sy.set_defaults(func=cmd_synth)

    rk = subs.add_parser("rank", help="print the top ensembles")
    _add_registry_args(rk)
    rk.add_argument("--key", choices=("acc_gain", "soft_acc"),
                    default=_env("key", "acc_gain"))
    rk.add_argument("--top", type=int, default=_env("top", 5, int))
    rk.add_argument("--pattern", default=_env("pattern"),
                    help="category pattern filter, e.g. CCT or CMT")
    rk.set_defaults(func=cmd_rank)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EnscompError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: FileNotFoundError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
