"""Artifact writers: delimited tables, structured output, and run manifests.

Two output flavors, deliberately kept apart: table CSVs render accuracy
percentages with 2 decimal places, while machine outputs (the structured
sweep record, plot-data CSVs, manifests) keep full 64-bit precision.
Rounding is a presentation step and never feeds back into computation.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict
from pathlib import Path

from ._version import __version__
from .correlation import CorrelationReport
from .spectral import SpectralProfile
from .sweep import EnsembleResult, SweepResult, rank


def _pct(value: float) -> str:
    return f"{value * 100.0:.2f}"


def _full(value) -> str:
    # repr of a Python float is the shortest string that round-trips
    return "" if value is None else repr(float(value))


def _open_csv(path):
    return open(path, "w", newline="", encoding="utf-8")


def _sweep_header(k: int) -> list:
    head = ["member_ids", "display_names", "pattern"]
    head += [f"acc_{i + 1}" for i in range(k)]
    head += ["soft_acc", "acc_gain", "latency_s", "partial_correlation"]
    return head


def _sweep_row(rec: EnsembleResult) -> list:
    row = [";".join(rec.member_ids), ";".join(rec.display_names), rec.pattern]
    row += [_pct(a) for a in rec.member_accs]
    row += [_pct(rec.soft_acc), _pct(rec.acc_gain)]
    row.append("" if rec.latency_s is None else f"{rec.latency_s:.6f}")
    row.append("" if rec.partial_correlation is None
               else f"{rec.partial_correlation:.6f}")
    return row


def write_sweep_csv(path, sweep: SweepResult) -> None:
    """Full sweep as a table CSV (percentages at 2 decimals)."""
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(_sweep_header(sweep.k))
        for rec in sweep.records:
            writer.writerow(_sweep_row(rec))


def _record_dict(rec: EnsembleResult) -> dict:
    return {
        "member_ids": list(rec.member_ids),
        "display_names": list(rec.display_names),
        "pattern": rec.pattern,
        "member_accs": [float(a) for a in rec.member_accs],
        "soft_acc": float(rec.soft_acc),
        "acc_gain": float(rec.acc_gain),
        "latency_s": None if rec.latency_s is None else float(rec.latency_s),
        "partial_correlation": (None if rec.partial_correlation is None
                                else float(rec.partial_correlation)),
    }


def write_sweep_json(path, sweep: SweepResult, extra: dict | None = None) -> None:
    """Structured full-precision sweep record."""
    payload = {
        "tool": "enscomp",
        "version": __version__,
        "k": sweep.k,
        "n_models": sweep.n_models,
        "latency_mode": sweep.latency_mode,
        "n_records": len(sweep),
        "records": [_record_dict(r) for r in sweep.records],
    }
    if extra:
        payload.update(extra)
    _write_json(path, payload)


def write_ranked_csv(path, records, k: int) -> None:
    """A ranked subset in the same table shape as the full sweep."""
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank"] + _sweep_header(k))
        for pos, rec in enumerate(records, start=1):
            writer.writerow([str(pos)] + _sweep_row(rec))


def write_top_by_pattern_csv(path, sweep: SweepResult, top: int = 5) -> None:
    """Per-pattern top blocks, patterns in alphabetical order."""
    patterns = sorted({rec.pattern for rec in sweep.records})
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["pattern_rank"] + _sweep_header(sweep.k))
        for pattern in patterns:
            for pos, rec in enumerate(
                    rank(sweep, top=top, pattern_filter=pattern), start=1):
                writer.writerow([str(pos)] + _sweep_row(rec))


def write_pareto_csv(path, frontier) -> None:
    """Frontier records as plot data: latency and gain at full precision."""
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["member_ids", "pattern", "latency_s",
                         "soft_acc", "acc_gain"])
        for rec in frontier:
            writer.writerow([";".join(rec.member_ids), rec.pattern,
                             _full(rec.latency_s), _full(rec.soft_acc),
                             _full(rec.acc_gain)])


def write_scatter_csv(path, sweep: SweepResult) -> None:
    """Gain-versus-partial-correlation plot data, full precision."""
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["member_ids", "pattern",
                         "partial_correlation", "acc_gain"])
        for rec in sweep.records:
            writer.writerow([";".join(rec.member_ids), rec.pattern,
                             _full(rec.partial_correlation),
                             _full(rec.acc_gain)])


def write_correlation_json(path, report: CorrelationReport) -> None:
    payload = asdict(report)
    payload["member_ids"] = list(report.member_ids)
    if report.r_multiple is not None:
        payload["r_multiple"] = list(report.r_multiple)
    payload = {"tool": "enscomp", "version": __version__, **payload}
    _write_json(path, payload)


def write_profile_csv(path, profile: SpectralProfile) -> None:
    """One model's radial profile as plot data."""
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_center", "relative_log_amplitude"])
        for center, value in zip(profile.bin_centers, profile.values):
            writer.writerow([_full(center), _full(value)])


def write_distance_matrix_csv(path, ids, matrix) -> None:
    """Symmetric pairwise profile-distance matrix with id row/column labels."""
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + list(ids))
        for model_id, row in zip(ids, matrix):
            writer.writerow([model_id] + [_full(v) for v in row])


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, command: str, config: dict, inputs, outputs) -> None:
    """Reproducibility record: config plus digests of every input and output.

    Deliberately carries no timestamps or host details, so re-running the
    same command on the same inputs reproduces the manifest byte-for-byte.
    """
    manifest = {
        "tool": "enscomp",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in sorted(map(str, inputs))},
        "outputs": {Path(p).name: sha256_file(p)
                    for p in sorted(outputs, key=lambda p: Path(p).name)},
    }
    _write_json(path, manifest)


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
