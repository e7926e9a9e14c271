import csv
import json

import numpy as np
import pytest

from enscomp import SynthSpec, generate, run_sweep, synth_to_dir
from enscomp.cli import main
from enscomp import report


def synth_dir(tmp_path, with_latency=False, n=300, models=5, seed=6):
    cats = ("CNN", "TRANSFORMER", "MLP")
    spec = SynthSpec(n_samples=n, n_classes=6,
                     model_specs=tuple((0.75, cats[i % 3]) for i in range(models)),
                     pairwise_rho=0.2, seed=seed)
    latencies = [0.1 * (i + 1) for i in range(models)] if with_latency else None
    return synth_to_dir(spec, tmp_path / "reg", latencies=latencies)


class TestReportWriters:
    def test_sweep_csv_shape_and_rounding(self, tmp_path):
        spec = SynthSpec(n_samples=100, n_classes=4,
                         model_specs=((0.7, "CNN"), (0.7, "MLP"), (0.7, "TRANSFORMER")),
                         pairwise_rho=0.0, seed=2)
        sweep = run_sweep(generate(spec), k=2)
        path = tmp_path / "sweep.csv"
        report.write_sweep_csv(path, sweep)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["member_ids", "display_names", "pattern", "acc_1",
                           "acc_2", "soft_acc", "acc_gain", "latency_s",
                           "partial_correlation"]
        assert len(rows) == 1 + len(sweep)
        # percentages carry exactly 2 decimals
        for cell in rows[1][3:7]:
            whole, frac = cell.split(".")
            assert len(frac) == 2

    def test_sweep_json_full_precision(self, tmp_path):
        spec = SynthSpec(n_samples=80, n_classes=3,
                         model_specs=((0.8, "CNN"), (0.8, "MLP")),
                         pairwise_rho=0.0, seed=3)
        sweep = run_sweep(generate(spec), k=2)
        path = tmp_path / "sweep.json"
        report.write_sweep_json(path, sweep)
        payload = json.loads(path.read_text())
        assert payload["n_records"] == len(sweep)
        rec = payload["records"][0]
        assert rec["soft_acc"] == sweep.records[0].soft_acc  # exact round-trip

    def test_manifest_is_reproducible(self, tmp_path):
        src = tmp_path / "input.txt"
        src.write_text("data\n")
        out = tmp_path / "artifact.csv"
        out.write_text("a,b\n1,2\n")
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        report.write_manifest(m1, "evaluate", {"k": 3}, [src], [out])
        report.write_manifest(m2, "evaluate", {"k": 3}, [src], [out])
        assert m1.read_bytes() == m2.read_bytes()
        payload = json.loads(m1.read_text())
        assert payload["inputs"][str(src)] == report.sha256_file(src)
        assert "artifact.csv" in payload["outputs"]
        assert "time" not in json.dumps(payload).lower()


class TestEvaluateCommand:
    def test_end_to_end_artifacts(self, tmp_path, capsys):
        config = synth_dir(tmp_path, with_latency=True)
        out = tmp_path / "out"
        code = main(["evaluate", "--registry", str(config), "--k", "3",
                     "--workers", "2", "--out", str(out)])
        assert code == 0
        for name in ("sweep.csv", "sweep.json", "top_overall.csv",
                     "top_by_pattern.csv", "pareto.csv",
                     "gain_vs_correlation.csv", "gain_vs_correlation.png",
                     "gain_vs_latency.png", "manifest.json"):
            assert (out / name).is_file(), name
        summary = capsys.readouterr().out
        assert "combinations: 10" in summary

    def test_no_figures_and_no_latency(self, tmp_path):
        config = synth_dir(tmp_path, with_latency=False)
        out = tmp_path / "out"
        code = main(["evaluate", "--registry", str(config), "--out", str(out),
                     "--no-figures"])
        assert code == 0
        assert not list(out.glob("*.png"))
        assert not (out / "pareto.csv").is_file()  # no latency metadata

    def test_explicit_latency_mode_requires_metadata(self, tmp_path, capsys):
        config = synth_dir(tmp_path, with_latency=False)
        code = main(["evaluate", "--registry", str(config),
                     "--latency-mode", "sum", "--out", str(tmp_path / "o")])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ConfigError:")
        assert "\n" not in err.strip()

    def test_missing_registry_is_single_line_error(self, tmp_path, capsys):
        code = main(["evaluate", "--registry", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")])
        assert code == 1
        assert capsys.readouterr().err.startswith("error: ConfigError:")

    def test_env_overrides_flag_defaults(self, tmp_path, monkeypatch):
        config = synth_dir(tmp_path)
        out = tmp_path / "out"
        monkeypatch.setenv("ENSCOMP_K", "2")
        monkeypatch.setenv("ENSCOMP_NO_FIGURES", "1")
        code = main(["evaluate", "--registry", str(config), "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "sweep.json").read_text())
        assert payload["k"] == 2
        assert not list(out.glob("*.png"))

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        config = synth_dir(tmp_path)
        out = tmp_path / "out"
        monkeypatch.setenv("ENSCOMP_K", "2")
        code = main(["evaluate", "--registry", str(config), "--k", "3",
                     "--out", str(out), "--no-figures"])
        assert code == 0
        assert json.loads((out / "sweep.json").read_text())["k"] == 3

    def test_formats_subset(self, tmp_path):
        config = synth_dir(tmp_path)
        out = tmp_path / "out"
        code = main(["evaluate", "--registry", str(config), "--out", str(out),
                     "--formats", "json", "--no-figures"])
        assert code == 0
        assert (out / "sweep.json").is_file()
        assert not (out / "sweep.csv").is_file()


class TestOtherCommands:
    def test_correlate(self, tmp_path, capsys):
        config = synth_dir(tmp_path)
        out = tmp_path / "corr"
        code = main(["correlate", "--registry", str(config),
                     "--members", "s01,s03,s02", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "correlation.json").read_text())
        assert payload["member_ids"] == ["s01", "s02", "s03"]
        assert payload["n_filtered"] > 0

    def test_correlate_unknown_member(self, tmp_path, capsys):
        config = synth_dir(tmp_path)
        code = main(["correlate", "--registry", str(config),
                     "--members", "s01,s02,zz", "--out", str(tmp_path / "c")])
        assert code == 1
        err = capsys.readouterr().err
        assert "error: ConfigError:" in err and "s01" in err

    def test_correlate_wrong_member_count(self, tmp_path, capsys):
        config = synth_dir(tmp_path)
        code = main(["correlate", "--registry", str(config),
                     "--members", "s01,s02", "--out", str(tmp_path / "c")])
        assert code == 1

    def test_rank_prints_table(self, tmp_path, capsys):
        config = synth_dir(tmp_path)
        code = main(["rank", "--registry", str(config), "--top", "3"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 4  # header + 3 rows

    def test_rank_writes_csv(self, tmp_path):
        config = synth_dir(tmp_path)
        out = tmp_path / "rankout"
        code = main(["rank", "--registry", str(config), "--top", "2",
                     "--pattern", "TTM", "--out", str(out)])
        assert code == 0
        with open(out / "rank.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert all(row[3] == "MTT" for row in rows[1:])

    def test_spectrum(self, tmp_path):
        from enscomp import write_feature_maps
        rng = np.random.default_rng(0)
        for name in ("alpha", "beta"):
            write_feature_maps(tmp_path / f"{name}.fmap",
                               rng.standard_normal((2, 2, 12, 12)))
        out = tmp_path / "spec"
        code = main(["spectrum", "--fmap", str(tmp_path / "alpha.fmap"),
                     str(tmp_path / "beta.fmap"), "--bins", "8",
                     "--out", str(out)])
        assert code == 0
        for name in ("profile_alpha.csv", "profile_beta.csv",
                     "profile_distances.csv", "profiles.png", "manifest.json"):
            assert (out / name).is_file(), name
        with open(out / "profile_alpha.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 9
        assert float(rows[1][1]) == 0.0  # first bin pinned to zero

    def test_synth_command(self, tmp_path):
        out = tmp_path / "synthout"
        code = main(["synth", "--models", "4", "--samples", "120",
                     "--classes", "5", "--rho", "0.3", "--acc", "0.8",
                     "--seed", "9", "--out", str(out)])
        assert code == 0
        assert (out / "registry.json").is_file()
        assert len(list(out.glob("*.ensl"))) == 4
        assert (out / "manifest.json").is_file()

    def test_synth_acc_list(self, tmp_path):
        out = tmp_path / "synthout"
        code = main(["synth", "--models", "2", "--samples", "60",
                     "--classes", "4", "--acc", "0.9,0.6", "--seed", "1",
                     "--out", str(out)])
        assert code == 0
        cfg = json.loads((out / "registry.json").read_text())
        assert cfg["generator"]["target_accuracies"] == [0.9, 0.6]

    def test_synth_infeasible_params(self, tmp_path, capsys):
        code = main(["synth", "--models", "2", "--samples", "60",
                     "--classes", "4", "--rho", "1.0", "--seed", "1",
                     "--out", str(tmp_path / "x")])
        assert code == 1
        assert "error: ConfigError:" in capsys.readouterr().err

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
