import json
from pathlib import Path

import numpy as np
import pytest

from shadowkit import cli, experiments, shadows
from shadowkit.errors import ConfigError


def run_cli(args):
    return cli.main([str(a) for a in args])


def read_bytes(path: Path) -> bytes:
    return Path(path).read_bytes()


class TestGenerate:
    def test_shadow_files_have_expected_payload(self, tmp_path):
        out = tmp_path / "ds"
        code = run_cli([
            "generate", "--out", out, "--seed", 3,
            "--override", "family.tag=TFIM", "--override", "family.n=6",
            "--override", "num_records=10", "--override", "num_snapshots=1",
        ])
        assert code == 0
        shadow_files = sorted(out.glob("shadow_*.shdw"))
        assert len(shadow_files) == 10
        for path in shadow_files:
            data = path.read_bytes()
            assert len(data) - shadows._HEADER.size == 6  # n * T payload bytes
            sh = shadows.load_shadow(path)
            assert sh.n == 6 and sh.num_snapshots == 1
        assert (out / "truth.csv").exists()
        assert (out / "dataset.json").exists()
        specs = sorted(out.glob("spec_*.json"))
        assert len(specs) == 10

    def test_truth_has_header_and_sidecar_has_defaults(self, tmp_path):
        out = tmp_path / "ds"
        run_cli([
            "generate", "--out", out, "--seed", 1,
            "--override", "num_records=2", "--override", "family.n=3",
        ])
        header = (out / "truth.csv").read_text().splitlines()[0]
        assert header.startswith("record,x0,")
        sidecar = json.loads((out / "dataset.json").read_text())
        # defaulted fields must be resolved into the sidecar
        assert sidecar["config"]["num_snapshots"] == 1
        assert sidecar["config"]["degeneracy_tol"] == 1e-8


class TestRerunStability:
    def test_generate_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run_cli([
                "generate", "--out", out, "--seed", 11,
                "--override", "num_records=4", "--override", "family.n=4",
            ])
            outs.append(out)
        assert read_bytes(outs[0] / "truth.csv") == read_bytes(outs[1] / "truth.csv")
        for fname in ("shadow_0000.shdw", "shadow_0003.shdw"):
            assert read_bytes(outs[0] / fname) == read_bytes(outs[1] / fname)

    def test_classify_byte_identical_across_thread_counts(self, tmp_path):
        outs = []
        for name, threads in (("t1", 1), ("t2", 2)):
            out = tmp_path / name
            run_cli([
                "classify", "--out", out, "--seed", 5, "--threads", threads,
                "--override", "family.n=8", "--override", "per_side=3",
                "--override", "num_snapshots=40",
                "--override", "reflection_half_width=2",
                "--override", "unsupervised.trials=25",
            ])
            outs.append(out)
        for fname in ("embeddings.csv", "labels.csv"):
            assert read_bytes(outs[0] / fname) == read_bytes(outs[1] / fname)

    def test_different_seed_changes_output(self, tmp_path):
        texts = []
        for seed in (1, 2):
            out = tmp_path / f"s{seed}"
            run_cli([
                "generate", "--out", out, "--seed", seed,
                "--override", "num_records=3", "--override", "family.n=3",
            ])
            texts.append((out / "truth.csv").read_text())
        assert texts[0] != texts[1]


class TestShadowBench:
    def test_median_column_monotone(self, tmp_path):
        out = tmp_path / "bench"
        code = run_cli([
            "shadow-bench", "--out", out, "--seed", 2,
            "--override", "n=4", "--override", "num_seeds=5",
            "--override", 'states=["ghz"]',
            "--override", "snapshot_ladder=[100,200,400,800,1600]",
        ])
        assert code == 0
        lines = (out / "shadow_bench_summary.csv").read_text().splitlines()
        medians = [float(line.split(",")[2]) for line in lines[1:]]
        assert len(medians) == 5
        inversions = sum(1 for a, b in zip(medians, medians[1:]) if b > a * 1.05)
        assert inversions <= 1

    def test_per_seed_rows_written(self, tmp_path):
        out = tmp_path / "bench"
        run_cli([
            "shadow-bench", "--out", out, "--seed", 2,
            "--override", "n=3", "--override", "num_seeds=3",
            "--override", 'states=["random_product"]',
            "--override", "snapshot_ladder=[50,100]",
        ])
        lines = (out / "shadow_bench.csv").read_text().splitlines()
        assert len(lines) == 1 + 3 * 2


class TestClassifyOutputs:
    def test_summary_bookkeeping(self, tmp_path):
        out = tmp_path / "cls"
        run_cli([
            "classify", "--out", out, "--seed", 9,
            "--override", "family.n=8", "--override", "per_side=4",
            "--override", "num_snapshots=50",
            "--override", "reflection_half_width=2",
            "--override", "unsupervised.trials=25",
        ])
        summary = json.loads((out / "classify_summary.json").read_text())["results"]
        assert 0.0 <= summary["svm_test_accuracy"] <= 1.0
        confusion = np.array(summary["confusion"])
        assert confusion.sum() == summary["num_test"]
        lines = (out / "labels.csv").read_text().splitlines()
        assert len(lines) == 1 + 8


class TestInvariantCommand:
    def test_twist_sweep(self, tmp_path):
        out = tmp_path / "inv"
        code = run_cli([
            "invariant", "--out", out, "--seed", 0,
            "--override", "kind=twist", "--override", "family.tag=AKLT",
            "--override", "family.n=6", "--override", "twist_half_widths=[1,2]",
        ])
        assert code == 0
        lines = (out / "invariant.csv").read_text().splitlines()
        assert lines[0] == "n,half_width,twist_real,twist_imag"
        assert len(lines) == 3


class TestConfigHandling:
    def test_override_parse_types(self):
        config = {}
        experiments.apply_override(config, "family.n", "8")
        experiments.apply_override(config, "predictor.mode", "ridge")
        experiments.apply_override(config, "snapshot_ladder", "[1,2]")
        assert config == {
            "family": {"n": 8},
            "predictor": {"mode": "ridge"},
            "snapshot_ladder": [1, 2],
        }

    def test_config_file_plus_flag_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"num_records": 3, "family": {"n": 3}, "seed": 1}))
        out = tmp_path / "o"
        run_cli(["generate", "--config", cfg, "--out", out, "--seed", 7])
        sidecar = json.loads((out / "dataset.json").read_text())
        assert sidecar["config"]["seed"] == 7
        assert sidecar["config"]["num_records"] == 3

    def test_unknown_family_fails_cleanly(self, tmp_path, capsys):
        code = run_cli([
            "generate", "--out", tmp_path / "x",
            "--override", "family.tag=Nope", "--override", "num_records=1",
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = run_cli([
            "generate", "--config", tmp_path / "absent.json", "--out", tmp_path / "y",
        ])
        assert code == 1

    def test_bad_observable_spec(self, tmp_path):
        with pytest.raises(ConfigError):
            experiments.build_observables(["nonsense"], 4)
