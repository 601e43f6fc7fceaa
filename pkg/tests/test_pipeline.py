"""Config handling, end-to-end pipeline runs, sweeps and the CLI surface."""

import json
import subprocess
import sys

import numpy as np
import pytest

from stclust.cli import main
from stclust.pipeline import (
    ConfigError,
    PipelineConfig,
    load_config,
    parse_config_file,
    parse_layer_spec,
    run_pipeline,
    run_sweep,
    stream_seed,
    write_config_file,
)


class TestConfig:
    def test_default_hyperparameters(self):
        config = PipelineConfig()
        assert config.ae_layers == "d:500:500:2000:10"
        assert config.sca_layers == "d:500:500:2000:20"
        assert config.knn_k == 10
        assert config.gae_layers == "d:64:32"
        assert (config.gae_epochs, config.gae_lr) == (300, 0.002)
        assert (config.sca_lr, config.sca_momentum) == (0.01, 0.9)
        assert (config.sca_batch_size, config.sca_pretrain_epochs) == (64, 15)
        assert config.runs == 5

    def test_parse_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\npipeline = ae\nae_epochs = 7\nstandardize = true\n")
        config = load_config(path, {"ae_epochs": "9", "k": "4"})
        assert config.pipeline == "ae"
        assert config.ae_epochs == 9
        assert config.standardize is True
        assert config.k == 4

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_mapping({"nope": "1"})

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("just a line without equals\n")
        with pytest.raises(ConfigError):
            parse_config_file(path)

    def test_validation_missing_inputs(self, blob_fixture):
        emb, labels = blob_fixture
        with pytest.raises(ConfigError):
            PipelineConfig(pipeline="nope", embeddings=str(emb), labels=str(labels)).validate()
        with pytest.raises(ConfigError):
            PipelineConfig(pipeline="ae", labels=str(labels)).validate()
        with pytest.raises(ConfigError):
            PipelineConfig(pipeline="ae", embeddings="/does/not/exist", labels=str(labels)).validate()
        with pytest.raises(ConfigError):
            PipelineConfig(pipeline="baseline", embeddings=str(emb)).validate()  # no k, no labels

    def test_layer_spec_parsing(self):
        assert parse_layer_spec("d:500:500:2000:10", 768) == [768, 500, 500, 2000, 10]
        assert parse_layer_spec("256:32", 10) == [256, 32]
        with pytest.raises(ConfigError):
            parse_layer_spec("d", 5)
        with pytest.raises(ConfigError):
            parse_layer_spec("d:abc", 5)

    def test_stream_seeds_distinct_and_stable(self):
        a = stream_seed(7, "init")
        assert a == stream_seed(7, "init")
        assert a != stream_seed(7, "shuffle")
        assert a != stream_seed(8, "init")
        assert stream_seed(7, "init", 1) != a


class TestRunPipeline:
    def run_cfg(self, blob_fixture, **kwargs):
        emb, labels = blob_fixture
        defaults = dict(embeddings=str(emb), labels=str(labels), runs=2, base_seed=0)
        defaults.update(kwargs)
        return PipelineConfig(**defaults)

    def test_baseline_smoke(self, blob_fixture, tmp_path):
        out = tmp_path / "out"
        report = run_pipeline(self.run_cfg(blob_fixture, pipeline="baseline"), out)
        assert (out / "report.json").is_file()
        assert (out / "config.txt").is_file()
        assert 0.0 <= report["metrics"]["acc_mean"] <= 1.0
        assert 0.0 <= report["metrics"]["nmi_mean"] <= 1.0
        assert report["metrics"]["acc_std"] >= 0.0
        assert report["schema_version"] == 1

    def test_bow_baseline_on_texts(self, text_fixture, tmp_path):
        corpus, labels = text_fixture
        config = PipelineConfig(pipeline="baseline", baseline_features="bow",
                                corpus=str(corpus), labels=str(labels), runs=2)
        report = run_pipeline(config, tmp_path / "out")
        assert 0.0 <= report["metrics"]["acc_mean"] <= 1.0

    def test_ae_pipeline_artifacts(self, blob_fixture, tmp_path):
        out = tmp_path / "out"
        config = self.run_cfg(blob_fixture, pipeline="ae", ae_layers="d:32:8", ae_epochs=4)
        report = run_pipeline(config, out)
        for seed in (0, 1):
            run_dir = out / "runs" / f"seed_{seed}"
            assert (run_dir / "latent.stce").is_file()
            assert (run_dir / "model.stck").is_file()
            assert (run_dir / "train_log.jsonl").is_file()
        assert len(report["per_run"]) == 2

    def test_sca_beats_or_ties_ae_on_blobs(self, blob_fixture, tmp_path):
        ae = run_pipeline(self.run_cfg(blob_fixture, pipeline="ae", ae_layers="d:64:32:10",
                                       ae_epochs=8), tmp_path / "ae")
        sca = run_pipeline(self.run_cfg(blob_fixture, pipeline="sca_ae", sca_layers="d:64:32:10",
                                        sca_pretrain_epochs=8), tmp_path / "sca")
        assert sca["metrics"]["acc_mean"] >= ae["metrics"]["acc_mean"]

    def test_stn_gae_pipeline(self, blob_fixture, tmp_path):
        out = tmp_path / "out"
        config = self.run_cfg(blob_fixture, pipeline="stn_gae", gae_layers="d:16:8",
                              gae_epochs=30, knn_k=5, runs=1)
        report = run_pipeline(config, out)
        assert (out / "runs" / "seed_0" / "graph_edges.txt").is_file()
        assert 0.0 <= report["metrics"]["acc_mean"] <= 1.0

    def test_byte_identical_reports(self, blob_fixture, tmp_path):
        config = self.run_cfg(blob_fixture, pipeline="ae", ae_layers="d:32:8", ae_epochs=3)
        run_pipeline(config, tmp_path / "a")
        run_pipeline(config, tmp_path / "b")
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()

    def test_effective_config_reproduces_run(self, blob_fixture, tmp_path):
        config = self.run_cfg(blob_fixture, pipeline="baseline")
        run_pipeline(config, tmp_path / "a")
        echoed = load_config(tmp_path / "a" / "config.txt")
        run_pipeline(echoed, tmp_path / "b")
        a = json.loads((tmp_path / "a" / "report.json").read_text())
        b = json.loads((tmp_path / "b" / "report.json").read_text())
        assert a == b

    def test_kmeans_reseed_mode(self, blob_fixture, tmp_path):
        config = self.run_cfg(blob_fixture, pipeline="ae", ae_layers="d:32:8",
                              ae_epochs=3, reseed="kmeans", runs=3)
        report = run_pipeline(config, tmp_path / "out")
        assert report["metrics"]["runs"] == 3
        assert report["metrics"]["seeds"] == [0, 1, 2]

    def test_standardize_flag(self, blob_fixture, tmp_path):
        config = self.run_cfg(blob_fixture, pipeline="baseline", standardize=True)
        report = run_pipeline(config, tmp_path / "out")
        assert 0.0 <= report["metrics"]["acc_mean"] <= 1.0


class TestRunSweep:
    def test_epoch_sweep_csv(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        config = PipelineConfig(pipeline="ae", embeddings=str(emb), labels=str(labels),
                                ae_layers="d:32:8", runs=1)
        run_sweep(config, "epochs", [2, 4], tmp_path / "sweep")
        lines = (tmp_path / "sweep" / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "value,acc_mean,acc_std,nmi_mean,nmi_std"
        assert len(lines) == 3
        assert lines[1].startswith("2,") and lines[2].startswith("4,")

    def test_layer_spec_sweep_four_variants(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        config = PipelineConfig(pipeline="sca_ae", embeddings=str(emb), labels=str(labels),
                                sca_pretrain_epochs=2, sca_max_epochs=3, runs=1)
        variants = ["d:500:500:2000:20", "d:500:2000:500:20", "d:500:2000:20", "d:256:512:20"]
        rows = run_sweep(config, "layer_spec", variants, tmp_path / "sweep")
        lines = (tmp_path / "sweep" / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 5
        assert all("error" not in row for row in rows)

    def test_empty_values_rejected(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        config = PipelineConfig(pipeline="ae", embeddings=str(emb), labels=str(labels))
        with pytest.raises(ConfigError):
            run_sweep(config, "epochs", [], tmp_path / "sweep")

    def test_axis_invalid_for_baseline(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        config = PipelineConfig(pipeline="baseline", embeddings=str(emb), labels=str(labels))
        with pytest.raises(ConfigError):
            run_sweep(config, "epochs", [1], tmp_path / "sweep")

    def test_failed_cell_marked_and_sweep_continues(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        config = PipelineConfig(pipeline="ae", embeddings=str(emb), labels=str(labels),
                                ae_layers="d:32:8", runs=1)
        rows = run_sweep(config, "epochs", ["not_a_number", 2], tmp_path / "sweep")
        assert "error" in rows[0]
        assert rows[1]["acc_mean"] != ""
        lines = (tmp_path / "sweep" / "sweep.csv").read_text().strip().splitlines()
        assert len(lines) == 3


class TestCli:
    def test_run_subcommand(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        out = tmp_path / "out"
        code = main(["run", "--set", f"embeddings={emb}", "--set", f"labels={labels}",
                     "--set", "pipeline=baseline", "--set", "runs=2", "--out", str(out)])
        assert code == 0
        assert (out / "report.json").is_file()

    def test_run_with_config_file_and_seed(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"pipeline = baseline\nembeddings = {emb}\nlabels = {labels}\nruns = 2\n")
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--seed", "5", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["base_seed"] == 5
        assert report["metrics"]["seeds"] == [5, 6]

    def test_sweep_subcommand(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        out = tmp_path / "sweep"
        code = main(["sweep", "--set", f"embeddings={emb}", "--set", f"labels={labels}",
                     "--set", "pipeline=ae", "--set", "ae_layers=d:32:8", "--set", "runs=1",
                     "--axis", "epochs", "--values", "2,3", "--out", str(out)])
        assert code == 0
        assert (out / "sweep.csv").is_file()

    def test_export_graph_subcommand(self, blob_fixture, tmp_path):
        emb, _ = blob_fixture
        out = tmp_path / "edges.txt"
        assert main(["export-graph", "--embeddings", str(emb), "--k", "3", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert all(len(l.split()) == 2 for l in lines)

    def test_inspect_embeddings_subcommand(self, blob_fixture, capsys):
        emb, _ = blob_fixture
        assert main(["inspect-embeddings", "--in", str(emb)]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["n"] == 120 and info["d"] == 32

    def test_exit_code_2_on_bad_config(self, tmp_path):
        assert main(["run", "--set", "pipeline=ae", "--set", "k=3",
                     "--set", "embeddings=/missing.stce", "--out", str(tmp_path / "o")]) == 2

    def test_exit_code_3_on_divergence(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        code = main(["run", "--set", f"embeddings={emb}", "--set", f"labels={labels}",
                     "--set", "pipeline=ae", "--set", "ae_layers=d:32:8",
                     "--set", "ae_lr=1e18", "--set", "runs=1", "--out", str(tmp_path / "o")])
        assert code == 3

    def test_exit_code_4_on_io_failure(self, blob_fixture, tmp_path):
        emb, labels = blob_fixture
        blocker = tmp_path / "blocked"
        blocker.write_text("a file where the out dir should go")
        code = main(["run", "--set", f"embeddings={emb}", "--set", f"labels={labels}",
                     "--set", "pipeline=baseline", "--set", "runs=1", "--out", str(blocker)])
        assert code == 4

    def test_console_entry_point(self, blob_fixture):
        emb, _ = blob_fixture
        proc = subprocess.run([sys.executable, "-m", "stclust.cli", "inspect-embeddings",
                               "--in", str(emb)], capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["n"] == 120
