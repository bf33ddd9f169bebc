import json

import numpy as np
import pytest

from rectree.cli import main
from rectree.datagen import read_dataset, read_points_csv
from rectree.reconstruction import load_codebook


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def workdir(tmp_path):
    assert (
        run("sample", "--generator", "uniform_cube", "--dim", "2", "--n", "400",
            "--seed", "3", "--output", tmp_path / "train.rtds")
        == 0
    )
    return tmp_path


class TestPipeline:
    def test_fit_encode_decode_distortion(self, workdir):
        cb = workdir / "cb.json"
        assert run("fit", "--data", workdir / "train.rtds", "--eta", "0.05",
                   "--output", cb) == 0
        q = load_codebook(cb)
        assert len(q.leaves) >= 4

        ids = workdir / "ids.csv"
        rec = workdir / "rec.csv"
        assert run("encode", "--codebook", cb, "--data", workdir / "train.rtds",
                   "--output", ids) == 0
        assert run("decode", "--codebook", cb, "--ids", ids, "--output", rec) == 0
        data = read_dataset(workdir / "train.rtds")
        vectors = read_points_csv(rec)
        np.testing.assert_array_equal(vectors, q.reconstruct(data.points))

        out = workdir / "dist.csv"
        assert run("distortion", "--codebook", cb, "--data", workdir / "train.rtds",
                   "--output", out) == 0
        header, row = out.read_text().splitlines()
        assert header == "n,distortion"
        n, value = row.split(",")
        assert int(n) == 400
        expected = float(np.mean(((data.points - vectors) ** 2).sum(axis=1)))
        assert float(value) == pytest.approx(expected, rel=1e-15)

    def test_sweep_data_mode(self, workdir):
        out = workdir / "sweep.csv"
        assert run("sweep", "--data", workdir / "train.rtds",
                   "--etas", "0.5,0.2,0.1", "--output", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "eta,leaf_count,train_distortion"
        assert len(lines) == 4

    def test_sweep_generator_mode(self, tmp_path):
        out = tmp_path / "sweepg.csv"
        assert run("sweep", "--generator", "uniform_cube", "--dim", "1", "--n", "300",
                   "--holdout-n", "500", "--etas", "0.5,0.1", "--output", out) == 0
        assert out.read_text().splitlines()[0] == (
            "eta,leaf_count,train_distortion,holdout_distortion"
        )

    def test_csv_ingestion_with_normalize(self, tmp_path):
        raw = tmp_path / "raw.csv"
        rng = np.random.default_rng(0)
        np.savetxt(raw, rng.normal(size=(50, 2)) * 40, delimiter=",")
        cb = tmp_path / "cb.json"
        assert run("fit", "--data", raw, "--normalize", "--eta", "0.2",
                   "--output", cb) == 0
        assert load_codebook(cb).dim == 2

    def test_sample_csv_output(self, tmp_path):
        out = tmp_path / "pts.csv"
        assert run("sample", "--generator", "circle", "--dim", "3", "--n", "20",
                   "--seed", "1", "--output", out) == 0
        assert read_points_csv(out).shape == (20, 3)


class TestExperimentCommands:
    def test_rate_experiment_with_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n-grid": "128,256", "trials": 2, "holdout-n": 500}))
        out = tmp_path / "rate.csv"
        assert run("rate-experiment", "--dim", "1", "--config", cfg, "--seed", "5",
                   "--output", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == (
            "n,eta_n,j_n,leaf_count,holdout_distortion_mean,holdout_distortion_std"
        )
        assert len(lines) == 3  # config n-grid applied

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n-grid": "128,256,512", "trials": 1, "holdout-n": 400}))
        out = tmp_path / "rate.csv"
        assert run("rate-experiment", "--dim", "1", "--config", cfg,
                   "--n-grid", "128,256", "--output", out) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(SystemExit):
            run("rate-experiment", "--dim", "1", "--config", cfg,
                "--output", tmp_path / "x.csv")

    def test_approx_trend(self, tmp_path):
        out = tmp_path / "trend.csv"
        assert run("approx-trend", "--uniform-atoms", "256", "--dim", "1",
                   "--etas", "0.5,0.125,0.03125", "--output", out) == 0
        assert out.read_text().splitlines()[0] == "eta,approx_error,leaf_count"

    def test_baseline(self, tmp_path):
        out = tmp_path / "base.csv"
        assert run("baseline", "--dim", "1", "--n", "256", "--holdout-n", "400",
                   "--etas", "1.0,0.2", "--output", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("eta,leaf_count,tree_train_distortion")
        assert len(lines) == 3


class TestErrors:
    def test_bad_data_path(self, tmp_path):
        assert run("fit", "--data", tmp_path / "missing.rtds", "--eta", "0.1",
                   "--output", tmp_path / "cb.json") == 2

    def test_out_of_domain_csv_without_normalize(self, tmp_path):
        raw = tmp_path / "raw.csv"
        raw.write_text("1.5,0.2\n0.1,0.3\n")
        assert run("fit", "--data", raw, "--eta", "0.1",
                   "--output", tmp_path / "cb.json") == 2
