import csv
import json

import numpy as np
import pytest

from mfhebb.audio import write_wav
from mfhebb.cli import discover_tracks, main
from mfhebb.synthetic import click_train, sine

SR = 8000


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    """Two labels, three 6-second tracks each, plus one non-audio file."""
    root = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(0)
    for label, base in (("low", 150.0), ("high", 900.0)):
        (root / label).mkdir()
        for i in range(3):
            x = 0.4 * sine(base * (1 + 0.05 * i), SR, 6 * SR) + 0.3 * click_train(100 + 10 * i, SR, 6)
            x += 0.01 * rng.standard_normal(x.size)
            write_wav(root / label / f"t{i}.wav", np.clip(x, -1, 1), SR)
    (root / "low" / "notes.txt").write_text("ignored")
    return root


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "mfh.toml"
    path.write_text("frame_len = 1024\nhop = 512\nworkers = 1\nsplit_ratio = 0.5\n")
    return str(path)


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys else None
    return code, out


class TestDiscover:
    def test_sorted_wavs(self, corpus):
        tracks = discover_tracks(corpus)
        assert [(lab, p.name) for lab, p in tracks] == [
            ("high", "t0.wav"), ("high", "t1.wav"), ("high", "t2.wav"),
            ("low", "t0.wav"), ("low", "t1.wav"), ("low", "t2.wav"),
        ]


class TestExtract:
    def test_rows_and_determinism(self, corpus, cfg_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(["extract", "--dataset", corpus, "--out", a, "--config", cfg_file])[0] == 0
        assert run(["extract", "--dataset", corpus, "--out", b, "--config", cfg_file, "--workers", "2"])[0] == 0
        assert a.read_bytes() == b.read_bytes()
        rows = list(csv.DictReader(a.open()))
        assert len(rows) == 6
        assert rows[0]["track_id"] == "high/t0"
        assert {r["label"] for r in rows} == {"low", "high"}
        low = [float(r["fft_stat"]) for r in rows if r["label"] == "low"]
        high = [float(r["fft_stat"]) for r in rows if r["label"] == "high"]
        assert max(low) < min(high)

    def test_corrupt_file_skipped(self, corpus, cfg_file, tmp_path, caplog):
        root = tmp_path / "mixed"
        (root / "x").mkdir(parents=True)
        (root / "x" / "good.wav").write_bytes((corpus / "low" / "t0.wav").read_bytes())
        (root / "x" / "bad.wav").write_bytes(b"RIFF\x00\x00\x00\x00WAVEjunk")
        (root / "x" / "short.wav").write_bytes(b"")
        out = tmp_path / "f.csv"
        assert run(["extract", "--dataset", root, "--out", out, "--config", cfg_file])[0] == 0
        assert len(out.read_text().splitlines()) == 2
        assert "skipping" in caplog.text and "bad.wav" in caplog.text

    def test_no_files(self, tmp_path, cfg_file):
        (tmp_path / "empty" / "a").mkdir(parents=True)
        assert run(["extract", "--dataset", tmp_path / "empty", "--out", tmp_path / "f.csv",
                    "--config", cfg_file])[0] == 2

    def test_all_fail(self, tmp_path, cfg_file):
        (tmp_path / "d" / "a").mkdir(parents=True)
        (tmp_path / "d" / "a" / "x.wav").write_bytes(b"nope")
        assert run(["extract", "--dataset", tmp_path / "d", "--out", tmp_path / "f.csv",
                    "--config", cfg_file])[0] == 2

    def test_missing_root(self, tmp_path, cfg_file):
        assert run(["extract", "--dataset", tmp_path / "nowhere", "--out", tmp_path / "f.csv",
                    "--config", cfg_file])[0] == 2

    def test_bad_config(self, corpus, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("hop = 0\n")
        assert run(["extract", "--dataset", corpus, "--out", tmp_path / "f.csv", "--config", cfg])[0] == 3


class TestTrainEval:
    @pytest.fixture
    def features(self, corpus, cfg_file, tmp_path):
        out = tmp_path / "features.csv"
        assert run(["extract", "--dataset", corpus, "--out", out, "--config", cfg_file])[0] == 0
        return out

    def test_pipeline(self, features, cfg_file, tmp_path, capsys):
        model = tmp_path / "model" / "model.json"
        model.parent.mkdir()
        assert run(["train", "--features", features, "--out", model, "--config", cfg_file])[0] == 0
        doc = json.loads(model.read_text())
        assert doc["n_inputs"] == 32 and doc["n_outputs"] == 8
        assert doc["config"]["learning_rate"] == 0.2
        assert doc["config"]["momentum"] == 0.7
        assert doc["config"]["max_epochs"] == 10000
        assert doc["encoding"]["class_codes"] == {"high": "00000001", "low": "00000010"}
        assert doc["split"] == {"ratio": 0.5, "seed": 0}
        epochs = (model.parent / "epochs.csv").read_text().splitlines()
        assert epochs[0] == "epoch,error" and len(epochs) >= 2

        report = tmp_path / "report.json"
        code, out = run(["eval", "--model", model, "--features", features, "--out", report], capsys)
        assert code == 0
        assert out.out.startswith("accuracy ")
        rep = json.loads(report.read_text())
        # floor(0.5 * 3) = 1 training track per label leaves 2 + 2 for test
        assert len(rep["rows"]) == 4
        assert 0.0 <= rep["accuracy_overall"] <= 100.0
        assert rep["epoch_errors"][0]["epoch"] == 1
        assert (tmp_path / "curve.csv").read_text().startswith("epoch,error\n1,")

    def test_train_deterministic(self, features, cfg_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["train", "--features", features, "--out", a, "--config", cfg_file])
        run(["train", "--features", features, "--out", b, "--config", cfg_file])
        assert a.read_bytes() == b.read_bytes()

    def test_eval_dimension_mismatch(self, features, cfg_file, tmp_path):
        model = tmp_path / "m.json"
        run(["train", "--features", features, "--out", model, "--config", cfg_file])
        doc = json.loads(model.read_text())
        doc["encoding"]["features"] = ["beat", "pitch"]
        doc["encoding"]["ranges"] = {"beat": [0, 255], "pitch": [0, 255]}
        model.write_text(json.dumps(doc))
        assert run(["eval", "--model", model, "--features", features, "--out", tmp_path / "r.json"])[0] == 2

    def test_missing_features(self, tmp_path, cfg_file):
        assert run(["train", "--features", tmp_path / "none.csv", "--out", tmp_path / "m.json",
                    "--config", cfg_file])[0] == 2

    def test_missing_model(self, features, tmp_path):
        assert run(["eval", "--model", tmp_path / "none.json", "--features", features,
                    "--out", tmp_path / "r.json"])[0] == 2


class TestReproduceBench:
    def test_reproduce(self, capsys):
        code, out = run(["reproduce"], capsys)
        assert code == 0
        lines = out.out.splitlines()
        assert sum(l.startswith("PASS") for l in lines) == 15
        assert not any(l.startswith("FAIL") for l in lines)

    def test_bench(self, capsys):
        code, out = run(["bench", "--sizes", "8,64", "--reps", "10"], capsys)
        assert code == 0
        assert len(out.out.strip().splitlines()) == 3

    def test_bench_bad_sizes(self):
        with pytest.raises(SystemExit):
            main(["bench", "--sizes", "a,b"])
