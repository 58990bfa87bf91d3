import json
import subprocess
import sys

import numpy as np
import pytest

from localmap.cli import main
from localmap.core import MetricsReport
from localmap.data import load_csv
from localmap.svg import scatter_svg

FAST = ["--phase1-iters", "10", "--phase2-iters", "10", "--phase3-iters", "20", "--n-NN", "5"]


@pytest.fixture
def blobs_csv(tmp_path):
    path = tmp_path / "blobs.csv"
    assert main(["gen-blobs", "--out", str(path), "--n-clusters", "3",
                 "--points-per-cluster", "30", "--dim", "6", "--seed", "2"]) == 0
    return path


def embed(tmp_path, src, name, *extra):
    out = tmp_path / f"{name}.csv"
    assert main(["embed", "--input", str(src), "--labels", "--out", str(out), *FAST, *extra]) == 0
    return out


def test_gen_blobs_shape(blobs_csv):
    X = load_csv(blobs_csv, has_labels=True)
    assert X.values.shape == (90, 6)
    np.testing.assert_array_equal(np.bincount(X.labels), [30, 30, 30])


def test_gen_blobs_binary(tmp_path):
    path = tmp_path / "b.lmap"
    assert main(["gen-blobs", "--out", str(path), "--points-per-cluster", "3", "--dim", "2"]) == 0
    assert path.read_bytes()[:4] == b"LMAP"


def test_embed_writes_three_outputs(tmp_path, blobs_csv):
    out = embed(tmp_path, blobs_csv, "emb", "--seed", "7")
    rows = out.read_text().splitlines()
    assert len(rows) == 90 and all(len(r.split(",")) == 3 for r in rows)
    report = MetricsReport.from_json((tmp_path / "emb.report.json").read_text())
    assert report.seed_echo == 7 and report.config_echo["seed"] == 7
    assert report.config_echo["n_NN"] == 5
    log = [json.loads(l) for l in (tmp_path / "emb.log.jsonl").read_text().splitlines()]
    assert {r["event"] for r in log} == {"loss", "resample_local_fp"}


def test_embed_modes_differ(tmp_path, blobs_csv):
    a = embed(tmp_path, blobs_csv, "a", "--mode", "localmap")
    b = embed(tmp_path, blobs_csv, "b", "--mode", "pacmap")
    assert a.read_bytes() != b.read_bytes()
    assert "resample_fp" in (tmp_path / "b.log.jsonl").read_text()


def test_ablation_flags_equal_pacmap_mode(tmp_path, blobs_csv):
    a = embed(tmp_path, blobs_csv, "a", "--no-nn-weighting", "--no-local-fp", "--mode", "localmap")
    b = embed(tmp_path, blobs_csv, "b", "--mode", "pacmap")
    for suffix in (".csv", ".log.jsonl", ".report.json"):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()


def test_embed_is_byte_reproducible(tmp_path, blobs_csv):
    embed(tmp_path, blobs_csv, "a", "--seed", "3")
    embed(tmp_path, blobs_csv, "b", "--seed", "3")
    for suffix in (".csv", ".log.jsonl", ".report.json"):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()


def test_config_file_is_overridden_by_flags(tmp_path, blobs_csv):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 11, "d_adj": 6.0}))
    embed(tmp_path, blobs_csv, "emb", "--config", str(cfg), "--seed", "4")
    echo = MetricsReport.from_json((tmp_path / "emb.report.json").read_text()).config_echo
    assert echo["seed"] == 4 and echo["d_adj"] == 6.0


def test_embed_errors(tmp_path, blobs_csv, capsys):
    assert main(["embed", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o.csv")]) != 0
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["embed", "--input", str(bad), "--out", str(tmp_path / "o.csv")]) != 0
    assert "ragged row 2" in capsys.readouterr().err
    assert main(["embed", "--input", str(blobs_csv), "--labels", "--out", str(tmp_path / "o.csv"),
                 "--n-NN", "200"]) != 0
    assert "n_NN" in capsys.readouterr().err


def test_metrics_hand_example(tmp_path):
    emb = tmp_path / "hand.csv"
    emb.write_text("0,0,0\n0,1,0\n10,0,1\n10,1,1\n")
    out = tmp_path / "r.json"
    assert main(["metrics", "--input", str(emb), "--out", str(out), "--seed", "5"]) == 0
    report = MetricsReport.from_json(out.read_text())
    assert report.silhouette == pytest.approx(0.900249, abs=1e-6)
    assert report.seed_echo == 5 and report.posthoc_accuracy is None


def test_metrics_single_class(tmp_path, capsys):
    emb = tmp_path / "one.csv"
    emb.write_text("0,0,3\n1,1,3\n2,0,3\n")
    assert main(["metrics", "--input", str(emb)]) != 0
    assert "single class" in capsys.readouterr().err


def parse_table(text):
    rows = [line.split("\t") for line in text.strip().splitlines()[1:]]
    return [(int(r[0]), float(r[1]), float(r[3])) for r in rows]


def test_simulate_default_sweep(capsys):
    assert main(["simulate"]) == 0
    table = parse_table(capsys.readouterr().out)
    assert [r[0] for r in table] == [500, 1000, 2000, 4000]
    for _, emp, pred in table:
        assert abs(emp / pred - 1) < 0.2


def test_simulate_zero_and_determinism(capsys):
    assert main(["simulate", "--p-nn", "0", "--seeds", "5"]) == 0
    assert all(r[1] == 0 for r in parse_table(capsys.readouterr().out))
    main(["simulate", "--seed", "9", "--seeds", "5"])
    first = capsys.readouterr().out
    main(["simulate", "--seed", "9", "--seeds", "5"])
    assert capsys.readouterr().out == first


def test_plot(tmp_path):
    emb = tmp_path / "e.csv"
    emb.write_text("0,0,1\n1,1,2\n0.5,0.25,1\n")
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert main(["plot", "--input", str(emb), "--out", str(a)]) == 0
    assert main(["plot", "--input", str(emb), "--out", str(b)]) == 0
    text = a.read_text()
    assert text.count("<circle") == 3
    assert 'viewBox="-0.05 -0.05 1.1 1.1"' in text
    assert a.read_bytes() == b.read_bytes()


def test_plot_unlabeled_is_gray():
    svg = scatter_svg(np.array([[0.0, 0.0], [2.0, 1.0]]))
    assert svg.count('fill="#808080"') == 2


def test_plot_malformed(tmp_path, capsys):
    emb = tmp_path / "e.csv"
    emb.write_text("0,zero\n")
    assert main(["plot", "--input", str(emb), "--out", str(tmp_path / "x.svg")]) != 0
    assert "non-numeric" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "localmap.cli", "simulate", "--n", "100",
                           "--seeds", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("n\tempirical")
