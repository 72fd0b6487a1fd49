import argparse
import io
import shutil
from pathlib import Path

import pytest
import requests

from slrupdate.cli import build_config, main, read_seeds
from slrupdate.errors import ConfigError
from slrupdate.fixtures import update_world
from slrupdate.records import read_ledger


def run(argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture
def no_network(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("network access in offline mode")
    monkeypatch.setattr(requests.Session, "request", boom)
    monkeypatch.setattr(requests.Session, "send", boom)


def test_read_seeds(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("# comment\nhttps://doi.org/10.1/A\n\n10.1/b  # trailing\ndoi:10.1/a\n")
    assert read_seeds(p) == ["10.1/a", "10.1/b", "10.1/a"]
    p.write_text("not-a-doi\n")
    with pytest.raises(ConfigError):
        read_seeds(p)


def test_snowball_graph(graph_files, tmp_path, no_network):
    code, out = run(["--offline", "--fixture", graph_files["world"], "--out-dir", tmp_path,
                     "snowball", graph_files["seeds"], "--direction", "both", "--iterations", "5"])
    assert code == 2  # DOI-less studies are recorded as failures
    assert "total: 32 studies" in out
    assert len([r for r in read_ledger(tmp_path / "backward.csv") if r.status == "Extraction successful"]) == 18


def test_missing_seeds_file(graph_files, tmp_path):
    code, _ = run(["--offline", "--fixture", graph_files["world"], "snowball", tmp_path / "nope.txt"])
    assert code == 1


def test_offline_needs_fixture(tmp_path):
    seeds = tmp_path / "s.txt"
    seeds.write_text("10.1/a\n")
    assert run(["--offline", "snowball", seeds])[0] == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["snowball"])
    assert exc.value.code == 1


def test_config_file_precedence(graph_files, tmp_path, no_network):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[snowball]\ndirection = backward\niterations = 2\n[pipeline]\nfixture = {graph_files['world']}\n"
                   "offline = true\n")
    code, out = run(["--config", cfg, "--out-dir", tmp_path / "o", "snowball", graph_files["seeds"]])
    assert "backward: 14 studies" in out and "forward" not in out
    code, out = run(["--config", cfg, "--out-dir", tmp_path / "o2", "snowball", graph_files["seeds"],
                     "--iterations", "1"])
    assert "backward: 12 studies" in out
    bad = tmp_path / "bad.ini"
    bad.write_text("[snowball]\ncolour = red\n")
    assert run(["--config", bad, "snowball", graph_files["seeds"]])[0] == 1


def test_config_inline_comments(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[provider]\nparallelism = 3   ; workers\n[snowball]\niterations = 2 # rounds\n")
    conf = build_config(argparse.Namespace(config=cfg))
    assert conf.provider.parallelism == 3 and conf.max_iterations == 2


def test_train_predict_evaluate(update_files, tmp_path, no_network):
    f = update_files
    model = tmp_path / "lsvm.json"
    code, out = run(["--seed", 1, "train", "--included", f["included"], "--excluded", f["excluded"],
                     "--model", "lsvm", "--output", model])
    assert code == 0 and "45 included" in out
    code, _ = run(["--seed", 1, "train", "--included", f["included"], "--excluded", f["excluded"],
                   "--model", "lsvm", "--output", tmp_path / "again.json"])
    assert model.read_bytes() == (tmp_path / "again.json").read_bytes()

    # candidates from a forward round
    snow = tmp_path / "snow"
    code, _ = run(["--offline", "--fixture", f["world"], "--out-dir", snow, "snowball", f["seeds"]])
    assert code == 0
    preds = tmp_path / "p.csv"
    code, out = run(["predict", "--model", model, "--candidates", snow, "--output", preds])
    lines = preds.read_text().splitlines()
    assert lines[0] == "id,score,label" and len(lines) == 1013
    scores = [float(l.split(",")[1]) for l in lines[1:]]
    assert scores == sorted(scores, reverse=True)

    code, _ = run(["predict", "--model", model, "--candidates", snow, "--threshold", "inf", "--output", preds])
    assert all(l.endswith(",0") for l in preds.read_text().splitlines()[1:])

    empty = tmp_path / "empty.bib"
    empty.write_text("")
    run(["predict", "--model", model, "--candidates", empty, "--output", tmp_path / "e.csv"])
    assert (tmp_path / "e.csv").read_bytes() == b"id,score,label\r\n"

    code, out = run(["--out-dir", tmp_path / "ev", "evaluate", "--predictions", preds, "--labels", f["labels"]])
    assert code == 0 and (tmp_path / "ev" / "report.csv").exists()


def test_train_single_class(update_files, tmp_path):
    empty = tmp_path / "none.bib"
    empty.write_text("")
    code, _ = run(["train", "--included", update_files["included"], "--excluded", empty])
    assert code == 1


def _update(files, out, *extra):
    return run(["--offline", "--fixture", files["world"], "--out-dir", out, *extra, "update", files["seeds"],
                "--included", files["included"], "--excluded", files["excluded"], "--labels", files["labels"]])


def test_update_recall_target_monotone(update_files, tmp_path, no_network):
    flagged = {}
    for target in ("0.8", "1.0"):
        out = tmp_path / target
        code, _ = _update(update_files, out, "--config", _cfg(tmp_path, target))
        assert code == 0
        flagged[target] = {
            kind: sum(1 for l in (out / "predictions" / f"{kind}.csv").read_text().splitlines()[1:] if l.endswith(",1"))
            for kind in ("lsvm", "logreg", "mnb", "gbt")
        }
    for kind in flagged["0.8"]:
        assert flagged["1.0"][kind] >= flagged["0.8"][kind]


def _cfg(tmp_path, target):
    p = tmp_path / f"cfg{target}.ini"
    p.write_text(f"[pipeline]\ntarget_recall = {target}\n[model]\ngbt_trees = 20\n")
    return p
