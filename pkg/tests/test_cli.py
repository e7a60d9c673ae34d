import json

import pytest

from melodyga.cli import build_parser, main
from melodyga.neural import load_model
from melodyga.notation import parse_corpus

from .test_notation import MY_TUNE


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def test_defaults_match_parameter_table():
    p = build_parser()
    gen = p.parse_args(["generate", "--model", "m", "--out", "o"])
    assert (gen.pop_size, gen.max_iter, gen.cr, gen.mp, gen.mr, gen.elitism, gen.alpha) == \
        (20, 6000, 0.5, 0.5, 0.1, 0.5, 10.0)
    tr = p.parse_args(["train", "d", "--model-out", "m"])
    assert (tr.hidden, tr.epochs, tr.lr) == (50, 200, 1e-4)
    ds = p.parse_args(["dataset", "--out", "d"])
    assert (ds.pop_size, ds.max_iter, ds.n_random_uniform, ds.n_random_distribution) == (20, 6000, 4000, 4000)


def test_stats_hand_tally(workdir, capsys):
    (workdir / "tune.abc").write_text(MY_TUNE)
    assert run("stats", "tune.abc", "--out", "dist.json") == 0
    doc = json.loads((workdir / "dist.json").read_text())
    step = doc["rows"]["step"]
    # letters C..B each appear four times across the 28 notes
    assert dict(zip(step["values"], step["counts"])) == {s: 4 for s in range(1, 8)}
    assert "28 notes" in capsys.readouterr().out
    first = (workdir / "dist.json").read_bytes()
    assert run("stats", "tune.abc", "--out", "dist.json") == 0
    assert (workdir / "dist.json").read_bytes() == first


def test_stats_errors(workdir):
    (workdir / "empty.abc").write_text("")
    assert run("stats", "empty.abc") == 1
    assert run("stats", "missing.abc") == 1
    (workdir / "mixed.abc").write_text(MY_TUNE + "\nX:2\nK:C\n[CEG]\n")
    assert run("stats", "mixed.abc") == 1
    assert run("stats", "mixed.abc", "--continue-on-error", "--out", "d.json") == 1
    assert (workdir / "d.json").exists()


def small_pipeline(workdir, tag):
    assert run("stats", "--out", f"dist{tag}.json") == 0
    assert run("dataset", "--out", f"data{tag}.jsonl", "--max-iter", 40, "--stride", 20,
               "--n-random-uniform", 4, "--n-random-distribution", 4, "--seed", 3) == 0
    assert run("train", f"data{tag}.jsonl", "--model-out", f"model{tag}.json", "--history-out",
               f"hist{tag}.csv", "--epochs", 2, "--hidden", 4, "--lr", 1e-3, "--seed", 3) == 0
    assert run("generate", "--model", f"model{tag}.json", "--distributions", f"dist{tag}.json",
               "--n-notes", 12, "--max-iter", 30, "--out", f"gen{tag}.abc", "--history-out",
               f"ghist{tag}.csv", "--seed", 3) == 0
    assert run("score", "--model", f"model{tag}.json", f"gen{tag}.abc", "--out", f"score{tag}.tsv") == 0


def test_every_subcommand_is_byte_deterministic(workdir):
    small_pipeline(workdir, "a")
    small_pipeline(workdir, "b")
    for stem, ext in (("dist", "json"), ("data", "jsonl"), ("model", "json"), ("hist", "csv"),
                      ("gen", "abc"), ("ghist", "csv"), ("score", "tsv")):
        a = (workdir / f"{stem}a.{ext}").read_bytes()
        b = (workdir / f"{stem}b.{ext}").read_bytes()
        assert a == b, stem
    hist = (workdir / "hista.csv").read_text().splitlines()
    assert len(hist) == 1 + 2
    fit = [float(line.split(",")[1]) for line in (workdir / "ghista.csv").read_text().splitlines()[1:]]
    assert len(fit) == 31 and all(b >= a for a, b in zip(fit, fit[1:]))
    tunes = parse_corpus((workdir / "gena.abc").read_text())
    assert len(tunes) == 1 and len(tunes[0][1]) == 12


def test_score_table(workdir, capsys):
    (workdir / "tune.abc").write_text(MY_TUNE + "\n" + MY_TUNE.replace("X: 0", "X: 1"))
    assert run("dataset", "tune.abc", "--out", "d.jsonl", "--max-iter", 20, "--stride", 10,
               "--n-random-uniform", 2, "--n-random-distribution", 2) == 0
    assert run("train", "d.jsonl", "--model-out", "m.json", "--epochs", 1, "--hidden", 3) == 0
    capsys.readouterr()
    assert run("score", "--model", "m.json", "tune.abc") == 0
    first = capsys.readouterr().out
    assert run("score", "--model", "m.json", "tune.abc") == 0
    assert capsys.readouterr().out == first
    rows = first.strip().splitlines()
    assert len(rows) == 1 + 2
    # seven full 4/4 bars: the rhythm term is exactly 1
    assert rows[1].split()[-2] == "1.0000"


def test_resume_with_zero_learning_rate_round_trips(workdir):
    (workdir / "tune.abc").write_text(MY_TUNE)
    assert run("dataset", "tune.abc", "--out", "d.jsonl", "--max-iter", 20, "--stride", 10,
               "--n-random-uniform", 3, "--n-random-distribution", 3) == 0
    assert run("train", "d.jsonl", "--model-out", "m1.json", "--epochs", 2, "--hidden", 3) == 0
    assert run("train", "d.jsonl", "--model-out", "m2.json", "--epochs", 1, "--hidden", 3,
               "--lr", 0, "--resume", "m1.json") == 0
    assert load_model("m2.json") == load_model("m1.json")


def test_bad_inputs_exit_nonzero(workdir):
    assert run("train", "nope.jsonl", "--model-out", "m.json") == 1
    assert run("generate", "--model", "nope.json", "--out", "g.abc") == 1
    (workdir / "junk.json").write_text("{")
    assert run("generate", "--model", "junk.json", "--out", "g.abc") == 1
    assert run("dataset", "nope.abc", "--out", "d.jsonl") == 1
    with pytest.raises(SystemExit):
        run("generate", "--model", "m", "--out", "o", "--meter", "seven")
