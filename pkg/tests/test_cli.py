from __future__ import annotations

import csv

import pytest

from mallga.cli import build_parser, main, parse_int_list


def test_parse_int_list():
    assert parse_int_list("3-7") == [3, 4, 5, 6, 7]
    assert parse_int_list("3,5") == [3, 5]
    assert parse_int_list("0-2,5") == [0, 1, 2, 5]


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--algo", "direct", "--bogus"])
    assert exc.value.code == 2


def test_unknown_algorithm_is_rejected():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["run", "--algo", "ind-magic"])
    assert exc.value.code == 2


def test_gen_writes_all_files(tmp_path, capsys):
    assert main(["gen", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("*.mall"))) == 50
    assert "50" in capsys.readouterr().out


def test_run_and_report(tmp_path, capsys):
    data, out = tmp_path / "data", tmp_path / "res"
    assert main(["gen", "--out", str(data), "--sets", "4", "--instances", "0"]) == 0
    code = main(["run", "--algo", "ind-low", "--algo", "ind-auto-cross", "--data", str(data),
                 "--sets", "4", "--instances", "0", "--runs", "1", "--workers", "1", "--out", str(out)])
    assert code == 0
    with open(out / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["variant"] for r in rows] == ["ind-low", "ind-auto-cross"]
    assert (out / "aggregate.csv").exists() and (out / "runs.jsonl").exists()

    rep = tmp_path / "rep"
    assert main(["report", "--archive", str(out / "runs.jsonl"), "--out", str(rep)]) == 0
    for name in ("summary.csv", "aggregate.csv", "weights-by-set.csv", "crossover-shares.csv",
                 "convergence.csv"):
        assert (rep / name).exists(), name
    assert (rep / "summary.csv").read_bytes() == (out / "summary.csv").read_bytes()


def test_run_with_missing_data_fails(tmp_path, capsys):
    code = main(["run", "--algo", "ind-low", "--data", str(tmp_path), "--sets", "4", "--instances", "0",
                 "--runs", "1", "--workers", "1", "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_report_missing_archive(tmp_path, capsys):
    assert main(["report", "--archive", str(tmp_path / "none.jsonl")]) == 1
    assert "error" in capsys.readouterr().err


def test_oracle_command(capsys):
    assert main(["oracle", "--seed", "26", "--runs", "3"]) == 0
    out = capsys.readouterr().out
    assert "optimum" in out
    assert "direct" in out and "ind-auto" in out
