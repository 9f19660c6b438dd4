"""Command-line front end: exit codes, files written, determinism."""

import json

import pytest

from chronoforest.cli import main
from chronoforest.measures import sticks_from_json, sticks_to_json

GOLDEN_FOREST_ROWS = [
    "index,parent,birth_time,depth,v,tree_id",
    "0,-1,0,0,2,0",
    "1,0,1.5,1,1.5,0",
    "2,1,2.7,2,1.5,0",
    "3,2,3.6,3,1,0",
    "4,1,2,2,2,0",
    "5,0,0.5,1,4,0",
    "6,5,4,2,2,0",
    "7,5,3,2,1,0",
    "8,5,1.5,2,1,0",
    "9,8,2.5,3,1,0",
]


@pytest.fixture
def fixture_json(tmp_path, reference_sticks):
    path = tmp_path / "sticks.json"
    path.write_text(sticks_to_json(reference_sticks))
    return path


def test_build_from_fixture(tmp_path, fixture_json, capsys):
    forest_out = tmp_path / "forest.csv"
    contour_out = tmp_path / "contour.csv"
    rc = main(
        [
            "build",
            "--input", str(fixture_json),
            "--forest-out", str(forest_out),
            "--contour-out", str(contour_out),
            "--quiet",
        ]
    )
    assert rc == 0
    assert forest_out.read_text().strip().splitlines() == GOLDEN_FOREST_ROWS
    contour_lines = contour_out.read_text().strip().splitlines()
    assert contour_lines[0] == "time,value"
    assert contour_lines[-1] == "34,0"


def test_build_to_stdout(fixture_json, capsys):
    assert main(["build", "--input", str(fixture_json), "--quiet"]) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines() == GOLDEN_FOREST_ROWS


def test_build_sampled_law(tmp_path):
    forest_out = tmp_path / "forest.csv"
    sticks_out = tmp_path / "sticks.json"
    rc = main(
        [
            "build",
            "--law", "gw(mean=1.0)",
            "--n", "40",
            "--seed", "7",
            "--forest-out", str(forest_out),
            "--sticks-out", str(sticks_out),
            "--quiet",
        ]
    )
    assert rc == 0
    assert len(forest_out.read_text().strip().splitlines()) == 41
    sticks = sticks_from_json(sticks_out.read_text())
    assert len(sticks) == 40
    assert all(s.v == 1.0 for s in sticks)


def test_build_empty_input(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert main(["build", "--input", str(empty), "--quiet"]) == 0
    out = capsys.readouterr().out
    assert out.strip() == "index,parent,birth_time,depth,v,tree_id"


def test_build_input_and_law_conflict(fixture_json, capsys):
    rc = main(["build", "--input", str(fixture_json), "--law", "gw(mean=1.0)"])
    assert rc == 2


def test_build_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["build", "--input", str(bad)]) == 2
    missing = tmp_path / "missing.json"
    assert main(["build", "--input", str(missing)]) == 2


def test_verify_fixture(fixture_json, capsys):
    rc = main(["verify", "--input", str(fixture_json)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] is True
    assert report["pairs_checked"] > 0


def test_verify_random(capsys):
    rc = main(["verify", "--seed", "3", "--forests", "5", "--max-sticks", "40", "--pairs", "10"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] is True
    assert report["forests"] == 5


def test_renewal_diagnostics(capsys):
    rc = main(["renewal", "--law", "gw(mean=1.0)", "--seed", "11", "--draws", "2000"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["law"]["name"] == "gw"
    # Unit ages: the sampled atom age is exactly 1 and the overshoot 0.
    assert report["uniform_atom_age"]["mc_mean"] == 1.0
    assert report["stationary_overshoot_mean"] == 0.0
    assert report["ladder"]["acceptance_rate"] == pytest.approx(1.0)


def test_couple_exit_codes(capsys):
    rc = main(
        [
            "couple",
            "--law", "gw(mean=1.0)",
            "--eps", "0",
            "--t", "8",
            "--m", "2",
            "--replicas", "50",
            "--seed", "5",
        ]
    )
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["violated"] == 0
    assert report["replicas"] == 50


def test_scale_deterministic(tmp_path):
    cfg = tmp_path / "config.txt"
    cfg.write_text(
        "law = gw(mean=1.0)\np = 50,100\ntimes = 1\nreplicates = 3\nseed = 13\n"
    )
    outs = []
    for run, workers in enumerate(("1", "2", "1")):
        out = tmp_path / f"rows{run}.csv"
        summary = tmp_path / f"summary{run}.json"
        rc = main(
            [
                "scale",
                "--config", str(cfg),
                "--workers", workers,
                "--out", str(out),
                "--summary-out", str(summary),
            ]
        )
        assert rc == 0
        outs.append(out.read_bytes())
        json.loads(summary.read_text())
    assert outs[0] == outs[1] == outs[2]


def test_scale_inline_config(tmp_path, capsys):
    rc = main(
        [
            "scale",
            "--law", "gw(mean=1.0)",
            "--p", "40",
            "--times", "0.5",
            "--replicates", "2",
            "--seed", "3",
        ]
    )
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("p,t,replicate")
    assert len(lines) == 3


def test_unknown_law_is_usage_error(capsys):
    assert main(["build", "--law", "martians(mean=1)", "--n", "5", "--seed", "1"]) == 2
    assert main(["scale", "--law", "gw(mean=1.0)", "--p", "-5", "--seed", "1"]) == 2
