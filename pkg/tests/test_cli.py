from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from bayesmachine import experiments, io
from bayesmachine.cli import ExperimentConfig, load_config, main, module_seed
from bayesmachine.machine import MachineImage


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    io.write_likelihood_csv(experiments.random_table(4, 4, 8, 1), "t.csv")
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_program_test_chip(workdir, capsys):
    code, out, _ = run(capsys, "program", "--table", "t.csv", "--geometry", "4x4x8", "--out", "img.txt")
    assert code == 0 and "row 3:" in out
    image = io.read_image("img.txt")
    assert sum(len(r) for r in image.arrays) == 16
    io.write_image(image, "again.txt")
    assert (workdir / "again.txt").read_bytes() == (workdir / "img.txt").read_bytes()


def test_program_geometry_mismatch(workdir, capsys):
    code, _, err = run(capsys, "program", "--table", "t.csv", "--out", "img.txt")
    assert code == 6 and err.startswith("error[6]")


def test_program_malformed_csv(workdir, capsys):
    lines = (workdir / "t.csv").read_text().splitlines()
    lines[5] = "0,0,4,abc"
    (workdir / "bad.csv").write_text("\n".join(lines) + "\n")
    code, _, err = run(capsys, "program", "--table", "bad.csv", "--geometry", "4x4x8", "--out", "x")
    assert code == 6 and "line 6" in err


def test_infer_all_ones_image(workdir, capsys):
    io.write_image(MachineImage.from_bytes(np.full((4, 4, 8), 255)), "ones.txt")
    code, out, _ = run(capsys, "infer", "--image", "ones.txt", "--obs", "0,1,2,3", "--seeds", "1,2,3,4")
    d = json.loads(out)
    assert code == 0 and d["probabilities"] == [1.0] * 4 and d["counts"] == [255] * 4
    assert d["config"]["cycles"] == 255


def test_infer_out_of_range_observation(workdir, capsys):
    run(capsys, "program", "--table", "t.csv", "--geometry", "4x4x8", "--out", "img.txt")
    code, _, err = run(capsys, "infer", "--image", "img.txt", "--obs", "0,0,0,8", "--seeds", "1,2,3,4")
    assert code == 3 and "BoundsError" in err


def test_infer_optimized_seeds_match_oracle(workdir, capsys):
    run(capsys, "program", "--table", "t.csv", "--geometry", "4x4x8", "--out", "img.txt")
    code, out, _ = run(capsys, "--set", "restarts=2", "infer", "--image", "img.txt", "--obs", "1,2,3,4",
                       "--trace-csv", "trace.csv")
    d = json.loads(out)
    assert code == 0 and d["seed_info"]["source"] == "optimized"
    assert d["deviation"] <= 0.02
    assert (workdir / "trace.csv").exists()


def test_sweep_random_seeds(workdir, capsys):
    run(capsys, "program", "--table", "t.csv", "--geometry", "4x4x8", "--out", "img.txt")
    code, out, _ = run(capsys, "sweep", "--image", "img.txt", "--seeds", "random", "--trials", "50",
                       "--out", "scatter.csv")
    d = json.loads(out)
    assert code == 0 and d["trials"] == 50
    assert d["max_abs_deviation"]["median"] > 0.02
    with open(workdir / "scatter.csv") as fh:
        assert fh.readline().startswith("# config:")
        rows = list(csv.DictReader(fh))
    assert len(rows) == 50 * 256 * 4


def test_seeds_command(workdir, capsys):
    code, out, _ = run(capsys, "--set", "restarts=1", "seeds", "--baseline", "20")
    d = json.loads(out)
    assert code == 0 and len(d["seeds"]) == 4
    assert d["score"] <= d["baseline"]["median"]


def test_energy_command(workdir, capsys):
    code, out, _ = run(capsys, "energy", "--cycles", "255")
    d = json.loads(out)
    assert code == 0 and d["report"]["inference"] == pytest.approx(2.2)
    code, _, _ = run(capsys, "energy", "--cycles", "100", "--out", "e.json")
    assert json.loads((workdir / "e.json").read_text())["report"]["cycles_charged"] == 100


def test_faults_command(workdir, capsys):
    code, out, _ = run(capsys, "faults", "--obs", "1,2,3,4", "--seeds", "5,6,7,8", "--k", "2", "--trials", "30")
    d = json.loads(out)
    assert code == 0
    if d["guaranteed_stable"]:
        assert d["decisions_changed"] == 0


def test_config_file(workdir, capsys):
    (workdir / "c.cfg").write_text("# test\ncycles = 100\nenergy.e_mem_read = 0.6\nfault.enabled = 0\n")
    cfg = load_config(workdir / "c.cfg")
    assert cfg.cycles == 100 and cfg.energy_params().e_mem_read == 0.6
    code, out, _ = run(capsys, "--config", "c.cfg", "energy")
    assert json.loads(out)["report"]["memory_read"] == pytest.approx(0.6)


@pytest.mark.parametrize(
    "text,code",
    [("cycles = x\n", 2), ("nonsense = 1\n", 2), ("cycles 100\n", 2), ("n_columns = 0\n", 2)],
)
def test_bad_config(workdir, capsys, text, code):
    (workdir / "c.cfg").write_text(text)
    rc, _, err = run(capsys, "--config", "c.cfg", "energy")
    assert rc == code and err.startswith(f"error[{code}]")


def test_missing_file(workdir, capsys):
    code, _, err = run(capsys, "infer", "--image", "nope.txt", "--obs", "0")
    assert code == 6


def test_outputs_are_reproducible(workdir, capsys):
    for name in ("a.csv", "b.csv"):
        run(capsys, "sweep", "--trials", "5", "--out", name, "--summary", name + ".json")
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()


def test_module_seeds_are_distinct_and_stable():
    assert module_seed(0, "a") == module_seed(0, "a")
    assert module_seed(0, "a") != module_seed(0, "b") != module_seed(1, "b")
    assert ExperimentConfig().as_dict()["n_columns"] == 6
