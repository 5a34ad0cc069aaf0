import csv
import json

import numpy as np
import pytest

from kvad import dynamics
from kvad.cli import main
from kvad.experiments import ConfigError, ExperimentConfig, sub_seed

SMALL = ["--n", "150", "--basis-size", "30"]


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_reference_oscillator(tmp_path):
    assert main(["simulate", "--system", "vanderpol", "--xi", "0", "--n", "2000", "--tau", "0.2",
                 "--step", "0.01", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "pairs.csv")
    assert rows[0] == ["x_0", "x_1", "y_0", "y_1"] and len(rows) == 2001
    assert json.loads((tmp_path / "pairs.json").read_text()) == {"tau": 0.2, "n": 2000, "d": 2}


def test_simulate_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "--system", "lorenz", "--duration", "2", "--n", "50", "--seed", "7",
                     "--out", str(tmp_path / name)]) == 0
    for f in ("trajectory.csv", "pairs.csv", "pairs.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    # the configs differ only in the output directory
    a, b = (json.loads((tmp_path / n / "config.json").read_text()) for n in ("a", "b"))
    assert {k: v for k, v in a.items() if k != "out"} == {k: v for k, v in b.items() if k != "out"}
    assert main(["simulate", "--system", "lorenz", "--duration", "2", "--n", "50", "--seed", "8",
                 "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "a" / "pairs.csv").read_bytes() != (tmp_path / "c" / "pairs.csv").read_bytes()


@pytest.mark.parametrize("flags", [["--system", "lorenz", "--duration", "0"], ["--tau", "0"],
                                   ["--step", "0"], ["--tau", "0.015"], ["--system", "nope"],
                                   ["--n", "abc"], ["--methods", "kvad,foo"]])
def test_simulate_config_errors(tmp_path, flags, capsys):
    assert main(["simulate", "--out", str(tmp_path)] + flags) == 1
    assert "error" in capsys.readouterr().err


def test_fit_writes_three_spectra(tmp_path):
    assert main(["fit", "--m", "3,5", "--out", str(tmp_path)] + SMALL) == 0
    spectra = [_rows(tmp_path / f"spectrum_{m}.csv") for m in ("kvad", "vamp", "edmd")]
    for rows in spectra:
        assert rows[0] == ["index", "value"]
        assert [int(r[0]) for r in rows[1:]] == list(range(1, len(rows)))
        assert all(float(r[1]) >= 0 for r in rows[1:])
    model = json.loads((tmp_path / "model_kvad.json").read_text())
    assert model["m"] == 5 and len(model["S"]) == 4
    assert json.loads((tmp_path / "model_vamp.json").read_text())["method"] == "vamp"


def test_fit_rank_error_exit(tmp_path, capsys):
    assert main(["fit", "--n", "50", "--basis-size", "5", "--m", "20", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "achievable maximum 6" in err


def test_reconstruct_grid_and_determinism(tmp_path):
    flags = SMALL + ["--L", "5", "--n-starts", "10", "--replicates", "7"]
    for name in ("a", "b"):
        assert main(["reconstruct", "--out", str(tmp_path / name)] + flags) == 0
    rows = _rows(tmp_path / "a" / "reconstruction.csv")
    assert rows[0] == ["method", "m", "xi", "mean_error", "std_error", "n_starts", "L"]
    assert len(rows) == 1 + 18
    assert {(r[0], r[1], r[2]) for r in rows[1:]} == {(mth, m, xi) for mth in ("kvad", "vamp", "edmd")
                                                      for m in ("3", "5", "10") for xi in ("0.0", "0.2")}
    assert all(r[5] == "10" and r[6] == "5" for r in rows[1:])
    assert len(_rows(tmp_path / "a" / "reconstruction_replicates.csv")) == 1 + 18 * 7
    for f in ("reconstruction.csv", "reconstruction_replicates.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_reconstruct_from_trajectory_file(tmp_path):
    traj = dynamics.euler_maruyama(dynamics.lorenz(0.0), [1, 1, 1], 20.0, 0.005, seed=0)[1000:]
    path = tmp_path / "traj.csv"
    dynamics.save_trajectory(path, traj, 0.005)
    out = tmp_path / "out"
    assert main(["reconstruct", "--system", "file", "--trajectory", str(path), "--tau", "0.1",
                 "--sigma", "10", "--m", "3", "--L", "4", "--n-starts", "5", "--replicates", "5",
                 "--out", str(out)] + SMALL) == 0
    assert len(_rows(out / "reconstruction.csv")) == 4
    assert main(["fit", "--system", "file", "--trajectory", str(tmp_path / "missing.csv"),
                 "--out", str(out)]) == 1


def test_fig1_command(tmp_path):
    assert main(["fig1", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fig1.csv")
    assert rows[0] == ["c", "vamp_sq", "kernel_sq"] and len(rows) == 122
    zero = [r for r in rows[1:] if float(r[0]) == 0.0]
    assert len(zero) == 1 and float(zero[0][1]) == 0.0 and float(zero[0][2]) == 0.0
    assert main(["fig1", "--c-min", "-6", "--out", str(tmp_path / "bad")]) == 1
    assert main(["fig1", "--c-step", "0", "--out", str(tmp_path / "bad")]) == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = {"system": "vanderpol", "n": 40, "basis_size": 10, "m": [2], "methods": ["kvad"], "seed": 3}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    assert main(["fit", "--config", str(path), "--n", "60", "--out", str(out)]) == 0
    written = json.loads((out / "config.json").read_text())
    assert written["n"] == 60 and written["basis_size"] == 10 and written["seed"] == 3
    assert sorted(p.name for p in out.iterdir()) == ["config.json", "model_kvad.json", "spectrum_kvad.csv"]
    path.write_text(json.dumps({"bogus": 1}))
    assert main(["fit", "--config", str(path), "--out", str(out)]) == 1
    assert main(["fit", "--config", str(tmp_path / "nope.json"), "--out", str(out)]) == 1


def test_config_round_trip():
    cfg = ExperimentConfig(system="lorenz", xi=0.5, m=[3, 10], seed=11)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert cfg.tau == 0.1 and cfg.step == 0.005 and cfg.sigma == 10.0 and cfg.L == 8
    assert ExperimentConfig().sigma == 1.5
    with pytest.raises(ConfigError):
        ExperimentConfig(m=[0])


def test_sub_seeds_are_stable_and_distinct():
    assert sub_seed(0, "basis") == sub_seed(0, "basis")
    assert len({sub_seed(0, "basis"), sub_seed(0, "data/xi=0.0"), sub_seed(1, "basis")}) == 3
    assert 0 <= sub_seed(123, "x") < 2**63
    np.random.default_rng(sub_seed(5, "eval"))
