import json
import math

import numpy as onp
import pytest
from numpy.testing import assert_allclose

from delaykit.cli import main
from delaykit.kernels import elementary_kernel, kernel_to_dict, write_json

E = math.e


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


@pytest.fixture
def theta1_file(tmp_path):
    path = str(tmp_path / "theta1.json")
    write_json(path, kernel_to_dict(elementary_kernel(1.0, 1.0)))
    return path


def test_approx_inline(capsys):
    data = run_json(capsys, ["approx", "--lambda", "0", "--theta", "1", "--order", "20"])
    assert data["order"] == 20
    assert data["measured_eps"] < 0.05
    assert data["support"] == [0.0, 1.0]


def test_approx_from_file(capsys, theta1_file):
    from_file = run_json(capsys, ["approx", "--kernel", theta1_file, "--order", "8"])
    inline = run_json(capsys, ["approx", "--lambda", "1", "--theta", "1", "--order", "8"])
    assert_allclose(from_file["measured_eps"], inline["measured_eps"], rtol=1e-6)


def test_approx_eps_target(capsys):
    data = run_json(capsys, ["approx", "--lambda", "1", "--theta", "1", "--eps", "0.1"])
    assert data["measured_eps"] <= 0.1


def test_approx_sweep(tmp_path, capsys):
    csv = str(tmp_path / "sweep.csv")
    assert main(["approx", "--lambda", "1", "--theta", "1", "--sweep", "1:12", "--sweep-csv", csv]) == 0
    capsys.readouterr()
    lines = open(csv).read().splitlines()
    assert lines[0] == "n,l1_error"
    assert len(lines) == 13
    data = onp.loadtxt(csv, delimiter=",", skiprows=1)
    assert data[:, 0].tolist() == list(range(1, 13))
    assert data[-1, 1] < data[0, 1]


@pytest.mark.slow
def test_approx_sweep_to_forty(tmp_path, capsys):
    csv = str(tmp_path / "sweep.csv")
    assert main(["approx", "--lambda", "1", "--theta", "1", "--alpha", "1", "--sweep", "1:40",
                 "--sweep-csv", csv]) == 0
    data = onp.loadtxt(csv, delimiter=",", skiprows=1)
    assert data.shape == (40, 2)
    assert data[-1, 1] < data[0, 1]


def test_approx_exit_codes(monkeypatch):
    assert main(["approx", "--lambda", "1"]) == 2
    assert main(["approx", "--lambda", "1", "--theta", "0"]) == 2
    assert main(["approx", "--lambda", "one", "--theta", "1"]) == 2
    assert main(["approx", "--lambda", "1", "--theta", "1", "--eps", "1e-9", "--n-max", "4"]) == 3
    assert main(["approx", "--lambda", "1", "--theta", "1", "--sweep", "5:2"]) == 2
    monkeypatch.setenv("DELAYKIT_THREADS", "zero")
    assert main(["approx", "--lambda", "1", "--theta", "1", "--sweep", "1:3"]) == 2


def test_outputs_are_deterministic(tmp_path):
    def run(tag):
        app, bode, trace = (str(tmp_path / (tag + name)) for name in ("app.json", "b", "trace.csv"))
        assert main(["approx", "--lambda", "1", "--theta", "1", "--order", "8", "--out", app]) == 0
        assert main(["bode", "--lambda", "1", "--theta", "1", "--kernel", app, "--out", bode]) == 0
        assert main(["simulate", "--lambda=-1", "--theta", "1", "--horizon", "2", "--out", trace]) == 0
        paths = (app, bode + "_1.csv", bode + "_2.csv", bode + "_report.json", trace)
        return [open(path, "rb").read() for path in paths]

    assert run("first_") == run("second_")


def test_numerical_failures_exit_5(monkeypatch):
    def singular(*args, **kwargs):
        raise onp.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr("delaykit.cli.lowpass_lumped", singular)
    assert main(["approx", "--lambda", "1", "--theta", "1", "--lowpass-a", "20"]) == 5


def test_bad_log_level(monkeypatch):
    monkeypatch.setenv("DELAYKIT_LOG_LEVEL", "chatty")
    assert main(["norms", "--lambda", "1", "--theta", "1"]) == 2


def test_bode_single(tmp_path):
    prefix = str(tmp_path / "b")
    assert main(["bode", "--lambda", "1", "--theta", "1", "--out", prefix]) == 0
    data = onp.loadtxt(prefix + "_1.csv", delimiter=",", skiprows=1)
    assert data.shape == (251, 5)
    assert_allclose(data[0, 3], 20 * math.log10(E - 1), atol=1e-3)
    assert not (tmp_path / "b_report.json").exists()


def test_bode_identical(tmp_path, theta1_file):
    prefix = str(tmp_path / "b")
    assert main(["bode", "--lambda", "1", "--theta", "1", "--kernel", theta1_file, "--out", prefix]) == 0
    report = json.load(open(prefix + "_report.json"))
    assert report["hinf"] == 0.0
    assert report["phase_defect"] == 0.0
    assert report["l1"] < 1e-10


def test_bode_against_approximant(tmp_path):
    app = str(tmp_path / "app.json")
    assert main(["approx", "--lambda", "1", "--theta", "1", "--order", "5", "--out", app]) == 0
    prefix = str(tmp_path / "b")
    assert main(["bode", "--lambda", "1", "--theta", "1", "--kernel", app, "--out", prefix]) == 0
    report = json.load(open(prefix + "_report.json"))
    assert report["hinf"] <= report["l1"] + 1e-8
    assert_allclose(report["l1"], json.load(open(app))["measured_eps"], rtol=1e-6)
    assert report["grid"]["pts"] == 251


def test_bode_against_lowpass(tmp_path):
    lumped = str(tmp_path / "lp.json")
    assert main(["approx", "--lambda", "1", "--theta", "1", "--lowpass-a", "20", "--taps", "10",
                 "--out", lumped]) == 0
    prefix = str(tmp_path / "b")
    assert main(["bode", "--lambda", "1", "--theta", "1", "--kernel", lumped, "--out", prefix]) == 0
    report = json.load(open(prefix + "_report.json"))
    assert report["l1"] is None
    assert report["hinf"] > 0


def test_bode_exit_codes(tmp_path, theta1_file):
    prefix = str(tmp_path / "b")
    assert main(["bode", "--lambda", "1", "--theta", "1", "--per-decade", "10", "--out", prefix]) == 2
    assert main(["bode", "--out", prefix]) == 2
    assert main(["bode", "--lambda", "1", "--theta", "1", "--kernel", theta1_file, "--kernel", theta1_file,
                 "--out", prefix]) == 2
    assert main(["bode", "--kernel", str(tmp_path / "missing.json"), "--out", prefix]) == 2


def test_simulate_step(tmp_path):
    out = str(tmp_path / "trace.csv")
    assert main(["simulate", "--lambda=-1", "--theta", "1", "--horizon", "3", "--out", out]) == 0
    assert open(out).readline().strip() == "t,u,y"
    data = onp.loadtxt(out, delimiter=",", skiprows=1)
    assert_allclose(data[-1, 0], 3.0)
    assert_allclose(data[-1, 2], 1 - 1 / E, atol=1e-3)


def test_simulate_realized_with_oracle(tmp_path):
    out = str(tmp_path / "trace.csv")
    assert main(["simulate", "--lambda=-1", "--theta", "1", "--horizon", "3", "--input", "sine",
                 "--omega", "2", "--realize", "--oracle", "--out", out]) == 0
    assert open(out).readline().strip() == "t,u,y,y_oracle"
    data = onp.loadtxt(out, delimiter=",", skiprows=1)
    assert onp.max(onp.abs(data[:, 2] - data[:, 3])) <= 1e-4


def test_simulate_csv_input(tmp_path):
    samples = tmp_path / "u.csv"
    samples.write_text("t,u\n0,1\n10,1\n")
    out = str(tmp_path / "trace.csv")
    assert main(["simulate", "--lambda", "0", "--theta", "1", "--horizon", "2", "--input",
                 "csv:" + str(samples), "--out", out]) == 0
    data = onp.loadtxt(out, delimiter=",", skiprows=1)
    assert_allclose(data[-1, 2], 1.0, atol=1e-8)


def test_simulate_exit_codes(tmp_path):
    out = str(tmp_path / "trace.csv")
    assert main(["simulate", "--lambda", "1", "--theta", "1", "--realize", "--out", out]) == 2
    assert main(["simulate", "--lambda", "1", "--theta", "1", "--input", "ramp", "--out", out]) == 2
    assert main(["simulate", "--lambda", "1", "--theta", "1", "--dt", "0.5", "--out", out]) == 2


def test_demo_exit_codes(tmp_path):
    prefix = str(tmp_path / "demo")
    assert main(["demo-stabilize", "--out", prefix]) == 2
    assert main(["demo-stabilize", "--order", "5", "--dt", "0.02", "--out", prefix]) == 2
    assert main(["demo-stabilize", "--order", "0", "--out", prefix]) == 4


@pytest.mark.slow
def test_demo_fixed_order(tmp_path):
    prefix = str(tmp_path / "demo")
    assert main(["demo-stabilize", "--order", "5", "--out", prefix]) == 0
    summary = json.load(open(prefix + "_summary.json"))
    assert summary["order"] == 5
    assert_allclose(summary["dc_ideal"], 2 * E - 1, rtol=1e-3)
    assert open(prefix + "_app.csv").readline().strip() == "t,u2,y1,y2"


@pytest.mark.slow
def test_demo_eps_target(tmp_path):
    prefix = str(tmp_path / "demo")
    assert main(["demo-stabilize", "--eps", "0.02", "--out", prefix]) == 0
    summary = json.load(open(prefix + "_summary.json"))
    assert summary["margin"] > 0
    assert summary["eps_measured"] <= 0.02


def test_norms(tmp_path, capsys, theta1_file):
    atomic = str(tmp_path / "atomic.json")
    write_json(atomic, {"impulses": [[0.5, 1.0, 0.0]]})
    data = run_json(capsys, ["norms", "--lambda", "1", "--theta", "1", "--atomic", atomic])
    assert_allclose(data["l1"], E - 1, atol=1e-10)
    assert_allclose(data["atomic_distance"], E, atol=1e-10)
    data = run_json(capsys, ["norms", "--kernel", theta1_file, "--other", theta1_file])
    assert data["a_distance"] < 1e-10
    assert main(["norms"]) == 2
