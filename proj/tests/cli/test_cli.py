"""Command-line behaviour: outputs and exit codes."""

import json
import os
import subprocess

import pytest

CLI = os.environ.get("LOYALTY_LAB_CLI", "loyalty_lab")

TIGHT = {
    "n_max": 1,
    "rho": [0.5, 0.5],
    "types": [
        {"link": "linear", "b1": 1.0, "b2": 0.0, "baseline": 0.0},
        {"link": "none", "b1": 0.0, "b2": 0.0, "baseline": 1.0},
    ],
}

LINEAR = {
    "n_max": 6,
    "rho": [1.0],
    "types": [{"link": "linear", "b1": 0.5, "b2": -0.08, "baseline": 0.2}],
}


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.update(env or {})
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=full_env)


@pytest.fixture
def tight(tmp_path):
    path = tmp_path / "tight.json"
    path.write_text(json.dumps(TIGHT))
    return str(path)


@pytest.fixture
def linear(tmp_path):
    path = tmp_path / "linear.json"
    path.write_text(json.dumps(LINEAR))
    return str(path)


def test_pof_tight_instance(tight):
    out = run("pof", "--instance", tight)
    assert out.returncode == 0, out.stderr
    doc = json.loads(out.stdout)
    assert abs(doc["pof"] - 1.5) < 1e-12
    assert doc["n_star"] == "inf"


def test_bounds():
    doc = json.loads(run("bounds", "--k", "2").stdout)
    assert doc["pof_upper_bound"] == pytest.approx(1.5, abs=1e-15)
    doc = json.loads(run("bounds", "--k", "3", "--n-max", "2", "--mu-min", "0.25", "--mu-max", "0.5").stdout)
    assert doc["tmix_upper_bound"] == pytest.approx(36.0)


def test_optimize(linear):
    doc = json.loads(run("optimize", "--instance", linear).stdout)
    assert len(doc["revenue_curve"]) == 6
    assert doc["revenue"] == pytest.approx(max(doc["revenue_curve"] + [doc["no_loyalty_revenue"]]))


def test_lbpair():
    doc = json.loads(run("lbpair", "--delta", "0.3").stdout)
    assert doc["first"]["gap"] == pytest.approx(0.063128, abs=1e-6)
    assert doc["first"]["gap"] == pytest.approx(doc["first"]["gap_closed_form"], abs=1e-12)
    assert doc["second"]["gap"] < 0


def test_simulate_then_fit(linear, tmp_path):
    out_dir = tmp_path / "sim"
    sim = run("simulate", "--instance", linear, "--n", "6", "--t", "20000", "--m", "4", "--seed", "3",
              "--out", str(out_dir))
    assert sim.returncode == 0, sim.stderr
    lines = (out_dir / "run.csv").read_text().splitlines()
    assert lines[0].startswith("# loyalty_lab run_record v1")
    samples = tmp_path / "samples.csv"
    with samples.open("w") as fh:
        fh.write("type,tau,x\n")
        for row in lines[2:]:
            _, _, _, tau, x, _ = row.split(",")
            fh.write(f"0,{tau},{x}\n")
    fit = json.loads(run("fit", "--instance", linear, "--samples", str(samples)).stdout)
    b1, b2 = fit["types"][0]["beta_hat"]
    assert abs(b1 - 0.5) < 0.05 and abs(b2 + 0.08) < 0.02


def test_simulate_is_idempotent(linear):
    a = run("simulate", "--instance", linear, "--n", "3", "--t", "500", "--seed", "9").stdout
    b = run("simulate", "--instance", linear, "--n", "3", "--t", "500", "--seed", "9").stdout
    assert a == b


def test_learn_fair_never_increases():
    out = run("learn", "--policy", "fair", "--t", "2000", "--m", "2", "--seed", "0")
    assert out.returncode == 0, out.stderr
    doc = json.loads(out.stdout)
    assert doc["n_increases"] == 0
    assert abs(doc["obs_regret"] - doc["regret"] - doc["mixing_loss"]) < 1e-9


def test_study_writes_outputs(tmp_path):
    out = run("study", "pof", "--reps", "50", "--seed", "42", "--out", str(tmp_path / "pof"))
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "pof" / "pof.csv").exists()
    summary = json.loads((tmp_path / "pof" / "summary.json").read_text())
    assert summary["pof"]["count"] == 50


def test_log_level_env(tight):
    out = run("pof", "--instance", tight, env={"LOYALTY_LAB_LOG": "debug"})
    assert out.returncode == 0
    assert "reading instance" in out.stderr


@pytest.mark.parametrize(
    "args,code",
    [
        ((), 1),
        (("frobnicate",), 1),
        (("pof", "--instance", "/nonexistent/instance.json"), 2),
        (("bounds", "--k", "0"), 1),
        (("study", "learning", "--t", "0"), 1),
        (("study", "table9"), 1),
        (("learn", "--policy", "greedy"), 1),
        (("lbpair", "--delta", "0.7"), 1),
    ],
)
def test_exit_codes(args, code):
    assert run(*args).returncode == code


def test_malformed_instance_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n_max": 2, "rho": [0.5, 0.6], "types": []}')
    assert run("pof", "--instance", str(bad)).returncode == 1


def test_unwritable_output_is_io_error(linear, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    out = run("simulate", "--instance", linear, "--n", "2", "--t", "10", "--out", str(blocker / "sub"))
    assert out.returncode == 2
