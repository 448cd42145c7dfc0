import json
import math

import numpy as np
import pytest

import bohlkit


def test_constant_system_transition():
    A = np.array([[2.0, 1.0], [0.0, 0.5]])
    s = bohlkit.constant(A, 16)
    assert s.dim == 2 and s.horizon == 16
    np.testing.assert_allclose(bohlkit.transition(s, 5, 0), np.linalg.matrix_power(A, 5), rtol=1e-13)
    np.testing.assert_allclose(bohlkit.transition(s, 0, 3), np.linalg.inv(np.linalg.matrix_power(A, 3)), rtol=1e-12)


def test_bohl_exponents_of_diagonal():
    s = bohlkit.constant(np.diag([math.exp(-1.0), math.exp(1.0)]), 256)
    lo, up = bohlkit.bohl_vector(s, np.array([1.0, 0.0]))
    assert lo == pytest.approx(-1.0, abs=1e-12) and up == pytest.approx(-1.0, abs=1e-12)
    lo, up = bohlkit.bohl_space(s)
    assert up == pytest.approx(1.0, abs=1e-9)


def test_dichotomy_round():
    s = bohlkit.constant(np.diag([math.exp(-1.0), math.exp(1.0)]), 512)
    sp = bohlkit.search_splitting(s, seed=3)
    assert sp is not None
    ed = bohlkit.check_ed(s, [np.array([1.0, 0.0])], [np.array([0.0, 1.0])])
    assert ed["holds"]
    assert bohlkit.parse_double(ed["alpha"]) == pytest.approx(1.0, abs=1e-3)


def test_spectrum_points():
    s = bohlkit.constant(np.diag([math.exp(-0.5), math.exp(0.5)]), 256)
    sample = bohlkit.sample_spectrum(s, -1.0, 1.0, 0.25, seed=1)
    assert sample["ed"] == ["out", "out", "in", "out", "out", "out", "in", "out", "out"]


def test_errors_carry_name_and_code():
    with pytest.raises(bohlkit.BohlkitError) as info:
        bohlkit.transition(bohlkit.constant(np.eye(2), 4), 9, 0)
    msg, name, index, code = info.value.args
    assert name == "HorizonExceeded" and index == 9 and code == 2


def test_scenario_run(tmp_path):
    doc = {"schema": "bohlkit/1", "task": "simulate", "system": {"kind": "identity", "dim": 2, "horizon": 5}}
    r = bohlkit.run_scenario(doc, str(tmp_path))
    assert r["exit_code"] == 0
    lines = (tmp_path / "simulate.csv").read_text().splitlines()
    assert len(lines) == 7
    bad = bohlkit.run_scenario(json.dumps({"schema": "nope"}), str(tmp_path))
    assert bad["exit_code"] == 2


def test_system_json_round_trip():
    s = bohlkit.random_lyapunov(3, 20, seed=4)
    t = bohlkit.system_from_json(s.to_json())
    for n in range(21):
        np.testing.assert_array_equal(s.at(n), t.at(n))


def test_acceptance_criterion_one():
    r = bohlkit.run_criterion(1)
    assert r["passed"], r["detail"]
