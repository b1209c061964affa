import json
import os

import pytest

import fixmann

DATA = os.environ.get("FIXMANN_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def test_solve_fixture_mdps():
    r = fixmann.solve_mdp("fig1")
    assert r["v"] == pytest.approx([5, 5, 3, 0], abs=1e-9)
    r = fixmann.solve_mdp(os.path.join(DATA, "fig2.json"))
    assert r["v"] == pytest.approx([0, 2, 2, 0], abs=1e-9)
    assert fixmann.mecs("fig2") == [[1, 2]]


def test_dampened_run_escapes_the_stuck_fixpoint():
    kleene = fixmann.mann_mdp("fig2", "kleene", x0=[0, 3, 3, 0], max_steps=100, tol=1e-300)
    assert kleene["final"] == [0, 3, 3, 0]
    damped = fixmann.mann_mdp("fig2", x0=[0, 3, 3, 0], max_steps=200000, tol=1e-300)
    assert damped["final"] == pytest.approx([0, 2, 2, 0], abs=1e-3)


def test_scheme_classification():
    c = fixmann.classify_scheme({"alpha": {"family": "zero"}, "beta": {"family": "harmonic", "scale": 1, "offset": 2}})
    assert c["exact"]
    assert not fixmann.classify_scheme("kleene")["exact"]


def test_iterate_map_expression():
    with open(os.path.join(DATA, "piecewise.json")) as f:
        fn = json.load(f)
    t = fixmann.iterate(fn, "kleene", [0.0], max_steps=1000, tol=1e-12)
    assert t["final"][0] == pytest.approx(1.0, abs=1e-9)


def test_ssg_and_sampling():
    assert fixmann.ssg_brute_force("example") == pytest.approx([0, 1, 0.5, 0, 1])
    assert fixmann.bernstein_sample_size(0.1, 0.05, 1) == 185
    t = fixmann.algorithm1("fig1", {"seed": 3, "steps": 500})
    assert len(t["pulls"]) == len(t["points"])


def test_errors_surface_as_value_errors():
    with pytest.raises(ValueError):
        fixmann.solve_mdp({"states": ["s"], "actions": ["a"], "transitions": [{"from": "s", "action": "a", "to": "s", "p": 0.5}]})
    with pytest.raises(ValueError):
        fixmann.classify_scheme({"beta": {"family": "bogus"}})


def test_random_mdp_round_trip():
    m = fixmann.random_mdp(10, "mdp_with_mecs", 2, 7, True)
    assert len(fixmann.mecs(m)) == 2
    assert max(fixmann.solve_mdp(m)["v"]) == pytest.approx(1.0, abs=1e-6)
