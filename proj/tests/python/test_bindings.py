"""Smoke tests for the Python extension module."""

import json
import math

import pytest

import loyalty_lab as ll


def test_tight_instance():
    inst = ll.tight_instance()
    assert ll.price_of_fairness(inst) == pytest.approx(1.5, abs=1e-12)
    n, value = ll.optimal_threshold(inst)
    assert math.isinf(n) and value == pytest.approx(0.5)
    per_type, revenue = ll.optimal_personalized(inst)
    assert per_type[0][0] == 1 and revenue == pytest.approx(0.75)


def test_instance_construction_and_json():
    t = ll.TypeSpec(ll.LinkKind.ExponentialPP, 1.5, -1.5, 0.25)
    inst = ll.Instance([t], [1.0], 20)
    back = ll.instance_from_json(ll.instance_to_json(inst))
    assert back.types[0].b1 == 1.5 and back.n_max == 20
    assert ll.purchase_curve(t, 0)[0] == 1.0
    with pytest.raises(ValueError):
        ll.Instance([t], [0.4], 20)


def test_steady_state():
    assert ll.stationary_distribution([0.8, 0.4]) == pytest.approx([1 / 3, 2 / 3])
    assert ll.long_run_revenue([1.0, 1.0]) == 0.5
    assert ll.pof_upper_bound(3) == pytest.approx(3 - 2 / math.sqrt(2))
    assert ll.tmix_upper_bound(2, 0.25, 0.5) == pytest.approx(36.0)
    inst = ll.regret_instance()
    assert ll.optimal_threshold(inst)[0] == 16
    assert ll.mixture_revenue(inst, math.inf) == pytest.approx(0.375)


def test_generators_are_seeded():
    a = ll.instance_to_json(ll.gen_two_type(42))
    b = ll.instance_to_json(ll.gen_two_type(42))
    assert a == b
    assert ll.price_of_fairness(ll.gen_two_type(42)) <= 1.5
    assert len(ll.gen_k_tiers(1, 4).types) == 4
    first, second = ll.gen_lower_bound_pair(0.3)
    gap = ll.mixture_revenue(first, 1) - ll.mixture_revenue(first, 2)
    assert gap == pytest.approx(ll.rev_gap_closed_form(0.3, "first"), abs=1e-12)


def test_simulate_and_fit():
    t = ll.TypeSpec(ll.LinkKind.LinearPP, 0.5, -0.08, 0.2)
    inst = ll.Instance([t], [1.0], 6)
    run = ll.simulate_fixed(inst, 6, 4, 20000, seed=3)
    assert len(run["taus"]) == 80000
    assert run == ll.simulate_fixed(inst, 6, 4, 20000, seed=3)
    b1, b2 = ll.fit_behavioural(run["taus"], run["xs"], ll.LinkKind.LinearPP, 0.2)
    assert abs(b1 - 0.5) < 0.05 and abs(b2 + 0.08) < 0.02
    with pytest.raises(ValueError):
        ll.simulate_fixed(inst, 0, 1, 10)


def test_learn_and_study():
    row = ll.learn(ll.regret_instance(), '{"policy": "fair"}', 2, 1000, seed=1)
    assert row["n_increases"] == 0
    assert abs(row["obs_regret"] - row["regret"] - row["mixing_loss"]) < 1e-9
    assert all(a >= b for a, b in zip(row["thresholds"], row["thresholds"][1:]))
    with pytest.raises(ValueError):
        ll.learn(ll.regret_instance(), '{"policy": "greedy"}', 2, 10)
    tables, summary = ll.run_study("pof", 100, seed=42)
    assert "pof" in tables
    assert json.loads(summary)["pof"]["count"] == 100
