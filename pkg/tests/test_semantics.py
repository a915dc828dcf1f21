"""Exact and smooth robustness against brute-force oracles."""

import math

import numpy as np
import pytest

from stlwalk.formula import (And, Always, Eventually, Not, Or, Predicate,
                             Until, parse_formula)
from stlwalk.semantics import (HorizonError, Trace, robustness, satisfies,
                               smooth_robustness, smooth_robustness_value,
                               smoothing_error_bound, softmin, softmax)

from _oracles import (CHANNELS, brute_robustness, brute_satisfies,
                      random_formula, random_trace)


def tr(**channels):
    return Trace({k: np.asarray(v, float) for k, v in channels.items()}, 1.0)


def test_always_example():
    t = tr(x=[1.0, 0.5, 2.0])
    f = Always(0.0, 2.0, Predicate("x"))
    assert satisfies(f, t, 0)
    assert robustness(f, t, 0).value == pytest.approx(0.5)


def test_eventually_example():
    t = tr(x=[1.0, 0.5, 2.0])
    f = Eventually(0.0, 2.0, Predicate("x", 1.0, -1.5))
    assert satisfies(f, t, 0)
    assert robustness(f, t, 0).value == pytest.approx(0.5)


def test_negated_predicate():
    t = tr(x=[1.0])
    assert not satisfies(Not(Predicate("x")), t, 0)


def test_negation_identity_exact():
    rng = np.random.default_rng(0)
    for _ in range(50):
        f = random_formula(rng, 3, 1.0, 4)
        t = random_trace(rng, 30, 1.0)
        assert robustness(Not(f), t, 0).value == -robustness(f, t, 0).value


def test_de_morgan_exact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        f1 = random_formula(rng, 2, 1.0, 3)
        f2 = random_formula(rng, 2, 1.0, 3)
        t = random_trace(rng, 30, 1.0)
        lhs = robustness(Not(And((f1, f2))), t, 0).value
        rhs = robustness(Or((Not(f1), Not(f2))), t, 0).value
        assert lhs == rhs


def test_exact_semantics_match_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(300):
        f = random_formula(rng, 3, 1.0, 4)
        t = random_trace(rng, 25, 1.0)
        try:
            rho = robustness(f, t, 0).value
        except HorizonError:
            continue
        assert rho == pytest.approx(brute_robustness(f, t, 0), abs=1e-12)
        assert satisfies(f, t, 0) == brute_satisfies(f, t, 0)


def test_soundness_sign_agreement():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 400:
        f = random_formula(rng, 4, 1.0, 5)
        t = random_trace(rng, 40, 1.0)
        try:
            rho = robustness(f, t, 0).value
        except HorizonError:
            continue
        if abs(rho) <= 1e-9:
            continue
        assert (rho > 0) == satisfies(f, t, 0)
        checked += 1


def test_horizon_overflow_raises():
    t = tr(x=[1.0, 1.0, 1.0])
    with pytest.raises(HorizonError):
        robustness(Always(0.0, 5.0, Predicate("x")), t, 0)
    with pytest.raises(HorizonError):
        satisfies(Always(0.0, 1.0, Predicate("x")), t, 2)


def test_until_semantics_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(100):
        f = Until(float(rng.integers(0, 2)), float(rng.integers(2, 5)),
                  random_formula(rng, 1, 1.0, 2, allow_until=False),
                  random_formula(rng, 1, 1.0, 2, allow_until=False))
        t = random_trace(rng, 20, 1.0)
        assert robustness(f, t, 0).value == pytest.approx(
            brute_robustness(f, t, 0), abs=1e-12)
        assert satisfies(f, t, 0) == brute_satisfies(f, t, 0)


def test_monotonicity_positive_polarity():
    # raising a sample of a channel that appears only positively can
    # never decrease the robustness
    rng = np.random.default_rng(5)
    f = parse_formula("G[0,3](x >= 0.2) & F[0,5](x >= 0.8)", {"x"})
    for _ in range(50):
        t = random_trace(rng, 20, 1.0)
        rho0 = robustness(f, t, 0).value
        i = int(rng.integers(0, 20))
        t.channels["x"][i] += 0.5
        assert robustness(f, t, 0).value >= rho0 - 1e-12


# ---------------------------------------------------------------------------
# smooth semantics

def test_softmin_two_zeros():
    assert softmin(np.array([0.0, 0.0]), 1.0) == pytest.approx(-math.log(2.0))


def test_softmin_underestimates_softmax_overestimates():
    rng = np.random.default_rng(6)
    for _ in range(50):
        v = rng.uniform(-2, 2, size=int(rng.integers(2, 8)))
        assert softmin(v, 10.0) <= v.min() + 1e-12
        assert softmax(v, 10.0) >= v.max() - 1e-12


def test_large_beta_recovers_exact():
    t = tr(x=[1.0, 0.5, 2.0])
    f = Always(0.0, 2.0, Predicate("x"))
    val = smooth_robustness_value(f, t, 0, beta=1e6)
    assert abs(val - 0.5) <= 2.0 * math.log(3.0) * 1e-6


def test_smooth_bound_over_random_suite():
    rng = np.random.default_rng(7)
    for beta in (10.0, 30.0, 100.0):
        checked = 0
        while checked < 100:
            f = random_formula(rng, 3, 1.0, 4)
            t = random_trace(rng, 25, 1.0)
            try:
                rho = robustness(f, t, 0).value
                rho_s = smooth_robustness_value(f, t, 0, beta)
            except HorizonError:
                continue
            bound = smoothing_error_bound(f, t.dt, beta)
            assert abs(rho_s - rho) <= bound + 1e-12
            checked += 1


def test_softmin_gradient_concentrates_on_minimum():
    t = tr(x=[1.0, 0.5, 2.0])
    f = Always(0.0, 2.0, Predicate("x"))
    _, grads = smooth_robustness(f, t, 0, beta=10.0)
    assert grads["x"][1] > 0.98
    assert grads["x"].sum() == pytest.approx(1.0)


def test_smooth_gradient_matches_finite_differences():
    rng = np.random.default_rng(8)
    h = 1e-6
    checked = 0
    while checked < 60:
        f = random_formula(rng, 3, 1.0, 3)
        t = random_trace(rng, 15, 1.0)
        try:
            val, grads = smooth_robustness(f, t, 0, beta=12.0)
        except HorizonError:
            continue
        for ch in CHANNELS:
            g = grads[ch]
            for i in rng.choice(15, size=3, replace=False):
                tp = Trace({k: v.copy() for k, v in t.channels.items()}, 1.0)
                tm = Trace({k: v.copy() for k, v in t.channels.items()}, 1.0)
                tp.channels[ch][i] += h
                tm.channels[ch][i] -= h
                fd = (smooth_robustness_value(f, tp, 0, 12.0)
                      - smooth_robustness_value(f, tm, 0, 12.0)) / (2 * h)
                scale = max(abs(fd), abs(g[i]), 1.0)
                assert abs(g[i] - fd) / scale <= 1e-4
        checked += 1


def test_smooth_value_agrees_with_gradient_variant():
    rng = np.random.default_rng(9)
    for _ in range(30):
        f = random_formula(rng, 3, 1.0, 3)
        t = random_trace(rng, 15, 1.0)
        try:
            v1 = smooth_robustness_value(f, t, 0, 30.0)
        except HorizonError:
            continue
        v2, _ = smooth_robustness(f, t, 0, 30.0)
        assert v1 == pytest.approx(v2, abs=1e-10)


def test_beta_must_be_positive():
    t = tr(x=[1.0])
    with pytest.raises(ValueError):
        smooth_robustness_value(Predicate("x"), t, 0, beta=0.0)
