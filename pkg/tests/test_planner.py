"""STL-MPC solver: seeds, feasibility certificates, warm starting."""

import numpy as np
import pytest

from stlwalk.config import Config
from stlwalk.locomotion_spec import nominal_gait
from stlwalk.planner import (HORIZON_STEPS, MpcController, PlannerSetup,
                             build_nlp, decision_to_plan, default_seeds,
                             nominal_decision, solve, terminal_state)
from stlwalk.reduced_model import ReducedState, rollout
from stlwalk.locomotion_spec import riemannian_channels
from stlwalk.semantics import robustness, satisfies

CFG = Config()
P = CFG.model
NG = nominal_gait(CFG.gait, P)


@pytest.fixture(scope="module")
def setup(small_net):
    return PlannerSetup(params=P, gait=CFG.gait, bound=CFG.treadmill,
                        region=CFG.region(), net=small_net, nominal=NG,
                        solver=CFG.mpc)


def keyframe():
    return NG.keyframe_state.copy()


def test_nominal_decision_layout():
    z = nominal_decision(keyframe(), NG, CFG.gait)
    assert z.shape == (9,)
    # footholds advance by one step length each and alternate sides
    assert z[0] == pytest.approx(CFG.gait.step_length)
    assert z[2] == pytest.approx(2 * CFG.gait.step_length)
    assert z[1] == pytest.approx(NG.keyframe_state.stance_pos[1]
                                 - CFG.gait.step_width)
    assert z[3] == pytest.approx(z[1] + CFG.gait.step_width)
    assert np.allclose(z[6:9], CFG.gait.nominal_T)


def test_nominal_decision_satisfies_spec(setup):
    problem = build_nlp(keyframe(), setup)
    plan = decision_to_plan(problem.nominal_decision, CFG.mpc.swing_apex)
    trace = rollout(problem.state, plan, P,
                    channel_fn=lambda t: riemannian_channels(t, P))
    spec = problem.spec_for(trace.dt * (trace.n - 1))
    assert satisfies(spec, trace, 0)
    assert robustness(spec, trace, 0).value > 0.0


def test_seed_list_contains_nominal_and_deadbeat(setup):
    problem = build_nlp(keyframe(), setup)
    labels = [label for label, _ in default_seeds(problem)]
    assert "nominal" in labels and "deadbeat" in labels
    for _, z in default_seeds(problem):
        assert z.shape == (9,) and np.all(np.isfinite(z))


def test_solve_nominal_returns_nominal_plan(setup):
    problem = build_nlp(keyframe(), setup)
    result = solve(problem)
    assert result.feasible and result.stable and result.satisfied
    assert result.robustness > 0.0
    # on the periodic orbit the nominal seed is already optimal enough to
    # be accepted outright, so the answer is the nominal decision itself
    assert np.abs(result.decision - problem.nominal_decision).max() < 1e-2
    assert result.control_cost < 1e-4
    assert result.stats.n_evals <= len(default_seeds(problem)) + 1


def test_solve_deterministic(setup):
    st = keyframe()
    st.com_vel = st.com_vel + np.array([0.25, 0.1])
    r1 = solve(build_nlp(st.copy(), setup))
    r2 = solve(build_nlp(st.copy(), setup))
    assert np.array_equal(r1.decision, r2.decision)
    assert r1.robustness == r2.robustness


def test_sagittal_push_moves_first_foothold_forward(setup):
    st = keyframe()
    st.com_vel = st.com_vel + np.array([0.3, 0.0])
    problem = build_nlp(st, setup)
    result = solve(problem)
    assert result.feasible
    # extra forward momentum calls for a longer or quicker first step
    z, z_nom = result.decision, problem.nominal_decision
    assert z[0] > z_nom[0] + 1e-3 or z[6] < z_nom[6] - 1e-3


def test_feasible_result_certified_by_exact_semantics(setup):
    rng = np.random.default_rng(41)
    n_feasible = 0
    for _ in range(5):
        st = keyframe()
        st.com_vel = st.com_vel + rng.uniform(-0.25, 0.25, 2)
        result = solve(build_nlp(st, setup))
        if not result.feasible:
            continue
        n_feasible += 1
        trace = result.trace
        spec = build_nlp(st, setup).spec_for(trace.dt * (trace.n - 1))
        assert satisfies(spec, trace, 0)
        assert robustness(spec, trace, 0).value == pytest.approx(
            result.robustness, abs=1e-12)
    assert n_feasible >= 3


def test_terminal_state_reaches_nominal_orbit(setup):
    st = keyframe()
    problem = build_nlp(st, setup)
    end = terminal_state(st, problem.nominal_decision, setup)
    # three nominal steps later the state is a step-start state again,
    # with the opposite stance leg and mirrored lateral coordinates
    assert end.stance_leg != st.stance_leg
    rel = end.com_pos - end.stance_pos
    assert rel[0] == pytest.approx(NG.start_rel[0], abs=1e-9)
    assert rel[1] == pytest.approx(-NG.start_rel[1], abs=1e-9)
    assert end.com_vel[0] == pytest.approx(NG.start_vel[0], abs=1e-9)
    assert end.com_vel[1] == pytest.approx(-NG.start_vel[1], abs=1e-9)


def test_max_descents_cap_still_returns(setup):
    st = keyframe()
    st.com_vel = st.com_vel + np.array([0.0, 0.6])  # hard lateral push
    result = solve(build_nlp(st, setup), max_descents=1)
    assert result.decision.shape == (9,)
    assert np.all(np.isfinite(result.decision))


def test_controller_shifts_warm_start_on_touchdown(setup):
    ctrl = MpcController(setup)
    st = keyframe()
    r0 = ctrl.replan(st)
    assert r0.feasible
    z_prev = ctrl.last_result.decision.copy()
    # pretend the first planned step landed: same measurement but the
    # stance leg flipped, so the plan should shift by one step
    nxt = st.copy()
    nxt.stance_leg = "right"
    nxt.stance_pos = z_prev[0:2].copy()
    nxt.com_pos = nxt.stance_pos + (st.com_pos - st.stance_pos) * [1, -1]
    nxt.com_vel = st.com_vel * [1, -1]
    warm = ctrl._shifted_warm_start(nxt)
    assert np.allclose(warm[0:4], z_prev[2:6])
    assert np.allclose(warm[6:8], z_prev[7:9])
    assert warm[8] == pytest.approx(CFG.gait.nominal_T)


def test_controller_rejects_nonfinite_state(setup):
    ctrl = MpcController(setup)
    st = keyframe()
    st.com_vel = np.array([np.nan, 0.0])
    with pytest.raises(ValueError):
        ctrl.replan(st)


def test_infeasible_state_flagged(setup):
    st = keyframe()
    st.com_vel = st.com_vel + np.array([8.0, 0.0])  # far beyond any save
    result = solve(build_nlp(st, setup),
                   config=CFG.mpc.__class__(eval_budget=40,
                                            descent_budget=120))
    assert not (result.feasible and result.stable)
