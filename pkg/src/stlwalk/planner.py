"""STL model-predictive planner over a three-step horizon.

Decision vector (9 entries): three footholds (x, y) and three step
durations.  The CoM trajectory is the exact closed-form flow given those
decisions (direct shooting), so dynamics hold by construction.  The
objective trades smoothed STL robustness against a quadratic control
cost and a soft penalty on the learned collision margin; feasibility is
certified afterwards by recomputing the exact (non-smooth) robustness on
the returned trace.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import locomotion_spec as spec_mod
from .collision import Mlp
from .formula import Formula
from .locomotion_spec import (FootBound, GaitParams, NominalGait,
                              RiemannianRegion, build_loco_spec,
                              riemannian_channels)
from .reduced_model import (LEFT, ControlInput, ModelParams, ReducedState,
                            flow_state, lipm_flow, reset_map, rollout)
from .semantics import robustness, satisfies, smooth_robustness_value

HORIZON_STEPS = 3


@dataclass(frozen=True)
class SolverConfig:
    w_rho: float = 10.0
    w_u: float = 1.0
    w_pen: float = 1.0e3
    delta_col: float = 0.02      # required learned collision margin [m]
    beta: float = 100.0          # robustness smoothing sharpness
    tol: float = 1.0e-4          # projected-gradient norm tolerance
    max_iters: int = 150
    eval_budget: int = 150       # objective evaluations per descent (deterministic)
    descent_budget: int = 1650   # shared evaluation cap across seed descents
    crisis_reseed: int = 3       # full multi-seed search cadence while infeasible
    time_budget_s: float | None = None   # soft wall-clock budget, off by default
    feas_tol: float = 1.0e-3     # allowed learned-margin violation [m]
    fd_step: float = 1.0e-6
    swing_apex: float = 0.08
    terminal_box: float = 0.1    # apex |rel - rel_nom| cap per axis [m]
    w_term: float = 100.0        # weight on the terminal-apex excess


@dataclass(frozen=True)
class PlannerSetup:
    """Everything the planner needs besides the measured state."""

    params: ModelParams
    gait: GaitParams
    bound: FootBound
    region: RiemannianRegion
    net: Mlp
    nominal: NominalGait
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class NlpProblem:
    state: ReducedState
    spec: Formula                 # at the nominal-duration horizon
    setup: PlannerSetup
    nominal_decision: np.ndarray  # regularization center (9,)

    def spec_for(self, horizon_T: float) -> Formula:
        s = self.setup
        return build_loco_spec(s.bound, s.region, s.gait, horizon_T)


@dataclass
class SolveStats:
    iterations: int = 0
    objective: float = float("inf")
    max_violation: float = float("inf")
    wall_time: float = 0.0
    n_evals: int = 0
    converged: bool = False
    budget_hit: bool = False
    start_label: str = ""


@dataclass
class PlanResult:
    decision: np.ndarray
    trace: object
    robustness: float             # exact semantics, recomputed on the trace
    satisfied: bool               # exact Boolean satisfaction at k=0
    control_cost: float
    stats: SolveStats
    feasible: bool
    # terminal stability gate: the predicted state after the last planned
    # touchdown sits near the nominal step-start state in position and
    # velocity.  The orbital energy atoms cannot tell the inbound from
    # the outbound branch of an orbit, so a plan can satisfy the formula
    # while the CoM runs away; any runaway grows by e^(omega*T) per step
    # and trips this gate.
    stable: bool = True


def decision_to_plan(z, apex):
    return [ControlInput((z[2 * k], z[2 * k + 1]), z[6 + k], apex)
            for k in range(HORIZON_STEPS)]


def nominal_decision(state: ReducedState, ng: NominalGait,
                     gait: GaitParams) -> np.ndarray:
    z = np.empty(3 * HORIZON_STEPS)
    stance = np.asarray(state.stance_pos, float)
    leg = state.stance_leg
    for k in range(HORIZON_STEPS):
        stance = stance + ng.foothold_offset(leg)
        z[2 * k:2 * k + 2] = stance
        leg = "right" if leg == LEFT else LEFT
        z[6 + k] = gait.nominal_T
    return z


def build_nlp(state: ReducedState, setup: PlannerSetup) -> NlpProblem:
    z_nom = nominal_decision(state, setup.nominal, setup.gait)
    remaining = (1.0 - state.phase) * setup.gait.nominal_T
    horizon = remaining + (HORIZON_STEPS - 1) * setup.gait.nominal_T
    spec = build_loco_spec(setup.bound, setup.region, setup.gait, horizon)
    return NlpProblem(state=state, spec=spec, setup=setup,
                      nominal_decision=z_nom)


def _project(z, setup: PlannerSetup):
    out = np.array(z, float)
    b, p = setup.bound, setup.params
    out[0:6:2] = np.clip(out[0:6:2], b.x_min, b.x_max)
    out[1:6:2] = np.clip(out[1:6:2], b.y_min, b.y_max)
    out[6:9] = np.clip(out[6:9], p.t_min, p.t_max)
    return out


def _collision_features(state: ReducedState, plan, params: ModelParams,
                        n_per_step: int = 20):
    """Collision features sampled on a per-step phase grid.

    Unlike the trace grid, the phase grid moves continuously with the
    step durations, keeping the penalty term smooth in the decisions.
    """
    from .reduced_model import swing_components

    out = np.empty((len(plan) * n_per_step, 6))
    cx, cy = state.com_pos
    vx, vy = state.com_vel
    px, py = state.stance_pos
    swing = state.swing_pos
    sign = state.stance_sign
    phase = state.phase
    w = params.omega
    row = 0
    for u in plan:
        rem = (1.0 - phase) * u.step_duration
        taus = np.linspace(0.0, rem, n_per_step, endpoint=False)
        e = np.exp(w * taus)
        c = 0.5 * (e + 1.0 / e)
        s = 0.5 * (e - 1.0 / e)
        dx, dy = cx - px, cy - py
        sw_x, sw_y, sw_z = swing_components(swing, u.next_foothold,
                                            u.swing_apex_height,
                                            taus / max(rem, 1e-9))
        blk = out[row:row + n_per_step]
        blk[:, 0] = dx * c + (vx / w) * s
        blk[:, 1] = dy * c + (vy / w) * s
        blk[:, 2] = sw_x - px
        blk[:, 3] = sw_y - py
        blk[:, 4] = sw_z
        blk[:, 5] = sign
        row += n_per_step
        # flow to touchdown and apply the reset in place
        ee = math.exp(w * rem)
        ce, se = 0.5 * (ee + 1.0 / ee), 0.5 * (ee - 1.0 / ee)
        cx = px + dx * ce + (vx / w) * se
        cy = py + dy * ce + (vy / w) * se
        vx, vy = dx * w * se + vx * ce, dy * w * se + vy * ce
        swing = np.array([px, py, 0.0])
        px, py = u.next_foothold
        sign, phase = -sign, 0.0
    return out


class _Objective:
    """Caches the pieces of J(z) needed by the solver and for reporting."""

    def __init__(self, problem: NlpProblem):
        self.problem = problem
        self.setup = problem.setup
        self.n_evals = 0

    def evaluate(self, z):
        self.n_evals += 1
        s = self.setup
        cfg = s.solver
        plan = decision_to_plan(z, cfg.swing_apex)
        trace = rollout(self.problem.state, plan, s.params,
                        channel_fn=lambda tr: riemannian_channels(tr, s.params))
        horizon = trace.dt * (trace.n - 1)
        spec = self.problem.spec_for(horizon)
        rho_s = smooth_robustness_value(spec, trace, 0, cfg.beta)

        dz = z - self.problem.nominal_decision
        cc = float(np.sum(dz[0:6] ** 2) + np.sum(dz[6:9] ** 2))

        margins = s.net.forward(
            _collision_features(self.problem.state, plan, s.params))
        short = np.maximum(0.0, cfg.delta_col - margins)
        pen = float(np.sum(short ** 2))
        viol = float(short.max())

        # terminal shaping: zero inside the stability box, quadratic
        # outside; keeps descent away from formula-satisfying plans whose
        # CoM is on the outbound branch of the orbit (see PlanResult.stable)
        excess = _terminal_excess(self.problem.state, z, s)
        term = float(np.sum(np.minimum(excess, 1.0e6) ** 2))

        J = (-cfg.w_rho * rho_s + cfg.w_u * cc + cfg.w_pen * pen
             + cfg.w_term * term)
        return J, {"trace": trace, "spec": spec, "rho_smooth": rho_s,
                   "control_cost": cc, "violation": viol}

    def value(self, z):
        return self.evaluate(z)[0]

    def gradient(self, z, J0):
        cfg = self.setup.solver
        h = cfg.fd_step
        upper = _project(z + 10 * h, self.setup)
        g = np.empty_like(z)
        for i in range(z.size):
            step = h if z[i] + h <= upper[i] else -h
            zp = z.copy()
            zp[i] += step
            g[i] = (self.value(zp) - J0) / step
        return g


def _solve_from(objective: _Objective, z0, cfg: SolverConfig, deadline,
                label):
    setup = objective.setup
    z = _project(z0, setup)
    J, aux = objective.evaluate(z)
    g = objective.gradient(z, J)
    step = 0.05
    stats = SolveStats(start_label=label)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if objective.n_evals >= cfg.eval_budget or \
                (deadline is not None and time.perf_counter() > deadline):
            stats.budget_hit = True
            break
        pg = z - _project(z - g, setup)
        if float(np.linalg.norm(pg)) <= cfg.tol:
            stats.converged = True
            break
        target = _project(z - step * g, setup)
        d = target - z
        gd = float(g @ d)
        alpha = 1.0
        improved = False
        for _ in range(12):
            z_new = z + alpha * d
            J_new, aux_new = objective.evaluate(z_new)
            if J_new <= J + 1.0e-4 * alpha * min(gd, 0.0) and J_new <= J:
                improved = True
                break
            alpha *= 0.5
        if not improved:
            step *= 0.25
            if step < 1.0e-8:
                stats.converged = True
                break
            continue
        g_new = objective.gradient(z_new, J_new)
        s_vec = z_new - z
        y_vec = g_new - g
        sy = float(s_vec @ y_vec)
        if sy > 1.0e-12:
            step = float(np.clip((s_vec @ s_vec) / sy, 1.0e-4, 10.0))
        z, J, aux, g = z_new, J_new, aux_new, g_new
    stats.iterations = it
    stats.objective = J
    stats.max_violation = aux["violation"]
    return z, J, aux, stats


def terminal_state(state: ReducedState, z, setup: PlannerSetup):
    """Predicted state just after the last planned touchdown."""
    st = state.copy()
    remaining = (1.0 - st.phase) * z[6]
    for k in range(HORIZON_STEPS):
        com, vel = flow_state(st, remaining, setup.params)
        td = replace(st.copy(), com_pos=com, com_vel=vel)
        st = reset_map(td, z[2 * k:2 * k + 2])
        if k + 1 < HORIZON_STEPS:
            remaining = z[6 + k + 1]
    return st


def _terminal_excess(state: ReducedState, z, setup: PlannerSetup):
    """Per-axis distance of the horizon end state from the nominal
    step-start state, beyond the allowed box (zero inside it).

    Checking the velocity as well as the position tells the inbound from
    the outbound branch of an orbit, which the orbital-energy atoms of
    the formula cannot do."""
    w = setup.params.omega
    cx, cy = state.com_pos
    vx, vy = state.com_vel
    px, py = state.stance_pos
    sign = state.stance_sign
    tau = (1.0 - state.phase) * z[6]
    for k in range(HORIZON_STEPS):
        if not (math.isfinite(cx) and math.isfinite(cy) and
                abs(cx - px) < 1e3 and abs(cy - py) < 1e3):
            return np.full(4, np.inf)
        e = math.exp(w * tau)
        c, s = 0.5 * (e + 1.0 / e), 0.5 * (e - 1.0 / e)
        dx, dy = cx - px, cy - py
        cx = px + dx * c + (vx / w) * s
        cy = py + dy * c + (vy / w) * s
        vx, vy = dx * w * s + vx * c, dy * w * s + vy * c
        px, py = z[2 * k], z[2 * k + 1]
        sign = -sign
        if k + 1 < HORIZON_STEPS:
            tau = z[6 + k + 1]
    if not (math.isfinite(cx) and math.isfinite(cy) and
            math.isfinite(vx) and math.isfinite(vy)):
        return np.full(4, np.inf)
    target_rel, target_vel = _nominal_start(setup.nominal, sign)
    rel = np.array([cx - px, cy - py])
    vel = np.array([vx, vy])
    box = setup.solver.terminal_box
    ex_r = np.maximum(0.0, np.abs(rel - target_rel) - box)
    ex_v = np.maximum(0.0, np.abs(vel - target_vel) - w * box) / w
    return np.concatenate([ex_r, ex_v])


def _stable(state: ReducedState, z, setup: PlannerSetup) -> bool:
    excess = _terminal_excess(state, z, setup)
    return bool(np.all(excess <= 0.0))


def _finish(z, J, aux, stats, setup: PlannerSetup, state: ReducedState):
    trace, spec = aux["trace"], aux["spec"]
    rho = robustness(spec, trace, 0).value
    sat = satisfies(spec, trace, 0)
    feasible = (rho >= 0.0 and sat and
                aux["violation"] <= setup.solver.feas_tol)
    stable = feasible and _stable(state, z, setup)
    return PlanResult(decision=z, trace=trace, robustness=rho,
                      satisfied=sat, control_cost=aux["control_cost"],
                      stats=stats, feasible=feasible, stable=stable)


def _capture_seed(problem: NlpProblem, first_T: float) -> np.ndarray:
    """Chained capture-point stepping evaluated at the predicted touchdown.

    Placing each foothold at the capture point of the pre-touchdown state
    cancels the unstable LIPM mode exactly; the correction term is the
    nominal gait's own touchdown capture point, so at the periodic gait
    this seed reproduces the nominal footholds.  first_T retimes the
    current step: after a push the lateral bounce is out of phase with
    the step clock, and a shorter or longer first step is often the only
    way to land when the CoM is on the converging side of the orbit.
    """
    setup = problem.setup
    ng = setup.nominal
    om = setup.params.omega
    T = setup.gait.nominal_T
    rel_td, v_td = lipm_flow(ng.start_rel, ng.start_vel,
                             np.zeros(2), T, setup.params)
    ref = rel_td + v_td / om
    z = problem.nominal_decision.copy()
    z[6] = first_T
    st = problem.state.copy()
    remaining = (1.0 - st.phase) * first_T
    for k in range(HORIZON_STEPS):
        com, vel = flow_state(st, remaining, setup.params)
        td = replace(st.copy(), com_pos=com, com_vel=vel)
        sgn = 1.0 if st.stance_leg == LEFT else -1.0
        corr = (ng.foothold_offset(st.stance_leg)
                - np.array([ref[0], sgn * ref[1]]))
        p = setup.bound.clamp(com + vel / om + corr)
        z[2 * k:2 * k + 2] = p
        st = reset_map(td, p)
        remaining = T
    return z


def _nominal_start(ng: NominalGait, sgn: float):
    """Nominal post-touchdown state for a stance leg of the given sign."""
    rel = np.array([ng.start_rel[0], sgn * ng.start_rel[1]])
    vel = np.array([ng.start_vel[0], sgn * ng.start_vel[1]])
    return rel, vel


def _deadbeat_pair(rel0, vel0, t1, T, target_rel, target_vel, om):
    """Foothold offsets driving the state to the target in two steps.

    In the mode coordinates xi+- = rel +- v/omega the LIPM flow is
    diagonal and a touchdown at offset D shifts both modes by -D, so two
    footholds give exactly two parameters per axis: enough to place the
    post-second-touchdown state exactly at the target.  t1 is the time to
    the first touchdown, T the duration of the intermediate step.
    """
    P = target_rel + target_vel / om
    M = target_rel - target_vel / om
    plus = (rel0 + vel0 / om) * math.exp(om * t1)
    minus = (rel0 - vel0 / om) * math.exp(-om * t1)
    a, b = math.exp(om * T), math.exp(-om * T)
    d1 = (plus * a - minus * b - (P - M)) / (a - b)
    d2 = (plus - d1) * a - P
    return d1, d2


def _deadbeat_seed(problem: NlpProblem, first_T: float) -> np.ndarray:
    """Two-step deadbeat re-entry onto the nominal orbit.

    The post-second-touchdown state equals the nominal step-start state
    exactly, so the nominal tail keeps every predicted keyframe exact,
    which is what the recovery criterion (consecutive in-region
    keyframes) needs.
    """
    setup = problem.setup
    ng = setup.nominal
    st = problem.state
    om = setup.params.omega
    T = setup.gait.nominal_T
    t1 = (1.0 - st.phase) * first_T

    # after two touchdowns the stance leg type is back to the current one
    target_rel, target_vel = _nominal_start(ng, st.stance_sign)
    d1, d2 = _deadbeat_pair(st.com_pos - st.stance_pos, st.com_vel,
                            t1, T, target_rel, target_vel, om)

    z = problem.nominal_decision.copy()
    z[6] = first_T
    p1 = setup.bound.clamp(st.stance_pos + d1)
    p2 = setup.bound.clamp(p1 + d2)
    p3 = setup.bound.clamp(p2 + ng.foothold_offset(st.stance_leg))
    z[0:2], z[2:4], z[4:6] = p1, p2, p3
    return z


def _detour_seed(problem: NlpProblem, dx: float) -> np.ndarray:
    """Deadbeat recovery with a sagittal detour on the first foothold.

    A push toward the stance leg calls for a crossed step whose capture
    target sits on the stance foot, so the straight swing path collides.
    Shifting the first foothold fore or aft clears the stance leg; the
    remaining two footholds then solve the two-step deadbeat from the
    post-detour state, so the horizon still ends exactly on the nominal
    orbit and its final touchdown sample is a perfect keyframe.
    """
    setup = problem.setup
    ng = setup.nominal
    st = problem.state
    om = setup.params.omega
    T = setup.gait.nominal_T
    t1 = (1.0 - st.phase) * T

    target_rel, target_vel = _nominal_start(ng, st.stance_sign)
    d1, _ = _deadbeat_pair(st.com_pos - st.stance_pos, st.com_vel,
                           t1, T, target_rel, target_vel, om)
    p1 = setup.bound.clamp(st.stance_pos + d1 + np.array([dx, 0.0]))
    com, vel = flow_state(st, t1, setup.params)
    st1 = reset_map(replace(st.copy(), com_pos=com, com_vel=vel), p1)

    # three touchdowns from now the stance leg is the opposite one
    target_rel, target_vel = _nominal_start(ng, -st.stance_sign)
    d2, d3 = _deadbeat_pair(st1.com_pos - p1, st1.com_vel,
                            T, T, target_rel, target_vel, om)
    p2 = setup.bound.clamp(p1 + d2)
    p3 = setup.bound.clamp(p2 + d3)
    z = problem.nominal_decision.copy()
    z[0:2], z[2:4], z[4:6] = p1, p2, p3
    z[6:9] = T
    return z


def default_seeds(problem: NlpProblem):
    """Nominal, deadbeat, retimed capture-point, and crossed-leg starts."""
    params = problem.setup.params
    T = problem.setup.gait.nominal_T
    z_nom = problem.nominal_decision
    z_cp = _capture_seed(problem, T)
    z_cross = z_cp.copy()
    z_cross[1] = 2.0 * problem.state.stance_pos[1] - z_cp[1]
    return [("nominal", z_nom),
            ("deadbeat", _deadbeat_seed(problem, T)),
            ("deadbeat_fast", _deadbeat_seed(problem, params.t_min)),
            ("deadbeat_late", _deadbeat_seed(problem, params.t_max)),
            ("capture_point", z_cp),
            ("capture_fast", _capture_seed(problem, params.t_min)),
            ("capture_late", _capture_seed(problem, params.t_max)),
            ("detour_fwd", _detour_seed(problem, 0.2)),
            ("detour_back", _detour_seed(problem, -0.2)),
            ("crossed", z_cross)]


def solve(problem: NlpProblem, warm_start=None,
          config: SolverConfig | None = None,
          max_descents: int | None = None) -> PlanResult:
    """Multi-start projected-gradient solve; returns the best feasible
    result, or the best-effort result flagged infeasible.  max_descents,
    when given, caps how many starts get a full descent (all raw seeds
    are still screened as candidates)."""
    setup = problem.setup
    cfg = config or setup.solver
    if cfg is not setup.solver:
        setup = PlannerSetup(setup.params, setup.gait, setup.bound,
                             setup.region, setup.net, setup.nominal, cfg)
        problem = NlpProblem(problem.state, problem.spec, setup,
                             problem.nominal_decision)
    t_start = time.perf_counter()
    deadline = (t_start + cfg.time_budget_s
                if cfg.time_budget_s is not None else None)

    starts = []
    if warm_start is not None:
        starts.append(("warm", np.asarray(warm_start, float)))
    starts.extend(default_seeds(problem))

    # raw seeds are candidates in their own right: descent minimizes J,
    # which only sees the terminal stability gate through a penalty, so it
    # can trade a stable seed for an unstable optimum.  When a seed is
    # already feasible and stable the best such seed is accepted outright,
    # which keeps the nominal-walking replan at a handful of evaluations.
    best = None
    seeded = []
    for label, z0 in starts:
        zs = _project(np.asarray(z0, float), problem.setup)
        objective = _Objective(problem)
        Js, auxs = objective.evaluate(zs)
        stats = SolveStats(start_label=label + "_seed", objective=Js,
                           max_violation=auxs["violation"], n_evals=1)
        result = _finish(zs, Js, auxs, stats, problem.setup, problem.state)
        if best is None or _better(result, best):
            best = result
        seeded.append((label, zs, Js))
    if best.feasible and best.stable:
        best.stats.wall_time = time.perf_counter() - t_start
        return best

    # descend the most promising seeds first; the shared evaluation budget
    # bounds the cost of a replan where no seed reaches the stability gate
    order = [s for s in seeded if s[0] == "warm"]
    order += sorted((s for s in seeded if s[0] != "warm"),
                    key=lambda s: s[2])
    if max_descents is not None:
        order = order[:max_descents]
    total_evals = 0
    for label, z0, _ in order:
        objective = _Objective(problem)
        z, J, aux, stats = _solve_from(objective, z0, cfg, deadline, label)
        stats.n_evals = objective.n_evals
        total_evals += objective.n_evals
        result = _finish(z, J, aux, stats, problem.setup, problem.state)
        if _better(result, best):
            best = result
        if result.feasible and result.stable:
            break
        if total_evals >= cfg.descent_budget:
            break
        if deadline is not None and time.perf_counter() > deadline:
            break
    best.stats.wall_time = time.perf_counter() - t_start
    return best


def _better(a: PlanResult, b: PlanResult) -> bool:
    if (a.feasible and a.stable) != (b.feasible and b.stable):
        return a.feasible and a.stable
    if a.feasible != b.feasible:
        return a.feasible
    return a.stats.objective < b.stats.objective


class MpcController:
    """Receding-horizon wrapper owning the warm-start bookkeeping."""

    def __init__(self, setup: PlannerSetup):
        self.setup = setup
        self.last_result: PlanResult | None = None
        self.last_stance: str | None = None
        self._crisis_ticks = 0

    def reset(self):
        self.last_result = None
        self.last_stance = None
        self._crisis_ticks = 0

    def _shifted_warm_start(self, state: ReducedState):
        if self.last_result is None:
            return None
        z = self.last_result.decision.copy()
        if self.last_stance is not None and state.stance_leg != self.last_stance:
            # a touchdown happened: consume the first planned step
            ng = self.setup.nominal
            tail = z[4:6] + ng.foothold_offset(state.stance_leg)
            z[0:4] = z[2:6]
            z[4:6] = tail
            z[6:8] = z[7:9]
            z[8] = self.setup.gait.nominal_T
        return z

    def replan(self, state: ReducedState) -> PlanResult:
        if not state.is_finite():
            raise ValueError("measured state is not finite")
        problem = build_nlp(state, self.setup)
        warm = self._shifted_warm_start(state)
        # while the planner is in crisis (last solve found nothing both
        # feasible and stable), run the full multi-seed search only every
        # crisis_reseed-th tick; in between, only the most promising
        # starts descend.  The situation changes little in one control
        # period, so repeating the full search every tick mostly repeats
        # the same failed descents.
        max_descents = None
        cfg = self.setup.solver
        if self._crisis_ticks > 0 and self._crisis_ticks % cfg.crisis_reseed:
            max_descents = 3
        result = solve(problem, warm_start=warm, config=cfg,
                       max_descents=max_descents)
        if result.feasible and result.stable:
            self._crisis_ticks = 0
        else:
            self._crisis_ticks += 1
        self.last_result = result
        self.last_stance = state.stance_leg
        return result
