"""Closed-loop experiments: push episodes, recovery scoring, force sweep.

The plant is the reduced-order model itself, integrated exactly between
control updates.  Pushes are impulses (instant CoM velocity changes)
reported in newtons via F = m * dv / duration.  Recovery means two
consecutive post-push keyframes inside the Riemannian region with foot
bounds held; the sweep bisects the push magnitude per (direction, phase)
cell for both the STL-MPC and a capture-point baseline.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .collision import Mlp, capsule_margin, train_mlp, sample_dataset
from .config import Config
from .locomotion_spec import (FootBound, GaitParams, NominalGait,
                              build_loco_spec, capture_point_foothold,
                              nominal_gait, riemannian_channels,
                              riemannian_distance)
from .planner import MpcController, PlanResult, PlannerSetup
from .reduced_model import (BASE_CHANNELS, LEFT, ControlInput, ModelParams,
                            ReducedState, flow_state, reset_map,
                            swing_trajectory)
from .semantics import Trace

STL_MPC = "stl_mpc"
BASELINE = "baseline"


class HarnessError(RuntimeError):
    pass


class InfeasibleConfiguration(HarnessError):
    """Unperturbed walking fails under the given configuration."""


@dataclass(frozen=True)
class Perturbation:
    direction_index: int          # 0..11, angle 30 deg * index, 0 = forward
    magnitude: float              # [N]
    phase: float                  # in [0, 1) within a left-stance step
    duration: float = 0.1         # [s]

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("magnitude must be >= 0")
        if not (0.0 <= self.phase < 1.0):
            raise ValueError("phase must be in [0, 1)")

    @property
    def angle(self) -> float:
        return math.radians(30.0 * self.direction_index)


def apply_push(state: ReducedState, p: Perturbation, mass: float) -> ReducedState:
    """Impulse push on the pelvis: dv = F*duration/mass along the angle."""
    dv = p.magnitude * p.duration / mass
    out = state.copy()
    out.com_vel = out.com_vel + dv * np.array([math.cos(p.angle),
                                               math.sin(p.angle)])
    return out


def baseline_controller(state: ReducedState, gait: GaitParams,
                        params: ModelParams, ng: NominalGait | None = None,
                        bound: FootBound | None = None,
                        swing_apex: float = 0.08) -> ControlInput:
    """Capture-point foot placement with fixed step duration."""
    if ng is None:
        ng = nominal_gait(gait, params)
    foothold = capture_point_foothold(state, ng, params)
    if bound is not None:
        foothold = bound.clamp(foothold)
    return ControlInput(tuple(foothold), gait.nominal_T, swing_apex)


def make_planner_setup(cfg: Config, net: Mlp) -> PlannerSetup:
    return PlannerSetup(params=cfg.model, gait=cfg.gait,
                        bound=cfg.treadmill, region=cfg.region(),
                        net=net, nominal=nominal_gait(cfg.gait, cfg.model),
                        solver=cfg.mpc)


def default_collision_net(cfg: Config) -> Mlp:
    """Load the configured collision model, or train one from scratch."""
    col = cfg.collision
    if col.model_path and os.path.exists(col.model_path):
        return Mlp.load(col.model_path)
    X, y = sample_dataset(col.n_samples, col.geometry, col.ranges, col.seed)
    return train_mlp(X, y, col.layers, col.epochs, col.seed,
                     col.lr, col.momentum, col.batch_size)


@dataclass
class KeyframeEvent:
    tick: int
    time: float
    min_abs_rel_x: float
    distance: float
    good: bool


@dataclass
class EpisodeResult:
    recovered: bool
    steps_to_recover: int
    trace: Trace
    plans: list
    min_collision_margin: float
    push_time: float | None = None
    push_stance_y: float | None = None
    first_post_push_foothold: np.ndarray | None = None
    crossed: bool | None = None
    foot_bounds_ok: bool = True
    diverged: bool = False
    keyframes: list = field(default_factory=list)
    n_plans_feasible: int = 0
    n_gate_violations: int = 0


class _Recorder:
    def __init__(self):
        self.rows = {name: [] for name in BASE_CHANNELS}
        self.margins = []

    def record(self, state: ReducedState, geom):
        r = self.rows
        r["com_x"].append(state.com_pos[0])
        r["com_y"].append(state.com_pos[1])
        r["com_vx"].append(state.com_vel[0])
        r["com_vy"].append(state.com_vel[1])
        r["rel_x"].append(state.com_pos[0] - state.stance_pos[0])
        r["rel_y"].append(state.com_pos[1] - state.stance_pos[1])
        r["swing_x"].append(state.swing_pos[0])
        r["swing_y"].append(state.swing_pos[1])
        r["swing_z"].append(state.swing_pos[2])
        r["foot_x"].append(state.stance_pos[0])
        r["foot_y"].append(state.stance_pos[1])
        r["stance_left"].append(1.0 if state.stance_leg == LEFT else 0.0)
        self.margins.append(capsule_margin(state, geom))


def run_episode(controller: str, push: Perturbation | None, n_steps: int,
                cfg: Config, net: Mlp | None = None,
                setup: PlannerSetup | None = None,
                keep_plans: bool = True) -> EpisodeResult:
    """Closed-loop episode from the nominal left-stance keyframe.

    The controller replans every control period; the push is injected in
    the first full left-stance step once its phase is reached.  The trace
    is sampled on the model dt grid.
    """
    params, gait = cfg.model, cfg.gait
    ng = nominal_gait(gait, params)
    region = cfg.region()
    geom = cfg.collision.geometry
    dt = params.dt
    control_period = cfg.sweep.control_period

    mpc = None
    if controller == STL_MPC:
        if setup is None:
            if net is None:
                raise HarnessError("stl_mpc episodes need a collision net")
            setup = make_planner_setup(cfg, net)
        mpc = MpcController(setup)
    elif controller != BASELINE:
        raise ValueError(f"unknown controller {controller!r}")

    state = ng.keyframe_state.copy()
    # start upstream on the treadmill so a full episode of forward steps
    # plus a recovery transient stays inside the foot bounds
    x0 = -0.5 * n_steps * gait.step_length
    state.com_pos = state.com_pos + np.array([x0, 0.0])
    state.stance_pos = state.stance_pos + np.array([x0, 0.0])
    state.swing_pos = state.swing_pos + np.array([x0, 0.0, 0.0])
    apex = cfg.mpc.swing_apex

    rec = _Recorder()
    plans: list[PlanResult] = []
    n_feas = n_viol = 0
    touchdown_ticks = [0]
    foothold_log = []            # (tick, position) per touchdown
    push_pending = push is not None and push.magnitude > 0
    push_tick = None
    push_stance_y = None
    touchdowns = 0
    diverged = False

    # per-step swing anchoring for re-parameterized swing interpolation
    anchor_swing = state.swing_pos.copy()
    anchor_phase = state.phase
    current = ControlInput(tuple(state.stance_pos + ng.foothold_offset(state.stance_leg)),
                           gait.nominal_T, apex)
    plan_queue = []              # remaining steps of the latest MPC plan
    last_replan_t = -math.inf

    def update_controller(t):
        nonlocal current, plan_queue, n_feas, n_viol, anchor_swing, anchor_phase
        if mpc is not None:
            res = mpc.replan(state)
            if keep_plans:
                plans.append(res)
            if res.feasible:
                n_feas += 1
                if not res.satisfied:
                    n_viol += 1
            z = res.decision
            plan_queue = [ControlInput((z[2 * k], z[2 * k + 1]), z[6 + k], apex)
                          for k in range(3)]
        else:
            plan_queue = [baseline_controller(state, gait, params, ng,
                                              cfg.treadmill, apex)]
        new = plan_queue.pop(0)
        if (abs(new.next_foothold[0] - current.next_foothold[0]) > 1e-9 or
                abs(new.next_foothold[1] - current.next_foothold[1]) > 1e-9):
            anchor_swing = state.swing_pos.copy()
            anchor_phase = state.phase
        current = new

    max_ticks = int(round(n_steps * params.t_max / dt)) + 2
    t = 0.0
    for tick in range(max_ticks):
        # a CoM this far from the stance foot cannot be caught inside the
        # treadmill any more; stop instead of grinding infeasible replans
        if not state.is_finite() or abs(state.com_pos[0] - state.stance_pos[0]) > 1.5 \
                or abs(state.com_pos[1] - state.stance_pos[1]) > 1.5:
            diverged = True
            break

        # push injection at tick boundaries, in a full left-stance step
        if (push_pending and touchdowns >= 2 and state.stance_leg == LEFT
                and state.phase >= push.phase - 1e-9):
            state = apply_push(state, push, params.mass)
            push_pending = False
            push_tick = tick
            push_stance_y = float(state.stance_pos[1])

        if t - last_replan_t >= control_period - 1e-9:
            update_controller(t)
            last_replan_t = t

        rec.record(state, geom)
        if cfg.sweep.require_collision_free and rec.margins[-1] < 0.0:
            # ground-truth leg contact already rules out recovery; no need
            # to roll the rest of the episode out
            break
        if touchdowns >= n_steps:
            break

        # advance one tick, handling touchdowns inside it
        left = dt
        while left > 1e-12:
            T = current.step_duration
            remaining = (1.0 - state.phase) * T
            if left < remaining - 1e-12:
                com, vel = flow_state(state, left, params)
                state.com_pos, state.com_vel = com, vel
                state.phase += left / T
                u = ((state.phase - anchor_phase) /
                     max(1.0 - anchor_phase, 1e-9))
                state.swing_pos = swing_trajectory(
                    anchor_swing, current.next_foothold, current.swing_apex_height, u)
                left = 0.0
            else:
                com, vel = flow_state(state, remaining, params)
                state.com_pos, state.com_vel = com, vel
                state.phase = 0.0
                state = reset_map(state, current.next_foothold)
                touchdowns += 1
                touchdown_ticks.append(tick + 1)
                foothold_log.append((tick + 1, np.array(current.next_foothold)))
                anchor_swing = state.swing_pos.copy()
                anchor_phase = 0.0
                if plan_queue:
                    current = plan_queue.pop(0)
                else:
                    current = ControlInput(
                        tuple(state.stance_pos + ng.foothold_offset(state.stance_leg)),
                        gait.nominal_T, apex)
                left -= remaining
        t += dt

    cols = {name: np.array(vals) for name, vals in rec.rows.items()}
    trace = riemannian_channels(Trace(cols, dt), params)
    n_ticks = trace.n

    # keyframe scoring per completed step
    keyframes = []
    bounds_ok = True
    eps_kf = gait.keyframe_tol
    for a, b in zip(touchdown_ticks, touchdown_ticks[1:]):
        b = min(b, n_ticks)
        if b - a < 1:
            continue
        seg = slice(a, b)
        rel = np.abs(trace.channels["rel_x"][seg])
        j = a + int(np.argmin(rel))
        st = ReducedState(
            com_pos=np.array([trace.channels["com_x"][j],
                              trace.channels["com_y"][j]]),
            com_vel=np.array([trace.channels["com_vx"][j],
                              trace.channels["com_vy"][j]]),
            swing_pos=np.array([0.0, 0.0, 0.0]),
            stance_pos=np.array([trace.channels["foot_x"][j],
                                 trace.channels["foot_y"][j]]),
            stance_leg=LEFT if trace.channels["stance_left"][j] > 0.5 else "right",
        )
        dist = riemannian_distance(st, region)
        good = float(rel.min()) <= eps_kf and dist > 0.0
        keyframes.append(KeyframeEvent(tick=j, time=j * dt,
                                       min_abs_rel_x=float(rel.min()),
                                       distance=dist, good=good))

    margins = np.array(rec.margins)
    min_margin = float(margins.min()) if margins.size else math.inf

    for _, fh in foothold_log:
        if not cfg.treadmill.contains(fh, tol=1e-9):
            bounds_ok = False

    first_fh = None
    crossed = None
    recovered = False
    steps_to_recover = 0
    if push is None or push.magnitude == 0 or push_tick is not None:
        after = [k for k in keyframes
                 if push_tick is None or k.tick > push_tick]
        # steps_to_recover counts full recovery steps: touchdowns between
        # the landing that completes the perturbed step (that foothold was
        # already mid-flight at push time, so it is not a recovery step of
        # its own) and the first keyframe of the good pair; unpushed
        # episodes count from the episode start
        if push_tick is None:
            ref = -1
        else:
            later = [t for t in touchdown_ticks if t > push_tick]
            ref = later[0] if later else push_tick
        for j in range(len(after) - 1):
            if after[j].good and after[j + 1].good:
                recovered = True
                steps_to_recover = sum(
                    1 for t in touchdown_ticks if ref < t <= after[j].tick)
                break
        if diverged:
            recovered = False
        if not bounds_ok:
            recovered = False
        if cfg.sweep.require_collision_free and min_margin < 0.0:
            recovered = False
    if push_tick is not None:
        post = [(tk, fh) for tk, fh in foothold_log if tk > push_tick]
        if post:
            first_fh = post[0][1]
            sign = 1.0  # push happens during a left stance
            crossed = bool((first_fh[1] - push_stance_y) * sign > 0.0)

    return EpisodeResult(
        recovered=recovered, steps_to_recover=steps_to_recover, trace=trace,
        plans=plans, min_collision_margin=min_margin,
        push_time=None if push_tick is None else push_tick * dt,
        push_stance_y=push_stance_y, first_post_push_foothold=first_fh,
        crossed=crossed, foot_bounds_ok=bounds_ok, diverged=diverged,
        keyframes=keyframes, n_plans_feasible=n_feas,
        n_gate_violations=n_viol)


@dataclass
class CellResult:
    controller: str
    phase: float
    direction_index: int
    max_force: float
    saturated: bool = False
    monotone_ok: bool = True
    crossed_at_max: bool | None = None
    failed: bool = False
    n_plans_feasible: int = 0
    n_gate_violations: int = 0


@dataclass
class SpiderTable:
    cells: list

    def rows(self):
        return sorted(self.cells, key=lambda c: (c.controller, c.phase,
                                                 c.direction_index))


def _recovers(result: EpisodeResult) -> bool:
    return result.recovered and result.steps_to_recover <= 2


def max_recoverable_force(controller: str, direction_index: int, phase: float,
                          cfg: Config, net: Mlp | None = None,
                          setup: PlannerSetup | None = None) -> CellResult:
    """Largest push force (bisection, fixed resolution) the controller
    survives within two steps.  Re-verifies both bracketing endpoints."""
    sw = cfg.sweep
    cell = CellResult(controller, phase, direction_index, 0.0)

    def episode(force):
        push = Perturbation(direction_index, force, phase, sw.push_duration)
        res = run_episode(controller, push, sw.n_steps, cfg, net=net,
                          setup=setup, keep_plans=False)
        cell.n_plans_feasible += res.n_plans_feasible
        cell.n_gate_violations += res.n_gate_violations
        return res

    base = episode(0.0)
    if not _recovers(base):
        raise InfeasibleConfiguration(
            f"unperturbed walking fails for controller {controller!r}")

    top = episode(sw.force_cap)
    if _recovers(top):
        cell.max_force = sw.force_cap
        cell.saturated = True
        cell.crossed_at_max = top.crossed
        return cell

    lo, hi = 0.0, sw.force_cap
    lo_result = base
    while hi - lo > sw.resolution:
        mid = 0.5 * (lo + hi)
        res = episode(mid)
        if _recovers(res):
            lo, lo_result = mid, res
        else:
            hi = mid

    # bisection postcondition, re-checked by direct episodes
    check_lo = episode(lo)
    check_hi = episode(lo + sw.resolution)
    if not _recovers(check_lo) or _recovers(check_hi):
        cell.monotone_ok = False
    cell.max_force = lo
    cell.crossed_at_max = check_lo.crossed if lo > 0 else None
    return cell


def sweep(controllers, phases, cfg: Config, out_dir=None,
          net: Mlp | None = None) -> SpiderTable:
    """Full (controller x phase x direction) grid of maximum recoverable
    forces; optionally writes sweep.csv and summary.json."""
    setup = None
    if STL_MPC in controllers:
        if net is None:
            net = default_collision_net(cfg)
        setup = make_planner_setup(cfg, net)

    cells = []
    for controller in controllers:
        for phase in phases:
            for d in range(cfg.sweep.n_directions):
                try:
                    cell = max_recoverable_force(
                        controller, d, phase, cfg, net=net,
                        setup=setup if controller == STL_MPC else None)
                except InfeasibleConfiguration:
                    raise
                except HarnessError:
                    cell = CellResult(controller, phase, d, float("nan"),
                                      failed=True)
                cells.append(cell)
    table = SpiderTable(cells)
    if out_dir is not None:
        write_sweep_outputs(table, cfg, out_dir)
    return table


def write_sweep_outputs(table: SpiderTable, cfg: Config, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rows = table.rows()
    with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["controller", "phase", "direction_index",
                         "max_force", "saturated", "monotone_ok", "failed"])
        for c in rows:
            writer.writerow([c.controller, f"{c.phase:.6f}",
                             c.direction_index, f"{c.max_force:.6f}",
                             int(c.saturated), int(c.monotone_ok),
                             int(c.failed)])

    summary = summarize(table)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summarize(table: SpiderTable) -> dict:
    rows = table.rows()
    by_key = {}
    for c in rows:
        by_key[(c.controller, c.phase, c.direction_index)] = c
    mpc_cells = [c for c in rows if c.controller == STL_MPC]
    comparisons = []
    n_dom = n_strict = 0
    for c in mpc_cells:
        b = by_key.get((BASELINE, c.phase, c.direction_index))
        if b is None or c.failed or b.failed:
            continue
        dom = c.max_force >= b.max_force
        strict = c.max_force > b.max_force
        n_dom += dom
        n_strict += strict
        comparisons.append({
            "phase": c.phase, "direction_index": c.direction_index,
            "stl_mpc": c.max_force, "baseline": b.max_force,
            "dominates": bool(dom), "strict": bool(strict),
            "crossed_at_max": c.crossed_at_max,
        })
    n_cmp = len(comparisons)
    return {
        "cells": [{
            "controller": c.controller, "phase": c.phase,
            "direction_index": c.direction_index, "max_force": c.max_force,
            "saturated": c.saturated, "monotone_ok": c.monotone_ok,
            "failed": c.failed, "crossed_at_max": c.crossed_at_max,
        } for c in rows],
        "comparisons": comparisons,
        "dominance_fraction": n_dom / n_cmp if n_cmp else None,
        "strict_fraction": n_strict / n_cmp if n_cmp else None,
        "n_plans_feasible": int(sum(c.n_plans_feasible for c in rows)),
        "n_gate_violations": int(sum(c.n_gate_violations for c in rows)),
    }


def write_trace_csv(trace: Trace, path):
    """Header = channel names, one row per sample, time column first."""
    names = trace.names
    times = trace.times()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time"] + names)
        for i in range(trace.n):
            writer.writerow([f"{times[i]:.6f}"] +
                            [f"{trace.channels[n][i]:.9f}" for n in names])
