"""Enhanced LIPM hybrid dynamics: CoM flow, swing foot, touchdown reset.

The continuous part is the classic linear inverted pendulum,
xdd = omega^2 (x - p) with omega = sqrt(g/h), applied independently per
horizontal axis.  The state is augmented with the swing-foot position so
foot-bound and self-collision constraints can be expressed on it.  The
touchdown reset swaps stance and swing legs and leaves the CoM state
untouched (impact-free contact).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .semantics import Trace

LEFT = "left"
RIGHT = "right"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and bounds; Cassie-scale defaults."""

    h: float = 0.9           # CoM height [m]
    g: float = 9.81          # gravity [m/s^2]
    mass: float = 33.0       # total mass [kg]
    t_min: float = 0.25      # shortest step [s]
    t_max: float = 0.6       # longest step [s]
    dt: float = 0.02         # trace sampling period [s]

    def __post_init__(self):
        for name in ("h", "g", "mass", "t_min", "t_max", "dt"):
            if getattr(self, name) <= 0:
                raise ModelError(f"{name} must be positive")
        if self.t_min > self.t_max:
            raise ModelError("t_min > t_max")

    @property
    def omega(self) -> float:
        return math.sqrt(self.g / self.h)


@dataclass
class ReducedState:
    """Enhanced-LIPM state: CoM, swing foot, stance annotation, phase."""

    com_pos: np.ndarray          # (x, y) [m]
    com_vel: np.ndarray          # (vx, vy) [m/s]
    swing_pos: np.ndarray        # (x, y, z) [m]
    stance_pos: np.ndarray       # (x, y) [m]
    stance_leg: str = LEFT
    phase: float = 0.0           # fraction of step elapsed, in [0, 1)

    def __post_init__(self):
        self.com_pos = np.asarray(self.com_pos, dtype=float)
        self.com_vel = np.asarray(self.com_vel, dtype=float)
        self.swing_pos = np.asarray(self.swing_pos, dtype=float)
        self.stance_pos = np.asarray(self.stance_pos, dtype=float)
        if self.stance_leg not in (LEFT, RIGHT):
            raise ModelError(f"bad stance_leg {self.stance_leg!r}")
        if self.swing_pos[2] < 0:
            raise ModelError("swing foot below ground")
        if not (0.0 <= self.phase < 1.0):
            raise ModelError("phase must be in [0, 1)")

    @property
    def stance_sign(self) -> float:
        """+1 for left stance, -1 for right."""
        return 1.0 if self.stance_leg == LEFT else -1.0

    def copy(self) -> "ReducedState":
        return ReducedState(self.com_pos.copy(), self.com_vel.copy(),
                            self.swing_pos.copy(), self.stance_pos.copy(),
                            self.stance_leg, self.phase)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.com_pos)) and
                    np.all(np.isfinite(self.com_vel)) and
                    np.all(np.isfinite(self.swing_pos)) and
                    np.all(np.isfinite(self.stance_pos)))


@dataclass(frozen=True)
class ControlInput:
    """One planned walking step."""

    next_foothold: tuple         # (x, y) [m]
    step_duration: float         # T [s]
    swing_apex_height: float = 0.08


def lipm_flow(x0, v0, p, t, params: ModelParams):
    """Closed-form LIPM flow for one horizontal axis.

    x(t) = p + (x0-p) cosh(wt) + (v0/w) sinh(wt), and its derivative.
    Accepts scalar or array t.
    """
    w = params.omega
    e = np.exp(w * np.asarray(t, dtype=float))
    c = 0.5 * (e + 1.0 / e)
    s = 0.5 * (e - 1.0 / e)
    x = p + (x0 - p) * c + (v0 / w) * s
    v = (x0 - p) * w * s + v0 * c
    return x, v


def flow_components(state: ReducedState, t, params: ModelParams):
    """Per-axis LIPM flow (x, y, vx, vy), sharing cosh/sinh between axes."""
    w = params.omega
    e = np.exp(w * np.asarray(t, dtype=float))
    c = 0.5 * (e + 1.0 / e)
    s = 0.5 * (e - 1.0 / e)
    px, py = state.stance_pos
    dx = state.com_pos[0] - px
    dy = state.com_pos[1] - py
    vx0, vy0 = state.com_vel
    x = px + dx * c + (vx0 / w) * s
    y = py + dy * c + (vy0 / w) * s
    vx = dx * w * s + vx0 * c
    vy = dy * w * s + vy0 * c
    return x, y, vx, vy


def flow_state(state: ReducedState, t, params: ModelParams):
    """CoM position/velocity after flowing t seconds on the current stance."""
    x, y, vx, vy = flow_components(state, t, params)
    return np.stack([x, y], axis=-1), np.stack([vx, vy], axis=-1)


def _hermite_down(s):
    # cubic with value 1->0 and zero slope at both ends
    return (1.0 - s) ** 2 * (1.0 + 2.0 * s)


def _smoothstep(s):
    return s * s * (3.0 - 2.0 * s)


def swing_components(from_pos, to_foothold, apex, s):
    """Swing-foot coordinates (x, y, z) at normalized phase s in [0, 1].

    Horizontal coordinates follow a cubic with zero end velocities; the
    height is a quartic that starts at from_pos[2], lands at 0 and peaks
    near apex at mid-swing.  Vectorized over s.
    """
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    blend = _smoothstep(s)
    x = from_pos[0] + (to_foothold[0] - from_pos[0]) * blend
    y = from_pos[1] + (to_foothold[1] - from_pos[1]) * blend
    bump = max(apex - 0.5 * from_pos[2], 0.0)
    z = from_pos[2] * _hermite_down(s) + bump * 16.0 * s ** 2 * (1.0 - s) ** 2
    return x, y, z


def swing_trajectory(from_pos, to_foothold, apex, s):
    """Swing-foot pose at normalized phase s, stacked as (..., 3)."""
    x, y, z = swing_components(from_pos, to_foothold, apex, s)
    return np.stack([x, y, z], axis=-1)


def reset_map(state: ReducedState, touchdown) -> ReducedState:
    """Touchdown transition: stance/swing swap, CoM state continuous."""
    td = np.asarray(touchdown, dtype=float)
    new_swing = np.array([state.stance_pos[0], state.stance_pos[1], 0.0])
    return ReducedState(
        com_pos=state.com_pos.copy(),
        com_vel=state.com_vel.copy(),
        swing_pos=new_swing,
        stance_pos=td.copy(),
        stance_leg=RIGHT if state.stance_leg == LEFT else LEFT,
        phase=0.0,
    )


BASE_CHANNELS = ("com_x", "com_y", "com_vx", "com_vy", "rel_x", "rel_y",
                 "swing_x", "swing_y", "swing_z", "foot_x", "foot_y",
                 "stance_left")


def rollout(initial: ReducedState, plan, params: ModelParams,
            channel_fn=None) -> Trace:
    """Simulate the hybrid dynamics under a step plan and emit a Trace.

    The first step consumes only its remaining duration (1-phase)*T.
    Samples land on the uniform dt grid; samples at a touchdown instant
    show the post-reset stance.  channel_fn, when given, post-processes
    the trace (used to append the orbital-energy channels).
    """
    if not plan:
        raise ModelError("empty plan")
    for u in plan:
        if not (params.t_min - 1e-9 <= u.step_duration <= params.t_max + 1e-9):
            raise ModelError(
                f"step duration {u.step_duration} outside "
                f"[{params.t_min}, {params.t_max}]")

    remaining = [(1.0 - initial.phase) * plan[0].step_duration]
    remaining += [u.step_duration for u in plan[1:]]
    edges = np.concatenate([[0.0], np.cumsum(remaining)])
    total = edges[-1]
    n = int(round(total / params.dt)) + 1

    # per-step start states (post-reset) and swing anchors
    starts = [initial]
    for m, u in enumerate(plan):
        s = starts[m]
        com, vel = flow_state(s, remaining[m], params)
        landed = replace(s.copy(), com_pos=com, com_vel=vel)
        starts.append(reset_map(landed, u.next_foothold))

    cols = {name: np.empty(n) for name in BASE_CHANNELS}
    times = params.dt * np.arange(n)
    eps = 1e-9
    for m, u in enumerate(plan):
        # each step owns a contiguous slice of the uniform sample grid
        i0 = int(math.ceil((edges[m] - eps) / params.dt))
        if m + 1 < len(plan):
            i1 = int(math.ceil((edges[m + 1] - eps) / params.dt))
        else:
            # the grid can overshoot the horizon by up to dt/2; clamp
            i1 = n
        if i1 <= i0:
            continue
        idx = slice(i0, i1)
        tau = np.minimum(times[idx] - edges[m], remaining[m])
        s0 = starts[m]
        x, y, vx, vy = flow_components(s0, tau, params)
        span = max(remaining[m], eps)
        sw_x, sw_y, sw_z = swing_components(s0.swing_pos, u.next_foothold,
                                            u.swing_apex_height, tau / span)
        # samples exactly at the step's end belong to the next stance
        at_end = tau >= span - eps
        cols["com_x"][idx] = x
        cols["com_y"][idx] = y
        cols["com_vx"][idx] = vx
        cols["com_vy"][idx] = vy
        foot_x = np.where(at_end, u.next_foothold[0], s0.stance_pos[0])
        foot_y = np.where(at_end, u.next_foothold[1], s0.stance_pos[1])
        cols["rel_x"][idx] = x - foot_x
        cols["rel_y"][idx] = y - foot_y
        cols["swing_x"][idx] = np.where(at_end, s0.stance_pos[0], sw_x)
        cols["swing_y"][idx] = np.where(at_end, s0.stance_pos[1], sw_y)
        cols["swing_z"][idx] = np.where(at_end, 0.0, sw_z)
        cols["foot_x"][idx] = foot_x
        cols["foot_y"][idx] = foot_y
        sgn = 1.0 if s0.stance_leg == LEFT else 0.0
        cols["stance_left"][idx] = np.where(at_end, 1.0 - sgn, sgn)

    trace = Trace(cols, params.dt)
    if channel_fn is not None:
        trace = channel_fn(trace)
    return trace


def orbital_energy(x_rel, v, params: ModelParams) -> float:
    """E = v^2/2 - omega^2 x_rel^2 / 2, invariant along the LIPM flow."""
    return 0.5 * v * v - 0.5 * params.omega ** 2 * x_rel * x_rel
