"""Locomotion specification: foot bounds, keyframe, and Riemannian region.

Builds the walking formula

    (always foot inside the treadmill) and
    (eventually a keyframe with both orbital-energy channels in-region)

over the rollout channels, and provides the normalized margin to the
region bounds that the MPC maximizes.  The robust region is expressed in
orbital-energy coordinates sigma = v^2 - omega^2 * x_rel^2, which are
invariant along the unforced LIPM flow and make the region membership an
affine check on a precomputed channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .formula import And, Always, Eventually, Formula, Predicate
from .reduced_model import (LEFT, ControlInput, ModelParams, ReducedState,
                            flow_state, rollout, swing_trajectory)
from .semantics import Trace


class GaitError(ValueError):
    """No periodic gait exists for the requested parameters."""


@dataclass(frozen=True)
class FootBound:
    """Axis-aligned world-frame rectangle the feet must stay inside."""

    x_min: float = -2.0
    x_max: float = 2.0
    y_min: float = -0.5
    y_max: float = 0.5

    def __post_init__(self):
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError("degenerate foot-bound rectangle")

    def clamp(self, p):
        return np.array([min(max(p[0], self.x_min), self.x_max),
                         min(max(p[1], self.y_min), self.y_max)])

    def contains(self, p, tol=0.0):
        return (self.x_min - tol <= p[0] <= self.x_max + tol and
                self.y_min - tol <= p[1] <= self.y_max + tol)


@dataclass(frozen=True)
class GaitParams:
    step_length: float = 0.25    # sagittal travel per step [m]; 0 = in place
    step_width: float = 0.2      # lateral distance between feet [m]
    nominal_T: float = 0.4      # nominal step duration [s]
    keyframe_tol: float = 0.01  # |rel_x| tolerance marking a keyframe [m]


@dataclass(frozen=True)
class RiemannianRegion:
    """Orbital-energy bounds certifying a stable keyframe.

    sigma_sag/sigma_lat are (lo, hi) in m^2/s^2; normalizer holds the
    per-axis scale dividing the raw margins, so distances are O(1).
    """

    sigma_sag: tuple
    sigma_lat: tuple
    normalizer: tuple
    omega: float

    def __post_init__(self):
        for lo, hi in (self.sigma_sag, self.sigma_lat):
            if lo >= hi:
                raise ValueError("region bounds must satisfy lo < hi")


@dataclass(frozen=True)
class NominalGait:
    """Periodic-gait solution of the step-to-step LIPM equations."""

    keyframe_state: ReducedState   # left-stance apex, stance at (0, W/2)
    vx_apex: float                 # sagittal CoM velocity at the keyframe
    rel_y_apex: float              # CoM lateral offset from the stance foot
    start_rel: np.ndarray          # (rel_x, rel_y) at step start
    start_vel: np.ndarray          # CoM velocity at step start
    sigma_sag: float               # orbital-energy coordinates at keyframe
    sigma_lat: float
    gait: GaitParams

    def foothold_offset(self, stance_leg: str) -> np.ndarray:
        """Offset of the next foothold from the current stance foot."""
        sign = 1.0 if stance_leg == LEFT else -1.0
        return np.array([self.gait.step_length, -sign * self.gait.step_width])


def nominal_gait(gait: GaitParams, params: ModelParams,
                 swing_apex: float = 0.08) -> NominalGait:
    """Solve the LIPM step-to-step periodicity conditions.

    Sagittal: the step starts at rel_x = -L/2 and the keyframe (rel_x = 0,
    velocity L*w / (2 sinh(wT/2))) sits at mid-step.  Lateral: the CoM
    oscillates between the feet, reaching rel_y = -/+ (W/2)/cosh(wT/2)
    with zero lateral velocity at the keyframe.
    """
    if gait.step_width <= 0:
        raise GaitError("step_width must be positive")
    if gait.step_length < 0:
        raise GaitError("step_length must be non-negative")
    if not (params.t_min - 1e-9 <= gait.nominal_T <= params.t_max + 1e-9):
        raise GaitError(
            f"nominal_T {gait.nominal_T} outside [{params.t_min}, {params.t_max}]")

    w = params.omega
    u = 0.5 * w * gait.nominal_T
    L, W = gait.step_length, gait.step_width

    vx_apex = L * w / (2.0 * math.sinh(u)) if L > 0 else 0.0
    rel_y_apex_left = -(W / 2.0) / math.cosh(u)   # left stance: foot at +y side

    # step-start state (just after touchdown), left stance
    start_rel = np.array([-L / 2.0, -W / 2.0])
    v0x = (L / 2.0) * w * math.cosh(u) / math.sinh(u) if L > 0 else 0.0
    v0y = (W / 2.0) * w * math.tanh(u)
    start_vel = np.array([v0x, v0y])

    stance = np.array([0.0, W / 2.0])
    com = stance + np.array([0.0, rel_y_apex_left])
    vel = np.array([vx_apex, 0.0])
    # swing foot mid-flight from the previous (right) foothold to the next
    prev_foot = stance + np.array([-L, -W])
    next_foot = stance + np.array([L, -W])
    swing = swing_trajectory(np.array([prev_foot[0], prev_foot[1], 0.0]),
                             next_foot, swing_apex, 0.5)
    keyframe = ReducedState(com_pos=com, com_vel=vel, swing_pos=swing,
                            stance_pos=stance, stance_leg=LEFT, phase=0.5)

    sigma_sag = vx_apex ** 2
    sigma_lat = -(w * rel_y_apex_left) ** 2

    return NominalGait(keyframe_state=keyframe, vx_apex=vx_apex,
                       rel_y_apex=rel_y_apex_left, start_rel=start_rel,
                       start_vel=start_vel, sigma_sag=sigma_sag,
                       sigma_lat=sigma_lat, gait=gait)


def nominal_plan(ng: NominalGait, state: ReducedState, gait: GaitParams,
                 n_steps: int, swing_apex: float = 0.08):
    """Chain of nominal step inputs starting from the given stance."""
    plan = []
    stance = np.asarray(state.stance_pos, dtype=float)
    leg = state.stance_leg
    for _ in range(n_steps):
        foothold = stance + ng.foothold_offset(leg)
        plan.append(ControlInput(tuple(foothold), gait.nominal_T, swing_apex))
        stance = foothold
        leg = "right" if leg == LEFT else LEFT
    return plan


def calibrate_region(gait: GaitParams, params: ModelParams,
                     margin_frac: float = 0.5,
                     floor: float = 0.05) -> RiemannianRegion:
    """Region bounds at nominal sigma +/- max(margin_frac*|sigma|, floor)."""
    ng = nominal_gait(gait, params)
    out = []
    scales = []
    for sigma in (ng.sigma_sag, ng.sigma_lat):
        half = max(margin_frac * abs(sigma), floor)
        out.append((sigma - half, sigma + half))
        scales.append(half)
    return RiemannianRegion(sigma_sag=out[0], sigma_lat=out[1],
                            normalizer=tuple(scales), omega=params.omega)


def riemannian_channels(trace: Trace, params: ModelParams) -> Trace:
    """Append the orbital-energy channels riem_sag and riem_lat."""
    for name in ("rel_x", "rel_y", "com_vx", "com_vy"):
        if name not in trace.channels:
            raise ValueError(f"trace is missing channel {name!r}")
    w2 = params.omega ** 2
    sag = trace.channels["com_vx"] ** 2 - w2 * trace.channels["rel_x"] ** 2
    lat = trace.channels["com_vy"] ** 2 - w2 * trace.channels["rel_y"] ** 2
    return trace.with_channels({"riem_sag": sag, "riem_lat": lat})


def _ge(channel, lo, scale):
    # channel >= lo, normalized
    return Predicate(channel, 1.0 / scale, -lo / scale, scale=scale)


def _le(channel, hi, scale):
    # channel <= hi, normalized
    return Predicate(channel, -1.0 / scale, hi / scale, scale=scale)


# Normalizer for the foot-bound atoms.  A fixed clearance scale (rather
# than the bound half-width) keeps these atoms non-binding at the nominal
# gait, so the robustness gradient there comes from the keyframe/region
# atoms, which peak exactly at the nominal decision.
FOOT_SCALE = 0.1


def foot_formula(bound: FootBound) -> Formula:
    return And((
        _ge("foot_x", bound.x_min, FOOT_SCALE),
        _le("foot_x", bound.x_max, FOOT_SCALE),
        _ge("foot_y", bound.y_min, FOOT_SCALE),
        _le("foot_y", bound.y_max, FOOT_SCALE),
    ))


def keyframe_formula(gait: GaitParams) -> Formula:
    eps = gait.keyframe_tol
    return And((_ge("rel_x", -eps, eps), _le("rel_x", eps, eps)))


def region_formula(region: RiemannianRegion) -> Formula:
    (slo, shi), (llo, lhi) = region.sigma_sag, region.sigma_lat
    ns, nl = region.normalizer
    return And((
        _ge("riem_sag", slo, ns), _le("riem_sag", shi, ns),
        _ge("riem_lat", llo, nl), _le("riem_lat", lhi, nl),
    ))


def build_loco_spec(bound: FootBound, region: RiemannianRegion,
                    gait: GaitParams, horizon_T: float) -> Formula:
    """(G[0,H] foot-in-bounds) & F[0,H](keyframe & in-region)."""
    stable = And(keyframe_formula(gait).children +
                 region_formula(region).children)
    return And((
        Always(0.0, horizon_T, foot_formula(bound)),
        Eventually(0.0, horizon_T, stable),
    ))


def capture_point_foothold(state: ReducedState, ng: NominalGait,
                           params: ModelParams) -> np.ndarray:
    """Capture-point step target: com + vel/omega plus the nominal offset.

    The offset is calibrated per phase so any on-orbit nominal state maps
    exactly to the nominal next foothold: the divergent mode component
    xi+ = rel + v/omega grows as e^(omega*tau) along the flow, so the
    nominal capture point at the current phase is the step-start value
    propagated forward.  The lateral sign follows the stance leg.
    """
    w = params.omega
    cp = state.com_pos + state.com_vel / w
    sign = state.stance_sign
    # divergent-mode coordinate of the nominal step-start state, then
    # propagated to the current phase to get the on-orbit capture point
    # relative to the stance foot
    xi0 = np.array([ng.start_rel[0] + ng.start_vel[0] / w,
                    sign * (ng.start_rel[1] + ng.start_vel[1] / w)])
    cp_rel_nom = xi0 * math.exp(w * state.phase * ng.gait.nominal_T)
    offset = ng.foothold_offset(state.stance_leg) - cp_rel_nom
    return cp + offset


def sigma_coords(state: ReducedState, omega: float):
    rel = state.com_pos - state.stance_pos
    sag = state.com_vel[0] ** 2 - (omega * rel[0]) ** 2
    lat = state.com_vel[1] ** 2 - (omega * rel[1]) ** 2
    return sag, lat


def riemannian_distance(state: ReducedState, region: RiemannianRegion) -> float:
    """Normalized signed margin to the nearest region bound.

    Positive inside the region, negative outside; evaluated at a keyframe
    state (|rel_x| within the keyframe tolerance).
    """
    sag, lat = sigma_coords(state, region.omega)
    ns, nl = region.normalizer
    margins = (
        (sag - region.sigma_sag[0]) / ns,
        (region.sigma_sag[1] - sag) / ns,
        (lat - region.sigma_lat[0]) / nl,
        (region.sigma_lat[1] - lat) / nl,
    )
    return float(min(margins))
