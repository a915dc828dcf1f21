"""Leg self-collision: capsule oracle, dataset sampling, and a small MLP.

Each leg is a capsule from its hip point (pelvis frame, lateral offset
+/- hip_offset/2 at the CoM height) to its foot point.  The ground-truth
margin is the segment-segment distance minus the radius sum.  A small
multi-layer perceptron regresses this margin from the six reduced-state
features so the planner gets a cheap differentiable constraint, mirroring
a setup where the true detector is an expensive full-body check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .reduced_model import LEFT, ReducedState


@dataclass(frozen=True)
class LegGeometry:
    hip_offset: float = 0.18     # lateral hip separation [m]
    leg_radius: float = 0.04     # capsule radius per leg [m]
    pelvis_height: float = 0.9   # hip height, shared with ModelParams.h [m]

    def __post_init__(self):
        if self.hip_offset <= 0 or self.leg_radius <= 0 or self.pelvis_height <= 0:
            raise ValueError("leg geometry fields must be positive")


def segment_distance(p1, q1, p2, q2) -> float:
    """Minimum distance between segments [p1,q1] and [p2,q2] in 3-D.

    Clamped closest-point parameterization; degenerate (zero-length)
    segments fall back to point distances.
    """
    p1 = np.asarray(p1, float)
    q1 = np.asarray(q1, float)
    p2 = np.asarray(p2, float)
    q2 = np.asarray(q2, float)
    u = q1 - p1
    v = q2 - p2
    w0 = p1 - p2
    a = u @ u
    b = u @ v
    c = v @ v
    d = u @ w0
    e = v @ w0
    denom = a * c - b * b
    eps = 1e-12

    if a < eps and c < eps:
        return float(np.linalg.norm(w0))
    if a < eps:
        t = np.clip(e / c, 0.0, 1.0)
        return float(np.linalg.norm(p1 - (p2 + t * v)))
    if c < eps:
        s = np.clip(-d / a, 0.0, 1.0)
        return float(np.linalg.norm((p1 + s * u) - p2))

    if denom > eps:
        s = np.clip((b * e - c * d) / denom, 0.0, 1.0)
    else:
        s = 0.0  # near-parallel lines
    t = (b * s + e) / c
    if t < 0.0:
        t = 0.0
        s = np.clip(-d / a, 0.0, 1.0)
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - d) / a, 0.0, 1.0)
    return float(np.linalg.norm((p1 + s * u) - (p2 + t * v)))


FEATURE_NAMES = ("rel_x", "rel_y", "swing_rel_x", "swing_rel_y",
                 "swing_z", "stance_sign")


def features_of(state: ReducedState) -> np.ndarray:
    """Six collision features, all relative to the stance foot."""
    rel = state.com_pos - state.stance_pos
    srel = state.swing_pos[:2] - state.stance_pos
    sign = 1.0 if state.stance_leg == LEFT else -1.0
    return np.array([rel[0], rel[1], srel[0], srel[1],
                     state.swing_pos[2], sign])


def margin_from_features(f, geom: LegGeometry) -> float:
    """Capsule margin reconstructed from the six features.

    Coordinates are stance-foot relative; the stance hip sits on the
    stance-leg side of the pelvis (+y for left stance).
    """
    rel_x, rel_y, sx, sy, sz, sign = f
    half = 0.5 * geom.hip_offset
    h = geom.pelvis_height
    stance_hip = np.array([rel_x, rel_y + sign * half, h])
    swing_hip = np.array([rel_x, rel_y - sign * half, h])
    stance_foot = np.zeros(3)
    swing_foot = np.array([sx, sy, sz])
    d = segment_distance(stance_hip, stance_foot, swing_hip, swing_foot)
    return d - 2.0 * geom.leg_radius


def capsule_margin(state: ReducedState, geom: LegGeometry) -> float:
    """Ground-truth signed leg clearance in meters (negative = overlap)."""
    return margin_from_features(features_of(state), geom)


def capsule_margins_from_trace(trace, geom: LegGeometry) -> np.ndarray:
    """Per-sample ground-truth margins for a rollout trace."""
    ch = trace.channels
    sign = np.where(ch["stance_left"] > 0.5, 1.0, -1.0)
    feats = np.stack([ch["rel_x"], ch["rel_y"],
                      ch["swing_x"] - ch["foot_x"],
                      ch["swing_y"] - ch["foot_y"],
                      ch["swing_z"], sign], axis=1)
    return np.array([margin_from_features(f, geom) for f in feats])


DEFAULT_RANGES = {
    "rel_x": (-0.4, 0.4),
    "rel_y": (-0.3, 0.3),
    "swing_rel_x": (-0.8, 0.8),
    "swing_rel_y": (-0.6, 0.6),
    "swing_z": (0.0, 0.25),
}


def sample_dataset(n: int, geom: LegGeometry, ranges=None, seed: int = 0):
    """Seeded uniform dataset of (features, capsule margin) pairs.

    A quarter of the samples is forced near the decision boundary by
    rejection (half of those with negative margin) so the regressor sees
    both classes well.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    ranges = dict(DEFAULT_RANGES, **(ranges or {}))
    rng = np.random.default_rng(seed)
    lo = np.array([ranges[k][0] for k in FEATURE_NAMES[:5]])
    hi = np.array([ranges[k][1] for k in FEATURE_NAMES[:5]])

    def draw(count):
        f5 = rng.uniform(lo, hi, size=(count, 5))
        sign = rng.choice([-1.0, 1.0], size=(count, 1))
        X = np.hstack([f5, sign])
        y = np.array([margin_from_features(f, geom) for f in X])
        return X, y

    n_neg = max(1, int(round(0.125 * n)))
    n_bnd = max(1, int(round(0.125 * n)))
    band = 0.04
    n_bulk = n - n_neg - n_bnd

    Xb, yb = draw(n_bulk)
    parts_X, parts_y = [Xb], [yb]
    for count, pred in ((n_neg, lambda y: y < 0.0),
                        (n_bnd, lambda y: (y >= 0.0) & (y < band))):
        got_X, got_y = [], []
        remaining = count
        while remaining > 0:
            X, y = draw(max(4 * remaining, 256))
            keep = np.nonzero(pred(y))[0][:remaining]
            got_X.append(X[keep])
            got_y.append(y[keep])
            remaining -= keep.size
        parts_X.append(np.vstack(got_X))
        parts_y.append(np.concatenate(got_y))
    X = np.vstack(parts_X)
    y = np.concatenate(parts_y)
    perm = rng.permutation(n)
    return X[perm], y[perm]


def save_dataset_csv(path, X, y):
    header = ",".join(FEATURE_NAMES) + ",margin"
    np.savetxt(path, np.column_stack([X, y]), delimiter=",",
               header=header, comments="")


def load_dataset_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, :6], data[:, 6]


class Mlp:
    """Fully connected regressor, tanh hidden layers, linear output.

    Inputs are standardized with statistics stored alongside the weights;
    the output is the raw margin in meters.
    """

    def __init__(self, weights, biases, x_mean, x_std, activation="tanh"):
        if activation != "tanh":
            raise ValueError(f"unsupported activation {activation!r}")
        self.weights = [np.asarray(w, float) for w in weights]
        self.biases = [np.asarray(b, float) for b in biases]
        self.x_mean = np.asarray(x_mean, float)
        self.x_std = np.asarray(x_std, float)
        self.activation = activation
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise ValueError("inconsistent layer shapes")
        for wa, wb in zip(self.weights, self.weights[1:]):
            if wa.shape[1] != wb.shape[0]:
                raise ValueError("inconsistent layer shapes")

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, X: np.ndarray) -> np.ndarray:
        """Batch forward pass; X is (n, 6) raw features."""
        a = (np.atleast_2d(X) - self.x_mean) / self.x_std
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.tanh(a @ w + b)
        out = a @ self.weights[-1] + self.biases[-1]
        return out[:, 0]

    def forward_grad(self, x: np.ndarray):
        """Value and gradient w.r.t. the six raw features at one point."""
        x = np.asarray(x, float)
        a = (x - self.x_mean) / self.x_std
        acts = [a]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.tanh(a @ w + b)
            acts.append(a)
        value = float(a @ self.weights[-1][:, 0] + self.biases[-1][0])
        g = self.weights[-1][:, 0]
        for w, act in zip(reversed(self.weights[:-1]), reversed(acts[1:])):
            g = w @ (g * (1.0 - act ** 2))
        return value, g / self.x_std

    def to_json(self) -> str:
        return json.dumps({
            "layer_sizes": self.layer_sizes,
            "activation": self.activation,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Mlp":
        d = json.loads(text)
        sizes = d["layer_sizes"]
        weights = [np.array(w).reshape(m, n) for w, m, n in
                   zip(d["weights"], sizes[:-1], sizes[1:])]
        return cls(weights, [np.array(b) for b in d["biases"]],
                   d["x_mean"], d["x_std"], d["activation"])

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "Mlp":
        with open(path) as fh:
            return cls.from_json(fh.read())


class TrainingDiverged(RuntimeError):
    pass


def train_mlp(X, y, layers=(32, 32), epochs: int = 200, seed: int = 0,
              lr: float = 0.2, momentum: float = 0.9,
              batch_size: int = 128) -> Mlp:
    """Mini-batch gradient descent with momentum on the margin MSE.

    80/20 train/validation split; returns the parameters with the best
    validation loss.  Deterministic for a fixed seed.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    n_train = max(1, int(round(0.8 * n)))
    perm = rng.permutation(n)
    tr, va = perm[:n_train], perm[n_train:]
    if va.size == 0:
        va = tr

    x_mean = X[tr].mean(axis=0)
    x_std = X[tr].std(axis=0)
    x_std[x_std < 1e-9] = 1.0
    Xtr = (X[tr] - x_mean) / x_std
    ytr = y[tr]
    Xva = (X[va] - x_mean) / x_std
    yva = y[va]

    sizes = [X.shape[1], *layers, 1]
    weights = [rng.normal(0.0, np.sqrt(1.0 / m), size=(m, k))
               for m, k in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(k) for k in sizes[1:]]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    def val_loss():
        a = Xva
        for w, b in zip(weights[:-1], biases[:-1]):
            a = np.tanh(a @ w + b)
        pred = (a @ weights[-1] + biases[-1])[:, 0]
        return float(np.mean((pred - yva) ** 2))

    initial = best = val_loss()
    best_params = ([w.copy() for w in weights], [b.copy() for b in biases])
    n_batches = max(1, Xtr.shape[0] // batch_size)

    for epoch in range(epochs):
        order = rng.permutation(Xtr.shape[0])
        step = lr / (1.0 + 4.0 * epoch / max(epochs, 1))
        for bi in range(n_batches):
            idx = order[bi * batch_size:(bi + 1) * batch_size]
            xb, yb = Xtr[idx], ytr[idx]

            acts = [xb]
            a = xb
            for w, b in zip(weights[:-1], biases[:-1]):
                a = np.tanh(a @ w + b)
                acts.append(a)
            pred = (a @ weights[-1] + biases[-1])[:, 0]
            delta = (2.0 / xb.shape[0]) * (pred - yb)[:, None]

            grads_w, grads_b = [], []
            g = delta
            for li in range(len(weights) - 1, -1, -1):
                grads_w.append(acts[li].T @ g)
                grads_b.append(g.sum(axis=0))
                if li > 0:
                    g = (g @ weights[li].T) * (1.0 - acts[li] ** 2)
            grads_w.reverse()
            grads_b.reverse()

            for li in range(len(weights)):
                vel_w[li] = momentum * vel_w[li] - step * grads_w[li]
                vel_b[li] = momentum * vel_b[li] - step * grads_b[li]
                weights[li] += vel_w[li]
                biases[li] += vel_b[li]

        loss = val_loss()
        if loss < best:
            best = loss
            best_params = ([w.copy() for w in weights],
                           [b.copy() for b in biases])

    if best > initial:
        raise TrainingDiverged(
            f"validation loss rose from {initial:.3e} to {best:.3e}")
    return Mlp(best_params[0], best_params[1], x_mean, x_std)


def mlp_margin(net: Mlp, state: ReducedState):
    """Learned margin and its gradient w.r.t. the six features."""
    return net.forward_grad(features_of(state))
