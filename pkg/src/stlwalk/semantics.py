"""Discrete-time STL semantics over uniformly sampled traces.

Three evaluators share the same index bookkeeping:

* ``satisfies``        -- Boolean satisfaction,
* ``robustness``       -- quantitative semantics (min/max recursion),
* ``smooth_robustness``-- C-infinity surrogate where min/max become
  log-sum-exp soft operators, with reverse-mode gradients w.r.t. every
  channel sample.

Interval bounds in seconds map to sample offsets via round(t/dt).  A
formula whose outermost window would read past the trace end raises
HorizonError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .formula import (And, Always, Eventually, Formula, Not, Or, Predicate,
                      Until)


class HorizonError(ValueError):
    """Formula needs samples beyond the end of the trace."""


class TraceError(ValueError):
    pass


@dataclass(eq=False)
class Trace:
    """Uniformly sampled multi-channel signal.

    channels maps name -> 1-D float array; all arrays share one length.
    Sample k corresponds to time t0 + k*dt.
    """

    channels: dict
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise TraceError("dt must be positive")
        lengths = {len(v) for v in self.channels.values()}
        if not self.channels or len(lengths) != 1:
            raise TraceError("channels must be non-empty with equal lengths")
        (self.n,) = lengths
        if self.n < 1:
            raise TraceError("channels must hold at least one sample")
        self.channels = {k: np.asarray(v, dtype=float)
                         for k, v in self.channels.items()}

    @property
    def names(self):
        return list(self.channels.keys())

    def times(self):
        return self.t0 + self.dt * np.arange(self.n)

    def with_channels(self, extra: dict) -> "Trace":
        merged = dict(self.channels)
        merged.update(extra)
        return Trace(merged, self.dt, self.t0)


@dataclass(frozen=True)
class Robustness:
    value: float
    at_index: int


def _window(f, dt):
    i1 = int(round(f.t1 / dt))
    i2 = int(round(f.t2 / dt))
    return i1, i2


def horizon_samples(f: Formula, dt: float) -> int:
    """Number of future samples the formula needs beyond its anchor."""
    if isinstance(f, Predicate):
        return 0
    if isinstance(f, Not):
        return horizon_samples(f.child, dt)
    if isinstance(f, (And, Or)):
        return max(horizon_samples(c, dt) for c in f.children)
    if isinstance(f, (Always, Eventually)):
        return _window(f, dt)[1] + horizon_samples(f.child, dt)
    if isinstance(f, Until):
        return _window(f, dt)[1] + max(horizon_samples(f.left, dt),
                                       horizon_samples(f.right, dt))
    raise TypeError(f"not a formula node: {f!r}")


def _check_index(f, trace, k):
    valid = trace.n - horizon_samples(f, trace.dt)
    if valid <= 0:
        raise HorizonError("formula horizon exceeds trace length")
    if not (0 <= k < valid):
        raise HorizonError(f"sample index {k} outside valid range [0,{valid})")


def _channel(trace, name):
    try:
        return trace.channels[name]
    except KeyError:
        raise TraceError(f"trace has no channel {name!r}") from None


# ---------------------------------------------------------------------------
# exact semantics, vectorized bottom-up: each node yields its value on the
# whole valid prefix of the trace

def _trim(arrays):
    m = min(a.shape[0] for a in arrays)
    return [a[:m] for a in arrays]


def robustness_signal(f: Formula, trace: Trace) -> np.ndarray:
    if isinstance(f, Predicate):
        return f.a * _channel(trace, f.channel) + f.b
    if isinstance(f, Not):
        return -robustness_signal(f.child, trace)
    if isinstance(f, (And, Or)):
        kids = _trim([robustness_signal(c, trace) for c in f.children])
        op = np.minimum if isinstance(f, And) else np.maximum
        return op.reduce(kids)
    if isinstance(f, (Always, Eventually)):
        i1, i2 = _window(f, trace.dt)
        v = robustness_signal(f.child, trace)
        if v.shape[0] <= i2:
            return v[:0]
        w = sliding_window_view(v, i2 - i1 + 1)[i1:] if i1 else \
            sliding_window_view(v, i2 + 1)
        red = w.min(axis=1) if isinstance(f, Always) else w.max(axis=1)
        return red
    if isinstance(f, Until):
        i1, i2 = _window(f, trace.dt)
        left = robustness_signal(f.left, trace)
        right = robustness_signal(f.right, trace)
        m = min(left.shape[0], right.shape[0]) - i2
        out = np.empty(max(m, 0))
        for t in range(m):
            best = -math.inf
            run = math.inf
            for j in range(i2 + 1):
                if j >= i1:
                    best = max(best, min(right[t + j], run))
                run = min(run, left[t + j])
            out[t] = best
        return out
    raise TypeError(f"not a formula node: {f!r}")


def robustness(f: Formula, trace: Trace, k: int = 0) -> Robustness:
    _check_index(f, trace, k)
    return Robustness(float(robustness_signal(f, trace)[k]), k)


def satisfaction_signal(f: Formula, trace: Trace) -> np.ndarray:
    if isinstance(f, Predicate):
        return (f.a * _channel(trace, f.channel) + f.b) >= 0.0
    if isinstance(f, Not):
        return ~satisfaction_signal(f.child, trace)
    if isinstance(f, (And, Or)):
        kids = _trim([satisfaction_signal(c, trace) for c in f.children])
        op = np.logical_and if isinstance(f, And) else np.logical_or
        return op.reduce(kids)
    if isinstance(f, (Always, Eventually)):
        i1, i2 = _window(f, trace.dt)
        v = satisfaction_signal(f.child, trace)
        if v.shape[0] <= i2:
            return v[:0]
        w = sliding_window_view(v, i2 - i1 + 1)[i1:] if i1 else \
            sliding_window_view(v, i2 + 1)
        return w.all(axis=1) if isinstance(f, Always) else w.any(axis=1)
    if isinstance(f, Until):
        i1, i2 = _window(f, trace.dt)
        left = satisfaction_signal(f.left, trace)
        right = satisfaction_signal(f.right, trace)
        m = min(left.shape[0], right.shape[0]) - i2
        out = np.zeros(max(m, 0), dtype=bool)
        for t in range(m):
            run = True
            for j in range(i2 + 1):
                if j >= i1 and right[t + j] and run:
                    out[t] = True
                    break
                run = run and left[t + j]
        return out
    raise TypeError(f"not a formula node: {f!r}")


def satisfies(f: Formula, trace: Trace, k: int = 0) -> bool:
    _check_index(f, trace, k)
    return bool(satisfaction_signal(f, trace)[k])


# ---------------------------------------------------------------------------
# smooth semantics

def softmin(values: np.ndarray, beta: float, axis=-1) -> np.ndarray:
    """-(1/beta) * log sum exp(-beta * v), shifted for overflow safety."""
    v = np.asarray(values, dtype=float)
    lo = v.min(axis=axis, keepdims=True)
    s = np.exp(-beta * (v - lo)).sum(axis=axis)
    return np.squeeze(lo, axis=axis) - np.log(s) / beta


def softmax(values: np.ndarray, beta: float, axis=-1) -> np.ndarray:
    return -softmin(-np.asarray(values, dtype=float), beta, axis=axis)


def smooth_robustness_signal(f: Formula, trace: Trace, beta: float) -> np.ndarray:
    """Value-only smooth robustness over the valid trace prefix."""
    if isinstance(f, Predicate):
        return f.a * _channel(trace, f.channel) + f.b
    if isinstance(f, Not):
        return -smooth_robustness_signal(f.child, trace, beta)
    if isinstance(f, (And, Or)):
        kids = np.stack(_trim([smooth_robustness_signal(c, trace, beta)
                               for c in f.children]))
        soft = softmin if isinstance(f, And) else softmax
        return soft(kids, beta, axis=0)
    if isinstance(f, (Always, Eventually)):
        i1, i2 = _window(f, trace.dt)
        v = smooth_robustness_signal(f.child, trace, beta)
        if v.shape[0] <= i2:
            return v[:0]
        w = sliding_window_view(v, i2 - i1 + 1)[i1:] if i1 else \
            sliding_window_view(v, i2 + 1)
        soft = softmin if isinstance(f, Always) else softmax
        return soft(w, beta, axis=1)
    if isinstance(f, Until):
        i1, i2 = _window(f, trace.dt)
        left = smooth_robustness_signal(f.left, trace, beta)
        right = smooth_robustness_signal(f.right, trace, beta)
        m = min(left.shape[0], right.shape[0]) - i2
        out = np.empty(max(m, 0))
        for t in range(m):
            cands = []
            for j in range(i1, i2 + 1):
                vals = np.concatenate(([right[t + j]], left[t:t + j]))
                cands.append(softmin(vals, beta))
            out[t] = softmax(np.array(cands), beta)
        return out
    raise TypeError(f"not a formula node: {f!r}")


def smooth_robustness_value(f: Formula, trace: Trace, k: int = 0,
                            beta: float = 30.0) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    _check_index(f, trace, k)
    return float(smooth_robustness_signal(f, trace, beta)[k])


def _soft_weights(values, beta, sign):
    # sign=-1 softmin, +1 softmax; weights sum to one
    v = sign * beta * np.asarray(values, dtype=float)
    v -= v.max()
    w = np.exp(v)
    return w / w.sum()


def smooth_robustness(f: Formula, trace: Trace, k: int = 0,
                      beta: float = 30.0):
    """Smooth robustness at sample k with gradients.

    Returns (value, grads) where grads maps channel name -> array of
    per-sample partial derivatives (same length as the trace).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    _check_index(f, trace, k)
    n = trace.n
    memo = {}

    def zero_grad():
        return {}

    def add_into(acc, g, w=1.0):
        for name, arr in g.items():
            if name in acc:
                acc[name] = acc[name] + w * arr
            else:
                acc[name] = w * arr
        return acc

    def rec(node, t):
        key = (id(node), t)
        if key in memo:
            return memo[key]
        if isinstance(node, Predicate):
            y = _channel(trace, node.channel)
            g = np.zeros(n)
            g[t] = node.a
            res = (node.a * y[t] + node.b, {node.channel: g})
        elif isinstance(node, Not):
            v, g = rec(node.child, t)
            res = (-v, {nm: -arr for nm, arr in g.items()})
        elif isinstance(node, (And, Or)):
            pairs = [rec(c, t) for c in node.children]
            vals = np.array([p[0] for p in pairs])
            sign = -1.0 if isinstance(node, And) else 1.0
            soft = softmin if isinstance(node, And) else softmax
            wts = _soft_weights(vals, beta, sign)
            g = {}
            for w, (_, gi) in zip(wts, pairs):
                add_into(g, gi, w)
            res = (float(soft(vals, beta)), g)
        elif isinstance(node, (Always, Eventually)):
            i1, i2 = _window(node, trace.dt)
            pairs = [rec(node.child, t + j) for j in range(i1, i2 + 1)]
            vals = np.array([p[0] for p in pairs])
            sign = -1.0 if isinstance(node, Always) else 1.0
            soft = softmin if isinstance(node, Always) else softmax
            wts = _soft_weights(vals, beta, sign)
            g = {}
            for w, (_, gi) in zip(wts, pairs):
                add_into(g, gi, w)
            res = (float(soft(vals, beta)), g)
        elif isinstance(node, Until):
            i1, i2 = _window(node, trace.dt)
            cands = []
            for j in range(i1, i2 + 1):
                parts = [rec(node.right, t + j)]
                parts.extend(rec(node.left, t + i) for i in range(j))
                vals = np.array([p[0] for p in parts])
                wts = _soft_weights(vals, beta, -1.0)
                g = {}
                for w, (_, gi) in zip(wts, parts):
                    add_into(g, gi, w)
                cands.append((float(softmin(vals, beta)), g))
            vals = np.array([c[0] for c in cands])
            wts = _soft_weights(vals, beta, 1.0)
            g = {}
            for w, (_, gi) in zip(wts, cands):
                add_into(g, gi, w)
            res = (float(softmax(vals, beta)), g)
        else:
            raise TypeError(f"not a formula node: {node!r}")
        memo[key] = res
        return res

    value, grads = rec(f, k)
    full = {name: grads.get(name, np.zeros(n)) for name in trace.channels}
    return value, full


def smoothing_error_bound(f: Formula, dt: float, beta: float) -> float:
    """Upper bound D*ln(W)/beta on |smooth - exact| robustness.

    D counts soft (min/max) nodes along the deepest path (Until counts
    twice), W is the largest node arity with temporal windows included.
    """

    def depth_arity(node):
        if isinstance(node, Predicate):
            return 0, 1
        if isinstance(node, Not):
            return depth_arity(node.child)
        if isinstance(node, (And, Or)):
            ds, ws = zip(*(depth_arity(c) for c in node.children))
            return 1 + max(ds), max(len(node.children), *ws)
        if isinstance(node, (Always, Eventually)):
            i1, i2 = _window(node, dt)
            d, w = depth_arity(node.child)
            return 1 + d, max(i2 - i1 + 1, w)
        if isinstance(node, Until):
            i1, i2 = _window(node, dt)
            dl, wl = depth_arity(node.left)
            dr, wr = depth_arity(node.right)
            return 2 + max(dl, dr), max(i2 - i1 + 1, i2 + 1, wl, wr)
        raise TypeError(f"not a formula node: {node!r}")

    d, w = depth_arity(f)
    if d == 0:
        return 0.0
    return d * math.log(max(w, 2)) / beta
