"""Sigmoid multilayer network with one hidden layer, trained online.

Training presents one pattern at a time and updates weights immediately:

    forward     h = sigmoid(x . W1),  o = sigmoid(h . W2)
    error       E(p) = 1/2 * sum((d - o)^2)
    deltas      delta_out = o*(1-o)*(d-o)
                delta_hid = h*(1-h)*(W2 . delta_out)
    updates     W2 += eta * outer(h, delta_out)
                W1 += eta * outer(x, delta_hid)

Two update orders are supported. In "sequential" mode (the default) the
hidden deltas are computed from the already-updated hidden-to-output
weights; in "simultaneous" mode both deltas come from the pre-update
weights, which makes the increments the exact gradient of E(p) and is the
mode gradient_check requires. The two agree to O(eta^2).

There are no bias terms; an always-1 input can be appended upstream when a
bias on the first layer is wanted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

SEQUENTIAL = "sequential"
SIMULTANEOUS = "simultaneous"
UPDATE_MODES = (SEQUENTIAL, SIMULTANEOUS)

SCHEMA_TAG = "pvreg-network/1"


class NetworkError(ValueError):
    """Invalid shapes, sizes, or configuration."""


def sigmoid(z):
    """Logistic function, safe against exp overflow for any finite input."""
    z = np.clip(np.asarray(z, dtype=float), -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class NetworkState:
    """Weights and hyperparameters of one network.

    w_in_hidden has shape (n_in, n_hidden) and w_hidden_out has shape
    (n_hidden, n_out). A state is exclusively owned by one training run.
    """

    n_in: int
    n_hidden: int
    n_out: int
    w_in_hidden: np.ndarray
    w_hidden_out: np.ndarray
    eta: float
    update_mode: str
    seed: Optional[int] = None

    def copy(self) -> "NetworkState":
        return NetworkState(self.n_in, self.n_hidden, self.n_out,
                            self.w_in_hidden.copy(), self.w_hidden_out.copy(),
                            self.eta, self.update_mode, self.seed)


def init_weights(sizes, seed: int, eta: float = 0.25,
                 update_mode: str = SEQUENTIAL) -> NetworkState:
    """Create a network with weights drawn uniformly from [-0.5, 0.5].

    The draw is seeded and fully deterministic: the input-to-hidden matrix is
    drawn first, then hidden-to-output. Same seed, same weights.
    """
    n_in, n_hidden, n_out = (int(s) for s in sizes)
    if min(n_in, n_hidden, n_out) < 1:
        raise NetworkError(f"all layer sizes must be >= 1, got {sizes}")
    if eta <= 0:
        raise NetworkError(f"learning factor must be > 0, got {eta}")
    if update_mode not in UPDATE_MODES:
        raise NetworkError(f"update mode must be one of {UPDATE_MODES}, got {update_mode!r}")
    rng = np.random.default_rng(seed)
    w1 = rng.uniform(-0.5, 0.5, size=(n_in, n_hidden))
    w2 = rng.uniform(-0.5, 0.5, size=(n_hidden, n_out))
    return NetworkState(n_in, n_hidden, n_out, w1, w2, float(eta), update_mode, seed)


def forward(state: NetworkState, x):
    """One forward pass; returns (hidden activations, output activations)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (state.n_in,):
        raise NetworkError(f"input length {x.shape} does not match network input size {state.n_in}")
    h = sigmoid(x @ state.w_in_hidden)
    o = sigmoid(h @ state.w_hidden_out)
    return h, o


def predict(state: NetworkState, x) -> np.ndarray:
    """Pure forward pass returning only the output activations."""
    return forward(state, x)[1]


def pattern_error(d, o) -> float:
    """Half the squared distance between desired and actual outputs."""
    d = np.asarray(d, dtype=float)
    o = np.asarray(o, dtype=float)
    if d.shape != o.shape:
        raise NetworkError(f"desired shape {d.shape} does not match output shape {o.shape}")
    diff = d - o
    return 0.5 * float(diff @ diff)


def output_delta(o, d) -> np.ndarray:
    """Output-layer node errors: o*(1-o)*(d-o)."""
    o = np.asarray(o, dtype=float)
    d = np.asarray(d, dtype=float)
    return o * (1.0 - o) * (d - o)


def hidden_delta(h, delta_out, w_hidden_out) -> np.ndarray:
    """Hidden-layer node errors: h*(1-h) * (W_hidden_out . delta_out).

    Which weights to pass is the caller's choice: the updated matrix in
    sequential mode, the pre-update matrix in simultaneous mode.
    """
    h = np.asarray(h, dtype=float)
    delta_out = np.asarray(delta_out, dtype=float)
    w = np.asarray(w_hidden_out, dtype=float)
    return h * (1.0 - h) * (w @ delta_out)


def apply_update(state: NetworkState, x, d, h, o) -> None:
    """One online weight update from given activations.

    Exposed separately from train_pattern so a single update can be driven
    with explicit hidden/output activations.
    """
    delta_o = output_delta(o, d)
    if state.update_mode == SEQUENTIAL:
        state.w_hidden_out += state.eta * np.outer(h, delta_o)
        delta_h = hidden_delta(h, delta_o, state.w_hidden_out)
    else:
        delta_h = hidden_delta(h, delta_o, state.w_hidden_out)
        state.w_hidden_out += state.eta * np.outer(h, delta_o)
    state.w_in_hidden += state.eta * np.outer(x, delta_h)


def train_pattern(state: NetworkState, x, d) -> NetworkState:
    """Present one pattern and update the weights in place."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if x.shape != (state.n_in,):
        raise NetworkError(f"input length {x.shape} does not match network input size {state.n_in}")
    if d.shape != (state.n_out,):
        raise NetworkError(f"target length {d.shape} does not match network output size {state.n_out}")
    h, o = forward(state, x)
    apply_update(state, x, d, h, o)
    return state


@dataclass(frozen=True)
class TrainingConfig:
    """Stopping rule and pattern-presentation policy for a training run."""

    target_mse: float = 0.005
    max_epochs: int = 50000
    order: str = "sequential"  # or "shuffle": seeded reshuffle every epoch
    order_seed: int = 0
    activation_sample_every: int = 0  # 0 disables activation range sampling

    def __post_init__(self):
        if self.target_mse <= 0:
            raise NetworkError(f"target MSE must be > 0, got {self.target_mse}")
        if self.max_epochs < 1:
            raise NetworkError(f"max epochs must be >= 1, got {self.max_epochs}")
        if self.order not in ("sequential", "shuffle"):
            raise NetworkError(f"order must be 'sequential' or 'shuffle', got {self.order!r}")
        if self.activation_sample_every < 0:
            raise NetworkError("activation_sample_every must be >= 0")


@dataclass(frozen=True)
class TrainingReport:
    """Everything a run produced, in normalized target space.

    mse_trace[k] is the mean of E(p) over the patterns as presented during
    epoch k+1 (each pattern's error measured just before its own update).
    best_mse_trace is the running minimum and is non-increasing.
    final_pattern_errors and final_outputs come from a forward pass with the
    final weights, in dataset order. activation_samples holds
    (epoch, min, max) over every activation seen during sampled epochs.
    """

    mse_trace: tuple
    best_mse_trace: tuple
    epochs_executed: int
    epochs_to_target: Optional[int]
    final_pattern_errors: tuple
    final_outputs: np.ndarray
    activation_samples: tuple


def train(state: NetworkState, inputs, targets, config: TrainingConfig):
    """Run online training epochs until target MSE or the epoch cap.

    inputs is (n, n_in) of featurized patterns, targets is (n, n_out).
    Patterns are presented in dataset order, or reshuffled each epoch by a
    generator seeded with config.order_seed. Deterministic for identical
    (state, data, config).
    """
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if inputs.ndim != 2 or inputs.shape[0] == 0:
        raise NetworkError("empty training data")
    if inputs.shape[1] != state.n_in:
        raise NetworkError(f"featurized length {inputs.shape[1]} does not match network input size {state.n_in}")
    if targets.shape != (inputs.shape[0], state.n_out):
        raise NetworkError(f"target shape {targets.shape} does not match ({inputs.shape[0]}, {state.n_out})")

    n = inputs.shape[0]
    rng = np.random.default_rng(config.order_seed) if config.order == "shuffle" else None
    w1, w2 = state.w_in_hidden, state.w_hidden_out
    eta = state.eta
    sequential = state.update_mode == SEQUENTIAL

    mse_trace = []
    best_trace = []
    activation_samples = []
    best = math.inf
    epochs_to_target = None

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n) if rng is not None else range(n)
        sampling = (config.activation_sample_every
                    and (epoch - 1) % config.activation_sample_every == 0)
        act_lo, act_hi = math.inf, -math.inf
        total = 0.0
        for idx in order:
            x = inputs[idx]
            d = targets[idx]
            h = sigmoid(x @ w1)
            o = sigmoid(h @ w2)
            diff = d - o
            total += 0.5 * float(diff @ diff)
            if sampling:
                act_lo = min(act_lo, float(h.min()), float(o.min()))
                act_hi = max(act_hi, float(h.max()), float(o.max()))
            delta_o = o * (1.0 - o) * diff
            if sequential:
                w2 += eta * np.outer(h, delta_o)
                delta_h = h * (1.0 - h) * (w2 @ delta_o)
            else:
                delta_h = h * (1.0 - h) * (w2 @ delta_o)
                w2 += eta * np.outer(h, delta_o)
            w1 += eta * np.outer(x, delta_h)

        mse = total / n
        mse_trace.append(mse)
        best = min(best, mse)
        best_trace.append(best)
        if sampling:
            activation_samples.append((epoch, act_lo, act_hi))
        if mse <= config.target_mse:
            epochs_to_target = epoch
            break

    final_outputs = np.array([forward(state, x)[1] for x in inputs])
    final_errors = tuple(pattern_error(d, o) for d, o in zip(targets, final_outputs))

    report = TrainingReport(
        mse_trace=tuple(mse_trace),
        best_mse_trace=tuple(best_trace),
        epochs_executed=len(mse_trace),
        epochs_to_target=epochs_to_target,
        final_pattern_errors=final_errors,
        final_outputs=final_outputs,
        activation_samples=tuple(activation_samples),
    )
    return state, report


def gradient_check(state: NetworkState, x, d, epsilon: float = 1e-5) -> float:
    """Compare analytic weight increments against finite differences of E(p).

    Requires simultaneous update mode, where the increments divided by eta
    equal the exact negative gradient of the pattern error. Returns the worst
    relative discrepancy over all weights; entries where both sides are below
    1e-8 count as zero (the gradient is indistinguishable from finite
    difference noise there).
    """
    if state.update_mode != SIMULTANEOUS:
        raise NetworkError("gradient_check requires simultaneous update mode")
    if not 1e-6 <= epsilon <= 1e-3:
        raise NetworkError(f"epsilon must be in [1e-6, 1e-3], got {epsilon}")
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)

    base = state.copy()
    stepped = train_pattern(state.copy(), x, d)

    def error_at(w1, w2) -> float:
        h = sigmoid(x @ w1)
        o = sigmoid(h @ w2)
        diff = d - o
        return 0.5 * float(diff @ diff)

    worst = 0.0
    matrices = (("w_in_hidden", base.w_in_hidden, stepped.w_in_hidden),
                ("w_hidden_out", base.w_hidden_out, stepped.w_hidden_out))
    for name, w_base, w_new in matrices:
        analytic = (w_new - w_base) / state.eta  # equals -dE/dw
        numeric = np.empty_like(w_base)
        for i, j in np.ndindex(w_base.shape):
            saved = w_base[i, j]
            w_base[i, j] = saved + epsilon
            e_plus = error_at(base.w_in_hidden, base.w_hidden_out)
            w_base[i, j] = saved - epsilon
            e_minus = error_at(base.w_in_hidden, base.w_hidden_out)
            w_base[i, j] = saved
            numeric[i, j] = -(e_plus - e_minus) / (2.0 * epsilon)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.abs(analytic - numeric) / scale
        rel[scale < 1e-8] = 0.0
        worst = max(worst, float(rel.max()))
    return worst


def state_to_dict(state: NetworkState) -> dict:
    """JSON-ready snapshot of a network, row-major weight lists."""
    return {
        "schema": SCHEMA_TAG,
        "sizes": [state.n_in, state.n_hidden, state.n_out],
        "w_in_hidden": state.w_in_hidden.tolist(),
        "w_hidden_out": state.w_hidden_out.tolist(),
        "eta": state.eta,
        "update_mode": state.update_mode,
        "seed": state.seed,
    }


def state_from_dict(d: dict) -> NetworkState:
    """Rebuild a network from a snapshot dict produced by state_to_dict."""
    if d.get("schema") != SCHEMA_TAG:
        raise NetworkError(f"unsupported network schema {d.get('schema')!r}")
    n_in, n_hidden, n_out = d["sizes"]
    w1 = np.array(d["w_in_hidden"], dtype=float)
    w2 = np.array(d["w_hidden_out"], dtype=float)
    if w1.shape != (n_in, n_hidden) or w2.shape != (n_hidden, n_out):
        raise NetworkError("weight matrix shapes do not match snapshot sizes")
    return NetworkState(n_in, n_hidden, n_out, w1, w2,
                        float(d["eta"]), d["update_mode"], d.get("seed"))
