"""From-scratch logistic regression and one-hidden-layer MLP on numpy.

Full-batch training: every step sees the whole train mask, so steps and
epochs coincide and runs are deterministic for a fixed seed. Adam with
bias correction, inverted dropout, explicit L2 weight decay on weight
matrices (never biases), stepwise learning-rate decay, and early stopping
on validation accuracy with best-checkpoint restore.

A non-finite training loss marks the run diverged instead of raising, so
callers sweeping many configurations never abort mid-sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MlpConfig",
    "TrainedModel",
    "Metrics",
    "AdamState",
    "init_params",
    "forward",
    "loss_and_grad",
    "adam_step",
    "train",
    "evaluate",
]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class MlpConfig:
    """Training hyperparameters; hidden_dim=None selects logistic regression.

    dropout_on picks which layers get dropout when it is active: "both"
    masks inputs and hidden activations, "input" / "hidden" just one
    (a hidden-less model only ever masks inputs).
    """

    hidden_dim: int | None = None
    dropout: float = 0.5
    weight_decay: float = 0.0
    learning_rate: float = 0.01
    lr_decay_factor: float = 0.99
    lr_decay_every: int = 50
    max_epochs: int = 300
    patience: int = 30
    seed: int = 0
    dropout_on: str = "both"

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.hidden_dim is not None and self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")
        if self.dropout_on not in ("both", "input", "hidden"):
            raise ValueError("dropout_on must be both/input/hidden")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    loss: float
    tag: str


@dataclass(frozen=True)
class TrainedModel:
    """Best-validation checkpoint of a training run."""

    params: tuple[np.ndarray, ...]
    config: MlpConfig
    input_dim: int
    num_classes: int
    best_epoch: int
    best_val_accuracy: float
    diverged: bool = False

    @property
    def has_hidden(self) -> bool:
        return len(self.params) == 4


@dataclass
class AdamState:
    """Optimizer state; params are updated functionally by :func:`adam_step`."""

    params: list[np.ndarray]
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    def __post_init__(self) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in self.params]
        if not self.v:
            self.v = [np.zeros_like(p) for p in self.params]


def _as_array(features) -> np.ndarray:
    """Accept EmbeddingMatrix or ndarray; float32 stays float32."""
    values = getattr(features, "values", features)
    arr = np.asarray(values)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    return arr


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_params(
    input_dim: int,
    num_classes: int,
    hidden_dim: int | None,
    seed: int,
    dtype=np.float64,
) -> list[np.ndarray]:
    """Glorot-uniform weights, zero biases; [W, b] or [W1, b1, W2, b2].

    Draws happen in float64 regardless of ``dtype`` so the parameter values
    (up to rounding) do not depend on the training precision.
    """
    rng = np.random.default_rng(seed)
    if hidden_dim is None:
        shapes = [_glorot(rng, input_dim, num_classes), np.zeros(num_classes)]
    else:
        shapes = [
            _glorot(rng, input_dim, hidden_dim),
            np.zeros(hidden_dim),
            _glorot(rng, hidden_dim, num_classes),
            np.zeros(num_classes),
        ]
    return [p.astype(dtype) for p in shapes]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _dropout_mask(
    rng: np.random.Generator, shape, p: float, dtype: np.dtype
) -> np.ndarray:
    # inverted dropout: scale at train time so evaluation needs no correction.
    # Uniforms are drawn in the activation dtype: float32 masks halve the
    # random-bit and memory cost, which dominates wide-input training, and a
    # float64 mask would promote float32 math anyway.
    dt = np.dtype(dtype)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        dt = np.dtype(np.float64)
    return (rng.random(shape, dtype=dt) >= p) / dt.type(1.0 - p)


def _forward_raw(
    params: list[np.ndarray],
    x: np.ndarray,
    dropout: float = 0.0,
    dropout_on: str = "both",
    rng: np.random.Generator | None = None,
    want_hidden: bool = False,
):
    """Logits (and optionally the pre-softmax input representation)."""
    drop_in = dropout > 0 and rng is not None and dropout_on in ("both", "input")
    drop_hid = dropout > 0 and rng is not None and dropout_on in ("both", "hidden")
    if drop_in:
        x = x * _dropout_mask(rng, x.shape, dropout, x.dtype)
    if len(params) == 2:
        w, b = params
        logits = x @ w + b
        return (logits, x) if want_hidden else logits
    w1, b1, w2, b2 = params
    h = np.maximum(x @ w1 + b1, 0.0)
    if drop_hid:
        h = h * _dropout_mask(rng, h.shape, dropout, h.dtype)
    logits = h @ w2 + b2
    return (logits, h) if want_hidden else logits


def forward(
    model: TrainedModel, features, dropout_active: bool = False, seed: int = 0
) -> np.ndarray:
    """Row-stochastic class probabilities for every feature row."""
    x = _as_array(features)
    if not np.isfinite(x).all():
        raise ValueError("non-finite input features")
    if x.shape[1] != model.input_dim:
        raise ValueError(
            f"feature dim {x.shape[1]} does not match model input {model.input_dim}"
        )
    rng = np.random.default_rng(seed) if dropout_active else None
    dropout = model.config.dropout if dropout_active else 0.0
    logits = _forward_raw(
        list(model.params), x, dropout, model.config.dropout_on, rng
    )
    return _softmax(logits)


def _loss_grad_raw(
    params: list[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    weight_decay: float,
    dropout: float = 0.0,
    dropout_on: str = "both",
    rng: np.random.Generator | None = None,
) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy + L2 on weight matrices, with analytic gradients.

    ``x`` and ``y`` are already sliced to the training rows.
    """
    b = x.shape[0]
    drop_in = dropout > 0 and rng is not None and dropout_on in ("both", "input")
    drop_hid = dropout > 0 and rng is not None and dropout_on in ("both", "hidden")
    if drop_in:
        x = x * _dropout_mask(rng, x.shape, dropout, x.dtype)

    if len(params) == 2:
        w, bb = params
        logits = x @ w + bb
        probs = _softmax(logits)
        tiny = np.finfo(probs.dtype).tiny
        nll = -np.log(np.maximum(probs[np.arange(b), y], tiny)).mean()
        loss = nll + 0.5 * weight_decay * float(np.square(w).sum())
        dlogits = probs
        dlogits[np.arange(b), y] -= 1.0
        dlogits /= b
        gw = x.T @ dlogits + weight_decay * w
        gb = dlogits.sum(axis=0)
        return float(loss), [gw, gb]

    w1, b1, w2, b2 = params
    z1 = x @ w1 + b1
    h = np.maximum(z1, 0.0)
    if drop_hid:
        mask = _dropout_mask(rng, h.shape, dropout, h.dtype)
        h = h * mask
    logits = h @ w2 + b2
    probs = _softmax(logits)
    tiny = np.finfo(probs.dtype).tiny
    nll = -np.log(np.maximum(probs[np.arange(b), y], tiny)).mean()
    loss = nll + 0.5 * weight_decay * float(
        np.square(w1).sum() + np.square(w2).sum()
    )
    dlogits = probs
    dlogits[np.arange(b), y] -= 1.0
    dlogits /= b
    gw2 = h.T @ dlogits + weight_decay * w2
    gb2 = dlogits.sum(axis=0)
    dh = dlogits @ w2.T
    if drop_hid:
        dh = dh * mask
    dh[z1 <= 0] = 0.0
    gw1 = x.T @ dh + weight_decay * w1
    gb1 = dh.sum(axis=0)
    return float(loss), [gw1, gb1, gw2, gb2]


def loss_and_grad(
    params: list[np.ndarray],
    features,
    labels: np.ndarray,
    mask: np.ndarray,
    config: MlpConfig,
) -> tuple[float, list[np.ndarray]]:
    """Loss and exact gradients over ``mask`` rows, dropout disabled."""
    if len(mask) == 0:
        raise ValueError("empty mask")
    x = _as_array(features)[mask]
    y = labels[mask]
    return _loss_grad_raw(params, x, y, config.weight_decay)


def adam_step(state: AdamState, gradients: list[np.ndarray], lr: float) -> AdamState:
    """One bias-corrected Adam update; returns a new state."""
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    for p, g, m, v in zip(state.params, gradients, state.m, state.v):
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * np.square(g)
        p = p - lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
        new_params.append(p)
        new_m.append(m)
        new_v.append(v)
    return AdamState(new_params, new_m, new_v, t)


def _accuracy(params: list[np.ndarray], x: np.ndarray, y: np.ndarray) -> float:
    logits = _forward_raw(params, x)
    return float((logits.argmax(axis=1) == y).mean())


def train(features, labels: np.ndarray, split, config: MlpConfig):
    """Train on split.train, early-stop on split.val, report all three splits.

    Returns (TrainedModel, {"train"|"val"|"test": Metrics}). The model is
    the parameter snapshot with the best validation accuracy seen; training
    stops once that accuracy fails to improve for max(patience, 1)
    consecutive epochs, or at max_epochs. A non-finite loss flags the run
    as diverged (accuracy 0) rather than raising.
    """
    x = _as_array(features)
    y = np.asarray(labels)
    split.validate(x.shape[0])
    num_classes = int(y.max()) + 1

    x_tr, y_tr = x[split.train], y[split.train]
    x_val, y_val = x[split.val], y[split.val]

    params = init_params(
        x.shape[1], num_classes, config.hidden_dim, config.seed, dtype=x.dtype
    )
    state = AdamState(params)
    drop_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))

    lr = config.learning_rate
    best_params = [p.copy() for p in params]
    best_val = -1.0
    best_epoch = 0
    stale = 0
    diverged = False

    for epoch in range(1, config.max_epochs + 1):
        if epoch > 1 and (epoch - 1) % config.lr_decay_every == 0:
            lr *= config.lr_decay_factor
        loss, grads = _loss_grad_raw(
            state.params,
            x_tr,
            y_tr,
            config.weight_decay,
            config.dropout,
            config.dropout_on,
            drop_rng,
        )
        if not np.isfinite(loss):
            diverged = True
            break
        state = adam_step(state, grads, lr)
        val_acc = _accuracy(state.params, x_val, y_val)
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_params = [p.copy() for p in state.params]
            stale = 0
        else:
            stale += 1
            if stale >= max(config.patience, 1):
                break

    model = TrainedModel(
        params=tuple(best_params),
        config=config,
        input_dim=x.shape[1],
        num_classes=num_classes,
        best_epoch=best_epoch,
        best_val_accuracy=max(best_val, 0.0),
        diverged=diverged,
    )
    metrics = {}
    for tag, idx in (("train", split.train), ("val", split.val), ("test", split.test)):
        if diverged:
            metrics[tag] = Metrics(0.0, float("inf"), tag)
        else:
            metrics[tag] = evaluate(model, x, y, idx, tag=tag)
    return model, metrics


def evaluate(model: TrainedModel, features, labels, mask, tag: str = "test") -> Metrics:
    """Accuracy and mean cross-entropy over ``mask``, dropout off."""
    if len(mask) == 0:
        raise ValueError("empty mask")
    x = _as_array(features)[mask]
    y = np.asarray(labels)[mask]
    logits = _forward_raw(list(model.params), x)
    probs = _softmax(logits)
    nll = -np.log(np.maximum(probs[np.arange(len(y)), y], 1e-300)).mean()
    acc = float((logits.argmax(axis=1) == y).mean())
    return Metrics(acc, float(nll), tag)
