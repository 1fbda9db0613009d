"""Small feed-forward softmax classifier with hand-written gradients.

The network is an MLP: ReLU hidden layers, softmax output. Everything is
float64 numpy so gradients can be checked against finite differences at
tight tolerances. The last hidden layer doubles as the feature embedding
used for nearest-neighbor search.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

# log() arguments are clamped here to keep losses finite
PROB_FLOOR = 1e-12

CHECKPOINT_MAGIC = b"INNM"
CHECKPOINT_VERSION = 1

LOSS_KINDS = ("ce", "cene", "mixup")


@dataclass
class Model:
    """MLP parameters. weights[l] has shape (fan_in, fan_out).

    activations holds one identifier per hidden layer ("relu" or "sin");
    frozen_layers lists layer indices excluded from training updates.
    A frozen sinusoidal first layer acts as a random-feature lift: it is
    bandlimited by its weight scale, bounded in [-1, 1], and gives the
    net high-frequency capacity at low input dimension.
    """

    layer_dims: list
    weights: list
    biases: list
    activations: tuple = ()
    frozen_layers: tuple = ()

    def __post_init__(self):
        n_hidden = len(self.layer_dims) - 2
        if not self.activations:
            self.activations = ("relu",) * n_hidden
        if len(self.activations) != n_hidden:
            raise ValueError("need one activation id per hidden layer")
        for act in self.activations:
            if act not in ("relu", "sin"):
                raise ValueError(f"unknown activation {act!r}")

    @property
    def input_dim(self):
        return self.layer_dims[0]

    @property
    def n_classes(self):
        return self.layer_dims[-1]

    @property
    def feature_dim(self):
        # penultimate width; for a linear model the input itself is the feature
        return self.layer_dims[-2]

    def copy(self):
        return Model(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            tuple(self.activations),
            tuple(self.frozen_layers),
        )

    def forward(self, inputs):
        """Return (probs, features) for a batch of inputs.

        probs is row-stochastic (n, K); features are the activations of
        the last hidden layer (n, feature_dim).
        """
        X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise ValueError(
                f"input dim {X.shape[1]} does not match model dim {self.input_dim}"
            )
        A = X
        for act, W, b in zip(self.activations, self.weights[:-1], self.biases[:-1]):
            Z = A @ W + b
            A = np.sin(Z) if act == "sin" else np.maximum(Z, 0.0)
        logits = A @ self.weights[-1] + self.biases[-1]
        return _softmax(logits), A

    def predict_proba(self, inputs):
        return self.forward(inputs)[0]

    def penultimate(self, inputs):
        return self.forward(inputs)[1]


@dataclass
class TrainConfig:
    loss_kind: str = "ce"
    epochs: int = 100
    batch_size: int = 128
    lr0: float = 0.02
    momentum: float = 0.9
    lr_drop_factor: float = 5.0
    mixup_alpha: float = 1.0
    seed: int = 0
    checkpoint_every: int | None = None

    def validate(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss_kind {self.loss_kind!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.lr0 <= 0 or self.lr_drop_factor <= 0 or self.mixup_alpha <= 0:
            raise ValueError("lr0, lr_drop_factor and mixup_alpha must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be positive or None")

    def to_dict(self):
        return {
            "loss_kind": self.loss_kind,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr0": self.lr0,
            "momentum": self.momentum,
            "lr_drop_factor": self.lr_drop_factor,
            "mixup_alpha": self.mixup_alpha,
            "seed": self.seed,
            "checkpoint_every": self.checkpoint_every,
        }


@dataclass
class OptState:
    """Per-parameter momentum buffers, shapes mirroring the model."""

    vel_w: list = field(default_factory=list)
    vel_b: list = field(default_factory=list)

    @classmethod
    def for_model(cls, model):
        return cls(
            [np.zeros_like(w) for w in model.weights],
            [np.zeros_like(b) for b in model.biases],
        )


@dataclass
class TrainResult:
    model: Model
    checkpoints: list  # (completed epoch, Model snapshot)


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def init_model(layer_dims, seed, lift_freq=0.0):
    """Fan-in scaled uniform init: W ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), b = 0.

    With lift_freq > 0 the first hidden layer becomes a frozen sinusoidal
    random-feature lift: weights ~ N(0, lift_freq^2), phases ~ U(-pi, pi),
    activation sin, excluded from training. lift_freq sets the spatial
    frequency of the features; roughly the reciprocal of the finest input
    scale the network should resolve.
    """
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ValueError("layer_dims needs at least input and output sizes")
    if any(d <= 0 for d in dims):
        raise ValueError("all layer dims must be positive")
    if lift_freq < 0:
        raise ValueError("lift_freq must be nonnegative")
    if lift_freq > 0 and len(dims) < 3:
        raise ValueError("a lift layer needs at least one hidden layer")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for layer, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if layer == 0 and lift_freq > 0:
            weights.append(rng.normal(0.0, lift_freq, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-np.pi, np.pi, size=fan_out))
        else:
            scale = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
    n_hidden = len(dims) - 2
    if lift_freq > 0:
        activations = ("sin",) + ("relu",) * (n_hidden - 1)
        return Model(dims, weights, biases, activations, frozen_layers=(0,))
    return Model(dims, weights, biases)


def forward(model, inputs):
    return model.forward(inputs)


def mixup_batch(inputs_a, targets_a, inputs_b, targets_b, lam):
    """Convex-combine two aligned batches with a single mixing weight."""
    xa = np.asarray(inputs_a, dtype=np.float64)
    xb = np.asarray(inputs_b, dtype=np.float64)
    ta = np.asarray(targets_a, dtype=np.float64)
    tb = np.asarray(targets_b, dtype=np.float64)
    if xa.shape != xb.shape or ta.shape != tb.shape or xa.shape[0] != ta.shape[0]:
        raise ValueError("mixup batches must have identical shapes")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    return lam * xa + (1.0 - lam) * xb, lam * ta + (1.0 - lam) * tb


def _target_matrix(model, targets, loss_kind):
    targets = np.asarray(targets)
    if loss_kind == "mixup":
        if targets.ndim != 2 or targets.shape[1] != model.n_classes:
            raise ValueError("mixup targets must be (n, K) soft labels")
        return targets.astype(np.float64)
    if targets.ndim != 1:
        raise ValueError("ce/cene targets must be integer class labels")
    if targets.min() < 0 or targets.max() >= model.n_classes:
        raise ValueError("labels out of range for model output size")
    return one_hot(targets, model.n_classes)


def loss_and_grad(model, inputs, targets, loss_kind):
    """Mean loss over the batch plus gradients mirroring the model shapes.

    ce:    cross-entropy against integer labels
    cene:  cross-entropy plus negative entropy of the prediction
    mixup: cross-entropy against soft (mixed) targets
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    T = _target_matrix(model, targets, loss_kind)

    # forward with cached activations
    acts = [X]
    pre = []
    A = X
    for act, W, b in zip(model.activations, model.weights[:-1], model.biases[:-1]):
        Z = A @ W + b
        pre.append(Z)
        A = np.sin(Z) if act == "sin" else np.maximum(Z, 0.0)
        acts.append(A)
    logits = A @ model.weights[-1] + model.biases[-1]
    probs = _softmax(logits)

    n = X.shape[0]
    logp = np.log(np.maximum(probs, PROB_FLOOR))
    ce = -(T * logp).sum(axis=1)
    if loss_kind == "cene":
        neg_ent = (probs * logp).sum(axis=1)
        per_sample = ce + neg_ent
        # d/dlogits of sum_k p_k log p_k
        d_logits = (probs - T) + probs * (logp - neg_ent[:, None])
    else:
        per_sample = ce
        d_logits = probs - T
    loss = per_sample.mean()
    if not np.isfinite(loss):
        raise NumericError("non-finite loss; model parameters diverged")

    d_logits = d_logits / n
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = d_logits
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            local = (
                np.cos(pre[layer - 1])
                if model.activations[layer - 1] == "sin"
                else (pre[layer - 1] > 0)
            )
            delta = (delta @ model.weights[layer].T) * local
    return loss, list(zip(grads_w, grads_b))


def learning_rate(epoch, config):
    """Step schedule: drops by lr_drop_factor at floor(T/2) and floor(3T/4)."""
    T = config.epochs
    if epoch < T // 2:
        return config.lr0
    if epoch < (3 * T) // 4:
        return config.lr0 / config.lr_drop_factor
    return config.lr0 / config.lr_drop_factor**2


def train(model, dataset, config):
    """SGD-with-momentum training loop; returns final model and checkpoints.

    Shuffling, mixup pairing and mixing weights all come from one
    generator seeded with config.seed, so a fixed (seed, config, dataset)
    reproduces the final parameters bit for bit.
    """
    config.validate()
    X = dataset.features
    y = dataset.observed_labels
    if y.min() < 0 or y.max() >= model.n_classes:
        raise ValueError("dataset labels out of range for model")

    model = model.copy()
    opt = OptState.for_model(model)
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    checkpoints = []

    for epoch in range(config.epochs):
        lr = learning_rate(epoch, config)
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = X[idx], y[idx]
            if config.loss_kind == "mixup":
                lam = rng.beta(config.mixup_alpha, config.mixup_alpha)
                partner = rng.permutation(idx.shape[0])
                tb = one_hot(yb, model.n_classes)
                xb, tb = mixup_batch(xb, tb, xb[partner], tb[partner], lam)
                loss, grads = loss_and_grad(model, xb, tb, "mixup")
            else:
                loss, grads = loss_and_grad(model, xb, yb, config.loss_kind)
            if not np.isfinite(loss):
                raise NumericError(f"training diverged at epoch {epoch}")
            for layer, (gw, gb) in enumerate(grads):
                if layer in model.frozen_layers:
                    continue
                opt.vel_w[layer] = config.momentum * opt.vel_w[layer] + gw
                opt.vel_b[layer] = config.momentum * opt.vel_b[layer] + gb
                model.weights[layer] -= lr * opt.vel_w[layer]
                model.biases[layer] -= lr * opt.vel_b[layer]
        done = epoch + 1
        if config.checkpoint_every and done % config.checkpoint_every == 0:
            checkpoints.append((done, model.copy()))

    return TrainResult(model, checkpoints)


def per_sample_loss(model, dataset, loss_kind):
    """Per-sample training-objective values (ce or cene), one per row.

    Small values mean the sample is fit well; downstream ranking treats
    the negated loss as the cleanliness score.
    """
    if loss_kind not in ("ce", "cene"):
        raise ValueError("per-sample losses are defined for ce and cene only")
    probs = model.predict_proba(dataset.features)
    logp = np.log(np.maximum(probs, PROB_FLOOR))
    ce = -logp[np.arange(dataset.n), dataset.observed_labels]
    if loss_kind == "ce":
        return ce
    return ce + (probs * logp).sum(axis=1)


# --- checkpoint files -------------------------------------------------
#
# Binary layout (little endian):
#   4 bytes magic "INNM" | u32 version | u32 layer count (len(layer_dims))
#   | u32 * layer_dims | per layer: W row-major f64, then b f64
# Version 2 models (non-relu or frozen hidden layers) insert one u8 code
# per hidden layer after the dims: bit0 = sin activation, bit1 = frozen.
# A JSON sidecar (same path + ".json") carries the epoch and config echo.


def save_checkpoint(model, path, epoch=None, config=None):
    import os

    plain = all(a == "relu" for a in model.activations) and not model.frozen_layers
    version = CHECKPOINT_VERSION if plain else 2
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", CHECKPOINT_MAGIC, version, len(model.layer_dims)))
        fh.write(struct.pack(f"<{len(model.layer_dims)}I", *model.layer_dims))
        if version == 2:
            codes = [
                (1 if act == "sin" else 0) | (2 if layer in model.frozen_layers else 0)
                for layer, act in enumerate(model.activations)
            ]
            fh.write(struct.pack(f"<{len(codes)}B", *codes))
        for W, b in zip(model.weights, model.biases):
            fh.write(W.astype("<f8").tobytes(order="C"))
            fh.write(b.astype("<f8").tobytes())
    sidecar = {
        "epoch": epoch,
        "layer_dims": list(model.layer_dims),
        "activations": list(model.activations),
        "frozen_layers": list(model.frozen_layers),
        "config": config.to_dict() if isinstance(config, TrainConfig) else config,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return os.fspath(path)


def load_checkpoint(path):
    """Read a checkpoint; returns (Model, sidecar dict or None)."""
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12:
            raise ValueError(f"{path}: truncated checkpoint header")
        magic, version, n_dims = struct.unpack("<4sII", head)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint (bad magic)")
        if version not in (1, 2):
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        dims = list(struct.unpack(f"<{n_dims}I", fh.read(4 * n_dims)))
        activations = ("relu",) * (n_dims - 2)
        frozen = ()
        if version == 2:
            codes = struct.unpack(f"<{n_dims - 2}B", fh.read(n_dims - 2))
            activations = tuple("sin" if c & 1 else "relu" for c in codes)
            frozen = tuple(i for i, c in enumerate(codes) if c & 2)
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype="<f8")
            weights.append(w.reshape(fan_in, fan_out).copy())
            biases.append(np.frombuffer(fh.read(8 * fan_out), dtype="<f8").copy())
    sidecar = None
    try:
        with open(str(path) + ".json", "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
    except FileNotFoundError:
        pass
    return Model(dims, weights, biases, activations, frozen), sidecar
