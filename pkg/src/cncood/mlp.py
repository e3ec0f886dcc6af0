"""Fully-connected ReLU classifier with manual backprop and SGD-momentum.

The training objective is mean cross-entropy on ID samples plus
alpha * mean cross-entropy of synthetic OOD samples against the reject
class K+1, with the OOD minibatch generated on the fly from each ID
minibatch.

Checkpoint format: magic ``CNCM``, uint32 layer count, layer dims as
uint32, then all parameters as little-endian float64 in layer order
(W1 row-major, b1, W2, b2, ...).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .datasets import LabeledImageSet, Point2Dataset
from .pipeline import GenConfig, cnc_datagen, cnc_datagen_2d
from .rng import RngStream
from .tensor import TensorFormatError

_CKPT_MAGIC = b"CNCM"


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 1.0
    lr: float = 0.05
    momentum: float = 0.9
    epochs: int = 2000
    batch_size: int = 64
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")


class MlpModel:
    """Weights/biases per layer; class_count is the output dimension."""

    __slots__ = ("layer_dims", "weights", "biases")

    def __init__(self, layer_dims, weights, biases):
        dims = tuple(int(d) for d in layer_dims)
        if len(weights) != len(dims) - 1 or len(biases) != len(dims) - 1:
            raise ValueError("need one weight/bias pair per consecutive dim pair")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValueError(
                    f"layer {i}: weight {w.shape} / bias {b.shape} "
                    f"inconsistent with dims {dims}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: parameters must be finite")
        self.layer_dims = dims
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]

    @property
    def class_count(self) -> int:
        return self.layer_dims[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


def init_model(layer_dims, rng: RngStream) -> MlpModel:
    """Gaussian weights with std sqrt(2 / fan_in), zero biases."""
    weights, biases = [], []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        std = np.sqrt(2.0 / d_in)
        weights.append(std * rng.normals(d_out * d_in).reshape(d_out, d_in))
        biases.append(np.zeros(d_out))
    return MlpModel(layer_dims, weights, biases)


def _as_batch(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"expected inputs of dim {model.input_dim}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("inputs must be finite")
    return x


def softmax(logits: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", over="ignore"):
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)


def forward(model: MlpModel, x):
    """Returns (logits, probabilities, per-layer activations).

    activations[0] is the input batch; activations[i] the post-ReLU
    output of hidden layer i.  ReLU between hidden layers, linear last.
    """
    h = _as_batch(model, x)
    acts = [h]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
        acts.append(h)
    logits = h @ model.weights[-1].T + model.biases[-1]
    return logits, softmax(logits), acts


def _cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean CE with 1-based labels, computed via log-sum-exp."""
    with np.errstate(invalid="ignore", over="ignore"):
        zmax = logits.max(axis=1)
        lse = zmax + np.log(np.exp(logits - zmax[:, None]).sum(axis=1))
        picked = logits[np.arange(len(labels)), labels - 1]
        return float(np.mean(lse - picked))


def _check_id_labels(id_y, class_count: int, have_ood: bool) -> np.ndarray:
    """ID labels are 1..K; the top class is reserved only when OOD is used."""
    id_y = np.asarray(id_y, dtype=np.int64)
    k = class_count - 1 if have_ood else class_count
    if len(id_y) and (id_y.min() < 1 or id_y.max() > k):
        raise ValueError(f"ID labels must lie in 1..{k}")
    return id_y


def loss_eq2(model: MlpModel, id_x, id_y, ood_x, alpha: float) -> float:
    """Mean ID cross-entropy + alpha * mean OOD cross-entropy to class K+1."""
    have_ood = ood_x is not None and len(ood_x) > 0 and alpha > 0
    id_y = _check_id_labels(id_y, model.class_count, have_ood)
    logits_id, _, _ = forward(model, id_x)
    total = _cross_entropy(logits_id, id_y)
    if have_ood:
        logits_ood, _, _ = forward(model, ood_x)
        ood_y = np.full(logits_ood.shape[0], model.class_count, dtype=np.int64)
        total += alpha * _cross_entropy(logits_ood, ood_y)
    return total


def backward(model: MlpModel, id_x, id_y, ood_x, alpha: float):
    """Analytic gradients of loss_eq2 w.r.t. all weights and biases.

    Returns (loss, weight_grads, bias_grads).
    """
    have_ood = ood_x is not None and len(ood_x) > 0 and alpha > 0
    id_y = _check_id_labels(id_y, model.class_count, have_ood)

    if have_ood:
        id_x = _as_batch(model, id_x)
        ood_x = _as_batch(model, ood_x)
        x = np.vstack([id_x, ood_x])
        labels = np.concatenate(
            [id_y, np.full(ood_x.shape[0], model.class_count, dtype=np.int64)]
        )
        # per-sample weights: 1/n_id for the ID term, alpha/n_ood for OOD
        sw = np.concatenate(
            [
                np.full(id_x.shape[0], 1.0 / id_x.shape[0]),
                np.full(ood_x.shape[0], alpha / ood_x.shape[0]),
            ]
        )
    else:
        x = _as_batch(model, id_x)
        labels = id_y
        sw = np.full(x.shape[0], 1.0 / x.shape[0])

    logits, probs, acts = forward(model, x)
    with np.errstate(invalid="ignore", over="ignore"):
        zmax = logits.max(axis=1)
        lse = zmax + np.log(np.exp(logits - zmax[:, None]).sum(axis=1))
        loss = float(np.sum(sw * (lse - logits[np.arange(len(labels)), labels - 1])))

    delta = probs.copy()
    delta[np.arange(len(labels)), labels - 1] -= 1.0
    delta *= sw[:, None]

    g_w = [None] * len(model.weights)
    g_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        g_w[layer] = delta.T @ acts[layer]
        g_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer]) * (acts[layer] > 0)
    return loss, g_w, g_b


def training_arrays(id_data):
    """(X, y) float64/int64 arrays from a point or image dataset."""
    if isinstance(id_data, Point2Dataset):
        return id_data.points, id_data.labels
    if isinstance(id_data, LabeledImageSet):
        x = np.stack([img.flatten() for img in id_data.images])
        return x, id_data.labels
    raise TypeError(f"unsupported dataset type {type(id_data)!r}")


def _generate_ood(id_data, subset_idx, gen_cfg, rng):
    if isinstance(id_data, Point2Dataset):
        sub = Point2Dataset(id_data.points[subset_idx], id_data.labels[subset_idx])
        gen = cnc_datagen_2d(sub, gen_cfg, rng)
        return gen.points
    sub = LabeledImageSet(
        tuple(id_data.images[i] for i in subset_idx),
        id_data.labels[subset_idx],
        class_count=id_data.class_count,
    )
    gen = cnc_datagen(sub, gen_cfg, rng)
    return np.stack([img.flatten() for img in gen.images])


def train(model: MlpModel, id_data, gen_cfg, train_cfg: TrainConfig):
    """SGD-momentum training; returns (trained model, per-epoch mean loss).

    With gen_cfg=None this is plain K-class training; otherwise each ID
    minibatch is paired with a fresh synthetic OOD minibatch.  Training
    is a pure function of (data, configs, seed).
    """
    x_all, y_all = training_arrays(id_data)
    if len(x_all) == 0:
        raise ValueError("id_data must be nonempty")
    n_classes = int(y_all.max())
    want = n_classes + 1 if gen_cfg is not None else n_classes
    if model.class_count != want:
        raise ValueError(
            f"model has {model.class_count} outputs, expected {want} "
            f"for {'(K+1)' if gen_cfg is not None else 'K'}-class training"
        )

    model = model.copy()
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    root = RngStream(train_cfg.seed)
    history = []

    for epoch in range(train_cfg.epochs):
        r_epoch = root.child(epoch)
        perm = np.argsort(r_epoch.uniforms(len(x_all)), kind="stable")
        losses = []
        for b_i, start in enumerate(range(0, len(x_all), train_cfg.batch_size)):
            take = perm[start : start + train_cfg.batch_size]
            xb, yb = x_all[take], y_all[take]
            ood = None
            if gen_cfg is not None:
                ood = _generate_ood(id_data, take, gen_cfg, r_epoch.child(1000 + b_i))
            loss, g_w, g_b = backward(model, xb, yb, ood, train_cfg.alpha)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {b_i}"
                )
            for layer in range(len(model.weights)):
                g = g_w[layer]
                if train_cfg.weight_decay:
                    g = g + train_cfg.weight_decay * model.weights[layer]
                vel_w[layer] = train_cfg.momentum * vel_w[layer] - train_cfg.lr * g
                vel_b[layer] = (
                    train_cfg.momentum * vel_b[layer] - train_cfg.lr * g_b[layer]
                )
                model.weights[layer] += vel_w[layer]
                model.biases[layer] += vel_b[layer]
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return model, history


def save_checkpoint(model: MlpModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", len(model.layer_dims)))
        fh.write(struct.pack(f"<{len(model.layer_dims)}I", *model.layer_dims))
        for w, b in zip(model.weights, model.biases):
            fh.write(w.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_checkpoint(path) -> MlpModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _CKPT_MAGIC:
        raise TensorFormatError(f"bad magic {blob[:4]!r} in {path}")
    (n_dims,) = struct.unpack("<I", blob[4:8])
    if n_dims < 2 or n_dims > 64:
        raise TensorFormatError(f"implausible layer count {n_dims} in {path}")
    dims = struct.unpack(f"<{n_dims}I", blob[8 : 8 + 4 * n_dims])
    offset = 8 + 4 * n_dims
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        w_bytes = 8 * d_out * d_in
        weights.append(
            np.frombuffer(blob, dtype="<f8", count=d_out * d_in, offset=offset)
            .reshape(d_out, d_in)
            .copy()
        )
        offset += w_bytes
        biases.append(
            np.frombuffer(blob, dtype="<f8", count=d_out, offset=offset).copy()
        )
        offset += 8 * d_out
    if offset != len(blob):
        raise TensorFormatError(f"trailing bytes in {path}")
    return MlpModel(dims, weights, biases)
