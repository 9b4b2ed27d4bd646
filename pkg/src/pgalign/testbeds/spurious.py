"""Spurious-correlation domain adaptation with a shared+specific linear classifier.

Features are ``[C * e, y, noise]`` with ``y`` uniform on {-1, +1}; the
environment feature ``e`` equals ``y`` with probability ``p`` and ``-y``
otherwise. The core feature ``y`` itself is always present, so a classifier
that ignores ``e`` transfers across values of ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from pgalign.objective import DomainObjective
from pgalign.params import GradSlices, Owner, ParamLayout, ParamVector


@dataclass(frozen=True)
class SpuriousConfig:
    p: float = 0.9
    C: float = 3.0
    noise_dim: int = 298
    n_samples: int = 2000
    seed: int = 0

    def __post_init__(self):
        # the closed interval admits the degenerate p=0 / p=1 environments
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")
        if not self.C > 1:
            raise ValueError(f"C must exceed 1, got {self.C!r}")
        if self.noise_dim < 1 or self.n_samples < 1:
            raise ValueError("noise_dim and n_samples must be positive")

    @property
    def dim(self) -> int:
        return self.noise_dim + 2


@dataclass(frozen=True, eq=False)
class LabeledSet:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if x.ndim != 2 or x.shape[0] != y.size:
            raise ValueError(f"features {x.shape} and labels {y.shape} disagree")
        if not np.all(np.isfinite(x)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.labels.size

    def unlabeled(self) -> "UnlabeledSet":
        return UnlabeledSet(self.features)


@dataclass(frozen=True, eq=False)
class UnlabeledSet:
    features: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim != 2 or not np.all(np.isfinite(x)):
            raise ValueError("features must be a finite 2-d array")
        object.__setattr__(self, "features", x)

    def __len__(self) -> int:
        return self.features.shape[0]


def gen_spurious(cfg: SpuriousConfig, rng: Optional[np.random.Generator] = None) -> LabeledSet:
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    n = cfg.n_samples
    y = rng.choice(np.array([-1.0, 1.0]), size=n)
    agree = rng.random(n) < cfg.p
    e = np.where(agree, y, -y)
    noise = rng.standard_normal((n, cfg.noise_dim))
    x = np.column_stack([cfg.C * e, y, noise])
    return LabeledSet(x, (y > 0).astype(np.int64))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


class SharedSpecificClassifier:
    """Linear softmax classifier whose weights for domain ``d`` are ``W_sh + W_d``.

    Every block is a ``(n_classes, n_features)`` matrix stored row-major.
    """

    def __init__(self, n_features: int, n_classes: int = 2, n_sources: int = 1):
        if n_sources < 1:
            raise ValueError("the classifier needs at least one source domain")
        self.n_features = n_features
        self.n_classes = n_classes
        self.n_sources = n_sources
        k = n_classes * n_features
        self.layout = ParamLayout(k, (k,) * n_sources, k)

    def init_params(self, rng: np.random.Generator, scale: float = 0.01) -> ParamVector:
        values = np.zeros(self.layout.total_dim)
        values[: self.layout.shared_dim] = scale * rng.standard_normal(self.layout.shared_dim)
        return ParamVector(self.layout, values)

    def weights(self, params: ParamVector, domain: Owner) -> np.ndarray:
        w = params.block("shared") + params.block(domain)
        return w.reshape(self.n_classes, self.n_features)

    def logits(self, params: ParamVector, x: np.ndarray, domain: Owner) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.weights(params, domain).T

    def predict_proba(self, params: ParamVector, x: np.ndarray, domain: Owner) -> np.ndarray:
        return softmax(self.logits(params, x, domain))


def _ce_and_grad(w_flat, x, y, n_classes):
    """Mean cross-entropy of a linear softmax model and its weight gradient."""
    logp = log_softmax(x @ w_flat.reshape(n_classes, x.shape[1]).T)
    rows = np.arange(y.size)
    loss = -logp[rows, y].sum() / y.size
    resid = np.exp(logp)
    resid[rows, y] -= 1.0
    return float(loss), (resid.T @ x / y.size).reshape(-1)


class CEObjective(DomainObjective):
    """Cross-entropy of one domain under the composed weights ``W_sh + W_owner``.

    ``include`` masks samples out of the mean (pseudo-label thresholding);
    a batch containing no included sample has zero loss and zero gradient.
    """

    def __init__(self, model: SharedSpecificClassifier, features, labels, owner: Owner, include=None):
        super().__init__(model.layout, owner)
        self.model = model
        self.features = np.asarray(features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.include = None if include is None else np.asarray(include, dtype=bool)
        if self.features.shape != (self.labels.size, model.n_features):
            raise ValueError("features/labels do not match the classifier")

    def loss_and_grads(self, shared, specific, batch: Any = None):
        x, y = self.features, self.labels
        inc = self.include
        if batch is not None:
            x, y = x[batch], y[batch]
            inc = None if inc is None else inc[batch]
        if y.size == 0:
            raise ValueError("empty batch")
        if inc is not None:
            if not inc.any():
                return 0.0, np.zeros_like(shared), np.zeros_like(specific)
            if not inc.all():
                x, y = x[inc], y[inc]
        loss, g = _ce_and_grad(shared + specific, x, y, self.model.n_classes)
        return loss, g, g.copy()


def source_loss(model, params: ParamVector, data: LabeledSet, domain: int, batch=None) -> tuple[float, GradSlices]:
    return CEObjective(model, data.features, data.labels, domain).evaluate(params, batch)


@dataclass(frozen=True, eq=False)
class PseudoLabelSet:
    include: np.ndarray
    label: np.ndarray
    confidence: np.ndarray

    def __len__(self) -> int:
        return self.label.size


def pseudo_label(anchor: Callable[[np.ndarray], np.ndarray], data: UnlabeledSet, tau: float) -> PseudoLabelSet:
    """Argmax labels of a frozen predictor, kept where its confidence reaches ``tau``."""
    probs = np.asarray(anchor(data.features), dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] != len(data):
        raise ValueError(f"anchor returned probabilities of shape {probs.shape}")
    if np.any(probs < 0) or np.any(np.abs(probs.sum(axis=1) - 1) > 1e-9):
        raise ValueError("anchor output is not a probability vector per sample")
    label = np.argmax(probs, axis=1)  # first maximum wins ties
    confidence = probs[np.arange(label.size), label]
    return PseudoLabelSet(confidence >= tau, label, confidence)


def target_objective(model, data: UnlabeledSet, pseudo: PseudoLabelSet) -> CEObjective:
    return CEObjective(model, data.features, pseudo.label, "target", include=pseudo.include)


def target_loss(model, params: ParamVector, data: UnlabeledSet, pseudo: PseudoLabelSet, batch=None):
    return target_objective(model, data, pseudo).evaluate(params, batch)


class AnchorPredictor:
    """Frozen linear softmax classifier used to pseudo-label the target domain."""

    def __init__(self, weights: np.ndarray):
        w = np.array(weights, dtype=np.float64)
        w.flags.writeable = False
        self.weights = w

    def __call__(self, x) -> np.ndarray:
        return softmax(np.asarray(x, dtype=np.float64) @ self.weights.T)

    def accuracy(self, data: LabeledSet) -> float:
        return float(np.mean(np.argmax(self(data.features), axis=1) == data.labels))


def train_anchor(data: LabeledSet, warmup_iters: int, eta: float, n_classes: int = 2) -> AnchorPredictor:
    """Full-batch gradient descent from zero weights on labeled source data."""
    if warmup_iters < 1:
        raise ValueError("warmup_iters must be at least 1")
    w = np.zeros(n_classes * data.features.shape[1])
    for _ in range(warmup_iters):
        loss, g = _ce_and_grad(w, data.features, data.labels, n_classes)
        if not math.isfinite(loss):
            raise FloatingPointError("anchor training diverged; lower the warmup learning rate")
        w -= eta * g
    return AnchorPredictor(w.reshape(n_classes, -1))


def avg_inference(model: SharedSpecificClassifier, params: ParamVector, x) -> np.ndarray:
    """Mean of the class probabilities under every source composition and the target one."""
    domains = [*range(model.n_sources), "target"]
    return np.mean([model.predict_proba(params, x, d) for d in domains], axis=0)


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def dump_dataset(data, path) -> None:
    labeled = isinstance(data, LabeledSet)
    n, dim = data.features.shape
    with open(path, "w") as fh:
        fh.write(f"n={n} dim={dim} labeled={int(labeled)}\n")
        for k in range(n):
            row = [format(v, ".17g") for v in data.features[k]]
            if labeled:
                row.append(str(int(data.labels[k])))
            fh.write(",".join(row) + "\n")


def load_dataset(path):
    lines = Path(path).read_text().splitlines()
    header = dict(item.split("=", 1) for item in lines[0].split())
    n, dim, labeled = int(header["n"]), int(header["dim"]), header["labeled"] == "1"
    rows = [ln.split(",") for ln in lines[1 : n + 1]]
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} rows, found {len(rows)}")
    if labeled:
        x = np.array([[float(v) for v in r[:dim]] for r in rows]).reshape(n, dim)
        return LabeledSet(x, np.array([int(r[dim]) for r in rows], dtype=np.int64))
    return UnlabeledSet(np.array([[float(v) for v in r] for r in rows]).reshape(n, dim))
