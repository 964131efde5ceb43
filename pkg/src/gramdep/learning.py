"""Regression with entropy-based residual losses and source-bias correction.

The dependence loss trains ``f`` so that the residual ``e = y - f(x)`` is as
independent of ``x`` as possible, measured by the normalized matrix-based
mutual information. That loss cannot see a constant offset in ``f``, so
after training the mean residual is added back as an output bias.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ._parallel import pmap
from .errors import DivergenceError
from .gradients import backprop_to_samples, grad_entropy, grad_nmi_max, raw_entropy
from .kernel import KernelSpec, rbf_gram, select_bandwidth

__all__ = [
    "LOSSES",
    "CHECKPOINT_VERSION",
    "Regressor",
    "TrainConfig",
    "init_regressor",
    "predict",
    "residual_loss",
    "batch_loss_and_grads",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "least_squares",
    "gen_linear_gaussian",
    "gen_noisy_regression",
    "noise_robustness_experiment",
]

LOSSES = ("mse", "mae", "mee", "nmi")
KERNEL_LOSSES = ("mee", "nmi")
NOISES = ("laplace", "shifted-exponential", "gaussian")
CHECKPOINT_VERSION = 1
MAX_HIDDEN = 64


@dataclass
class Regressor:
    """Linear map or one-hidden-layer rectifier network with scalar output."""

    weights: list
    biases: list
    activation: str = "identity"
    output_bias_correction: float = 0.0

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    def forward(self, x):
        """Raw network output (no bias correction) and the hidden activations."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {x.shape[1]}")
        if self.activation == "identity":
            return (x @ self.weights[0] + self.biases[0])[:, 0], None
        pre = x @ self.weights[0] + self.biases[0]
        hidden = np.maximum(pre, 0.0)
        return (hidden @ self.weights[1] + self.biases[1])[:, 0], hidden

    def backward(self, x, hidden, dout):
        """Parameter gradients given ``dLoss/dOutput`` per sample."""
        x = np.asarray(x, dtype=float).reshape(len(dout), -1)
        dout = np.asarray(dout, dtype=float)[:, None]
        if self.activation == "identity":
            return [x.T @ dout], [dout.sum(axis=0)]
        dw2 = hidden.T @ dout
        db2 = dout.sum(axis=0)
        dh = (dout @ self.weights[1].T) * (hidden > 0)
        return [x.T @ dh, dw2], [dh.sum(axis=0), db2]

    def parameters(self) -> list:
        return list(self.weights) + list(self.biases)

    def copy(self) -> "Regressor":
        return Regressor([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                         self.activation, self.output_bias_correction)


def init_regressor(n_features: int, model: str = "linear", hidden: int = 32,
                   seed: int = 0) -> Regressor:
    """Zero linear model, or a He-initialized rectifier network."""
    if model == "linear":
        return Regressor([np.zeros((n_features, 1))], [np.zeros(1)], "identity")
    if model != "mlp":
        raise ValueError(f"unknown model {model!r}; expected linear or mlp")
    if not 1 <= hidden <= MAX_HIDDEN:
        raise ValueError(f"hidden width must lie in 1..{MAX_HIDDEN}")
    rng = np.random.default_rng(np.uint64(seed))
    w1 = rng.standard_normal((n_features, hidden)) * math.sqrt(2.0 / n_features)
    w2 = rng.standard_normal((hidden, 1)) * math.sqrt(1.0 / hidden)
    return Regressor([w1, w2], [np.zeros(hidden), np.zeros(1)], "relu")


def predict(model: Regressor, x) -> np.ndarray:
    """Network output plus the learned output bias."""
    return model.forward(x)[0] + model.output_bias_correction


@dataclass
class TrainConfig:
    loss: str = "nmi"
    alpha: float = 2.0
    batch_size: int = 32
    epochs: int = 100
    learning_rate: float = 0.05
    momentum: float = 0.9
    spec: KernelSpec = field(default_factory=KernelSpec)
    seed: int = 0
    input_bandwidth: object = "silverman"

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        if self.loss in KERNEL_LOSSES and self.batch_size < 8:
            raise ValueError("kernel losses need batch_size >= 8")
        if self.spec.kind != "rbf":
            raise ValueError("training needs an RBF kernel")
        KernelSpec("rbf", self.input_bandwidth)  # validates the rule or width
        if self.epochs < 1 or self.learning_rate <= 0:
            raise ValueError("need epochs >= 1 and a positive learning rate")

    def describe(self) -> dict:
        return {"loss": self.loss, "alpha": self.alpha, "batch_size": self.batch_size,
                "epochs": self.epochs, "learning_rate": self.learning_rate,
                "momentum": self.momentum, "kernel": self.spec.describe(),
                "input_bandwidth": self.input_bandwidth, "seed": self.seed}


def residual_loss(e, x, loss: str, alpha: float = 2.0, sigma_e: float = 1.0,
                  sigma_x: float = 1.0):
    """Loss value and its gradient with respect to the residuals ``e``.

    ``nmi`` is the mutual information between ``x`` and ``e`` over the
    larger of the two entropies (no clamping, so it stays differentiable);
    ``mee`` is the entropy of the residuals alone.
    """
    e = np.asarray(e, dtype=float)
    b = e.size
    if loss == "mse":
        return float(np.mean(e * e)), 2.0 * e / b
    if loss == "mae":
        return float(np.mean(np.abs(e))), np.sign(e) / b
    ae = rbf_gram(e, sigma_e)
    spec_e = KernelSpec("rbf", sigma_e)
    if loss == "mee":
        return raw_entropy(ae, alpha), backprop_to_samples(grad_entropy(ae, alpha), e, spec_e)
    if loss == "nmi":
        ax = rbf_gram(x, sigma_x)
        value, _, d_ae = grad_nmi_max(ax, ae, alpha)
        return value, backprop_to_samples(d_ae, e, spec_e)
    raise ValueError(f"unknown loss {loss!r}")


def batch_loss_and_grads(model: Regressor, x, y, loss: str, alpha: float,
                         sigma_e: float, sigma_x: float):
    """Loss on one batch and gradients for every weight and bias."""
    out, hidden = model.forward(x)
    e = np.asarray(y, dtype=float) - out
    value, de = residual_loss(e, x, loss, alpha, sigma_e, sigma_x)
    gw, gb = model.backward(x, hidden, -de)
    return value, gw, gb


def _resolve_sigma(samples, spec: KernelSpec) -> float:
    return float(spec.bandwidth) if spec.fixed else select_bandwidth(samples, spec.bandwidth)


def train(x, y, config: TrainConfig, model: Optional[Regressor] = None, hidden: int = 32,
          model_kind: str = "linear", callback: Optional[Callable] = None) -> Regressor:
    """Mini-batch gradient descent followed by the output-bias correction.

    Kernel widths are chosen once and then kept fixed: the residual width
    applies ``config.spec`` to the residuals of the initial model, the input
    width applies ``config.input_bandwidth`` to all training inputs.
    ``callback(epoch, model)`` runs after every epoch.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n = x.shape[0]
    if y.size != n:
        raise ValueError("x and y must have the same number of rows")
    if n < config.batch_size:
        raise ValueError(f"need at least batch_size={config.batch_size} samples, got {n}")
    if model is None:
        model = init_regressor(x.shape[1], model_kind, hidden, config.seed)
    model = model.copy()
    model.output_bias_correction = 0.0
    sigma_e = sigma_x = 1.0
    if config.loss in KERNEL_LOSSES:
        sigma_e = _resolve_sigma(y - model.forward(x)[0], config.spec)
        sigma_x = _resolve_sigma(x, KernelSpec("rbf", config.input_bandwidth))
    params = model.parameters()
    velocity = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(np.uint64(config.seed))
    n_batches = n // config.batch_size
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for k in range(n_batches):
            rows = order[k * config.batch_size:(k + 1) * config.batch_size]
            value, gw, gb = batch_loss_and_grads(model, x[rows], y[rows], config.loss,
                                                 config.alpha, sigma_e, sigma_x)
            grads = gw + gb
            if not math.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads):
                raise DivergenceError(f"non-finite {config.loss} loss or gradient in epoch {epoch}",
                                      epoch)
            for p, v, g in zip(params, velocity, grads):
                v *= config.momentum
                v -= config.learning_rate * g
                p += v
            if not all(np.all(np.isfinite(p)) for p in params):
                raise DivergenceError(f"parameters diverged in epoch {epoch}", epoch)
        if callback is not None:
            callback(epoch, model)
    model.output_bias_correction = float(np.mean(y) - np.mean(model.forward(x)[0]))
    return model


def save_checkpoint(model: Regressor, path) -> None:
    """Write a versioned JSON weight dump with explicit array shapes."""
    doc = {
        "format": "gramdep-regressor",
        "version": CHECKPOINT_VERSION,
        "activation": model.activation,
        "output_bias_correction": model.output_bias_correction,
        "weights": [{"shape": list(w.shape), "data": w.ravel().tolist()} for w in model.weights],
        "biases": [{"shape": list(b.shape), "data": b.ravel().tolist()} for b in model.biases],
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_checkpoint(path) -> Regressor:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "gramdep-regressor" or doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version {CHECKPOINT_VERSION} regressor checkpoint")

    def arrays(items):
        return [np.asarray(it["data"], dtype=float).reshape(it["shape"]) for it in items]

    return Regressor(arrays(doc["weights"]), arrays(doc["biases"]), doc["activation"],
                     float(doc["output_bias_correction"]))


def least_squares(x, y):
    """Closed-form affine least squares; returns ``(coef, intercept)``."""
    x = np.asarray(x, dtype=float).reshape(len(y), -1)
    design = np.column_stack([x, np.ones(len(y))])
    sol, *_ = np.linalg.lstsq(design, np.asarray(y, dtype=float), rcond=None)
    return sol[:-1], float(sol[-1])


def gen_linear_gaussian(n: int = 512, p: int = 3, noise: float = 0.5, seed: int = 0):
    """``y = x w + 1 + noise`` with standard normal inputs; returns ``(x, y, w)``."""
    rng = np.random.default_rng(np.uint64(seed))
    w = rng.uniform(-2.0, 2.0, p)
    x = rng.standard_normal((n, p))
    return x, x @ w + 1.0 + noise * rng.standard_normal(n), w


def _target(x):
    return np.sin(np.pi * x[:, 0]) + 0.5 * x[:, 1] ** 2


def _noise(kind, rho, rng, n):
    if kind == "laplace":
        return rng.laplace(0.0, rho, n)
    if kind == "shifted-exponential":
        return rho * (1.0 - rng.exponential(1.0, n))
    if kind == "gaussian":
        return rng.normal(0.0, rho, n)
    raise ValueError(f"unknown noise {kind!r}; expected one of {NOISES}")


def gen_noisy_regression(n: int, noise: str, rho: float, seed: int = 0):
    """Smooth 2-input target on Uniform[-1, 1]^2 plus additive label noise.

    Returns ``(x, noisy_y, clean_y)``.
    """
    rng = np.random.default_rng(np.uint64(seed))
    x = rng.uniform(-1.0, 1.0, (n, 2))
    clean = _target(x)
    return x, clean + _noise(noise, rho, rng, n), clean


def noise_robustness_experiment(noise: str = "laplace", rho: float = 1.0,
                                losses: Sequence[str] = ("mse", "mae", "mee", "nmi"),
                                seed: int = 0, n_seeds: int = 5, n_train: int = 512,
                                n_test: int = 1000, epochs: int = 150, hidden: int = 32,
                                learning_rates: Optional[dict] = None,
                                threads: Optional[int] = None) -> list:
    """Clean-target test RMSE of each loss relative to the MSE-trained model.

    Every seed trains all losses from the same initial network. Rows hold
    the per-loss mean over seeds of ``rmse(loss) / rmse(mse)``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if noise == "shifted-exp":
        noise = "shifted-exponential"
    losses = list(dict.fromkeys(["mse"] + list(losses)))
    lrs = {"mse": 0.01, "mae": 0.01, "mee": 0.05, "nmi": 0.05}
    lrs.update(learning_rates or {})

    def one(s):
        data_seed = int(np.random.SeedSequence([seed, s, 0]).generate_state(1)[0])
        x, y, _ = gen_noisy_regression(n_train, noise, rho, data_seed)
        xt, _, yt = gen_noisy_regression(n_test, noise, rho, data_seed + 1)
        init = init_regressor(2, "mlp", hidden, data_seed)
        rmse = {}
        for loss in losses:
            cfg = TrainConfig(loss, 2.0, 32, epochs, lrs[loss], 0.9, KernelSpec(), data_seed)
            model = train(x, y, cfg, model=init)
            rmse[loss] = float(np.sqrt(np.mean((predict(model, xt) - yt) ** 2)))
        return rmse

    runs = pmap(one, range(n_seeds), threads)
    rows = []
    for loss in losses:
        rel = [r[loss] / r["mse"] for r in runs]
        rows.append({"noise": noise, "rho": rho, "loss": loss,
                     "relative_rmse": float(np.mean(rel)),
                     "rmse": float(np.mean([r[loss] for r in runs])), "seeds": n_seeds})
    return rows
