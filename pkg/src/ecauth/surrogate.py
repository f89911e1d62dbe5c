"""Tiny feed-forward surrogate for the optimal transmission rate.

A 4-4-1 network (25 parameters: 20 in the hidden layer, 5 in the output
layer) regresses the gradient-descent optimal rate from the feature record
(theta, non-centrality, false-alarm probability, legitimate-occupancy
prior). Hidden activation is ReLU, output is linear, loss is mean squared
error; training is plain mini-batch gradient descent with the stepped
learning-rate schedule lr0 / decay_factor^(epoch // decay_every).

Features and labels are standardized internally with training-split
statistics (their scales differ by orders of magnitude); at the end of
training the affine standardization is folded back into the weights, so the
returned model maps raw features to raw rates and serializes as exactly 25
numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import SnrDistribution
from .markov_ec import Priors, QosParams
from .rate_opt import GdConfig, RateContext, gd_optimize, grid_search_rate

__all__ = [
    "MlpModel",
    "RateDataset",
    "TrainConfig",
    "SweepSpec",
    "forward",
    "predict",
    "loss",
    "backward",
    "init_model",
    "train",
    "generate_dataset",
    "save_model",
    "load_model",
    "save_dataset",
    "load_dataset",
]

N_FEATURES = 4
N_HIDDEN = 4


@dataclass(frozen=True)
class MlpModel:
    """4-4-1 network parameters; exactly 25 numbers."""

    w_hidden: np.ndarray  # (4, 4), row j feeds hidden unit j
    b_hidden: np.ndarray  # (4,)
    w_out: np.ndarray  # (4,)
    b_out: float

    def __post_init__(self):
        w_h = np.asarray(self.w_hidden, dtype=float)
        b_h = np.asarray(self.b_hidden, dtype=float)
        w_o = np.asarray(self.w_out, dtype=float)
        if w_h.shape != (N_HIDDEN, N_FEATURES) or b_h.shape != (N_HIDDEN,) or w_o.shape != (N_HIDDEN,):
            raise ValueError("model must be 4-4-1: w_hidden (4,4), b_hidden (4,), w_out (4,)")
        object.__setattr__(self, "w_hidden", w_h)
        object.__setattr__(self, "b_hidden", b_h)
        object.__setattr__(self, "w_out", w_o)
        object.__setattr__(self, "b_out", float(self.b_out))
        if not (
            np.all(np.isfinite(w_h))
            and np.all(np.isfinite(b_h))
            and np.all(np.isfinite(w_o))
            and math.isfinite(self.b_out)
        ):
            raise ValueError("model parameters must be finite")

    @property
    def n_parameters(self) -> int:
        return self.w_hidden.size + self.b_hidden.size + self.w_out.size + 1


@dataclass(frozen=True)
class RateDataset:
    """Feature records (theta, lam, pfa, pi_alice) with optimal-rate labels."""

    features: np.ndarray  # (R, 4)
    labels: np.ndarray  # (R,)

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if x.ndim != 2 or x.shape[1] != N_FEATURES:
            raise ValueError("features must have shape (R, 4)")
        if y.shape != (x.shape[0],):
            raise ValueError("labels must match features in length")
        if np.any(y < 0):
            raise ValueError("rate labels must be non-negative")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.labels.size

    def subset(self, idx) -> "RateDataset":
        return RateDataset(self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class TrainConfig:
    """Training schedule; defaults follow the reference protocol
    (lr 0.001 for 150 epochs, cut 10x every 25 epochs, 80/20 split)."""

    lr0: float = 0.001
    epochs: int = 150
    lr_decay_every: int = 25
    lr_decay_factor: float = 10.0
    split: float = 0.8
    seed: int = 0
    batch_size: int = 4  # mini-batch; full batch stalls at this schedule's step budget

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if not 0.0 < self.split < 1.0:
            raise ValueError("split must lie in (0, 1)")
        if self.epochs < 1 or self.lr_decay_every < 1:
            raise ValueError("epochs and lr_decay_every must be positive")
        if self.lr_decay_factor < 1:
            raise ValueError("lr_decay_factor must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    def learning_rate(self, epoch: int) -> float:
        return self.lr0 / self.lr_decay_factor ** (epoch // self.lr_decay_every)


def init_model(rng: np.random.Generator) -> MlpModel:
    """Uniform [-0.5, 0.5] initialization from the given stream."""
    return MlpModel(
        w_hidden=rng.uniform(-0.5, 0.5, (N_HIDDEN, N_FEATURES)),
        b_hidden=rng.uniform(-0.5, 0.5, N_HIDDEN),
        w_out=rng.uniform(-0.5, 0.5, N_HIDDEN),
        b_out=float(rng.uniform(-0.5, 0.5)),
    )


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Raw network output for one record (4,) or a batch (n, 4)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    z = batch @ model.w_hidden.T + model.b_hidden
    h = np.maximum(z, 0.0)
    out = h @ model.w_out + model.b_out
    return out[0] if single else out


def predict(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Forward pass clamped to the non-negative rate constraint."""
    return np.maximum(forward(model, x), 0.0)


def loss(model: MlpModel, dataset: RateDataset) -> float:
    """Mean squared error of the raw network output over the dataset."""
    return _mse(
        dataset.features, dataset.labels,
        model.w_hidden, model.b_hidden, model.w_out, model.b_out,
    )


def _mse(x, y, w_h, b_h, w_o, b_o) -> float:
    if y.size == 0:
        raise ValueError("loss over an empty dataset slice is undefined")
    z = x @ w_h.T + b_h
    res = np.maximum(z, 0.0) @ w_o + b_o - y
    return float(np.mean(res * res))


def backward(model: MlpModel, dataset: RateDataset):
    """Exact MSE gradients for all 25 parameters.

    ReLU subgradient at exactly zero pre-activation is taken as 0.
    Returns (d_w_hidden, d_b_hidden, d_w_out, d_b_out).
    """
    return _mse_grads(
        dataset.features, dataset.labels,
        model.w_hidden, model.b_hidden, model.w_out, model.b_out,
    )


def _mse_grads(x, y, w_h, b_h, w_o, b_o):
    if y.size == 0:
        raise ValueError("backward over an empty dataset slice is undefined")
    n = x.shape[0]
    z = x @ w_h.T + b_h
    h = np.maximum(z, 0.0)
    res = h @ w_o + b_o - y
    d_out = 2.0 * res / n
    d_w_out = d_out @ h
    d_b_out = float(np.sum(d_out))
    d_h = np.outer(d_out, w_o)
    d_z = d_h * (z > 0.0)
    d_w_hidden = d_z.T @ x
    d_b_hidden = d_z.sum(axis=0)
    return d_w_hidden, d_b_hidden, d_w_out, d_b_out


def _standardize_stats(values: np.ndarray):
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def _fold_standardization(w_h, b_h, w_o, b_o, x_mean, x_std, y_mean, y_std) -> MlpModel:
    # the trained net maps (x - mx)/sx to (y - my)/sy; fold both affine maps
    # into the weights so the model consumes raw features directly
    w_h_raw = w_h / x_std[None, :]
    b_h_raw = b_h - w_h_raw @ x_mean
    w_o_raw = w_o * y_std
    b_o_raw = b_o * y_std + y_mean
    return MlpModel(w_hidden=w_h_raw, b_hidden=b_h_raw, w_out=w_o_raw, b_out=float(b_o_raw))


def train(dataset: RateDataset, cfg: TrainConfig):
    """Deterministic mini-batch gradient descent.

    Returns (model, history) where history is a list of per-epoch
    (train_mse, validation_mse) in raw label units. Raises FloatingPointError
    if the loss stops being finite.
    """
    if dataset.size < 10:
        raise ValueError("need at least 10 samples to train")
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(dataset.size)
    n_train = int(round(cfg.split * dataset.size))
    n_train = min(max(n_train, 1), dataset.size - 1)
    train_set = dataset.subset(order[:n_train])
    val_set = dataset.subset(order[n_train:])

    x_mean, x_std = _standardize_stats(train_set.features)
    y_mean, y_std = _standardize_stats(train_set.labels)
    xz_train = (train_set.features - x_mean) / x_std
    yz_train = (train_set.labels - y_mean) / y_std
    xz_val = (val_set.features - x_mean) / x_std
    yz_val = (val_set.labels - y_mean) / y_std

    start_model = init_model(rng)
    w_h, b_h = start_model.w_hidden.copy(), start_model.b_hidden.copy()
    w_o, b_o = start_model.w_out.copy(), start_model.b_out
    y_var = float(y_std**2)
    history = []
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is raised below
        for epoch in range(cfg.epochs):
            lr = cfg.learning_rate(epoch)
            perm = rng.permutation(n_train)
            for start in range(0, n_train, cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                d_wh, d_bh, d_wo, d_bo = _mse_grads(
                    xz_train[idx], yz_train[idx], w_h, b_h, w_o, b_o
                )
                w_h = w_h - lr * d_wh
                b_h = b_h - lr * d_bh
                w_o = w_o - lr * d_wo
                b_o = b_o - lr * d_bo
            train_mse = _mse(xz_train, yz_train, w_h, b_h, w_o, b_o) * y_var
            val_mse = _mse(xz_val, yz_val, w_h, b_h, w_o, b_o) * y_var
            if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
                raise FloatingPointError(f"training loss diverged at epoch {epoch}")
            history.append((train_mse, val_mse))
    folded = _fold_standardization(w_h, b_h, w_o, b_o, x_mean, x_std, y_mean, y_std)
    return folded, history


@dataclass(frozen=True)
class SweepSpec:
    """Grid over (theta, pi_alice, pfa) with random non-centralities.

    Every (theta, pi_alice, pfa) cell receives n_lambda uniform draws from
    lambda_range, so the dataset size is the product of the grid sizes and
    n_lambda.
    """

    thetas: tuple
    pi_alices: tuple
    pfas: tuple
    n_lambda: int
    lambda_range: tuple = (0.2, 10.0)
    ts: float = 0.066
    delta_f: float = 20.0
    rate_eve: float = 40.0
    pmd: float = 0.2
    lam_eve: float = 2.0
    oracle_hi: float = 400.0
    oracle_points: int = 201

    @property
    def size(self) -> int:
        return len(self.thetas) * len(self.pi_alices) * len(self.pfas) * self.n_lambda


def generate_dataset(
    spec: SweepSpec,
    gd: GdConfig | None = None,
    rng: np.random.Generator | None = None,
):
    """Optimal-rate labels from the gradient method, audited per sample
    against the exhaustive-search oracle.

    Samples whose iteration fails to converge or disagrees with the grid
    argmax by more than one grid step are dropped; returns
    (RateDataset, n_dropped).
    """
    if gd is None:
        gd = GdConfig(grad_tol=1e-5)
    if rng is None:
        rng = np.random.default_rng(0)
    grid_step = spec.oracle_hi / (spec.oracle_points - 1)
    feats, labels = [], []
    dropped = 0
    dist_eve = SnrDistribution(spec.lam_eve, 1.0)
    for theta in spec.thetas:
        qos = QosParams(theta, spec.ts)
        for pi_alice in spec.pi_alices:
            for pfa in spec.pfas:
                lams = rng.uniform(*spec.lambda_range, spec.n_lambda)
                for lam in lams:
                    dist = SnrDistribution(float(lam), 1.0)
                    ctx = RateContext(
                        Priors(pi_alice), pfa, spec.pmd, dist, dist_eve,
                        spec.rate_eve, qos, spec.delta_f,
                    )
                    trace = gd_optimize(gd, qos, dist, spec.delta_f, ctx.p_ca)
                    r_oracle = grid_search_rate(0.0, spec.oracle_hi, spec.oracle_points, ctx)
                    if not trace.converged or abs(trace.r_star - r_oracle) > grid_step:
                        dropped += 1
                        continue
                    feats.append((theta, float(lam), pfa, pi_alice))
                    labels.append(trace.r_star)
    return RateDataset(np.array(feats), np.array(labels)), dropped


def save_model(model: MlpModel, path) -> None:
    """Flat text format: '4 4 1' header then the 25 parameters row-major."""
    values = np.concatenate(
        [model.w_hidden.ravel(), model.b_hidden, model.w_out, [model.b_out]]
    )
    with open(path, "w") as fh:
        fh.write(f"{N_FEATURES} {N_HIDDEN} 1\n")
        for v in values:
            fh.write(f"{v:.17g}\n")


def load_model(path) -> MlpModel:
    with open(path) as fh:
        header = fh.readline().split()
        if [int(v) for v in header] != [N_FEATURES, N_HIDDEN, 1]:
            raise ValueError(f"unsupported layer sizes {header!r}")
        values = np.array([float(line) for line in fh if line.strip()])
    if values.size != 25:
        raise ValueError(f"expected 25 parameters, found {values.size}")
    return MlpModel(
        w_hidden=values[:16].reshape(N_HIDDEN, N_FEATURES),
        b_hidden=values[16:20],
        w_out=values[20:24],
        b_out=float(values[24]),
    )


def save_dataset(dataset: RateDataset, path) -> None:
    with open(path, "w") as fh:
        fh.write("theta,a,pfa,pi_alice,r_star\n")
        for (theta, lam, pfa, pa), y in zip(dataset.features, dataset.labels):
            fh.write(f"{theta:.17g},{lam:.17g},{pfa:.17g},{pa:.17g},{y:.17g}\n")


def load_dataset(path) -> RateDataset:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 5:
        raise ValueError("dataset rows must be theta,a,pfa,pi_alice,r_star")
    return RateDataset(rows[:, :4], rows[:, 4])
