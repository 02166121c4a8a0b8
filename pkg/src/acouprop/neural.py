"""Feed-forward network mapping a speaker spectrum to (alpha, kappa) per bin.

The network and its backpropagation are implemented directly in numpy:
the training loss couples network outputs to the wave physics through
exp(-gamma*d) (forward reproduction of the receiver) and exp(+gamma*d)
(backward reproduction of the speaker), plus a concentration penalty that
pulls all per-instance coefficient rows toward their across-instance
mean. Gradients flow analytically through the complex exponentials via
their real/imaginary decomposition and are validated against central
finite differences in the test suite.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, TrainingDivergedError
from .spectral import Spectrum
from .synth import PairDataset
from .wavemodel import PropagationCoefficient

__all__ = [
    "NetworkSpec",
    "Network",
    "TrainConfig",
    "TrainResult",
    "EnsembleResult",
    "CoefficientMatrix",
    "default_layer_sizes",
    "forward",
    "loss",
    "loss_components",
    "gradients",
    "train",
    "train_ensemble",
    "ensemble_summary",
]


def default_layer_sizes(n_bins: int, variant: str = "mlp") -> tuple[int, ...]:
    """Hidden layouts mirroring the two reference architectures, scaled to
    any bin count (input and output are always 2*n_bins)."""
    d = 2 * n_bins
    if variant == "mlp":
        return (d, 128, 256, 256, 128, d)
    if variant == "autoencoder":
        return (d, 128, 256, 256, 128, 128, 256, 256, 128, d)
    raise InvalidInputError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: layer sizes (first and last must equal 2*n_bins),
    ReLU activations, seeded Gaussian init with std 1/sqrt(fan_in)."""

    layer_sizes: tuple[int, ...]
    activation: str = "relu"
    variant: str = "mlp"
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise InvalidInputError("layer_sizes needs >= 2 positive entries")
        if sizes[0] != sizes[-1] or sizes[0] % 2 != 0:
            raise InvalidInputError(
                "first and last layer must both equal 2*n_bins "
                f"(got {sizes[0]} and {sizes[-1]})"
            )
        if self.activation != "relu":
            raise InvalidInputError(f"unsupported activation {self.activation!r}")
        if self.variant not in ("mlp", "autoencoder"):
            raise InvalidInputError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "layer_sizes", sizes)

    @property
    def n_bins(self) -> int:
        return self.layer_sizes[0] // 2


@dataclass(frozen=True)
class CoefficientMatrix:
    """N x 2n matrix of per-instance predictions: alpha columns then kappa."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] % 2 != 0 or rows.size == 0:
            raise InvalidInputError("rows must be a non-empty N x 2n matrix")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n_bins(self) -> int:
        return self.rows.shape[1] // 2

    @property
    def alpha(self) -> np.ndarray:
        return self.rows[:, : self.n_bins]

    @property
    def kappa(self) -> np.ndarray:
        return self.rows[:, self.n_bins:]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 1e-4
    optimizer: str = "rmsprop"
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ensemble_k: int = 1
    seed: int = 0
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8
    subset_fraction: float = 0.8

    def __post_init__(self):
        if self.epochs <= 0:
            raise InvalidInputError("epochs must be > 0")
        if self.learning_rate < 0:
            raise InvalidInputError("learning_rate must be >= 0")
        if self.optimizer not in ("sgd", "rmsprop"):
            raise InvalidInputError(f"unknown optimizer {self.optimizer!r}")
        weights = tuple(float(w) for w in self.loss_weights)
        if len(weights) != 3 or any(w < 0 for w in weights):
            raise InvalidInputError("loss_weights must be three non-negative values")
        if self.ensemble_k < 1:
            raise InvalidInputError("ensemble_k must be >= 1")
        if not 0 < self.subset_fraction <= 1:
            raise InvalidInputError("subset_fraction must be in (0, 1]")
        object.__setattr__(self, "loss_weights", weights)


class Network:
    """Plain MLP: weight matrices (fan_in x fan_out) and bias vectors."""

    def __init__(self, spec: NetworkSpec, weights=None, biases=None):
        self.spec = spec
        sizes = spec.layer_sizes
        if weights is None:
            rng = np.random.default_rng(spec.seed)
            self.weights = [
                rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
                for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
            ]
            self.biases = [np.zeros(fan_out) for fan_out in sizes[1:]]
        else:
            self.weights = [np.asarray(w, dtype=float) for w in weights]
            self.biases = [np.asarray(b, dtype=float) for b in biases]
            got = tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])
            if got != sizes:
                raise InvalidInputError(f"weight shapes {got} do not match spec {sizes}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward_batch(self, x: np.ndarray) -> np.ndarray:
        """Batched forward pass; x is [N, 2n], output [N, 2n]."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.spec.layer_sizes[0]:
            raise InvalidInputError(
                f"input width {x.shape} does not match network input "
                f"{self.spec.layer_sizes[0]}"
            )
        h = x
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if layer < self.n_layers - 1:
                h = np.maximum(h, 0.0)
        return h

    def _forward_cached(self, x: np.ndarray):
        """Forward pass retaining post-activation values for backprop."""
        activations = [x]
        h = x
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if layer < self.n_layers - 1:
                h = np.maximum(h, 0.0)
            activations.append(h)
        return activations

    def backprop(self, activations, grad_out: np.ndarray):
        """Gradients of all weights/biases given dLoss/dOutput."""
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        delta = grad_out
        for layer in range(self.n_layers - 1, -1, -1):
            a_in = activations[layer]
            grads_w[layer] = a_in.T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = delta @ self.weights[layer].T
                delta = delta * (activations[layer] > 0)  # ReLU subgradient
        return grads_w, grads_b

    # -- persistence ---------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "layer_sizes": list(self.spec.layer_sizes),
            "activation": self.spec.activation,
            "variant": self.spec.variant,
            "seed": self.spec.seed,
            "weights": [
                [[float(f"{v:.17g}") for v in row] for row in w] for w in self.weights
            ],
            "biases": [[float(f"{v:.17g}") for v in b] for b in self.biases],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "Network":
        with open(path) as fh:
            doc = json.load(fh)
        spec = NetworkSpec(
            tuple(doc["layer_sizes"]), doc["activation"], doc["variant"], doc["seed"]
        )
        return cls(spec, doc["weights"], doc["biases"])


def spectrum_to_input(spectrum: Spectrum) -> np.ndarray:
    """Real input vector [Re(coeffs); Im(coeffs)] of length 2n."""
    return np.concatenate((spectrum.coefficients.real, spectrum.coefficients.imag))


def forward(net: Network, speaker_spectrum: Spectrum) -> PropagationCoefficient:
    """Predict the propagation coefficient from one speaker spectrum."""
    if 2 * len(speaker_spectrum) != net.spec.layer_sizes[0]:
        raise InvalidInputError(
            f"spectrum has {len(speaker_spectrum)} bins but the network expects "
            f"{net.spec.n_bins}"
        )
    out = net.forward_batch(spectrum_to_input(speaker_spectrum)[None, :])[0]
    n = net.spec.n_bins
    return PropagationCoefficient(out[:n], out[n:], speaker_spectrum.angular_frequencies)


# ---------------------------------------------------------------------------
# Physics loss.
# ---------------------------------------------------------------------------


def _pair_matrices(dataset: PairDataset):
    p1 = np.stack([s.coefficients for s in dataset.speaker_spectra])
    p2 = np.stack([s.coefficients for s in dataset.receiver_spectra])
    dx = dataset.delta_x[:, None]
    return p1, p2, dx


def loss_components(
    dataset: PairDataset, predictions: CoefficientMatrix
) -> tuple[float, float, float]:
    """Unweighted (forward, backward, concentration) residual sums, each
    already carrying the 1/(N*n) normalization."""
    if predictions.rows.shape != (len(dataset), 2 * dataset.n_bins):
        raise InvalidInputError(
            f"predictions shape {predictions.rows.shape} does not match dataset "
            f"({len(dataset)} pairs, {dataset.n_bins} bins)"
        )
    p1, p2, dx = _pair_matrices(dataset)
    gamma = predictions.alpha + 1j * predictions.kappa
    with np.errstate(over="ignore", invalid="ignore"):
        p2_hat = p1 * np.exp(-gamma * dx)
        p1_hat = p2 * np.exp(gamma * dx)
        r_fwd = p2 - p2_hat
        r_bwd = p1 - p1_hat
        demeaned = predictions.rows - predictions.rows.mean(axis=0, keepdims=True)
        norm = dataset.n_bins * len(dataset)
        fwd = float(np.sum(r_fwd.real**2 + r_fwd.imag**2) / norm)
        bwd = float(np.sum(r_bwd.real**2 + r_bwd.imag**2) / norm)
        conc = float(np.sum(demeaned**2) / norm)
    return fwd, bwd, conc


def loss(
    dataset: PairDataset,
    predictions: CoefficientMatrix,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> float:
    """Weighted physics loss: w_fwd*forward + w_bwd*backward + w_conc*concentration."""
    fwd, bwd, conc = loss_components(dataset, predictions)
    return weights[0] * fwd + weights[1] * bwd + weights[2] * conc


def _loss_grad_wrt_predictions(
    dataset: PairDataset,
    predictions: CoefficientMatrix,
    weights: tuple[float, float, float],
) -> np.ndarray:
    """dLoss/dC for the three physics terms, shape [N, 2n]."""
    p1, p2, dx = _pair_matrices(dataset)
    gamma = predictions.alpha + 1j * predictions.kappa
    w_fwd, w_bwd, w_conc = weights
    with np.errstate(over="ignore", invalid="ignore"):
        p2_hat = p1 * np.exp(-gamma * dx)
        p1_hat = p2 * np.exp(gamma * dx)
        r_fwd = p2 - p2_hat
        r_bwd = p1 - p1_hat
        # d|r|^2 through exp(-/+gamma*d): see module docstring; conj products
        # collect the real/imaginary chain-rule terms.
        fwd_a = 2.0 * dx * (np.conj(r_fwd) * p2_hat).real
        fwd_k = -2.0 * dx * (np.conj(r_fwd) * p2_hat).imag
        bwd_a = -2.0 * dx * (np.conj(r_bwd) * p1_hat).real
        bwd_k = 2.0 * dx * (np.conj(r_bwd) * p1_hat).imag
        demeaned = predictions.rows - predictions.rows.mean(axis=0, keepdims=True)
        grad = np.concatenate(
            (w_fwd * fwd_a + w_bwd * bwd_a, w_fwd * fwd_k + w_bwd * bwd_k), axis=1
        )
        grad += w_conc * 2.0 * demeaned
    return grad / (dataset.n_bins * len(dataset))


def _dataset_inputs(dataset: PairDataset) -> np.ndarray:
    return np.stack([spectrum_to_input(s) for s in dataset.speaker_spectra])


def gradients(net: Network, dataset: PairDataset, config: TrainConfig):
    """Analytic gradients of the physics loss w.r.t. every weight and bias."""
    if 2 * dataset.n_bins != net.spec.layer_sizes[0]:
        raise InvalidInputError("dataset bin count does not match network width")
    x = _dataset_inputs(dataset)
    activations = net._forward_cached(x)
    predictions = CoefficientMatrix(activations[-1])
    grad_out = _loss_grad_wrt_predictions(dataset, predictions, config.loss_weights)
    return net.backprop(activations, grad_out)


@dataclass(frozen=True)
class TrainResult:
    """Trained network plus the per-epoch loss history.

    history rows are (total, forward, backward, concentration) evaluated
    at the start of each epoch (before that epoch's update); final_loss
    is the total after the last update.
    """

    network: Network
    history: np.ndarray
    final_loss: float

    @property
    def initial_loss(self) -> float:
        return float(self.history[0, 0])


def train(dataset: PairDataset, net_spec: NetworkSpec, config: TrainConfig) -> TrainResult:
    """Full-batch gradient descent (sgd or rmsprop) on the physics loss."""
    if len(dataset) < 1:
        raise InvalidInputError("dataset must contain at least one pair")
    if 2 * dataset.n_bins != net_spec.layer_sizes[0]:
        raise InvalidInputError("dataset bin count does not match network width")
    net = Network(net_spec)
    x = _dataset_inputs(dataset)
    history = np.empty((config.epochs, 4))
    cache_w = [np.zeros_like(w) for w in net.weights]
    cache_b = [np.zeros_like(b) for b in net.biases]

    for epoch in range(config.epochs):
        activations = net._forward_cached(x)
        predictions = CoefficientMatrix(activations[-1])
        fwd, bwd, conc = loss_components(dataset, predictions)
        w_fwd, w_bwd, w_conc = config.loss_weights
        total = w_fwd * fwd + w_bwd * bwd + w_conc * conc
        history[epoch] = (total, fwd, bwd, conc)
        if not np.isfinite(total):
            raise TrainingDivergedError(epoch)

        grad_out = _loss_grad_wrt_predictions(dataset, predictions, config.loss_weights)
        grads_w, grads_b = net.backprop(activations, grad_out)
        if config.optimizer == "sgd":
            for w, gw in zip(net.weights, grads_w):
                w -= config.learning_rate * gw
            for b, gb in zip(net.biases, grads_b):
                b -= config.learning_rate * gb
        else:
            rho, eps = config.rmsprop_decay, config.rmsprop_eps
            for w, gw, cw in zip(net.weights, grads_w, cache_w):
                cw *= rho
                cw += (1 - rho) * gw**2
                w -= config.learning_rate * gw / (np.sqrt(cw) + eps)
            for b, gb, cb in zip(net.biases, grads_b, cache_b):
                cb *= rho
                cb += (1 - rho) * gb**2
                b -= config.learning_rate * gb / (np.sqrt(cb) + eps)

    final_predictions = CoefficientMatrix(net.forward_batch(x))
    final_loss = loss(dataset, final_predictions, config.loss_weights)
    if not np.isfinite(final_loss):
        raise TrainingDivergedError(config.epochs)
    return TrainResult(net, history, float(final_loss))


@dataclass(frozen=True)
class EnsembleResult:
    """Ensemble members with their per-member consensus coefficients and
    the per-bin across-member mean/std."""

    members: tuple[Network, ...]
    member_gammas: tuple[PropagationCoefficient, ...]
    gamma_mean: PropagationCoefficient
    alpha_std: np.ndarray
    kappa_std: np.ndarray


def ensemble_summary(member_gammas) -> tuple[PropagationCoefficient, np.ndarray, np.ndarray]:
    """Across-member per-bin mean coefficient and (alpha, kappa) stds."""
    member_gammas = list(member_gammas)
    if not member_gammas:
        raise InvalidInputError("need at least one member")
    grid = member_gammas[0].angular_frequencies
    alphas = np.stack([g.alpha for g in member_gammas])
    kappas = np.stack([g.kappa for g in member_gammas])
    mean = PropagationCoefficient(alphas.mean(axis=0), kappas.mean(axis=0), grid)
    return mean, alphas.std(axis=0, ddof=0), kappas.std(axis=0, ddof=0)


def train_ensemble(
    dataset: PairDataset, net_spec: NetworkSpec, config: TrainConfig
) -> EnsembleResult:
    """Train ensemble_k networks on seeded pair subsets of the dataset.

    Each member sees ceil(N * subset_fraction) pairs drawn without
    replacement; its consensus coefficient is the mean prediction over
    all N speaker spectra. Requires ensemble_k >= 2 and N >= 2.
    """
    if config.ensemble_k < 2:
        raise InvalidInputError("train_ensemble needs ensemble_k >= 2")
    if len(dataset) < 2:
        raise InvalidInputError("train_ensemble needs at least two pairs")
    subset_size = int(np.ceil(len(dataset) * config.subset_fraction))
    rng = np.random.default_rng(config.seed)
    member_seeds = rng.integers(0, 2**63 - 1, size=config.ensemble_k)

    members = []
    member_gammas = []
    grid = dataset.angular_frequencies
    x_all = _dataset_inputs(dataset)
    n = dataset.n_bins
    for k in range(config.ensemble_k):
        member_rng = np.random.default_rng(int(member_seeds[k]))
        subset = member_rng.choice(len(dataset), size=subset_size, replace=False)
        member_spec = NetworkSpec(
            net_spec.layer_sizes, net_spec.activation, net_spec.variant,
            seed=int(member_seeds[k]),
        )
        result = train(dataset.subset(sorted(subset)), member_spec, config)
        outputs = result.network.forward_batch(x_all)
        member_gammas.append(
            PropagationCoefficient(
                outputs[:, :n].mean(axis=0), outputs[:, n:].mean(axis=0), grid
            )
        )
        members.append(result.network)
    gamma_mean, alpha_std, kappa_std = ensemble_summary(member_gammas)
    return EnsembleResult(tuple(members), tuple(member_gammas), gamma_mean, alpha_std, kappa_std)


def export_history_csv(result: TrainResult, path) -> None:
    """Loss history CSV: epoch, total, forward, backward, concentration."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "total", "forward", "backward", "concentration"])
        for epoch, row in enumerate(result.history):
            writer.writerow([epoch] + [f"{v:.17g}" for v in row])
