"""Mirroring neural network: a converging-diverging net trained to copy its input.

The narrowest interior layer is the feature code handed to the clusterer.
All non-input layers use the logistic sigmoid; the output layer may be made
linear for ablation. Training is plain online gradient descent on half the
summed squared reconstruction error, one update per presented sample.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, NumericError, TrainingFailure
from .numerics import as_vector, sigmoid

OUTPUT_ACTIVATIONS = ("sigmoid", "linear")


@dataclass(frozen=True)
class MnnConfig:
    layer_dims: tuple
    mirror_threshold: float
    learning_rate: float
    success_fraction: float = 0.95
    weight_init_lo: float = -0.25
    weight_init_hi: float = 0.25
    max_epochs: int = 5000
    output_activation: str = "sigmoid"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 3:
            raise ConfigError("layer_dims", "need an input, at least one hidden and an output layer")
        if any(d < 1 for d in dims):
            raise ConfigError("layer_dims", "widths must be positive")
        if dims[0] != dims[-1]:
            raise ConfigError("layer_dims", f"first and last widths differ ({dims[0]} != {dims[-1]})")
        interior = dims[1:-1]
        narrowest = min(interior)
        if interior.count(narrowest) != 1:
            raise ConfigError("layer_dims", "the narrowest interior layer must be unique")
        if narrowest >= dims[0]:
            raise ConfigError("layer_dims", "bottleneck must be narrower than the input")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate", "must be > 0")
        if not self.mirror_threshold > 0:
            raise ConfigError("mirror_threshold", "must be > 0")
        if not 0 < self.success_fraction <= 1:
            raise ConfigError("success_fraction", "must lie in (0, 1]")
        if self.weight_init_lo > self.weight_init_hi:
            raise ConfigError("weight_init_lo", "must not exceed weight_init_hi")
        if int(self.max_epochs) < 0:
            raise ConfigError("max_epochs", "must be >= 0")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ConfigError("output_activation", f"must be one of {OUTPUT_ACTIVATIONS}")

    @property
    def bottleneck_layer(self):
        interior = self.layer_dims[1:-1]
        return 1 + interior.index(min(interior))

    @property
    def code_width(self):
        return self.layer_dims[self.bottleneck_layer]

    @property
    def input_width(self):
        return self.layer_dims[0]


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Mnn:
    config: MnnConfig
    weights: tuple
    biases: tuple

    def __post_init__(self):
        dims = self.config.layer_dims
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ContractError("parameter count does not match layer_dims")
        ws, bs = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w, b = _frozen(w), _frozen(b)
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ContractError(
                    f"layer {i}: weight {w.shape} / bias {b.shape} do not chain "
                    f"with dims {dims[i]} -> {dims[i + 1]}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NumericError(f"layer {i}: non-finite parameters")
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def n_parameters(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def to_dict(self):
        c = self.config
        return {
            "config": {
                "layer_dims": list(c.layer_dims),
                "mirror_threshold": c.mirror_threshold,
                "learning_rate": c.learning_rate,
                "success_fraction": c.success_fraction,
                "weight_init_lo": c.weight_init_lo,
                "weight_init_hi": c.weight_init_hi,
                "max_epochs": c.max_epochs,
                "output_activation": c.output_activation,
            },
            # row-major, one list per layer transition
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d):
        config = MnnConfig(**d["config"])
        dims = config.layer_dims
        try:
            weights = [
                np.array(w, dtype=np.float64).reshape(dims[i + 1], dims[i])
                for i, w in enumerate(d["weights"])
            ]
        except ValueError as exc:
            raise ContractError(f"weight array does not match layer_dims: {exc}") from None
        return cls(config, tuple(weights), tuple(np.array(b) for b in d["biases"]))


@dataclass(frozen=True)
class MirrorReport:
    epochs_run: int
    mirrored_fraction: float
    mean_reconstruction_distance: float
    converged: bool
    # mirrored fraction after every epoch
    history: tuple = field(default=(), compare=False)

    def to_dict(self, with_history=True):
        d = {
            "epochs_run": self.epochs_run,
            "mirrored_fraction": self.mirrored_fraction,
            "mean_reconstruction_distance": self.mean_reconstruction_distance,
            "converged": self.converged,
        }
        if with_history:
            d["history"] = list(self.history)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            int(d["epochs_run"]),
            float(d["mirrored_fraction"]),
            float(d["mean_reconstruction_distance"]),
            bool(d["converged"]),
            tuple(d.get("history", ())),
        )


def init_mnn(config, rng):
    """Draw every weight and bias independently from the configured uniform range."""
    if not isinstance(config, MnnConfig):
        raise ConfigError("config", "expected an MnnConfig")
    lo, hi = config.weight_init_lo, config.weight_init_hi
    dims = config.layer_dims
    weights, biases = [], []
    for i in range(len(dims) - 1):
        if lo == hi:
            weights.append(np.full((dims[i + 1], dims[i]), lo))
            biases.append(np.full(dims[i + 1], lo))
        else:
            weights.append(rng.uniform(lo, hi, size=(dims[i + 1], dims[i])))
            biases.append(rng.uniform(lo, hi, size=dims[i + 1]))
    return Mnn(config, tuple(weights), tuple(biases))


def _activations(weights, biases, x, linear_output):
    """Layer activations for a vector or a row-stacked batch."""
    acts = [x]
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w.T + b
        acts.append(z if (linear_output and i == last) else sigmoid(z))
    return acts


def _linear_out(mnn):
    return mnn.config.output_activation == "linear"


def _check_input(mnn, x):
    x = as_vector(x)
    if x.shape[0] != mnn.config.input_width:
        raise ContractError(
            f"input width {x.shape[0]} does not match network input {mnn.config.input_width}"
        )
    return x


def _check_batch(mnn, data):
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != mnn.config.input_width:
        raise ContractError(
            f"data shape {X.shape} does not match network input {mnn.config.input_width}"
        )
    return X


def forward(mnn, x):
    """Return ``(output, code)`` for one input vector."""
    x = _check_input(mnn, x)
    acts = _activations(mnn.weights, mnn.biases, x, _linear_out(mnn))
    return acts[-1], acts[mnn.config.bottleneck_layer]


def encode(mnn, x):
    return forward(mnn, x)[1]


def encode_batch(mnn, data):
    X = _check_batch(mnn, data)
    return _activations(mnn.weights, mnn.biases, X, _linear_out(mnn))[mnn.config.bottleneck_layer]


def reconstruct_batch(mnn, data):
    X = _check_batch(mnn, data)
    return _activations(mnn.weights, mnn.biases, X, _linear_out(mnn))[-1]


def reconstruction_distances(mnn, data):
    X = _check_batch(mnn, data)
    out = _activations(mnn.weights, mnn.biases, X, _linear_out(mnn))[-1]
    return np.sqrt(((out - X) ** 2).sum(axis=1))


def reconstruction_loss(mnn, x):
    """Half the summed squared error between input and reconstruction."""
    out, _ = forward(mnn, x)
    d = out - x
    return 0.5 * float(d @ d)


def _backward(weights, acts, x, linear_output):
    n = len(weights)
    grads_w = [None] * n
    grads_b = [None] * n
    out = acts[-1]
    delta = out - x
    if not linear_output:
        delta = delta * out * (1.0 - out)
    for i in range(n - 1, -1, -1):
        grads_w[i] = np.outer(delta, acts[i])
        grads_b[i] = delta
        if i:
            a = acts[i]
            delta = (weights[i].T @ delta) * a * (1.0 - a)
    return grads_w, grads_b


def gradient(mnn, x):
    """Analytic gradient of ``reconstruction_loss`` with respect to every parameter.

    Returns ``(weight_grads, bias_grads)`` shaped like the parameters.
    """
    x = _check_input(mnn, x)
    acts = _activations(mnn.weights, mnn.biases, x, _linear_out(mnn))
    return _backward(mnn.weights, acts, x, _linear_out(mnn))


def numeric_gradient(mnn, x, epsilon=1e-5):
    """Central-difference estimate of the same gradient, parameter by parameter."""
    if not epsilon > 0:
        raise ContractError("epsilon must be > 0")
    x = _check_input(mnn, x)
    ws = [w.copy() for w in mnn.weights]
    bs = [b.copy() for b in mnn.biases]
    linear = _linear_out(mnn)

    def loss():
        d = _activations(ws, bs, x, linear)[-1] - x
        return 0.5 * float(d @ d)

    def estimate(params):
        g = np.zeros_like(params)
        flat, gflat = params.reshape(-1), g.reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + epsilon
            up = loss()
            flat[j] = keep - epsilon
            down = loss()
            flat[j] = keep
            gflat[j] = (up - down) / (2.0 * epsilon)
        return g

    return [estimate(w) for w in ws], [estimate(b) for b in bs]


def _sgd_step(weights, biases, x, lr, linear_output):
    """Update the parameter arrays in place; returns nothing."""
    acts = _activations(weights, biases, x, linear_output)
    gw, gb = _backward(weights, acts, x, linear_output)
    for i in range(len(weights)):
        if not (np.isfinite(gw[i]).all() and np.isfinite(gb[i]).all()):
            raise NumericError(f"non-finite gradient in layer {i} ({weights[i].shape[1]} -> {weights[i].shape[0]})")
        weights[i] -= lr * gw[i]
        biases[i] -= lr * gb[i]


def backprop_step(mnn, x, learning_rate):
    """One gradient-descent update toward reproducing ``x``.

    Returns the updated network and its post-update reconstruction distance.
    """
    x = _check_input(mnn, x)
    if learning_rate < 0:
        raise ContractError("learning_rate must be >= 0")
    ws = [w.copy() for w in mnn.weights]
    bs = [b.copy() for b in mnn.biases]
    if learning_rate > 0:
        _sgd_step(ws, bs, x, learning_rate, _linear_out(mnn))
    new = Mnn(mnn.config, tuple(ws), tuple(bs))
    out, _ = forward(new, x)
    d = out - x
    return new, float(np.sqrt(d @ d))


def is_mirrored(mnn, x, threshold):
    x = _check_input(mnn, x)
    out, _ = forward(mnn, x)
    d = out - x
    return bool(np.sqrt(d @ d) <= threshold)


def mirror_status(mnn, data, threshold):
    """Fraction of samples mirrored within ``threshold`` and the mean distance."""
    dist = reconstruction_distances(mnn, data)
    return float(np.mean(dist <= threshold)), float(dist.mean())


def train_mirror(mnn, data, config=None, rng=None):
    """Present the whole ensemble repeatedly until enough samples are mirrored.

    Each epoch visits the samples in an order shuffled by ``rng`` and applies
    one update per sample. Training stops as soon as the mirrored fraction
    reaches ``config.success_fraction``; if ``config.max_epochs`` runs out
    first a ``TrainingFailure`` carrying the report and the final network is
    raised.
    """
    config = mnn.config if config is None else config
    if rng is None:
        raise ContractError("train_mirror needs an rng for epoch shuffling")
    X = _check_batch(mnn, data)
    if X.shape[0] == 0:
        raise ContractError("train_mirror needs at least one sample")
    ws = [w.copy() for w in mnn.weights]
    bs = [b.copy() for b in mnn.biases]
    linear = config.output_activation == "linear"
    lr = config.learning_rate
    history = []
    fraction, mean_dist = mirror_status(mnn, X, config.mirror_threshold)
    epochs = 0
    converged = False
    while epochs < config.max_epochs:
        for s in rng.permutation(X.shape[0]):
            _sgd_step(ws, bs, X[s], lr, linear)
        epochs += 1
        out = _activations(ws, bs, X, linear)[-1]
        dist = np.sqrt(((out - X) ** 2).sum(axis=1))
        fraction, mean_dist = float(np.mean(dist <= config.mirror_threshold)), float(dist.mean())
        history.append(fraction)
        if fraction >= config.success_fraction:
            converged = True
            break
    trained = Mnn(config, tuple(ws), tuple(bs))
    report = MirrorReport(epochs, fraction, mean_dist, converged, tuple(history))
    if not converged:
        raise TrainingFailure(
            f"mirrored {fraction:.3f} of samples after {epochs} epochs "
            f"(needed {config.success_fraction})",
            report,
            trained,
        )
    return trained, report
