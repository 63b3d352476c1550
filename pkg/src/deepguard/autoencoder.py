"""Dense autoencoders written directly against numpy.

Four variants share one layer stack:

* ``simple``      one hidden layer, ``[N, h, N]``
* ``deep``        two or more hidden layers, e.g. ``[N, 256, 64, 256, N]``
* ``denoising``   deep stack trained on (corrupt(x), x) pairs
* ``variational`` deep stack whose innermost layer is split into a mean head
  and a log-variance head; inference decodes the mean (no sampling)

Weights are stored as ``(fan_out, fan_in)`` matrices. For the variational
variant the log-variance head is appended after the decoder layers.
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DimensionError, DivergenceError, ParseError, VersionError

VARIANTS = ("simple", "deep", "denoising", "variational")
ACTIVATIONS = ("sigmoid", "relu", "linear")
FORMAT_VERSION = 1

DEFAULT_HIDDEN = {
    "simple": (256,),
    "deep": (256, 64),
    "denoising": (256, 64),
    "variational": (256, 32),
}


def default_layer_dims(variant, n_inputs):
    """Symmetric default architecture for ``variant`` on ``n_inputs`` pixels."""
    if variant not in DEFAULT_HIDDEN:
        raise ConfigError(f"unknown autoencoder variant {variant!r}")
    enc = (n_inputs,) + DEFAULT_HIDDEN[variant]
    return enc + enc[-2::-1]


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"
    magnitude: float = 0.1

    def __post_init__(self):
        if self.kind not in ("gaussian", "salt_pepper"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if not self.magnitude >= 0:
            raise ConfigError("noise magnitude must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 0.1
    seed: int = 0
    noise: NoiseSpec | None = None
    kl_weight: float = 1.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.kl_weight < 0:
            raise ConfigError("kl_weight must be >= 0")


@dataclass(eq=False)
class AutoencoderModel:
    variant: str
    layer_dims: tuple
    weights: list
    biases: list
    activations: tuple
    frame_shape: tuple | None = field(default=None)

    @property
    def n_inputs(self):
        return self.layer_dims[0]

    @property
    def n_layers(self):
        return len(self.layer_dims) - 1

    @property
    def latent_index(self):
        """Index of the mean-head layer (variational only)."""
        return len(self.layer_dims) // 2 - 1

    def copy(self):
        return AutoencoderModel(
            self.variant,
            tuple(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            tuple(self.activations),
            self.frame_shape,
        )

    def parameters_equal(self, other):
        return (
            self.variant == other.variant
            and tuple(self.layer_dims) == tuple(other.layer_dims)
            and tuple(self.activations) == tuple(other.activations)
            and len(self.weights) == len(other.weights)
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )


def _check_dims(variant, layer_dims):
    if variant not in VARIANTS:
        raise ConfigError(f"unknown autoencoder variant {variant!r}")
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 3:
        raise ConfigError(f"layer_dims needs at least one hidden layer: {dims}")
    if dims[0] != dims[-1]:
        raise ConfigError(f"first and last layer_dims differ: {dims[0]} != {dims[-1]}")
    if dims != dims[::-1]:
        raise ConfigError(f"encoder and decoder must be symmetric: {dims}")
    if any(d < 1 for d in dims):
        raise ConfigError("layer widths must be positive")
    hidden = len(dims) - 2
    if variant == "simple" and hidden != 1:
        raise ConfigError("simple variant has exactly one hidden layer")
    if variant in ("deep", "denoising") and hidden < 2:
        raise ConfigError(f"{variant} variant needs at least two hidden layers")
    if variant == "variational" and (len(dims) % 2 == 0 or hidden < 1):
        raise ConfigError("variational layer_dims must have a single innermost latent layer")
    return dims


def _default_activations(variant, dims):
    acts = ["sigmoid"] * (len(dims) - 1)
    if variant == "variational":
        acts[len(dims) // 2 - 1] = "linear"
        acts.append("linear")
    return tuple(acts)


def init_model(variant, layer_dims, seed, activations=None, frame_shape=None):
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases."""
    dims = _check_dims(variant, layer_dims)
    rng = np.random.default_rng(seed)
    shapes = [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]
    if variant == "variational":
        c = len(dims) // 2 - 1
        shapes.append((dims[c + 1], dims[c]))
    weights = []
    for fan_out, fan_in in shapes:
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
    biases = [np.zeros(s[0]) for s in shapes]
    acts = tuple(activations) if activations is not None else _default_activations(variant, dims)
    if len(acts) != len(shapes) or any(a not in ACTIVATIONS for a in acts):
        raise ConfigError(f"need {len(shapes)} activations from {ACTIVATIONS}, got {acts}")
    if frame_shape is not None and math.prod(frame_shape) != dims[0]:
        raise ConfigError(f"frame shape {tuple(frame_shape)} does not match input width {dims[0]}")
    return AutoencoderModel(variant, dims, weights, biases, acts,
                            tuple(frame_shape) if frame_shape is not None else None)


def _act(name, z):
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _act_grad(name, z, a):
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    return np.ones_like(z)


def _forward_batch(model, x, eps=None):
    """Forward pass over rows of ``x``; returns (output, cache).

    ``eps`` (variational only) is the reparameterisation noise; None decodes the mean.
    """
    cache = {"inputs": [], "pre": [], "out": []}
    a = x
    n = model.n_layers
    vae = model.variant == "variational"
    c = model.latent_index
    for i in range(n):
        w, b, act = model.weights[i], model.biases[i], model.activations[i]
        z = a @ w.T + b
        h = _act(act, z)
        cache["inputs"].append(a)
        cache["pre"].append(z)
        cache["out"].append(h)
        if vae and i == c:
            wl, bl, al = model.weights[n], model.biases[n], model.activations[n]
            zl = a @ wl.T + bl
            logvar = _act(al, zl)
            cache["logvar_pre"] = zl
            cache["logvar"] = logvar
            cache["mean"] = h
            if eps is not None:
                h = h + np.exp(0.5 * logvar) * eps
            cache["eps"] = eps
        a = h
    return a, cache


def forward(model, frame):
    """Reconstruct one frame (or a flat vector) through the network."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.size != model.n_inputs:
        raise DimensionError(f"input has {arr.size} values, model expects {model.n_inputs}")
    out, _ = _forward_batch(model, arr.reshape(1, -1))
    return out.reshape(arr.shape)


def reconstruct_batch(model, frames):
    """Reconstruct a stack of frames; returns an array shaped like ``frames``."""
    arr = np.asarray(frames, dtype=np.float64)
    flat = arr.reshape(arr.shape[0], -1)
    if flat.shape[1] != model.n_inputs:
        raise DimensionError(f"frames have {flat.shape[1]} values, model expects {model.n_inputs}")
    out, _ = _forward_batch(model, flat)
    return out.reshape(arr.shape)


def mse_loss(x, x_hat):
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {x_hat.shape}")
    d = (x - x_hat).ravel()
    return float(np.dot(d, d) / d.size)


def vae_kl(mean, log_variance):
    mean = np.asarray(mean, dtype=np.float64)
    log_variance = np.asarray(log_variance, dtype=np.float64)
    if mean.shape != log_variance.shape:
        raise DimensionError(f"mean/log-variance length mismatch {mean.shape} vs {log_variance.shape}")
    return float(-0.5 * np.sum(1.0 + log_variance - mean**2 - np.exp(log_variance)))


def corrupt(frame, noise, rng):
    """Input corruption for denoising training. Output stays in [0, 1]."""
    x = np.asarray(frame, dtype=np.float64)
    if noise is None or noise.magnitude == 0:
        return x.copy()
    if noise.kind == "gaussian":
        return np.clip(x + rng.normal(0.0, noise.magnitude, size=x.shape), 0.0, 1.0)
    u = rng.random(x.shape)
    out = x.copy()
    half = noise.magnitude / 2.0
    out[u < half] = 0.0
    out[(u >= half) & (u < 2 * half)] = 1.0
    return out


def training_pair(model, x, config, rng):
    """(input, target) for one batch. Denoising feeds corrupt(x) against the clean x."""
    if model.variant == "denoising":
        return corrupt(x, config.noise or NoiseSpec(), rng), x
    return x, x


def loss_and_gradients(model, inputs, targets, kl_weight=1.0, eps=None):
    """Batch loss and parameter gradients.

    The loss is the per-frame mean squared error averaged over the batch; the
    variational variant adds ``kl_weight`` times the KL term divided by the
    number of pixels so both terms are per-pixel means.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    bsz, m = targets.shape
    out, cache = _forward_batch(model, inputs, eps)
    diff = out - targets
    loss = float(np.sum(diff * diff) / (bsz * m))
    n = model.n_layers
    vae = model.variant == "variational"
    c = model.latent_index
    gw = [None] * len(model.weights)
    gb = [None] * len(model.biases)
    if vae:
        mu, lv = cache["mean"], cache["logvar"]
        kl = -0.5 * np.sum(1.0 + lv - mu**2 - np.exp(lv)) / bsz
        loss += kl_weight * kl / m
    grad_a = 2.0 * diff / (bsz * m)
    for i in range(n - 1, -1, -1):
        act = model.activations[i]
        z, h = cache["pre"][i], cache["out"][i]
        if vae and i == c:
            # grad_a is dL/d(latent sample); split into mean and log-variance paths
            e = cache["eps"]
            lv = cache["logvar"]
            g_mu = grad_a + kl_weight * mu / (bsz * m)
            g_lv = kl_weight * 0.5 * (np.exp(lv) - 1.0) / (bsz * m)
            if e is not None:
                g_lv = g_lv + grad_a * e * 0.5 * np.exp(0.5 * lv)
            dz = g_mu * _act_grad(act, z, h)
            dzl = g_lv * _act_grad(model.activations[n], cache["logvar_pre"], lv)
            a_in = cache["inputs"][i]
            gw[n] = dzl.T @ a_in
            gb[n] = dzl.sum(axis=0)
            gw[i] = dz.T @ a_in
            gb[i] = dz.sum(axis=0)
            grad_a = dz @ model.weights[i] + dzl @ model.weights[n]
            continue
        dz = grad_a * _act_grad(act, z, h)
        gw[i] = dz.T @ cache["inputs"][i]
        gb[i] = dz.sum(axis=0)
        if i:
            grad_a = dz @ model.weights[i]
    return loss, gw, gb


def _as_matrix(dataset, n_inputs):
    if len(dataset) == 0:
        raise DataError("training dataset is empty")
    x = np.asarray(dataset, dtype=np.float64).reshape(len(dataset), -1)
    if x.shape[1] != n_inputs:
        raise DimensionError(f"frames have {x.shape[1]} values, model expects {n_inputs}")
    return x


def train(model, dataset, config, progress=None):
    """Minibatch SGD for ``config.epochs`` passes.

    Steps follow the gradient of the per-frame *sum* of squared errors
    (plus the KL term for the variational variant), averaged over the batch;
    the reported history is the per-pixel mean loss of each epoch. Returns a
    new model and that history; the input model is left untouched.
    Shuffling, corruption and VAE sampling each draw from their own stream
    spawned from ``config.seed``.
    """
    x = _as_matrix(dataset, model.n_inputs)
    model = model.copy()
    history = []
    if config.epochs == 0:
        return model, history
    shuffle_ss, noise_ss, sample_ss = np.random.SeedSequence(config.seed).spawn(3)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    noise_rng = np.random.default_rng(noise_ss)
    sample_rng = np.random.default_rng(sample_ss)
    vae = model.variant == "variational"
    latent = model.layer_dims[model.latent_index + 1]
    # mean-loss gradients times the pixel count give the per-frame sum objective
    lr = config.learning_rate * model.n_inputs
    n = x.shape[0]
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = x[idx]
            inp, tgt = training_pair(model, xb, config, noise_rng)
            eps = sample_rng.standard_normal((len(idx), latent)) if vae else None
            loss, gw, gb = loss_and_gradients(model, inp, tgt, config.kl_weight, eps)
            if not math.isfinite(loss):
                raise DivergenceError(epoch, loss)
            total += loss * len(idx)
            for w, g in zip(model.weights, gw):
                w -= lr * g
            for b, g in zip(model.biases, gb):
                b -= lr * g
        mean_loss = total / n
        if not math.isfinite(mean_loss):
            raise DivergenceError(epoch, mean_loss)
        history.append(mean_loss)
        if progress is not None:
            progress(epoch, mean_loss)
    return model, history


def _fmt(values):
    return "[" + ",".join(format(float(v), ".17g") for v in np.ravel(values)) + "]"


def dumps_model(model):
    """Serialize to the JSON weights format (17 significant digits per number)."""
    head = {
        "format_version": FORMAT_VERSION,
        "variant": model.variant,
        "layer_dims": list(model.layer_dims),
        "activation": list(model.activations),
    }
    if model.frame_shape is not None:
        head["frame_shape"] = list(model.frame_shape)
    parts = [json.dumps(head)[:-1]]
    parts.append(', "weights": [' + ", ".join(_fmt(w) for w in model.weights) + "]")
    parts.append(', "biases": [' + ", ".join(_fmt(b) for b in model.biases) + "]}")
    return "".join(parts) + "\n"


def save_model(model, path):
    Path(path).write_text(dumps_model(model))


def loads_model(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed weights file: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ParseError("weights file lacks format_version")
    if str(doc["format_version"]) != str(FORMAT_VERSION):
        raise VersionError(f"unsupported weights format_version {doc['format_version']!r}")
    try:
        variant = doc["variant"]
        dims = _check_dims(variant, doc["layer_dims"])
        acts = tuple(doc["activation"])
        shapes = [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]
        if variant == "variational":
            c = len(dims) // 2 - 1
            shapes.append((dims[c + 1], dims[c]))
        if len(doc["weights"]) != len(shapes) or len(doc["biases"]) != len(shapes):
            raise ParseError("layer count does not match layer_dims")
        weights = [np.array(w, dtype=np.float64).reshape(s) for w, s in zip(doc["weights"], shapes)]
        biases = [np.array(b, dtype=np.float64).reshape(s[0]) for b, s in zip(doc["biases"], shapes)]
        fs = doc.get("frame_shape")
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise ParseError(f"malformed weights file: {exc}") from exc
    if len(acts) != len(shapes) or any(a not in ACTIVATIONS for a in acts):
        raise ParseError(f"bad activation list {acts}")
    return AutoencoderModel(variant, dims, weights, biases, acts, tuple(fs) if fs else None)


def load_model(path):
    return loads_model(Path(path).read_text())
