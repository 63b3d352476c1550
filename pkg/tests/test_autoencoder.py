import math

import numpy as np
import pytest

from deepguard.autoencoder import (AutoencoderModel, NoiseSpec, TrainConfig, corrupt,
                                   default_layer_dims, dumps_model, forward, init_model,
                                   load_model, loads_model, loss_and_gradients, mse_loss,
                                   reconstruct_batch, save_model, train, training_pair, vae_kl)
from deepguard.errors import (ConfigError, DataError, DimensionError, DivergenceError,
                              ParseError, VersionError)
from deepguard.simworld import nominal_corpus


def numeric_grad(model, x, y, kl_weight=1.0, eps=None, h=1e-5):
    gw = []
    for w in model.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            old = w[idx]
            w[idx] = old + h
            lp = loss_and_gradients(model, x, y, kl_weight, eps)[0]
            w[idx] = old - h
            lm = loss_and_gradients(model, x, y, kl_weight, eps)[0]
            w[idx] = old
            g[idx] = (lp - lm) / (2 * h)
        gw.append(g)
    gb = []
    for b in model.biases:
        g = np.zeros_like(b)
        for i in range(b.size):
            old = b[i]
            b[i] = old + h
            lp = loss_and_gradients(model, x, y, kl_weight, eps)[0]
            b[i] = old - h
            lm = loss_and_gradients(model, x, y, kl_weight, eps)[0]
            b[i] = old
            g[i] = (lp - lm) / (2 * h)
        gb.append(g)
    return gw, gb


def assert_grads_close(analytic, numeric, rel=1e-4):
    for a, n in zip(analytic, numeric):
        scale = np.maximum(np.abs(a), np.abs(n))
        err = np.abs(a - n)
        ok = (err <= rel * scale) | (err <= 1e-10)
        assert ok.all(), (a, n)


def test_gradient_check_simple_424(rng):
    model = init_model("simple", (4, 2, 4), seed=3)
    x = rng.random((1, 4))
    _, gw, gb = loss_and_gradients(model, x, x)
    nw, nb = numeric_grad(model, x, x)
    assert_grads_close(gw, nw)
    assert_grads_close(gb, nb)


@pytest.mark.parametrize("acts", [("relu", "sigmoid"), ("linear", "sigmoid")])
def test_gradient_check_other_activations(rng, acts):
    model = init_model("simple", (5, 3, 5), seed=1, activations=acts)
    x = rng.random((3, 5))
    _, gw, gb = loss_and_gradients(model, x, x)
    nw, nb = numeric_grad(model, x, x)
    assert_grads_close(gw, nw)
    assert_grads_close(gb, nb)


def test_gradient_check_deep(rng):
    model = init_model("deep", (6, 4, 2, 4, 6), seed=2)
    x = rng.random((2, 6))
    _, gw, gb = loss_and_gradients(model, x, x)
    nw, nb = numeric_grad(model, x, x)
    assert_grads_close(gw, nw)
    assert_grads_close(gb, nb)


@pytest.mark.parametrize("sampled", [False, True])
def test_gradient_check_variational(rng, sampled):
    model = init_model("variational", (6, 4, 2, 4, 6), seed=4)
    x = rng.random((3, 6))
    eps = rng.standard_normal((3, 2)) if sampled else None
    _, gw, gb = loss_and_gradients(model, x, x, 0.7, eps)
    nw, nb = numeric_grad(model, x, x, 0.7, eps)
    assert_grads_close(gw, nw)
    assert_grads_close(gb, nb)


def test_init_deterministic_and_bounded():
    a = init_model("simple", [4, 2, 4], seed=7)
    b = init_model("simple", [4, 2, 4], seed=7)
    assert a.parameters_equal(b)
    assert all(np.abs(w).max() <= 1.0 for w in a.weights)
    assert not a.parameters_equal(init_model("simple", [4, 2, 4], seed=8))


@pytest.mark.parametrize("variant,dims", [
    ("deep", [4, 2]), ("simple", [4, 2, 3]), ("simple", [4, 3, 2, 3, 4]),
    ("deep", [4, 2, 4]), ("variational", [4, 3, 3, 4]), ("bogus", [4, 2, 4]),
])
def test_init_rejects_bad_dims(variant, dims):
    with pytest.raises(ConfigError):
        init_model(variant, dims, seed=0)


def test_default_dims():
    assert default_layer_dims("simple", 2304) == (2304, 256, 2304)
    assert default_layer_dims("deep", 2304) == (2304, 256, 64, 256, 2304)
    assert default_layer_dims("denoising", 10) == (10, 256, 64, 256, 10)
    assert default_layer_dims("variational", 10) == (10, 256, 32, 256, 10)


def test_forward_zero_weights_gives_half():
    m = init_model("simple", (6, 3, 6), seed=0)
    for w in m.weights:
        w[:] = 0
    out = forward(m, np.random.default_rng(0).random((1, 2, 3)))
    assert out.shape == (1, 2, 3)
    assert np.all(out == 0.5)


def test_forward_hand_example():
    m = init_model("simple", (1, 1, 1), seed=0, activations=("linear", "sigmoid"))
    m.weights[0][:] = 1.0
    m.weights[1][:] = 1.0
    assert forward(m, np.array([0.0]))[0] == 0.5


def test_forward_shape_mismatch():
    m = init_model("simple", (4, 2, 4), seed=0)
    with pytest.raises(DimensionError):
        forward(m, np.zeros(5))


def test_forward_pure_and_vae_mean_decoded(rng):
    m = init_model("variational", (6, 4, 2, 4, 6), seed=0)
    x = rng.random(6)
    assert np.array_equal(forward(m, x), forward(m, x))
    assert np.allclose(forward(m, x), reconstruct_batch(m, x[None])[0])
    assert np.all((forward(m, x) >= 0) & (forward(m, x) <= 1))


def test_mse_loss_examples():
    assert mse_loss([0.3, 0.3], [0.3, 0.3]) == 0
    assert mse_loss([0.5], [0.25]) == pytest.approx(0.0625)
    assert mse_loss([1, 0], [0, 1]) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        mse_loss([1, 0], [1])


def test_vae_kl_examples():
    assert vae_kl([0, 0], [0, 0]) == 0
    assert vae_kl([1], [0]) == pytest.approx(0.5)
    # -(1 + ln 4 - 0 - 4) / 2
    assert vae_kl([0], [math.log(4)]) == pytest.approx(0.5 * (3 - math.log(4)), abs=1e-12)
    assert vae_kl([0], [math.log(4)]) == pytest.approx(0.8069, abs=1e-4)
    with pytest.raises(DimensionError):
        vae_kl([0, 1], [0])


def test_corrupt():
    x = np.random.default_rng(1).random((1, 4, 4))
    assert np.array_equal(corrupt(x, NoiseSpec("gaussian", 0.0), np.random.default_rng(0)), x)
    a = corrupt(x, NoiseSpec("gaussian", 0.1), np.random.default_rng(5))
    b = corrupt(x, NoiseSpec("gaussian", 0.1), np.random.default_rng(5))
    assert np.array_equal(a, b) and not np.array_equal(a, x)
    assert a.min() >= 0 and a.max() <= 1
    sp = corrupt(x, NoiseSpec("salt_pepper", 1.0), np.random.default_rng(0))
    assert set(np.unique(sp)) <= {0.0, 1.0}
    with pytest.raises(ConfigError):
        NoiseSpec("speckle", 0.1)
    with pytest.raises(ConfigError):
        NoiseSpec("gaussian", -1)


def test_denoising_pairs_have_clean_target(rng):
    m = init_model("denoising", (4, 3, 2, 3, 4), seed=0)
    x = rng.random((5, 4))
    inp, tgt = training_pair(m, x, TrainConfig(noise=NoiseSpec("gaussian", 0.3)), rng)
    assert tgt is x
    assert not np.array_equal(inp, x)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(epochs=-1)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0)


def test_train_zero_epochs_and_empty():
    m = init_model("simple", (4, 2, 4), seed=0)
    m2, hist = train(m, np.ones((3, 4)) * 0.5, TrainConfig(epochs=0))
    assert hist == [] and m2.parameters_equal(m)
    with pytest.raises(DataError):
        train(m, np.empty((0, 4)), TrainConfig(epochs=1))


def test_train_divergence_names_epoch():
    m = init_model("simple", (4, 2, 4), seed=0, activations=("linear", "linear"))
    x = np.random.default_rng(0).random((64, 4))
    with pytest.raises(DivergenceError) as info:
        with np.errstate(all="ignore"):
            train(m, x, TrainConfig(epochs=50, learning_rate=1e6))
    assert info.value.epoch >= 0


def test_train_deterministic(rng):
    x = rng.random((40, 6))
    m = init_model("variational", (6, 4, 2, 4, 6), seed=1)
    a, ha = train(m, x, TrainConfig(epochs=3, batch_size=8, seed=9))
    b, hb = train(m, x, TrainConfig(epochs=3, batch_size=8, seed=9))
    assert ha == hb and a.parameters_equal(b)
    assert dumps_model(a) == dumps_model(b)


@pytest.fixture(scope="module")
def small_corpus():
    frames, _ = nominal_corpus(["straight", "circle", "s-curve"], 334, seed=11)
    return frames[:1000]


def test_simple_training_reduces_loss_tenfold(small_corpus):
    m = init_model("simple", default_layer_dims("simple", 2304), seed=0)
    init_loss = mse_loss(small_corpus, reconstruct_batch(m, small_corpus))
    _, hist = train(m, small_corpus, TrainConfig(epochs=50, seed=0))
    assert len(hist) == 50
    assert hist[-1] <= 0.1 * init_loss


@pytest.mark.slow
def test_training_median_over_seeds(small_corpus):
    x = small_corpus[:300]
    first, last = [], []
    for seed in range(5):
        m = init_model("deep", default_layer_dims("deep", 2304), seed=seed)
        _, hist = train(m, x, TrainConfig(epochs=5, seed=seed))
        first.append(mse_loss(x, reconstruct_batch(m, x)))
        last.append(hist[-1])
    assert np.median(last) < np.median(first)


@pytest.mark.parametrize("variant", ["simple", "deep", "denoising", "variational"])
def test_save_load_roundtrip(tmp_path, variant):
    dims = default_layer_dims(variant, 12)
    m = init_model(variant, dims, seed=2, frame_shape=(1, 3, 4))
    p = tmp_path / "m.json"
    save_model(m, p)
    back = load_model(p)
    assert back.parameters_equal(m)
    assert back.frame_shape == (1, 3, 4)
    assert back.activations == m.activations


def test_load_errors(tmp_path):
    m = init_model("simple", (4, 2, 4), seed=0)
    text = dumps_model(m)
    with pytest.raises(VersionError):
        loads_model(text.replace('"format_version": 1', '"format_version": "99"'))
    with pytest.raises(ParseError):
        loads_model(text[: len(text) // 2])
    with pytest.raises(ParseError):
        loads_model('{"format_version": 1, "variant": "simple"}')


def test_model_fields():
    m = init_model("variational", (6, 4, 2, 4, 6), seed=0)
    assert isinstance(m, AutoencoderModel)
    # encoder, latent mean, two decoder layers plus the log-variance head
    assert len(m.weights) == 5
    assert m.weights[-1].shape == m.weights[1].shape
