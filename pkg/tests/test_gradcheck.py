"""Finite-difference verification of every layer's analytic gradients.

Each case builds a small 64-bit layer, probes it with a random linear
functional of its output, and compares the analytic input and parameter
gradients against central differences. The tolerance is a worst-case
elementwise relative error of 1e-4 with denominator max(|a|, |b|, 1e-8).
"""

import numpy as np
import pytest

from nstate import layers as L
from nstate.layers import _sigmoid
from nstate.numerics import finite_diff_grad, rel_error, seeded_rng
from nstate.training import bce_loss

TOL = 1e-4
SEEDS = (0, 1, 2, 3, 4)


def check_gradients(make_layer, x_shape, seed, train=True, stochastic=False):
    """Worst relative error over the input gradient and every parameter."""
    rng = seeded_rng(777, seed)
    layer = make_layer(seeded_rng(seed, 0))
    x = rng.standard_normal(x_shape)
    mask_rng = (31, seed)

    def fresh():
        if stochastic:
            layer.reseed(seeded_rng(*mask_rng))

    fresh()
    y = layer.forward(x, train=train)
    probe = rng.standard_normal(y.shape)

    def f_of_x(xv):
        fresh()
        return float((layer.forward(xv, train=train) * probe).sum())

    fresh()
    layer.forward(x, train=train)
    dx = layer.backward(probe.copy())
    worst = rel_error(dx, finite_diff_grad(f_of_x, x))
    for name in list(layer.params):
        ref = layer.params[name]
        orig = ref.copy()

        def f_of_p(pv, ref=ref):
            ref[...] = pv
            fresh()
            value = float((layer.forward(x, train=train) * probe).sum())
            ref[...] = orig
            return value

        fresh()
        layer.forward(x, train=train)
        layer.backward(probe.copy())
        analytic = layer.grads[name].copy()
        worst = max(worst, rel_error(analytic, finite_diff_grad(f_of_p, orig)))
    return worst


F64 = dict(dtype=np.float64)

LAYER_CASES = {
    "conv1d_s1": (lambda r: L.Conv1D(3, 4, 3, stride=1, rng=r, **F64), (2, 3, 9)),
    "conv1d_s2": (lambda r: L.Conv1D(3, 4, 5, stride=2, rng=r, **F64), (2, 3, 11)),
    "conv2d_temporal": (lambda r: L.Conv2DTemporal(2, 3, 3, rng=r, **F64), (2, 2, 4, 7)),
    "depthwise": (lambda r: L.DepthwiseConv2D(3, 2, 4, rng=r, **F64), (2, 3, 4, 6)),
    "separable": (lambda r: L.SeparableConv2D(3, 4, 3, rng=r, **F64), (2, 3, 1, 8)),
    "avg_pool": (lambda r: L.AvgPool2D(3), (2, 3, 1, 10)),
    "batchnorm_train": (lambda r: L.BatchNorm(3, **F64), (4, 3, 5)),
    "dense": (lambda r: L.Dense(6, 4, rng=r, **F64), (3, 6)),
    "lstm": (lambda r: L.LSTM(3, 4, rng=r, **F64), (2, 5, 3)),
    "lstm_reversed": (lambda r: L.LSTM(3, 4, rng=r, **F64, go_backwards=True), (2, 5, 3)),
    "bilstm": (lambda r: L.Bidirectional(3, 4, rng=r, **F64), (2, 5, 3)),
    "flatten": (lambda r: L.Flatten(), (2, 3, 4)),
    "time_distributed_flatten": (lambda r: L.TimeDistributedFlatten(), (2, 3, 5)),
    "relu": (lambda r: L.Activation("relu"), (3, 7)),
    "leaky_relu": (lambda r: L.Activation("leaky_relu", slope=0.3), (3, 7)),
    "elu": (lambda r: L.Activation("elu", alpha=1.0), (3, 7)),
    "sigmoid": (lambda r: L.Activation("sigmoid"), (3, 7)),
    "tanh": (lambda r: L.Activation("tanh"), (3, 7)),
}

STOCHASTIC_CASES = {
    "dropout": (lambda r: L.Dropout(0.4), (3, 8)),
    "spatial_dropout": (lambda r: L.SpatialDropout1D(0.4), (3, 4, 6)),
}


@pytest.mark.parametrize("name", sorted(LAYER_CASES))
@pytest.mark.parametrize("seed", SEEDS)
def test_layer_gradients(name, seed):
    make, shape = LAYER_CASES[name]
    assert check_gradients(make, shape, seed) <= TOL


@pytest.mark.parametrize("name", sorted(STOCHASTIC_CASES))
@pytest.mark.parametrize("seed", SEEDS)
def test_stochastic_layer_gradients(name, seed):
    make, shape = STOCHASTIC_CASES[name]
    assert check_gradients(make, shape, seed, stochastic=True) <= TOL


@pytest.mark.parametrize("seed", SEEDS)
def test_loss_through_sigmoid_dense_chain(seed):
    """End-to-end check: BCE of sigmoid(dense(x)) against the oracle."""
    rng = seeded_rng(55, seed)
    dense = L.Dense(4, 1, rng=seeded_rng(seed, 9), dtype=np.float64)
    x = rng.standard_normal((6, 4))
    y = (rng.random(6) > 0.5).astype(np.float64)

    def run(xv):
        probs = _sigmoid(dense.forward(xv)).ravel()
        return bce_loss(probs, y)[0]

    probs = _sigmoid(dense.forward(x)).ravel()
    _, dp = bce_loss(probs, y)
    dz = (dp * probs * (1 - probs)).reshape(-1, 1)
    dx = dense.backward(dz)
    assert rel_error(dx, finite_diff_grad(run, x)) <= 1e-6

    orig = dense.params["w"].copy()

    def run_w(wv):
        dense.params["w"][...] = wv
        value = run(x)
        dense.params["w"][...] = orig
        return value

    dense.forward(x)
    probs = _sigmoid(dense.forward(x)).ravel()
    _, dp = bce_loss(probs, y)
    dense.backward((dp * probs * (1 - probs)).reshape(-1, 1))
    assert rel_error(dense.grads["w"], finite_diff_grad(run_w, orig)) <= 1e-6
