"""Shared fixtures.

The hot kernels JIT-compile on first call when the accelerated backend
is active; the session-scoped warm-up below runs each of them once so
wall-clock assertions in the acceptance tests measure the algorithms,
not the compiler.
"""

import numpy as np
import pytest

from tumornet.growth import LogisticParams, classify_regime, simulate
from tumornet.network import (NetworkSpec, TrainConfig, Transfer,
                              backprop_gradients, init_network, train)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    simulate(LogisticParams(r=3.9), x0=0.2, steps=16, noise_sigma=0.01,
             seed=0)
    classify_regime(LogisticParams(r=2.5))
    spec = NetworkSpec(layer_sizes=(2, 3, 1),
                       transfers=(Transfer.SIGMOID, Transfer.SIGMOID))
    net = init_network(spec, init_seed=0)
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    Y = np.array([[1.0], [0.0]])
    train(net, X, Y, TrainConfig(epochs=2), X, Y)
    backprop_gradients(net, X[0], Y[0])
