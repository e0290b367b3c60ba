import numpy as np

from tumornet import growth
from tumornet._dispatch import BACKEND
from tumornet.network import (NetworkSpec, Network, TrainConfig, Transfer,
                              backprop_gradients, forward, init_network,
                              sse_loss, train, batch_outputs)

print("backend:", BACKEND)

# fixed point at r=2.5, k=1: 1 - 1/2.5 = 0.6
p = growth.LogisticParams(r=2.5, k=1.0)
print("fixed_point:", p.fixed_point)
traj = growth.simulate(p, x0=0.2, steps=400)
print("tail:", traj.masses[-3:])

# lyapunov oracle ln 2 at r=4
lam4 = growth.lyapunov_exponent(growth.LogisticParams(r=4.0), x0=0.2,
                                burn_in=1000, n=100_000)
print("lyap r=4:", lam4, "ln2:", np.log(2.0))
lam2 = growth.lyapunov_exponent(growth.LogisticParams(r=2.0), x0=0.2)
print("lyap r=2:", lam2)
lam325 = growth.lyapunov_exponent(growth.LogisticParams(r=3.25), x0=0.2)
print("lyap r=3.25 (2-cycle, expect <0):", lam325)

# regime classification spots
for r in (2.5, 3.2, 3.5, 3.9, 4.0, 1.0):
    lbl = growth.classify_regime(growth.LogisticParams(r=r))
    print(f"r={r}: {lbl.describe()} lyap={lbl.lyapunov:.4f}")

# rubinow oracles
d1 = growth.rubinow_to_logistic(growth.RubinowDiscretization(dt=1.0, lam=0.2, dv_dmu=0.65))
print("rubinow dt=1:", d1.r, d1.k, d1.admissible)
d2 = growth.rubinow_to_logistic(growth.RubinowDiscretization(dt=0.5, lam=0.2, dv_dmu=0.1))
print("rubinow dt=0.5:", d2.r, d2.k, d2.admissible)

# gene map oracle 2.5*e^0.35
sig = growth.GeneActivitySignature(o=0.8, s=0.3, p=0.2, ap=0.5)
beta = growth.GeneSensitivity(o=0.5, s=0.4, p=0.4, ap=0.3)
r = growth.gene_activity_to_growth_rate(sig, 2.5, beta)
print("gene r:", r, "expected:", 2.5 * np.exp(0.35))

# network: forward on fixed weights, gradient check
spec = NetworkSpec(layer_sizes=(2, 2, 1),
                   transfers=(Transfer.SIGMOID, Transfer.SIGMOID))
net = init_network(spec, init_seed=7)
x = np.array([0.3, -0.2])
t = np.array([1.0])
out, acts = forward(net, x)
print("forward out:", out)

g = backprop_gradients(net, x, t)
eps = 1e-6
ok = True
for l in range(2):
    for i in range(net.weights[l].shape[0]):
        for j in range(net.weights[l].shape[1]):
            net2 = net.copy()
            net2.weights[l][i, j] += eps
            lp = sse_loss(forward(net2, x)[0], t)
            net2.weights[l][i, j] -= 2 * eps
            lm = sse_loss(forward(net2, x)[0], t)
            fd = (lp - lm) / (2 * eps)
            if abs(fd - g.weights[l][i, j]) > 1e-6:
                ok = False
                print("GRAD MISMATCH w", l, i, j, fd, g.weights[l][i, j])
    for j in range(net.biases[l].shape[0]):
        net2 = net.copy()
        net2.biases[l][j] += eps
        lp = sse_loss(forward(net2, x)[0], t)
        net2.biases[l][j] -= 2 * eps
        lm = sse_loss(forward(net2, x)[0], t)
        fd = (lp - lm) / (2 * eps)
        if abs(fd - g.biases[l][j]) > 1e-6:
            ok = False
            print("GRAD MISMATCH b", l, j, fd, g.biases[l][j])
print("grad check:", "ok" if ok else "FAIL")

# the known oracle: single sigmoid neuron, w=0, b=0, target 1 -> dL/db = -0.25? (2(o-t)f' = 2(0.5-1)*0.25 = -0.25)
spec1 = NetworkSpec(layer_sizes=(1, 1), transfers=(Transfer.SIGMOID,))
n1 = Network(spec1, [np.zeros((1, 1))], [np.zeros(1)])
g1 = backprop_gradients(n1, np.array([1.0]), np.array([1.0]))
print("single-neuron grad w,b:", g1.weights[0][0, 0], g1.biases[0][0], "expected -0.25 -0.25")

# XOR training
X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
Y = np.array([[0.0], [1.0], [1.0], [0.0]])
xspec = NetworkSpec(layer_sizes=(2, 4, 1),
                    transfers=(Transfer.SIGMOID, Transfer.SIGMOID))
for seed in (1, 2, 3):
    xnet = init_network(xspec, init_seed=seed)
    cfg = TrainConfig(learning_rate=0.5, epochs=5000, shuffle_seed=seed)
    res = train(xnet, X, Y, cfg)
    preds = batch_outputs(res.net, X)[:, 0]
    correct = np.all((preds >= 0.5) == (Y[:, 0] >= 0.5))
    print(f"xor seed={seed}: preds={np.round(preds, 3)} final_sse={res.train_history[-1]:.5f} correct={correct}")
