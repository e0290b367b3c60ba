"""From-scratch fully connected feed-forward networks.

Each neuron emits f(sum_i w[i,j] * x[i] + b[j]) for one of three bounded
transfer functions (sigmoid, hypertan, gaussian). Training is online
gradient descent on the sum-squared error: one weight update per sample,
samples reshuffled every epoch from a seeded stream, so a run is fully
reproducible from its config. A network with no hidden layers is a
linear classifier: its 0.5-level set under a sigmoid output is exactly
the hyperplane w.x + b = 0.

The module also carries the hidden-growth heuristic: start small and add
hidden neurons one at a time while validation error stays above the
adequacy threshold.
"""

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from tumornet._dispatch import kernels
from tumornet.errors import DivergenceError, DomainError, FormatError

MODEL_FORMAT_VERSION = 1


class Transfer(Enum):
    """Bounded neuron transfer functions."""

    SIGMOID = "sigmoid"    # 1/(1+e^-z), range (0, 1)
    HYPERTAN = "hypertan"  # tanh(z), range (-1, 1)
    GAUSSIAN = "gaussian"  # e^(-z^2), range (0, 1]

    @property
    def kernel_id(self) -> int:
        return _KERNEL_IDS[self]


_KERNEL_IDS = {Transfer.SIGMOID: 0, Transfer.HYPERTAN: 1, Transfer.GAUSSIAN: 2}


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes [n_in, h_1, ..., n_out], one transfer per non-input
    layer, and whether neurons carry bias terms.

    Zero hidden layers (layer_sizes of length 2) is allowed.
    """

    layer_sizes: tuple
    transfers: tuple
    use_bias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))
        transfers = self.transfers
        if isinstance(transfers, Transfer):
            transfers = (transfers,) * (len(self.layer_sizes) - 1)
        object.__setattr__(self, "transfers", tuple(transfers))
        if len(self.layer_sizes) < 2:
            raise DomainError("need at least an input and an output layer")
        if any(int(n) != n or n < 1 for n in self.layer_sizes):
            raise DomainError(
                f"layer sizes must be integers >= 1, got {self.layer_sizes}")
        if len(self.transfers) != len(self.layer_sizes) - 1:
            raise DomainError(
                f"{len(self.layer_sizes) - 1} transfer functions needed, "
                f"got {len(self.transfers)}")
        if not all(isinstance(t, Transfer) for t in self.transfers):
            raise DomainError("transfers must be Transfer values")

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_hidden_layers(self) -> int:
        return len(self.layer_sizes) - 2


class Network:
    """Weights (one from-by-to matrix per layer) plus optional biases."""

    def __init__(self, spec: NetworkSpec, weights, biases=None):
        self.spec = spec
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        if spec.use_bias:
            if biases is None:
                raise DomainError("spec has use_bias but no biases given")
            self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        else:
            self.biases = None
        sizes = spec.layer_sizes
        for l, w in enumerate(self.weights):
            if w.shape != (sizes[l], sizes[l + 1]):
                raise DomainError(
                    f"layer {l} weights have shape {w.shape}, expected "
                    f"{(sizes[l], sizes[l + 1])}")
            if not np.all(np.isfinite(w)):
                raise DomainError(f"layer {l} weights contain non-finite values")
        if self.biases is not None:
            for l, b in enumerate(self.biases):
                if b.shape != (sizes[l + 1],):
                    raise DomainError(
                        f"layer {l} biases have shape {b.shape}, expected "
                        f"({sizes[l + 1]},)")
                if not np.all(np.isfinite(b)):
                    raise DomainError(f"layer {l} biases are non-finite")

    def copy(self) -> "Network":
        biases = None if self.biases is None else [b.copy() for b in self.biases]
        return Network(self.spec, [w.copy() for w in self.weights], biases)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for online SSE descent and the growth heuristic."""

    learning_rate: float = 0.5
    epochs: int = 100
    shuffle_seed: int = 0
    init_seed: int = 0
    init_scale: float = 0.5
    adequacy_threshold: float = 0.05
    max_hidden: int = 16

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise DomainError("learning_rate must be > 0")
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if self.init_scale <= 0.0:
            raise DomainError("init_scale must be > 0")
        if self.adequacy_threshold <= 0.0:
            raise DomainError("adequacy_threshold must be > 0")
        if self.max_hidden < 1:
            raise DomainError("max_hidden must be >= 1")


@dataclass
class Gradients:
    """SSE gradients in the same shapes as the network parameters."""

    weights: list
    biases: list | None = None


@dataclass
class TrainResult:
    net: Network
    train_history: np.ndarray
    val_history: np.ndarray | None = None


@dataclass
class GrowthResult:
    net: Network
    adequate: bool
    rounds: int
    hidden_size: int
    val_sse_per_sample: float
    attempts: list = field(default_factory=list)  # (hidden, val_sse) per round


@dataclass
class _Packed:
    flat: np.ndarray
    sizes: np.ndarray
    w_off: np.ndarray
    b_off: np.ndarray
    a_off: np.ndarray
    z_off: np.ndarray
    use_bias: bool
    tkinds: np.ndarray

    def args(self):
        return (self.flat, self.sizes, self.w_off, self.b_off, self.a_off,
                self.z_off, self.use_bias, self.tkinds)


def _pack(net: Network) -> _Packed:
    sizes = np.array(net.spec.layer_sizes, dtype=np.int64)
    n_layers = len(sizes) - 1
    w_off = np.zeros(n_layers, dtype=np.int64)
    pos = 0
    for l in range(n_layers):
        w_off[l] = pos
        pos += int(sizes[l] * sizes[l + 1])
    b_off = np.zeros(n_layers, dtype=np.int64)
    if net.spec.use_bias:
        for l in range(n_layers):
            b_off[l] = pos
            pos += int(sizes[l + 1])
    flat = np.empty(pos)
    for l in range(n_layers):
        nw = int(sizes[l] * sizes[l + 1])
        flat[w_off[l]:w_off[l] + nw] = net.weights[l].ravel()
        if net.spec.use_bias:
            flat[b_off[l]:b_off[l] + int(sizes[l + 1])] = net.biases[l]
    a_off = np.zeros(n_layers + 1, dtype=np.int64)
    for l in range(n_layers):
        a_off[l + 1] = a_off[l] + sizes[l]
    z_off = np.zeros(n_layers, dtype=np.int64)
    for l in range(1, n_layers):
        z_off[l] = z_off[l - 1] + sizes[l]
    tkinds = np.array([t.kernel_id for t in net.spec.transfers],
                      dtype=np.int64)
    return _Packed(flat=flat, sizes=sizes, w_off=w_off, b_off=b_off,
                   a_off=a_off, z_off=z_off, use_bias=net.spec.use_bias,
                   tkinds=tkinds)


def _unpack_into(packed: _Packed, net: Network) -> None:
    sizes = packed.sizes
    for l in range(len(sizes) - 1):
        nin, nout = int(sizes[l]), int(sizes[l + 1])
        wo = int(packed.w_off[l])
        net.weights[l][:] = packed.flat[wo:wo + nin * nout].reshape(nin, nout)
        if packed.use_bias:
            bo = int(packed.b_off[l])
            net.biases[l][:] = packed.flat[bo:bo + nout]


def init_network(spec: NetworkSpec, init_seed: int = 0,
                 init_scale: float = 0.5) -> Network:
    """Fresh network: weights ~ Uniform(-init_scale, init_scale) from the
    seeded stream, biases zero."""
    rng = np.random.default_rng(init_seed)
    sizes = spec.layer_sizes
    weights = [rng.uniform(-init_scale, init_scale, size=(sizes[l], sizes[l + 1]))
               for l in range(len(sizes) - 1)]
    biases = None
    if spec.use_bias:
        biases = [np.zeros(sizes[l + 1]) for l in range(len(sizes) - 1)]
    return Network(spec, weights, biases)


def forward(net: Network, x) -> tuple[np.ndarray, list]:
    """Feed x through the network.

    Returns (output vector, per-layer activations) where activations[0]
    is the input and activations[-1] the output.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.spec.n_in,):
        raise DomainError(
            f"input has shape {x.shape}, expected ({net.spec.n_in},)")
    if not np.all(np.isfinite(x)):
        raise DomainError("input contains non-finite values")
    packed = _pack(net)
    total = int(packed.sizes.sum())
    act = np.empty(total)
    z = np.empty(total - int(packed.sizes[0]))
    kernels.net_forward(*packed.args(), x, act, z)
    activations = [act[int(packed.a_off[l]):int(packed.a_off[l]) + int(packed.sizes[l])].copy()
                   for l in range(len(packed.sizes))]
    return activations[-1], activations


def batch_outputs(net: Network, X) -> np.ndarray:
    """Forward a whole (n, n_in) matrix; returns (n, n_out)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.spec.n_in:
        raise DomainError(
            f"input matrix has shape {X.shape}, expected (n, {net.spec.n_in})")
    packed = _pack(net)
    out = np.empty((X.shape[0], net.spec.n_out))
    if X.shape[0]:
        kernels.net_outputs(*packed.args(), X, out)
    return out


def sse_loss(outputs, targets) -> float:
    """Sum of squared output-target differences."""
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outputs.shape != targets.shape:
        raise DomainError(
            f"shape mismatch: outputs {outputs.shape} vs targets "
            f"{targets.shape}")
    return float(np.sum((outputs - targets) ** 2))


def backprop_gradients(net: Network, x, target) -> Gradients:
    """Exact analytic gradient of sse_loss(forward(net, x), target) with
    respect to every weight and bias."""
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if x.shape != (net.spec.n_in,):
        raise DomainError(
            f"input has shape {x.shape}, expected ({net.spec.n_in},)")
    if target.shape != (net.spec.n_out,):
        raise DomainError(
            f"target has shape {target.shape}, expected ({net.spec.n_out},)")
    packed = _pack(net)
    total = int(packed.sizes.sum())
    maxw = int(packed.sizes.max())
    act = np.empty(total)
    z = np.empty(total - int(packed.sizes[0]))
    grad = np.empty(packed.flat.shape[0])
    kernels.net_forward(*packed.args(), x, act, z)
    kernels.net_backward(*packed.args(), act, z, target, grad,
                         np.empty(maxw), np.empty(maxw))
    gp = _Packed(flat=grad, sizes=packed.sizes, w_off=packed.w_off,
                 b_off=packed.b_off, a_off=packed.a_off, z_off=packed.z_off,
                 use_bias=packed.use_bias, tkinds=packed.tkinds)
    sizes = packed.sizes
    gw = []
    gb = [] if net.spec.use_bias else None
    for l in range(len(sizes) - 1):
        nin, nout = int(sizes[l]), int(sizes[l + 1])
        wo = int(gp.w_off[l])
        gw.append(grad[wo:wo + nin * nout].reshape(nin, nout).copy())
        if net.spec.use_bias:
            bo = int(gp.b_off[l])
            gb.append(grad[bo:bo + nout].copy())
    return Gradients(weights=gw, biases=gb)


def _as_sample_matrix(name, arr, width):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise DomainError(
            f"{name} has shape {arr.shape}, expected (n, {width})")
    return arr


def train(net: Network, X, Y, config: TrainConfig,
          X_val=None, Y_val=None) -> TrainResult:
    """Online gradient descent on the SSE over (X, Y).

    The input net is left untouched; a trained copy is returned together
    with the mean per-sample SSE after each epoch (and over the optional
    validation set). Raises DivergenceError if the loss becomes
    non-finite.
    """
    X = _as_sample_matrix("X", X, net.spec.n_in)
    Y = _as_sample_matrix("Y", Y, net.spec.n_out)
    if X.shape[0] == 0:
        raise DomainError("training set is empty")
    if X.shape[0] != Y.shape[0]:
        raise DomainError(
            f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    has_val = X_val is not None
    if has_val:
        X_val = _as_sample_matrix("X_val", X_val, net.spec.n_in)
        Y_val = _as_sample_matrix("Y_val", Y_val, net.spec.n_out)
        if X_val.shape[0] != Y_val.shape[0]:
            raise DomainError("validation X/Y row mismatch")
    else:
        X_val = np.empty((0, net.spec.n_in))
        Y_val = np.empty((0, net.spec.n_out))

    trained = net.copy()
    packed = _pack(trained)
    n = X.shape[0]
    rng = np.random.default_rng(config.shuffle_seed)
    orders = np.empty((config.epochs, n), dtype=np.int64)
    for e in range(config.epochs):
        orders[e] = rng.permutation(n)
    train_hist = np.empty(config.epochs)
    val_hist = np.empty(config.epochs)
    status = kernels.net_train(*packed.args(), X, Y, orders,
                               config.learning_rate, X_val, Y_val,
                               train_hist, val_hist)
    if status >= 0:
        raise DivergenceError(
            f"training loss became non-finite at epoch {int(status)}")
    _unpack_into(packed, trained)
    return TrainResult(net=trained, train_history=train_hist,
                       val_history=val_hist if has_val else None)


def grow_hidden_until_adequate(base_spec: NetworkSpec, X, Y, X_val, Y_val,
                               config: TrainConfig) -> GrowthResult:
    """Train with growing hidden width until validation is adequate.

    base_spec must have exactly one hidden layer. Each round trains a
    fresh network (seeded init_seed + round); if the final validation
    SSE per sample stays above adequacy_threshold the hidden size grows
    by one, up to max_hidden. The best-validation network seen is
    returned; `adequate` is False when the cap was hit first.
    """
    if base_spec.n_hidden_layers != 1:
        raise DomainError("growth heuristic needs exactly one hidden layer")
    h0 = base_spec.layer_sizes[1]
    if config.max_hidden < h0:
        raise DomainError(
            f"max_hidden {config.max_hidden} below starting size {h0}")
    best = None
    best_val = np.inf
    attempts = []
    rounds = 0
    for h in range(h0, config.max_hidden + 1):
        spec = NetworkSpec(
            layer_sizes=(base_spec.layer_sizes[0], h, base_spec.layer_sizes[2]),
            transfers=base_spec.transfers, use_bias=base_spec.use_bias)
        net0 = init_network(spec, init_seed=config.init_seed + rounds,
                            init_scale=config.init_scale)
        result = train(net0, X, Y, config, X_val, Y_val)
        val = float(result.val_history[-1])
        attempts.append((h, val))
        rounds += 1
        if val < best_val:
            best = result.net
            best_val = val
        if val <= config.adequacy_threshold:
            return GrowthResult(net=result.net, adequate=True, rounds=rounds,
                                hidden_size=h, val_sse_per_sample=val,
                                attempts=attempts)
    return GrowthResult(net=best, adequate=False, rounds=rounds,
                        hidden_size=best.spec.layer_sizes[1],
                        val_sse_per_sample=best_val, attempts=attempts)


def to_doc(net: Network) -> dict:
    """The model document: plain JSON-ready dict, row-major weights."""
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_sizes": list(net.spec.layer_sizes),
        "transfers": [t.value for t in net.spec.transfers],
        "use_bias": net.spec.use_bias,
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": ([b.tolist() for b in net.biases]
                   if net.biases is not None else None),
    }


def to_json(net: Network) -> str:
    """Serialize to the model text format (JSON, row-major weights)."""
    return json.dumps(to_doc(net), indent=2)


def _require(doc: dict, name: str, kinds) -> object:
    if name not in doc:
        raise FormatError(f"model field '{name}' is missing")
    value = doc[name]
    if not isinstance(value, kinds):
        raise FormatError(f"model field '{name}' has the wrong type")
    return value


def from_json(text: str) -> Network:
    """Parse the model text format; raises FormatError naming the first
    offending field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model text is not valid JSON: {exc}") from exc
    return from_doc(doc)


def from_doc(doc) -> Network:
    """Rebuild a Network from its parsed model document."""
    if not isinstance(doc, dict):
        raise FormatError("model document must be a JSON object")
    version = _require(doc, "format_version", int)
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(
            f"unsupported model format_version {version}, "
            f"expected {MODEL_FORMAT_VERSION}")
    layer_sizes = _require(doc, "layer_sizes", list)
    transfers_raw = _require(doc, "transfers", list)
    use_bias = _require(doc, "use_bias", bool)
    weights_raw = _require(doc, "weights", list)
    try:
        transfers = tuple(Transfer(t) for t in transfers_raw)
    except ValueError as exc:
        raise FormatError(f"model field 'transfers' is invalid: {exc}") from exc
    try:
        spec = NetworkSpec(layer_sizes=tuple(layer_sizes),
                           transfers=transfers, use_bias=use_bias)
    except DomainError as exc:
        raise FormatError(f"model field 'layer_sizes' is invalid: {exc}") from exc
    sizes = spec.layer_sizes
    if len(weights_raw) != len(sizes) - 1:
        raise FormatError("model field 'weights' has the wrong layer count")
    weights = []
    for l, wl in enumerate(weights_raw):
        arr = np.asarray(wl, dtype=np.float64)
        if arr.shape != (sizes[l] * sizes[l + 1],):
            raise FormatError(
                f"model field 'weights' layer {l} has {arr.size} values, "
                f"expected {sizes[l] * sizes[l + 1]}")
        weights.append(arr.reshape(sizes[l], sizes[l + 1]))
    biases = None
    if use_bias:
        biases_raw = _require(doc, "biases", list)
        if len(biases_raw) != len(sizes) - 1:
            raise FormatError("model field 'biases' has the wrong layer count")
        biases = []
        for l, bl in enumerate(biases_raw):
            arr = np.asarray(bl, dtype=np.float64)
            if arr.shape != (sizes[l + 1],):
                raise FormatError(
                    f"model field 'biases' layer {l} has {arr.size} values, "
                    f"expected {sizes[l + 1]}")
            biases.append(arr)
    try:
        return Network(spec, weights, biases)
    except DomainError as exc:
        raise FormatError(f"model parameters invalid: {exc}") from exc
