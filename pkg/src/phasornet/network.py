"""Dense phasor networks: layers, manual backpropagation, training.

A layer holds one real weight matrix and no biases; every unit emits the
angle of the complex superposition of its inputs' unit phasors.  The
backward pass is hand-derived from that activation (see `phases` for the
single-neuron form) and checked against finite differences in the test
suite.  `PhasorClassifier` wraps construction and mini-batch training
behind the scikit-learn estimator protocol.

Dropped units (training mode only) are excluded from the downstream
complex sums outright: their phasor term is zeroed, never re-encoded as
phase 0, which would be a non-neutral value.  Because the activation is
scale-invariant no 1/(1-p) compensation is applied.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .phases import DEGENERATE_EPS
from .projection import make_projection


@dataclass
class DenseLayer:
    """One bias-free dense layer: weights (out_dim, in_dim), real-valued.

    dropout_rate applies to this layer's outputs during training.
    """

    weights: np.ndarray
    dropout_rate: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or min(self.weights.shape) < 1:
            raise ValueError(f"weights must be a 2-d matrix, got shape {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]


@dataclass
class LayerPass:
    """Everything the backward pass needs from one layer's forward step."""

    input_phasors: np.ndarray  # (batch, in_dim) complex, dropout already applied
    superposition: np.ndarray  # (batch, out_dim) complex
    outputs: np.ndarray        # (batch, out_dim) phases


def build_layers(dims, rng, dropout_rate=0.0):
    """Stack of DenseLayers for the given dimension chain.

    Weights are drawn uniform in +-sqrt(6 / (in + out)); hidden layers
    get the dropout rate, the final layer never drops.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"dimension chain must be >= 2 positive sizes, got {dims}")
    layers = []
    for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (d_in + d_out))
        weights = rng.uniform(-limit, limit, size=(d_out, d_in))
        rate = dropout_rate if i < len(dims) - 2 else 0.0
        layers.append(DenseLayer(weights, rate))
    return layers


def forward_layers(layers, phases, dropout_rng=None):
    """Atemporal pass over a batch of phase rows.

    phases: (batch, in_dim).  Passing a generator as dropout_rng enables
    training mode; layers with dropout_rate 0 draw nothing, so a zero
    rate reproduces evaluation mode exactly.

    Returns (outputs, per-layer LayerPass trace).
    """
    X = np.atleast_2d(np.asarray(phases, dtype=float))
    phasors = np.exp(1j * np.pi * X)
    trace = []
    outputs = X
    for layer in layers:
        if phasors.shape[1] != layer.in_dim:
            raise ValueError(
                f"layer expects {layer.in_dim} inputs, got {phasors.shape[1]}"
            )
        superposition = phasors @ layer.weights.T
        outputs = np.angle(superposition) / np.pi
        trace.append(LayerPass(phasors, superposition, outputs))
        phasors = np.exp(1j * np.pi * outputs)
        if dropout_rng is not None and layer.dropout_rate > 0.0:
            keep = dropout_rng.random(outputs.shape) >= layer.dropout_rate
            phasors = phasors * keep
    return outputs, trace


def backward_layers(layers, trace, grad_outputs):
    """Backpropagate d(loss)/d(output phases) into weight gradients.

    grad_outputs: (batch, out_dim) of the final layer.  Units whose
    superposition magnitude is degenerate transmit zero gradient, and
    dropped units both receive and transmit zero through their zeroed
    phasor terms.  Returns one gradient array per layer.
    """
    if len(trace) != len(layers):
        raise ValueError("trace does not match the layer stack")
    grads = [None] * len(layers)
    g = np.asarray(grad_outputs, dtype=float)
    for i in reversed(range(len(layers))):
        step = trace[i]
        s = step.superposition
        mag2 = s.real * s.real + s.imag * s.imag
        inv = np.where(mag2 < DEGENERATE_EPS, 0.0, 1.0 / np.maximum(mag2, DEGENERATE_EPS))
        c = (g * inv) * np.conj(s)
        grads[i] = (c.T @ step.input_phasors).imag / np.pi
        if i > 0:
            g = ((c @ layers[i].weights) * step.input_phasors).real
    return grads


def batch_loss_and_grad(targets, outputs):
    """Mean circular cosine loss over batch and outputs, plus its gradient.

    Returns (loss, d loss / d outputs) with the gradient already scaled
    for the double mean reduction.
    """
    diff = np.pi * (targets - outputs)
    loss = float(np.mean(1.0 - np.cos(diff)))
    grad = -(np.pi / diff.size) * np.sin(diff)
    return loss, grad


class SGD:
    """Plain stochastic gradient descent."""

    def __init__(self, learning_rate):
        self.learning_rate = learning_rate

    def step(self, weights, grads):
        for w, g in zip(weights, grads):
            w -= self.learning_rate * g


class Adam:
    """Adam with bias correction, one moment pair per weight matrix."""

    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = None
        self._v = None

    def step(self, weights, grads):
        if self._m is None:
            self._m = [np.zeros_like(w) for w in weights]
            self._v = [np.zeros_like(w) for w in weights]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.learning_rate * np.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        for w, g, m, v in zip(weights, grads, self._m, self._v):
            m += (1.0 - b1) * (g - m)
            v += (1.0 - b2) * (g * g - v)
            w -= scale * m / (np.sqrt(v) + self.eps)


def _predict_rows(output_phases):
    """Vectorized class decode: circularly closest output to 0.5 per row."""
    dist = np.abs(np.mod(output_phases - 0.5 + 1.0, 2.0) - 1.0)
    return np.argmin(dist, axis=1)


class PhasorClassifier(BaseEstimator, ClassifierMixin):
    """Feed-forward phasor network classifier.

    Pixel intensities in [0, 1] are converted to phases by a seeded
    projection, then each dense layer emits the angles of weighted
    complex superpositions; training minimizes the mean circular cosine
    loss against quadrature targets (0.5 on the labeled slot) with
    hand-derived gradients.

    Parameters
    ----------
    hidden : tuple of int
        Hidden layer widths, e.g. (100,).
    projection : {"nrp", "rpp", "none"}
        Intensity-to-phase conversion method.
    epochs, batch_size, learning_rate, optimizer : training setup;
        optimizer is "adam" or "sgd".
    dropout : per-hidden-layer neuronal dropout rate in [0, 1).
    nrp_density : fraction of nonzero entries in the nrp matrix.
    seed : drives projection, weight init and training shuffles; two
        fits with equal seeds and data produce identical models.
    """

    def __init__(
        self,
        hidden=(100,),
        projection="nrp",
        epochs=2,
        batch_size=128,
        learning_rate=1e-3,
        optimizer="adam",
        beta1=0.9,
        beta2=0.999,
        adam_eps=1e-8,
        dropout=0.25,
        nrp_density=1.0,
        nrp_momentum=0.99,
        seed=0,
        verbose=False,
    ):
        self.hidden = hidden
        self.projection = projection
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.dropout = dropout
        self.nrp_density = nrp_density
        self.nrp_momentum = nrp_momentum
        self.seed = seed
        self.verbose = verbose

    def _validate_params_(self):
        if int(self.epochs) < 1 or int(self.batch_size) < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    def _build(self, n_features, n_classes):
        """Deterministic construction of projection and weight stack."""
        self._validate_params_()
        proj = make_projection(
            self.projection,
            seed=self.seed,
            density=self.nrp_density,
            momentum=self.nrp_momentum,
        ).initialize(n_features)
        init_rng = np.random.default_rng([self.seed, 1])
        dims = [n_features, *self.hidden, n_classes]
        layers = build_layers(dims, init_rng, dropout_rate=self.dropout)
        return proj, layers

    def _make_optimizer(self):
        if self.optimizer == "adam":
            return Adam(self.learning_rate, self.beta1, self.beta2, self.adam_eps)
        return SGD(self.learning_rate)

    def fit(self, X, y, eval_set=None):
        """Train on intensities X (n, pixels) and integer labels y.

        eval_set: optional (X_test, y_test) pair scored after each epoch
        and recorded in history_.
        """
        X, y = check_X_y(X, y, dtype=float)
        if len(X) == 0:
            raise ValueError("empty dataset")
        self.classes_ = np.unique(y)
        n_classes = len(self.classes_)
        label_idx = np.searchsorted(self.classes_, y)
        self.n_features_in_ = X.shape[1]

        self.projection_, self.layers_ = self._build(X.shape[1], n_classes)
        optimizer = self._make_optimizer()
        train_rng = np.random.default_rng([self.seed, 2])
        weights = [layer.weights for layer in self.layers_]

        n = len(X)
        batch = int(self.batch_size)
        self.history_ = []
        for epoch in range(int(self.epochs)):
            order = train_rng.permutation(n)
            loss_sum = 0.0
            correct = 0
            for start in range(0, n, batch):
                idx = order[start : start + batch]
                phases_in = self.projection_.encode_train(X[idx])
                targets = np.zeros((len(idx), n_classes))
                targets[np.arange(len(idx)), label_idx[idx]] = 0.5
                outputs, trace = forward_layers(self.layers_, phases_in, dropout_rng=train_rng)
                loss, grad = batch_loss_and_grad(targets, outputs)
                grads = backward_layers(self.layers_, trace, grad)
                optimizer.step(weights, grads)
                loss_sum += loss * len(idx)
                correct += int(np.sum(_predict_rows(outputs) == label_idx[idx]))
            record = {
                "epoch": epoch + 1,
                "train_loss": loss_sum / n,
                "train_acc": correct / n,
                "test_acc": None,
            }
            if eval_set is not None:
                record["test_acc"] = self.score(eval_set[0], eval_set[1])
            self.history_.append(record)
            if self.verbose:
                test_str = "" if record["test_acc"] is None else f" test {record['test_acc']:.4f}"
                print(
                    f"epoch {record['epoch']}: loss {record['train_loss']:.4f} "
                    f"train {record['train_acc']:.4f}{test_str}"
                )
        return self

    def predict_phases(self, X):
        """Output-layer phases for intensities X, evaluation mode."""
        check_is_fitted(self, "layers_")
        X = check_array(X, dtype=float)
        phases_in = self.projection_.transform(X)
        outputs, _ = forward_layers(self.layers_, phases_in)
        return outputs

    def predict(self, X):
        return self.classes_[_predict_rows(self.predict_phases(X))]

    @property
    def n_classes_(self):
        return len(self.classes_)

    @property
    def dims_(self):
        """Dimension chain (pixels, hidden..., classes) of the fitted net."""
        check_is_fitted(self, "layers_")
        return [self.layers_[0].in_dim] + [layer.out_dim for layer in self.layers_]


def evaluate_atemporal(clf, X, y, limit=None):
    """Accuracy plus a (true, predicted) confusion-count matrix."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if limit is not None:
        if limit <= 0:
            raise ValueError("empty evaluation set")
        X, y = X[:limit], y[:limit]
    if len(X) == 0:
        raise ValueError("empty evaluation set")
    predicted = clf.predict(X)
    n_c = clf.n_classes_
    confusion = np.zeros((n_c, n_c), dtype=np.int64)
    t_idx = np.searchsorted(clf.classes_, y)
    p_idx = np.searchsorted(clf.classes_, predicted)
    np.add.at(confusion, (t_idx, p_idx), 1)
    accuracy = float(np.mean(predicted == y))
    return accuracy, confusion
