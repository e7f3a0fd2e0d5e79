"""Network construction, forward/backward and training-loop tests.

The whole-model gradient is validated against central finite differences
of the loss, and the forward pass against the single-neuron reference
path, so the vectorized code never checks itself.
"""

import numpy as np
import pytest

from phasornet import phases
from phasornet.data import synthetic_blobs
from phasornet.network import (
    DenseLayer,
    PhasorClassifier,
    backward_layers,
    batch_loss_and_grad,
    build_layers,
    evaluate_atemporal,
    forward_layers,
)


class FixedMaskRng:
    """Stands in for a Generator: .random() yields a preset array."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def random(self, shape):
        assert self.values.shape == tuple(shape)
        return self.values


def make_clf(**kw):
    defaults = dict(hidden=(8,), projection="rpp", epochs=5, batch_size=32,
                    dropout=0.0, seed=0)
    defaults.update(kw)
    return PhasorClassifier(**defaults)


class TestBuildLayers:
    def test_seed_reproducible(self):
        a = build_layers([784, 100, 10], np.random.default_rng([1, 1]))
        b = build_layers([784, 100, 10], np.random.default_rng([1, 1]))
        for la, lb in zip(a, b):
            np.testing.assert_array_equal(la.weights, lb.weights)
        assert a[0].weights.shape == (100, 784)
        assert a[1].weights.shape == (10, 100)

    def test_different_seeds_differ(self):
        a = build_layers([16, 8, 4], np.random.default_rng([1, 1]))
        b = build_layers([16, 8, 4], np.random.default_rng([2, 1]))
        assert not np.array_equal(a[0].weights, b[0].weights)

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            build_layers([4, 0, 2], np.random.default_rng(0))

    def test_init_bound(self):
        layers = build_layers([30, 20], np.random.default_rng(0))
        limit = np.sqrt(6.0 / 50)
        assert np.max(np.abs(layers[0].weights)) <= limit

    def test_dropout_only_on_hidden(self):
        layers = build_layers([6, 5, 4, 3], np.random.default_rng(0), dropout_rate=0.25)
        assert [l.dropout_rate for l in layers] == [0.25, 0.25, 0.0]


class TestForward:
    def test_identity_passthrough(self):
        layers = [DenseLayer(np.array([[1.0]]))]
        out, _ = forward_layers(layers, [[0.3]])
        assert out[0, 0] == pytest.approx(0.3)

    def test_eval_mode_deterministic(self):
        layers = build_layers([6, 4, 3], np.random.default_rng(0))
        x = np.random.default_rng(1).uniform(-1, 1, (2, 6))
        a, _ = forward_layers(layers, x)
        b, _ = forward_layers(layers, x)
        np.testing.assert_array_equal(a, b)

    def test_matches_single_neuron_reference(self):
        """Vectorized layers agree with the per-neuron activation path."""
        rng = np.random.default_rng(3)
        layers = build_layers([784, 100, 10], np.random.default_rng([7, 1]))
        x = rng.uniform(-1, 1, 784)
        out, trace = forward_layers(layers, x)
        current = x
        for li, layer in enumerate(layers):
            expected = np.array(
                [phases.phasor_activate(current, row) for row in layer.weights]
            )
            np.testing.assert_allclose(trace[li].outputs[0], expected, atol=1e-10)
            current = expected
        np.testing.assert_allclose(out[0], current, atol=1e-10)

    def test_dimension_mismatch(self):
        layers = build_layers([6, 3], np.random.default_rng(0))
        with pytest.raises(ValueError, match="expects 6 inputs"):
            forward_layers(layers, np.zeros((1, 5)))

    def test_dropped_units_excluded_from_sum(self):
        """A dropped unit's phasor is removed, not encoded as phase 0."""
        rng = np.random.default_rng(5)
        layers = [
            DenseLayer(rng.uniform(-1, 1, (3, 4)), dropout_rate=0.5),
            DenseLayer(rng.uniform(-1, 1, (2, 3))),
        ]
        x = rng.uniform(-1, 1, (1, 4))
        mask_draw = np.array([[0.9, 0.1, 0.9]])  # drops units 0 and 2
        out, _ = forward_layers(layers, x, dropout_rng=FixedMaskRng(mask_draw))

        hidden, _ = forward_layers(layers[:1], x)
        kept = np.exp(1j * np.pi * hidden) * (mask_draw >= 0.5)
        expected = np.angle(kept @ layers[1].weights.T) / np.pi
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_zero_dropout_equals_eval_mode(self):
        layers = build_layers([8, 5, 3], np.random.default_rng(1), dropout_rate=0.0)
        x = np.random.default_rng(2).uniform(-1, 1, (4, 8))
        train_out, _ = forward_layers(layers, x, dropout_rng=np.random.default_rng(0))
        eval_out, _ = forward_layers(layers, x)
        np.testing.assert_array_equal(train_out, eval_out)


class TestBackward:
    def _loss(self, layers, x, targets):
        out, _ = forward_layers(layers, x)
        return float(np.mean(1.0 - np.cos(np.pi * (targets - out))))

    def test_zero_gradient_at_minimum(self):
        layers = build_layers([5, 4, 3], np.random.default_rng(4))
        x = np.random.default_rng(5).uniform(-1, 1, (2, 5))
        out, trace = forward_layers(layers, x)
        _, grad = batch_loss_and_grad(out, out)
        grads = backward_layers(layers, trace, grad)
        for g in grads:
            np.testing.assert_allclose(g, 0.0, atol=1e-15)

    def test_whole_model_finite_differences(self):
        """20 random 6-4-3 instances, max relative error < 1e-3."""
        rng = np.random.default_rng(99)
        h = 1e-5
        checked = 0
        attempt = 0
        while checked < 20:
            attempt += 1
            layers = build_layers([6, 4, 3], np.random.default_rng([attempt, 3]))
            x = rng.uniform(-1, 1, (1, 6))
            targets = 0.5 * np.eye(3)[rng.integers(0, 3)][None, :]
            out, trace = forward_layers(layers, x)
            if min(np.min(np.abs(t.superposition)) for t in trace) <= 0.1:
                continue
            _, grad = batch_loss_and_grad(targets, out)
            grads = backward_layers(layers, trace, grad)
            worst = 0.0
            for li, layer in enumerate(layers):
                fd = np.zeros_like(layer.weights)
                for r in range(layer.weights.shape[0]):
                    for c in range(layer.weights.shape[1]):
                        orig = layer.weights[r, c]
                        layer.weights[r, c] = orig + h
                        up = self._loss(layers, x, targets)
                        layer.weights[r, c] = orig - h
                        dn = self._loss(layers, x, targets)
                        layer.weights[r, c] = orig
                        fd[r, c] = (up - dn) / (2 * h)
                scale = np.maximum(np.abs(fd), 1e-2)
                worst = max(worst, float(np.max(np.abs(grads[li] - fd) / scale)))
            assert worst < 1e-3
            checked += 1

    def test_scale_invariance_directional_derivative(self):
        """Rescaling one layer's weights never changes the loss, so the
        gradient component along the weights themselves vanishes."""
        rng = np.random.default_rng(8)
        layers = build_layers([8, 6, 4], np.random.default_rng([5, 1]))
        x = rng.uniform(-1, 1, (3, 8))
        targets = 0.5 * np.eye(4)[rng.integers(0, 4, size=3)]
        out, trace = forward_layers(layers, x)
        _, grad = batch_loss_and_grad(targets, out)
        grads = backward_layers(layers, trace, grad)
        for layer, g in zip(layers, grads):
            directional = float(np.sum(layer.weights * g))
            assert abs(directional) < 1e-6

    def test_missing_trace_rejected(self):
        layers = build_layers([4, 2], np.random.default_rng(0))
        with pytest.raises(ValueError, match="trace"):
            backward_layers(layers, [], np.zeros((1, 2)))


class TestTraining:
    def test_zero_learning_rate_leaves_model_unchanged(self):
        ds = synthetic_blobs(2, 8, 16, spread=0.05, seed=0)
        clf = make_clf(epochs=1, learning_rate=0.0, seed=3).fit(ds.images, ds.labels)
        ref_proj, ref_layers = clf._build(8, 2)
        for trained, fresh in zip(clf.layers_, ref_layers):
            np.testing.assert_array_equal(trained.weights, fresh.weights)

    def test_blob_training_reaches_95_percent(self):
        """Separable blobs, 20 epochs: train accuracy >= 95%."""
        ds = synthetic_blobs(2, 16, 100, spread=0.05, seed=1)
        clf = PhasorClassifier(hidden=(8,), projection="rpp", epochs=20,
                               batch_size=32, dropout=0.0, seed=1)
        clf.fit(ds.images, ds.labels)
        acc, _ = evaluate_atemporal(clf, ds.images, ds.labels)
        assert acc >= 0.95

    def test_loss_decreases(self):
        ds = synthetic_blobs(3, 12, 60, spread=0.1, seed=2)
        clf = make_clf(hidden=(10,), epochs=10, seed=2).fit(ds.images, ds.labels)
        assert clf.history_[9]["train_loss"] < clf.history_[0]["train_loss"]

    def test_seed_determinism(self):
        ds = synthetic_blobs(2, 10, 30, spread=0.1, seed=3)
        a = make_clf(seed=11, dropout=0.2).fit(ds.images, ds.labels)
        b = make_clf(seed=11, dropout=0.2).fit(ds.images, ds.labels)
        for la, lb in zip(a.layers_, b.layers_):
            np.testing.assert_array_equal(la.weights, lb.weights)
        assert a.history_ == b.history_

    def test_empty_dataset_rejected(self):
        clf = make_clf()
        with pytest.raises(ValueError):
            clf.fit(np.zeros((0, 4)), np.zeros(0, dtype=int))

    def test_invalid_optimizer(self):
        ds = synthetic_blobs(2, 4, 4, spread=0.1, seed=0)
        with pytest.raises(ValueError, match="optimizer"):
            make_clf(optimizer="lbfgs").fit(ds.images, ds.labels)

    def test_eval_set_recorded(self):
        ds = synthetic_blobs(2, 8, 20, spread=0.1, seed=4)
        clf = make_clf(epochs=2, seed=4)
        clf.fit(ds.images, ds.labels, eval_set=(ds.images, ds.labels))
        assert all(rec["test_acc"] is not None for rec in clf.history_)


class TestEvaluate:
    def test_single_correct_sample(self):
        ds = synthetic_blobs(2, 8, 40, spread=0.02, seed=5)
        clf = make_clf(epochs=15, seed=5).fit(ds.images, ds.labels)
        for i in range(len(ds)):
            if clf.predict(ds.images[i : i + 1])[0] == ds.labels[i]:
                acc, confusion = evaluate_atemporal(
                    clf, ds.images[i : i + 1], ds.labels[i : i + 1]
                )
                assert acc == 1.0
                assert confusion.sum() == 1
                return
        pytest.fail("classifier got nothing right on easy blobs")

    def test_limit_zero_rejected(self):
        ds = synthetic_blobs(2, 8, 4, spread=0.1, seed=6)
        clf = make_clf(epochs=1, seed=6).fit(ds.images, ds.labels)
        with pytest.raises(ValueError, match="empty evaluation set"):
            evaluate_atemporal(clf, ds.images, ds.labels, limit=0)

    def test_confusion_totals(self):
        ds = synthetic_blobs(3, 8, 20, spread=0.1, seed=7)
        clf = make_clf(epochs=3, seed=7).fit(ds.images, ds.labels)
        acc, confusion = evaluate_atemporal(clf, ds.images, ds.labels)
        assert confusion.sum() == len(ds)
        assert np.trace(confusion) / len(ds) == pytest.approx(acc)

    def test_matches_training_report(self):
        """Same code path: re-evaluation equals the recorded test accuracy."""
        ds = synthetic_blobs(2, 8, 25, spread=0.1, seed=8)
        clf = make_clf(epochs=4, seed=8)
        clf.fit(ds.images, ds.labels, eval_set=(ds.images, ds.labels))
        acc, _ = evaluate_atemporal(clf, ds.images, ds.labels)
        assert acc == clf.history_[-1]["test_acc"]
