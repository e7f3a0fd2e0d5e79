"""Intensity-to-phase encoders.

Pixel intensities live in [0, 1] but phase activations live on [-1, 1],
and a plain linear rescale would map black and white onto the same point
of the circle.  Two encoders avoid that:

* NormalizedRandomProjection multiplies the image by a seeded random
  square matrix, then applies a simplified batch-norm (running mean and
  standard deviation per feature) scaled so ~99% of values land inside
  the phase domain, clipping the rest.
* RandomPixelPhase flips the sign of a seeded random subset of pixels,
  spreading values over [-1, 1] without changing any magnitude.

Both follow the scikit-learn transformer protocol.  `fit` learns the
moments from the given data in one shot; the incremental path used
inside a training loop (`encode_train`) normalizes each batch by its own
statistics while folding them into the running moments.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

# two-sided 99% quantile of the standard normal: divides the projected
# features so roughly 99% of them fall inside [-1, 1] before clipping
NORMAL_99_QUANTILE = 2.576

# constant features would otherwise divide by zero
STD_FLOOR = 1e-6


def update_running_moments(batch, mean, std, momentum=0.99):
    """One running-moment step: new = momentum*old + (1-momentum)*batch stat.

    `batch` is (n, features); the batch standard deviation is floored at
    STD_FLOOR so constant features stay usable.  Returns (mean, std).
    """
    batch = np.asarray(batch, dtype=float)
    b_mean = batch.mean(axis=0)
    b_std = np.maximum(batch.std(axis=0), STD_FLOOR)
    return momentum * mean + (1.0 - momentum) * b_mean, momentum * std + (1.0 - momentum) * b_std


class NormalizedRandomProjection(BaseEstimator, TransformerMixin):
    """Seeded random projection with running-moment normalization.

    Parameters
    ----------
    seed : int
        Generates the projection matrix; the matrix is reproducible from
        the seed alone.
    density : float in (0, 1]
        Fraction of nonzero matrix entries.  1.0 (default) keeps the
        projection dense; lower values zero a random subset of entries.
    momentum : float in [0, 1)
        Running-moment momentum used by `encode_train`.
    """

    kind = "nrp"

    def __init__(self, seed=0, density=1.0, momentum=0.99):
        self.seed = seed
        self.density = density
        self.momentum = momentum

    def initialize(self, n_features):
        """Build the matrix from the seed and reset moments to (0, 1)."""
        if n_features < 1:
            raise ValueError("n_features must be positive")
        if not 0.0 < self.density <= 1.0:
            raise ValueError(f"density must be in (0, 1], got {self.density}")
        rng = np.random.default_rng(self.seed)
        matrix = rng.uniform(-1.0, 1.0, size=(n_features, n_features))
        if self.density < 1.0:
            matrix = matrix * (rng.random(size=matrix.shape) < self.density)
        self.matrix_ = matrix
        self.mean_ = np.zeros(n_features)
        self.std_ = np.ones(n_features)
        self.n_features_in_ = n_features
        return self

    def fit(self, X, y=None):
        """Initialize from the seed and set the moments to X's statistics."""
        X = check_array(X, dtype=float)
        self.initialize(X.shape[1])
        projected = self._project(X)
        self.mean_ = projected.mean(axis=0)
        self.std_ = np.maximum(projected.std(axis=0), STD_FLOOR)
        return self

    def _project(self, X):
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} pixels, got {X.shape[1]}"
            )
        return X @ self.matrix_.T

    def _normalize(self, projected, mean, std):
        q = (projected - mean) / (NORMAL_99_QUANTILE * np.maximum(std, STD_FLOOR))
        return np.clip(q, -1.0, 1.0)

    def transform(self, X):
        """Project and normalize with the frozen running moments."""
        check_is_fitted(self, "matrix_")
        X = check_array(X, dtype=float)
        return self._normalize(self._project(X), self.mean_, self.std_)

    def encode_train(self, X):
        """Training-mode encoding of one batch.

        The batch is normalized by its own statistics while the running
        moments absorb them with the configured momentum.
        """
        check_is_fitted(self, "matrix_")
        X = check_array(X, dtype=float)
        projected = self._project(X)
        b_mean = projected.mean(axis=0)
        b_std = np.maximum(projected.std(axis=0), STD_FLOOR)
        self.mean_, self.std_ = update_running_moments(
            projected, self.mean_, self.std_, self.momentum
        )
        return self._normalize(projected, b_mean, b_std)

    def to_config(self):
        check_is_fitted(self, "matrix_")
        return {
            "kind": self.kind,
            "seed": int(self.seed),
            "dim": int(self.n_features_in_),
            "density": float(self.density),
            "momentum": float(self.momentum),
            "matrix": self.matrix_.ravel().tolist(),
            "mean": self.mean_.tolist(),
            "std": self.std_.tolist(),
        }

    @classmethod
    def from_config(cls, cfg):
        proj = cls(seed=cfg["seed"], density=cfg["density"], momentum=cfg["momentum"])
        dim = int(cfg["dim"])
        matrix = np.asarray(cfg["matrix"], dtype=float)
        if matrix.size != dim * dim:
            raise ValueError(f"projection.matrix must have {dim * dim} entries")
        proj.matrix_ = matrix.reshape(dim, dim)
        proj.mean_ = np.asarray(cfg["mean"], dtype=float)
        proj.std_ = np.asarray(cfg["std"], dtype=float)
        if proj.mean_.shape != (dim,) or proj.std_.shape != (dim,):
            raise ValueError("projection moments must match the projection dim")
        proj.n_features_in_ = dim
        return proj


class RandomPixelPhase(BaseEstimator, TransformerMixin):
    """Sign-flip encoder: each pixel is multiplied by a seeded +-1 mask.

    No normalization or clipping is needed since |x| <= 1 is preserved.
    """

    kind = "rpp"

    def __init__(self, seed=0):
        self.seed = seed

    def initialize(self, n_features):
        if n_features < 1:
            raise ValueError("n_features must be positive")
        rng = np.random.default_rng(self.seed)
        self.mask_ = rng.integers(0, 2, size=n_features) * 2.0 - 1.0
        self.n_features_in_ = n_features
        return self

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        return self.initialize(X.shape[1])

    def transform(self, X):
        check_is_fitted(self, "mask_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} pixels, got {X.shape[1]}")
        return X * self.mask_

    encode_train = transform

    def to_config(self):
        check_is_fitted(self, "mask_")
        return {
            "kind": self.kind,
            "seed": int(self.seed),
            "dim": int(self.n_features_in_),
            "mask": self.mask_.astype(int).tolist(),
        }

    @classmethod
    def from_config(cls, cfg):
        proj = cls(seed=cfg["seed"])
        mask = np.asarray(cfg["mask"], dtype=float)
        if mask.shape != (int(cfg["dim"]),):
            raise ValueError("projection.mask length must equal the projection dim")
        if not np.all(np.isin(mask, (-1.0, 1.0))):
            raise ValueError("projection.mask entries must be +-1")
        proj.mask_ = mask
        proj.n_features_in_ = int(cfg["dim"])
        return proj


class IdentityPhase(BaseEstimator, TransformerMixin):
    """No-op encoder for inputs that are already valid phases."""

    kind = "none"

    def __init__(self, seed=0):
        self.seed = seed

    def initialize(self, n_features):
        if n_features < 1:
            raise ValueError("n_features must be positive")
        self.n_features_in_ = n_features
        return self

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        return self.initialize(X.shape[1])

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} pixels, got {X.shape[1]}")
        return X

    encode_train = transform

    def to_config(self):
        check_is_fitted(self, "n_features_in_")
        return {"kind": self.kind, "seed": int(self.seed), "dim": int(self.n_features_in_)}

    @classmethod
    def from_config(cls, cfg):
        proj = cls(seed=cfg["seed"])
        proj.n_features_in_ = int(cfg["dim"])
        return proj


_KINDS = {
    NormalizedRandomProjection.kind: NormalizedRandomProjection,
    RandomPixelPhase.kind: RandomPixelPhase,
    IdentityPhase.kind: IdentityPhase,
}


def make_projection(kind, seed=0, density=1.0, momentum=0.99):
    """Construct an (uninitialized) projection of the named kind."""
    if kind == "nrp":
        return NormalizedRandomProjection(seed=seed, density=density, momentum=momentum)
    if kind == "rpp":
        return RandomPixelPhase(seed=seed)
    if kind == "none":
        return IdentityPhase(seed=seed)
    raise ValueError(f"unknown projection kind {kind!r} (expected nrp, rpp or none)")


def projection_from_config(cfg):
    """Rebuild a fitted projection from its serialized configuration."""
    kind = cfg.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"projection.kind {kind!r} is not one of {sorted(_KINDS)}")
    return _KINDS[kind].from_config(cfg)
