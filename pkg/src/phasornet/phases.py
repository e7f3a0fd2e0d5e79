"""Phase arithmetic and the phasor neuron kernel.

Activations live on the unit circle and are stored as angles normalized
by pi: a value of 0.5 means pi/2 radians, and values differing by 2 are
the same angle.  A neuron combines a phase vector x with a real weight
vector w through the complex superposition

    S = sum_j w_j * exp(i*pi*x_j)

and emits the angle of S (normalized by pi again) as its activation.
Quadrature targets, the circular cosine loss, their analytic gradients
and the class decoder live here too, so a whole network's differentiable
path is expressible with this module plus plain matrix algebra.

Everything is a pure function; safe to call from any thread.
"""

import warnings

import numpy as np

# |S|^2 below this is treated as a singular superposition: the activation
# is still defined (angle 0 by convention) but its gradient is clamped to
# zero so optimization can step through the degenerate point.
DEGENERATE_EPS = 1e-12


def wrap_phase(p):
    """Wrap normalized phase angles into the half-open interval [-1, 1).

    Accepts scalars or arrays; idempotent.  Raises ValueError on
    non-finite input.
    """
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite phase")
    wrapped = np.mod(p + 1.0, 2.0) - 1.0
    return wrapped if wrapped.ndim else float(wrapped)


def circular_error(a, b):
    """Signed difference a - b on the circle, wrapped into [-1, 1).

    The absolute value of this is the circular distance between the two
    angles (shortest way around).
    """
    return wrap_phase(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def _check_pair(x, w):
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 1 or w.ndim != 1 or x.shape != w.shape or x.size == 0:
        raise ValueError(
            f"phase/weight vectors must be equal-length 1-d, got {x.shape} and {w.shape}"
        )
    return x, w


def superpose(x, w):
    """Weighted superposition of unit phasors: sum_j w_j * exp(i*pi*x_j).

    Returns a complex scalar.  Linear in w; periodic with period 2 in
    every element of x.
    """
    x, w = _check_pair(x, w)
    return complex(np.sum(w * np.exp(1j * np.pi * x)))


def phase_of(s):
    """Angle of a complex value, normalized by pi.

    Passes through atan2's closed output range [-1, 1]; the origin maps
    to 0 by convention so a fully cancelled superposition never traps.
    """
    s = complex(s)
    if s.real == 0.0 and s.imag == 0.0:
        return 0.0
    return float(np.arctan2(s.imag, s.real) / np.pi)


def phasor_activate(x, w):
    """Single-neuron activation: angle of the weighted superposition."""
    return phase_of(superpose(x, w))


def activation_grad(x, w):
    """Analytic gradient of phasor_activate with respect to both inputs.

    With S = superpose(x, w), a = Re S, b = Im S and theta_j = pi*x_j:

        dy/dx_j = w_j * (a*cos(theta_j) + b*sin(theta_j)) / (a^2 + b^2)
        dy/dw_j = (a*sin(theta_j) - b*cos(theta_j)) / (pi * (a^2 + b^2))

    When |S|^2 falls below DEGENERATE_EPS the superposition is flagged as
    degenerate (RuntimeWarning) and both gradients come back zero so that
    training continues.
    """
    x, w = _check_pair(x, w)
    s = np.sum(w * np.exp(1j * np.pi * x))
    mag2 = s.real * s.real + s.imag * s.imag
    if mag2 < DEGENERATE_EPS:
        warnings.warn("degenerate superposition: zero gradient", RuntimeWarning, stacklevel=2)
        return np.zeros_like(x), np.zeros_like(w)
    theta = np.pi * x
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    dx = w * (s.real * cos_t + s.imag * sin_t) / mag2
    dw = (s.real * sin_t - s.imag * cos_t) / (np.pi * mag2)
    return dx, dw


def encode_target(label, n_classes):
    """Quadrature target vector: 0.5 (a quarter turn) at the labeled slot.

    All other slots are phase 0.
    """
    label = int(label)
    n_classes = int(n_classes)
    if not 0 <= label < n_classes:
        raise ValueError(f"class index {label} out of range for {n_classes} classes")
    target = np.zeros(n_classes)
    target[label] = 0.5
    return target


def cosine_loss(y, y_hat):
    """Mean of 1 - cos(pi * (y - y_hat)) over the elements.

    Bounded in [0, 2]; zero exactly when every wrapped difference is
    zero; invariant to shifting any element of either argument by 2.
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    return float(np.mean(1.0 - np.cos(np.pi * (y - y_hat))))


def cosine_loss_grad(y, y_hat):
    """Gradient of cosine_loss with respect to the prediction y_hat.

    For the mean reduction over n elements:
        d loss / d y_hat_k = -(pi / n) * sin(pi * (y_k - y_hat_k))
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    return -(np.pi / y.size) * np.sin(np.pi * (y - y_hat))


def predict_class(output_phases):
    """Index of the output whose phase is circularly closest to 0.5.

    Distances are measured on the circle (wrapped difference), so the
    result is invariant to shifting any component by 2.  Ties go to the
    lowest index.
    """
    y = np.asarray(output_phases, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("output phase vector must be 1-d and nonempty")
    return int(np.argmin(np.abs(circular_error(y, 0.5))))
