"""Built-in property suites behind the `verify` command.

Each suite runs on synthetic data in seconds and returns (ok, detail).
They cover the invariants the rest of the system leans on: analytic
gradients against finite differences, the delta-input closed form, the
spike codec round trip, integrator exactness, and the single-unit
identity through the full spiking path.
"""

import numpy as np

from . import phases
from .network import backward_layers, batch_loss_and_grad, build_layers, forward_layers
from .temporal import (
    RFParams,
    decode_spikes,
    encode_phases,
    impulse_closed_form,
    inject_spike,
    integrate_state,
    last_full_cycle,
    new_rf_state,
    rf_step,
    simulate_layer,
)


def suite_gradients(rng=None):
    """Activation and loss gradients against central finite differences."""
    rng = rng or np.random.default_rng(101)
    h = 1e-5
    worst = 0.0
    checked = 0
    while checked < 100:
        n = int(rng.integers(1, 30))
        x = rng.uniform(-1, 1, n)
        w = rng.uniform(-1.5, 1.5, n)
        if abs(phases.superpose(x, w)) <= 0.1:
            continue
        dx, dw = phases.activation_grad(x, w)
        for j in range(n):
            for vec, grad, kind in ((x, dx, "x"), (w, dw, "w")):
                up, dn = vec.copy(), vec.copy()
                up[j] += h
                dn[j] -= h
                if kind == "x":
                    fd = (phases.phasor_activate(up, w) - phases.phasor_activate(dn, w)) / (2 * h)
                else:
                    fd = (phases.phasor_activate(x, up) - phases.phasor_activate(x, dn)) / (2 * h)
                if abs(fd) > 1e4:
                    continue  # stepped across the angle branch cut
                worst = max(worst, abs(grad[j] - fd) / max(abs(fd), 1.0))
        checked += 1
    if worst >= 1e-4:
        return False, f"activation gradient relative error {worst:.2e} >= 1e-4"

    # whole-model check on a small stack
    model_worst = 0.0
    attempts = 0
    checked = 0
    while checked < 20 and attempts < 200:
        attempts += 1
        layers = build_layers([6, 4, 3], np.random.default_rng([attempts, 3]))
        x = rng.uniform(-1, 1, (1, 6))
        targets = 0.5 * np.eye(3)[int(rng.integers(0, 3))][None, :]
        out, trace = forward_layers(layers, x)
        if min(np.min(np.abs(t.superposition)) for t in trace) <= 0.1:
            continue
        _, grad = batch_loss_and_grad(targets, out)
        grads = backward_layers(layers, trace, grad)
        for layer, g in zip(layers, grads):
            fd = np.zeros_like(layer.weights)
            for r in range(fd.shape[0]):
                for c in range(fd.shape[1]):
                    orig = layer.weights[r, c]
                    for sign, slot in ((1, 0), (-1, 1)):
                        layer.weights[r, c] = orig + sign * h
                        o, _ = forward_layers(layers, x)
                        val = float(np.mean(1 - np.cos(np.pi * (targets - o))))
                        fd[r, c] += val if slot == 0 else -val
                    layer.weights[r, c] = orig
            fd /= 2 * h
            model_worst = max(model_worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-2))))
        checked += 1
    if model_worst >= 1e-3:
        return False, f"whole-model gradient relative error {model_worst:.2e} >= 1e-3"
    return True, f"max relative error {worst:.2e} (single), {model_worst:.2e} (model)"


def suite_impulse(rng=None):
    """Delta-input closed form: algebraic identity plus box convergence."""
    rng = rng or np.random.default_rng(202)
    for _ in range(50):
        n = int(rng.integers(1, 20))
        x = rng.uniform(-1, 1, n)
        w = rng.uniform(-1, 1, n)
        diff = abs(impulse_closed_form(x, w) - np.conj(phases.superpose(x, w)))
        if diff > 1e-12:
            return False, f"closed form vs conjugate superposition differs by {diff:.2e}"

    params = RFParams(leakage=0.0, box_width=0.001)
    T = params.period
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 12))
        x = rng.uniform(-1, 1, n)
        w = rng.uniform(-1, 1, n)
        times = np.mod(x, 2.0) * T / 2.0
        state = new_rf_state(1)
        for t_i, w_i in zip(times, w):
            inject_spike(state, 0, w_i, t_i, params)
        half = params.box_width * T / 2.0
        state.t = min(0.0, float(times.min()) - half)
        t_end = max(T, float(times.max()) + half)
        integrate_state(state, t_end, params)
        z = state.z[0] * np.exp(params.lam * (T - t_end))
        worst = max(worst, abs(z - impulse_closed_form(x, w)))
    if worst >= 1e-3:
        return False, f"box integration error {worst:.2e} >= 1e-3 at width 0.001"
    return True, f"max box-vs-delta error {worst:.2e} at width 0.001"


def suite_codec(rng=None):
    """Encode/decode round trip within two grid steps per period."""
    params = RFParams()
    tol = 2.0 * params.dt / params.period
    x = np.linspace(-1, 0.999, 128)
    train = encode_phases(x, params)
    worst = 0.0
    for k in range(params.n_cycles):
        decoded, missing = decode_spikes(train, params, 0, k)
        if missing.any():
            return False, f"cycle {k}: {int(missing.sum())} phases missing after encode"
        worst = max(worst, float(np.max(np.abs(phases.wrap_phase(decoded - x)))))
    if worst >= tol:
        return False, f"round-trip error {worst:.2e} >= {tol:.2e}"
    return True, f"max round-trip error {worst:.2e} (tolerance {tol:.2e})"


def suite_integrator(rng=None):
    """Homogeneous rotation and decay to machine precision."""
    params = RFParams(leakage=0.0)
    z = np.array([0.6 - 0.2j])
    mag0 = abs(z[0])
    angle = np.angle(z[0])
    for _ in range(200):
        z = rf_step(z, 0.0, params.dt, params)
        angle += 2 * np.pi * params.dt / params.period
    drift_mag = abs(abs(z[0]) - mag0)
    drift_ang = abs(np.angle(z[0] * np.exp(-1j * angle)))
    if drift_mag > 1e-12 or drift_ang > 1e-10:
        return False, f"rotation drift: |z| {drift_mag:.2e}, angle {drift_ang:.2e}"

    params = RFParams(leakage=0.2)
    z = np.array([1.0 + 0j])
    for _ in range(params.steps_per_cycle):
        z = rf_step(z, 0.0, params.dt, params)
    decay_err = abs(abs(z[0]) - np.exp(-params.leakage * params.period))
    if decay_err > 1e-12:
        return False, f"decay error {decay_err:.2e}"
    return True, f"rotation drift {drift_ang:.2e}, decay error {decay_err:.2e}"


def suite_neuron_identity(rng=None):
    """64 phases through unit diagonal weights: spike-decoded error <= 0.05."""
    params = RFParams()
    x = np.linspace(-1, 0.98, 64)
    train = encode_phases(x, params)
    out, _ = simulate_layer(np.eye(64), train, params)
    k = last_full_cycle(out.horizon, params, 1)
    decoded, missing = decode_spikes(out, params, 1, k)
    if missing.any():
        return False, f"{int(missing.sum())} units silent"
    worst = float(np.max(np.abs(phases.wrap_phase(decoded - x))))
    if worst > 0.05:
        return False, f"identity error {worst:.3f} > 0.05"
    return True, f"max identity error {worst:.4f} after {k + 1} cycles"


SUITES = {
    "gradients": suite_gradients,
    "impulse": suite_impulse,
    "codec": suite_codec,
    "integrator": suite_integrator,
    "neuron-identity": suite_neuron_identity,
}


def run_suites(names=None):
    """Run the named suites (all by default); yields (name, ok, detail)."""
    for name in names or SUITES:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r} (choose from {sorted(SUITES)})")
        ok, detail = SUITES[name]()
        yield name, ok, detail
