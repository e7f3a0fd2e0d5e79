"""Spike-domain execution of trained phasor networks.

A phase becomes one precisely-timed spike per integration cycle, and each
dense layer becomes a bank of resonate-and-fire units whose complex
potential obeys

    dz/dt = (-leakage * period + i * 2*pi / period) * z + input current.

Input spikes inject rectangular current pulses of total charge equal to
the synaptic weight; the linear part is integrated exactly through an
exponential update, so with zero leakage a silent unit's potential is a
pure rotation to machine precision.  Voltage (Im z) peaks above
threshold, spaced by a refractory gap, become output spikes whose timing
carries the unit's phase onward.  Decoding subtracts a quarter period of
integration delay per layer of depth.

Layers are simulated sequentially over one shared time grid.  Each spike
pulse is centered on its (grid-free) spike time and prorated exactly
over the steps it overlaps, so no artificial per-layer lag accumulates.
Simulations of different images are independent and can run in parallel.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .phases import wrap_phase

__all__ = [
    "RFParams",
    "SpikeTrain",
    "RFState",
    "NetworkRun",
    "TemporalEvalResult",
    "encode_phases",
    "decode_spikes",
    "last_full_cycle",
    "rf_step",
    "impulse_closed_form",
    "new_rf_state",
    "inject_spike",
    "integrate_state",
    "detect_spikes",
    "simulate_layer",
    "simulate_network",
    "drop_spikes",
    "jitter_spikes",
    "count_synops",
    "temporal_phase_mse",
    "evaluate_temporal",
    "replace",
]


@dataclass(frozen=True)
class RFParams:
    """Resonate-and-fire unit and simulation-grid parameters.

    box_width is the input pulse duration as a fraction of the period;
    refractory is in seconds.
    """

    period: float = 1.0
    leakage: float = 0.2
    box_width: float = 0.05
    threshold: float = 0.03
    refractory: float = 0.25
    steps_per_cycle: int = 40
    n_cycles: int = 10

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.leakage < 0:
            raise ValueError("leakage must be >= 0")
        if not 0.0 < self.box_width < 1.0:
            raise ValueError("box_width must be in (0, 1)")
        if self.refractory < 0:
            raise ValueError("refractory must be >= 0")
        if self.steps_per_cycle < 8:
            raise ValueError(f"steps_per_cycle must be >= 8, got {self.steps_per_cycle}")
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")

    @property
    def dt(self):
        return self.period / self.steps_per_cycle

    @property
    def horizon(self):
        return self.n_cycles * self.period

    @property
    def lam(self):
        """Complex rate of the homogeneous dynamics."""
        return complex(-self.leakage * self.period, 2.0 * math.pi / self.period)


@dataclass
class SpikeTrain:
    """Time-sorted spike events for a bank of neurons."""

    times: np.ndarray
    neurons: np.ndarray
    n_neurons: int
    horizon: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.neurons = np.asarray(self.neurons, dtype=np.int64)
        if self.times.shape != self.neurons.shape or self.times.ndim != 1:
            raise ValueError("times and neurons must be matching 1-d arrays")
        if self.times.size:
            if self.times.min() < 0 or self.times.max() > self.horizon + 1e-12:
                raise ValueError("spike times must lie in [0, horizon]")
            if self.neurons.min() < 0 or self.neurons.max() >= self.n_neurons:
                raise ValueError("neuron index out of range")
            order = np.argsort(self.times, kind="stable")
            self.times = self.times[order]
            self.neurons = self.neurons[order]

    def __len__(self):
        return len(self.times)


def encode_phases(phases, params, n_cycles=None):
    """One spike per neuron per cycle; phase 0 lands on the cycle midpoint.

    Neuron j spikes at k*T + T*(x_j + 1)/2 for cycles k = 0..n_cycles-1.
    """
    x = wrap_phase(np.atleast_1d(np.asarray(phases, dtype=float)))
    if n_cycles is None:
        n_cycles = params.n_cycles
    T = params.period
    offsets = T * (x + 1.0) / 2.0
    cycles = np.arange(n_cycles)[:, None] * T
    times = (cycles + offsets[None, :]).ravel()
    neurons = np.tile(np.arange(x.size), n_cycles)
    return SpikeTrain(times, neurons, n_neurons=x.size, horizon=n_cycles * T)


def last_full_cycle(horizon, params, layer_depth=0):
    """Index of the last cycle fully covered on a layer's delayed clock.

    A unit at depth L reads its inputs a quarter period late per layer,
    so its cycle k spans [k*T + L*T/4, (k+1)*T + L*T/4] in global time.
    """
    T = params.period
    k = math.floor((horizon - layer_depth * T / 4.0) / T + 1e-9) - 1
    if k < 0:
        raise ValueError("horizon too short for a full cycle at this depth")
    return k


def decode_spikes(train, params, layer_depth=0, cycle=0, fallback=False):
    """Decode one integration cycle of a spike train back to phases.

    Spike times are referenced to the global start minus layer_depth
    quarter-period delays; within the cycle window the latest spike per
    neuron wins.  With fallback=True a neuron silent inside the window
    falls back to its most recent earlier spike.  Returns
    (phases, missing) where missing marks neurons with no usable spike;
    missing neurons carry phase 0 and must be excluded from metrics.
    """
    T = params.period
    shifted = train.times - layer_depth * T / 4.0
    lo, hi = cycle * T, (cycle + 1) * T
    mask = (shifted < hi) if fallback else ((shifted >= lo) & (shifted < hi))
    phases = np.zeros(train.n_neurons)
    missing = np.ones(train.n_neurons, dtype=bool)
    idx = np.flatnonzero(mask)
    if idx.size:
        # events are time-sorted, so assigning in order keeps the latest
        neuron = train.neurons[idx]
        value = wrap_phase(2.0 * np.mod(shifted[idx], T) / T - 1.0)
        phases[neuron] = value
        missing[neuron] = False
    return phases, missing


def rf_step(z, current, dt, params):
    """Advance complex potentials one step under piecewise-constant input.

    Exact for the linear dynamics: z <- z*e^(lam*dt) + I*(e^(lam*dt)-1)/lam.
    """
    lam = params.lam
    f = np.exp(lam * dt)
    return z * f + np.asarray(current) * ((f - 1.0) / lam)


def impulse_closed_form(x, w):
    """Potential after one cycle of ideal delta inputs from rest.

    Equals sum_j w_j * exp(-i*pi*x_j): the complex conjugate of the
    atemporal superposition, reached exactly when leakage is zero and the
    pulses are true deltas.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 1 or x.shape != w.shape or x.size == 0:
        raise ValueError(f"phase/weight vectors must be equal-length 1-d, got {x.shape} and {w.shape}")
    return complex(np.sum(w * np.exp(-1j * np.pi * x)))


@dataclass
class RFState:
    """Explicit integrator state for a bank of units.

    boxes holds (neuron, t_start, t_end, height) current pulses; t is the
    time the state has been integrated up to.
    """

    z: np.ndarray
    last_spike: np.ndarray
    boxes: list = field(default_factory=list)
    t: float = 0.0


def new_rf_state(n_neurons, t=0.0):
    return RFState(
        z=np.zeros(n_neurons, dtype=complex),
        last_spike=np.full(n_neurons, -np.inf),
        t=t,
    )


def inject_spike(state, neuron, weight, t, params):
    """Register one spike's current pulse on a unit.

    The pulse is a box of duration box_width*period centered on the spike
    time with height weight/duration, so the delivered charge equals the
    weight for any width; pulses on the same unit sum linearly.
    """
    width = params.box_width * params.period
    state.boxes.append((int(neuron), t - width / 2.0, t + width / 2.0, weight / width))
    return state


def integrate_state(state, t_end, params):
    """Integrate the state exactly from state.t to t_end.

    The timeline is split at every pulse edge so the input is constant on
    each segment, making the exponential update exact for the full
    piecewise-constant dynamics.
    """
    edges = {state.t, t_end}
    for _, start, end, _ in state.boxes:
        for edge in (start, end):
            if state.t < edge < t_end:
                edges.add(edge)
    timeline = sorted(edges)
    for a, b in zip(timeline[:-1], timeline[1:]):
        current = np.zeros(len(state.z))
        for neuron, start, end, height in state.boxes:
            if start <= a and end >= b:
                current[neuron] += height
        state.z = rf_step(state.z, current, b - a, params)
    state.t = t_end
    return state


def detect_spikes(potential, params, n_neurons=None):
    """Turn sampled voltages into a spike train.

    potential: (n_samples, n_neurons) of Im z on the simulation grid.  A
    spike fires where the discrete derivative changes sign from + to -,
    the peak sample is positive and above threshold, and the refined time
    clears the refractory gap since that unit's previous spike.  Times
    are refined by quadratic interpolation through the three samples
    around the peak.
    """
    V = np.asarray(potential, dtype=float)
    if V.ndim != 2:
        raise ValueError("potential must be (n_samples, n_neurons)")
    if n_neurons is None:
        n_neurons = V.shape[1]
    dt = params.dt
    horizon = (V.shape[0] - 1) * dt
    d = np.diff(V, axis=0)
    rising = d[:-1] > 0
    falling = d[1:] <= 0
    peak = rising & falling & (V[1:-1] > params.threshold) & (V[1:-1] > 0)
    rows, cols = np.nonzero(peak)
    rows = rows + 1  # sample index of the peak
    times, neurons = [], []
    order = np.lexsort((rows, cols))
    last = np.full(n_neurons, -np.inf)
    for k in order:
        n, j = rows[k], cols[k]
        denom = V[n - 1, j] - 2.0 * V[n, j] + V[n + 1, j]
        delta = 0.5 * (V[n - 1, j] - V[n + 1, j]) / denom if denom < 0 else 0.0
        t = (n + delta) * dt
        if t - last[j] > params.refractory:
            times.append(min(max(t, 0.0), horizon))
            neurons.append(j)
            last[j] = t
    return SpikeTrain(np.array(times), np.array(neurons), n_neurons, horizon)


def _layer_currents(train, weights, params, n_steps):
    """Average drive per grid step for each downstream unit: (steps, out).

    Each input spike's centered box pulse is prorated over the steps it
    overlaps, keeping the delivered charge exact; the pulse is scaled by
    the spiking input's weight column.
    """
    dt = params.dt
    width = params.box_width * params.period
    activity = np.zeros((n_steps, train.n_neurons))
    if len(train):
        start = np.clip(train.times - width / 2.0, 0.0, None)
        end = np.clip(train.times + width / 2.0, None, n_steps * dt)
        first = np.floor(start / dt).astype(int)
        span = int(np.ceil(width / dt)) + 1
        for off in range(span + 1):
            step = first + off
            lo = np.maximum(start, step * dt)
            hi = np.minimum(end, (step + 1) * dt)
            overlap = hi - lo
            valid = (overlap > 0) & (step >= 0) & (step < n_steps)
            np.add.at(
                activity,
                (step[valid], train.neurons[valid]),
                overlap[valid] / (width * dt),
            )
    return activity @ weights.T


def simulate_layer(weights, input_train, params, record_potential=False):
    """Drive one dense layer with a spike train; emit its output train.

    Returns (output SpikeTrain, sampled potential or None).  The grid is
    the input train's horizon divided into steps of params.dt.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[1] != input_train.n_neurons:
        raise ValueError(
            f"weight matrix {weights.shape} does not accept {input_train.n_neurons} inputs"
        )
    n_steps = int(round(input_train.horizon / params.dt))
    drive = _layer_currents(input_train, weights, params, n_steps)
    lam = params.lam
    f = np.exp(lam * params.dt)
    drive = drive * ((f - 1.0) / lam)
    z = np.zeros(weights.shape[0], dtype=complex)
    V = np.empty((n_steps + 1, weights.shape[0]))
    V[0] = 0.0
    for n in range(n_steps):
        z = z * f + drive[n]
        V[n + 1] = z.imag
    out = detect_spikes(V, params, n_neurons=weights.shape[0])
    return out, (V if record_potential else None)


def drop_spikes(train, p, rng):
    """Remove each event independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("drop probability must be in [0, 1]")
    keep = rng.random(len(train)) >= p
    return SpikeTrain(train.times[keep], train.neurons[keep], train.n_neurons, train.horizon)


def jitter_spikes(train, sigma, rng, params):
    """Shift each event by zero-mean Gaussian noise with std sigma*period.

    sigma is expressed as a fraction of the period; times are clamped to
    [0, horizon] and the train is re-sorted.
    """
    if sigma < 0:
        raise ValueError("jitter sigma must be >= 0")
    noise = rng.normal(0.0, sigma * params.period, len(train))
    times = np.clip(train.times + noise, 0.0, train.horizon)
    return SpikeTrain(times, train.neurons, train.n_neurons, train.horizon)


def count_synops(trains, clf):
    """Synaptic operations: every spike costs its emitter's fanout.

    trains[0] is the encoded input (fanout = first layer width), each
    further train is a layer's output; the final layer has fanout 0.
    """
    fanouts = [layer.out_dim for layer in clf.layers_] + [0]
    per_layer = [len(train) * fanouts[d] for d, train in enumerate(trains)]
    return {"per_layer": per_layer, "total": int(sum(per_layer))}


def temporal_phase_mse(decoded, missing, reference):
    """Mean squared circular error over the non-missing units.

    Returns nan when every unit is missing (undefined, not zero).
    """
    live = ~np.asarray(missing, dtype=bool)
    if not np.any(live):
        return float("nan")
    err = wrap_phase(np.asarray(decoded)[live] - np.asarray(reference)[live])
    return float(np.mean(err * err))


@dataclass
class NetworkRun:
    """Everything one temporal inference produced."""

    prediction: int
    silent: bool
    output_phases: np.ndarray
    output_missing: np.ndarray
    trains: list
    references: list
    cycle_mse: list          # per depth: array over cycles (nan where undefined)
    synops: dict
    potentials: list | None = None


def simulate_network(clf, image, params, rng=None, drop_prob=0.0, jitter=0.0,
                     perturb_input=False, record_potential=False):
    """Run a trained classifier on one image entirely through spikes.

    The projection is an encoder, not a spiking layer: it is applied
    atemporally and its output phases become the input spike train.
    Perturbations (drop_prob, jitter) apply to the trains transmitted
    between dense layers; perturb_input extends them to the encoded
    input train.  The prediction decodes the output layer's last full
    delayed cycle, falling back per unit to its most recent earlier
    spike; a network whose output units never spike is flagged silent
    and predicts -1.
    """
    from .network import forward_layers  # local import avoids cycle at module load

    image = np.asarray(image, dtype=float).ravel()
    phases0 = clf.projection_.transform(image[None, :])[0]
    _, trace = forward_layers(clf.layers_, phases0[None, :])
    references = [phases0] + [step.outputs[0] for step in trace]

    if (drop_prob > 0 or jitter > 0) and rng is None:
        raise ValueError("perturbations need an rng")

    feed = encode_phases(phases0, params)
    trains = [feed]
    potentials = [] if record_potential else None
    for li, layer in enumerate(clf.layers_):
        if (li > 0 or perturb_input) and (drop_prob > 0 or jitter > 0):
            if drop_prob > 0:
                feed = drop_spikes(feed, drop_prob, rng)
            if jitter > 0:
                feed = jitter_spikes(feed, jitter, rng, params)
        feed, V = simulate_layer(layer.weights, feed, params, record_potential)
        trains.append(feed)
        if record_potential:
            potentials.append(V)

    cycle_mse = []
    for depth, train in enumerate(trains):
        k_last = last_full_cycle(train.horizon, params, depth)
        mses = np.empty(k_last + 1)
        for k in range(k_last + 1):
            decoded, missing = decode_spikes(train, params, depth, k)
            mses[k] = temporal_phase_mse(decoded, missing, references[depth])
        cycle_mse.append(mses)

    out_depth = len(trains) - 1
    k_out = last_full_cycle(trains[-1].horizon, params, out_depth)
    output_phases, output_missing = decode_spikes(
        trains[-1], params, out_depth, k_out, fallback=True
    )
    silent = bool(np.all(output_missing))
    if silent:
        prediction = -1
    else:
        dist = np.abs(wrap_phase(output_phases - 0.5))
        dist[output_missing] = np.inf
        prediction = int(np.argmin(dist))

    return NetworkRun(
        prediction=prediction,
        silent=silent,
        output_phases=output_phases,
        output_missing=output_missing,
        trains=trains,
        references=references,
        cycle_mse=cycle_mse,
        synops=count_synops(trains, clf),
        potentials=potentials,
    )


@dataclass
class TemporalEvalResult:
    accuracy: float
    n: int
    correct: int
    silent: int
    per_cycle_output_mse: np.ndarray
    final_mse_per_layer: np.ndarray  # final-cycle phase MSE per dense layer
    synops_total: int
    predictions: np.ndarray


def evaluate_temporal(clf, X, y, params, limit=None, drop_prob=0.0, jitter=0.0,
                      perturb_input=False, seed=0, threads=1):
    """Temporal accuracy over a dataset; silent runs count as incorrect.

    Each image gets an independent RNG stream derived from (seed, index),
    so threaded and serial evaluation produce identical results.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if limit is not None:
        if limit <= 0:
            raise ValueError("empty evaluation set")
        X, y = X[:limit], y[:limit]
    if len(X) == 0:
        raise ValueError("empty evaluation set")
    seed_key = list(np.atleast_1d(seed).astype(np.int64))
    label_idx = np.searchsorted(clf.classes_, y)

    def run_one(i):
        rng = np.random.default_rng(seed_key + [i])
        return simulate_network(
            clf, X[i], params, rng=rng, drop_prob=drop_prob, jitter=jitter,
            perturb_input=perturb_input,
        )

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(run_one, range(len(X))))
    else:
        runs = [run_one(i) for i in range(len(X))]

    predictions = np.array([run.prediction for run in runs])
    correct = int(np.sum(predictions == label_idx))
    silent = int(sum(run.silent for run in runs))
    mse_rows = [run.cycle_mse[-1] for run in runs]
    width = max(len(row) for row in mse_rows)
    stacked = np.full((len(runs), width), np.nan)
    for i, row in enumerate(mse_rows):
        stacked[i, : len(row)] = row
    per_cycle = np.full(width, np.nan)
    defined = ~np.all(np.isnan(stacked), axis=0)
    if defined.any():
        per_cycle[defined] = np.nanmean(stacked[:, defined], axis=0)

    n_layers = len(runs[0].cycle_mse) - 1  # depth 0 is the input train
    final_mse = np.full(n_layers, np.nan)
    for d in range(1, n_layers + 1):
        vals = np.array([run.cycle_mse[d][-1] for run in runs])
        if not np.all(np.isnan(vals)):
            final_mse[d - 1] = np.nanmean(vals)
    return TemporalEvalResult(
        accuracy=correct / len(X),
        n=len(X),
        correct=correct,
        silent=silent,
        per_cycle_output_mse=per_cycle,
        final_mse_per_layer=final_mse,
        synops_total=int(sum(run.synops["total"] for run in runs)),
        predictions=predictions,
    )
