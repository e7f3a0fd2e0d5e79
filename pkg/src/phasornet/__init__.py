"""Phasor networks: train once, execute atemporally or through spikes.

Activations are angles on the unit circle.  Trained weights run either
as ordinary matrix algebra (complex superposition per layer) or as a
spiking resonate-and-fire simulation that exchanges one precisely-timed
spike per unit per cycle, with no conversion step between the two.
"""

from .data import ImageDataset, load_dataset_dir, load_idx_images, load_idx_labels, synthetic_blobs
from .model_io import load_model, save_model
from .network import DenseLayer, PhasorClassifier, evaluate_atemporal
from .phases import (
    activation_grad,
    circular_error,
    cosine_loss,
    cosine_loss_grad,
    encode_target,
    phase_of,
    phasor_activate,
    predict_class,
    superpose,
    wrap_phase,
)
from .projection import (
    IdentityPhase,
    NormalizedRandomProjection,
    RandomPixelPhase,
    make_projection,
)
from .temporal import (
    RFParams,
    SpikeTrain,
    count_synops,
    decode_spikes,
    drop_spikes,
    encode_phases,
    evaluate_temporal,
    impulse_closed_form,
    jitter_spikes,
    rf_step,
    simulate_layer,
    simulate_network,
    temporal_phase_mse,
)

__version__ = "0.1.0"

__all__ = [
    "ImageDataset",
    "load_dataset_dir",
    "load_idx_images",
    "load_idx_labels",
    "synthetic_blobs",
    "load_model",
    "save_model",
    "DenseLayer",
    "PhasorClassifier",
    "evaluate_atemporal",
    "activation_grad",
    "circular_error",
    "cosine_loss",
    "cosine_loss_grad",
    "encode_target",
    "phase_of",
    "phasor_activate",
    "predict_class",
    "superpose",
    "wrap_phase",
    "IdentityPhase",
    "NormalizedRandomProjection",
    "RandomPixelPhase",
    "make_projection",
    "RFParams",
    "SpikeTrain",
    "count_synops",
    "decode_spikes",
    "drop_spikes",
    "encode_phases",
    "evaluate_temporal",
    "impulse_closed_form",
    "jitter_spikes",
    "rf_step",
    "simulate_layer",
    "simulate_network",
    "temporal_phase_mse",
    "__version__",
]
