"""Privacy-preserving outsourced stabilization of unknown linear systems from data."""

from .plant import Plant, DataSet, batch_reactor
from .synth import Status, SynthesisOutcome, maximize_gamma_clean, maximize_gamma_noisy
from .transform import TransformKeys, pre_process, post_process

__all__ = [
    "Plant", "DataSet", "batch_reactor", "Status", "SynthesisOutcome",
    "maximize_gamma_clean", "maximize_gamma_noisy", "TransformKeys",
    "pre_process", "post_process",
]
__version__ = "0.1.0"
