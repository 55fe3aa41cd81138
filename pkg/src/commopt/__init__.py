"""commopt: distributed optimization protocols with bit-exact communication accounting."""

from .commsim import ProtocolOutcome, Transcript, run_protocol, shared_randomness
from .instances import GenSpec, Instance, gen_random

__all__ = [
    "GenSpec",
    "Instance",
    "ProtocolOutcome",
    "Transcript",
    "gen_random",
    "run_protocol",
    "shared_randomness",
]

__version__ = "0.1.0"
