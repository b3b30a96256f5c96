"""Automatic image annotation: attention-fused low/high-level features,
log-entropy data equilibrium and recurrent five-tag decoding."""

__version__ = "0.1.0"
