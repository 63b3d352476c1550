"""Autoencoder runtime monitor with Gamma-calibrated thresholds and banded safety guards."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
