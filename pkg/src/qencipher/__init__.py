"""Pauli-mask quantum encryption with signature qubits, its transmission protocol and eavesdropper analysis."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
