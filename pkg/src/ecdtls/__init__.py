"""Curve-agile prime-field ECC with a DTLS 1.2 engine and an operation-count
energy model."""

__version__ = "0.1.0"
