"""Classical simulation of qubit-encoded molecular vibrations."""

__version__ = "0.1.0"
