"""Vehicular PKI: ticket and pseudonym issuance under on-demand acquisition policies."""

from . import model  # noqa: F401  (populates the codec registry)

__version__ = "0.1.0"
