"""Kerr-gate GKP magic-state preparation simulator."""

__version__ = "0.1.0"
