"""Numerical verification of gradient Ricci soliton identities on coordinate charts."""

__version__ = "0.1.0"
