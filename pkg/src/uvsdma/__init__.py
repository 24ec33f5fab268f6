"""Multiuser photon-counting channel estimation and detection toolkit."""

__version__ = "0.1.0"
