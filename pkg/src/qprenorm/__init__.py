"""Quasi-periodic renormalization of period-doubled forced unimodal maps."""

__version__ = "0.1.0"
