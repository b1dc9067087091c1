"""Numerical laboratory for coupled nonlinear Schrödinger systems with polynomial nonlinearities."""

__version__ = "0.1.0"
