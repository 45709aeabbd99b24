"""Steady-state inversion and probe response of a bichromatically driven
two-level emitter with permanent dipole moments."""

__version__ = "0.1.0"
