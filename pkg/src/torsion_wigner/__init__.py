"""Phase-space simulation of pulsed torsional optomechanics."""

__version__ = "0.1.0"
