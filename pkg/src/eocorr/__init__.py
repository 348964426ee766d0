"""Simulation of electro-optic field correlations sampled by two
femtosecond probes in a ZnTe crystal: classical third-order signal,
thermal THz correlation, vacuum-assisted Kerr correlation, per-pulse
detector Monte Carlo and the analysis chain."""

__version__ = "0.1.0"
