"""Optogenetic calcium-STDP spiking networks."""
__version__ = "0.1.0"
