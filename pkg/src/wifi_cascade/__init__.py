"""Cascading hidden-node congestion in Wi-Fi chains: analytic model, MAC simulator, oracles."""
__version__ = "0.1.0"
