"""Maxwell-Bloch simulation and photon-statistics analysis of stationary-light trapping."""

__version__ = "0.1.0"
