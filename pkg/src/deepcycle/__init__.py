"""Unit commitment with coal deep-cycling costs and dynamic CO2 emissions."""

__version__ = "0.1.0"
