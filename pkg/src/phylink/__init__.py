"""Channel estimators, MCS controllers and evaluation harness for OFDM links."""

__version__ = "0.1.0"
