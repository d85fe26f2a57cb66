"""VANET DDoS flow simulation and detection pipeline."""

__version__ = "0.1.0"
