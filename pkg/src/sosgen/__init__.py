"""Plane-wave ultrasound speed-of-sound data factory and evaluation harness."""

__version__ = "0.1.0"
