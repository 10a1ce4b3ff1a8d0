"""Calibration of misaligned face annotations with high confidence detections."""

__version__ = "1.0"
