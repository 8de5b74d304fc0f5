"""Freezing-of-gait event detection from wearable accelerometer series."""

__version__ = "1.0.0"
