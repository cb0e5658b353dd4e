"""Trainable, constrainable generator of indoor furniture layouts."""

__version__ = "0.1.0"
