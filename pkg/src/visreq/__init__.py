"""Toolkit for instantiating and checking human-baselined reliability
requirements for black-box machine-vision classifiers."""

__version__ = "0.1.0"
