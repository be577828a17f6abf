"""Continuous valence/arousal prediction from multi-channel physiology."""

__version__ = "0.1.0"
