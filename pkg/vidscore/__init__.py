# vidscore/__init__.py
"""Evaluation, reward and curation harness for a three-dimension video quality judge."""

__version__ = "0.1.0"
