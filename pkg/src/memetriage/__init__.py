"""Interpretable meme triage: engineered features, two small classifiers,
per-prediction attribution, and a human review queue."""

__version__ = "0.1.0"
