"""Experiment harness: protocols, datasets, reports, figures, and the CLI."""
