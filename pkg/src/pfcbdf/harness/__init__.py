"""Experiments, reproducible random fields, file formats and verification suites."""
