"""Reproducible experiments: benchmark tables, convergence rates and diagnostics."""
