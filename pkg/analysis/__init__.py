"""Analytic quasi-degradation pipeline for two-user NOMA over MISO Rician channels."""
