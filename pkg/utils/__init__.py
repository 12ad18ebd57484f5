"""Configuration, logging, file output and response helpers for the QD analysis service."""
