"""Route modules for the QD analysis API."""
