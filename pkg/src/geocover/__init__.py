"""Approximation schemes for weighted geometric maximum coverage."""
