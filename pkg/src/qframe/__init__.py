"""Rational string states, Cauchy operators and gauge frames."""

__version__ = "0.1.0"
