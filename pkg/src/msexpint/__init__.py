"""Exponential-integrator multiscale solver for semilinear parabolic equations with high-contrast coefficients."""

__version__ = "0.1.0"
