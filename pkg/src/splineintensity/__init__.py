"""Bayesian estimation of periodic Poisson intensities with free-knot B-spline priors."""

__version__ = "0.1.0"
