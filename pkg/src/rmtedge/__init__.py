"""Heavy-tailed sample covariance matrices: left-edge universality toolkit."""

__version__ = "0.1.0"
