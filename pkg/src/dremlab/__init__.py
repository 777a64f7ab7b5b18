"""dremlab - parameter estimation lab for regularized DREM."""

__version__ = "0.1.0"
