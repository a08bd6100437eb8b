"""Classical simulation of an inner-product quantum classifier with noise studies."""

__version__ = "0.1.0"
