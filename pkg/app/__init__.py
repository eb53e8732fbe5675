"""Joint approximation of several nonparametric regression samples."""

__version__ = "0.1.0"
