"""Random walks and reflected Brownian motion on growing domains."""

__version__ = "0.1.0"
