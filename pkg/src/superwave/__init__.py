"""Construction and analysis of superoscillatory and supergrowing fields."""

__version__ = "0.1.0"
