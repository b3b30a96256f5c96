"""CNN feature exporter for the image annotation pipeline."""

__version__ = "0.1.0"
