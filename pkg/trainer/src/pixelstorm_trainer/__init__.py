"""Victim trainer: small torch convnets exported to the pixelstorm JSON format."""

__version__ = "0.1.0"
