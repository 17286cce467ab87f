"""Voice-sample collection: protocol core, server, client SDK, simulator."""

__version__ = "0.1.0"
