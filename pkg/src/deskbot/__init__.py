"""deskbot: a deterministic desk-scale embodied agent sandbox."""

__version__ = "0.1.0"
