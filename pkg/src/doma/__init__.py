"""System-level simulator for delta-orthogonal multiple access (D-OMA)."""

__version__ = "0.1.0"
