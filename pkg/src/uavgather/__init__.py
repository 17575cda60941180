"""Joint sensor clustering and multi-UAV tour planning by mixed-integer programming."""

__version__ = "0.1.0"
