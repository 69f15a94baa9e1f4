"""Schema-driven particle dynamics over pluggable domain partitionings."""

__version__ = "0.1.0"
