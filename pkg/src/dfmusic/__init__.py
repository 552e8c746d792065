"""MUSIC imaging of small 2D inclusions from full, diagonal-free and bistatic MSR matrices."""

__version__ = "0.1.0"
