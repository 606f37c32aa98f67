"""ODIA downlink simulator - opportunistic interference alignment for multi-cell MIMO downlinks."""

__version__ = "1.0.0"
