"""Filter design and simulation for zero-padded UF-OFDM links."""

__version__ = "0.1.0"
