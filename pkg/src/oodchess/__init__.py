"""Variant-aware chess evaluation harness.

Rules kernel for Standard/Chess960/Horde, text and index codecs, OOD
board generators, a UCI engine bridge, a pluggable policy gateway,
move-quality metrics, a tournament arena with relative Elo, and
training-dynamics probes.
"""

__version__ = "0.1.0"
