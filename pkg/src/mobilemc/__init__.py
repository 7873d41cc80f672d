"""Channel modeling toolkit for diffusive molecular communication links
whose transmitter and receiver undergo Brownian motion.

The package pairs an analytical engine (time-variant impulse response,
distance evolution laws, expected error probability) with an independent
particle-based simulator used to cross-validate it, and a batch CLI that
emits figure-ready CSV artifacts.
"""

__version__ = "0.1.0"
