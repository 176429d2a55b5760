"""Polynomial-vector regression toolkit.

Fixed polynomial feature maps (pairwise products and squares of a normalized
input vector) feeding a one-hidden-layer sigmoid network trained by online
backpropagation, with a CLI for training, prediction, variant comparison,
and dataset statistics on the bundled diesel-engine data.
"""

__version__ = "0.1.0"
