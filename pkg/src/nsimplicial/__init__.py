"""N-simplicial attention: higher-order attention over token tuples, with masks,
routing, determinant rotary embeddings and numerical checks of its collapse
and Lipschitz behaviour."""

__version__ = "0.1.0"
