"""Gaussian random fields on compact metric graphs: Markov structure, MTP2 and faithfulness checks."""

__version__ = "0.1.0"
