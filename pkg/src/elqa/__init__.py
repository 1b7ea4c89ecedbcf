"""Ellipsis and coreference resolution as extractive question answering.

Subpackages: converters (per-source corpus conversion), model (trainable
span resolver).  Modules: core (data model), corpus_io (unified instance
format), sampling (joint mixtures), metrics (token F1 and cluster scores),
analysis (error breakdowns), predictions (prediction-file contract),
cli (command-line entry point).
"""

__version__ = "0.1.0"
