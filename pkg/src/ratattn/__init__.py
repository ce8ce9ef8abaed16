"""ratattn: CNN document classifiers with unsupervised and
rationale-supervised attention, per-sentence explanation extraction, and a
local paired-judgment collection harness."""

__version__ = "0.1.0"
