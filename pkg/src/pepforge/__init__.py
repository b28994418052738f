"""pepforge: data construction, reward scoring and evaluation for cyclic peptide optimisation."""

__version__ = "0.1.0"
