"""Decision procedures for admissibility and unification in cluster-extensible modal logics."""
__version__ = "0.1.0"
