"""Random polynomials, the solutions of ``p(z) = p(0)``, and their limit laws."""

__version__ = "0.1.0"
