"""Numerical laboratory for empirical processes with Hilbert-space-valued
functions: covering numbers and entropy bounds for smooth function classes,
metric-dimension estimation, vector-valued concentration inequalities,
symmetrization and chaining, fixed-design regression rates, and Rademacher
complexities including the basis-dependence counterexample."""

__version__ = "0.1.0"
