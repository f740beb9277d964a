"""symquiv: exact representation theory over symmetrizable Cartan matrices.

Truncated-polynomial path algebras H(C, D, Omega) and their generalized
preprojective algebras, with locally free modules, reflection functors,
quiver Grassmannian point counting over prime fields, and an independent
cluster-algebra mutation oracle.
"""

__version__ = "0.1.0"
