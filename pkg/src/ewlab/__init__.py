"""ewlab: numerics for equivariant constrained Willmore tori in S^3.

The toolkit covers the Euler-Lagrange flow of the conformal Hopf
differential, polynomial Killing fields and their spectral curves, the
Dirac-type transfer-matrix discriminant, and profile-curve/torus
reconstruction with Willmore-energy checks.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
