"""laxlab: integrable-lattice and random-matrix numerics.

Tau functions as moment determinants and Pfaffians, Toda/Pfaff/two-Toda
Lax flows, Fredholm-determinant gap probabilities, Painleve-type residual
checkers, Virasoro constraints, and spectral-curve-conserving Lax flows.
"""

__version__ = "0.1.0"
