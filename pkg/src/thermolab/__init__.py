"""Numerical thermodynamic formalism for non-uniformly expanding maps.

Modules: ``maps`` (map families and certificates), ``hyperbolic``
(hyperbolic times and pre-balls), ``inducing`` (inducing schemes and
induced potentials), ``shift`` (countable Markov shifts, transfer operators,
Gurevich pressure), ``thermo`` (pressure, normalization, Abramov projection,
equilibrium states) and ``cli``.
"""

__version__ = "0.1.0"
