"""Detour-complex operators on finite cochain complexes.

``opfactor``     factored operator polynomials and spectral projectors
``hodge``        chain complexes with inner products and their generators
``detour``       Q, G and L at an Einstein scale, with decomposition checks
``tractor_sym``  exact slot calculus for the iterated tractor operator
``cli``          batch runner and report writer
"""

from ._linalg import DEFAULT_TOL, Tolerances
from .detour import (DecompositionReport, PairingReport, apply_G, apply_L, apply_LL, apply_Q,
                     b_space, cohomology_HL, harmonics_G, null_G_decomposition,
                     null_L_decomposition, null_LL_decomposition, null_Q, pairing_suite,
                     positive_curvature, ricci_flat_branch, seeded_complex, sequence_checks)
from .hodge import (ChainComplex, betti, build_prescribed, build_prescribed_exact, build_random,
                    build_torus, eigenspace, harmonic_basis, hodge_decompose, load, save)
from .opfactor import DetourContext, P_poly, apply_P, check_distinct, lambda_scalars, projectors
from .tractor_sym import OperatorPoly, OperatorWord, extract_operator_formulas, verify_formula

__version__ = "0.1.0"
