"""Numerical toolkit for wave equations on stationary spacetimes bounded by
non-degenerate Killing horizons.

Builds the one-dimensional stationary operator family for Schwarzschild-de
Sitter type models on a horizon-penetrating slice, computes resonances
(quasinormal modes) and weighted resolvent norms, constructs and certifies
Carleman weights near the horizons, and checks logarithmic energy decay by
semigroup evolution.
"""

from .model import ModelSpec, SliceGeometry, PencilCoefficients
from .model import build_model, build_slice, normalize, reduce_pencil
from .symbol import SymbolPoint, eval_G, eval_G0, eval_YZ, poisson_bracket
from .spectra import (OperatorPencil, discretize, resonances, resolvent_norm,
                      mode_mismatch, polish_resonance)
from .carleman import (CarlemanWeight, PseudoconvexCertificate, build_interior,
                       bernoulli_k, extend_boundary, certify_hypoellipticity,
                       certify_pseudoconvexity, verify_multiplier_identity)
from .decay import assemble_generator, evolve, fit_log_decay

__all__ = [
    "ModelSpec", "SliceGeometry", "PencilCoefficients",
    "build_model", "build_slice", "normalize", "reduce_pencil",
    "SymbolPoint", "eval_G", "eval_G0", "eval_YZ", "poisson_bracket",
    "OperatorPencil", "discretize", "resonances", "resolvent_norm",
    "mode_mismatch", "polish_resonance",
    "CarlemanWeight", "PseudoconvexCertificate", "build_interior",
    "bernoulli_k", "extend_boundary", "certify_hypoellipticity",
    "certify_pseudoconvexity", "verify_multiplier_identity",
    "assemble_generator", "evolve", "fit_log_decay",
]

__version__ = "0.1.0"
