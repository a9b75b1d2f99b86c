"""Compound matrices, matrix measures and sampled k-contraction certificates.

The toolkit checks 1- and 2-contraction of vector fields on box domains,
splits fields into cascades along invariant subspaces, and simulates the
result to confirm convergence or the absence of periodic orbits.
"""
__version__ = "0.1.0"

from .compound import add_compound, lex_subsets, mult_compound, transform_add_compound
from .measures import measure, measure_of_second_compound
from .model import BoxDomain, SerialPair, VectorFieldModel, compose_serial, fd_jacobian
from .certificate import Certificate, SamplingGrid
from .decompose import (
    SubspacePair,
    check_reducibility,
    feedback_form_reduce,
    lti_invariant_pair,
    pair_from_first_integral,
    serial_reduce,
    validate_pair,
)
from .certify import (
    certify_convergence,
    certify_k_contraction,
    certify_nob,
    certify_subspace_1contraction,
    certify_subspace_2contraction,
)
from .simulate import cics_probe, detect_equilibrium, detect_period, integrate

__all__ = [
    "add_compound", "lex_subsets", "mult_compound", "transform_add_compound",
    "measure", "measure_of_second_compound",
    "BoxDomain", "SerialPair", "VectorFieldModel", "compose_serial", "fd_jacobian",
    "Certificate", "SamplingGrid",
    "SubspacePair", "check_reducibility", "feedback_form_reduce", "lti_invariant_pair",
    "pair_from_first_integral", "serial_reduce", "validate_pair",
    "certify_convergence", "certify_k_contraction", "certify_nob",
    "certify_subspace_1contraction", "certify_subspace_2contraction",
    "cics_probe", "detect_equilibrium", "detect_period", "integrate",
]
