"""Desk-scale simulator of a DIII superconducting chain made of hard-core bosons."""

__version__ = "0.1.0"

from .chain import (  # noqa: F401
    ChainSpec,
    FermionTerm,
    FermionTermList,
    build_diii_terms,
    build_spin_terms,
    linear_position,
    position_site,
    spin_basis_transform,
)
