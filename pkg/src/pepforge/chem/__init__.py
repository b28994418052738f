"""Chemistry substrate: SMILES, molecular graphs, valence, canonical forms, fingerprints."""

from .canon import canonical_ranks, canonical_smiles, canonicalize, strip_invalid_stereo
from .fingerprint import Fingerprint, morgan_fingerprint, tanimoto
from .graph import (
    Atom,
    AtomProblem,
    Bond,
    BondOrder,
    Chirality,
    MolGraph,
    ValenceReport,
    allowed_valences,
    validate_valence,
)
from .smiles import SmilesError, parse_smiles, write_smiles

__all__ = [
    "Atom",
    "AtomProblem",
    "Bond",
    "BondOrder",
    "Chirality",
    "Fingerprint",
    "MolGraph",
    "SmilesError",
    "ValenceReport",
    "allowed_valences",
    "canonical_ranks",
    "canonical_smiles",
    "canonicalize",
    "morgan_fingerprint",
    "parse_smiles",
    "strip_invalid_stereo",
    "tanimoto",
    "validate_valence",
    "write_smiles",
]
