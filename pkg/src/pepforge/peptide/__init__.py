"""Cyclic peptides built from a monomer vocabulary."""

from .assembly import (
    AssemblyError,
    Peptide,
    PeptidePair,
    Topology,
    assemble_cyclic,
    augment,
    eligible_positions,
    mutate,
)
from .helm import HelmError, TopologyError, UnknownMonomerError, parse_helm, to_helm
from .monomers import (
    AttachmentError,
    Monomer,
    MonomerVocabulary,
    PeptideError,
    detect_attachments,
    load_vocabulary,
    read_vocabulary,
    write_vocabulary,
)

__all__ = [
    "AssemblyError",
    "AttachmentError",
    "HelmError",
    "Monomer",
    "MonomerVocabulary",
    "Peptide",
    "PeptideError",
    "PeptidePair",
    "Topology",
    "TopologyError",
    "UnknownMonomerError",
    "assemble_cyclic",
    "augment",
    "detect_attachments",
    "eligible_positions",
    "load_vocabulary",
    "mutate",
    "parse_helm",
    "read_vocabulary",
    "to_helm",
    "write_vocabulary",
]
