"""Head-to-tail cyclic assembly, peptides, point mutation and augmentation."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING, Sequence

from ..chem import Atom, Bond, BondOrder, Chirality, MolGraph, canonical_smiles, validate_valence
from .monomers import AttachmentError, Monomer, MonomerVocabulary, PeptideError

if TYPE_CHECKING:
    from ..properties import PropertyTriple


class AssemblyError(PeptideError):
    pass


class Topology(str, Enum):
    HEAD_TO_TAIL_CYCLIC = "head_to_tail_cyclic"


def assemble_cyclic(monomers: Sequence[Monomer]) -> MolGraph:
    """Condense monomers head-to-tail into one macrocycle.

    For each consecutive pair (i, i+1 mod n) the hydroxyl oxygen of monomer
    i's carboxyl is removed and its carbonyl carbon is bonded to monomer
    i+1's amine nitrogen, which gives up one hydrogen.
    """
    n = len(monomers)
    if n < 2:
        raise AssemblyError("a cyclic peptide needs at least two monomers")
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    n_atoms: list[int] = []
    c_atoms: list[int] = []
    for k, mono in enumerate(monomers):
        mol = mono.graph
        try:
            leaving = mono.leaving_oxygen
        except AttachmentError as exc:
            raise AssemblyError(str(exc)) from exc
        if mol.hydrogen_count(mono.n_attach) < 1:
            raise AssemblyError(f"monomer {mono.id}: amine nitrogen has no hydrogen to give up")
        offset = len(atoms)
        new_index = {}
        for old, atom in enumerate(mol.atoms):
            if old == leaving:
                continue
            if old in (mono.n_attach, mono.c_attach) and atom.chirality is not Chirality.NONE:
                # attachment atoms are never backbone stereocentres
                atom = replace(atom, chirality=Chirality.NONE)
            if old == mono.n_attach and atom.explicit_h is not None:
                atom = replace(atom, explicit_h=atom.explicit_h - 1)
            new_index[old] = offset + len(new_index)
            atoms.append(atom)
        for bond in mol.bonds:
            if leaving in (bond.a, bond.b):
                continue
            bonds.append(Bond(new_index[bond.a], new_index[bond.b], bond.order))
        n_atoms.append(new_index[mono.n_attach])
        c_atoms.append(new_index[mono.c_attach])
    for k in range(n):
        bonds.append(Bond(c_atoms[k], n_atoms[(k + 1) % n], BondOrder.SINGLE))
    try:
        graph = MolGraph(tuple(atoms), tuple(bonds))
    except ValueError as exc:
        raise AssemblyError(str(exc)) from exc
    report = validate_valence(graph)
    if not report:
        raise AssemblyError(f"assembled peptide fails valence: {report.problems[0]}")
    return graph


@lru_cache(maxsize=65536)
def _assemble_cached(monomers: tuple[Monomer, ...]) -> tuple[MolGraph, str]:
    graph = assemble_cyclic(monomers)
    return graph, canonical_smiles(graph)


@dataclass(frozen=True)
class Peptide:
    monomers: tuple[Monomer, ...]
    assembled: MolGraph
    canonical: str
    topology: Topology = Topology.HEAD_TO_TAIL_CYCLIC

    @classmethod
    def from_monomers(cls, monomers: Sequence[Monomer]) -> "Peptide":
        monomers = tuple(monomers)
        graph, canonical = _assemble_cached(monomers)
        return cls(monomers, graph, canonical)

    @property
    def monomer_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.monomers)

    def __len__(self) -> int:
        return len(self.monomers)

    @property
    def helm(self) -> str:
        from .helm import to_helm

        return to_helm(self)

    def to_record(self) -> dict:
        return {"helm": self.helm, "canonical_smiles": self.canonical, "monomer_ids": list(self.monomer_ids)}


@dataclass(frozen=True)
class PeptidePair:
    original: Peptide
    mutated: Peptide
    position: int
    leaving: Monomer
    incoming: Monomer
    original_props: "PropertyTriple | None" = None
    mutated_props: "PropertyTriple | None" = None

    def __post_init__(self):
        a, b = self.original.monomer_ids, self.mutated.monomer_ids
        if len(a) != len(b):
            raise PeptideError("pair peptides differ in length")
        diff = [k for k in range(len(a)) if a[k] != b[k]]
        expected = [] if self.leaving == self.incoming else [self.position - 1]
        if diff != expected:
            raise PeptideError(f"pair must differ exactly at position {self.position}, differs at {diff}")
        if a[self.position - 1] != self.leaving.id or b[self.position - 1] != self.incoming.id:
            raise PeptideError("leaving/incoming monomers do not match the pair")

    def with_props(self, original: "PropertyTriple", mutated: "PropertyTriple") -> "PeptidePair":
        return replace(self, original_props=original, mutated_props=mutated)


def mutate(peptide: Peptide, position: int, incoming: Monomer) -> PeptidePair:
    """Swap the monomer at 1-based ``position`` for ``incoming``.

    An identity swap is allowed and yields the same molecule; augmentation
    filters those out.
    """
    n = len(peptide)
    if not 1 <= position <= n:
        raise PeptideError(f"position {position} outside 1..{n}")
    leaving = peptide.monomers[position - 1]
    monomers = list(peptide.monomers)
    monomers[position - 1] = incoming
    mutated = peptide if incoming == leaving else Peptide.from_monomers(monomers)
    return PeptidePair(peptide, mutated, position, leaving, incoming)


def eligible_positions(peptide: Peptide) -> range:
    # position 1 is the fixed anchor of the ring
    return range(2, len(peptide) + 1)


def augment(
    seed: Peptide,
    vocab: MonomerVocabulary,
    k: int,
    rng_seed: int,
    retry_cap: int = 10,
) -> list[PeptidePair]:
    """Draw ``k`` random point mutations of ``seed``.

    Positions come uniformly from 2..n and incoming monomers uniformly from
    the vocabulary. Identity draws are discarded, failed assemblies are
    re-drawn up to ``retry_cap`` times, and mutants are deduplicated by
    canonical SMILES (first occurrence wins).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    positions = list(eligible_positions(seed))
    if not positions:
        return []
    ids = vocab.ids()
    rng = random.Random(rng_seed)
    pairs: list[PeptidePair] = []
    seen = {seed.canonical}
    for _ in range(k):
        for _attempt in range(retry_cap + 1):
            position = rng.choice(positions)
            incoming = vocab[rng.choice(ids)]
            if incoming.id == seed.monomer_ids[position - 1]:
                pair = None
                break
            try:
                pair = mutate(seed, position, incoming)
            except PeptideError:
                continue
            break
        else:
            pair = None
        if pair is None or pair.mutated.canonical in seen:
            continue
        seen.add(pair.mutated.canonical)
        pairs.append(pair)
    return pairs
