"""Canonical atom ranking and canonical SMILES.

Ranks come from iterative neighbourhood refinement of atom invariants. Stereo
parity (relative to neighbour ranks) joins the invariants once it can be
determined, and remaining ties are broken at the smallest atom index.
Refinement cannot separate atoms that are equivalent under colour
refinement but not under a true automorphism; such graphs are vanishingly
rare among peptides and are not handled specially.
"""

from __future__ import annotations

from typing import Sequence

from .graph import ATOMIC_NUMBER, H_SLOT, Chirality, MolGraph, permutation_parity
from .smiles import parse_smiles, write_smiles


def _compress(keys: Sequence) -> list[int]:
    table = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def _atom_invariants(mol: MolGraph) -> list[tuple]:
    ring = mol.ring_membership
    return [
        (
            ATOMIC_NUMBER[a.element],
            a.isotope or 0,
            a.charge,
            mol.hydrogen_count(i),
            int(a.aromatic),
            mol.degree(i),
            int(ring[i]),
        )
        for i, a in enumerate(mol.atoms)
    ]


def _refine(mol: MolGraph, classes: list[int]) -> list[int]:
    adj = mol.adjacency
    count = len(set(classes))
    while True:
        keys = [
            (classes[i], tuple(sorted((int(order), classes[j]) for j, order in adj[i])))
            for i in range(len(classes))
        ]
        new = _compress(keys)
        new_count = max(new) + 1 if new else 0
        if new_count == count:
            return new
        classes, count = new, new_count


def _stereo_code(mol: MolGraph, i: int, classes: list[int]) -> int:
    """0 when undetermined; otherwise 1/2 for the tag seen in rank order."""
    atom = mol.atoms[i]
    if atom.chirality is Chirality.NONE:
        return 0
    ref = mol.stereo_reference(i)
    cls = [-1 if x == H_SLOT else classes[x] for x in ref]
    if len(set(cls)) != len(cls):
        return 0
    by_rank = [x for _, x in sorted(zip(cls, ref))]
    tag = atom.chirality.flipped() if permutation_parity(by_rank, ref) else atom.chirality
    return 1 if tag is Chirality.COUNTERCLOCKWISE else 2


def strip_invalid_stereo(mol: MolGraph) -> MolGraph:
    """Drop chirality from atoms that cannot be tetrahedral stereocentres."""
    base = _refine(mol, _compress(_atom_invariants(mol)))
    drop = []
    for i, atom in enumerate(mol.atoms):
        if atom.chirality is Chirality.NONE:
            continue
        if not mol.is_tetrahedral_candidate(i):
            drop.append(i)
            continue
        cls = [-1 if x == H_SLOT else base[x] for x in mol.stereo_reference(i)]
        if len(set(cls)) != len(cls):
            drop.append(i)
    return mol.without_stereo(drop) if drop else mol


def canonical_ranks(mol: MolGraph) -> list[int]:
    """Return a rank per atom (0..n-1), invariant under input atom order.

    Expects chirality already cleaned by :func:`strip_invalid_stereo`.
    """
    n = len(mol.atoms)
    if n == 0:
        return []
    classes = _refine(mol, _compress(_atom_invariants(mol)))
    has_stereo = any(a.chirality is not Chirality.NONE for a in mol.atoms)
    while True:
        if has_stereo:
            while True:
                codes = [_stereo_code(mol, i, classes) for i in range(n)]
                refined = _refine(mol, _compress(list(zip(classes, codes))))
                if len(set(refined)) == len(set(classes)):
                    break
                classes = refined
        if len(set(classes)) == n:
            return classes
        seen: dict[int, int] = {}
        tied = None
        for i in range(n):
            c = classes[i]
            if c in seen and (tied is None or c < tied):
                tied = c
            seen.setdefault(c, i)
        pick = seen[tied]
        broken = [2 * c + (0 if i == pick else 1) if c == tied else 2 * c + 1 for i, c in enumerate(classes)]
        classes = _refine(mol, _compress(broken))


def canonical_smiles(mol: MolGraph) -> str:
    """Deterministic SMILES independent of the input atom order."""
    cleaned = strip_invalid_stereo(mol)
    return write_smiles(cleaned, canonical_ranks(cleaned))


def canonicalize(smiles: str) -> str:
    return canonical_smiles(parse_smiles(smiles))
