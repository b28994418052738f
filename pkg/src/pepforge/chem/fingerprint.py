"""Circular (Morgan/ECFP-style) fingerprints and Tanimoto similarity."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import ATOMIC_NUMBER, H_SLOT, Chirality, MolGraph, permutation_parity

_MASK = (1 << 64) - 1
HASH_SEED = 0x5EED_C0DE_2024_A11A


def splitmix64(x: int) -> int:
    """SplitMix64 finaliser (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def hash_ints(values) -> int:
    h = HASH_SEED
    for v in values:
        h = splitmix64(h ^ (v & _MASK))
    return h


@dataclass(frozen=True)
class Fingerprint:
    bits: frozenset[int]
    n_bits: int = 2048
    radius: int = 2

    def __post_init__(self):
        if self.n_bits <= 0:
            raise ValueError("n_bits must be positive")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        if any(b < 0 or b >= self.n_bits for b in self.bits):
            raise ValueError("bit index out of range")

    def __len__(self) -> int:
        return len(self.bits)


def _chiral_parity(mol: MolGraph, i: int, ids: list[int]) -> int:
    atom = mol.atoms[i]
    if atom.chirality is Chirality.NONE or not mol.is_tetrahedral_candidate(i):
        return 0
    ref = mol.stereo_reference(i)
    keys = [-1 if x == H_SLOT else ids[x] for x in ref]
    if len(set(keys)) != len(keys):
        return 0
    ordered = [x for _, x in sorted(zip(keys, ref))]
    tag = atom.chirality.flipped() if permutation_parity(ordered, ref) else atom.chirality
    return 1 if tag is Chirality.COUNTERCLOCKWISE else 2


def atom_identifiers(mol: MolGraph, radius: int = 2) -> list[set[int]]:
    """Per-radius sets of environment identifiers (index = radius)."""
    ring = mol.ring_membership
    n = len(mol.atoms)
    ids = [
        hash_ints(
            (
                ATOMIC_NUMBER[a.element],
                a.charge,
                mol.degree(i),
                mol.hydrogen_count(i),
                int(a.aromatic),
                int(ring[i]),
            )
        )
        for i, a in enumerate(mol.atoms)
    ]
    per_radius = [set(ids)]
    envs = [frozenset() for _ in range(n)]
    adj = mol.adjacency
    for r in range(1, radius + 1):
        new_ids, new_envs, layer = [], [], set()
        for i in range(n):
            nbr = sorted((int(order), ids[j]) for j, order in adj[i])
            flat = [r, ids[i], _chiral_parity(mol, i, ids)]
            for order, nid in nbr:
                flat.extend((order, nid))
            new_ids.append(hash_ints(flat))
            env = set(envs[i])
            for j, _ in adj[i]:
                env.add(mol.bond_id(i, j))
                env |= envs[j]
            env = frozenset(env)
            new_envs.append(env)
            # an environment that stopped growing adds nothing new
            if env != envs[i]:
                layer.add(new_ids[-1])
        ids, envs = new_ids, new_envs
        per_radius.append(layer)
    return per_radius


def morgan_fingerprint(mol: MolGraph, radius: int = 2, n_bits: int = 2048) -> Fingerprint:
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if n_bits < 64:
        raise ValueError("n_bits must be at least 64")
    bits = set()
    for layer in atom_identifiers(mol, radius):
        bits.update(h % n_bits for h in layer)
    return Fingerprint(frozenset(bits), n_bits, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a & b| / |a | b|, with two empty fingerprints counting as identical."""
    if a.n_bits != b.n_bits:
        raise ValueError(f"fingerprint sizes differ: {a.n_bits} vs {b.n_bits}")
    union = len(a.bits | b.bits)
    if union == 0:
        return 1.0
    return len(a.bits & b.bits) / union
