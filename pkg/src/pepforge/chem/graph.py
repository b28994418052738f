"""Molecular graph types and the valence model.

Atoms store chirality relative to a *reference neighbour order*: the
hydrogen / lone-pair slot first (encoded as ``-1``), then heavy neighbours
in ascending atom index. Everything that renumbers atoms goes through
:meth:`MolGraph.renumbered` so tags stay consistent.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from functools import cached_property
from typing import Iterable, Sequence

SUPPORTED_ELEMENTS = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "H"})
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_CAPABLE = frozenset({"B", "C", "N", "O", "P", "S"})
HALOGENS = frozenset({"F", "Cl", "Br", "I"})

ATOMIC_NUMBER = {"H": 1, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9, "P": 15, "S": 16, "Cl": 17, "Br": 35, "I": 53}
_VALENCE_ELECTRONS = {"B": 3, "C": 4, "N": 5, "O": 6, "F": 7, "P": 5, "S": 6, "Cl": 7, "Br": 7, "I": 7}
_HYPERVALENT = frozenset({"P", "S"})

H_SLOT = -1


class Chirality(str, Enum):
    NONE = "none"
    CLOCKWISE = "clockwise"  # '@@'
    COUNTERCLOCKWISE = "counterclockwise"  # '@'

    def flipped(self) -> "Chirality":
        if self is Chirality.CLOCKWISE:
            return Chirality.COUNTERCLOCKWISE
        if self is Chirality.COUNTERCLOCKWISE:
            return Chirality.CLOCKWISE
        return self


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> int:
        # aromatic bonds count as 1; the pi contribution is handled per atom
        return 1 if self is BondOrder.AROMATIC else int(self)


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    explicit_h: int | None = None
    chirality: Chirality = Chirality.NONE
    aromatic: bool = False
    isotope: int | None = None

    def __post_init__(self):
        if self.element not in SUPPORTED_ELEMENTS:
            raise ValueError(f"unsupported element {self.element!r}")
        if not -4 <= self.charge <= 4:
            raise ValueError(f"charge {self.charge} outside [-4, 4]")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise ValueError("explicit_h must be non-negative")
        if self.isotope is not None and self.isotope <= 0:
            raise ValueError("isotope must be positive")
        if self.aromatic and self.element not in AROMATIC_CAPABLE:
            raise ValueError(f"element {self.element} cannot be aromatic")

    @property
    def bracketed(self) -> bool:
        return self.explicit_h is not None


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("bond endpoints must be distinct")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


def allowed_valences(element: str, charge: int = 0) -> tuple[int, ...]:
    """Allowed total valences (bond orders + hydrogens) for an element/charge.

    Charged atoms take the valences of their isoelectronic neutral partner
    (N+ behaves like C, O- like F, and so on).
    """
    if element == "H":
        return (1,) if charge == 0 else (0,)
    eff = _VALENCE_ELECTRONS[element] - charge
    if eff < 0 or eff > 8:
        return ()
    if eff <= 4:
        return (eff,)
    base = 8 - eff
    if element in _HYPERVALENT:
        return tuple(range(base, eff + 1, 2))
    return (base,)


@dataclass(frozen=True)
class AtomProblem:
    index: int
    element: str
    used: int
    allowed: tuple[int, ...]

    def __str__(self) -> str:
        return f"atom {self.index} ({self.element}): valence {self.used} exceeds allowed {self.allowed}"


@dataclass(frozen=True)
class ValenceReport:
    valid: bool
    problems: tuple[AtomProblem, ...] = ()
    implicit_h: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.valid


@dataclass(frozen=True)
class MolGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise ValueError(f"bond {bond.a}-{bond.b} references a missing atom")
            key = (bond.a, bond.b)
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {bond.a} and {bond.b}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.atoms)

    # -- adjacency -----------------------------------------------------------

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, BondOrder], ...], ...]:
        adj: list[list[tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append((bond.b, bond.order))
            adj[bond.b].append((bond.a, bond.order))
        return tuple(tuple(sorted(row)) for row in adj)

    @cached_property
    def _bond_index(self) -> dict[tuple[int, int], int]:
        return {(b.a, b.b): k for k, b in enumerate(self.bonds)}

    def neighbors(self, i: int) -> list[int]:
        return [j for j, _ in self.adjacency[i]]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def bond_between(self, i: int, j: int) -> Bond | None:
        k = self._bond_index.get((min(i, j), max(i, j)))
        return None if k is None else self.bonds[k]

    def bond_id(self, i: int, j: int) -> int:
        return self._bond_index[(min(i, j), max(i, j))]

    def bond_order_sum(self, i: int) -> int:
        return sum(order.valence for _, order in self.adjacency[i])

    # -- hydrogens -----------------------------------------------------------

    def _default_h(self, i: int) -> int:
        atom = self.atoms[i]
        used = self.bond_order_sum(i)
        valences = allowed_valences(atom.element, atom.charge)
        if not valences:
            return 0
        if atom.aromatic:
            return max(0, valences[0] - used - 1)
        for v in valences:
            if v >= used:
                return v - used
        return 0

    @cached_property
    def hydrogen_counts(self) -> tuple[int, ...]:
        return tuple(
            atom.explicit_h if atom.explicit_h is not None else self._default_h(i)
            for i, atom in enumerate(self.atoms)
        )

    def implicit_h(self, i: int) -> int:
        """Hydrogens the valence model would assign to an unbracketed atom."""
        return self._default_h(i)

    def hydrogen_count(self, i: int) -> int:
        return self.hydrogen_counts[i]

    # -- rings and components ------------------------------------------------

    @cached_property
    def ring_bonds(self) -> frozenset[int]:
        """Indices of bonds lying on at least one cycle (non-bridges)."""
        n = len(self.atoms)
        disc = [-1] * n
        low = [0] * n
        bridges: set[int] = set()
        timer = 0
        for root in range(n):
            if disc[root] != -1:
                continue
            disc[root] = low[root] = timer
            timer += 1
            stack = [(root, -1, iter(self.adjacency[root]))]
            while stack:
                v, parent_bond, it = stack[-1]
                advanced = False
                for w, _ in it:
                    bid = self.bond_id(v, w)
                    if bid == parent_bond:
                        continue
                    if disc[w] == -1:
                        disc[w] = low[w] = timer
                        timer += 1
                        stack.append((w, bid, iter(self.adjacency[w])))
                        advanced = True
                        break
                    low[v] = min(low[v], disc[w])
                if advanced:
                    continue
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        bridges.add(parent_bond)
        return frozenset(k for k in range(len(self.bonds)) if k not in bridges)

    @cached_property
    def ring_membership(self) -> tuple[bool, ...]:
        flags = [False] * len(self.atoms)
        for k in self.ring_bonds:
            flags[self.bonds[k].a] = True
            flags[self.bonds[k].b] = True
        return tuple(flags)

    @cached_property
    def components(self) -> tuple[tuple[int, ...], ...]:
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            comp, stack = [], [start]
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self.neighbors(v):
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            out.append(tuple(sorted(comp)))
        return tuple(out)

    @property
    def ring_count(self) -> int:
        return len(self.bonds) - len(self.atoms) + len(self.components)

    # -- bookkeeping ---------------------------------------------------------

    @property
    def net_charge(self) -> int:
        return sum(a.charge for a in self.atoms)

    @property
    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.element != "H")

    def formula(self) -> Counter:
        counts: Counter = Counter()
        for i, atom in enumerate(self.atoms):
            counts[atom.element] += 1
            counts["H"] += self.hydrogen_count(i)
        return counts

    # -- stereo --------------------------------------------------------------

    def stereo_reference(self, i: int) -> tuple[int, ...]:
        """Reference neighbour order that ``atoms[i].chirality`` refers to."""
        nbrs = tuple(self.neighbors(i))
        if self.hydrogen_count(i) >= 1 or len(nbrs) == 3:
            return (H_SLOT,) + nbrs
        return nbrs

    def is_tetrahedral_candidate(self, i: int) -> bool:
        return len(self.stereo_reference(i)) == 4 and self.hydrogen_count(i) <= 1

    def renumbered(self, order: Sequence[int]) -> "MolGraph":
        """Return a copy with atom ``order[k]`` moved to position ``k``."""
        if sorted(order) != list(range(len(self.atoms))):
            raise ValueError("order must be a permutation of atom indices")
        new_of = {old: new for new, old in enumerate(order)}
        atoms = []
        for old in order:
            atom = self.atoms[old]
            if atom.chirality is not Chirality.NONE:
                ref = self.stereo_reference(old)
                mapped = [H_SLOT if x == H_SLOT else new_of[x] for x in ref]
                atom = replace(atom, chirality=chirality_for_order(atom.chirality, mapped))
            atoms.append(atom)
        bonds = [Bond(new_of[b.a], new_of[b.b], b.order) for b in self.bonds]
        return MolGraph(tuple(atoms), tuple(bonds))

    def without_stereo(self, indices: Iterable[int] | None = None) -> "MolGraph":
        drop = set(range(len(self.atoms)) if indices is None else indices)
        if not any(self.atoms[i].chirality is not Chirality.NONE for i in drop):
            return self
        atoms = tuple(
            replace(a, chirality=Chirality.NONE) if i in drop else a for i, a in enumerate(self.atoms)
        )
        return MolGraph(atoms, self.bonds)


def permutation_parity(seq: Sequence[int], ref: Sequence[int]) -> int:
    """0 if ``seq`` is an even permutation of ``ref``, 1 if odd."""
    pos = {v: k for k, v in enumerate(ref)}
    perm = [pos[v] for v in seq]
    inversions = 0
    for x in range(len(perm)):
        for y in range(x + 1, len(perm)):
            if perm[x] > perm[y]:
                inversions += 1
    return inversions & 1


def chirality_for_order(tag: Chirality, order: Sequence[int]) -> Chirality:
    """Re-express ``tag`` (given in the listed ``order``) against the sorted order."""
    if permutation_parity(order, sorted(order)):
        return tag.flipped()
    return tag


def tag_in_order(tag: Chirality, reference: Sequence[int], order: Sequence[int]) -> Chirality:
    """Tag seen from ``order`` when ``tag`` is stated relative to ``reference``."""
    if permutation_parity(order, reference):
        return tag.flipped()
    return tag


def validate_valence(mol: MolGraph) -> ValenceReport:
    problems = []
    for i, atom in enumerate(mol.atoms):
        used = mol.bond_order_sum(i) + mol.hydrogen_count(i)
        allowed = allowed_valences(atom.element, atom.charge)
        if not allowed or used > max(allowed):
            problems.append(AtomProblem(i, atom.element, used, allowed))
    return ValenceReport(not problems, tuple(problems), mol.hydrogen_counts)
