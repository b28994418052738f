"""Monomers, attachment detection and the monomer vocabulary."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from ..chem import BondOrder, MolGraph, canonical_smiles, parse_smiles, validate_valence


class PeptideError(ValueError):
    pass


class AttachmentError(PeptideError):
    pass


def _carboxyl_parts(mol: MolGraph, c: int) -> tuple[int, int] | None:
    """(carbonyl O, hydroxyl O) if atom ``c`` is a free carboxylic-acid carbon."""
    atom = mol.atoms[c]
    if atom.element != "C" or atom.aromatic or atom.charge:
        return None
    carbonyl = hydroxyl = None
    for j, order in mol.adjacency[c]:
        other = mol.atoms[j]
        if other.element != "O" or other.charge or mol.degree(j) != 1:
            continue
        if order is BondOrder.DOUBLE and carbonyl is None:
            carbonyl = j
        elif order is BondOrder.SINGLE and mol.hydrogen_count(j) == 1 and hydroxyl is None:
            hydroxyl = j
    if carbonyl is None or hydroxyl is None:
        return None
    return carbonyl, hydroxyl


def _bfs_distances(mol: MolGraph, start: int) -> list[int]:
    dist = [-1] * len(mol.atoms)
    dist[start] = 0
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in mol.neighbors(v):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def detect_attachments(monomer: str | MolGraph) -> tuple[int, int]:
    """Locate the backbone amine N and carboxyl C of a free amino acid.

    The carboxyl carbon is the last carboxylic-acid carbon in atom order; the
    amine is the nitrogen with at least one H that is closest (in bonds) to
    the carboxyl's alpha carbon, lowest index on ties. Ring nitrogens
    qualify, so proline-like monomers work.

    Returns:
        ``(n_attach, c_attach)`` atom indices.

    Raises:
        AttachmentError: no carboxyl group or no eligible nitrogen.
    """
    mol = parse_smiles(monomer) if isinstance(monomer, str) else monomer
    acids = [i for i in range(len(mol.atoms)) if _carboxyl_parts(mol, i)]
    if not acids:
        raise AttachmentError("no carboxylic acid group found")
    c_attach = acids[-1]
    alpha = next(
        (j for j in mol.neighbors(c_attach) if mol.atoms[j].element == "C"),
        c_attach,
    )
    dist = _bfs_distances(mol, alpha)
    candidates = [
        (dist[i], i)
        for i, a in enumerate(mol.atoms)
        if a.element == "N" and not a.aromatic and a.charge == 0 and mol.hydrogen_count(i) >= 1 and dist[i] >= 0
    ]
    if not candidates:
        raise AttachmentError("no nitrogen with an available hydrogen found")
    return min(candidates)[1], c_attach


@dataclass(frozen=True)
class Monomer:
    id: str
    smiles: str
    n_attach: int
    c_attach: int
    natural: bool = False

    @classmethod
    def from_smiles(cls, id: str, smiles: str, natural: bool = False) -> "Monomer":
        mol = parse_smiles(smiles)
        report = validate_valence(mol)
        if not report:
            raise PeptideError(f"monomer {id}: {report.problems[0]}")
        n_attach, c_attach = detect_attachments(mol)
        return cls(id, smiles, n_attach, c_attach, natural)

    @cached_property
    def graph(self) -> MolGraph:
        return parse_smiles(self.smiles)

    @cached_property
    def canonical(self) -> str:
        return canonical_smiles(self.graph)

    @cached_property
    def leaving_oxygen(self) -> int:
        parts = _carboxyl_parts(self.graph, self.c_attach)
        if parts is None:
            raise AttachmentError(f"monomer {self.id}: atom {self.c_attach} is not a carboxyl carbon")
        return parts[1]


@dataclass(frozen=True)
class MonomerVocabulary:
    entries: dict[str, Monomer]
    _by_canonical: dict[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, str] = {}
        for mid, mono in self.entries.items():
            if mid != mono.id:
                raise PeptideError(f"vocabulary key {mid!r} does not match monomer id {mono.id!r}")
            can = mono.canonical
            if can in index:
                raise PeptideError(f"monomers {index[can]!r} and {mid!r} share canonical SMILES {can}")
            index[can] = mid
        object.__setattr__(self, "_by_canonical", index)

    @classmethod
    def from_monomers(cls, monomers: Iterable[Monomer]) -> "MonomerVocabulary":
        entries: dict[str, Monomer] = {}
        for m in monomers:
            if m.id in entries:
                raise PeptideError(f"duplicate monomer id {m.id!r}")
            entries[m.id] = m
        return cls(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Monomer]:
        return iter(self.entries.values())

    def __contains__(self, mid: str) -> bool:
        return mid in self.entries

    def __getitem__(self, mid: str) -> Monomer:
        return self.entries[mid]

    def ids(self) -> list[str]:
        return sorted(self.entries)

    def by_canonical(self, smiles: str) -> Monomer | None:
        """Look a monomer up by any SMILES rendering of it."""
        mid = self._by_canonical.get(canonical_smiles(parse_smiles(smiles)))
        return None if mid is None else self.entries[mid]


def read_vocabulary(lines: Iterable[str]) -> MonomerVocabulary:
    """Parse ``id<TAB>smiles<TAB>natural_flag`` records. ``#`` starts a comment."""
    monomers = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise PeptideError(f"vocabulary line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
        mid, smiles, flag = (p.strip() for p in parts)
        if flag.lower() not in ("0", "1", "true", "false"):
            raise PeptideError(f"vocabulary line {lineno}: natural flag must be 0/1/true/false")
        try:
            monomers.append(Monomer.from_smiles(mid, smiles, flag.lower() in ("1", "true")))
        except ValueError as exc:
            raise PeptideError(f"vocabulary line {lineno}: {exc}") from exc
    return MonomerVocabulary.from_monomers(monomers)


def load_vocabulary(path: str | Path | None = None) -> MonomerVocabulary:
    """Load a vocabulary TSV; ``None`` loads the bundled one."""
    if path is None:
        text = resources.files("pepforge.data").joinpath("monomers.tsv").read_text()
    else:
        text = Path(path).read_text()
    return read_vocabulary(text.splitlines())


def write_vocabulary(vocab: MonomerVocabulary) -> str:
    return "".join(f"{m.id}\t{m.smiles}\t{int(m.natural)}\n" for m in vocab)
