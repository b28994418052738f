"""SMILES reading and writing for the subset documented in docs/smiles_grammar.md."""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field

from .graph import (
    AROMATIC_CAPABLE,
    H_SLOT,
    ORGANIC_SUBSET,
    Atom,
    Bond,
    BondOrder,
    Chirality,
    MolGraph,
    chirality_for_order,
    tag_in_order,
)


class SmilesError(ValueError):
    """Malformed or unsupported SMILES input.

    ``offset`` is the 0-based byte offset of the offending character.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}
_AROMATIC_SYMBOLS = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}


@dataclass
class _PendingAtom:
    atom: Atom
    offset: int
    has_prev: bool = False
    order: list = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[_PendingAtom] = []
        self.bonds: dict[tuple[int, int], BondOrder] = {}
        self.rings: dict[int, tuple[int, BondOrder | None, int, int]] = {}
        self.stripped_stereo = False

    def error(self, message: str, offset: int | None = None):
        raise SmilesError(message, self.pos if offset is None else offset)

    def parse(self) -> MolGraph:
        text = self.text
        if not text:
            self.error("empty SMILES", 0)
        prev: int | None = None
        pending: tuple[BondOrder, int] | None = None
        branches: list[tuple[int, int]] = []
        while self.pos < len(text):
            ch = text[self.pos]
            start = self.pos
            if ch == "(":
                if prev is None:
                    self.error("branch opened without a preceding atom")
                if pending is not None:
                    self.error("bond symbol before branch")
                branches.append((prev, start))
                self.pos += 1
            elif ch == ")":
                if not branches:
                    self.error("unmatched ')'")
                if pending is not None:
                    self.error("dangling bond symbol before ')'")
                prev, _ = branches.pop()
                self.pos += 1
            elif ch in _BOND_SYMBOLS:
                if pending is not None:
                    self.error("two consecutive bond symbols")
                if prev is None:
                    self.error("bond symbol without a preceding atom")
                if ch in "/\\":
                    self.stripped_stereo = True
                pending = (_BOND_SYMBOLS[ch], start)
                self.pos += 1
            elif ch == ".":
                if pending is not None:
                    self.error("bond symbol before '.'")
                if prev is None:
                    self.error("'.' without a preceding atom")
                prev = None
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.error("ring closure without a preceding atom")
                digit = self._ring_number()
                self._ring(prev, digit, pending[0] if pending else None, start)
                pending = None
            else:
                idx = self._atom()
                if prev is not None:
                    order = pending[0] if pending else None
                    self._bond(prev, idx, order, start)
                    self.atoms[prev].order.append(idx)
                    self.atoms[idx].order.append(prev)
                    self.atoms[idx].has_prev = True
                pending = None
                prev = idx
        if pending is not None:
            self.error("dangling bond symbol at end of input", pending[1])
        if branches:
            self.error("unclosed branch", branches[-1][1])
        if self.rings:
            digit, (_, _, offset, _) = min(self.rings.items(), key=lambda kv: kv[1][2])
            self.error(f"unclosed ring bond {digit}", offset)
        if self.stripped_stereo:
            warnings.warn("E/Z bond stereo ('/' and '\\') is not supported and was stripped", stacklevel=3)
        return self._finish()

    def _ring_number(self) -> int:
        text = self.text
        if text[self.pos] == "%":
            digits = text[self.pos + 1 : self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.error("'%' must be followed by two digits")
            self.pos += 3
            return int(digits)
        self.pos += 1
        return int(text[self.pos - 1])

    def _ring(self, atom: int, digit: int, order: BondOrder | None, offset: int):
        if digit in self.rings:
            other, other_order, _, slot = self.rings.pop(digit)
            if other == atom:
                self.error("ring bond to itself", offset)
            if order is not None and other_order is not None and order is not other_order:
                self.error(f"conflicting bond symbols on ring closure {digit}", offset)
            self._bond(other, atom, order or other_order, offset)
            self.atoms[other].order[slot] = atom
            self.atoms[atom].order.append(other)
        else:
            self.rings[digit] = (atom, order, offset, len(self.atoms[atom].order))
            self.atoms[atom].order.append(None)

    def _bond(self, a: int, b: int, order: BondOrder | None, offset: int):
        key = (min(a, b), max(a, b))
        if key in self.bonds:
            self.error(f"duplicate bond between atoms {a} and {b}", offset)
        if order is None:
            both = self.atoms[a].atom.aromatic and self.atoms[b].atom.aromatic
            order = BondOrder.AROMATIC if both else BondOrder.SINGLE
        self.bonds[key] = order

    def _atom(self) -> int:
        text, start = self.text, self.pos
        ch = text[start]
        if ch == "[":
            atom = self._bracket_atom()
        elif text.startswith(("Cl", "Br"), start):
            atom = Atom(text[start : start + 2])
            self.pos += 2
        elif ch in ORGANIC_SUBSET:
            atom = Atom(ch)
            self.pos += 1
        elif ch in _AROMATIC_SYMBOLS:
            atom = Atom(_AROMATIC_SYMBOLS[ch], aromatic=True)
            self.pos += 1
        elif ch == "*":
            self.error("wildcard atoms are not supported")
        elif ch.isalpha():
            self.error(f"unsupported element {ch!r}")
        else:
            self.error(f"unexpected character {ch!r}")
        self.atoms.append(_PendingAtom(atom, start))
        return len(self.atoms) - 1

    def _bracket_atom(self) -> Atom:
        text, start = self.text, self.pos
        end = text.find("]", start)
        if end < 0:
            self.error("unclosed bracket atom", start)
        body = text[start + 1 : end]
        i = 0

        def at(k: int) -> int:
            return start + 1 + k

        isotope = None
        j = i
        while j < len(body) and body[j].isdigit():
            j += 1
        if j > i:
            isotope = int(body[i:j])
            if isotope == 0:
                self.error("isotope must be positive", at(i))
            i = j
        if i >= len(body):
            self.error("bracket atom without element", at(i))
        aromatic = False
        if body[i : i + 2] in ("Cl", "Br"):
            element, i = body[i : i + 2], i + 2
        elif body[i].isupper():
            element, i = body[i], i + 1
            if i < len(body) and body[i].islower():
                self.error(f"unsupported element {body[i - 1 : i + 1]!r}", at(i - 1))
        elif body[i].islower():
            if body[i : i + 2] in ("se", "as"):
                self.error(f"unsupported element {body[i : i + 2]!r}", at(i))
            if body[i] not in _AROMATIC_SYMBOLS:
                self.error(f"unsupported element {body[i]!r}", at(i))
            element, aromatic, i = _AROMATIC_SYMBOLS[body[i]], True, i + 1
        else:
            self.error(f"unexpected character {body[i]!r} in bracket atom", at(i))
        if element not in ORGANIC_SUBSET and element != "H":
            self.error(f"unsupported element {element!r}", at(i - len(element)))

        chirality = Chirality.NONE
        if body.startswith("@@", i):
            chirality, i = Chirality.CLOCKWISE, i + 2
        elif body.startswith("@", i):
            chirality, i = Chirality.COUNTERCLOCKWISE, i + 1
        if i < len(body) and body[i] in "@" or body.startswith(("TH", "AL", "SP", "TB", "OH"), i):
            self.error("only @ and @@ chirality are supported", at(i))

        hcount = 0
        if i < len(body) and body[i] == "H":
            i += 1
            hcount = 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            if j > i:
                hcount = int(body[i:j])
                i = j

        charge = 0
        if i < len(body) and body[i] in "+-":
            sign = 1 if body[i] == "+" else -1
            sym = body[i]
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            if j > i:
                charge = sign * int(body[i:j])
                i = j
            else:
                charge = sign
                while i < len(body) and body[i] == sym:
                    charge += sign
                    i += 1
        if i < len(body) and body[i] == ":":
            j = i + 1
            while j < len(body) and body[j].isdigit():
                j += 1
            if j == i + 1:
                self.error("atom class needs digits", at(i))
            i = j
        if i != len(body):
            self.error(f"unexpected character {body[i]!r} in bracket atom", at(i))
        if aromatic and element not in AROMATIC_CAPABLE:
            self.error(f"element {element} cannot be aromatic", at(0))
        if not -4 <= charge <= 4:
            self.error(f"charge {charge} outside [-4, 4]", at(0))
        self.pos = end + 1
        return Atom(element, charge, hcount, chirality, aromatic, isotope)

    def _finish(self) -> MolGraph:
        atoms = []
        for idx, pend in enumerate(self.atoms):
            atom = pend.atom
            if atom.chirality is not Chirality.NONE:
                order = list(pend.order)
                if atom.explicit_h == 1 or (atom.explicit_h == 0 and len(order) == 3):
                    # the H (or lone pair) sits right after the preceding atom
                    order.insert(1 if pend.has_prev else 0, H_SLOT)
                if len(order) != 4:
                    warnings.warn(f"ignoring chirality on atom {idx}: not a tetrahedral centre", stacklevel=4)
                    atom = Atom(atom.element, atom.charge, atom.explicit_h, Chirality.NONE, atom.aromatic, atom.isotope)
                else:
                    tag = chirality_for_order(atom.chirality, order)
                    atom = Atom(atom.element, atom.charge, atom.explicit_h, tag, atom.aromatic, atom.isotope)
            atoms.append(atom)
        bonds = tuple(Bond(a, b, order) for (a, b), order in self.bonds.items())
        return MolGraph(tuple(atoms), bonds)


def parse_smiles(text: str) -> MolGraph:
    """Parse a SMILES string into a :class:`MolGraph`. Atoms keep source order."""
    if not isinstance(text, str):
        raise TypeError("SMILES must be a string")
    return _Parser(text).parse()


# -- writing -----------------------------------------------------------------

_CHIRAL_SYMBOL = {Chirality.COUNTERCLOCKWISE: "@", Chirality.CLOCKWISE: "@@"}


def _needs_brackets(mol: MolGraph, i: int) -> bool:
    atom = mol.atoms[i]
    if atom.element not in ORGANIC_SUBSET:
        return True
    if atom.charge or atom.isotope or atom.chirality is not Chirality.NONE:
        return True
    return mol.hydrogen_count(i) != mol.implicit_h(i)


def _atom_symbol(mol: MolGraph, i: int, tag: Chirality) -> str:
    atom = mol.atoms[i]
    sym = atom.element.lower() if atom.aromatic else atom.element
    if not _needs_brackets(mol, i):
        return sym
    out = ["["]
    if atom.isotope:
        out.append(str(atom.isotope))
    out.append(sym)
    if tag is not Chirality.NONE:
        out.append(_CHIRAL_SYMBOL[tag])
    h = mol.hydrogen_count(i)
    if h:
        out.append("H" if h == 1 else f"H{h}")
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        out.append(sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}")
    out.append("]")
    return "".join(out)


def _bond_symbol(mol: MolGraph, i: int, j: int) -> str:
    order = mol.bond_between(i, j).order
    both = mol.atoms[i].aromatic and mol.atoms[j].aromatic
    if order is BondOrder.AROMATIC:
        return "" if both else ":"
    if order is BondOrder.SINGLE:
        return "-" if both else ""
    return "=" if order is BondOrder.DOUBLE else "#"


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d:02d}"


def write_smiles(mol: MolGraph, priority=None, rng: random.Random | None = None) -> str:
    """Write ``mol`` as SMILES.

    Atoms with lower ``priority`` are visited first. With ``rng`` the root and
    neighbour order are shuffled instead, yielding a random valid rendering.
    """
    n = len(mol.atoms)
    if n == 0:
        return ""
    if priority is None:
        priority = list(range(n))
    if rng is not None:
        priority = list(range(n))
        rng.shuffle(priority)

    def key(j: int):
        return priority[j]

    visited = [False] * n
    parent = [-1] * n
    children: list[list[int]] = [[] for _ in range(n)]
    ring_edges: list[tuple[int, int]] = []
    ring_seen: set[tuple[int, int]] = set()
    roots = []
    comps = sorted(mol.components, key=lambda c: min(priority[a] for a in c))
    for comp in comps:
        root = min(comp, key=key)
        roots.append(root)
        visited[root] = True
        stack = [(root, iter(sorted(mol.neighbors(root), key=key)))]
        while stack:
            v, it = stack[-1]
            for w in it:
                if not visited[w]:
                    visited[w] = True
                    parent[w] = v
                    children[v].append(w)
                    stack.append((w, iter(sorted(mol.neighbors(w), key=key))))
                    break
                edge = (min(v, w), max(v, w))
                if w != parent[v] and edge not in ring_seen:
                    ring_seen.add(edge)
                    ring_edges.append((w, v))
            else:
                stack.pop()

    # emission order (pre-order) decides which end opens each ring bond
    emit_order: list[int] = []
    for root in roots:
        stack = [root]
        while stack:
            v = stack.pop()
            emit_order.append(v)
            stack.extend(reversed(children[v]))
    position = {v: k for k, v in enumerate(emit_order)}

    opens: dict[int, list[int]] = {i: [] for i in range(n)}
    closes: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in ring_edges:
        first, second = (a, b) if position[a] < position[b] else (b, a)
        opens[first].append(second)
        closes[second].append(first)

    digits_in_use: set[int] = set()
    ring_digit: dict[tuple[int, int], int] = {}
    pieces: list[str] = []

    def atom_text(v: int) -> str:
        ring_parts = []
        ring_partners = []
        # close rings first, in the order their digits were opened
        for other in sorted(closes[v], key=lambda o: ring_digit[(min(o, v), max(o, v))]):
            d = ring_digit.pop((min(other, v), max(other, v)))
            digits_in_use.discard(d)
            ring_parts.append(_ring_label(d))
            ring_partners.append(other)
        for other in sorted(opens[v], key=lambda o: position[o]):
            d = 1
            while d in digits_in_use:
                d += 1
            if d > 99:
                raise ValueError("too many open ring bonds")
            digits_in_use.add(d)
            ring_digit[(min(other, v), max(other, v))] = d
            ring_parts.append(_bond_symbol(mol, v, other) + _ring_label(d))
            ring_partners.append(other)

        tag = Chirality.NONE
        atom = mol.atoms[v]
        if atom.chirality is not Chirality.NONE:
            order: list[int] = []
            if parent[v] >= 0:
                order.append(parent[v])
            ref = mol.stereo_reference(v)
            if H_SLOT in ref:
                order.append(H_SLOT)
            order.extend(ring_partners)
            order.extend(children[v])
            tag = tag_in_order(atom.chirality, ref, order)
        return _atom_symbol(mol, v, tag) + "".join(ring_parts)

    # iterative emission: ('atom', v) | ('text', s)
    for k, root in enumerate(roots):
        if k:
            pieces.append(".")
        todo: list[tuple[str, object]] = [("atom", root)]
        while todo:
            kind, item = todo.pop()
            if kind == "text":
                pieces.append(item)
                continue
            v = item
            pieces.append(atom_text(v))
            kids = children[v]
            ops: list[tuple[str, object]] = []
            for c_idx, c in enumerate(kids):
                last = c_idx == len(kids) - 1
                if not last:
                    ops.append(("text", "(" + _bond_symbol(mol, v, c)))
                    ops.append(("atom", c))
                    ops.append(("text", ")"))
                else:
                    ops.append(("text", _bond_symbol(mol, v, c)))
                    ops.append(("atom", c))
            todo.extend(reversed(ops))
    return "".join(pieces)

