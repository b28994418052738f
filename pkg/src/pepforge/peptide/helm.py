"""Single-polymer head-to-tail cyclic subset of HELM.

Accepted shape::

    PEPTIDE1{A.G.[meL].P}$PEPTIDE1,PEPTIDE1,4:R2-1:R1$$$

The five ``$``-separated sections are: polymers, connections, polymer
groups, extended annotations and version. Only one ``PEPTIDE`` polymer and
exactly one connection (last residue R2 to first residue R1, either
direction) are supported. See ``docs/helm_grammar.md``.
"""

from __future__ import annotations

import re

from .assembly import Peptide
from .monomers import MonomerVocabulary, PeptideError


class HelmError(PeptideError):
    pass


class UnknownMonomerError(HelmError):
    def __init__(self, symbol: str):
        super().__init__(f"unknown monomer symbol {symbol!r}")
        self.symbol = symbol


class TopologyError(HelmError):
    pass


_POLYMER = re.compile(r"^(PEPTIDE\d+)\{(.*)\}$")
_ENDPOINT = re.compile(r"^(\d+):(R[12])$")


def _split_monomers(body: str) -> list[str]:
    symbols = []
    for token in body.split("."):
        if not token:
            raise HelmError("empty monomer in polymer")
        if token.startswith("["):
            if not token.endswith("]") or len(token) < 3:
                raise HelmError(f"malformed bracketed monomer {token!r}")
            symbols.append(token[1:-1])
        elif len(token) == 1 and token.isalpha():
            symbols.append(token)
        else:
            raise HelmError(f"multi-character monomer {token!r} must be bracketed")
    return symbols


def _check_connection(section: str, name: str, n: int) -> None:
    if not section:
        raise TopologyError("topology unsupported: no head-to-tail connection declared")
    if "|" in section:
        raise TopologyError("topology unsupported: only one connection is allowed")
    parts = section.split(",")
    if len(parts) != 3:
        raise HelmError(f"malformed connection {section!r}")
    src, dst, link = parts
    if src != name or dst != name:
        raise TopologyError("topology unsupported: connection must join the polymer to itself")
    ends = link.split("-")
    if len(ends) != 2:
        raise HelmError(f"malformed connection {link!r}")
    parsed = []
    for end in ends:
        m = _ENDPOINT.match(end)
        if not m:
            raise HelmError(f"malformed connection endpoint {end!r}")
        parsed.append((int(m.group(1)), m.group(2)))
    if sorted(parsed) != [(1, "R1"), (n, "R2")] or n < 2:
        raise TopologyError(f"topology unsupported: connection {link!r} is not head-to-tail")


def parse_helm(text: str, vocab: MonomerVocabulary) -> Peptide:
    """Parse a cyclic HELM string and assemble the peptide.

    Raises:
        UnknownMonomerError: a symbol is absent from ``vocab``.
        TopologyError: the connection is missing or not head-to-tail.
        HelmError: anything else malformed.
    """
    sections = text.strip().split("$")
    if len(sections) > 5:
        raise HelmError(f"expected at most 5 '$'-separated sections, got {len(sections)}")
    sections += [""] * (5 - len(sections))
    polymers, connections, groups, annotations, version = sections
    if "|" in polymers:
        raise HelmError("only a single polymer is supported")
    m = _POLYMER.match(polymers)
    if not m:
        raise HelmError(f"malformed polymer section {polymers!r}")
    if groups or annotations:
        raise HelmError("polymer groups and annotations are not supported")
    if version not in ("", "V2.0"):
        raise HelmError(f"unsupported version {version!r}")
    name, body = m.groups()
    symbols = _split_monomers(body)
    for s in symbols:
        if s not in vocab:
            raise UnknownMonomerError(s)
    _check_connection(connections, name, len(symbols))
    return Peptide.from_monomers([vocab[s] for s in symbols])


def to_helm(peptide: Peptide) -> str:
    tokens = [mid if len(mid) == 1 else f"[{mid}]" for mid in peptide.monomer_ids]
    n = len(tokens)
    return f"PEPTIDE1{{{'.'.join(tokens)}}}$PEPTIDE1,PEPTIDE1,{n}:R2-1:R1$$$"
