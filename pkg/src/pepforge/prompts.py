"""Prompt construction for peptide-editing SFT data and output parsing.

Three prompt styles are supported: chain-of-thought (``cot``), answer-only
(``non_cot``) and chain-of-thought with one worked example
(``cot_one_shot``). Targets wrap reasoning in ``<think>`` tags and the
answer in ``<SMILES>`` tags; :func:`parse_output` reads them back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

from .chem import Chirality, MolGraph, SmilesError, canonical_smiles, morgan_fingerprint, parse_smiles
from .peptide import Monomer, MonomerVocabulary, Peptide, PeptideError, PeptidePair, mutate
from .properties import PROPERTIES, BucketThresholds, Property, categorize_pair

THINK_OPEN, THINK_CLOSE = "<think>", "</think>"
SMILES_OPEN, SMILES_CLOSE = "<SMILES>", "</SMILES>"


class PromptKind(str, Enum):
    COT = "cot"
    NON_COT = "non_cot"
    COT_ONE_SHOT = "cot_one_shot"


class ObjectiveMode(str, Enum):
    ALL = "all"
    IMPROVED = "improved"


_GOAL_PHRASES = {
    Property.LOGD: "lipophilicity (LogD)",
    Property.MRT: "mean residence time (MRT_Rat)",
    Property.SIF: "SIF stability",
}

_ONE_SHOT_GOALS = (
    "Increase lipophilicity (LogD), mean residence time in rat (MRT_Rat), "
    "and stability in simulated intestinal fluid (SIF)."
)

_ANSWER_FORMAT = (
    f"The required answer format is wrapped only within {SMILES_OPEN} and {SMILES_CLOSE} HTML tags."
)
_BACKGROUND_COT = (
    "Background: We are modifying peptides to meet specific ADMET property improvements "
    "by reasoning step-by-step. " + _ANSWER_FORMAT
)
_BACKGROUND_PLAIN = (
    "Background: We are modifying peptides to meet specific ADMET property improvements. " + _ANSWER_FORMAT
)
_THINKING_GUIDE = (
    f"Thinking Process Guides: Please enclose your step-by-step reasoning process within "
    f"{THINK_OPEN} and {THINK_CLOSE} HTML tags. This process should clearly explain how you "
    "modify the monomer in the original SMILES before providing the final SMILES."
)
_THINKING_GUIDE_ONE_SHOT = _THINKING_GUIDE.replace("how you modify", "how you would modify")

ONE_SHOT_INPUT = (
    "CC(C)C[C@@H]1NC(=O)[C@@H](CC(C)C)NC(=O)[C@@H](CC(C)C)NC(=O)"
    "[C@H](Cc2ccc(O)cc2)NC(=O)[C@@H]2CCCN2C(=O)[C@@H](CC(C)C)NC1=O"
)
ONE_SHOT_OUTPUT = (
    "CC(C)C[C@@H]1NC(=O)[C@@H](CC(C)C)NC(=O)[C@@H](CC(C)C)NC(=O)"
    "[C@H](Cc2ccc(O)cc2)NC(=O)[C@H](c2cc(C#N)ccc2Sc2ccc(F)cc2)NC(=O)[C@@H]"
    "(CC(C)C)NC1=O"
)
ONE_SHOT_THINK = (
    "At position 5, the monomer changed from N1[C@@H](CCC1)C(=O)O "
    "to [NH2+][C@@H](c1c(Sc2ccc(cc2)F)ccc(c1)C#N)C(=O)[O-] "
    "to increase lipophilicity (LogD), mean residence time (MRT_Rat), and SIF stability."
)


def _join(phrases: Sequence[str]) -> str:
    if len(phrases) == 1:
        return phrases[0]
    if len(phrases) == 2:
        return f"{phrases[0]} and {phrases[1]}"
    return ", ".join(phrases[:-1]) + f", and {phrases[-1]}"


def objective_phrase(props: Iterable[Property] = PROPERTIES) -> str:
    """``"lipophilicity (LogD), mean residence time (MRT_Rat), and SIF stability"`` style text."""
    chosen = [p for p in PROPERTIES if p in set(props)]
    if not chosen:
        raise ValueError("objective needs at least one property")
    return _join([_GOAL_PHRASES[p] for p in chosen])


@dataclass(frozen=True)
class PromptStyle:
    kind: PromptKind = PromptKind.COT
    objective: ObjectiveMode = ObjectiveMode.ALL
    thresholds: BucketThresholds = BucketThresholds()

    @classmethod
    def of(cls, kind: str | PromptKind, objective: str | ObjectiveMode = ObjectiveMode.ALL) -> "PromptStyle":
        return cls(PromptKind(kind), ObjectiveMode(objective))


@dataclass(frozen=True)
class CotSample:
    kind: PromptKind
    prompt: str
    target: str
    think: str | None
    answer_smiles: str
    input_smiles: str
    position: int
    leaving_smiles: str
    incoming_smiles: str
    leaving_id: str
    incoming_id: str
    objective_text: str

    def to_record(self) -> dict:
        return {
            "prompt": self.prompt,
            "target": self.target,
            "metadata": {
                "kind": self.kind.value,
                "position": self.position,
                "leaving": self.leaving_smiles,
                "incoming": self.incoming_smiles,
                "leaving_id": self.leaving_id,
                "incoming_id": self.incoming_id,
                "input_smiles": self.input_smiles,
                "answer_smiles": self.answer_smiles,
            },
        }


def _smiles_block(smiles: str) -> str:
    return f"{SMILES_OPEN}{smiles}{SMILES_CLOSE}"


def _think_text(position: int, leaving: str, incoming: str, objective: str) -> str:
    return f"At position {position}, the monomer changed from {leaving} to {incoming} to increase {objective}."


def _objective_for(pair: PeptidePair, style: PromptStyle) -> str:
    if style.objective is ObjectiveMode.ALL:
        return objective_phrase()
    improved = categorize_pair(pair, style.thresholds).improved_to_high
    return objective_phrase(improved or PROPERTIES)


def build_prompt(pair: PeptidePair, style: PromptStyle = PromptStyle()) -> CotSample:
    """Render the prompt and training target for one mutation pair.

    Raises:
        ValueError: the pair is an identity swap, or the ``improved`` objective
            is requested without property annotations.
    """
    if pair.leaving.id == pair.incoming.id:
        raise ValueError("identity pairs carry no edit to describe")
    objective = _objective_for(pair, style)
    source, answer = pair.original.canonical, pair.mutated.canonical
    guide = f"Peptide Modify Guides: Increase {objective}."
    think = _think_text(pair.position, pair.leaving.smiles, pair.incoming.smiles, objective)

    if style.kind is PromptKind.NON_COT:
        parts = [_BACKGROUND_PLAIN, guide, "Input SMILES:\n" + _smiles_block(source)]
        target = _smiles_block(answer)
        think_out = None
    elif style.kind is PromptKind.COT:
        parts = [_BACKGROUND_COT, guide, _THINKING_GUIDE, "Input SMILES:\n" + _smiles_block(source)]
        target = f"{THINK_OPEN}{think}{THINK_CLOSE}\n{_smiles_block(answer)}"
        think_out = think
    else:
        parts = [
            _BACKGROUND_COT,
            "Peptide Modify Guides: " + _ONE_SHOT_GOALS,
            _THINKING_GUIDE_ONE_SHOT,
            "Input SMILES (example):\n" + _smiles_block(ONE_SHOT_INPUT),
            f"Output (example):\n{THINK_OPEN}{ONE_SHOT_THINK}{THINK_CLOSE}\n{_smiles_block(ONE_SHOT_OUTPUT)}",
            "Input SMILES (template):\n" + _smiles_block(source),
        ]
        target = f"{THINK_OPEN}{think}{THINK_CLOSE}\n{_smiles_block(answer)}"
        think_out = think
    return CotSample(
        kind=style.kind,
        prompt="\n\n".join(parts) + "\n",
        target=target,
        think=think_out,
        answer_smiles=answer,
        input_smiles=source,
        position=pair.position,
        leaving_smiles=pair.leaving.smiles,
        incoming_smiles=pair.incoming.smiles,
        leaving_id=pair.leaving.id,
        incoming_id=pair.incoming.id,
        objective_text=objective,
    )


# -- parsing ------------------------------------------------------------------

_THINK_RE = re.compile(re.escape(THINK_OPEN) + r"(.*?)" + re.escape(THINK_CLOSE), re.S)
_SMILES_RE = re.compile(re.escape(SMILES_OPEN) + r"(.*?)" + re.escape(SMILES_CLOSE), re.S)


@dataclass(frozen=True)
class ParsedOutput:
    think: str | None
    smiles: str | None
    well_formed: bool
    diagnostics: tuple[str, ...] = ()


def parse_output(text: str) -> ParsedOutput:
    """Pull the first think span and the single SMILES span out of model output."""
    notes = []
    think_match = _THINK_RE.search(text)
    think = think_match.group(1).strip() if think_match else None
    if think_match is None and THINK_OPEN in text:
        notes.append("unclosed <think> tag")
    spans = _SMILES_RE.findall(text)
    if not spans:
        notes.append("no <SMILES> span")
        return ParsedOutput(think, None, False, tuple(notes))
    if len(spans) > 1:
        notes.append(f"{len(spans)} <SMILES> spans, expected one")
        return ParsedOutput(think, spans[0].strip(), False, tuple(notes))
    smiles = spans[0].strip()
    if not smiles:
        notes.append("empty <SMILES> span")
        return ParsedOutput(think, None, False, tuple(notes))
    return ParsedOutput(think, smiles, True, tuple(notes))


# -- reasoning audit ----------------------------------------------------------


class AuditError(ValueError):
    pass


_CLAIM_RE = re.compile(
    r"position\s*\[?(\d+)\]?\s*,?.*?\bfrom\s+(\S+)\s+to\s+(\S+)",
    re.S | re.I,
)


@dataclass(frozen=True)
class AuditReport:
    claim_found: bool
    position: int | None = None
    leaving_smiles: str | None = None
    incoming_smiles: str | None = None
    output_changed: bool = False
    leaving_in_seed: bool = False
    leaving_at_position: bool = False
    incoming_supported: bool = False
    exact_reconstruction: bool = False
    unexplained_changes: bool = False
    incoming_coverage: float = 0.0
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def faithful(self) -> bool:
        return (
            self.claim_found
            and self.output_changed
            and self.leaving_in_seed
            and self.incoming_supported
            and not self.unexplained_changes
        )


def neutralize(mol: MolGraph) -> MolGraph:
    """Undo zwitterion charges: protonated amines lose H+, anionic oxygens gain it."""
    atoms = list(mol.atoms)
    changed = False
    for i, a in enumerate(atoms):
        h = mol.hydrogen_count(i)
        if a.element == "N" and a.charge == 1 and h > 0:
            h -= 1
        elif a.element == "O" and a.charge == -1:
            h += 1
        else:
            continue
        # plain atoms fall back to default valence, which also repairs
        # under-protonated forms such as a terminal [NH2+]
        simple = a.chirality is Chirality.NONE and a.isotope is None
        atoms[i] = replace(a, charge=0, explicit_h=None if simple else h)
        changed = True
    return MolGraph(tuple(atoms), mol.bonds) if changed else mol


def _parse_claim_smiles(text: str, what: str) -> MolGraph:
    text = text.rstrip(",;")
    try:
        return neutralize(parse_smiles(text))
    except SmilesError as exc:
        raise AuditError(f"claimed {what} monomer {text!r} is not valid SMILES: {exc}") from exc


def audit_reasoning(
    parsed: ParsedOutput,
    seed: Peptide,
    vocab: MonomerVocabulary | None = None,
    coverage_cut: float = 0.5,
) -> AuditReport:
    """Check a reasoning claim against the edit actually made.

    First the claimed swap is rebuilt exactly: when the incoming monomer is
    known (from ``vocab``) or usable as a monomer, the seed is mutated and
    the result compared with the output by canonical SMILES. Otherwise a
    fingerprint heuristic asks whether the incoming monomer's environment
    bits cover at least ``coverage_cut`` of the bits the output gained over
    the seed. The heuristic can miss real edits whose new environments sit
    mostly on the backbone junction.

    Raises:
        AuditError: the output is malformed or a SMILES in it does not parse.
    """
    if not parsed.well_formed or parsed.smiles is None:
        raise AuditError("output is not well formed")
    try:
        output = parse_smiles(parsed.smiles)
    except SmilesError as exc:
        raise AuditError(f"output SMILES is invalid: {exc}") from exc
    output_canonical = canonical_smiles(output)
    changed = output_canonical != seed.canonical
    notes = []
    m = _CLAIM_RE.search(parsed.think or "")
    if m is None:
        notes.append("no change claim found in reasoning")
        return AuditReport(False, output_changed=changed, notes=tuple(notes))
    position = int(m.group(1))
    leaving_raw, incoming_raw = m.group(2).rstrip(",;"), m.group(3).rstrip(",;")
    leaving = canonical_smiles(_parse_claim_smiles(leaving_raw, "leaving"))
    incoming_mol = _parse_claim_smiles(incoming_raw, "incoming")

    seed_monomers = [canonical_smiles(neutralize(mon.graph)) for mon in seed.monomers]
    in_seed = leaving in seed_monomers
    at_position = 1 <= position <= len(seed) and seed_monomers[position - 1] == leaving
    if not changed:
        notes.append("output is identical to the seed")
    if not in_seed:
        notes.append("claimed leaving monomer does not occur in the seed")
    elif not at_position:
        notes.append(f"claimed leaving monomer is not at position {position}")

    incoming = _resolve_monomer(incoming_mol, vocab)
    exact = False
    if incoming is not None and at_position:
        try:
            rebuilt = mutate(seed, position, incoming).mutated
            exact = rebuilt.canonical == output_canonical
        except PeptideError:
            notes.append("claimed swap does not assemble")

    seed_fp = morgan_fingerprint(seed.assembled).bits
    out_fp = morgan_fingerprint(output).bits
    inc_fp = morgan_fingerprint(incoming_mol).bits
    gained = out_fp - seed_fp
    coverage = len(gained & inc_fp) / len(gained) if gained else 0.0

    if exact:
        supported, unexplained = True, False
    else:
        supported = changed and bool(gained & inc_fp)
        if incoming is not None and at_position:
            # the claimed swap was rebuildable but does not give the output
            unexplained = changed
        else:
            unexplained = changed and coverage < coverage_cut
        if unexplained:
            notes.append("output carries changes the reasoning does not account for")
    return AuditReport(
        claim_found=True,
        position=position,
        leaving_smiles=leaving_raw,
        incoming_smiles=incoming_raw,
        output_changed=changed,
        leaving_in_seed=in_seed,
        leaving_at_position=at_position,
        incoming_supported=supported,
        exact_reconstruction=exact,
        unexplained_changes=unexplained,
        incoming_coverage=coverage,
        notes=tuple(notes),
    )


def _resolve_monomer(mol: MolGraph, vocab: MonomerVocabulary | None) -> Monomer | None:
    smiles = canonical_smiles(mol)
    if vocab is not None:
        known = vocab.by_canonical(smiles)
        if known is not None:
            return known
    try:
        return Monomer.from_smiles("claimed", smiles)
    except ValueError:
        return None
