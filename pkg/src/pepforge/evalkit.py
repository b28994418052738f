"""Generation metrics: validity, novelty, uniqueness and high-quality success rates.

A generated molecule is high quality (HQ) when all three predicted
properties are strictly above their high cut. HQSR counts HQ records over
all generation attempts, UHQS averages the number of distinct HQ molecules
per seed, and HQSR-S is the fraction of seeds with at least one.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .chem import MolGraph, SmilesError, canonical_smiles, parse_smiles, validate_valence
from .properties import (
    PROPERTIES,
    Bucket,
    BucketThresholds,
    PredictorError,
    Property,
    PropertyTriple,
    bucketize,
)
from .prompts import parse_output

log = logging.getLogger(__name__)


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class GenerationRecord:
    seed_id: str
    smiles: str | None = None
    canonical: str | None = None
    props: PropertyTriple | None = None
    valid: bool = False
    raw_output: str | None = None
    reason: str | None = None

    def __post_init__(self):
        if self.valid and (self.canonical is None or self.props is None):
            raise ValueError("a valid record needs a canonical SMILES and properties")


@dataclass(frozen=True)
class GenerationSet:
    records: tuple[GenerationRecord, ...]
    training_index: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "training_index", frozenset(self.training_index))

    def __len__(self) -> int:
        return len(self.records)

    @property
    def valid_records(self) -> list[GenerationRecord]:
        return [r for r in self.records if r.valid]

    @property
    def seed_ids(self) -> list[str]:
        return sorted({r.seed_id for r in self.records})


def make_record(
    seed_id: str,
    *,
    output_text: str | None = None,
    smiles: str | None = None,
    props: PropertyTriple | Mapping[str, float] | None = None,
    predictor: Callable[[MolGraph], PropertyTriple] | None = None,
) -> GenerationRecord:
    """Validate one generation: tags, SMILES, valence, then properties.

    Properties come from ``props`` when given, otherwise from ``predictor``.
    A predictor failure makes the record invalid.
    """
    if smiles is None and output_text is not None:
        parsed = parse_output(output_text)
        if not parsed.well_formed:
            return GenerationRecord(seed_id, parsed.smiles, raw_output=output_text, reason="; ".join(parsed.diagnostics))
        smiles = parsed.smiles
    if not smiles:
        return GenerationRecord(seed_id, None, raw_output=output_text, reason="no SMILES")
    try:
        mol = parse_smiles(smiles)
    except SmilesError as exc:
        return GenerationRecord(seed_id, smiles, raw_output=output_text, reason=f"unparseable SMILES: {exc}")
    report = validate_valence(mol)
    if not report:
        return GenerationRecord(seed_id, smiles, raw_output=output_text, reason=f"valence: {report.problems[0]}")
    canonical = canonical_smiles(mol)
    try:
        if props is not None:
            triple = props if isinstance(props, PropertyTriple) else PropertyTriple.from_mapping(props)
        elif predictor is not None:
            triple = predictor(mol)
            if not isinstance(triple, PropertyTriple):
                triple = PropertyTriple.from_mapping(triple)
        else:
            return GenerationRecord(seed_id, smiles, canonical, raw_output=output_text, reason="no properties")
    except (PredictorError, ValueError, KeyError, TypeError) as exc:
        return GenerationRecord(seed_id, smiles, canonical, raw_output=output_text, reason=f"prediction failed: {exc}")
    return GenerationRecord(seed_id, smiles, canonical, triple, True, output_text)


# -- metrics ------------------------------------------------------------------


def is_high_quality(props: PropertyTriple | None, thresholds: BucketThresholds = BucketThresholds()) -> bool:
    if props is None:
        return False
    return all(props[p] > thresholds.high_cut(p) for p in PROPERTIES)


def validity(gs: GenerationSet) -> float:
    if not gs.records:
        raise MetricError("validity of an empty generation set")
    return sum(r.valid for r in gs.records) / len(gs.records)


def novelty(gs: GenerationSet) -> float:
    """Share of distinct valid molecules absent from the training index."""
    unique = {r.canonical for r in gs.valid_records}
    if not unique:
        log.warning("novelty: no valid molecules, reporting 0")
        return 0.0
    return len(unique - gs.training_index) / len(unique)


def uniqueness(gs: GenerationSet) -> float:
    valid = gs.valid_records
    if not valid:
        raise MetricError("uniqueness needs at least one valid record")
    return len({r.canonical for r in valid}) / len(valid)


def hqsr(gs: GenerationSet, thresholds: BucketThresholds = BucketThresholds()) -> float:
    """HQ records over all attempts; invalid attempts count as failures."""
    if not gs.records:
        raise MetricError("hqsr of an empty generation set")
    return sum(r.valid and is_high_quality(r.props, thresholds) for r in gs.records) / len(gs.records)


def hq_per_seed(gs: GenerationSet, thresholds: BucketThresholds = BucketThresholds()) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {s: set() for s in gs.seed_ids}
    for r in gs.records:
        if r.valid and is_high_quality(r.props, thresholds):
            out[r.seed_id].add(r.canonical)
    return out


def uhqs(gs: GenerationSet, thresholds: BucketThresholds = BucketThresholds()) -> float:
    per_seed = hq_per_seed(gs, thresholds)
    if not per_seed:
        raise MetricError("uhqs needs at least one seed")
    return sum(len(v) for v in per_seed.values()) / len(per_seed)


def hqsr_s(gs: GenerationSet, thresholds: BucketThresholds = BucketThresholds()) -> float:
    per_seed = hq_per_seed(gs, thresholds)
    if not per_seed:
        raise MetricError("hqsr_s needs at least one seed")
    return sum(bool(v) for v in per_seed.values()) / len(per_seed)


def samples_per_seed(gs: GenerationSet) -> int:
    counts = Counter(r.seed_id for r in gs.records)
    return max(counts.values()) if counts else 0


# -- transitions --------------------------------------------------------------


@dataclass(frozen=True)
class TransitionMatrix:
    prop: Property
    counts: tuple[tuple[int, int, int], ...]

    @property
    def row_mass(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.counts)

    @property
    def has_mass(self) -> tuple[bool, ...]:
        return tuple(m > 0 for m in self.row_mass)

    @property
    def matrix(self) -> list[list[float]]:
        """Row-normalised fractions; rows without mass stay all zero."""
        return [[c / m if m else 0.0 for c in row] for row, m in zip(self.counts, self.row_mass)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        labels = [b.label for b in Bucket]
        w.writerow([f"{self.prop.label} before\\after", *labels, "n"])
        for b, row, m in zip(labels, self.matrix, self.row_mass):
            w.writerow([b, *(f"{x:.6f}" for x in row), m])
        return buf.getvalue()


def transition_matrix(
    pairs: Iterable[tuple[PropertyTriple, PropertyTriple]],
    prop: Property | str,
    thresholds: BucketThresholds = BucketThresholds(),
) -> TransitionMatrix:
    prop = Property(prop)
    counts = [[0, 0, 0] for _ in range(3)]
    for before, after in pairs:
        counts[bucketize(before[prop], prop, thresholds)][bucketize(after[prop], prop, thresholds)] += 1
    return TransitionMatrix(prop, tuple(tuple(row) for row in counts))


# -- report -------------------------------------------------------------------

_COLUMNS = ("Val", "Nov", "Uni", "HQSR", "UHQS", "HQSR-S")


@dataclass
class EvalReport:
    n_records: int
    n_seeds: int
    samples_per_seed: int
    validity: float
    novelty: float
    uniqueness: float
    hqsr: float
    uhqs: float
    hqsr_s: float
    transitions: dict[str, TransitionMatrix] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def uhqs_display(self) -> str:
        return f"{self.uhqs:.2f}/{self.samples_per_seed}"

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_seeds": self.n_seeds,
            "samples_per_seed": self.samples_per_seed,
            "validity": self.validity,
            "novelty": self.novelty,
            "uniqueness": self.uniqueness,
            "hqsr": self.hqsr,
            "uhqs": self.uhqs,
            "uhqs_display": self.uhqs_display,
            "hqsr_s": self.hqsr_s,
            "transitions": {
                k: {"matrix": t.matrix, "row_mass": list(t.row_mass)} for k, t in self.transitions.items()
            },
            "warnings": list(self.warnings),
        }

    def text_table(self, name: str = "model") -> str:
        cells = [
            f"{self.validity:.3f}",
            f"{self.novelty:.3f}",
            f"{self.uniqueness:.3f}",
            f"{self.hqsr:.3f}",
            self.uhqs_display,
            f"{self.hqsr_s:.3f}",
        ]
        width = max(len(name), 5)
        widths = [max(len(c), len(h)) for c, h in zip(cells, _COLUMNS)]
        head = "  ".join([f"{'Model':<{width}}", *(f"{h:>{w}}" for h, w in zip(_COLUMNS, widths))])
        row = "  ".join([f"{name:<{width}}", *(f"{c:>{w}}" for c, w in zip(cells, widths))])
        return f"{head}\n{row}\n"


def evaluate(
    gs: GenerationSet,
    thresholds: BucketThresholds = BucketThresholds(),
    seed_props: Mapping[str, PropertyTriple] | None = None,
) -> EvalReport:
    """All six metrics, plus bucket transitions when seed properties are known."""
    warnings = []
    if not gs.records:
        raise MetricError("cannot evaluate an empty generation set")
    try:
        uni = uniqueness(gs)
    except MetricError as exc:
        warnings.append(str(exc))
        uni = 0.0
    if not gs.valid_records:
        warnings.append("no valid records; novelty reported as 0")
    transitions = {}
    if seed_props:
        pairs = [(seed_props[r.seed_id], r.props) for r in gs.valid_records if r.seed_id in seed_props]
        missing = {r.seed_id for r in gs.records} - set(seed_props)
        if missing:
            warnings.append(f"no seed properties for {len(missing)} seed(s); left out of transitions")
        transitions = {p.value: transition_matrix(pairs, p, thresholds) for p in PROPERTIES}
    return EvalReport(
        n_records=len(gs.records),
        n_seeds=len(gs.seed_ids),
        samples_per_seed=samples_per_seed(gs),
        validity=validity(gs),
        novelty=novelty(gs),
        uniqueness=uni,
        hqsr=hqsr(gs, thresholds),
        uhqs=uhqs(gs, thresholds),
        hqsr_s=hqsr_s(gs, thresholds),
        transitions=transitions,
        warnings=warnings,
    )
