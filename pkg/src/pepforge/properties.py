"""Property triples, the surrogate predictor, bucketing and dataset splits.

The surrogate predictor is a stand-in for a learned QSAR model. Its
coefficients were picked so the bundled seed corpus and its point mutants
land in every bucket of every property; they carry no chemical validity.
"""

from __future__ import annotations

import logging
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field, fields
from enum import Enum, IntEnum
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Protocol

from .chem import BondOrder, MolGraph
from .chem.graph import HALOGENS
from .peptide import Monomer, Peptide, PeptidePair, assemble_cyclic

log = logging.getLogger(__name__)


class PredictorError(RuntimeError):
    pass


class Property(str, Enum):
    LOGD = "logd"
    MRT = "mrt"
    SIF = "sif"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {Property.LOGD: "LogD", Property.MRT: "MRT", Property.SIF: "SIF"}
PROPERTIES = (Property.LOGD, Property.MRT, Property.SIF)


@dataclass(frozen=True)
class PropertyTriple:
    logd: float
    mrt: float
    sif: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number, got {v!r}")
        if self.mrt < 0 or self.sif < 0:
            raise ValueError("mrt and sif must be non-negative")

    def __getitem__(self, prop: Property | str) -> float:
        return getattr(self, Property(prop).value)

    def as_dict(self) -> dict[str, float]:
        return {"logd": self.logd, "mrt": self.mrt, "sif": self.sif}

    @classmethod
    def from_mapping(cls, data: Mapping[str, float]) -> "PropertyTriple":
        return cls(float(data["logd"]), float(data["mrt"]), float(data["sif"]))


class Bucket(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class BucketThresholds:
    """Per-property ``(lo_cut, hi_cut)``. Medium is closed on both ends."""

    logd: tuple[float, float] = (3.0, 4.2)
    mrt: tuple[float, float] = (0.56, 1.63)
    sif: tuple[float, float] = (3.4, 10.1)

    def __post_init__(self):
        for f in fields(self):
            lo, hi = getattr(self, f.name)
            if not lo < hi:
                raise ValueError(f"{f.name}: lo_cut must be below hi_cut, got ({lo}, {hi})")
            object.__setattr__(self, f.name, (float(lo), float(hi)))

    def cuts(self, prop: Property | str) -> tuple[float, float]:
        return getattr(self, Property(prop).value)

    def high_cut(self, prop: Property | str) -> float:
        return self.cuts(prop)[1]


def bucketize(x: float, prop: Property | str, thresholds: BucketThresholds = BucketThresholds()) -> Bucket:
    if not math.isfinite(x):
        raise ValueError(f"cannot bucket non-finite value {x!r}")
    lo, hi = thresholds.cuts(prop)
    if x < lo:
        return Bucket.LOW
    if x > hi:
        return Bucket.HIGH
    return Bucket.MEDIUM


def buckets(props: PropertyTriple, thresholds: BucketThresholds = BucketThresholds()) -> dict[str, Bucket]:
    return {p.value: bucketize(props[p], p, thresholds) for p in PROPERTIES}


class ImprovementArity(IntEnum):
    NONE = 0
    SINGLE = 1
    DUAL = 2
    TRIPLE = 3


@dataclass(frozen=True)
class ImprovementLabel:
    improved_to_high: frozenset[Property] = frozenset()

    @property
    def arity(self) -> ImprovementArity:
        return ImprovementArity(len(self.improved_to_high))

    @property
    def ordered(self) -> tuple[Property, ...]:
        return tuple(p for p in PROPERTIES if p in self.improved_to_high)

    @property
    def group(self) -> str:
        """Group key such as ``"LogD+SIF"``; ``"none"`` when nothing improved."""
        return "+".join(p.label for p in self.ordered) or "none"

    @property
    def description(self) -> str:
        return ", ".join(f"{p.label} up" for p in self.ordered)

    @classmethod
    def from_group(cls, group: str) -> "ImprovementLabel":
        if group == "none":
            return cls()
        by_label = {p.label: p for p in PROPERTIES}
        try:
            return cls(frozenset(by_label[g] for g in group.split("+")))
        except KeyError as exc:
            raise ValueError(f"unknown improvement group {group!r}") from exc


def categorize(before: PropertyTriple, after: PropertyTriple, thresholds: BucketThresholds = BucketThresholds()) -> ImprovementLabel:
    """Properties that moved into the high bucket (ending high is not enough)."""
    improved = frozenset(
        p
        for p in PROPERTIES
        if bucketize(after[p], p, thresholds) is Bucket.HIGH and bucketize(before[p], p, thresholds) is not Bucket.HIGH
    )
    return ImprovementLabel(improved)


def categorize_pair(pair: PeptidePair, thresholds: BucketThresholds = BucketThresholds()) -> ImprovementLabel:
    if pair.original_props is None or pair.mutated_props is None:
        raise ValueError("pair is missing property annotations")
    return categorize(pair.original_props, pair.mutated_props, thresholds)


# -- prediction ---------------------------------------------------------------


class PropertyPredictor(Protocol):
    def __call__(self, mol: MolGraph) -> PropertyTriple: ...


def predict(peptide: Peptide, predictor: PropertyPredictor | Callable[[MolGraph], PropertyTriple]) -> PropertyTriple:
    """Run ``predictor`` on the assembled peptide, turning any failure into PredictorError."""
    try:
        out = predictor(peptide.assembled)
        if not isinstance(out, PropertyTriple):
            out = PropertyTriple.from_mapping(out)
    except PredictorError:
        raise
    except Exception as exc:
        raise PredictorError(f"predictor failed: {exc}") from exc
    return out


def softplus(x: float) -> float:
    if x > 30:
        return x
    return math.log1p(math.exp(x))


@dataclass(frozen=True)
class SurrogateCoefficients:
    # logd = a0 + a1*aliphatic_c + a2*aromatic + a3*halogens - a4*hbd - a5*hba
    a0: float = 0.5
    a1: float = 0.13
    a2: float = 0.17
    a3: float = 0.55
    a4: float = 0.07
    a5: float = 0.06
    # mrt = softplus(b0 + b1*n_methyl_amides + b2*logd + b3*rings)
    b0: float = -2.4
    b1: float = 0.7
    b2: float = 0.55
    b3: float = 0.12
    # sif = softplus(c0 + c1*n_methyl_amides + c2*non_natural_atoms + c3*logd)
    c0: float = -5.0
    c1: float = 2.2
    c2: float = 3.0
    c3: float = 2.0

    @classmethod
    def from_mapping(cls, data: Mapping[str, float]) -> "SurrogateCoefficients":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown surrogate coefficients: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class Descriptors:
    aliphatic_c: int
    aromatic: int
    halogens: int
    hbd: int
    hba: int
    n_methyl_amides: int
    rings: int
    non_natural: int


_NATURAL_SMILES = (
    "N[C@@H](C)C(=O)O",
    "N[C@@H](CCCNC(=N)N)C(=O)O",
    "N[C@@H](CC(N)=O)C(=O)O",
    "N[C@@H](CC(=O)O)C(=O)O",
    "N[C@@H](CS)C(=O)O",
    "N[C@@H](CCC(=O)O)C(=O)O",
    "N[C@@H](CCC(N)=O)C(=O)O",
    "NCC(=O)O",
    "N[C@@H](Cc1c[nH]cn1)C(=O)O",
    "N[C@@H]([C@@H](C)CC)C(=O)O",
    "N[C@@H](CC(C)C)C(=O)O",
    "N[C@@H](CCCCN)C(=O)O",
    "N[C@@H](CCSC)C(=O)O",
    "N[C@@H](Cc1ccccc1)C(=O)O",
    "N1[C@@H](CCC1)C(=O)O",
    "N[C@@H](CO)C(=O)O",
    "N[C@@H]([C@H](O)C)C(=O)O",
    "N[C@@H](Cc1c[nH]c2ccccc12)C(=O)O",
    "N[C@@H](Cc1ccc(O)cc1)C(=O)O",
    "N[C@@H](C(C)C)C(=O)O",
)


def _signature(mol: MolGraph, i: int) -> tuple[str, bool, int]:
    a = mol.atoms[i]
    return a.element, a.aromatic, mol.degree(i)


@lru_cache(maxsize=1)
def natural_signatures() -> frozenset[tuple[str, bool, int]]:
    """Atom signatures seen in a macrocycle of the 20 proteinogenic residues."""
    monomers = [Monomer.from_smiles(f"aa{k}", s, True) for k, s in enumerate(_NATURAL_SMILES)]
    mol = assemble_cyclic(monomers)
    return frozenset(_signature(mol, i) for i in range(len(mol.atoms)))


def _is_amide_n(mol: MolGraph, i: int) -> bool:
    for j, order in mol.adjacency[i]:
        if order is not BondOrder.SINGLE or mol.atoms[j].element != "C":
            continue
        if any(mol.atoms[k].element == "O" and o is BondOrder.DOUBLE for k, o in mol.adjacency[j]):
            return True
    return False


def _is_methyl(mol: MolGraph, i: int) -> bool:
    return mol.atoms[i].element == "C" and not mol.atoms[i].aromatic and mol.degree(i) == 1


def describe(mol: MolGraph) -> Descriptors:
    natural = natural_signatures()
    h = mol.hydrogen_counts
    aliphatic = aromatic = halogens = hbd = hba = nme = nonnat = 0
    for i, a in enumerate(mol.atoms):
        if a.element == "C" and not a.aromatic:
            aliphatic += 1
        if a.aromatic:
            aromatic += 1
        if a.element in HALOGENS:
            halogens += 1
        if a.element in ("N", "O"):
            hba += 1
            if h[i] >= 1:
                hbd += 1
        if (
            a.element == "N"
            and not a.aromatic
            and h[i] == 0
            and _is_amide_n(mol, i)
            and any(_is_methyl(mol, j) for j in mol.neighbors(i))
        ):
            nme += 1
        if _signature(mol, i) not in natural:
            nonnat += 1
    return Descriptors(aliphatic, aromatic, halogens, hbd, hba, nme, mol.ring_count, nonnat)


def surrogate_from_descriptors(d: Descriptors, c: SurrogateCoefficients = SurrogateCoefficients()) -> PropertyTriple:
    logd = c.a0 + c.a1 * d.aliphatic_c + c.a2 * d.aromatic + c.a3 * d.halogens - c.a4 * d.hbd - c.a5 * d.hba
    mrt = softplus(c.b0 + c.b1 * d.n_methyl_amides + c.b2 * logd + c.b3 * d.rings)
    sif = softplus(c.c0 + c.c1 * d.n_methyl_amides + c.c2 * d.non_natural + c.c3 * logd)
    return PropertyTriple(logd, mrt, sif)


def surrogate_predict(mol: MolGraph, coefficients: SurrogateCoefficients = SurrogateCoefficients()) -> PropertyTriple:
    return surrogate_from_descriptors(describe(mol), coefficients)


@dataclass(frozen=True)
class SurrogatePredictor:
    coefficients: SurrogateCoefficients = SurrogateCoefficients()

    def __call__(self, mol: MolGraph) -> PropertyTriple:
        return surrogate_predict(mol, self.coefficients)


# -- splits -------------------------------------------------------------------

DEFAULT_GROUPS = ("LogD+MRT", "LogD+SIF", "MRT+SIF", "LogD", "MRT", "SIF")


@dataclass(frozen=True)
class SplitCaps:
    cap_per_group: int = 4000
    rl_pool_size: int = 600
    test_size: int = 1880
    groups: tuple[str, ...] = DEFAULT_GROUPS
    test_seed_fraction: float = 0.2

    def __post_init__(self):
        if min(self.cap_per_group, self.rl_pool_size, self.test_size) < 0:
            raise ValueError("split caps must be non-negative")
        if not 0.0 <= self.test_seed_fraction < 1.0:
            raise ValueError("test_seed_fraction must be in [0, 1)")
        for g in self.groups:
            label = ImprovementLabel.from_group(g)
            if label.arity not in (ImprovementArity.SINGLE, ImprovementArity.DUAL):
                raise ValueError(f"group {g!r} must be a single- or dual-property group")
        object.__setattr__(self, "groups", tuple(self.groups))


@dataclass
class Splits:
    sft: list[PeptidePair]
    rl_pool: list[PeptidePair]
    test: list[PeptidePair]
    warnings: list[str] = field(default_factory=list)

    @property
    def short(self) -> bool:
        return bool(self.warnings)


def _pair_key(pair: PeptidePair) -> tuple:
    return (pair.original.canonical, pair.position, pair.incoming.id, pair.mutated.canonical)


def build_splits(
    pairs: Iterable[PeptidePair],
    caps: SplitCaps = SplitCaps(),
    rng_seed: int = 0,
    thresholds: BucketThresholds = BucketThresholds(),
    sort_key: Callable[[PeptidePair], tuple] = _pair_key,
) -> Splits:
    """Split annotated pairs into SFT, RL-pool and test sets.

    A fraction of the distinct original peptides is held out; the test set
    draws only from those, and SFT only from the rest, so the two never
    share an original peptide. SFT takes every triple-improvement pair plus
    up to ``cap_per_group`` from each configured group. The RL pool is a
    sample of SFT. Test pairs are the held-out non-triple ones.

    Items only need ``original_props`` and ``mutated_props``; ``sort_key``
    must return a tuple whose first element identifies the original
    peptide (its canonical SMILES for real pairs).
    """
    rng = random.Random(rng_seed)
    labelled = sorted(((sort_key(p), p, categorize_pair(p, thresholds)) for p in pairs), key=lambda t: t[0])
    originals = sorted({k[0] for k, _, _ in labelled})
    rng.shuffle(originals)
    n_test = round(len(originals) * caps.test_seed_fraction)
    if caps.test_seed_fraction > 0 and n_test == 0 and len(originals) >= 2:
        n_test = 1
    test_originals = set(originals[:n_test])

    by_group: dict[str, list[PeptidePair]] = defaultdict(list)
    triple: list[PeptidePair] = []
    test_pool: list[PeptidePair] = []
    for key, pair, label in labelled:
        if key[0] in test_originals:
            if label.arity < ImprovementArity.TRIPLE:
                test_pool.append(pair)
        elif label.arity is ImprovementArity.TRIPLE:
            triple.append(pair)
        else:
            by_group[label.group].append(pair)

    warnings = []
    sft = list(triple)
    for g in caps.groups:
        members = by_group.get(g, [])
        if len(members) > caps.cap_per_group:
            members = rng.sample(members, caps.cap_per_group)
        elif len(members) < caps.cap_per_group:
            warnings.append(f"group {g}: {len(members)} pairs available, cap {caps.cap_per_group}")
        sft.extend(members)

    if len(sft) >= caps.rl_pool_size:
        rl_pool = rng.sample(sft, caps.rl_pool_size)
    else:
        rl_pool = list(sft)
        warnings.append(f"rl pool: {len(sft)} sft pairs available, wanted {caps.rl_pool_size}")

    rng.shuffle(test_pool)
    if len(test_pool) < caps.test_size:
        warnings.append(f"test: {len(test_pool)} pairs available, wanted {caps.test_size}")
    test = test_pool[: caps.test_size]

    for w in warnings:
        log.info("short split: %s", w)
    return Splits(sft, rl_pool, test, warnings)
