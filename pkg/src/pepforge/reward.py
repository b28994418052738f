"""Composite RL reward: property desirability, similarity and duplication.

    R = dup_fac * (w_prop * prop_smooth + w_sim * sim_fac)

with ``prop_smooth`` the mean of logistic terms ``sigma((x_i - t_i) / k_i)``,
``sim_fac = sigma(alpha * (s - s0))`` on Tanimoto similarity ``s`` to the
seed, and ``dup_fac = (1 / max(1, n + 1)) ** gamma`` where ``n`` counts
earlier generations of the same canonical molecule.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Union

from .chem import MolGraph, canonical_smiles, morgan_fingerprint, tanimoto
from .peptide import Peptide
from .properties import PROPERTIES, PropertyTriple

Molecule = Union[Peptide, MolGraph]


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(frozen=True)
class RewardConfig:
    """Reward hyperparameters.

    ``thresholds`` and ``scales`` are ordered LogD, MRT, SIF. The scales are
    free parameters; the defaults keep each sigmoid's transition narrower
    than the corresponding medium bucket.
    """

    thresholds: tuple[float, float, float] = (4.2, 1.63, 10.1)
    scales: tuple[float, float, float] = (0.4, 0.3, 1.5)
    alpha: float = 10.0
    s0: float = 0.6
    gamma: float = 1.0
    w_prop: float = 0.8
    w_sim: float = 0.2
    history_capacity: int = 100_000
    fp_radius: int = 2
    fp_bits: int = 2048

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        object.__setattr__(self, "scales", tuple(float(k) for k in self.scales))
        if len(self.thresholds) != 3 or len(self.scales) != 3:
            raise ValueError("thresholds and scales need one value per property")
        if any(k <= 0 for k in self.scales):
            raise ValueError("scales must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if self.w_prop < 0 or self.w_sim < 0 or abs(self.w_prop + self.w_sim - 1.0) > 1e-12:
            raise ValueError("w_prop and w_sim must be non-negative and sum to 1")
        if self.history_capacity < 1:
            raise ValueError("history_capacity must be at least 1")


class GenerationHistory:
    """Bounded LRU map from canonical SMILES to how often it was generated.

    Evicting an entry forgets its count. All access goes through one lock,
    so concurrent scorers serialize here and nowhere else.
    """

    def __init__(self, capacity: int = 100_000):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self._counts: OrderedDict[str, int] = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._counts)

    def __contains__(self, key: str) -> bool:
        return key in self._counts

    def count(self, key: str) -> int:
        """Occurrences so far, without touching recency."""
        return self._counts.get(key, 0)

    def observe(self, key: str) -> int:
        """Record one more occurrence and return the count before it."""
        with self._lock:
            prior = self._counts.pop(key, 0)
            self._counts[key] = prior + 1
            while len(self._counts) > self.capacity:
                self._counts.popitem(last=False)
            return prior

    def clear(self) -> None:
        with self._lock:
            self._counts.clear()


@dataclass(frozen=True)
class RewardBreakdown:
    prop_smooth: float
    sim_fac: float
    dup_fac: float
    total: float
    prop_terms: dict[str, float] = field(default_factory=dict)
    tanimoto: float = 0.0
    prior_count: int = 0

    def as_dict(self) -> dict:
        return {
            "prop_smooth": self.prop_smooth,
            "sim_fac": self.sim_fac,
            "dup_fac": self.dup_fac,
            "total": self.total,
            "prop_terms": dict(self.prop_terms),
            "tanimoto": self.tanimoto,
            "prior_count": self.prior_count,
        }


def property_terms(props: PropertyTriple, cfg: RewardConfig = RewardConfig()) -> dict[str, float]:
    return {
        p.value: logistic((props[p] - t) / k)
        for p, t, k in zip(PROPERTIES, cfg.thresholds, cfg.scales)
    }


def property_desirability(props: PropertyTriple, cfg: RewardConfig = RewardConfig()) -> float:
    terms = property_terms(props, cfg)
    return sum(terms.values()) / 3.0


def similarity_to_factor(s: float, cfg: RewardConfig = RewardConfig()) -> float:
    return logistic(cfg.alpha * (s - cfg.s0))


def _graph(m: Molecule) -> MolGraph:
    return m.assembled if isinstance(m, Peptide) else m


def _canonical(m: Molecule) -> str:
    return m.canonical if isinstance(m, Peptide) else canonical_smiles(m)


def similarity(seed: Molecule, candidate: Molecule, cfg: RewardConfig = RewardConfig()) -> float:
    fa = morgan_fingerprint(_graph(seed), cfg.fp_radius, cfg.fp_bits)
    fb = morgan_fingerprint(_graph(candidate), cfg.fp_radius, cfg.fp_bits)
    return tanimoto(fa, fb)


def similarity_factor(seed: Molecule, candidate: Molecule, cfg: RewardConfig = RewardConfig()) -> float:
    return similarity_to_factor(similarity(seed, candidate, cfg), cfg)


def duplication_from_count(n: int, cfg: RewardConfig = RewardConfig()) -> float:
    return (1.0 / max(1, n + 1)) ** cfg.gamma


def duplication_factor(candidate: Molecule | str, history: GenerationHistory, cfg: RewardConfig = RewardConfig()) -> float:
    """Penalty for ``candidate`` given its history; records this occurrence."""
    key = candidate if isinstance(candidate, str) else _canonical(candidate)
    return duplication_from_count(history.observe(key), cfg)


def combine(prop_smooth: float, sim_fac: float, dup_fac: float, cfg: RewardConfig = RewardConfig()) -> float:
    return dup_fac * (cfg.w_prop * prop_smooth + cfg.w_sim * sim_fac)


def score(
    seed: Molecule,
    candidate: Molecule,
    props: PropertyTriple,
    history: GenerationHistory,
    cfg: RewardConfig = RewardConfig(),
) -> RewardBreakdown:
    """Score a valid candidate against its seed, updating ``history`` once."""
    terms = property_terms(props, cfg)
    prop_smooth = sum(terms.values()) / 3.0
    s = similarity(seed, candidate, cfg)
    sim_fac = similarity_to_factor(s, cfg)
    n = history.observe(_canonical(candidate))
    dup_fac = duplication_from_count(n, cfg)
    total = combine(prop_smooth, sim_fac, dup_fac, cfg)
    return RewardBreakdown(prop_smooth, sim_fac, dup_fac, total, terms, s, n)


# -- score transforms used by the REINVENT-style baseline --------------------


def sqrt_transform(raw: float, high: float) -> float:
    """``min(1, sqrt(raw / high))``."""
    if raw < 0:
        raise ValueError("sqrt_transform needs a non-negative raw score")
    if high <= 0:
        raise ValueError("high must be positive")
    return min(1.0, math.sqrt(raw / high))


def reverse_sigmoid_shift(raw: float, low: float, high: float, shift: float, k: float) -> float:
    """Logistic in base 10 centred on ``(high + low) / 2 + shift``."""
    if not high > low:
        raise ValueError("high must exceed low")
    if k == 0:
        raise ValueError("k must be non-zero")
    exponent = -k * (10.0 * (raw - (high + low) / 2.0 - shift) / (high - low))
    if exponent > 300:
        return 0.0
    return 1.0 / (1.0 + 10.0**exponent)


def baseline_score(props: PropertyTriple) -> float:
    """Equal-weight geometric mean of the three transformed endpoints."""
    parts = (
        reverse_sigmoid_shift(props.logd, low=-8.0, high=5.0, shift=3.0, k=0.5),
        sqrt_transform(props.mrt, 1.63),
        sqrt_transform(props.sif, 10.1),
    )
    if min(parts) == 0.0:
        return 0.0
    return math.exp(sum(math.log(p) for p in parts) / 3)


__all__ = [
    "GenerationHistory",
    "RewardBreakdown",
    "RewardConfig",
    "baseline_score",
    "combine",
    "duplication_factor",
    "duplication_from_count",
    "logistic",
    "property_desirability",
    "property_terms",
    "reverse_sigmoid_shift",
    "score",
    "similarity",
    "similarity_factor",
    "similarity_to_factor",
    "sqrt_transform",
]
