"""Candidate scoring shared by the HTTP service and the ``score`` command.

Each candidate goes through parse, valence check, property prediction and
reward. Invalid candidates get reward 0.0 and leave history untouched.
Histories are kept per session so separate training runs do not penalise
each other's duplicates.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

from .chem import MolGraph, SmilesError, canonical_smiles, parse_smiles, validate_valence
from .config import AppConfig
from .properties import PredictorError, PropertyTriple, SurrogatePredictor
from .reward import GenerationHistory, RewardBreakdown, score

DEFAULT_SESSION = "default"


class SeedError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateResult:
    index: int
    smiles: str
    valid: bool
    total: float
    canonical_smiles: str | None = None
    props: PropertyTriple | None = None
    reward: RewardBreakdown | None = None
    error: str | None = None

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "smiles": self.smiles,
            "valid": self.valid,
            "total": self.total,
            "canonical_smiles": self.canonical_smiles,
            "props": None if self.props is None else self.props.as_dict(),
            "reward": None if self.reward is None else self.reward.as_dict(),
            "error": self.error,
        }


def _checked_graph(smiles: str) -> MolGraph:
    mol = parse_smiles(smiles)
    report = validate_valence(mol)
    if not report:
        raise ValueError(f"valence: {report.problems[0]}")
    if not mol.atoms:
        raise ValueError("empty molecule")
    return mol


class Scorer:
    def __init__(self, config: AppConfig | None = None):
        self.config = config or AppConfig()
        self.predictor = SurrogatePredictor(self.config.surrogate)
        self._sessions: dict[str, GenerationHistory] = {}
        self._lock = threading.Lock()

    def history(self, session: str | None = None) -> GenerationHistory:
        key = session or DEFAULT_SESSION
        with self._lock:
            hist = self._sessions.get(key)
            if hist is None:
                hist = self._sessions[key] = GenerationHistory(self.config.reward.history_capacity)
            return hist

    def session_sizes(self) -> dict[str, int]:
        with self._lock:
            return {k: len(v) for k, v in sorted(self._sessions.items())}

    def reset(self, session: str | None = None) -> None:
        with self._lock:
            if session is None:
                self._sessions.clear()
            else:
                self._sessions.pop(session, None)

    def score_batch(self, seed_smiles: str, candidates: Sequence[str], session: str | None = None) -> list[CandidateResult]:
        """Score candidates in order against one seed.

        Raises:
            SeedError: the seed SMILES is unusable.
        """
        try:
            seed = _checked_graph(seed_smiles)
        except (SmilesError, ValueError) as exc:
            raise SeedError(f"seed: {exc}") from exc
        history = self.history(session)
        results = []
        for i, smi in enumerate(candidates):
            try:
                mol = _checked_graph(smi)
                canonical = canonical_smiles(mol)
                props = self.predictor(mol)
            except (SmilesError, ValueError, PredictorError) as exc:
                results.append(CandidateResult(i, smi, False, 0.0, error=str(exc)))
                continue
            breakdown = score(seed, mol, props, history, self.config.reward)
            results.append(CandidateResult(i, smi, True, breakdown.total, canonical, props, breakdown))
        return results
