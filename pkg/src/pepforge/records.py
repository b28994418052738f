"""JSONL record schemas for the dataset pipeline."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SeedRecord(_Record):
    helm: str
    seed_id: Optional[str] = None


class PeptideRecord(_Record):
    helm: str
    canonical_smiles: str
    monomer_ids: list[str]


class AnnotatedPeptide(PeptideRecord):
    logd: float
    mrt: float
    sif: float
    buckets: dict[str, str]


class PairRecord(_Record):
    seed_id: str
    original: PeptideRecord
    mutated: PeptideRecord
    position: int
    leaving: str
    incoming: str


class AnnotatedPair(_Record):
    seed_id: str
    original: AnnotatedPeptide
    mutated: AnnotatedPeptide
    position: int
    leaving: str
    incoming: str
    improved: list[str]
    group: str
    arity: str


class DumpRecord(_Record):
    """One generation attempt: raw model output and/or an extracted SMILES."""

    model_config = ConfigDict(extra="ignore")

    seed_id: str
    output_text: Optional[str] = None
    smiles: Optional[str] = None
    logd: Optional[float] = None
    mrt: Optional[float] = None
    sif: Optional[float] = None

    @model_validator(mode="after")
    def _needs_output(self):
        if self.output_text is None and self.smiles is None:
            raise ValueError("one of output_text or smiles is required")
        given = [v is not None for v in (self.logd, self.mrt, self.sif)]
        if any(given) and not all(given):
            raise ValueError("logd, mrt and sif must be given together")
        return self


class ScoreInput(_Record):
    seed_smiles: str
    smiles: str
    session: Optional[str] = None
