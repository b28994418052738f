from __future__ import annotations

import random

import pytest
from oracles import naive_metrics

from pepforge.evalkit import (
    GenerationRecord,
    GenerationSet,
    MetricError,
    evaluate,
    hqsr,
    hqsr_s,
    is_high_quality,
    make_record,
    novelty,
    transition_matrix,
    uhqs,
    uniqueness,
    validity,
)
from pepforge.properties import BucketThresholds, PropertyTriple, SurrogatePredictor

TH = BucketThresholds()
HQ = PropertyTriple(5.0, 2.0, 11.0)
MEH = PropertyTriple(3.5, 1.0, 5.0)
HIGH_CUTS = {"logd": 4.2, "mrt": 1.63, "sif": 10.1}


def rec(seed, canonical, props=HQ, valid=True):
    if not valid:
        return GenerationRecord(seed, reason="invalid")
    return GenerationRecord(seed, canonical, canonical, props, True)


def test_validity_counts_all_attempts():
    gs = GenerationSet([rec("s", "a"), rec("s", None, valid=False)])
    assert validity(gs) == 0.5


def test_uniqueness_over_valid_records():
    gs = GenerationSet([rec("s", f"m{k % 300}") for k in range(1000)] + [rec("s", None, valid=False)])
    assert uniqueness(gs) == 0.3


def test_hqsr_89_of_100():
    gs = GenerationSet([rec("s", f"m{k}", HQ if k < 89 else MEH) for k in range(100)])
    assert hqsr(gs) == 0.89


def test_hq_is_strict():
    assert not is_high_quality(PropertyTriple(4.2, 2.0, 11.0))
    assert is_high_quality(PropertyTriple(4.2001, 1.631, 10.11))
    assert not is_high_quality(None)


def test_uhqs_dedups_within_seed():
    gs = GenerationSet([rec(f"s{s}", "same") for s in range(3) for _ in range(10)])
    assert uhqs(gs) == 1.0
    assert hqsr_s(gs) == 1.0


def test_novelty_on_unique_valid_set():
    gs = GenerationSet([rec("s", "a"), rec("s", "a"), rec("s", "b")], training_index={"a"})
    assert novelty(gs) == 0.5


def test_empty_sets_raise():
    with pytest.raises(MetricError):
        validity(GenerationSet([]))
    with pytest.raises(MetricError):
        uniqueness(GenerationSet([rec("s", None, valid=False)]))
    with pytest.raises(MetricError):
        evaluate(GenerationSet([]))


def test_all_invalid_reports_with_warnings():
    report = evaluate(GenerationSet([rec("s", None, valid=False)] * 3))
    assert report.validity == 0.0 and report.uniqueness == 0.0 and report.novelty == 0.0
    assert report.warnings


def test_hqsr_s_monotone_in_records():
    rng = random.Random(0)
    records = []
    last = 0.0
    base = [rec(f"s{k}", None, valid=False) for k in range(5)]
    for _ in range(40):
        records.append(rec(rng.choice(["s0", "s1", "s2", "s3", "s4"]), f"m{rng.randint(0, 9)}", rng.choice([HQ, MEH])))
        value = hqsr_s(GenerationSet(base + records))
        assert value >= last
        last = value


def test_uhqs_at_least_hqsr_s():
    rng = random.Random(1)
    for _ in range(50):
        gs = _random_set(rng)
        assert uhqs(gs) >= hqsr_s(gs)


def test_make_record_paths():
    pred = SurrogatePredictor()
    good = make_record("s", output_text="<think>x</think><SMILES>O=C1CNC(=O)CN1</SMILES>", predictor=pred)
    assert good.valid and good.canonical
    assert not make_record("s", output_text="no tags").valid
    assert not make_record("s", smiles="C1CC", predictor=pred).valid
    assert not make_record("s", smiles="C(C)(C)(C)(C)C", predictor=pred).valid
    assert not make_record("s", smiles="CCO").valid
    given = make_record("s", smiles="CCO", props={"logd": 5, "mrt": 2, "sif": 11})
    assert given.valid and is_high_quality(given.props)

    def broken(mol):
        raise ValueError("offline")

    assert "prediction failed" in make_record("s", smiles="CCO", predictor=broken).reason


def test_transition_matrix_rows():
    pairs = [(MEH, HQ), (MEH, MEH), (HQ, HQ), (PropertyTriple(1, 0.1, 1), MEH)]
    t = transition_matrix(pairs, "logd")
    for row, has in zip(t.matrix, t.has_mass):
        assert sum(row) == pytest.approx(1.0 if has else 0.0)
    assert t.counts[1] == (0, 1, 1)
    assert t.to_csv().splitlines()[0].startswith("LogD before")


def test_identity_transitions():
    props = [PropertyTriple(1, 0.1, 1), MEH, HQ]
    for name in ("logd", "mrt", "sif"):
        t = transition_matrix([(p, p) for p in props], name)
        assert t.matrix == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


def test_report_rendering():
    gs = GenerationSet([rec("s1", "a"), rec("s1", "b", MEH), rec("s2", None, valid=False)])
    report = evaluate(gs, seed_props={"s1": MEH})
    assert report.uhqs_display == "0.50/2"
    assert "HQSR-S" in report.text_table("m")
    assert set(report.to_dict()["transitions"]) == {"logd", "mrt", "sif"}
    assert any("seed properties" in w for w in report.warnings)


def _random_set(rng: random.Random, max_records: int = 50) -> GenerationSet:
    records = []
    for _ in range(rng.randint(1, max_records)):
        seed = f"s{rng.randint(0, 4)}"
        if rng.random() < 0.2:
            records.append(rec(seed, None, valid=False))
            continue
        props = PropertyTriple(rng.uniform(3, 6), rng.uniform(0.5, 3), rng.uniform(5, 15))
        records.append(rec(seed, f"m{rng.randint(0, 15)}", props))
    training = {f"m{k}" for k in range(16) if rng.random() < 0.3}
    return GenerationSet(records, training)


def _as_tuples(gs: GenerationSet):
    return [(r.seed_id, r.valid, r.canonical, r.props.as_dict() if r.props else None) for r in gs.records]


def test_metrics_match_naive_oracle():
    rng = random.Random(42)
    for _ in range(100):
        gs = _random_set(rng)
        want = naive_metrics(_as_tuples(gs), gs.training_index, HIGH_CUTS)
        report = evaluate(gs)
        for name, value in want.items():
            assert getattr(report, name) == pytest.approx(value, abs=1e-12), name
