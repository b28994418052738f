from __future__ import annotations

import pytest

from pepforge.chem import canonicalize
from pepforge.peptide import Peptide, mutate
from pepforge.properties import Property, PropertyTriple
from pepforge.prompts import (
    ONE_SHOT_INPUT,
    ONE_SHOT_OUTPUT,
    ONE_SHOT_THINK,
    AuditError,
    PromptKind,
    PromptStyle,
    audit_reasoning,
    build_prompt,
    objective_phrase,
    parse_output,
)


def _pep(vocab, *ids):
    return Peptide.from_monomers([vocab[i] for i in ids])


@pytest.fixture
def pair(vocab):
    return mutate(_pep(vocab, "A", "G", "L", "P"), 3, vocab["Cha"])


@pytest.fixture
def one_shot_seed(vocab):
    # the worked example's input peptide, built from the bundled vocabulary
    return _pep(vocab, "dL", "dL", "L", "dL", "P", "Y")


def test_cot_prompt_layout(pair):
    s = build_prompt(pair, PromptStyle.of("cot"))
    sections = s.prompt.strip().split("\n\n")
    assert sections[0].startswith("Background: We are modifying peptides")
    assert "by reasoning step-by-step" in sections[0]
    assert sections[1] == (
        "Peptide Modify Guides: Increase lipophilicity (LogD), mean residence time (MRT_Rat), and SIF stability."
    )
    assert sections[2].startswith("Thinking Process Guides:")
    assert sections[3] == f"Input SMILES:\n<SMILES>{pair.original.canonical}</SMILES>"
    assert s.target == (
        f"<think>At position 3, the monomer changed from {pair.leaving.smiles} to {pair.incoming.smiles} "
        "to increase lipophilicity (LogD), mean residence time (MRT_Rat), and SIF stability.</think>\n"
        f"<SMILES>{pair.mutated.canonical}</SMILES>"
    )


def test_non_cot_has_no_reasoning(pair):
    s = build_prompt(pair, PromptStyle.of("non_cot"))
    assert "Thinking Process Guides" not in s.prompt
    assert "<think>" not in s.target
    assert s.think is None
    assert s.target == f"<SMILES>{pair.mutated.canonical}</SMILES>"


def test_one_shot_embeds_worked_example(pair):
    s = build_prompt(pair, PromptStyle.of("cot_one_shot"))
    assert f"Input SMILES (example):\n<SMILES>{ONE_SHOT_INPUT}</SMILES>" in s.prompt
    assert f"<think>{ONE_SHOT_THINK}</think>\n<SMILES>{ONE_SHOT_OUTPUT}</SMILES>" in s.prompt
    assert s.prompt.rstrip().endswith(f"Input SMILES (template):\n<SMILES>{pair.original.canonical}</SMILES>")
    assert "how you would modify" in s.prompt


@pytest.mark.parametrize("kind", list(PromptKind))
def test_targets_parse_back(pair, kind):
    s = build_prompt(pair, PromptStyle(kind))
    parsed = parse_output(s.target)
    assert parsed.well_formed
    assert parsed.smiles == s.answer_smiles
    assert parsed.think == s.think
    assert canonicalize(parsed.smiles) == pair.mutated.canonical


def test_improved_objective_names_only_improved_properties(vocab):
    pair = mutate(_pep(vocab, "A", "G", "L"), 2, vocab["F4Cl"]).with_props(
        PropertyTriple(3.5, 1.0, 5.0), PropertyTriple(4.5, 1.2, 12.0)
    )
    s = build_prompt(pair, PromptStyle.of("cot", "improved"))
    assert s.objective_text == "lipophilicity (LogD) and SIF stability"


def test_improved_objective_needs_annotations(pair):
    with pytest.raises(ValueError):
        build_prompt(pair, PromptStyle.of("cot", "improved"))


def test_identity_pair_rejected(vocab):
    pep = _pep(vocab, "A", "G")
    with pytest.raises(ValueError):
        build_prompt(mutate(pep, 2, vocab["G"]))


def test_objective_phrase():
    assert objective_phrase([Property.MRT]) == "mean residence time (MRT_Rat)"
    with pytest.raises(ValueError):
        objective_phrase([])


def test_metadata_record(pair):
    rec = build_prompt(pair).to_record()
    assert rec["metadata"]["position"] == 3
    assert rec["metadata"]["leaving_id"] == "L"
    assert rec["metadata"]["incoming_id"] == "Cha"


@pytest.mark.parametrize(
    "text, ok, smiles",
    [
        ("<think>x</think>\n<SMILES>CCO</SMILES>", True, "CCO"),
        ("<SMILES> CCO </SMILES>", True, "CCO"),
        ("no tags", False, None),
        ("<SMILES></SMILES>", False, None),
        ("<SMILES>C</SMILES><SMILES>N</SMILES>", False, "C"),
    ],
)
def test_parse_output(text, ok, smiles):
    p = parse_output(text)
    assert p.well_formed is ok
    assert p.smiles == smiles


def test_unclosed_think_reported():
    p = parse_output("<think>half a thought <SMILES>CC</SMILES>")
    assert p.think is None
    assert any("unclosed" in d for d in p.diagnostics)


def test_audit_worked_example(vocab, one_shot_seed):
    parsed = parse_output(f"<think>{ONE_SHOT_THINK}</think>\n<SMILES>{ONE_SHOT_OUTPUT}</SMILES>")
    report = audit_reasoning(parsed, one_shot_seed, vocab)
    assert report.faithful
    assert report.exact_reconstruction
    assert report.leaving_at_position


def test_audit_without_vocabulary_uses_claimed_monomer(one_shot_seed):
    parsed = parse_output(f"<think>{ONE_SHOT_THINK}</think>\n<SMILES>{ONE_SHOT_OUTPUT}</SMILES>")
    assert audit_reasoning(parsed, one_shot_seed).exact_reconstruction


def test_audit_flags_unchanged_output(vocab, one_shot_seed):
    parsed = parse_output(f"<think>{ONE_SHOT_THINK}</think>\n<SMILES>{ONE_SHOT_INPUT}</SMILES>")
    report = audit_reasoning(parsed, one_shot_seed, vocab)
    assert not report.faithful
    assert not report.output_changed


def test_audit_flags_wrong_leaving_monomer(vocab, one_shot_seed):
    think = ONE_SHOT_THINK.replace("N1[C@@H](CCC1)C(=O)O", "NCC(=O)O")
    parsed = parse_output(f"<think>{think}</think>\n<SMILES>{ONE_SHOT_OUTPUT}</SMILES>")
    report = audit_reasoning(parsed, one_shot_seed, vocab)
    assert not report.leaving_in_seed
    assert not report.faithful


def test_audit_flags_extra_changes(vocab, one_shot_seed):
    extra = mutate(mutate(one_shot_seed, 5, vocab["ArSPhg"]).mutated, 2, vocab["Nal"]).mutated
    parsed = parse_output(f"<think>{ONE_SHOT_THINK}</think>\n<SMILES>{extra.canonical}</SMILES>")
    report = audit_reasoning(parsed, one_shot_seed, vocab)
    assert report.unexplained_changes
    assert not report.faithful


def test_audit_missing_claim(vocab, one_shot_seed):
    parsed = parse_output(f"<think>I improved it.</think>\n<SMILES>{ONE_SHOT_OUTPUT}</SMILES>")
    report = audit_reasoning(parsed, one_shot_seed, vocab)
    assert not report.claim_found and not report.faithful


def test_audit_rejects_malformed(vocab, one_shot_seed):
    with pytest.raises(AuditError):
        audit_reasoning(parse_output("nothing"), one_shot_seed, vocab)
    with pytest.raises(AuditError):
        audit_reasoning(parse_output("<SMILES>C1CC</SMILES>"), one_shot_seed, vocab)
