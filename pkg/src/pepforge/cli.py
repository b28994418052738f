"""``pepforge`` command line: dataset pipeline, scoring and the reward service.

Pipeline order: augment -> annotate -> split -> build-prompts, then
baseline/evaluate on generations. Every stage reads and writes JSONL and is
deterministic for a given config and seed.
"""

from __future__ import annotations

import json
import random
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import click

from .chem import parse_smiles
from .config import ENV_VAR, AppConfig, ConfigError
from .evalkit import GenerationSet, evaluate, make_record
from .io import RecordError, dumps, read_models, write_jsonl
from .peptide import (
    MonomerVocabulary,
    PeptideError,
    PeptidePair,
    augment,
    eligible_positions,
    load_vocabulary,
    mutate,
    parse_helm,
)
from .properties import (
    PropertyTriple,
    SurrogatePredictor,
    build_splits,
    buckets,
    categorize,
)
from .prompts import PromptStyle, build_prompt, parse_output
from .records import AnnotatedPair, DumpRecord, PairRecord, ScoreInput, SeedRecord
from .scoring import Scorer, SeedError


def _vocab(cfg: AppConfig, override: str | None) -> MonomerVocabulary:
    try:
        return load_vocabulary(override or cfg.vocabulary)
    except (OSError, PeptideError) as exc:
        raise click.ClickException(f"cannot load vocabulary: {exc}") from exc


def _emit(out: str, records) -> int:
    if out == "-":
        return write_jsonl(sys.stdout, records)
    return write_jsonl(out, records)


def _note(msg: str) -> None:
    click.echo(msg, err=True)


def _read(path, model):
    try:
        return read_models(path, model)
    except RecordError as exc:
        raise click.ClickException(str(exc)) from exc


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    envvar=ENV_VAR,
    help=f"YAML config file (falls back to ${ENV_VAR}).",
)
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Cyclic peptide editing: data pipeline, rewards and evaluation."""
    try:
        ctx.obj = AppConfig.load(config_path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("augment")
@click.option("--seeds", "seeds_path", type=click.Path(exists=True, dir_okay=False), help="Seed JSONL; bundled seeds if omitted.")
@click.option("--vocab", type=click.Path(exists=True, dir_okay=False))
@click.option("-k", "--k", type=click.IntRange(min=1), help="Mutations drawn per seed.")
@click.option("--rng-seed", type=int)
@click.option("--out", default="-", show_default=True)
@click.pass_obj
def augment_cmd(cfg: AppConfig, seeds_path, vocab, k, rng_seed, out):
    """Draw random point mutations of each seed peptide."""
    vocabulary = _vocab(cfg, vocab)
    k = k or cfg.augment.k
    rng_seed = cfg.rng_seed if rng_seed is None else rng_seed
    if seeds_path is None:
        with resources.as_file(resources.files("pepforge.data").joinpath("seeds.jsonl")) as p:
            seeds = _read(p, SeedRecord)
    else:
        seeds = _read(seeds_path, SeedRecord)
    master = random.Random(rng_seed)
    records, skipped = [], 0
    for lineno, seed in seeds:
        sub_seed = master.getrandbits(63)
        seed_id = seed.seed_id or f"line{lineno}"
        try:
            peptide = parse_helm(seed.helm, vocabulary)
        except PeptideError as exc:
            skipped += 1
            _note(f"augment: skipping seed at line {lineno}: {exc}")
            continue
        for pair in augment(peptide, vocabulary, k, sub_seed, cfg.augment.retry_cap):
            records.append(
                {
                    "seed_id": seed_id,
                    "original": pair.original.to_record(),
                    "mutated": pair.mutated.to_record(),
                    "position": pair.position,
                    "leaving": pair.leaving.id,
                    "incoming": pair.incoming.id,
                }
            )
    n = _emit(out, records)
    _note(f"augment: {len(seeds) - skipped} seeds, {n} pairs, {skipped} skipped")
    if not seeds:
        _note("augment: warning: seed file is empty")


@main.command("annotate")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="-", show_default=True)
@click.pass_obj
def annotate_cmd(cfg: AppConfig, in_path, out):
    """Attach surrogate properties, buckets and improvement labels to pairs."""
    predictor = SurrogatePredictor(cfg.surrogate)
    cache: dict[str, PropertyTriple] = {}

    def props_for(smiles: str) -> PropertyTriple:
        if smiles not in cache:
            cache[smiles] = predictor(parse_smiles(smiles))
        return cache[smiles]

    def peptide_block(rec, props: PropertyTriple) -> dict:
        return {
            **rec.model_dump(),
            **props.as_dict(),
            "buckets": {k: b.label for k, b in buckets(props, cfg.thresholds).items()},
        }

    records = []
    for lineno, pair in _read(in_path, PairRecord):
        try:
            before = props_for(pair.original.canonical_smiles)
            after = props_for(pair.mutated.canonical_smiles)
        except ValueError as exc:
            raise click.ClickException(f"{in_path}:{lineno}: {exc}") from exc
        label = categorize(before, after, cfg.thresholds)
        records.append(
            {
                "seed_id": pair.seed_id,
                "original": peptide_block(pair.original, before),
                "mutated": peptide_block(pair.mutated, after),
                "position": pair.position,
                "leaving": pair.leaving,
                "incoming": pair.incoming,
                "improved": [p.value for p in label.ordered],
                "group": label.group,
                "arity": label.arity.name.lower(),
            }
        )
    n = _emit(out, records)
    _note(f"annotate: {n} pairs")


class _Row:
    """Annotated pair with the attributes split building needs."""

    def __init__(self, lineno: int, rec: AnnotatedPair):
        self.record = rec
        self.original_props = PropertyTriple(rec.original.logd, rec.original.mrt, rec.original.sif)
        self.mutated_props = PropertyTriple(rec.mutated.logd, rec.mutated.mrt, rec.mutated.sif)
        self.key = (rec.original.canonical_smiles, rec.position, rec.incoming, rec.mutated.canonical_smiles, lineno)


@main.command("split")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--cap-per-group", type=click.IntRange(min=0))
@click.option("--rl-pool-size", type=click.IntRange(min=0))
@click.option("--test-size", type=click.IntRange(min=0))
@click.option("--rng-seed", type=int)
@click.pass_obj
def split_cmd(cfg: AppConfig, in_path, out_dir, cap_per_group, rl_pool_size, test_size, rng_seed):
    """Build SFT, RL-pool and test splits from annotated pairs."""
    caps = cfg.splits
    overrides = {
        k: v
        for k, v in (("cap_per_group", cap_per_group), ("rl_pool_size", rl_pool_size), ("test_size", test_size))
        if v is not None
    }
    caps = replace(caps, **overrides)
    rows = [_Row(lineno, rec) for lineno, rec in _read(in_path, AnnotatedPair)]
    splits = build_splits(
        rows,
        caps,
        cfg.rng_seed if rng_seed is None else rng_seed,
        cfg.thresholds,
        sort_key=lambda r: r.key,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sizes = {}
    for name, items in (("sft", splits.sft), ("rl_pool", splits.rl_pool), ("test", splits.test)):
        sizes[name] = write_jsonl(out / f"{name}.jsonl", (r.record.model_dump() for r in items))
    summary = {"sizes": sizes, "caps": _caps_dict(caps), "warnings": splits.warnings}
    (out / "summary.json").write_text(dumps(summary) + "\n", encoding="utf-8")
    _note(f"split: sft {sizes['sft']}, rl_pool {sizes['rl_pool']}, test {sizes['test']}")
    for w in splits.warnings:
        _note(f"split: warning: {w}")


def _caps_dict(caps) -> dict:
    return {
        "cap_per_group": caps.cap_per_group,
        "rl_pool_size": caps.rl_pool_size,
        "test_size": caps.test_size,
        "groups": list(caps.groups),
        "test_seed_fraction": caps.test_seed_fraction,
    }


def _rebuild_pair(rec: AnnotatedPair, vocab: MonomerVocabulary) -> PeptidePair:
    original = parse_helm(rec.original.helm, vocab)
    pair = mutate(original, rec.position, vocab[rec.incoming])
    if pair.mutated.canonical != rec.mutated.canonical_smiles:
        raise PeptideError("mutated peptide does not match its recorded SMILES (vocabulary mismatch?)")
    return pair.with_props(
        PropertyTriple(rec.original.logd, rec.original.mrt, rec.original.sif),
        PropertyTriple(rec.mutated.logd, rec.mutated.mrt, rec.mutated.sif),
    )


@main.command("build-prompts")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="-", show_default=True)
@click.option("--kind", type=click.Choice(["cot", "non_cot", "cot_one_shot"]))
@click.option("--objective", type=click.Choice(["all", "improved"]))
@click.option("--vocab", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def build_prompts_cmd(cfg: AppConfig, in_path, out, kind, objective, vocab):
    """Render prompt/target records from a split file."""
    vocabulary = _vocab(cfg, vocab)
    style = replace(
        PromptStyle.of(kind or cfg.prompts.kind, objective or cfg.prompts.objective),
        thresholds=cfg.thresholds,
    )
    records = []
    for lineno, rec in _read(in_path, AnnotatedPair):
        try:
            sample = build_prompt(_rebuild_pair(rec, vocabulary), style)
        except (PeptideError, KeyError, ValueError) as exc:
            raise click.ClickException(f"{in_path}:{lineno}: {exc}") from exc
        parsed = parse_output(sample.target)
        if not parsed.well_formed or parsed.smiles != sample.answer_smiles or parsed.think != sample.think:
            raise click.ClickException(f"{in_path}:{lineno}: rendered target does not parse back")
        record = sample.to_record()
        record["metadata"]["seed_id"] = rec.seed_id
        records.append(record)
    n = _emit(out, records)
    _note(f"build-prompts: {n} {style.kind.value} prompts")


@main.command("baseline")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Annotated pairs whose originals act as seeds.")
@click.option("--out", default="-", show_default=True)
@click.option("--samples", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--rng-seed", type=int)
@click.option("--vocab", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def baseline_cmd(cfg: AppConfig, in_path, out, samples, rng_seed, vocab):
    """Random single-monomer mutation baseline, written as a generation dump."""
    vocabulary = _vocab(cfg, vocab)
    rng = random.Random(cfg.rng_seed if rng_seed is None else rng_seed)
    seeds: dict[str, str] = {}
    for _, rec in _read(in_path, AnnotatedPair):
        seeds.setdefault(rec.seed_id, rec.original.helm)
    ids = vocabulary.ids()
    records = []
    for seed_id in sorted(seeds):
        peptide = parse_helm(seeds[seed_id], vocabulary)
        positions = list(eligible_positions(peptide))
        for _ in range(samples):
            position = rng.choice(positions)
            incoming = vocabulary[rng.choice(ids)]
            try:
                smiles = mutate(peptide, position, incoming).mutated.canonical
            except PeptideError:
                records.append({"seed_id": seed_id, "output_text": ""})
                continue
            records.append({"seed_id": seed_id, "smiles": smiles})
    n = _emit(out, records)
    _note(f"baseline: {len(seeds)} seeds, {n} generations")


@main.command("score")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="-", show_default=True)
@click.pass_obj
def score_cmd(cfg: AppConfig, in_path, out):
    """Score {seed_smiles, smiles} records with the reward in order."""
    scorer = Scorer(cfg)
    records = []
    for lineno, rec in _read(in_path, ScoreInput):
        try:
            (result,) = scorer.score_batch(rec.seed_smiles, [rec.smiles], rec.session)
        except SeedError as exc:
            raise click.ClickException(f"{in_path}:{lineno}: {exc}") from exc
        records.append(result.as_dict())
    n = _emit(out, records)
    _note(f"score: {n} candidates")


@main.command("evaluate")
@click.option("--dump", "dump_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--reference", type=click.Path(exists=True, dir_okay=False), help="Annotated pairs giving seed properties.")
@click.option("--train", "train_paths", multiple=True, type=click.Path(exists=True, dir_okay=False), help="Annotated pairs forming the novelty index.")
@click.option("--out-dir", type=click.Path(file_okay=False))
@click.option("--name", default="model", show_default=True)
@click.pass_obj
def evaluate_cmd(cfg: AppConfig, dump_path, reference, train_paths, out_dir, name):
    """Compute generation metrics and bucket transitions for a dump."""
    predictor = SurrogatePredictor(cfg.surrogate)
    records = []
    for _, rec in _read(dump_path, DumpRecord):
        props = None
        if rec.logd is not None:
            props = {"logd": rec.logd, "mrt": rec.mrt, "sif": rec.sif}
        records.append(
            make_record(rec.seed_id, output_text=rec.output_text, smiles=rec.smiles, props=props, predictor=predictor)
        )
    training = set()
    for path in train_paths:
        for _, rec in _read(path, AnnotatedPair):
            training.add(rec.original.canonical_smiles)
            training.add(rec.mutated.canonical_smiles)
    seed_props = None
    if reference:
        seed_props = {}
        for _, rec in _read(reference, AnnotatedPair):
            seed_props[rec.seed_id] = PropertyTriple(rec.original.logd, rec.original.mrt, rec.original.sif)
    if not records:
        raise click.ClickException(f"{dump_path}: no generation records")
    report = evaluate(GenerationSet(tuple(records), frozenset(training)), cfg.thresholds, seed_props)
    table = report.text_table(name)
    click.echo(table, nl=False)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        (out / "report.txt").write_text(table, encoding="utf-8")
        for prop, matrix in report.transitions.items():
            (out / f"transitions_{prop}.csv").write_text(matrix.to_csv(), encoding="utf-8")
    for w in report.warnings:
        _note(f"evaluate: warning: {w}")


@main.command("serve")
@click.option("--host")
@click.option("--port", type=int)
@click.pass_obj
def serve_cmd(cfg: AppConfig, host, port):
    """Run the HTTP reward service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(cfg), host=host or cfg.service.host, port=port or cfg.service.port)


if __name__ == "__main__":
    main()
