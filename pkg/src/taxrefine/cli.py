"""Command line front end: clean, train, refine, eval, and the end-to-end
pipeline.  All behaviour lives in the library modules; this file only
parses flags, moves bytes, and maps errors to exit codes (0 success,
1 stage failure, 2 usage/configuration error)."""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from taxrefine import refinement as ref
from taxrefine import __version__
from taxrefine import evaluation
from taxrefine import euclidean as euc
from taxrefine import hyperbolic as hyp
from taxrefine import relations as rel
from taxrefine import taxonomy as tax


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


def _read_lines(path: str, stage: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{stage}: input file does not exist: {path}")
    return p.read_text(encoding="utf-8").splitlines()


def _write_lines(path: str, lines: list[str]) -> None:
    if path == "-":
        for line in lines:
            print(line)
    else:
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


# ---------------------------------------------------------------------------
# pipeline configuration
# ---------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    taxonomy: str = ""
    relations_domain: str = ""
    relations_general: str = ""
    gold: str = ""
    vectors: str = ""
    out_dir: str = "."
    model_output: str = ""
    root: str = ""
    backend: str = "poincare"
    min_freq_domain: int = 3
    min_freq_general: int = 5
    dim: int = 50
    epochs: int = 400
    learning_rate: float = 0.1
    negatives: int = 10
    burn_in_epochs: int = 10
    burn_in_rate_divisor: float = 10.0
    seed: int = 0

    def header_hash(self) -> str:
        """Hash of the behaviour-affecting configuration; artifact output
        locations are excluded so reruns into fresh directories stay
        byte-identical."""
        skip = {"out_dir", "model_output"}
        payload = "\n".join(
            f"{f.name}={getattr(self, f.name)}" for f in fields(self) if f.name not in skip
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def parse_config_file(lines: list[str]) -> dict[str, str]:
    """`key = value` lines; blank lines and # comments are ignored."""
    values: dict[str, str] = {}
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"config line {line_no}: expected `key = value`, got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig()
    if args.config:
        raw = parse_config_file(_read_lines(args.config, "config"))
        valid = {f.name: f.type for f in fields(PipelineConfig)}
        for key, value in raw.items():
            if key not in valid:
                raise UsageError(f"config: unknown key {key!r}")
            current = getattr(config, key)
            caster = type(current)
            try:
                setattr(config, key, caster(value))
            except ValueError as exc:
                raise UsageError(f"config: bad value for {key!r}: {value!r}") from exc
    for f in fields(PipelineConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(config, f.name, flag)
    if not config.taxonomy:
        raise UsageError("pipeline: a taxonomy path is required")
    if not config.root:
        raise UsageError("pipeline: a root term is required")
    if not config.relations_domain and config.backend == "poincare":
        raise UsageError("pipeline: a domain relations path is required")
    if config.backend == "euclid" and not config.vectors:
        raise UsageError("pipeline: the euclid backend requires a vectors path")
    for name in ("taxonomy", "relations_domain", "relations_general", "gold", "vectors"):
        path = getattr(config, name)
        if path and not Path(path).is_file():
            raise UsageError(f"pipeline: {name} file does not exist: {path}")
    return config


def _stage_seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def run_pipeline(config: PipelineConfig) -> int:
    header = f"# seed={config.seed} config={config.header_hash()}"
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed_cycles_pre, seed_refine = _stage_seeds(config.seed, 2)

    taxonomy = tax.parse_taxonomy(_read_lines(config.taxonomy, "taxonomy"), root=config.root)

    cleaned = None
    if config.relations_domain:
        domain = rel.parse_relations(_read_lines(config.relations_domain, "relations"))
        cleaned = rel.clean(domain, set(taxonomy.vocabulary), config.min_freq_domain)
        if config.relations_general:
            general = rel.parse_relations(_read_lines(config.relations_general, "relations"))
            general = rel.clean(general, set(taxonomy.vocabulary), config.min_freq_general)
            cleaned = rel.merge(cleaned, general)
        _write_lines(str(out_dir / "relations_cleaned.tsv"), [header] + rel.serialize_relations(cleaned))

    if config.backend == "poincare":
        train_config = hyp.TrainConfig(
            dim=config.dim,
            epochs=config.epochs,
            learning_rate=config.learning_rate,
            negatives=config.negatives,
            burn_in_epochs=config.burn_in_epochs,
            burn_in_rate_divisor=config.burn_in_rate_divisor,
            seed=config.seed,
        )
        try:
            model = hyp.train(cleaned, train_config)
        except ValueError as exc:
            raise StageError("train", exc)
        model_path = config.model_output or str(out_dir / "model.txt")
        _write_lines(model_path, [header] + hyp.serialize_model(model))
        backend: ref.Backend = ref.PoincareBackend(model)
    elif config.backend == "euclid":
        vectors = euc.load_vectors(
            _read_lines(config.vectors, "vectors"), vocab_filter=set(taxonomy.vocabulary)
        )
        backend = ref.EuclideanBackend(vectors)
    else:
        raise UsageError(f"pipeline: unknown backend {config.backend!r}")

    sanitized = tax.sanitize_root(taxonomy)
    sanitized, pre_removed = tax.break_cycles(sanitized, seed_cycles_pre)
    if pre_removed:
        print(f"pipeline: removed {len(pre_removed)} cycle edge(s) before refinement", file=sys.stderr)
    try:
        refined, log = ref.refine(sanitized, backend, seed_refine)
    except ValueError as exc:
        raise StageError("refine", exc)

    _write_lines(str(out_dir / "taxonomy_refined.tsv"), [header] + tax.serialize_taxonomy(refined))
    _write_lines(str(out_dir / "refinement_log.tsv"), [header] + log.to_tsv_lines())

    if config.gold:
        gold = tax.parse_taxonomy(_read_lines(config.gold, "gold"), root=config.root)
        try:
            report = evaluation.edge_f1(refined, gold)
        except ValueError as exc:
            raise StageError("eval", exc)
        _write_lines(str(out_dir / "eval_report.tsv"), [header] + evaluation.report_tsv_lines(report))
        for line in evaluation.report_text_lines(report):
            print(line)
    return 0


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_clean(args: argparse.Namespace) -> int:
    vocab = tax.read_vocabulary(_read_lines(args.vocab, "clean"))
    relations = rel.parse_relations(_read_lines(args.relations, "clean"))
    cleaned = rel.clean(relations, vocab, args.min_freq)
    if args.merge:
        general = rel.parse_relations(_read_lines(args.merge, "clean"))
        cleaned = rel.merge(cleaned, rel.clean(general, vocab, args.merge_min_freq))
    _write_lines(args.output, rel.serialize_relations(cleaned))
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    relations = rel.parse_relations(_read_lines(args.relations, "train"))
    config = hyp.TrainConfig(
        dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        negatives=args.negatives,
        burn_in_epochs=args.burn_in_epochs,
        burn_in_rate_divisor=args.burn_in_rate_divisor,
        seed=args.seed,
    )
    try:
        model = hyp.train(relations, config)
    except ValueError as exc:
        raise StageError("train", exc)
    _write_lines(args.output, hyp.serialize_model(model))
    print(
        f"trained {len(model)} terms, dim {model.dim}, "
        f"loss {model.loss_history[0]:.4f} -> {model.loss_history[-1]:.4f}",
        file=sys.stderr,
    )
    return 0


def _make_backend(args: argparse.Namespace, vocabulary: frozenset[str]) -> ref.Backend:
    lines = _read_lines(args.model, "refine")
    if args.backend == "poincare":
        return ref.PoincareBackend(hyp.load_model(lines))
    return ref.EuclideanBackend(euc.load_vectors(lines, vocab_filter=set(vocabulary)))


def _cmd_refine(args: argparse.Namespace) -> int:
    taxonomy = tax.parse_taxonomy(_read_lines(args.taxonomy, "refine"), root=args.root)
    backend = _make_backend(args, taxonomy.vocabulary)
    sanitized = tax.sanitize_root(taxonomy)
    sanitized, pre_removed = tax.break_cycles(sanitized, args.seed)
    if pre_removed:
        print(f"refine: removed {len(pre_removed)} cycle edge(s) before refinement", file=sys.stderr)
    try:
        refined, log = ref.refine(sanitized, backend, args.seed, threshold_override=args.threshold_override)
    except ValueError as exc:
        raise StageError("refine", exc)
    _write_lines(args.output, tax.serialize_taxonomy(refined))
    if args.log:
        _write_lines(args.log, log.to_tsv_lines())
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    system = tax.parse_taxonomy(_read_lines(args.system, "eval"), root=args.root)
    gold = tax.parse_taxonomy(_read_lines(args.gold, "eval"), root=args.root)
    try:
        report = evaluation.edge_f1(system, gold)
    except ValueError as exc:
        raise StageError("eval", exc)
    lines = evaluation.report_text_lines(report)
    tsv = evaluation.report_tsv_lines(report)
    if args.compare:
        other = tax.parse_taxonomy(_read_lines(args.compare, "eval"), root=args.root)
        other_report = evaluation.edge_f1(other, gold)
        verdict = evaluation.mcnemar(system, other, gold)
        lines += [""] + ["[compare]"] + evaluation.report_text_lines(other_report)
        lines += [""] + evaluation.mcnemar_text_lines(verdict)
        tsv += [f"compare_{line}" for line in evaluation.report_tsv_lines(other_report)]
        tsv += [
            f"mcnemar_b\t{verdict.b}",
            f"mcnemar_c\t{verdict.c}",
            f"mcnemar_statistic\t{verdict.statistic:.6f}",
            f"mcnemar_significant_05\t{str(verdict.significant_at_05).lower()}",
        ]
    for line in lines:
        print(line)
    if args.tsv:
        _write_lines(args.tsv, tsv)
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    return run_pipeline(build_pipeline_config(args))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxrefine",
        description="Refine noisy taxonomies with hyperbolic or Euclidean word embeddings.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_clean = sub.add_parser("clean", help="clean candidate IS-A triples")
    p_clean.add_argument("relations", help="domain relations TSV (hyponym, hypernym, frequency)")
    p_clean.add_argument("--vocab", required=True, help="taxonomy TSV supplying the vocabulary")
    p_clean.add_argument("--min-freq", type=int, default=3)
    p_clean.add_argument("--merge", help="general-corpus relations TSV to merge in")
    p_clean.add_argument("--merge-min-freq", type=int, default=5)
    p_clean.add_argument("--output", "-o", default="-")
    p_clean.set_defaults(func=_cmd_clean)

    p_train = sub.add_parser("train", help="train ball embeddings from cleaned relations")
    p_train.add_argument("relations", help="cleaned relations TSV")
    p_train.add_argument("--dim", type=int, default=50)
    p_train.add_argument("--epochs", type=int, default=400)
    p_train.add_argument("--learning-rate", type=float, default=0.1)
    p_train.add_argument("--negatives", type=int, default=10)
    p_train.add_argument("--burn-in-epochs", type=int, default=10)
    p_train.add_argument("--burn-in-rate-divisor", type=float, default=10.0)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--output", "-o", required=True)
    p_train.set_defaults(func=_cmd_train)

    p_refine = sub.add_parser("refine", help="refine a taxonomy with an embedding model")
    p_refine.add_argument("--taxonomy", required=True)
    p_refine.add_argument("--root", required=True)
    p_refine.add_argument("--backend", choices=["poincare", "euclid"], default="poincare")
    p_refine.add_argument("--model", required=True, help="embedding model file")
    p_refine.add_argument("--threshold-override", type=float, default=None)
    p_refine.add_argument("--seed", type=int, default=0)
    p_refine.add_argument("--log", help="write the refinement log TSV here")
    p_refine.add_argument("--output", "-o", default="-")
    p_refine.set_defaults(func=_cmd_refine)

    p_eval = sub.add_parser("eval", help="score a taxonomy against a gold standard")
    p_eval.add_argument("--system", required=True)
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--root", required=True)
    p_eval.add_argument("--compare", help="second system for a McNemar comparison")
    p_eval.add_argument("--tsv", help="write a machine-readable report here")
    p_eval.set_defaults(func=_cmd_eval)

    p_pipe = sub.add_parser("pipeline", help="clean, train, refine, evaluate in one run")
    p_pipe.add_argument("--config", help="key = value configuration file")
    p_pipe.add_argument("--taxonomy")
    p_pipe.add_argument("--relations-domain", dest="relations_domain")
    p_pipe.add_argument("--relations-general", dest="relations_general")
    p_pipe.add_argument("--gold")
    p_pipe.add_argument("--vectors", help="word vector file for the euclid backend")
    p_pipe.add_argument("--out-dir", dest="out_dir")
    p_pipe.add_argument("--model-output", dest="model_output")
    p_pipe.add_argument("--root")
    p_pipe.add_argument("--backend", choices=["poincare", "euclid"])
    p_pipe.add_argument("--min-freq-domain", dest="min_freq_domain", type=int)
    p_pipe.add_argument("--min-freq-general", dest="min_freq_general", type=int)
    p_pipe.add_argument("--dim", type=int)
    p_pipe.add_argument("--epochs", type=int)
    p_pipe.add_argument("--learning-rate", dest="learning_rate", type=float)
    p_pipe.add_argument("--negatives", type=int)
    p_pipe.add_argument("--burn-in-epochs", dest="burn_in_epochs", type=int)
    p_pipe.add_argument("--burn-in-rate-divisor", dest="burn_in_rate_divisor", type=float)
    p_pipe.add_argument("--seed", type=int)
    p_pipe.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (tax.ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
