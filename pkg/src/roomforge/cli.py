"""Command-line entry point: ``roomforge <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench as bench_mod
from .constraints import ConstraintError, ConstraintSpec, Exhausted, UnknownClassError, refurnish
from .corpus import CorpusError, load_corpus, save_corpus
from .export import Provenance, SceneError, export_scene, generate, import_scene, read_scene, scene_catalog
from .params import ParamsError, abutments_to_doc, load_params, motifs_to_doc, save_params
from .patterns import mine_abutments, mine_motifs
from .placement import Overflow
from .render import render_svg
from .report import class_stats, format_report
from .synth import default_synthetic_spec, generate_synthetic_corpus, load_spec
from .training import TrainingError, train

log = logging.getLogger("roomforge")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2


def _corpus_validate(args) -> int:
    try:
        corpus = load_corpus(args.path)
    except CorpusError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    n_inst = sum(len(r.instances) for r in corpus.rooms)
    print(f"ok: {len(corpus)} rooms, {n_inst} instances, {len(corpus.catalog)} models, "
          f"{corpus.dropped_unlabeled} unlabeled rooms dropped")
    return EXIT_OK


def _corpus_synth(args) -> int:
    spec = load_spec(args.spec) if args.spec else default_synthetic_spec()
    if args.rooms is not None:
        spec = replace(spec, n_rooms=args.rooms)
    corpus = generate_synthetic_corpus(spec, args.seed)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} rooms to {args.out}")
    return EXIT_OK


def _train(args) -> int:
    params = train(load_corpus(args.corpus))
    save_params(params, args.out)
    print(f"wrote parameters to {args.out} (digest {params.digest()[:12]})")
    return EXIT_OK


def _mine(args) -> int:
    corpus = load_corpus(args.corpus)
    abut = mine_abutments(corpus)
    motifs = mine_motifs(corpus, exclude=abut.claimed())
    doc = {
        "format": "roomforge-patterns",
        "version": 1,
        "motifs": motifs_to_doc(motifs.motifs),
        "abutments": abutments_to_doc(abut.patterns),
    }
    Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    print(f"wrote {len(motifs.motifs)} motifs and {len(abut.patterns)} abutment patterns to {args.out}")
    return EXIT_OK


def _stats_report(args) -> int:
    sys.stdout.write(format_report(class_stats(load_params(args.params))))
    return EXIT_OK


def _load_constraints(path: str | None) -> ConstraintSpec:
    if not path:
        return ConstraintSpec()
    return ConstraintSpec.from_doc(json.loads(Path(path).read_text()))


def _sample(args) -> int:
    params = load_params(args.params)
    spec = _load_constraints(args.constraints)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        seed = args.seed + k
        layout, prov = generate(params, seed, spec, args.max_attempts, args.threads)
        path = out / f"scene_{seed:06d}.json"
        path.write_bytes(export_scene(layout, params.catalog, prov))
        print(path)
    return EXIT_OK


def _refurnish(args) -> int:
    params = load_params(args.params)
    source, _ = read_scene(args.room)
    result = refurnish(params, source, args.seed, args.max_attempts, args.threads)
    spec = ConstraintSpec(room_type=source.room_type.value, boundary=source.boundary,
                          openings=source.openings, traversability=True)
    data = export_scene(result.layout, params.catalog, Provenance(params.digest(), args.seed, spec))
    Path(args.out).write_bytes(data)
    print(f"{args.out} ({result.attempts} attempts)")
    return EXIT_OK


def _render(args) -> int:
    data = Path(args.scene).read_bytes()
    layout, _ = import_scene(data)
    catalog = load_params(args.params).catalog if args.params else scene_catalog(data)
    Path(args.out).write_text(render_svg(layout, catalog, args.scale))
    print(args.out)
    return EXIT_OK


def _bench(args) -> int:
    rows = bench_mod.run_bench(load_params(args.params), runs=args.runs, seed=args.seed, max_attempts=args.max_attempts)
    sys.stdout.write(bench_mod.format_table(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roomforge", description="Learn furniture layouts and sample new rooms.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    corpus = sub.add_parser("corpus", help="corpus utilities").add_subparsers(dest="corpus_command", required=True)
    p = corpus.add_parser("validate", help="load and check a corpus document")
    p.add_argument("path")
    p.set_defaults(func=_corpus_validate)
    p = corpus.add_parser("synth", help="generate a synthetic corpus with planted parameters")
    p.add_argument("--spec", help="synthetic corpus spec (JSON); built-in default when omitted")
    p.add_argument("--rooms", type=int, help="override the number of rooms")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_corpus_synth)

    p = sub.add_parser("train", help="learn parameters from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_train)

    p = sub.add_parser("mine", help="mine motifs and abutment patterns")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_mine)

    stats = sub.add_parser("stats", help="parameter summaries").add_subparsers(dest="stats_command", required=True)
    p = stats.add_parser("report", help="per-class wall and alignment probabilities")
    p.add_argument("--params", required=True)
    p.set_defaults(func=_stats_report)

    def sampling_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--params", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--max-attempts", type=int, default=10_000)

    p = sub.add_parser("sample", help="sample scene documents")
    sampling_flags(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--constraints", help="constraint spec (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_sample)

    p = sub.add_parser("refurnish", help="new furniture for an existing room")
    sampling_flags(p)
    p.add_argument("--room", required=True, help="scene document of the source room")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_refurnish)

    p = sub.add_parser("render", help="overhead SVG plan of a scene document")
    p.add_argument("scene")
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=float, default=50.0, help="pixels per meter")
    p.add_argument("--params", help="take model dimensions from these parameters")
    p.set_defaults(func=_render)

    p = sub.add_parser("bench", help="per-constraint timing table")
    p.add_argument("--params", required=True)
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-attempts", type=int, default=10_000)
    p.set_defaults(func=_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except Exhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (CorpusError, ParamsError, SceneError, ConstraintError, UnknownClassError, TrainingError,
            Overflow, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
