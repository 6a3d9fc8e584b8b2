"""Command line entry point: ``ptpgen generate|vocab|cloze|stats``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import DEFAULT_GRID_N, DEFAULT_TOP_K, DEFAULT_VOCAB_SIZE, TEMPLATE_IDS, PipelineConfig, default_workers
from .errors import NoSuchSlot, PTPError
from .ingest import iter_lines, parse_record
from .pipeline import compute_stats_file, run
from .prompt import MASK_TOKEN, PromptedSample, make_cloze
from .vocab import build_vocabulary


def _template(value: str) -> str:
    tid = value.upper()
    if tid not in TEMPLATE_IDS:
        raise argparse.ArgumentTypeError(f"unknown template {value!r}; choose from {', '.join(TEMPLATE_IDS)}")
    return tid


def _augmentation(value: str):
    if value.lstrip().startswith("{"):
        try:
            return json.loads(value)
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"bad JSON affine spec: {e}") from None
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptpgen", description="Compile position-guided prompt corpora.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="append block prompts to every caption")
    gen.add_argument("--input", required=True)
    gen.add_argument("--output", required=True)
    gen.add_argument("--rejects", help="defaults to <output>.rejects.jsonl")
    gen.add_argument("--grid", type=int, default=DEFAULT_GRID_N)
    gen.add_argument("--top-k", type=int, default=DEFAULT_TOP_K)
    gen.add_argument("--mode", choices=("detector", "embedding"), default="detector")
    gen.add_argument("--template", type=_template, default="BLOCK_HAS_O")
    gen.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--partial-ok", action=argparse.BooleanOptionalAction, default=True)
    gen.add_argument("--emit-x", action=argparse.BooleanOptionalAction, default=True)
    gen.add_argument("--max-sentences", type=int)
    gen.add_argument("--augment", type=_augmentation, help="policy name or JSON affine spec")
    gen.add_argument("--embeddings")
    gen.add_argument("--workers", type=int)
    gen.add_argument("--chunk-size", type=int, default=512)

    voc = sub.add_parser("vocab", help="mine the keyword/phrase vocabulary from captions")
    voc.add_argument("--input", required=True, help="record corpus, or plain text with --text")
    voc.add_argument("--output", required=True)
    voc.add_argument("--text", action="store_true", help="input holds one caption per line")
    voc.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    voc.add_argument("--workers", type=int)

    clz = sub.add_parser("cloze", help="mask positions and/or objects of a generated corpus")
    clz.add_argument("--input", required=True)
    clz.add_argument("--output", required=True)
    clz.add_argument("--mask", choices=("P", "O", "both"), default="both")
    clz.add_argument("--mask-token", default=MASK_TOKEN)

    st = sub.add_parser("stats", help="count images, captions and block occupancy of a generated corpus")
    st.add_argument("--input", required=True)
    st.add_argument("--rejects")
    return parser


def _captions(path, plain: bool):
    with open(path, "rb") as fh:
        for offset, raw in iter_lines(fh):
            if plain:
                yield raw.decode("utf-8").strip()
            else:
                yield from parse_record(raw, offset).captions


def cmd_generate(args) -> int:
    config = PipelineConfig(
        grid_n=args.grid,
        top_k=args.top_k,
        mode=args.mode,
        template_id=args.template,
        vocab_size=args.vocab_size,
        global_seed=args.seed,
        partial_ok=args.partial_ok,
        emit_x=args.emit_x,
        max_sentences=args.max_sentences,
        augmentation=args.augment,
        workers=args.workers or default_workers(),
        chunk_size=args.chunk_size,
        input_path=args.input,
        output_path=args.output,
        rejects_path=args.rejects,
        embeddings_path=args.embeddings,
    )
    stats = run(config)
    print(json.dumps(stats.as_dict()))
    return 0


def cmd_vocab(args) -> int:
    vocab = build_vocabulary(
        _captions(args.input, args.text), args.vocab_size, workers=args.workers or default_workers()
    )
    vocab.save(args.output)
    print(json.dumps({"phrases": len(vocab)}))
    return 0


def cmd_cloze(args) -> int:
    kinds = ("P", "O") if args.mask == "both" else (args.mask,)
    written = skipped = 0
    with open(args.input, encoding="utf-8") as src, open(args.output, "w", encoding="utf-8", newline="\n") as dst:
        for line in src:
            if not line.strip():
                continue
            sample = PromptedSample.from_dict(json.loads(line))
            for kind in kinds:
                try:
                    cloze = make_cloze(sample, kind, args.mask_token)
                except NoSuchSlot:
                    skipped += 1
                    continue
                dst.write(json.dumps(cloze.to_dict(), ensure_ascii=False, separators=(",", ":")))
                dst.write("\n")
                written += 1
    print(json.dumps({"written": written, "skipped": skipped}))
    return 0


def cmd_stats(args) -> int:
    print(json.dumps(compute_stats_file(args.input, args.rejects).as_dict()))
    return 0


COMMANDS = {"generate": cmd_generate, "vocab": cmd_vocab, "cloze": cmd_cloze, "stats": cmd_stats}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (PTPError, OSError, ValueError) as e:
        print(f"ptpgen: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
