"""Command-line entry point.

Subcommands: train, encode, decode, mask, stats, sweep, manifest, eval and
serve.  Every subcommand is deterministic given identical inputs, flags and
seeds; seeds default to 42 and are printed in output headers.  Token-id
streams are line-delimited: ``<sequence id><TAB><space-separated ids>`` under
``#``-prefixed header lines.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from prottok import benchtasks, metrics, mlm, tokenizers
from prottok.corpus import Corpus, SplitSpec, corpus_summary, parse_fasta, split_holdout, to_fasta
from prottok.errors import ProttokError
from prottok.vocab import TokenSequence

DEFAULT_SEED = 42
TOKENS_MAGIC = "# prottok tokens v1"
PLAN_MAGIC = "# prottok mask-plan v1"

log = logging.getLogger("prottok")


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, data: bytes | str):
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(data)


def _check_paths(*pairs):
    for a, b in pairs:
        if a and b and os.path.abspath(a) == os.path.abspath(b):
            raise ProttokError(f"input and output paths must differ: {a!r}")


def _load_corpus(path: str, max_len: int) -> Corpus:
    corpus = parse_fasta(_read(path), source=path, max_len=max_len)
    for warning in corpus.warnings:
        log.warning("%s: %s", path, warning)
    return corpus


def _token_lines(tok: tokenizers.Tokenizer, corpus: Corpus, seed: int) -> str:
    lines = [
        TOKENS_MAGIC,
        f"# model: {tok.method} vocab_size={tok.vocab_size}",
        f"# seed: {seed}",
    ]
    for seq in corpus:
        encoded = tok.encode(seq)
        lines.append(f"{seq.id}\t{' '.join(str(i) for i in encoded.ids)}")
    return "\n".join(lines) + "\n"


def _parse_token_lines(text: str, vocab_size: int) -> list[TokenSequence]:
    out = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ProttokError(f"token stream line {n}: expected id<TAB>ids")
        ids = tuple(int(tok) for tok in cols[1].split()) if cols[1] else ()
        out.append(TokenSequence(ids, vocab_size, cols[0]))
    return out


def cmd_train(args) -> int:
    _check_paths((args.infile, args.out))
    if args.method != "per-aa" and args.vocab_size < 33:
        raise ProttokError("vocab-size must be at least 33 for sub-word methods")
    corpus = _load_corpus(args.infile, args.max_len)
    tok = tokenizers.train(args.method, corpus, args.vocab_size)
    model = getattr(tok, "model", None)
    if model is not None and getattr(model, "incomplete", False):
        log.warning("training stopped early; vocabulary size is %d", tok.vocab_size)
    _write(args.out, tok.save())
    print(f"trained {args.method} vocab_size={tok.vocab_size} -> {args.out}")
    return 0


def cmd_encode(args) -> int:
    _check_paths((args.infile, args.out))
    tok = tokenizers.load(_read(args.model))
    corpus = _load_corpus(args.infile, args.max_len)
    text = _token_lines(tok, corpus, args.seed)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_decode(args) -> int:
    _check_paths((args.infile, args.out))
    tok = tokenizers.load(_read(args.model))
    token_seqs = _parse_token_lines(_read(args.infile).decode("utf-8"), tok.vocab_size)
    lines = []
    for ts in token_seqs:
        lines.append(f">{ts.source_id}")
        lines.append(tok.decode(ts))
    text = "\n".join(lines) + "\n" if lines else ""
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_mask(args) -> int:
    _check_paths((args.infile, args.out), (args.infile, args.plan))
    tok = tokenizers.load(_read(args.model))
    token_seqs = _parse_token_lines(_read(args.infile).decode("utf-8"), tok.vocab_size)
    header = [
        TOKENS_MAGIC,
        f"# model: {tok.method} vocab_size={tok.vocab_size}",
        f"# seed: {args.seed}",
        f"# rate: {args.rate}",
    ]
    masked_lines = list(header)
    plan_lines = [PLAN_MAGIC, f"# rate: {args.rate}", f"# seed: {args.seed}"]
    for index, ts in enumerate(token_seqs):
        child_seed = int(np.random.SeedSequence([args.seed, index]).generate_state(1)[0])
        masked, plan = mlm.mask_tokens(ts, args.rate, child_seed)
        masked_lines.append(f"{ts.source_id}\t{' '.join(str(i) for i in masked.ids)}")
        pairs = " ".join(
            f"{p}:{o}" for p, o in zip(plan.masked_positions, plan.original_ids)
        )
        plan_lines.append(f"{ts.source_id}\t{pairs}")
    _write(args.out, "\n".join(masked_lines) + "\n")
    if args.plan:
        _write(args.plan, "\n".join(plan_lines) + "\n")
    return 0


def cmd_stats(args) -> int:
    tok = tokenizers.load(_read(args.model))
    corpus = _load_corpus(args.infile, args.max_len)
    stats = metrics.compression_stats(tok, corpus)
    lines = [
        "# prottok stats v1",
        f"# model: {tok.method} vocab_size={tok.vocab_size}",
        f"# seed: {args.seed}",
        f"tokens_per_residue\t{stats.tokens_per_residue:.17g}",
        f"mean_piece_length\t{stats.mean_piece_length:.17g}",
        "piece_length_histogram\t"
        + " ".join(f"{k}:{v}" for k, v in stats.piece_length_histogram.items()),
    ]
    if args.summary:
        lines.append("# corpus summary (id, length)")
        lines.append(corpus_summary(corpus).rstrip("\n"))
    text = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    if bool(args.train) == bool(args.infile):
        raise ProttokError("provide either --train/--val or --in/--holdout")
    if args.train:
        if not args.val:
            raise ProttokError("--train requires --val")
        c_train = _load_corpus(args.train, args.max_len)
        c_val = _load_corpus(args.val, args.max_len)
    else:
        corpus = _load_corpus(args.infile, args.max_len)
        c_train, c_val = split_holdout(corpus, SplitSpec(args.holdout, args.seed))
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    specs = [(m, 33 if m == "per-aa" else size) for m in methods for size in
             ([33] if m == "per-aa" else sizes)]
    rows = mlm.perplexity_sweep(c_train, c_val, specs, alpha=args.alpha)
    table = mlm.sweep_table(rows, seed_note=f"seed: {args.seed} alpha: {args.alpha}")
    if args.out:
        _write(args.out, table)
    else:
        sys.stdout.write(table)
    if args.report:
        _write(args.report, mlm.sweep_metric_reports(rows))
    return 0


def cmd_manifest(args) -> int:
    manifest = benchtasks.load_manifest(_read(args.path))
    print(
        f"ok: {manifest.task_name} ({manifest.category}, {manifest.kind}, "
        f"metric={manifest.metric})"
    )
    return 0


def _parse_label_file(manifest, path: str) -> list:
    values = []
    for n, line in enumerate(_read(path).decode("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        values.append(benchtasks._parse_label(manifest, line, n))
    return values


def cmd_eval(args) -> int:
    manifest = benchtasks.load_manifest(_read(args.manifest))
    predictions = _parse_label_file(manifest, args.predictions)
    labels = _parse_label_file(manifest, args.labels)
    value = benchtasks.evaluate(manifest, predictions, labels)
    print(f"{manifest.metric}\t{value:.17g}")
    return 0


def cmd_split(args) -> int:
    _check_paths((args.infile, args.train_out), (args.infile, args.val_out))
    corpus = _load_corpus(args.infile, args.max_len)
    train, val = split_holdout(corpus, SplitSpec(args.holdout, args.seed))
    _write(args.train_out, to_fasta(train))
    _write(args.val_out, to_fasta(val))
    print(f"# seed: {args.seed}")
    print(f"train: {len(train)} sequences -> {args.train_out}")
    print(f"validation: {len(val)} sequences -> {args.val_out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from prottok.service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prottok",
        description="Train and evaluate protein sub-word tokenizers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False, infile=True):
        if model:
            p.add_argument("--model", required=True, help="model file")
        if infile:
            p.add_argument("--in", dest="infile", required=True, help="input file")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--max-len", type=int, default=1024)

    p = sub.add_parser("train", help="train a tokenizer on a FASTA corpus")
    p.add_argument("--method", required=True, choices=tokenizers.METHODS)
    p.add_argument("--vocab-size", type=int, default=33)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode", help="FASTA -> token-id lines")
    p.add_argument("--out", default="")
    common(p, model=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="token-id lines -> FASTA")
    p.add_argument("--out", default="")
    common(p, model=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("mask", help="mask token lines and write the plan")
    p.add_argument("--rate", type=float, default=mlm.DEFAULT_MASK_RATE)
    p.add_argument("--out", required=True)
    p.add_argument("--plan", default="")
    common(p, model=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("stats", help="compression statistics for a model on a corpus")
    p.add_argument("--summary", action="store_true", help="append id/length records")
    p.add_argument("--out", default="")
    common(p, model=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="perplexity sweep over methods and sizes")
    p.add_argument("--methods", default="bpe,unigram")
    p.add_argument("--sizes", default="50,100,200,400,800,1600,3200")
    p.add_argument("--train", default="", help="training FASTA")
    p.add_argument("--val", default="", help="validation FASTA")
    p.add_argument("--in", dest="infile", default="", help="single FASTA to split")
    p.add_argument("--holdout", type=int, default=0)
    p.add_argument("--alpha", type=float, default=mlm.DEFAULT_ALPHA)
    p.add_argument("--out", default="")
    p.add_argument("--report", default="")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-len", type=int, default=1024)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("manifest", help="manifest utilities")
    msub = p.add_subparsers(dest="manifest_command", required=True)
    mv = msub.add_parser("validate", help="validate a manifest file")
    mv.add_argument("path")
    mv.set_defaults(func=cmd_manifest)

    p = sub.add_parser("eval", help="score predictions against labels per a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("split", help="reserve a hold-out validation set")
    p.add_argument("--holdout", type=int, required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--val-out", required=True)
    common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8756)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("PROTTOK_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProttokError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
