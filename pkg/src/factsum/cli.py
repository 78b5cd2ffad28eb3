"""Batch command line: ``factsum <command> --input ... --output ...``.

Stages hand off through files::

    stats      dataset.jsonl                -> sentence vs fact unit statistics
    segment    dataset.jsonl                -> facts.jsonl
    oracle     facts.jsonl                  -> labels.jsonl (+ oracle ROUGE report)
    train      labels.jsonl                 -> model.npz (+ loss curve CSV)
    summarize  facts.jsonl + model.npz      -> summaries.txt
    evaluate   summaries.txt + facts.jsonl  -> ROUGE-1/2/L F1
    positions  summaries.txt | labels.jsonl -> 4-bucket position histogram CSV
    mask       facts.jsonl                  -> 0/1 rows of one document's graph mask

Exit codes: 0 ok, 1 usage error, 2 data error (including per-record
errors), 3 internal error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .corpus import corpus_stats, iter_dataset, load_dataset, write_text_atomic
from .encoder import (EncoderConfig, TrainingConfig, load_checkpoint, make_example,
                      predict, save_checkpoint, train, write_curve)
from .errors import DataError, DatasetError, FactsumError, UsageError
from .hierseq import build_mask, build_sequence, format_mask
from .pipeline import (body_facts, facts_record, fact_ordinals, format_summaries, lower,
                       mean_rouge, oracle_record, oracle_selection_tokens, parse_summaries,
                       read_jsonl, summary_tokens, write_jsonl)
from .segmenter import SegmenterConfig, flatten
from .select import BUCKETS, SelectionConfig, position_histogram, rank_and_select

log = logging.getLogger("factsum")

CONFIG_ENV = "FACTSUM_CONFIG"


class RunContext:
    """Collects the manifest of one command invocation."""

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.inputs, self.outputs = [], []
        self.record_errors = 0
        self.warnings = 0
        self.t0 = time.perf_counter()
        self.started = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")

    def error(self, msg):
        self.record_errors += 1
        print(f"error: {msg}", file=sys.stderr)

    def warn(self, msg):
        self.warnings += 1
        print(f"warning: {msg}", file=sys.stderr)

    def manifest(self, status):
        return {
            "command": self.args.command,
            "config": self.config,
            "inputs": [str(p) for p in self.inputs],
            "outputs": [str(p) for p in self.outputs],
            "seed": self.args.seed,
            "started": self.started,
            "wall_clock_s": round(time.perf_counter() - self.t0, 3),
            "exit_code": status,
            "version": __version__,
        }

    def write_manifest(self, status):
        path = self.args.manifest
        if path is None:
            out = getattr(self.args, "output", None)
            base = Path(out).parent if out else Path(".")
            path = base / "factsum_runs.jsonl"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(self.manifest(status), sort_keys=True) + "\n")


# ---------------------------------------------------------------- configuration

def load_config(args) -> dict:
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg = {"segmenter": {}, "encoder": {}, "training": {}, "selection": {}}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc.msg}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config sections: {sorted(unknown)}")
        for k, v in loaded.items():
            cfg[k].update(v)
    a = vars(args)
    seg_flags = {"split_labels": "split_labels", "merge_labels": "merge_labels",
                 "conj_distance": "conj_distance_threshold",
                 "min_unit_length": "min_unit_length", "max_clause_length": "max_clause_length"}
    for flag, key in seg_flags.items():
        if a.get(flag) is not None:
            cfg["segmenter"][key] = a[flag]
    enc_flags = {"d_model": "d_model", "layers": "n_layers", "heads": "n_heads", "d_ff": "d_ff",
                 "max_len": "max_len", "word_scope": "word_scope",
                 "classifier_mode": "classifier_mode", "mask_mode": "mask_mode",
                 "vocab_size": "vocab_size"}
    for flag, key in enc_flags.items():
        if a.get(flag) is not None:
            cfg["encoder"][key] = a[flag]
    if a.get("no_segment"):
        cfg["encoder"]["use_segment"] = False
    if a.get("no_position"):
        cfg["encoder"]["use_position"] = False
    tr_flags = {"steps": "max_steps", "batch_size": "batch_size", "base_lr": "base_lr",
                "warmup": "warmup", "checkpoint_every": "checkpoint_every"}
    for flag, key in tr_flags.items():
        if a.get(flag) is not None:
            cfg["training"][key] = a[flag]
    if args.seed is not None:
        cfg["training"]["seed"] = args.seed
    if a.get("k") is not None:
        cfg["selection"]["k"] = a["k"]
    if a.get("no_trigram_blocking"):
        cfg["selection"]["trigram_blocking"] = False
    return cfg


def segmenter_config(cfg) -> SegmenterConfig:
    return SegmenterConfig.from_dict(cfg["segmenter"])


def encoder_config(cfg) -> EncoderConfig:
    return EncoderConfig.from_dict(cfg["encoder"])


def selection_config(cfg) -> SelectionConfig:
    unknown = set(cfg["selection"]) - {"k", "trigram_blocking"}
    if unknown:
        raise UsageError(f"unknown selection options: {sorted(unknown)}")
    return SelectionConfig(**cfg["selection"])


def _emit(ctx, path, text):
    if path:
        write_text_atomic(path, text)
        ctx.outputs.append(path)
    else:
        sys.stdout.write(text)


def _load_records(ctx, path):
    ctx.inputs.append(path)
    records = [rec for _, rec in read_jsonl(path)]
    if not records:
        raise UsageError(f"{path} contains no records")
    return records


# ---------------------------------------------------------------- commands

def cmd_stats(args, ctx):
    records = load_dataset(args.input)
    ctx.inputs.append(args.input)
    stats = corpus_stats(records, segmenter_config(ctx.config))
    text = "granularity,num,len\n" + "".join(
        f"{name},{num:.4f},{ln:.4f}\n" for name, num, ln in stats.rows())
    if args.output:
        _emit(ctx, args.output, text)
    print(stats.format_table())


def cmd_segment(args, ctx):
    cfg = segmenter_config(ctx.config)
    ctx.inputs.append(args.input)
    out = []
    seen_any = False
    for lineno, item in iter_dataset(args.input):
        seen_any = True
        if isinstance(item, DataError):
            ctx.error(str(item))
            continue
        out.append(facts_record(item, cfg))
    if not seen_any:
        raise UsageError(f"{args.input} contains no records")
    write_jsonl(args.output, out)
    ctx.outputs.append(args.output)
    n_facts = sum(len(r["facts"]) for r in out)
    print(f"segmented {len(out)} documents into {n_facts} facts")


def cmd_oracle(args, ctx):
    records = _load_records(ctx, args.input)
    out, pairs = [], []
    for rec in records:
        if not rec.get("summary"):
            ctx.warn(f"record {rec.get('id')!r} has no gold summary, skipped")
            continue
        lab = oracle_record(rec, args.mode)
        out.append(lab)
        pairs.append((oracle_selection_tokens(lab), summary_tokens(lab)))
    write_jsonl(args.output, out)
    ctx.outputs.append(args.output)
    report = {"mode": args.mode, **mean_rouge(pairs)}
    if args.report:
        _emit(ctx, args.report, json.dumps(report, sort_keys=True, indent=1) + "\n")
    print(f"oracle ({args.mode}): R-1 {report['r1']:.2f}  R-2 {report['r2']:.2f}  "
          f"R-L {report['rl']:.2f}  over {report['documents']} documents")


def _examples(records, enc):
    exs = []
    for rec in records:
        if "fact_labels" not in rec:
            raise DatasetError(f"record {rec.get('id')!r} has no oracle labels; run 'oracle' first")
        seq = build_sequence(body_facts(rec), enc.max_len)
        exs.append(make_example(rec["id"], seq, rec["fact_labels"], enc.word_scope))
    return exs


def cmd_train(args, ctx):
    enc = encoder_config(ctx.config)
    tcfg = TrainingConfig.from_dict(ctx.config["training"])
    records = _load_records(ctx, args.input)
    exs = _examples(records, enc)
    res = train(exs, enc, tcfg, checkpoint_dir=args.checkpoint_dir)
    save_checkpoint(args.output, res.params, enc, res.vocab, step=tcfg.max_steps,
                    extra={"training": tcfg.to_dict()})
    ctx.outputs.append(args.output)
    ctx.outputs.extend(res.checkpoints)
    curve_path = args.loss_csv or str(Path(args.output).with_suffix(".loss.csv"))
    write_curve(curve_path, res.curve)
    ctx.outputs.append(curve_path)
    last = res.curve[-1][2] if res.curve else float("nan")
    print(f"trained {tcfg.max_steps} steps on {len(exs)} documents, final loss {last:.5f}")


def cmd_summarize(args, ctx):
    records = _load_records(ctx, args.input)
    sel = selection_config(ctx.config)
    items = []
    if args.lead:
        for rec in records:
            facts = [f for fs in body_facts(rec)[:args.lead] for f in fs]
            items.append((rec["id"], facts))
    else:
        if not args.checkpoint:
            raise UsageError("summarize needs --checkpoint (or --lead N)")
        ctx.inputs.append(args.checkpoint)
        params, enc, vocab, _ = load_checkpoint(args.checkpoint)
        for start in range(0, len(records), 32):
            chunk = records[start:start + 32]
            seqs = [build_sequence(body_facts(r), enc.max_len) for r in chunk]
            masks = [build_mask(s, enc.word_scope) for s in seqs]
            for rec, seq, scores in zip(chunk, seqs, predict(params, seqs, masks, enc, vocab)):
                facts = flatten(body_facts(rec))[:seq.n_facts]
                picked = rank_and_select(scores, facts, sel)
                items.append((rec["id"], [facts[i] for i in picked]))
    write_text_atomic(args.output, format_summaries(items))
    ctx.outputs.append(args.output)
    print(f"wrote summaries for {len(items)} documents")


def cmd_evaluate(args, ctx):
    ctx.inputs.append(args.input)
    cands = parse_summaries(args.input)
    refs = {rec["id"]: rec for rec in _load_records(ctx, args.reference)}
    pairs = []
    for doc_id, lines in cands.items():
        if doc_id not in refs:
            ctx.error(f"summary for unknown document {doc_id!r}")
            continue
        ref = summary_tokens(refs[doc_id])
        if not ref:
            ctx.warn(f"document {doc_id!r} has no gold summary, skipped")
            continue
        cand = [t for _, text in lines for t in lower(text.split())]
        pairs.append((cand, ref))
    report = mean_rouge(pairs)
    if args.output:
        _emit(ctx, args.output, json.dumps(report, sort_keys=True, indent=1) + "\n")
    print(f"ROUGE-1 {report['r1']:.2f}  ROUGE-2 {report['r2']:.2f}  "
          f"ROUGE-L {report['rl']:.2f}  ({report['documents']} documents)")


def cmd_positions(args, ctx):
    positions, totals = [], []
    if args.labels:
        for rec in _load_records(ctx, args.labels):
            ys = rec["fact_labels"]
            positions.append([i + 1 for i, y in enumerate(ys) if y])
            totals.append(len(ys))
    else:
        if not (args.input and args.reference):
            raise UsageError("positions needs --labels, or --input with --reference")
        ctx.inputs.append(args.input)
        refs = {rec["id"]: rec for rec in _load_records(ctx, args.reference)}
        for doc_id, lines in parse_summaries(args.input).items():
            if doc_id not in refs:
                ctx.error(f"summary for unknown document {doc_id!r}")
                continue
            ords = fact_ordinals(refs[doc_id])
            try:
                positions.append([ords[key] for key, _ in lines])
            except KeyError as exc:
                ctx.error(f"document {doc_id!r}: no fact {exc.args[0]}")
                positions.append([])
            totals.append(len(ords))
    hist = position_histogram(positions, totals)
    text = ",".join(BUCKETS) + "\n" + ",".join(f"{v:.2f}" for v in hist) + "\n"
    _emit(ctx, args.output, text)


def cmd_mask(args, ctx):
    enc = encoder_config(ctx.config)
    records = _load_records(ctx, args.input)
    if args.doc is None:
        rec = records[0]
    else:
        rec = next((r for r in records if r["id"] == args.doc), None)
        if rec is None:
            raise UsageError(f"no document {args.doc!r} in {args.input}")
    seq = build_sequence(body_facts(rec), enc.max_len)
    _emit(ctx, args.output, format_mask(build_mask(seq, enc.word_scope)))


COMMANDS = {
    "stats": cmd_stats, "segment": cmd_segment, "oracle": cmd_oracle, "train": cmd_train,
    "summarize": cmd_summarize, "evaluate": cmd_evaluate, "positions": cmd_positions,
    "mask": cmd_mask,
}


# ---------------------------------------------------------------- argument parsing

def _labels(text):
    return [s.strip() for s in text.split(",") if s.strip()]


class _Parser(argparse.ArgumentParser):
    # argparse's default status 2 would collide with the data-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--manifest", help="append the run manifest here "
                        "(default: factsum_runs.jsonl next to the output)")
    common.add_argument("--strict", action="store_true", help="treat warnings as errors")
    common.add_argument("-v", "--verbose", action="store_true")

    seg = argparse.ArgumentParser(add_help=False)
    seg.add_argument("--split-labels", type=_labels)
    seg.add_argument("--merge-labels", type=_labels)
    seg.add_argument("--conj-distance", type=int)
    seg.add_argument("--min-unit-length", type=int)
    seg.add_argument("--max-clause-length", type=int)

    enc = argparse.ArgumentParser(add_help=False)
    enc.add_argument("--d-model", type=int)
    enc.add_argument("--layers", type=int)
    enc.add_argument("--heads", type=int)
    enc.add_argument("--d-ff", type=int)
    enc.add_argument("--max-len", type=int)
    enc.add_argument("--vocab-size", type=int)
    enc.add_argument("--word-scope", choices=["global", "within_fact"])
    enc.add_argument("--classifier-mode", choices=["f", "d+f", "s+f", "d+s+f"])
    enc.add_argument("--mask-mode", choices=["additive", "multiplicative"])
    enc.add_argument("--no-segment", action="store_true", help="drop segment embeddings")
    enc.add_argument("--no-position", action="store_true", help="drop position embeddings")

    sel = argparse.ArgumentParser(add_help=False)
    sel.add_argument("--k", type=int)
    sel.add_argument("--no-trigram-blocking", action="store_true")

    p = _Parser(prog="factsum", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stats", parents=[common, seg], help="unit statistics of a dataset")
    s.add_argument("--input", required=True)
    s.add_argument("--output", help="CSV output")

    s = sub.add_parser("segment", parents=[common, seg], help="split documents into facts")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)

    s = sub.add_parser("oracle", parents=[common], help="oracle labels + oracle ROUGE")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--mode", choices=["fact", "sentence"], default="fact")
    s.add_argument("--report", help="JSON oracle ROUGE report")

    s = sub.add_parser("train", parents=[common, enc], help="train the fact classifier")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True, help="checkpoint (.npz)")
    s.add_argument("--loss-csv")
    s.add_argument("--checkpoint-dir")
    s.add_argument("--steps", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--base-lr", type=float)
    s.add_argument("--warmup", type=int)
    s.add_argument("--checkpoint-every", type=int)

    s = sub.add_parser("summarize", parents=[common, sel], help="select summary facts")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--checkpoint")
    s.add_argument("--lead", type=int, metavar="N", help="Lead-N baseline instead of a model")

    s = sub.add_parser("evaluate", parents=[common], help="ROUGE of summaries against gold")
    s.add_argument("--input", required=True, help="summaries file")
    s.add_argument("--reference", required=True, help="facts or labels file")
    s.add_argument("--output", help="JSON report")

    s = sub.add_parser("positions", parents=[common], help="position histogram")
    s.add_argument("--input", help="summaries file")
    s.add_argument("--reference", help="facts file matching --input")
    s.add_argument("--labels", help="labels file (oracle positions)")
    s.add_argument("--output", help="CSV output")

    s = sub.add_parser("mask", parents=[common, enc], help="dump one document's graph mask")
    s.add_argument("--input", required=True)
    s.add_argument("--doc")
    s.add_argument("--output")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx = None
    status = 0
    try:
        ctx = RunContext(args, load_config(args))
        COMMANDS[args.command](args, ctx)
        if ctx.record_errors:
            status = DataError.exit_code
        elif args.strict and ctx.warnings:
            status = UsageError.exit_code
    except FactsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        status = DataError.exit_code
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc!r}", file=sys.stderr)
        status = 3
    if ctx is not None:
        ctx.write_manifest(status)
    return status


if __name__ == "__main__":
    sys.exit(main())
