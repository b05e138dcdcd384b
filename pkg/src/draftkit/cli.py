"""Command line entry point.

One binary, two-level subcommands, reproducible by construction: every
subcommand takes ``--seed`` (fixed default, never time-based), accepts a
``key = value`` config file that command line flags override, can print
its fully resolved configuration with ``--dump-config``, and writes a
run manifest next to its primary output.  Exit codes: 0 success, 1 usage
or validation error, 2 data error (the message names the offending file
and line where one exists).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Iterable, NoReturn, Sequence

from . import DEFAULT_SEED, __version__
from .analysis import characteristic_terms, dataset_stats, linguistic_profile
from .corpus import (
    CorpusFilterConfig,
    DraftPair,
    RecordError,
    Sentence,
    filter_final_sentences,
    filter_training_sentences,
    iter_checked_lines,
    load_pairs,
    write_pairs,
)
from .lm import SMOOTHINGS, ArpaFormatError, load_arpa, save_arpa, train
from .metrics import evaluate
from .noising import NoiseConfig, ReplacementVocab, noise_sentence
from .quality import FilterConfig, filter_pairs, load_submissions, score_worker, spell_check

SCHEMA_VERSION = 1

_NOISE_DEFAULTS = NoiseConfig()
_CORPUS_DEFAULTS = CorpusFilterConfig()


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; this artifact
    reserves 2 for data errors, so usage errors exit 1 instead."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _read_text_lines(path: Path | str, *, keep_blank: bool) -> list[str]:
    lines = [text for _, text in iter_checked_lines(path)]
    if keep_blank:
        return lines
    return [line for line in lines if line.strip()]


def _read_word_set(path: Path | str) -> frozenset[str]:
    words = set()
    for _, line in iter_checked_lines(path):
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


def _write_json(path: Path | str, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_lines(path: Path | str, lines: Iterable[str]) -> None:
    lines = list(lines)
    text = "\n".join(lines) + ("\n" if lines else "")
    Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# subcommand handlers; each returns (input paths, output paths)


def _cmd_corpus_extract(args) -> tuple[list, list]:
    inputs = [args.input]
    excluded: frozenset[str] = frozenset()
    if args.exclude is not None:
        excluded = frozenset(_read_text_lines(args.exclude, keep_blank=False))
        inputs.append(args.exclude)
    cfg = CorpusFilterConfig(
        min_chars=args.min_chars,
        max_chars=args.max_chars,
        min_tokens=args.min_tokens,
        max_tokens=args.max_tokens,
        min_alpha_ratio=args.min_alpha_ratio,
        excluded=excluded,
    )
    keep = filter_final_sentences if args.profile == "final" else filter_training_sentences
    sentences = (
        Sentence.from_text(text) for _, text in iter_checked_lines(args.input)
    )
    _write_lines(args.out, (s.text for s in keep(sentences, cfg)))
    return inputs, [args.out]


def _cmd_lm_train(args) -> tuple[list, list]:
    sentences = [
        Sentence.from_text(text) for text in _read_text_lines(args.input, keep_blank=False)
    ]
    model = train(
        sentences,
        order=args.order,
        smoothing=args.smoothing,
        k=args.k,
        unk_floor=args.unk_floor,
    )
    save_arpa(model, args.out)
    return [args.input], [args.out]


def _cmd_lm_ppl(args) -> tuple[list, list]:
    model = load_arpa(args.model)
    rows = []
    logprob_total = 0.0
    event_total = 0
    for line_no, text in iter_checked_lines(args.input):
        if not text.strip():
            continue
        s = Sentence.from_text(text)
        logprob = model.sentence_logprob(s.tokens)
        rows.append(
            {
                "line": line_no,
                "tokens": len(s.tokens),
                "logprob10": logprob,
                "ppl": model.perplexity(s.tokens),
            }
        )
        logprob_total += logprob
        event_total += len(s.tokens) + 1
    report = {
        "schema_version": SCHEMA_VERSION,
        "model": str(args.model),
        "sentence_count": len(rows),
        "corpus_ppl": 10.0 ** (-logprob_total / event_total) if event_total else None,
        "sentences": rows,
    }
    _write_json(args.report, report)
    return [args.model, args.input], [args.report]


# Noising workers receive their shared state through the pool initializer
# so per-record payloads stay small and picklable.
_NOISE_STATE: dict = {}


def _init_noise_worker(cfg: NoiseConfig, vocab: ReplacementVocab | None) -> None:
    _NOISE_STATE["cfg"] = cfg
    _NOISE_STATE["vocab"] = vocab


def _noise_record(item: tuple[int, str]) -> tuple[str, str]:
    index, text = item
    pair = noise_sentence(
        Sentence.from_text(text), _NOISE_STATE["cfg"], _NOISE_STATE["vocab"], index=index
    )
    return pair.draft.text, pair.reference.text


def _load_vocab_counts(path: Path | str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for line_no, line in iter_checked_lines(path):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise RecordError(path, line_no, f"expected token<TAB>count, got {len(fields)} fields")
        try:
            counts[fields[0]] = int(fields[1])
        except ValueError as err:
            raise RecordError(path, line_no, f"bad count: {fields[1]!r}") from err
    return counts


def _cmd_noise_run(args) -> tuple[list, list]:
    cfg = NoiseConfig(
        delete_p=args.delete_p,
        replace_p=args.replace_p,
        replace_vocab_min_count=args.replace_vocab_min_count,
        shuffle_k=args.shuffle_k,
        mask_fraction_max=args.mask_fraction_max,
        seed=args.seed,
    )
    inputs = [args.input]
    vocab: ReplacementVocab | None = None
    if args.vocab_counts is not None:
        vocab = ReplacementVocab(
            _load_vocab_counts(args.vocab_counts),
            min_count=cfg.replace_vocab_min_count,
            weighted=args.weighted_vocab,
        )
        inputs.append(args.vocab_counts)
    elif cfg.replace_p > 0:
        vocab = ReplacementVocab.from_wordlist(
            min_count=cfg.replace_vocab_min_count, weighted=args.weighted_vocab
        )
    items = list(enumerate(_read_text_lines(args.input, keep_blank=False)))
    if args.jobs > 1 and items:
        chunksize = max(1, math.ceil(len(items) / (args.jobs * 4)))
        with ProcessPoolExecutor(
            max_workers=args.jobs, initializer=_init_noise_worker, initargs=(cfg, vocab)
        ) as pool:
            results = list(pool.map(_noise_record, items, chunksize=chunksize))
    else:
        _init_noise_worker(cfg, vocab)
        results = [_noise_record(item) for item in items]
    pairs = (DraftPair.from_texts(draft, reference) for draft, reference in results)
    write_pairs(args.out, pairs, fmt="tsv")
    return inputs, [args.out]


def _cmd_quality_score_workers(args) -> tuple[list, list]:
    lines = []
    for sub in load_submissions(args.input):
        verdict = score_worker(sub)
        record = {"worker_id": sub.worker_id, **verdict.to_json_dict()}
        lines.append(json.dumps(record, sort_keys=True))
    _write_lines(args.out, lines)
    return [args.input], [args.out]


def _cmd_quality_filter_pairs(args) -> tuple[list, list]:
    pairs = load_pairs(args.input, fmt="tsv")
    inputs = [args.input]
    if args.stopwords is not None:
        cfg = FilterConfig(alpha=args.alpha, stopwords=_read_word_set(args.stopwords))
        inputs.append(args.stopwords)
    else:
        cfg = FilterConfig(alpha=args.alpha)
    kept, removed = filter_pairs(pairs, cfg)
    write_pairs(args.kept, kept, fmt="tsv")
    _write_lines(
        args.removed,
        (f"{p.draft.text}\t{p.reference.text}\t{reason}" for p, reason in removed),
    )
    return inputs, [args.kept, args.removed]


def _cmd_eval_run(args) -> tuple[list, list]:
    texts = {}
    for name, path in (("src", args.src), ("hyp", args.hyp), ("ref", args.ref)):
        texts[name] = _read_text_lines(path, keep_blank=True)
    shortest = min(len(lines) for lines in texts.values())
    for name, path in (("src", args.src), ("hyp", args.hyp), ("ref", args.ref)):
        if len(texts[name]) != shortest:
            raise RecordError(path, shortest + 1, "line counts differ across src/hyp/ref")
    sources = [Sentence.from_text(t) for t in texts["src"]]
    hypotheses = [Sentence.from_text(t) for t in texts["hyp"]]
    references = [Sentence.from_text(t) for t in texts["ref"]]
    if args.spellcheck_hyp:
        hypotheses = [
            Sentence.from_text(spell_check(h).corrected_text) for h in hypotheses
        ]
    inputs = [args.src, args.hyp, args.ref]
    model = None
    if args.lm is not None:
        model = load_arpa(args.lm)
        inputs.append(args.lm)
    report = evaluate(sources, hypotheses, references, lm=model)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "spellcheck_hyp": args.spellcheck_hyp,
        "lm": str(args.lm) if args.lm is not None else None,
        **report.to_json_dict(),
    }
    _write_json(args.report, payload)
    return inputs, [args.report]


def _cmd_stats_dataset(args) -> tuple[list, list]:
    pairs = load_pairs(args.input, fmt="tsv")
    stats = dataset_stats(pairs)
    payload = {"schema_version": SCHEMA_VERSION, **asdict(stats)}
    inputs = [args.input]
    if args.lm is not None:
        profile = linguistic_profile(pairs, load_arpa(args.lm))
        payload["draft_profile"] = asdict(profile.draft)
        payload["reference_profile"] = asdict(profile.reference)
        inputs.append(args.lm)
    _write_json(args.report, payload)
    return inputs, [args.report]


def _cmd_analysis_terms(args) -> tuple[list, list]:
    pairs = load_pairs(args.input, fmt="tsv")
    terms = characteristic_terms(pairs, top_k=args.top_k, epsilon=args.epsilon)
    lines = ["term\tdraft_per10k\tref_per10k\tlog_ratio"]
    lines.extend(
        f"{t.term}\t{t.draft_freq!r}\t{t.reference_freq!r}\t{t.log_ratio!r}" for t in terms
    )
    _write_lines(args.out, lines)
    return [args.input], [args.out]


# --------------------------------------------------------------------------
# parser assembly


def _build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=DEFAULT_SEED, help="global random seed (default %(default)s)"
    )
    common.add_argument(
        "--jobs", type=int, default=1, help="worker processes; output is independent of this"
    )
    common.add_argument(
        "--config", type=Path, default=None, help="key = value file; explicit flags win"
    )
    common.add_argument(
        "--dump-config", action="store_true", help="print the resolved configuration and exit"
    )

    parser = _Parser(prog="draftkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"draftkit {__version__}")
    groups = parser.add_subparsers(dest="group", required=True, metavar="group")
    registry: dict[str, _Parser] = {}

    def leaf(group, name: str, run: Callable, help_text: str) -> _Parser:
        sub = group.add_parser(name, parents=[common], help=help_text)
        label = f"{group_names[id(group)]} {name}"
        sub.set_defaults(_run=run, _leaf=label)
        registry[label] = sub
        return sub

    group_names: dict[int, str] = {}

    def group(name: str, help_text: str):
        g = groups.add_parser(name, help=help_text)
        sub = g.add_subparsers(dest="command", required=True, metavar="command")
        group_names[id(sub)] = name
        return sub

    corpus = group("corpus", "sentence selection and pair file utilities")
    p = leaf(corpus, "extract", _cmd_corpus_extract, "filter a sentence-per-line file")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--profile", choices=("final", "training"), default="final",
                   help="final: char-length and character-class rules; training: token rules")
    p.add_argument("--min-chars", type=int, default=_CORPUS_DEFAULTS.min_chars)
    p.add_argument("--max-chars", type=int, default=_CORPUS_DEFAULTS.max_chars)
    p.add_argument("--min-tokens", type=int, default=_CORPUS_DEFAULTS.min_tokens)
    p.add_argument("--max-tokens", type=int, default=_CORPUS_DEFAULTS.max_tokens)
    p.add_argument("--min-alpha-ratio", type=float, default=_CORPUS_DEFAULTS.min_alpha_ratio)
    p.add_argument("--exclude", type=Path, default=None,
                   help="sentences that must not appear in training output")

    lm = group("lm", "n-gram language models")
    p = leaf(lm, "train", _cmd_lm_train, "train a backoff model and save it as ARPA")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--smoothing", choices=sorted(SMOOTHINGS), default="interpolated-kneser-ney")
    p.add_argument("--k", type=float, default=1.0, help="additive constant for add-k smoothing")
    p.add_argument("--unk-floor", type=float, default=None,
                   help="minimum unigram probability for the unknown token")
    p = leaf(lm, "ppl", _cmd_lm_ppl, "score a sentence-per-line file under a saved model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--report", type=Path, required=True)

    noise = group("noise", "synthetic draft generation")
    p = leaf(noise, "run", _cmd_noise_run, "noise a sentence-per-line file into a pair TSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--delete-p", type=float, default=_NOISE_DEFAULTS.delete_p)
    p.add_argument("--replace-p", type=float, default=_NOISE_DEFAULTS.replace_p)
    p.add_argument("--shuffle-k", type=int, default=_NOISE_DEFAULTS.shuffle_k)
    p.add_argument("--mask-fraction-max", type=float, default=_NOISE_DEFAULTS.mask_fraction_max)
    p.add_argument("--replace-vocab-min-count", type=int,
                   default=_NOISE_DEFAULTS.replace_vocab_min_count)
    p.add_argument("--vocab-counts", type=Path, default=None,
                   help="token<TAB>count file for the replacement vocabulary")
    p.add_argument("--weighted-vocab", action="store_true",
                   help="sample replacements proportionally to counts")

    quality = group("quality", "crowdwork scoring and pair filtering")
    p = leaf(quality, "score-workers", _cmd_quality_score_workers,
             "emit one verdict JSON per submission")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p = leaf(quality, "filter-pairs", _cmd_quality_filter_pairs,
             "split a pair TSV by content overlap")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--kept", type=Path, required=True)
    p.add_argument("--removed", type=Path, required=True)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--stopwords", type=Path, default=None,
                   help="replacement stopword list, one token per line")

    evaluation = group("eval", "system output scoring")
    p = leaf(evaluation, "run", _cmd_eval_run, "score hypotheses against references")
    p.add_argument("--src", type=Path, required=True)
    p.add_argument("--hyp", type=Path, required=True)
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--lm", type=Path, default=None, help="ARPA model for perplexity columns")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--spellcheck-hyp", action="store_true",
                   help="spell-check hypotheses before scoring")

    stats = group("stats", "dataset statistics")
    p = leaf(stats, "dataset", _cmd_stats_dataset, "headline pair statistics as JSON")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--lm", type=Path, default=None,
                   help="add per-side linguistic profiles under this ARPA model")
    p.add_argument("--report", type=Path, required=True)

    analysis = group("analysis", "contrastive dataset analysis")
    p = leaf(analysis, "terms", _cmd_analysis_terms, "characteristic terms per side as TSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=1.0)

    return parser, registry


_CONFIG_SKIP = {"help", "config", "dump_config", "_run", "_leaf"}


def _config_types(sub: _Parser) -> dict[str, Callable[[str], object]]:
    types: dict[str, Callable[[str], object]] = {}
    # argparse keeps the registered actions on the parser; their dest and
    # type are exactly the mapping a config file key needs.
    for action in sub._actions:
        if action.dest in _CONFIG_SKIP or action.dest == argparse.SUPPRESS:
            continue
        if isinstance(action.const, bool):
            types[action.dest] = _parse_bool
        else:
            types[action.dest] = action.type or str
    return types


def _read_config(path: Path, sub: _Parser) -> dict[str, object]:
    types = _config_types(sub)
    overrides: dict[str, object] = {}
    for line_no, raw in iter_checked_lines(path):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise RecordError(path, line_no, "expected key = value")
        key = key.strip().replace("-", "_")
        if key not in types:
            raise RecordError(path, line_no, f"unknown configuration key {key!r}")
        try:
            overrides[key] = types[key](value.strip())
        except (TypeError, ValueError) as err:
            raise RecordError(path, line_no, f"bad value for {key}: {err}") from err
    return overrides


def _resolved_config(args: argparse.Namespace) -> dict[str, object]:
    resolved = {}
    for key, value in vars(args).items():
        if key in _CONFIG_SKIP or key in ("group", "command"):
            continue
        resolved[key] = str(value) if isinstance(value, Path) else value
    return dict(sorted(resolved.items()))


def _write_manifest(args: argparse.Namespace, inputs: list, outputs: list, duration: float) -> None:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": args._leaf,
        "config": _resolved_config(args),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": args.seed,
        "version": __version__,
        "duration_seconds": round(duration, 6),
    }
    _write_json(Path(f"{outputs[0]}.manifest.json"), manifest)


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser, registry = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config is not None:
            sub = registry[args._leaf]
            overrides = _read_config(args.config, sub)
            sub.set_defaults(**overrides)
            # Re-parse so explicitly passed flags still win over the file.
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except RecordError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 1
    if args.dump_config:
        print(json.dumps(_resolved_config(args), indent=2, sort_keys=True))
        return 0
    start = time.perf_counter()
    try:
        inputs, outputs = args._run(args)
    except (RecordError, ArpaFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    if outputs:
        _write_manifest(args, inputs, outputs, time.perf_counter() - start)
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
