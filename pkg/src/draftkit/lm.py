"""Backoff n-gram language model with ARPA-format serialization.

Probabilities and backoff weights are stored and reported as log10 values.
Scoring walks the usual backoff chain: use the longest stored n-gram,
otherwise multiply in the context's backoff weight and drop to the next
shorter context.  Out-of-vocabulary tokens are mapped to the unknown
symbol before lookup, and every sentence is scored including its
end-of-sentence event.
"""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from pathlib import Path

from .corpus import Sentence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

KNESER_NEY = "interpolated-kneser-ney"
ADD_K = "add-k"
SMOOTHINGS = (KNESER_NEY, ADD_K)

# Conventional placeholder for the start marker, which is never predicted.
_BOS_PLACEHOLDER = -99.0

_COUNT_LINE = re.compile(r"ngram\s+(\d+)=(\d+)")
_SECTION_LINE = re.compile(r"\\(\d+)-grams:")


class ArpaFormatError(ValueError):
    """Raised when an ARPA file cannot be parsed."""


class NGramModel:
    """Log10 conditional probability table with backoff weights."""

    def __init__(
        self,
        order: int,
        logprob_table: dict[tuple[str, ...], float],
        backoff_table: dict[tuple[str, ...], float],
    ) -> None:
        if order < 1:
            raise ValueError("order must be at least 1")
        self.order = order
        self._logprob = dict(logprob_table)
        self._backoff = dict(backoff_table)
        self.vocab: frozenset[str] = frozenset(
            gram[0] for gram in self._logprob if len(gram) == 1
        )

    def __repr__(self) -> str:
        return f"NGramModel(order={self.order}, ngrams={len(self._logprob)})"

    def ngrams(self, order: int) -> list[tuple[str, ...]]:
        """Stored n-grams of one order, sorted for stable iteration."""
        if not 1 <= order <= self.order:
            raise ValueError(f"order must lie in [1, {self.order}]")
        return sorted(gram for gram in self._logprob if len(gram) == order)

    def _as_known(self, token: str) -> str:
        return token if (token,) in self._logprob else UNK

    def logprob(self, word: str, history: Sequence[str] = ()) -> float:
        """Log10 P(word | history), history trimmed to the model order."""
        word = self._as_known(word)
        if self.order > 1:
            context = tuple(self._as_known(t) for t in tuple(history)[-(self.order - 1) :])
        else:
            context = ()
        acc = 0.0
        while True:
            stored = self._logprob.get(context + (word,))
            if stored is not None:
                return acc + stored
            if not context:
                raise ValueError(f"model has no unigram entry for {word!r}")
            acc += self._backoff.get(context, 0.0)
            context = context[1:]

    def sentence_logprob(self, tokens: Sequence[str]) -> float:
        """Log10 probability of the token sequence plus its end event."""
        keep = max(self.order - 1, 1)
        history: tuple[str, ...] = (BOS,)
        total = 0.0
        for token in (*tokens, EOS):
            total += self.logprob(token, history)
            history = (*history, token)[-keep:]
        return total

    def perplexity(self, tokens: Sequence[str]) -> float:
        tokens = tuple(tokens)
        events = len(tokens) + 1
        return 10.0 ** (-self.sentence_logprob(tokens) / events)


def sentence_logprob(model: NGramModel, s: Sentence) -> float:
    return model.sentence_logprob(s.tokens)


def perplexity(model: NGramModel, s: Sentence) -> float:
    return model.perplexity(s.tokens)


def train(
    corpus: Iterable[Sentence],
    order: int = 5,
    smoothing: str = KNESER_NEY,
    *,
    k: float = 1.0,
    unk_floor: float | None = None,
) -> NGramModel:
    """Count padded n-grams and build a smoothed backoff model.

    ``k`` applies to add-k smoothing only.  ``unk_floor`` optionally lifts
    the unigram mass of the unknown symbol to the given probability,
    rescaling the rest of the unigram distribution to keep it proper.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if smoothing not in SMOOTHINGS:
        raise ValueError(f"unknown smoothing {smoothing!r}; expected one of {SMOOTHINGS}")
    if smoothing == ADD_K and k <= 0:
        raise ValueError("k must be positive")
    if unk_floor is not None and not 0.0 <= unk_floor < 1.0:
        raise ValueError("unk_floor must lie in [0, 1)")
    sentences = [tuple(s.tokens) for s in corpus]
    if not sentences:
        raise ValueError("cannot train on an empty corpus")

    raw: list[Counter[tuple[str, ...]]] = [Counter() for _ in range(order + 1)]
    words: Counter[str] = Counter()
    for tokens in sentences:
        words.update(tokens)
        seq = (BOS, *tokens, EOS)
        for n in range(1, order + 1):
            counts = raw[n]
            for i in range(len(seq) - n + 1):
                counts[seq[i : i + n]] += 1

    vpred = sorted((set(words) | {EOS, UNK}) - {BOS})
    if smoothing == ADD_K:
        logp, bows = _build_add_k(raw, words, vpred, order, k, unk_floor)
    else:
        logp, bows = _build_kneser_ney(raw, words, vpred, order, unk_floor)
    return NGramModel(order, logp, bows)


def _chain_prob(
    logp: dict[tuple[str, ...], float],
    bows: dict[tuple[str, ...], float],
    history: tuple[str, ...],
    word: str,
) -> float:
    """Linear conditional probability over partially built tables."""
    acc = 0.0
    while True:
        stored = logp.get(history + (word,))
        if stored is not None:
            return 10.0 ** (acc + stored)
        if not history:
            raise KeyError(word)
        acc += bows.get(history, 0.0)
        history = history[1:]


def _discount(counts: Iterable[int]) -> float:
    """Absolute discount n1/(n1 + 2 n2), falling back to 0.5."""
    n1 = n2 = 0
    for c in counts:
        if c == 1:
            n1 += 1
        elif c == 2:
            n2 += 1
    if n1 == 0 or n2 == 0:
        return 0.5
    return n1 / (n1 + 2 * n2)


def _floored(unigram: dict[str, float], unk_floor: float | None) -> dict[str, float]:
    if unk_floor is None or unigram[UNK] >= unk_floor:
        return unigram
    scale = (1.0 - unk_floor) / (1.0 - unigram[UNK])
    out = {w: p * scale for w, p in unigram.items()}
    out[UNK] = unk_floor
    return out


def _group_by_context(
    table: dict[tuple[str, ...], int] | Counter[tuple[str, ...]],
) -> dict[tuple[str, ...], dict[str, int]]:
    contexts: dict[tuple[str, ...], dict[str, int]] = defaultdict(dict)
    for gram, count in table.items():
        contexts[gram[:-1]][gram[-1]] = count
    return contexts


def _build_add_k(
    raw: list[Counter[tuple[str, ...]]],
    words: Counter[str],
    vpred: list[str],
    order: int,
    k: float,
    unk_floor: float | None,
) -> tuple[dict[tuple[str, ...], float], dict[tuple[str, ...], float]]:
    # Unigram events are word tokens only; the end marker and the unknown
    # symbol draw just the additive share k / (N + k|V|).
    v_size = len(vpred)
    n_events = sum(words.values())
    unigram = {w: (words.get(w, 0) + k) / (n_events + k * v_size) for w in vpred}
    unigram = _floored(unigram, unk_floor)
    logp = {(w,): math.log10(p) for w, p in unigram.items()}
    logp[(BOS,)] = _BOS_PLACEHOLDER
    bows: dict[tuple[str, ...], float] = {}
    for n in range(2, order + 1):
        for history, seen in _group_by_context(raw[n]).items():
            total = sum(seen.values())
            denominator = total + k * v_size
            covered = 0.0
            # Sorted accumulation keeps float sums independent of corpus order.
            for word in sorted(seen):
                logp[history + (word,)] = math.log10((seen[word] + k) / denominator)
                covered += _chain_prob(logp, bows, history[1:], word)
            leftover = k * (v_size - len(seen)) / denominator
            if leftover > 0.0:
                bows[history] = math.log10(leftover / (1.0 - covered))
            else:
                bows[history] = -math.inf
    return logp, bows


def _kn_unigram_dist(counts: dict[str, int], v_size: int) -> dict[str, float]:
    total = sum(counts.values())
    if total == 0:
        return {w: 1.0 / v_size for w in counts}
    positive = [c for c in counts.values() if c > 0]
    discount = _discount(positive)
    share = discount * len(positive) / total / v_size
    return {w: max(c - discount, 0.0) / total + share for w, c in counts.items()}


def _build_kneser_ney(
    raw: list[Counter[tuple[str, ...]]],
    words: Counter[str],
    vpred: list[str],
    order: int,
    unk_floor: float | None,
) -> tuple[dict[tuple[str, ...], float], dict[tuple[str, ...], float]]:
    # Lower orders count distinct left extensions instead of raw occurrences;
    # n-grams anchored at the start marker keep raw counts since nothing can
    # ever precede them.
    adjusted: list[dict[tuple[str, ...], int]] = [dict() for _ in range(order + 1)]
    adjusted[order] = dict(raw[order])
    for n in range(order - 1, 0, -1):
        continuations = Counter(gram[1:] for gram in raw[n + 1])
        adjusted[n] = {
            gram: (count if gram[0] == BOS else continuations.get(gram, 0))
            for gram, count in raw[n].items()
        }

    if order == 1:
        uni_counts = {w: words.get(w, 0) for w in vpred}
    else:
        uni_counts = {w: adjusted[1].get((w,), 0) for w in vpred}
    unigram = _floored(_kn_unigram_dist(uni_counts, len(vpred)), unk_floor)
    logp = {(w,): math.log10(p) for w, p in unigram.items()}
    logp[(BOS,)] = _BOS_PLACEHOLDER
    bows: dict[tuple[str, ...], float] = {}
    for n in range(2, order + 1):
        discount = _discount(adjusted[n].values())
        for history, seen in _group_by_context(adjusted[n]).items():
            total = sum(seen.values())
            interp = discount * len(seen) / total
            for word, count in seen.items():
                lower = _chain_prob(logp, bows, history[1:], word)
                p = max(count - discount, 0.0) / total + interp * lower
                logp[history + (word,)] = math.log10(p)
            bows[history] = math.log10(interp)
    return logp, bows


def _format_value(value: float) -> str:
    if value == _BOS_PLACEHOLDER:
        return "-99"
    return repr(value)


def save_arpa(model: NGramModel, path: str | Path) -> None:
    """Write the model as UTF-8 ARPA text with sorted, stable sections."""
    sections = {n: model.ngrams(n) for n in range(1, model.order + 1)}
    lines = ["\\data\\"]
    lines.extend(f"ngram {n}={len(sections[n])}" for n in sorted(sections))
    for n in sorted(sections):
        lines.extend(("", f"\\{n}-grams:"))
        for gram in sections[n]:
            fields = [_format_value(model._logprob[gram]), " ".join(gram)]
            bow = model._backoff.get(gram)
            if bow is not None:
                fields.append(_format_value(bow))
            lines.append("\t".join(fields))
    lines.extend(("", "\\end\\", ""))
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def load_arpa(path: str | Path) -> NGramModel:
    """Parse an ARPA file, validating section structure and entry counts."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    n_lines = len(lines)

    def skip_blanks(i: int) -> int:
        while i < n_lines and not lines[i].strip():
            i += 1
        return i

    i = skip_blanks(0)
    if i >= n_lines or lines[i].strip() != "\\data\\":
        raise ArpaFormatError("expected \\data\\ header")
    i += 1
    declared: dict[int, int] = {}
    while i < n_lines and lines[i].strip():
        match = _COUNT_LINE.fullmatch(lines[i].strip())
        if match is None:
            raise ArpaFormatError(f"bad count line in \\data\\ section: {lines[i]!r}")
        declared[int(match[1])] = int(match[2])
        i += 1
    if not declared:
        raise ArpaFormatError("no n-gram counts declared in \\data\\ section")

    logp: dict[tuple[str, ...], float] = {}
    bows: dict[tuple[str, ...], float] = {}
    seen_sections: set[int] = set()
    ended = False
    i = skip_blanks(i)
    while i < n_lines:
        header = lines[i].strip()
        if header == "\\end\\":
            ended = True
            break
        match = _SECTION_LINE.fullmatch(header)
        if match is None:
            raise ArpaFormatError(f"unexpected line {header!r}")
        n = int(match[1])
        if n not in declared:
            raise ArpaFormatError(f"section {n}-grams not declared in header")
        i += 1
        count = 0
        while i < n_lines and lines[i].strip() and not lines[i].startswith("\\"):
            entry = lines[i]
            fields = entry.split("\t")
            if len(fields) not in (2, 3):
                raise ArpaFormatError(f"malformed entry in {n}-grams section: {entry!r}")
            try:
                value = float(fields[0])
                bow = float(fields[2]) if len(fields) == 3 else None
            except ValueError:
                raise ArpaFormatError(
                    f"malformed entry in {n}-grams section: {entry!r}"
                ) from None
            gram = tuple(fields[1].split(" "))
            if len(gram) != n or not all(gram):
                raise ArpaFormatError(f"entry arity mismatch in {n}-grams section: {entry!r}")
            logp[gram] = value
            if bow is not None:
                bows[gram] = bow
            count += 1
            i += 1
        if count != declared[n]:
            raise ArpaFormatError(
                f"{n}-grams section lists {count} entries, header promises {declared[n]}"
            )
        seen_sections.add(n)
        i = skip_blanks(i)
    if not ended:
        raise ArpaFormatError("missing \\end\\ marker")
    missing = [n for n in sorted(declared) if n not in seen_sections and declared[n] > 0]
    if missing:
        raise ArpaFormatError(f"missing {missing[0]}-grams section")
    return NGramModel(max(declared), logp, bows)
