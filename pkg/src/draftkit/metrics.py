"""Sentence- and corpus-level measures for judging revised drafts.

Surface metrics (character edit distance, BLEU, ROUGE-L) sit next to
edit-level precision/recall, a rule-based grammaticality score, Flesch
reading ease, and boolean style flags for passive voice and close word
repetition.  ``evaluate`` runs everything over aligned sentence lists
and returns one report with per-pair records plus corpus aggregates.

All functions are pure; the heavy character DP switches to a vectorized
row formulation for long inputs.
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Callable, Container, Iterable, Sequence

import numpy as np

from .corpus import Sentence
from .resources import load_participles, load_stopwords, load_wordlist

#: Above this size product the numpy row DP wins over the pure loop.
_NUMPY_MIN_PRODUCT = 1024


def levenshtein_char(a: str, b: str) -> int:
    """Minimal number of character insertions, deletions, substitutions."""
    # Shared affixes never change the optimum; trimming keeps the DP
    # small for the near-identical strings revision work produces.
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    a, b = a[lo:hi_a], b[lo:hi_b]
    if not a or not b:
        return len(a) + len(b)
    if len(a) * len(b) < _NUMPY_MIN_PRODUCT:
        return _lev_py(a, b)
    return _lev_numpy(a, b)


def _lev_py(a: str, b: str) -> int:
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _lev_numpy(a: str, b: str) -> int:
    """Row DP over code points with whole-row vector updates.

    The insertion closure row[j] = min over j' <= j of cand[j'] + (j - j')
    is computed as a running minimum of cand[j'] - j' plus j back.
    """
    if len(b) > len(a):
        a, b = b, a
    if not b:
        return len(a)
    b_codes = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32)
    cols = np.arange(len(b_codes) + 1, dtype=np.int64)
    row = cols.copy()
    cand = np.empty_like(row)
    for i, ca in enumerate(a, start=1):
        cand[0] = i
        np.minimum(row[1:] + 1, row[:-1] + (b_codes != ord(ca)), out=cand[1:])
        cand -= cols
        np.minimum.accumulate(cand, out=cand)
        cand += cols
        row, cand = cand, row
    return int(row[-1])


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    if len(tokens) < order:
        return Counter()
    return Counter(zip(*(tokens[i:] for i in range(order))))


def bleu(
    hypotheses: Sequence[Sentence],
    references: Sequence[Sentence],
    *,
    max_order: int = 4,
    epsilon: float = 1e-4,
) -> float:
    """Corpus BLEU over n-gram orders 1..max_order with brevity penalty.

    Smoothing: an order with candidate n-grams but zero matches scores
    epsilon/total; an order with no candidate n-grams at all (every
    hypothesis shorter than the order) is dropped from the geometric
    mean, so a perfect match of short sentences still scores 1.0.
    """
    if not hypotheses or not references:
        raise ValueError("bleu needs at least one hypothesis/reference pair")
    if len(hypotheses) != len(references):
        raise ValueError(
            f"got {len(hypotheses)} hypotheses for {len(references)} references"
        )
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp.tokens)
        ref_len += len(ref.tokens)
        for order in range(1, max_order + 1):
            h_counts = _ngram_counts(hyp.tokens, order)
            if not h_counts:
                break
            r_counts = _ngram_counts(ref.tokens, order)
            totals[order - 1] += sum(h_counts.values())
            matches[order - 1] += sum(
                min(count, r_counts[gram])
                for gram, count in h_counts.items()
                if gram in r_counts
            )
    if totals[0] == 0:
        return 0.0
    log_sum = 0.0
    orders_used = 0
    for matched, total in zip(matches, totals):
        if total == 0:
            continue
        log_sum += math.log((matched if matched else epsilon) / total)
        orders_used += 1
    brevity = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return brevity * math.exp(log_sum / orders_used)


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if ca == cb else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(h: Sentence, r: Sentence, *, beta: float = 1.2) -> float:
    """Sentence-level ROUGE-L: an LCS F-measure weighted toward recall.

    beta follows the common summarization setting of 1.2.  An empty
    sentence on either side scores 0.0 by convention.
    """
    if not h.tokens or not r.tokens:
        return 0.0
    lcs = _lcs_len(h.tokens, r.tokens)
    if lcs == 0:
        return 0.0
    precision = lcs / len(h.tokens)
    recall = lcs / len(r.tokens)
    return (1 + beta**2) * precision * recall / (recall + beta**2 * precision)


EDIT_KINDS = frozenset(
    {"insertion", "deletion", "substitution", "orthography", "spelling", "punctuation", "other"}
)


@dataclass(frozen=True, slots=True)
class EditSpan:
    """One contiguous rewrite: source tokens [start, end) become `replacement`."""

    start: int
    end: int
    replacement: tuple[str, ...]
    kind: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.start > self.end:
            raise ValueError(f"bad span range [{self.start}, {self.end})")
        if self.kind not in EDIT_KINDS:
            raise ValueError(f"unknown edit kind {self.kind!r}")


def _align(src: Sequence[str], tgt: Sequence[str]) -> tuple[str, ...]:
    """Unit-cost token alignment; ties prefer substitution, then deletion."""
    n, m = len(src), len(tgt)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    dist[0] = list(range(m + 1))
    for i in range(1, n + 1):
        row, above = dist[i], dist[i - 1]
        token = src[i - 1]
        for j in range(1, m + 1):
            row[j] = min(above[j] + 1, row[j - 1] + 1, above[j - 1] + (token != tgt[j - 1]))
    ops: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        if (
            i > 0
            and j > 0
            and dist[i][j] == dist[i - 1][j - 1] + (src[i - 1] != tgt[j - 1])
        ):
            ops.append("match" if src[i - 1] == tgt[j - 1] else "sub")
            i -= 1
            j -= 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append("del")
            i -= 1
        else:
            ops.append("ins")
            j -= 1
    ops.reverse()
    return tuple(ops)


def _squash(tokens: Iterable[str]) -> str:
    return "".join(tokens).replace("-", "").lower()


def _is_punct_token(token: str) -> bool:
    return bool(token) and all(unicodedata.category(ch).startswith("P") for ch in token)


def _classify(src_side: tuple[str, ...], repl: tuple[str, ...], dictionary: Container[str]) -> str:
    if _squash(src_side) == _squash(repl):
        # Case, hyphenation, or token-boundary difference only.
        return "orthography"
    if (
        len(src_side) == 1
        and len(repl) == 1
        and levenshtein_char(src_side[0], repl[0]) <= 2
        and repl[0].lower() in dictionary
    ):
        return "spelling"
    changed = (*src_side, *repl)
    if all(_is_punct_token(t) for t in changed):
        return "punctuation"
    if not src_side:
        return "insertion"
    if not repl:
        return "deletion"
    if len(src_side) == 1 and len(repl) == 1:
        return "substitution"
    return "other"


def extract_edits(
    source: Sentence, target: Sentence, dictionary: Container[str] | None = None
) -> list[EditSpan]:
    """Token-level diff between source and target as typed edit spans.

    Maximal runs of non-matching alignment ops merge into one span, so
    consecutive spans are always separated by at least one kept token.
    `dictionary` is any membership container of lowercase words; the
    bundled frequency list is the default.
    """
    if dictionary is None:
        dictionary = load_wordlist()
    src, tgt = source.tokens, target.tokens
    spans: list[EditSpan] = []
    i = j = 0
    run: tuple[int, int] | None = None
    for op in _align(src, tgt) + ("match",):  # trailing sentinel flushes the last run
        if op == "match":
            if run is not None:
                start, start_j = run
                repl = tgt[start_j:j]
                spans.append(EditSpan(start, i, repl, _classify(src[start:i], repl, dictionary)))
                run = None
            i += 1
            j += 1
            continue
        if run is None:
            run = (i, j)
        if op != "ins":
            i += 1
        if op != "del":
            j += 1
    return spans


def apply_edits(tokens: Sequence[str], edits: Iterable[EditSpan]) -> list[str]:
    """Rebuild the edited token list from source tokens and edit spans."""
    out: list[str] = []
    cursor = 0
    for span in sorted(edits, key=lambda sp: (sp.start, sp.end)):
        if span.start < cursor or span.end > len(tokens):
            raise ValueError("edit spans overlap or fall outside the token range")
        out.extend(tokens[cursor : span.start])
        out.extend(span.replacement)
        cursor = span.end
    out.extend(tokens[cursor:])
    return out


def _prf_from_counts(matched: int, proposed: int, gold: int) -> tuple[float, float, float]:
    # Conventions: proposing nothing is perfectly precise only when
    # nothing was required; an empty gold set counts as fully recalled.
    if proposed == 0:
        precision = 1.0 if gold == 0 else 0.0
    else:
        precision = matched / proposed
    recall = 1.0 if gold == 0 else matched / gold
    if precision + recall == 0.0:
        return 0.0, 0.0, 0.0
    f05 = 1.25 * precision * recall / (0.25 * precision + recall)
    return precision, recall, f05


def edit_prf(
    source: Sentence,
    hypothesis: Sentence,
    reference: Sentence,
    dictionary: Container[str] | None = None,
) -> tuple[float, float, float]:
    """Precision, recall, F0.5 of hypothesis edits against reference edits.

    An edit matches when its source range and replacement are identical;
    the coarse type tag plays no part.
    """
    if dictionary is None:
        dictionary = load_wordlist()
    proposed = {
        (sp.start, sp.end, sp.replacement) for sp in extract_edits(source, hypothesis, dictionary)
    }
    gold = {
        (sp.start, sp.end, sp.replacement) for sp in extract_edits(source, reference, dictionary)
    }
    return _prf_from_counts(len(proposed & gold), len(proposed), len(gold))


_BRACKET_PAIRS = (("(", ")"), ("[", "]"), ("{", "}"))
_TERMINALS = frozenset({".", "!", "?"})
_VOWELS = frozenset("aeiou")


class RuleErrorDetector:
    """Counts surface errors using a configurable subset of rules.

    Available rules: duplicate_word (adjacent case-equal words),
    article_agreement (a/an against the next word's onset letter),
    initial_capital, unbalanced_pairs (brackets and straight double
    quotes), terminal_punct.  The default enables all of them.
    """

    RULES = (
        "duplicate_word",
        "article_agreement",
        "initial_capital",
        "unbalanced_pairs",
        "terminal_punct",
    )

    def __init__(self, rules: Sequence[str] | None = None) -> None:
        chosen = tuple(rules) if rules is not None else self.RULES
        unknown = sorted(set(chosen) - set(self.RULES))
        if unknown:
            raise ValueError(f"unknown rules: {', '.join(unknown)}")
        self.rules = chosen

    def __call__(self, sentence: Sentence) -> int:
        return sum(getattr(self, "_" + rule)(sentence.tokens) for rule in self.rules)

    @staticmethod
    def _duplicate_word(tokens: tuple[str, ...]) -> int:
        return sum(
            1
            for prev, cur in zip(tokens, tokens[1:])
            if prev.lower() == cur.lower() and any(ch.isalpha() for ch in cur)
        )

    @staticmethod
    def _article_agreement(tokens: tuple[str, ...]) -> int:
        errors = 0
        for article, nxt in zip(tokens, tokens[1:]):
            low = article.lower()
            if low not in ("a", "an") or not nxt[:1].isalpha():
                continue
            if (low == "a") == (nxt[0].lower() in _VOWELS):
                errors += 1
        return errors

    @staticmethod
    def _initial_capital(tokens: tuple[str, ...]) -> int:
        for token in tokens:
            for ch in token:
                if ch.isalpha():
                    return int(ch.islower())
        return 0

    @staticmethod
    def _unbalanced_pairs(tokens: tuple[str, ...]) -> int:
        text = " ".join(tokens)
        errors = sum(1 for left, right in _BRACKET_PAIRS if text.count(left) != text.count(right))
        return errors + (text.count('"') % 2)

    @staticmethod
    def _terminal_punct(tokens: tuple[str, ...]) -> int:
        return int(tokens[-1] not in _TERMINALS) if tokens else 0


def grammaticality(s: Sentence, error_detector: Callable[[Sentence], int] | None = None) -> float:
    """One minus the detected errors per token, floored at zero."""
    if not s.tokens:
        raise ValueError("cannot score an empty sentence")
    detector = error_detector if error_detector is not None else RuleErrorDetector()
    return max(0.0, 1.0 - detector(s) / len(s.tokens))


_VOWEL_GROUPS = re.compile(r"[aeiouy]+")


def syllable_count(word: str) -> int:
    """Heuristic syllables: vowel groups, silent final e, minimum one."""
    lowered = word.lower()
    count = len(_VOWEL_GROUPS.findall(lowered))
    if count > 1 and lowered.endswith("e") and not lowered.endswith("le"):
        count -= 1
    return max(1, count)


def fre(s: Sentence) -> float:
    """Flesch reading ease of a single sentence.

    Words are tokens containing at least one letter.  With the sentence
    count fixed at one the formula is
    206.835 - 1.015 * words - 84.6 * (syllables / words).
    """
    words = [t for t in s.tokens if any(ch.isalpha() for ch in t)]
    if not words:
        raise ValueError("no word tokens to score")
    syllables = sum(syllable_count(w) for w in words)
    return 206.835 - 1.015 * len(words) - 84.6 * (syllables / len(words))


_BE_FORMS = frozenset({"am", "is", "are", "was", "were", "be", "been", "being"})
_ADVERB_WORDS = frozenset(
    {"not", "never", "always", "often", "also", "very", "still", "just", "already", "well", "soon"}
)


def _is_adverb(token: str) -> bool:
    lowered = token.lower()
    return (lowered.endswith("ly") and len(lowered) >= 4) or lowered in _ADVERB_WORDS


def _default_participle(token: str) -> bool:
    lowered = token.lower()
    if not lowered.isalpha():
        return False
    if lowered in load_participles():
        return True
    return len(lowered) >= 4 and lowered.endswith(("ed", "en"))


def passive_voice(
    s: Sentence,
    auxiliary_list: Iterable[str] | None = None,
    participle_recognizer: Callable[[str], bool] | None = None,
) -> bool:
    """True when a be-form is followed closely by a past participle.

    The recognizer sees the raw token; at most two non-adverb tokens
    after the auxiliary are inspected, with adverbs skipped for free.
    """
    aux = (
        frozenset(t.lower() for t in auxiliary_list)
        if auxiliary_list is not None
        else _BE_FORMS
    )
    recognize = (
        participle_recognizer if participle_recognizer is not None else _default_participle
    )
    for i, token in enumerate(s.tokens):
        if token.lower() not in aux:
            continue
        budget = 2
        for nxt in s.tokens[i + 1 :]:
            if _is_adverb(nxt):
                continue
            if recognize(nxt):
                return True
            budget -= 1
            if budget == 0:
                break
    return False


def word_repetition(
    s: Sentence, window: int = 5, stopwords: Container[str] | None = None
) -> bool:
    """True when a content word recurs within `window` token positions.

    Distance is measured over original token indices, so punctuation
    and stopwords in between still count toward the gap.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    if stopwords is None:
        stopwords = load_stopwords()
    last_seen: dict[str, int] = {}
    for idx, token in enumerate(s.tokens):
        if not any(ch.isalpha() for ch in token):
            continue
        lowered = token.lower()
        if lowered in stopwords:
            continue
        if lowered in last_seen and idx - last_seen[lowered] <= window:
            return True
        last_seen[lowered] = idx
    return False


@dataclass(frozen=True, slots=True)
class PairEval:
    """Metric record for one sentence pair; None marks an unscorable value."""

    bleu: float
    rouge_l: float
    levenshtein_char: int
    grammaticality: float
    fre: float | None
    ppl: float | None
    passive: bool
    repetition: bool
    edit_matches: int
    edit_proposed: int
    edit_gold: int


_AGGREGATE_FIELDS = (
    "corpus_bleu",
    "mean_rouge_l",
    "edit_precision",
    "edit_recall",
    "edit_f05",
    "mean_grammaticality",
    "mean_fre",
    "mean_ppl",
    "passive_rate",
    "repetition_rate",
    "skipped_fre",
    "skipped_ppl",
)


@dataclass(frozen=True, slots=True)
class EvalReport:
    """Per-pair records plus corpus aggregates.

    Every aggregate except corpus_bleu (corpus-level by definition) is
    recomputable from the per-pair records.
    """

    per_pair: tuple[PairEval, ...]
    corpus_bleu: float
    mean_rouge_l: float
    edit_precision: float
    edit_recall: float
    edit_f05: float
    mean_grammaticality: float
    mean_fre: float | None
    mean_ppl: float | None
    passive_rate: float
    repetition_rate: float
    skipped_fre: int
    skipped_ppl: int

    def to_json_dict(self) -> dict:
        return {
            "pairs": [asdict(record) for record in self.per_pair],
            "aggregates": {name: getattr(self, name) for name in _AGGREGATE_FIELDS},
        }


def evaluate(
    sources: Sequence[Sentence],
    hypotheses: Sequence[Sentence],
    references: Sequence[Sentence],
    *,
    lm=None,
    dictionary: Container[str] | None = None,
    error_detector: Callable[[Sentence], int] | None = None,
) -> EvalReport:
    """Score revision hypotheses against references, edits against sources.

    `lm` is any object with a perplexity(tokens) method; without one the
    ppl fields stay None and count as skipped.  A hypothesis with no
    word tokens skips fre the same way.  Pairs are scored independently
    in input order and aggregated with running sums, so the result does
    not depend on evaluation scheduling.
    """
    if not (len(sources) == len(hypotheses) == len(references)):
        raise ValueError("sources, hypotheses, and references must align")
    if not sources:
        raise ValueError("nothing to evaluate")
    if dictionary is None:
        dictionary = load_wordlist()
    records = []
    for src, hyp, ref in zip(sources, hypotheses, references):
        proposed = {
            (sp.start, sp.end, sp.replacement) for sp in extract_edits(src, hyp, dictionary)
        }
        gold = {
            (sp.start, sp.end, sp.replacement) for sp in extract_edits(src, ref, dictionary)
        }
        try:
            fre_value: float | None = fre(hyp)
        except ValueError:
            fre_value = None
        records.append(
            PairEval(
                bleu=bleu([hyp], [ref]),
                rouge_l=rouge_l(hyp, ref),
                levenshtein_char=levenshtein_char(hyp.text, ref.text),
                grammaticality=grammaticality(hyp, error_detector) if hyp.tokens else 0.0,
                fre=fre_value,
                ppl=float(lm.perplexity(hyp.tokens)) if lm is not None else None,
                passive=passive_voice(hyp),
                repetition=word_repetition(hyp),
                edit_matches=len(proposed & gold),
                edit_proposed=len(proposed),
                edit_gold=len(gold),
            )
        )
    n = len(records)
    precision, recall, f05 = _prf_from_counts(
        sum(r.edit_matches for r in records),
        sum(r.edit_proposed for r in records),
        sum(r.edit_gold for r in records),
    )
    fre_values = [r.fre for r in records if r.fre is not None]
    ppl_values = [r.ppl for r in records if r.ppl is not None]
    return EvalReport(
        per_pair=tuple(records),
        corpus_bleu=bleu(hypotheses, references),
        mean_rouge_l=sum(r.rouge_l for r in records) / n,
        edit_precision=precision,
        edit_recall=recall,
        edit_f05=f05,
        mean_grammaticality=sum(r.grammaticality for r in records) / n,
        mean_fre=sum(fre_values) / len(fre_values) if fre_values else None,
        mean_ppl=sum(ppl_values) / len(ppl_values) if ppl_values else None,
        passive_rate=sum(r.passive for r in records) / n,
        repetition_rate=sum(r.repetition for r in records) / n,
        skipped_fre=n - len(fre_values),
        skipped_ppl=n - len(ppl_values),
    )
