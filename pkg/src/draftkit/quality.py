"""Quality control for crowdsourced drafts.

Three layers, applied in pipeline order:

1. :func:`spell_check` repairs misspelled tokens against a frequency
   dictionary before any text is compared or filtered.
2. :func:`score_worker` turns one worker submission (three rewritten
   answers plus the machine translations shown alongside them) into a
   :class:`WorkerVerdict` with per-criterion score deltas and rejections.
3. :func:`filter_pairs` drops draft/reference pairs whose content-word
   overlap falls below a threshold after spell checking the draft.

Criterion identifiers are stable strings (``worker.time`` and friends) so
downstream reports can key on them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import MASK_TOKEN, DraftPair, RecordError, Sentence, iter_checked_lines, tokenize
from .metrics import levenshtein_char
from .resources import load_stopwords, load_wordlist

#: Marker used in a verdict instead of a numeric delta.
REJECT = "reject"

CRITERION_SHORT = "worker.short_answer"
CRITERION_FEW_TYPES = "worker.few_types"
CRITERION_LD_CLOSE = "worker.ld_le_10"
CRITERION_LD_NEAR = "worker.ld_10_20"
CRITERION_LD_FAR = "worker.ld_20_30"
CRITERION_TERMINAL = "worker.terminal_punct"
CRITERION_MASK = "worker.mask_used"
CRITERION_ENGLISH = "worker.english"
CRITERION_TIME = "worker.time"
CRITERION_ALL_SHORT = "worker.all_short"
CRITERION_NO_TERMINAL = "worker.no_terminal"
CRITERION_IDENTICAL = "worker.identical_answers"
CRITERION_JAPANESE = "worker.japanese"
CRITERION_NOT_ENGLISH = "worker.not_english"

_MIN_WORDS = 4
_MIN_TYPES = 4
_MIN_SECONDS = 120

# Hiragana, katakana, and the unified CJK ideographs.
_JAPANESE_RANGES = ((0x3040, 0x309F), (0x30A0, 0x30FF), (0x4E00, 0x9FFF))


class UndefinedOverlapError(ValueError):
    """Raised when a sentence has no content tokens to compare."""


@dataclass(frozen=True, slots=True)
class SpellCheckResult:
    """Corrected text plus the substitutions applied, in token order."""

    corrected_text: str
    corrections: tuple[tuple[str, str], ...]


def _best_correction(word: str, dictionary: Mapping[str, int]) -> str | None:
    """Nearest dictionary entry: smallest edit distance up to two, then
    highest frequency, then lexicographic order."""
    pools: dict[int, list[tuple[int, str]]] = {1: [], 2: []}
    for entry, frequency in dictionary.items():
        if abs(len(entry) - len(word)) > 2:
            continue
        distance = levenshtein_char(word, entry)
        if distance in pools:
            pools[distance].append((frequency, entry))
    for distance in (1, 2):
        if pools[distance]:
            return min(pools[distance], key=lambda fc: (-fc[0], fc[1]))[1]
    return None


def spell_check(s: Sentence, dictionary: Mapping[str, int] | None = None) -> SpellCheckResult:
    """Correct out-of-dictionary tokens in ``s``.

    Only purely alphabetic tokens are eligible; numbers, punctuation, the
    mask token, and all-uppercase tokens (acronyms) pass through.  Title
    case is restored on the replacement.  The token count never changes.
    """
    if dictionary is None:
        dictionary = load_wordlist()
    if not dictionary:
        raise ValueError("spell check needs a non-empty dictionary")
    corrected = []
    corrections = []
    for token in s.tokens:
        replacement = token
        if token.isalpha() and not token.isupper() and token != MASK_TOKEN:
            lowered = token.lower()
            if lowered not in dictionary:
                found = _best_correction(lowered, dictionary)
                if found is not None:
                    replacement = found.capitalize() if token.istitle() else found
        if replacement != token:
            corrections.append((token, replacement))
        corrected.append(replacement)
    return SpellCheckResult(" ".join(corrected), tuple(corrections))


def contains_japanese(text: str) -> bool:
    return any(lo <= ord(ch) <= hi for ch in text for lo, hi in _JAPANESE_RANGES)


def is_english(
    text: str, dictionary: Mapping[str, int] | None = None, *, threshold: float = 0.5
) -> bool:
    """Heuristic language check: no Japanese script, and at least
    ``threshold`` of the alphabetic tokens appear in the dictionary."""
    if dictionary is None:
        dictionary = load_wordlist()
    if contains_japanese(text):
        return False
    alphabetic = [t for t in tokenize(text) if t.isalpha()]
    if not alphabetic:
        return False
    hits = sum(t.lower() in dictionary for t in alphabetic)
    return hits / len(alphabetic) >= threshold


@dataclass(frozen=True)
class FilterConfig:
    """Knobs for the overlap filter."""

    alpha: float = 0.4
    stopwords: frozenset[str] = field(default_factory=load_stopwords)
    mask_token: str = MASK_TOKEN

    def __post_init__(self) -> None:
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.mask_token in self.stopwords:
            raise ValueError("the mask token cannot also be a stopword")


def _content_tokens(s: Sentence, cfg: FilterConfig) -> set[str]:
    return {t.lower() for t in s.tokens} - cfg.stopwords - {cfg.mask_token}


def overlap_coefficient(x: Sentence, y: Sentence, cfg: FilterConfig | None = None) -> float:
    """Fraction of the smaller content-token set shared with the other.

    Content tokens are lowercased types minus stopwords and the mask
    token.  Raises :class:`UndefinedOverlapError` when either side has
    none, since the ratio has no meaningful value there.
    """
    cfg = FilterConfig() if cfg is None else cfg
    ux = _content_tokens(x, cfg)
    uy = _content_tokens(y, cfg)
    if not ux or not uy:
        raise UndefinedOverlapError("a sentence has no content tokens")
    return len(ux & uy) / min(len(ux), len(uy))


def filter_pairs(
    pairs: Iterable[DraftPair],
    cfg: FilterConfig | None = None,
    dictionary: Mapping[str, int] | None = None,
) -> tuple[list[DraftPair], list[tuple[DraftPair, str]]]:
    """Partition pairs by content overlap between draft and reference.

    The draft is spell checked first so that typos do not mask genuine
    overlap; the reference is trusted as written.  Pairs whose overlap is
    undefined or strictly below ``cfg.alpha`` land in the removed list
    with a human-readable reason.
    """
    cfg = FilterConfig() if cfg is None else cfg
    kept: list[DraftPair] = []
    removed: list[tuple[DraftPair, str]] = []
    for pair in pairs:
        checked = spell_check(pair.draft, dictionary)
        draft = Sentence.from_text(checked.corrected_text)
        try:
            score = overlap_coefficient(draft, pair.reference, cfg)
        except UndefinedOverlapError:
            removed.append((pair, "overlap with reference undefined (no content tokens)"))
            continue
        if score < cfg.alpha:
            removed.append((pair, f"overlap {score:.4f} below alpha {cfg.alpha}"))
        else:
            kept.append(pair)
    return kept, removed


@dataclass(frozen=True, slots=True)
class WorkerSubmission:
    """One crowdworker's task: three answers with the machine translations
    that were displayed next to the inputs."""

    worker_id: str
    answers: tuple[str, str, str]
    seconds_worked: int
    mt_references: tuple[str, str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "answers", tuple(self.answers))
        object.__setattr__(self, "mt_references", tuple(self.mt_references))
        if len(self.answers) != 3:
            raise ValueError(f"expected 3 answers, got {len(self.answers)}")
        if len(self.mt_references) != 3:
            raise ValueError(f"expected 3 machine references, got {len(self.mt_references)}")
        if self.seconds_worked < 0:
            raise ValueError(f"seconds_worked must be nonnegative, got {self.seconds_worked}")


@dataclass(frozen=True, slots=True)
class WorkerVerdict:
    """Score, accept decision, and every criterion that fired.

    ``triggered`` pairs a criterion identifier with either a numeric score
    delta or the string :data:`REJECT`.  A submission is accepted exactly
    when nothing rejected it and the total score is nonnegative.
    """

    score: float
    accepted: bool
    triggered: tuple[tuple[str, float | str], ...]

    def to_json_dict(self) -> dict:
        return {
            "score": self.score,
            "accepted": self.accepted,
            "triggered": [[cid, delta] for cid, delta in self.triggered],
        }


def score_worker(
    sub: WorkerSubmission, dictionary: Mapping[str, int] | None = None
) -> WorkerVerdict:
    """Apply every scoring and rejection criterion to one submission.

    Deltas come first in ``triggered`` (length and type penalties, the
    per-answer distance bands in answer order, then the bonuses), followed
    by rejections.  The score is always the sum of the numeric deltas,
    even when a rejection makes it moot.
    """
    triggered: list[tuple[str, float | str]] = []
    words = [answer.split() for answer in sub.answers]

    if any(len(w) < _MIN_WORDS for w in words):
        triggered.append((CRITERION_SHORT, -2.0))
    if any(len({t.lower() for t in w}) < _MIN_TYPES for w in words):
        triggered.append((CRITERION_FEW_TYPES, -2.0))

    # Answers too close to the displayed machine translation were likely
    # copied rather than rewritten; the bands grade how close.
    for answer, reference in zip(sub.answers, sub.mt_references):
        distance = levenshtein_char(answer, reference)
        if distance <= 10:
            triggered.append((CRITERION_LD_CLOSE, REJECT))
        elif distance < 20:
            triggered.append((CRITERION_LD_NEAR, -1.5))
        elif distance <= 30:
            triggered.append((CRITERION_LD_FAR, -0.5))

    terminal = [answer.rstrip().endswith((".", "?")) for answer in sub.answers]
    if all(terminal):
        triggered.append((CRITERION_TERMINAL, 1.0))
    if any(MASK_TOKEN in answer for answer in sub.answers):
        triggered.append((CRITERION_MASK, 1.0))
    english = [is_english(answer, dictionary) for answer in sub.answers]
    if all(english):
        triggered.append((CRITERION_ENGLISH, 1.0))

    if sub.seconds_worked < _MIN_SECONDS:
        triggered.append((CRITERION_TIME, REJECT))
    if all(len(w) < _MIN_WORDS for w in words):
        triggered.append((CRITERION_ALL_SHORT, REJECT))
    if not any(terminal):
        triggered.append((CRITERION_NO_TERMINAL, REJECT))
    if len({" ".join(w) for w in words}) < len(sub.answers):
        triggered.append((CRITERION_IDENTICAL, REJECT))
    if any(contains_japanese(answer) for answer in sub.answers):
        triggered.append((CRITERION_JAPANESE, REJECT))
    if not any(english):
        triggered.append((CRITERION_NOT_ENGLISH, REJECT))

    score = sum(delta for _, delta in triggered if not isinstance(delta, str))
    rejected = any(delta == REJECT for _, delta in triggered)
    return WorkerVerdict(score=float(score), accepted=not rejected and score >= 0, triggered=tuple(triggered))


def load_submissions(path: Path | str) -> list[WorkerSubmission]:
    """Read worker submissions from a JSONL file.

    Each line holds an object with ``worker_id``, ``answers`` (three
    strings), ``seconds``, and ``mt_references`` (three strings).
    Malformed lines raise :class:`draftkit.corpus.RecordError`.
    """
    submissions = []
    for line_no, line in iter_checked_lines(path):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise RecordError(path, line_no, f"invalid JSON: {err}") from err
        if not isinstance(record, dict):
            raise RecordError(path, line_no, "expected a JSON object per line")
        try:
            answers = record["answers"]
            references = record["mt_references"]
            if not isinstance(answers, list) or not isinstance(references, list):
                raise ValueError("answers and mt_references must be arrays")
            submission = WorkerSubmission(
                worker_id=str(record["worker_id"]),
                answers=tuple(str(a) for a in answers),
                seconds_worked=int(record["seconds"]),
                mt_references=tuple(str(r) for r in references),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise RecordError(path, line_no, f"bad submission record: {err}") from err
        submissions.append(submission)
    return submissions
