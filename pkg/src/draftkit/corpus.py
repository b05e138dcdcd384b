"""Sentence corpus handling: tokenization, filtering, and pair I/O.

Two filtering passes are exposed.  The *final* filter selects presentable
sentences by character length and rejects characters that rarely survive
copy-editing (formula symbols, Greek letters, URL fragments, citation
markers).  The *training* filter selects material for language models and
noising vocabularies by token count and alphabetic-character ratio, minus an
explicit exclusion set so evaluation sentences can be held out.

Draft/reference pairs travel as two-column TSV (``draft<TAB>reference``) or
JSONL with ``draft`` and ``reference`` keys.  The literal token ``<*>`` marks
a masked span in a draft and is never split by the tokenizer.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

MASK_TOKEN = "<*>"

#: Named character classes the final filter can reject.  Values are searched,
#: not matched, so any hit anywhere in the sentence disqualifies it.
CHARACTER_CLASSES: dict[str, re.Pattern[str]] = {
    "math": re.compile(
        r"[=+<>^_|~\\{}$"
        r"±²³¹×÷′″"
        r"←-⇿∀-⋿⟀-⟯⦀-⧿⨀-⫿]"
    ),
    "greek": re.compile(r"[Ͱ-Ͽἀ-῿]"),
    "url": re.compile(r"https?://|www\.|\S\.(?:com|org|net|edu|gov|io)\b"),
    "citation": re.compile(r"\[\d+(?:\s*[,;-]\s*\d+)*\]|\bet al\.|\(\s*\d{4}[a-z]?\s*\)"),
}


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Split on whitespace, then detach leading/trailing punctuation.

    Inner punctuation (hyphens, apostrophes, abbreviation periods) stays
    attached; ``<*>`` always comes through as a single token.  The output is
    in normal form: joining with single spaces and re-tokenizing yields the
    same list.
    """
    tokens: list[str] = []
    for chunk in text.split():
        leading: list[str] = []
        trailing: list[str] = []
        while chunk and chunk != MASK_TOKEN and _is_punct(chunk[0]):
            leading.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk != MASK_TOKEN and _is_punct(chunk[-1]):
            trailing.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(leading)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trailing))
    return tokens


def normalize_sentence(text: str) -> str:
    """Lowercase and collapse whitespace runs; the exclusion-set key form."""
    return " ".join(text.lower().split())


@dataclass(frozen=True, slots=True)
class Sentence:
    """A sentence with its token sequence and character length."""

    text: str
    tokens: tuple[str, ...]
    char_len: int

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        return cls(text=text, tokens=tuple(tokenize(text)), char_len=len(text))

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "Sentence":
        text = " ".join(tokens)
        return cls(text=text, tokens=tuple(tokens), char_len=len(text))

    @property
    def has_mask(self) -> bool:
        return MASK_TOKEN in self.tokens


@dataclass(frozen=True, slots=True)
class DraftPair:
    """A rough draft aligned with its clean reference.

    References are the ground truth a revision system aims for, so a mask
    token in one is a data error and is rejected at construction time.
    """

    draft: Sentence
    reference: Sentence
    has_mask: bool = field(init=False)

    def __post_init__(self) -> None:
        if MASK_TOKEN in self.reference.tokens:
            raise ValueError("reference sentence contains the mask token")
        object.__setattr__(self, "has_mask", self.draft.has_mask)

    @classmethod
    def from_texts(cls, draft: str, reference: str) -> "DraftPair":
        return cls(Sentence.from_text(draft), Sentence.from_text(reference))


@dataclass(frozen=True)
class CorpusFilterConfig:
    """Bounds for both filtering passes.  All bounds are inclusive."""

    min_chars: int = 70
    max_chars: int = 120
    forbidden_char_classes: frozenset[str] = frozenset({"math", "greek", "url", "citation"})
    min_tokens: int = 5
    max_tokens: int = 35
    min_alpha_ratio: float = 0.5
    excluded: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not 0 < self.min_chars <= self.max_chars:
            raise ValueError(f"need 0 < min_chars <= max_chars, got {self.min_chars}..{self.max_chars}")
        if not 0 < self.min_tokens <= self.max_tokens:
            raise ValueError(f"need 0 < min_tokens <= max_tokens, got {self.min_tokens}..{self.max_tokens}")
        if not 0.0 <= self.min_alpha_ratio <= 1.0:
            raise ValueError(f"min_alpha_ratio must be in [0, 1], got {self.min_alpha_ratio}")
        unknown = set(self.forbidden_char_classes) - set(CHARACTER_CLASSES)
        if unknown:
            raise ValueError(f"unknown character classes: {sorted(unknown)}")
        object.__setattr__(
            self, "excluded", frozenset(normalize_sentence(s) for s in self.excluded)
        )


def passes_final_filter(sentence: Sentence, cfg: CorpusFilterConfig) -> bool:
    if not cfg.min_chars <= sentence.char_len <= cfg.max_chars:
        return False
    return not any(
        CHARACTER_CLASSES[name].search(sentence.text) for name in cfg.forbidden_char_classes
    )


def passes_training_filter(sentence: Sentence, cfg: CorpusFilterConfig) -> bool:
    if not cfg.min_tokens <= len(sentence.tokens) <= cfg.max_tokens:
        return False
    if sentence.char_len == 0:
        return False
    alpha = sum(ch.isalpha() for ch in sentence.text)
    if alpha / sentence.char_len < cfg.min_alpha_ratio:
        return False
    return normalize_sentence(sentence.text) not in cfg.excluded


def filter_final_sentences(
    sentences: Iterable[Sentence], cfg: CorpusFilterConfig
) -> Iterator[Sentence]:
    """Yield sentences fit for presentation, preserving input order."""
    return (s for s in sentences if passes_final_filter(s, cfg))


def filter_training_sentences(
    sentences: Iterable[Sentence], cfg: CorpusFilterConfig
) -> Iterator[Sentence]:
    """Yield sentences fit for model training, preserving input order."""
    return (s for s in sentences if passes_training_filter(s, cfg))


class RecordError(ValueError):
    """A malformed record in a line-oriented data file."""

    def __init__(self, path: Path | str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


def iter_checked_lines(
    path: Path | str, issues: list[RecordError] | None = None
) -> Iterator[tuple[int, str]]:
    """Yield ``(line_no, text)`` for each decodable line.

    Undecodable lines are appended to *issues* (or raised if *issues* is
    None) so large corpus scans can continue past damage.
    """
    with open(path, "rb") as handle:
        for line_no, raw in enumerate(handle, start=1):
            try:
                yield line_no, raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as exc:
                err = RecordError(path, line_no, f"not valid UTF-8 ({exc.reason})")
                if issues is None:
                    raise err from exc
                issues.append(err)


def _pair_from_tsv(path: Path | str, line_no: int, line: str) -> DraftPair:
    fields = line.split("\t")
    if len(fields) != 2:
        raise RecordError(path, line_no, f"expected 2 tab-separated fields, got {len(fields)}")
    try:
        return DraftPair.from_texts(fields[0], fields[1])
    except ValueError as exc:
        raise RecordError(path, line_no, str(exc)) from exc


def _pair_from_jsonl(path: Path | str, line_no: int, line: str) -> DraftPair:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(path, line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(record, dict) or not {"draft", "reference"} <= set(record):
        raise RecordError(path, line_no, 'record must be an object with "draft" and "reference"')
    if not isinstance(record["draft"], str) or not isinstance(record["reference"], str):
        raise RecordError(path, line_no, '"draft" and "reference" must be strings')
    try:
        return DraftPair.from_texts(record["draft"], record["reference"])
    except ValueError as exc:
        raise RecordError(path, line_no, str(exc)) from exc


def load_pairs(path: Path | str, fmt: str = "tsv") -> list[DraftPair]:
    """Load draft/reference pairs, raising :class:`RecordError` with the
    offending line number on the first malformed record."""
    if fmt not in ("tsv", "jsonl"):
        raise ValueError(f"unknown pair format: {fmt!r}")
    parse = _pair_from_tsv if fmt == "tsv" else _pair_from_jsonl
    pairs = []
    for line_no, line in iter_checked_lines(path):
        pairs.append(parse(path, line_no, line))
    return pairs


_FIELD_BREAKERS = re.compile(r"[\t\r\n]")


def write_pairs(path: Path | str, pairs: Iterable[DraftPair], fmt: str = "tsv") -> None:
    """Write pairs one record per line; tabs/newlines inside sentence text
    are flattened to spaces so the TSV framing cannot be corrupted."""
    if fmt not in ("tsv", "jsonl"):
        raise ValueError(f"unknown pair format: {fmt!r}")
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            if fmt == "tsv":
                draft = _FIELD_BREAKERS.sub(" ", pair.draft.text)
                reference = _FIELD_BREAKERS.sub(" ", pair.reference.text)
                handle.write(f"{draft}\t{reference}\n")
            else:
                handle.write(
                    json.dumps(
                        {"draft": pair.draft.text, "reference": pair.reference.text},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
