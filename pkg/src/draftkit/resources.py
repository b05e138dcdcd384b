"""Loaders for the word lists bundled with the package.

All three files are plain UTF-8 text with ``#`` comment lines.  Loaders
cache their result; treat the returned containers as read-only.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


def _data_lines(name: str) -> list[str]:
    text = (resources.files("draftkit") / "data" / name).read_text(encoding="utf-8")
    lines = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


@lru_cache(maxsize=None)
def load_stopwords() -> frozenset[str]:
    """Lowercase English stopwords, used by repetition and overlap checks."""
    return frozenset(_data_lines("stopwords.txt"))


@lru_cache(maxsize=None)
def load_wordlist() -> dict[str, int]:
    """Default frequency dictionary mapping lowercase token to count."""
    counts: dict[str, int] = {}
    for line in _data_lines("wordlist.tsv"):
        token, count = line.split("\t")
        counts[token] = int(count)
    return counts


@lru_cache(maxsize=None)
def load_participles() -> frozenset[str]:
    """Irregular past participles that the -ed/-en suffix rule misses."""
    return frozenset(_data_lines("irregular_participles.txt"))
