"""Tokenizers shared by the index and the similarity features."""

from __future__ import annotations

import re

# alphanumeric runs; underscore is a separator like any other punctuation
_WORD = re.compile(r"[^\W_]+", re.UNICODE)

# path/query punctuation plus the URL scheme separator
_ENDPOINT_SEP = re.compile(r"[/?&=.\-_:\s]+")


def tokenize_words(text: str) -> list[str]:
    """Lowercase words with punctuation stripped; no stemming, no stop-words."""
    return _WORD.findall(text.lower())


def word_ngrams(words: list[str], n: int) -> list[str]:
    """Adjacent word n-grams joined by single spaces."""
    if n < 1 or len(words) < n:
        return []
    return [" ".join(words[i : i + n]) for i in range(len(words) - n + 1)]


def tokenize_endpoint(endpoint: str) -> list[str]:
    """Split a URL or path into lowercase segments.

    >>> tokenize_endpoint("/api/v1/mortality/region_2/home")
    ['api', 'v1', 'mortality', 'region', '2', 'home']
    """
    return [seg for seg in _ENDPOINT_SEP.split(endpoint.lower()) if seg]
