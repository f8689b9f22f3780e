"""Inverted index over stream metadata.

Descriptions are indexed as words plus word 2-grams and 3-grams, keywords
verbatim (a multi-word keyword is one term, never decomposed), and data
types as their own term kind. The index is an immutable value: updates
derived from the store's change log produce a new index that shares
untouched postings with the old one, so readers never see a partial
update.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import InvalidQueryError, RebuildRequiredError
from .store import ChangeKind, DataStreamRecord, DataType, OntologyStore
from .text import tokenize_words, word_ngrams


class TermKind(str, Enum):
    WORD = "word"
    GRAM2 = "gram2"
    GRAM3 = "gram3"
    KEYWORD = "keyword"
    DATATYPE = "datatype"


@dataclass(frozen=True)
class Term:
    text: str
    kind: TermKind

    def __post_init__(self) -> None:
        if self.kind is TermKind.GRAM2 and self.text.count(" ") != 1:
            raise ValueError(f"gram2 {self.text!r} must contain exactly one space")
        if self.kind is TermKind.GRAM3 and self.text.count(" ") != 2:
            raise ValueError(f"gram3 {self.text!r} must contain exactly two spaces")


def stream_terms(record: DataStreamRecord) -> frozenset[Term]:
    """Every term a stream contributes to the index."""
    words = tokenize_words(record.description)
    terms = {Term(w, TermKind.WORD) for w in words}
    terms.update(Term(g, TermKind.GRAM2) for g in word_ngrams(words, 2))
    terms.update(Term(g, TermKind.GRAM3) for g in word_ngrams(words, 3))
    terms.update(Term(k, TermKind.KEYWORD) for k in record.keywords)
    terms.add(Term(record.data_type.value, TermKind.DATATYPE))
    return frozenset(terms)


@dataclass(frozen=True)
class PropagationQuery:
    """Four keyword clauses plus optional free text.

    must_all: every keyword required on each stream.
    must_some: stream-level filter is "intersects"; full per-group coverage
        is enforced downstream.
    must_not: any of these keywords disqualifies a stream.
    data_types: restrict to these types when non-empty.
    free_text: words or short phrases matched against description postings.
    """

    must_all: frozenset[str] = frozenset()
    must_some: frozenset[str] = frozenset()
    must_not: frozenset[str] = frozenset()
    data_types: frozenset[DataType] = frozenset()
    free_text: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "must_all", frozenset(self.must_all))
        object.__setattr__(self, "must_some", frozenset(self.must_some))
        object.__setattr__(self, "must_not", frozenset(self.must_not))
        object.__setattr__(
            self, "data_types", frozenset(DataType.coerce(t) for t in self.data_types)
        )
        object.__setattr__(self, "free_text", tuple(self.free_text))
        overlap = (self.must_all | self.must_some) & self.must_not
        if overlap:
            raise InvalidQueryError(
                f"keywords {sorted(overlap)} appear in both a positive clause and must_not"
            )


@dataclass(frozen=True)
class Suggestion:
    text: str
    kind: TermKind
    count: int


@dataclass(frozen=True)
class InvertedIndex:
    postings: Mapping[Term, frozenset[str]]
    high_seq: int
    stream_ids: frozenset[str] = frozenset()
    terms_by_stream: Mapping[str, frozenset[Term]] = field(default_factory=dict)

    def posting(self, term: Term) -> frozenset[str]:
        return self.postings.get(term, frozenset())

    def term_count(self) -> int:
        return len(self.postings)


def empty_index() -> InvertedIndex:
    return InvertedIndex(postings={}, high_seq=0)


def build_index(store: OntologyStore) -> InvertedIndex:
    """Full rebuild from the live records; high_seq jumps to the log head."""
    postings: dict[Term, set[str]] = {}
    terms_by_stream: dict[str, frozenset[Term]] = {}
    for record in store.list_data_streams():
        terms = stream_terms(record)
        terms_by_stream[record.id] = terms
        for term in terms:
            postings.setdefault(term, set()).add(record.id)
    return InvertedIndex(
        postings={t: frozenset(ids) for t, ids in postings.items()},
        high_seq=store.next_seq - 1,
        stream_ids=frozenset(terms_by_stream),
        terms_by_stream=terms_by_stream,
    )


def apply_change_log(
    index: InvertedIndex, store: OntologyStore, from_seq: int
) -> InvertedIndex:
    """Fold log entries from from_seq into a new index value.

    from_seq must be exactly index.high_seq + 1; anything else means
    entries were missed and only a rebuild can recover.
    """
    if from_seq != index.high_seq + 1:
        raise RebuildRequiredError(
            f"index at seq {index.high_seq} cannot apply from_seq {from_seq}"
        )
    entries = store.read_change_log(from_seq)
    if not entries:
        return index
    postings = dict(index.postings)
    terms_by_stream = dict(index.terms_by_stream)
    for entry in entries:
        if entry.kind is not ChangeKind.PUT_STREAM:
            continue
        sid = entry.payload_id
        for term in terms_by_stream.get(sid, frozenset()):
            remaining = postings[term] - {sid}
            if remaining:
                postings[term] = remaining
            else:
                del postings[term]
        terms = stream_terms(store.get_data_stream(sid))
        terms_by_stream[sid] = terms
        for term in terms:
            postings[term] = postings.get(term, frozenset()) | {sid}
    return InvertedIndex(
        postings=postings,
        high_seq=entries[-1].seq,
        stream_ids=frozenset(terms_by_stream),
        terms_by_stream=terms_by_stream,
    )


def _free_text_term(token: str) -> Term | None:
    words = tokenize_words(token)
    if not words or len(words) > 3:
        return None
    kind = (TermKind.WORD, TermKind.GRAM2, TermKind.GRAM3)[len(words) - 1]
    return Term(" ".join(words), kind)


def execute_query(index: InvertedIndex, query: PropagationQuery) -> set[str]:
    """Set of stream ids satisfying every clause; equals a linear scan."""
    result = set(index.stream_ids)
    for kw in query.must_all:
        result &= index.posting(Term(kw, TermKind.KEYWORD))
        if not result:
            return result
    if query.data_types:
        allowed: set[str] = set()
        for dt in query.data_types:
            allowed |= index.posting(Term(dt.value, TermKind.DATATYPE))
        result &= allowed
    if query.must_some:
        hits: set[str] = set()
        for kw in query.must_some:
            hits |= index.posting(Term(kw, TermKind.KEYWORD))
        result &= hits
    for kw in query.must_not:
        result -= index.posting(Term(kw, TermKind.KEYWORD))
    for token in query.free_text:
        term = _free_text_term(token)
        result &= index.posting(term) if term else frozenset()
    return result


def suggest(index: InvertedIndex, prefix: str, limit: int) -> list[Suggestion]:
    """Terms starting with prefix, busiest posting lists first."""
    if limit < 1:
        raise InvalidQueryError("limit must be >= 1")
    matches = [
        Suggestion(term.text, term.kind, len(ids))
        for term, ids in index.postings.items()
        if term.text.startswith(prefix)
    ]
    matches.sort(key=lambda s: (-s.count, s.text, s.kind.value))
    return matches[:limit]
