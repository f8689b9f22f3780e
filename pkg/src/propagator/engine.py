"""Propagation engine: reference-query derivation, candidate search,
keyword annotation, activation, and dashboard link matching.

The flow mirrors a human operator's loop: derive a query draft from a
reference page, search and group similar streams, review annotated
candidates, then activate the good ones, which mints new page bindings
and permanently retires those stream combinations from future searches.
"""

from __future__ import annotations

import datetime as dt
import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import grouping
from .errors import (
    DuplicateBindingError,
    DuplicatePropagationError,
    GroupValidationError,
    MissingLinkError,
    RebuildRequiredError,
)
from .grouping import GroupingThresholds, validate_group
from .index import (
    InvertedIndex,
    PropagationQuery,
    Suggestion,
    apply_change_log,
    build_index,
    empty_index,
    execute_query,
    suggest,
)
from .ranking import DEFAULT_W, CandidateGroup, order_group, score_group, sort_groups
from .similarity import FeatureVectors, SimilarityWeights, compute_bundle
from .store import DataStreamRecord, OntologyStore, PageBinding

ALGORITHMS = ("bruteforce", "spectral")


@dataclass(frozen=True)
class EngineParams:
    algorithm: str = "bruteforce"
    weights: SimilarityWeights = field(default_factory=SimilarityWeights)
    thresholds: GroupingThresholds = field(default_factory=GroupingThresholds)
    w: float = DEFAULT_W
    kmeans_seed: int = grouping.DEFAULT_KMEANS_SEED

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown grouping algorithm {self.algorithm!r}")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"W={self.w} outside [0, 1]")


@dataclass(frozen=True)
class ReferenceContext:
    """A page binding plus its streams, in binding order."""

    page: PageBinding
    reference_streams: tuple[DataStreamRecord, ...]
    keyword_universe: Mapping[str, int]

    @classmethod
    def from_store(cls, store: OntologyStore, page_id: str) -> "ReferenceContext":
        page = store.get_page_binding(page_id)
        streams = tuple(store.get_data_stream(sid) for sid in page.data_ids)
        counts: dict[str, int] = {}
        for stream in streams:
            for keyword in stream.keywords:
                counts[keyword] = counts.get(keyword, 0) + 1
        return cls(page=page, reference_streams=streams, keyword_universe=counts)


def derive_reference_query(ctx: ReferenceContext) -> PropagationQuery:
    """Editable draft: keywords shared by every reference stream become
    must_all, partially shared ones must_some; must_not is left for the
    operator."""
    k = len(ctx.reference_streams)
    must_all = {kw for kw, count in ctx.keyword_universe.items() if count == k}
    must_some = {kw for kw, count in ctx.keyword_universe.items() if 0 < count < k}
    return PropagationQuery(
        must_all=frozenset(must_all),
        must_some=frozenset(must_some),
        data_types=frozenset(s.data_type for s in ctx.reference_streams),
    )


def excluded_stream_ids(store: OntologyStore, vis_id: str) -> set[str]:
    """Streams already bound to this vis function, reference included."""
    out: set[str] = set()
    for binding in store.list_page_bindings():
        if binding.vis_id == vis_id:
            out.update(binding.data_ids)
    return out


def resolve_search_query(
    store: OntologyStore,
    index: InvertedIndex,
    ctx: ReferenceContext,
    base: PropagationQuery | None = None,
    *,
    auto_exclude: bool = True,
    pinned: Iterable[str] = (),
) -> PropagationQuery:
    """Finalize a query for search, optionally moving reference-identifying
    keywords out of the way.

    A must_all keyword is reference-identifying when dropping it yields a
    non-empty result set in which no stream carries it: requiring it could
    only ever re-find the reference's own streams, which are excluded from
    search anyway. Such keywords move to must_not so the draft derived from
    a reference page finds that page's siblings instead of nothing. Pinned
    keywords (explicit operator input) are never moved.
    """
    query = base if base is not None else derive_reference_query(ctx)
    if not auto_exclude:
        return query
    excluded = excluded_stream_ids(store, ctx.page.vis_id)
    pinned_set = frozenset(pinned)
    must_all = set(query.must_all)
    must_not = set(query.must_not)
    for _ in range(4):
        moved: set[str] = set()
        for keyword in sorted(must_all - pinned_set):
            trial = PropagationQuery(
                must_all=frozenset(must_all - {keyword}),
                must_some=query.must_some,
                must_not=frozenset(must_not),
                data_types=query.data_types,
                free_text=query.free_text,
            )
            hits = execute_query(index, trial) - excluded
            if hits and all(
                keyword not in store.get_data_stream(sid).keywords for sid in hits
            ):
                moved.add(keyword)
        if not moved:
            break
        must_all -= moved
        must_not |= moved
    return PropagationQuery(
        must_all=frozenset(must_all),
        must_some=query.must_some,
        must_not=frozenset(must_not),
        data_types=query.data_types,
        free_text=query.free_text,
    )


class AnnotationStatus(str, Enum):
    HIDDEN_COMMON = "hidden_common"
    MATCHED_IN_ORDER = "matched_in_order"
    MATCHED_OUT_OF_ORDER = "matched_out_of_order"
    UNMATCHED = "unmatched"


@dataclass(frozen=True)
class KeywordAnnotation:
    keyword: str
    status: AnnotationStatus


def annotate_keywords(
    member_records: Sequence[DataStreamRecord],
    ctx: ReferenceContext,
    query: PropagationQuery,
) -> tuple[tuple[KeywordAnnotation, ...], ...]:
    """Per-stream keyword statuses for candidate review.

    Precedence: common to every reference and every member → hidden_common;
    absent from the query's keyword clauses → unmatched (listed first);
    otherwise matched, in or out of order depending on whether the keyword
    belongs to the reference stream at the same position.
    """
    common_ref = frozenset.intersection(
        *[frozenset(s.keywords) for s in ctx.reference_streams]
    )
    common_group = frozenset.intersection(
        *[frozenset(r.keywords) for r in member_records]
    )
    hidden = common_ref & common_group
    query_terms = query.must_all | query.must_some
    rank = {
        AnnotationStatus.UNMATCHED: 0,
        AnnotationStatus.MATCHED_IN_ORDER: 1,
        AnnotationStatus.MATCHED_OUT_OF_ORDER: 2,
        AnnotationStatus.HIDDEN_COMMON: 3,
    }
    out = []
    for position, record in enumerate(member_records):
        reference_kws = frozenset(ctx.reference_streams[position].keywords)
        annotations = []
        for keyword in record.keywords:
            if keyword in hidden:
                status = AnnotationStatus.HIDDEN_COMMON
            elif keyword not in query_terms:
                status = AnnotationStatus.UNMATCHED
            elif keyword in reference_kws:
                status = AnnotationStatus.MATCHED_IN_ORDER
            else:
                status = AnnotationStatus.MATCHED_OUT_OF_ORDER
            annotations.append(KeywordAnnotation(keyword, status))
        annotations.sort(key=lambda a: (rank[a.status], a.keyword))
        out.append(tuple(annotations))
    return tuple(out)


def group_hash(ordered_member_ids: Sequence[str]) -> str:
    """Stable 64-bit identity for an ordered member list, hex-encoded."""
    payload = "\x1f".join(ordered_member_ids).encode("utf-8")
    return blake2b(payload, digest_size=8).hexdigest()


@dataclass(frozen=True)
class AnnotatedCandidate:
    group: CandidateGroup
    annotations: tuple[tuple[KeywordAnnotation, ...], ...]
    group_hash: str


def run_propagation_search(
    store: OntologyStore,
    index: InvertedIndex,
    ctx: ReferenceContext,
    query: PropagationQuery,
    params: EngineParams | None = None,
) -> list[AnnotatedCandidate]:
    """Search, group, order, filter, validate, score, sort, annotate."""
    params = params or EngineParams()
    k = len(ctx.reference_streams)
    hits = execute_query(index, query) - excluded_stream_ids(store, ctx.page.vis_id)
    discovered = sorted(hits)
    if len(discovered) < k:
        return []
    records = [store.get_data_stream(sid) for sid in discovered]
    refs = FeatureVectors.from_records(ctx.reference_streams)
    disc = FeatureVectors.from_records(records)
    bundle = compute_bundle(refs, disc, params.weights)
    if params.algorithm == "bruteforce":
        raw_groups = grouping.group_bruteforce(bundle.s_dd, k)
    else:
        raw_groups = grouping.group_spectral(bundle.s_dd, k, seed=params.kmeans_seed)

    survivors: dict[tuple[str, ...], tuple[DataStreamRecord, ...]] = {}
    groups = []
    for raw in raw_groups:
        if not raw.complete:
            continue
        ordered = order_group(raw.members, bundle.s_rd)
        members = tuple(records[m] for m in ordered)
        if query.must_some:
            covered = set()
            for member in members:
                covered.update(member.keywords)
            if not set(query.must_some) <= covered:
                continue
        report = validate_group(ordered, bundle.s_rd, bundle.s_dd, params.thresholds)
        if not report.passed:
            continue
        gammas = tuple(float(bundle.s_rd[pos, m]) for pos, m in enumerate(ordered))
        group = CandidateGroup(
            ordered_member_ids=tuple(r.id for r in members),
            score=score_group(ordered, bundle.s_rd, bundle.s_dd, params.w),
            validation=report,
            per_position_gamma=gammas,
        )
        groups.append(group)
        survivors[group.ordered_member_ids] = members

    return [
        AnnotatedCandidate(
            group=group,
            annotations=annotate_keywords(survivors[group.ordered_member_ids], ctx, query),
            group_hash=group_hash(group.ordered_member_ids),
        )
        for group in sort_groups(groups)
    ]


@dataclass(frozen=True)
class PropagationRecord:
    source_page_id: str
    new_page_id: str
    ordered_member_ids: tuple[str, ...]
    decided_at: str

    def to_json_dict(self) -> dict:
        return {
            "source_page_id": self.source_page_id,
            "new_page_id": self.new_page_id,
            "ordered_member_ids": list(self.ordered_member_ids),
            "decided_at": self.decided_at,
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "PropagationRecord":
        return cls(
            source_page_id=raw["source_page_id"],
            new_page_id=raw["new_page_id"],
            ordered_member_ids=tuple(raw["ordered_member_ids"]),
            decided_at=raw["decided_at"],
        )


class PropagationLog:
    """Append-only sidecar of activation decisions (propagations.ndjson)."""

    FILENAME = "propagations.ndjson"

    def __init__(self, records: Iterable[PropagationRecord] = ()) -> None:
        self._records = list(records)

    @property
    def records(self) -> tuple[PropagationRecord, ...]:
        return tuple(self._records)

    def append(self, record: PropagationRecord) -> None:
        self._records.append(record)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        tmp = directory / (self.FILENAME + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for record in self._records:
                fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")
        tmp.replace(directory / self.FILENAME)

    @classmethod
    def load(cls, directory: str | Path) -> "PropagationLog":
        path = Path(directory) / cls.FILENAME
        if not path.exists():
            return cls()
        records = [
            PropagationRecord.from_json_dict(json.loads(line))
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        return cls(records)


@dataclass(frozen=True)
class LinkSlot:
    """One dashboard child position and its counterpart for a candidate."""

    child_page_id: str
    vis_id: str
    wanted_data_ids: tuple[str, ...] | None
    resolved_page_id: str | None


def match_group_links(
    store: OntologyStore, ctx: ReferenceContext, ordered_member_ids: Sequence[str]
) -> tuple[LinkSlot, ...]:
    """Resolve every child slot of the reference page against the group.

    The counterpart of the reference stream at position i is the group
    member at position i; a slot resolves when an existing page binds the
    slot's vis function to exactly those counterpart streams, in order.
    """
    counterpart = dict(zip(ctx.page.data_ids, ordered_member_ids))
    bindings = store.list_page_bindings()
    slots = []
    for child_id in ctx.page.child_page_ids:
        child = store.get_page_binding(child_id)
        wanted = tuple(counterpart.get(sid) for sid in child.data_ids)
        if any(w is None for w in wanted):
            slots.append(LinkSlot(child_id, child.vis_id, None, None))
            continue
        resolved = None
        for binding in bindings:
            if binding.vis_id == child.vis_id and binding.data_ids == wanted:
                resolved = binding.id
                break
        slots.append(LinkSlot(child_id, child.vis_id, wanted, resolved))
    return tuple(slots)


def match_dashboard_links(
    store: OntologyStore,
    ctx: ReferenceContext,
    candidates: Sequence[AnnotatedCandidate | CandidateGroup],
) -> list[tuple[LinkSlot, ...]]:
    if not ctx.page.child_page_ids:
        raise ValueError("reference page has no child links to match")
    out = []
    for candidate in candidates:
        group = candidate.group if isinstance(candidate, AnnotatedCandidate) else candidate
        out.append(match_group_links(store, ctx, group.ordered_member_ids))
    return out


def render_propagated_text(
    ctx: ReferenceContext, member_records: Sequence[DataStreamRecord]
) -> tuple[str, str]:
    """Substitute reference-only keywords in title/description with the
    candidate's own differing keywords, longest first."""
    ref_universe: set[str] = set()
    for stream in ctx.reference_streams:
        ref_universe.update(stream.keywords)
    group_universe: set[str] = set()
    for record in member_records:
        group_universe.update(record.keywords)
    by_length = lambda t: (-len(t), t)  # noqa: E731
    ref_only = sorted(ref_universe - group_universe, key=by_length)
    group_only = sorted(group_universe - ref_universe, key=by_length)
    title, description = ctx.page.title, ctx.page.description
    for old, new in zip(ref_only, group_only):
        title = title.replace(old, new)
        description = description.replace(old, new)
    return title, description


def activate_propagation(
    store: OntologyStore,
    ctx: ReferenceContext,
    group: CandidateGroup,
    log: PropagationLog,
    *,
    allow_missing_links: bool = False,
    decided_at: str | None = None,
) -> tuple[PropagationRecord, PageBinding]:
    """Mint the new page for an approved group. Once per (vis, ordered
    members); the store's duplicate-binding check is the atomic backstop."""
    if group.validation is None or not group.validation.passed:
        raise GroupValidationError(
            "group failed validation and cannot be propagated"
        )
    member_records = [store.get_data_stream(sid) for sid in group.ordered_member_ids]
    child_ids: tuple[str, ...] = ()
    if ctx.page.child_page_ids:
        slots = match_group_links(store, ctx, group.ordered_member_ids)
        missing = [s.child_page_id for s in slots if s.resolved_page_id is None]
        if missing and not allow_missing_links:
            raise MissingLinkError(
                f"unresolved link slots for children: {', '.join(missing)}"
            )
        child_ids = tuple(s.resolved_page_id for s in slots if s.resolved_page_id)
    title, description = render_propagated_text(ctx, member_records)
    try:
        page = store.create_page_binding(
            vis_id=ctx.page.vis_id,
            data_ids=group.ordered_member_ids,
            title=title,
            description=description,
            is_reference=False,
            child_page_ids=child_ids,
        )
    except DuplicateBindingError as exc:
        raise DuplicatePropagationError(str(exc)) from exc
    record = PropagationRecord(
        source_page_id=ctx.page.id,
        new_page_id=page.id,
        ordered_member_ids=group.ordered_member_ids,
        decided_at=decided_at
        or dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    )
    log.append(record)
    return record, page


@dataclass(frozen=True)
class PageDescriptor:
    """Everything a client needs to render a page."""

    title: str
    description: str
    vis_function_name: str
    data_endpoints: tuple[str, ...]
    link_targets: tuple[str, ...]


def generate_page_descriptor(store: OntologyStore, page_id: str) -> PageDescriptor:
    page = store.get_page_binding(page_id)
    vis = store.get_vis_function(page.vis_id)
    endpoints = tuple(store.get_data_stream(sid).endpoint for sid in page.data_ids)
    return PageDescriptor(
        title=page.title,
        description=page.description,
        vis_function_name=vis.function_name,
        data_endpoints=endpoints,
        link_targets=page.child_page_ids,
    )


@dataclass(frozen=True)
class SearchOutcome:
    reference_page_id: str
    query: PropagationQuery
    params: EngineParams
    candidates: tuple[AnnotatedCandidate, ...]


class PropagationEngine:
    """Store, live index, and propagation log under one roof."""

    def __init__(
        self,
        store: OntologyStore,
        params: EngineParams | None = None,
        data_dir: str | Path | None = None,
    ) -> None:
        self.store = store
        self.params = params or EngineParams()
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.log = (
            PropagationLog.load(self.data_dir) if self.data_dir else PropagationLog()
        )
        self._index = empty_index()
        self._index_lock = threading.Lock()

    @classmethod
    def open(
        cls, data_dir: str | Path, params: EngineParams | None = None
    ) -> "PropagationEngine":
        return cls(OntologyStore.load(data_dir), params=params, data_dir=data_dir)

    @property
    def index(self) -> InvertedIndex:
        return self.refresh_index()

    def refresh_index(self) -> InvertedIndex:
        """Catch the index up to the change-log head, incrementally."""
        with self._index_lock:
            head = self.store.next_seq - 1
            if self._index.high_seq != head:
                try:
                    self._index = apply_change_log(
                        self._index, self.store, self._index.high_seq + 1
                    )
                except RebuildRequiredError:
                    self._index = build_index(self.store)
            return self._index

    def rebuild_index(self) -> InvertedIndex:
        with self._index_lock:
            self._index = build_index(self.store)
            return self._index

    def context(self, page_id: str) -> ReferenceContext:
        return ReferenceContext.from_store(self.store, page_id)

    def draft_query(self, page_id: str) -> PropagationQuery:
        return derive_reference_query(self.context(page_id))

    def search(
        self,
        page_id: str,
        query: PropagationQuery | None = None,
        params: EngineParams | None = None,
        *,
        auto_exclude: bool | None = None,
        pinned: Iterable[str] = (),
    ) -> SearchOutcome:
        """Full pipeline for one reference page.

        With no explicit query the derived draft is used and
        reference-identifying keywords are auto-excluded unless disabled.
        """
        ctx = self.context(page_id)
        index = self.refresh_index()
        if auto_exclude is None:
            auto_exclude = query is None
        resolved = resolve_search_query(
            self.store, index, ctx, query, auto_exclude=auto_exclude, pinned=pinned
        )
        params = params or self.params
        candidates = run_propagation_search(self.store, index, ctx, resolved, params)
        return SearchOutcome(
            reference_page_id=page_id,
            query=resolved,
            params=params,
            candidates=tuple(candidates),
        )

    def activate(
        self,
        page_id: str,
        group: CandidateGroup,
        *,
        allow_missing_links: bool = False,
    ) -> tuple[PropagationRecord, PageBinding]:
        ctx = self.context(page_id)
        record, page = activate_propagation(
            self.store, ctx, group, self.log, allow_missing_links=allow_missing_links
        )
        if self.data_dir is not None:
            self.save()
        return record, page

    def descriptor(self, page_id: str) -> PageDescriptor:
        return generate_page_descriptor(self.store, page_id)

    def suggest(self, prefix: str, limit: int = 10) -> list[Suggestion]:
        return suggest(self.refresh_index(), prefix, limit)

    def save(self) -> None:
        if self.data_dir is None:
            raise ValueError("engine has no data directory to save into")
        self.store.save(self.data_dir)
        self.log.save(self.data_dir)
