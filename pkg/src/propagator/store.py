"""Three-class ontology store with an append-only change log.

The store holds the full graph the rest of the system works from:

* ``DataStreamRecord`` — where a stream lives and how it is described.
* ``VisFunctionRecord`` — a named, reusable plotting function.
* ``PageBinding`` — one vis function bound to an ordered list of streams,
  optionally parenting child pages (dashboards).

Every successful mutation appends one ``ChangeLogEntry``; seq numbers are
gap-free from 1 so the indexer can resume from any point. Mutations are
serialized through a single writer lock; reads hand out immutable records
and are safe from any thread.

Snapshots are a directory of ndjson files (``streams.ndjson``,
``visfns.ndjson``, ``pages.ndjson``, ``changelog.ndjson``), written to a
temp file and renamed into place so readers never observe a torn file.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable

from .errors import (
    DanglingReferenceError,
    DuplicateBindingError,
    DuplicateFunctionNameError,
    InvalidRecordError,
    NotFoundError,
    SnapshotError,
)
from .text import tokenize_endpoint

SCHEMA_VERSION = 1

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def _ulid() -> str:
    value = (int(time.time() * 1000) << 80) | int.from_bytes(secrets.token_bytes(10), "big")
    return "".join(_CROCKFORD[(value >> shift) & 31] for shift in range(125, -5, -5))


def new_id(prefix: str) -> str:
    """Generate a 'ds-'/'vis-'/'pg-' style identifier for callers that omit one."""
    return f"{prefix}-{_ulid()}"


class DataType(str, Enum):
    TIMESERIES = "timeseries"
    CUMULATIVE_TIMESERIES = "cumulative_timeseries"
    MATRIX = "matrix"
    GEO = "geo"
    SCALAR = "scalar"
    OTHER = "other"

    @classmethod
    def coerce(cls, value: "DataType | str") -> "DataType":
        """Map unknown labels to OTHER instead of failing."""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            return cls.OTHER


class ChangeKind(str, Enum):
    PUT_STREAM = "put_stream"
    PUT_VIS = "put_vis"
    PUT_PAGE = "put_page"
    LINK_PAGES = "link_pages"


def _check_keywords(keywords: Iterable[str]) -> tuple[str, ...]:
    ordered = tuple(dict.fromkeys(keywords))
    if not ordered:
        raise InvalidRecordError("keywords must be non-empty")
    for kw in ordered:
        if not kw or kw != kw.lower() or any(c.isspace() for c in kw):
            raise InvalidRecordError(f"bad keyword {kw!r}: must be lowercase with no whitespace")
    return ordered


@dataclass(frozen=True)
class DataStreamRecord:
    endpoint: str
    description: str
    keywords: tuple[str, ...]
    data_type: DataType
    id: str = ""

    def __post_init__(self) -> None:
        if not self.endpoint or not tokenize_endpoint(self.endpoint):
            raise InvalidRecordError(f"endpoint {self.endpoint!r} is empty or not tokenizable")
        object.__setattr__(self, "keywords", _check_keywords(self.keywords))
        object.__setattr__(self, "data_type", DataType.coerce(self.data_type))
        if not self.id:
            object.__setattr__(self, "id", new_id("ds"))

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "endpoint": self.endpoint,
            "description": self.description,
            "keywords": list(self.keywords),
            "data_type": self.data_type.value,
        }

    @classmethod
    def from_json_dict(cls, raw: dict[str, Any]) -> "DataStreamRecord":
        return cls(
            id=raw["id"],
            endpoint=raw["endpoint"],
            description=raw["description"],
            keywords=tuple(raw["keywords"]),
            data_type=DataType.coerce(raw["data_type"]),
        )


@dataclass(frozen=True)
class VisFunctionRecord:
    function_name: str
    description: str = ""
    id: str = ""

    def __post_init__(self) -> None:
        if not self.function_name:
            raise InvalidRecordError("function_name must be non-empty")
        if not self.id:
            object.__setattr__(self, "id", new_id("vis"))

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "function_name": self.function_name,
            "description": self.description,
        }

    @classmethod
    def from_json_dict(cls, raw: dict[str, Any]) -> "VisFunctionRecord":
        return cls(id=raw["id"], function_name=raw["function_name"], description=raw["description"])


@dataclass(frozen=True)
class PageBinding:
    vis_id: str
    data_ids: tuple[str, ...]
    title: str
    description: str
    is_reference: bool = False
    child_page_ids: tuple[str, ...] = ()
    id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "data_ids", tuple(self.data_ids))
        object.__setattr__(self, "child_page_ids", tuple(self.child_page_ids))
        if not self.data_ids:
            raise InvalidRecordError("data_ids must be non-empty")
        if len(set(self.data_ids)) != len(self.data_ids):
            raise InvalidRecordError("data_ids must not contain duplicates")
        if not self.id:
            object.__setattr__(self, "id", new_id("pg"))
        if self.id in self.child_page_ids:
            raise InvalidRecordError("a page cannot be its own child")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "vis_id": self.vis_id,
            "data_ids": list(self.data_ids),
            "child_page_ids": list(self.child_page_ids),
            "title": self.title,
            "description": self.description,
            "is_reference": self.is_reference,
        }

    @classmethod
    def from_json_dict(cls, raw: dict[str, Any]) -> "PageBinding":
        return cls(
            id=raw["id"],
            vis_id=raw["vis_id"],
            data_ids=tuple(raw["data_ids"]),
            child_page_ids=tuple(raw["child_page_ids"]),
            title=raw["title"],
            description=raw["description"],
            is_reference=raw["is_reference"],
        )


@dataclass(frozen=True)
class ChangeLogEntry:
    seq: int
    kind: ChangeKind
    payload_id: str

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "seq": self.seq,
            "kind": self.kind.value,
            "payload_id": self.payload_id,
        }

    @classmethod
    def from_json_dict(cls, raw: dict[str, Any]) -> "ChangeLogEntry":
        return cls(seq=raw["seq"], kind=ChangeKind(raw["kind"]), payload_id=raw["payload_id"])


_FILES = {
    "streams.ndjson": (DataStreamRecord, "_streams"),
    "visfns.ndjson": (VisFunctionRecord, "_visfns"),
    "pages.ndjson": (PageBinding, "_pages"),
    "changelog.ndjson": (ChangeLogEntry, "_log"),
}


class OntologyStore:
    """In-memory graph store; persists on demand via save()/load()."""

    def __init__(self) -> None:
        self._streams: dict[str, DataStreamRecord] = {}
        self._visfns: dict[str, VisFunctionRecord] = {}
        self._pages: dict[str, PageBinding] = {}
        self._log: list[ChangeLogEntry] = []
        self._write_lock = threading.Lock()

    # -- mutations ---------------------------------------------------------

    def put_data_stream(self, record: DataStreamRecord) -> str:
        with self._write_lock:
            self._streams[record.id] = record
            self._append(ChangeKind.PUT_STREAM, record.id)
            return record.id

    def put_vis_function(self, record: VisFunctionRecord) -> str:
        with self._write_lock:
            for other in self._visfns.values():
                if other.function_name == record.function_name and other.id != record.id:
                    raise DuplicateFunctionNameError(
                        f"function_name {record.function_name!r} already registered as {other.id}"
                    )
            self._visfns[record.id] = record
            self._append(ChangeKind.PUT_VIS, record.id)
            return record.id

    def create_page_binding(
        self,
        vis_id: str,
        data_ids: Iterable[str],
        title: str = "",
        description: str = "",
        is_reference: bool = False,
        child_page_ids: Iterable[str] = (),
        page_id: str = "",
    ) -> PageBinding:
        binding = PageBinding(
            id=page_id,
            vis_id=vis_id,
            data_ids=tuple(data_ids),
            child_page_ids=tuple(child_page_ids),
            title=title,
            description=description,
            is_reference=is_reference,
        )
        with self._write_lock:
            self._check_binding_refs(binding)
            for other in self._pages.values():
                if other.vis_id == binding.vis_id and other.data_ids == binding.data_ids:
                    raise DuplicateBindingError(
                        f"page {other.id} already binds {vis_id} to this exact stream list"
                    )
            if binding.id in self._pages:
                raise InvalidRecordError(f"page id {binding.id!r} already exists")
            self._pages[binding.id] = binding
            self._append(ChangeKind.PUT_PAGE, binding.id)
            return binding

    def add_child_links(self, page_id: str, child_page_ids: Iterable[str]) -> PageBinding:
        """Append dashboard children; the only mutation a stored binding allows."""
        new_children = tuple(child_page_ids)
        with self._write_lock:
            page = self._pages.get(page_id)
            if page is None:
                raise NotFoundError(f"page {page_id!r} not found")
            for cid in new_children:
                if cid == page_id:
                    raise InvalidRecordError("a page cannot be its own child")
                if cid not in self._pages:
                    raise DanglingReferenceError(f"child page {cid!r} not found")
            merged = tuple(dict.fromkeys(page.child_page_ids + new_children))
            updated = replace(page, child_page_ids=merged)
            self._pages[page_id] = updated
            self._append(ChangeKind.LINK_PAGES, page_id)
            return updated

    def _check_binding_refs(self, binding: PageBinding) -> None:
        if binding.vis_id not in self._visfns:
            raise DanglingReferenceError(f"vis function {binding.vis_id!r} not found")
        for did in binding.data_ids:
            if did not in self._streams:
                raise DanglingReferenceError(f"data stream {did!r} not found")
        for cid in binding.child_page_ids:
            if cid not in self._pages:
                raise DanglingReferenceError(f"child page {cid!r} not found")

    def _append(self, kind: ChangeKind, payload_id: str) -> None:
        self._log.append(ChangeLogEntry(seq=len(self._log) + 1, kind=kind, payload_id=payload_id))

    # -- reads -------------------------------------------------------------

    def get_data_stream(self, stream_id: str) -> DataStreamRecord:
        try:
            return self._streams[stream_id]
        except KeyError:
            raise NotFoundError(f"data stream {stream_id!r} not found") from None

    def get_vis_function(self, vis_id: str) -> VisFunctionRecord:
        try:
            return self._visfns[vis_id]
        except KeyError:
            raise NotFoundError(f"vis function {vis_id!r} not found") from None

    def get_page_binding(self, page_id: str) -> PageBinding:
        try:
            return self._pages[page_id]
        except KeyError:
            raise NotFoundError(f"page {page_id!r} not found") from None

    def list_data_streams(self) -> list[DataStreamRecord]:
        return list(self._streams.values())

    def list_vis_functions(self) -> list[VisFunctionRecord]:
        return list(self._visfns.values())

    def list_page_bindings(self) -> list[PageBinding]:
        return list(self._pages.values())

    def has_data_stream(self, stream_id: str) -> bool:
        return stream_id in self._streams

    def read_change_log(self, from_seq: int = 1) -> list[ChangeLogEntry]:
        if from_seq < 1:
            raise ValueError("from_seq must be >= 1")
        return self._log[from_seq - 1 :]

    @property
    def next_seq(self) -> int:
        return len(self._log) + 1

    # -- snapshots ---------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with self._write_lock:
            tables: dict[str, list[Any]] = {
                "streams.ndjson": list(self._streams.values()),
                "visfns.ndjson": list(self._visfns.values()),
                "pages.ndjson": list(self._pages.values()),
                "changelog.ndjson": list(self._log),
            }
        for name, rows in tables.items():
            target = directory / name
            tmp = directory / f".{name}.tmp-{os.getpid()}"
            with open(tmp, "w", encoding="utf-8") as fh:
                for row in rows:
                    fh.write(json.dumps(row.to_json_dict(), sort_keys=True))
                    fh.write("\n")
            os.replace(tmp, target)

    @classmethod
    def snapshot_exists(cls, directory: str | Path) -> bool:
        """True when the directory holds any snapshot file, even a partial one."""
        return any((Path(directory) / name).exists() for name in _FILES)

    @classmethod
    def load(cls, directory: str | Path) -> "OntologyStore":
        directory = Path(directory)
        store = cls()
        for name, (record_cls, attr) in _FILES.items():
            path = directory / name
            if not path.exists():
                raise SnapshotError(f"snapshot file {path} missing")
            rows = []
            for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    rows.append(record_cls.from_json_dict(raw))
                except (ValueError, KeyError) as exc:
                    raise SnapshotError(f"{path}:{line_no}: {exc}") from exc
            if attr == "_log":
                store._log = rows
            else:
                setattr(store, attr, {r.id: r for r in rows})
        return store
