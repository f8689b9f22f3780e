"""Manifest-driven stream ingestion plus the synthetic desk-scale corpus.

A manifest names one upstream source (file URI or HTTP URL, two-column
CSV ``date,value`` with the header required), a transform, and the
metadata the resulting stream is registered with. Agents poll manifests
on a per-manifest period; the transformed series is cached beside the
store as ``<stream-id>.csv`` and served back over the data endpoint.
"""

from __future__ import annotations

import csv
import io
import json
import random
import time
import urllib.request
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence
from urllib.error import URLError

from .errors import FetchError, InvalidRecordError, ParseError
from .store import DataStreamRecord, DataType, OntologyStore


class TransformKind(str, Enum):
    IDENTITY = "identity"
    PER_CAPITA_100K = "per_capita_100k"


@dataclass(frozen=True)
class Transform:
    kind: TransformKind = TransformKind.IDENTITY
    population: int | None = None

    def __post_init__(self) -> None:
        if self.kind is TransformKind.PER_CAPITA_100K:
            if not self.population or self.population <= 0:
                raise InvalidRecordError("per_capita_100k requires population > 0")

    def apply(self, values: Sequence[float]) -> list[float]:
        if self.kind is TransformKind.IDENTITY:
            return list(values)
        return [v * 100000.0 / self.population for v in values]  # type: ignore[operator]


@dataclass(frozen=True)
class IngestManifest:
    source_id: str
    source: str
    transform: Transform = Transform()
    keywords: tuple[str, ...] = ()
    data_type: DataType = DataType.TIMESERIES
    description_template: str = "{source_id}"
    period_seconds: int = 86400

    def __post_init__(self) -> None:
        if not self.source_id:
            raise InvalidRecordError("source_id must be non-empty")
        if self.period_seconds < 1:
            raise InvalidRecordError("period_seconds must be >= 1")
        object.__setattr__(self, "keywords", tuple(self.keywords))
        object.__setattr__(self, "data_type", DataType.coerce(self.data_type))

    @property
    def stream_id(self) -> str:
        return f"ds-{self.source_id}"

    @classmethod
    def from_json_dict(cls, raw: dict) -> "IngestManifest":
        transform_raw = raw.get("transform", {"kind": "identity"})
        if isinstance(transform_raw, str):
            transform_raw = {"kind": transform_raw}
        transform = Transform(
            kind=TransformKind(transform_raw["kind"]),
            population=transform_raw.get("population"),
        )
        return cls(
            source_id=raw["source_id"],
            source=raw["source"],
            transform=transform,
            keywords=tuple(raw.get("keywords", ())),
            data_type=DataType.coerce(raw.get("data_type", "timeseries")),
            description_template=raw.get("description_template", "{source_id}"),
            period_seconds=int(raw.get("period_seconds", 86400)),
        )


def load_manifest(path: str | Path) -> IngestManifest:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ParseError(f"manifest {path}: {exc}") from exc
    return IngestManifest.from_json_dict(raw)


def scan_manifests(directory: str | Path) -> list[IngestManifest]:
    manifests = [load_manifest(p) for p in sorted(Path(directory).glob("*.json"))]
    return sorted(manifests, key=lambda m: m.source_id)


def _fetch(source: str) -> str:
    if source.startswith(("http://", "https://", "file://")):
        try:
            with urllib.request.urlopen(source) as resp:
                return resp.read().decode("utf-8")
        except (URLError, OSError, ValueError) as exc:
            raise FetchError(f"cannot fetch {source}: {exc}") from exc
    try:
        return Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise FetchError(f"cannot read {source}: {exc}") from exc


def _parse_series(text: str, source: str) -> list[tuple[str, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError(f"{source}: empty payload, expected a date,value header")
    out = []
    for line_no, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) < 2:
            raise ParseError(f"{source}:{line_no}: expected two columns")
        try:
            out.append((row[0], float(row[1])))
        except ValueError as exc:
            raise ParseError(f"{source}:{line_no}: non-numeric value {row[1]!r}") from exc
    return out


def run_manifest_once(
    manifest: IngestManifest, store: OntologyStore, cache_dir: str | Path
) -> str:
    """Fetch, transform, cache, and register one source. Failures leave the
    store untouched."""
    series = _parse_series(_fetch(manifest.source), manifest.source)
    values = manifest.transform.apply([v for _, v in series])
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    cache_path = cache_dir / f"{manifest.stream_id}.csv"
    with open(cache_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value"])
        for (date, _), value in zip(series, values):
            writer.writerow([date, repr(value)])
    record = DataStreamRecord(
        id=manifest.stream_id,
        endpoint=f"/data/{manifest.stream_id}",
        description=manifest.description_template.format(source_id=manifest.source_id),
        keywords=manifest.keywords,
        data_type=manifest.data_type,
    )
    return store.put_data_stream(record)


@dataclass
class AgentState:
    """Last-success timestamps per source, persisted next to the caches."""

    last_success: dict[str, float] = field(default_factory=dict)

    @classmethod
    def load(cls, cache_dir: str | Path) -> "AgentState":
        path = Path(cache_dir) / "agent_state.json"
        if path.exists():
            return cls(last_success=json.loads(path.read_text(encoding="utf-8")))
        return cls()

    def save(self, cache_dir: str | Path) -> None:
        path = Path(cache_dir) / "agent_state.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.last_success, sort_keys=True), encoding="utf-8")


@dataclass(frozen=True)
class AgentOutcome:
    source_id: str
    status: str  # success | failure | skipped
    detail: str = ""


def run_agents(
    manifests: Iterable[IngestManifest],
    store: OntologyStore,
    cache_dir: str | Path,
    state: AgentState,
    now: float | None = None,
    force: bool = False,
) -> list[AgentOutcome]:
    """Execute every stale manifest; one failure never stops the batch."""
    now = time.time() if now is None else now
    outcomes = []
    for manifest in manifests:
        last = state.last_success.get(manifest.source_id)
        if not force and last is not None and now - last < manifest.period_seconds:
            outcomes.append(AgentOutcome(manifest.source_id, "skipped"))
            continue
        try:
            stream_id = run_manifest_once(manifest, store, cache_dir)
        except Exception as exc:  # noqa: BLE001 - batch isolation is the contract
            outcomes.append(AgentOutcome(manifest.source_id, "failure", str(exc)))
            continue
        state.last_success[manifest.source_id] = now
        outcomes.append(AgentOutcome(manifest.source_id, "success", stream_id))
    return outcomes


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    regions: int
    categories: tuple[str, ...]
    distractors: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.regions < 1:
            raise InvalidRecordError("regions must be positive")
        object.__setattr__(self, "categories", tuple(self.categories))
        if not self.categories or len(set(self.categories)) != len(self.categories):
            raise InvalidRecordError("categories must be non-empty and distinct")
        if self.distractors < 0:
            raise InvalidRecordError("distractors must be non-negative")


def generate_synthetic_corpus(
    spec: SyntheticCorpusSpec, store: OntologyStore | None = None
) -> list[DataStreamRecord]:
    """Deterministic regional mortality corpus.

    regions × categories clean streams, plus distractors whose single
    category keyword is swapped for a unique noise token. Distractor ids
    sort after the clean ids.
    """
    rng = random.Random(spec.seed)
    records = []
    for region in range(1, spec.regions + 1):
        for category in spec.categories:
            records.append(
                DataStreamRecord(
                    id=f"ds-r{region:03d}-{category}",
                    endpoint=f"/api/v1/mortality/region_{region}/{category}",
                    description=f"weekly mortality in {category} for region_{region}",
                    keywords=(
                        "country", "weekly", "mortality", "place_of_death",
                        f"region_{region}", category,
                    ),
                    data_type=DataType.TIMESERIES,
                )
            )
    for j in range(spec.distractors):
        region = rng.randint(1, spec.regions)
        noise = f"noise{j}"
        records.append(
            DataStreamRecord(
                id=f"ds-x{j:03d}-region_{region}-{noise}",
                endpoint=f"/api/v1/mortality/region_{region}/{noise}",
                description=f"weekly mortality in {noise} for region_{region}",
                keywords=(
                    "country", "weekly", "mortality", "place_of_death",
                    f"region_{region}", noise,
                ),
                data_type=DataType.TIMESERIES,
            )
        )
    if store is not None:
        for record in records:
            store.put_data_stream(record)
    return records
