"""REST facade over the propagation engine.

Wire format is snake_case JSON; errors come back as
{"error_code": ..., "message": ...} with the codes not_found,
invalid_query, duplicate_propagation, and validation_failed. Groups are
identified on the wire by a stable 64-bit hash of their ordered member
ids so the client can activate one without re-sending it.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import __version__
from .config import ServiceConfig
from .engine import (
    AnnotatedCandidate,
    EngineParams,
    PropagationEngine,
    derive_reference_query,
)
from .errors import (
    DuplicateBindingError,
    DuplicatePropagationError,
    GroupValidationError,
    InvalidQueryError,
    InvalidRecordError,
    MissingLinkError,
    NotFoundError,
    PropagatorError,
)
from .grouping import GroupingThresholds
from .index import PropagationQuery
from .ingest import AgentState, run_agents, scan_manifests
from .similarity import SimilarityWeights
from .store import DataStreamRecord, DataType

_ERROR_WIRE = (
    (NotFoundError, 404, "not_found"),
    (InvalidQueryError, 400, "invalid_query"),
    (DuplicatePropagationError, 409, "duplicate_propagation"),
    (DuplicateBindingError, 409, "duplicate_propagation"),
    (GroupValidationError, 409, "validation_failed"),
    (MissingLinkError, 409, "validation_failed"),
    (InvalidRecordError, 400, "validation_failed"),
)


def _wire_error(exc: PropagatorError) -> tuple[int, str]:
    for exc_type, status, code in _ERROR_WIRE:
        if isinstance(exc, exc_type):
            return status, code
    return 400, "validation_failed"


class QueryBody(BaseModel):
    must_all: list[str] = []
    must_some: list[str] = []
    must_not: list[str] = []
    data_types: list[str] = []
    free_text: list[str] = []


class ParamsBody(BaseModel):
    algorithm: str | None = None
    alpha: float | None = None
    beta: float | None = None
    theta: float | None = None
    t_group: float | None = None
    t_stream: float | None = None
    s_allpair: float | None = None
    s_pair: float | None = None
    w: float | None = None
    kmeans_seed: int | None = None


class SearchBody(BaseModel):
    page_id: str
    query: QueryBody | None = None
    params: ParamsBody | None = None
    auto_exclude: bool = True


class PropagateBody(BaseModel):
    page_id: str
    group_hash: str
    allow_missing_links: bool = False


class StreamBody(BaseModel):
    id: str = ""
    endpoint: str
    description: str = ""
    keywords: list[str] = []
    data_type: str


class IngestRunBody(BaseModel):
    manifest_dir: str
    force: bool = False


def _to_query(body: QueryBody) -> PropagationQuery:
    data_types = []
    for value in body.data_types:
        try:
            data_types.append(DataType(value))
        except ValueError as exc:
            raise InvalidQueryError(f"unknown data type {value!r}") from exc
    return PropagationQuery(
        must_all=frozenset(body.must_all),
        must_some=frozenset(body.must_some),
        must_not=frozenset(body.must_not),
        data_types=frozenset(data_types),
        free_text=tuple(body.free_text),
    )


def _query_wire(query: PropagationQuery) -> dict:
    return {
        "must_all": sorted(query.must_all),
        "must_some": sorted(query.must_some),
        "must_not": sorted(query.must_not),
        "data_types": sorted(t.value for t in query.data_types),
        "free_text": list(query.free_text),
    }


def _merge_params(base: EngineParams, body: ParamsBody | None) -> EngineParams:
    if body is None:
        return base
    weights = base.weights
    if any(v is not None for v in (body.alpha, body.beta, body.theta)):
        weights = SimilarityWeights(
            alpha=body.alpha if body.alpha is not None else weights.alpha,
            beta=body.beta if body.beta is not None else weights.beta,
            theta=body.theta if body.theta is not None else weights.theta,
        )
    thresholds = base.thresholds
    if any(
        v is not None
        for v in (body.t_group, body.t_stream, body.s_allpair, body.s_pair)
    ):
        thresholds = GroupingThresholds(
            t_group=body.t_group if body.t_group is not None else thresholds.t_group,
            t_stream=body.t_stream
            if body.t_stream is not None
            else thresholds.t_stream,
            s_allpair=body.s_allpair
            if body.s_allpair is not None
            else thresholds.s_allpair,
            s_pair=body.s_pair if body.s_pair is not None else thresholds.s_pair,
        )
    return EngineParams(
        algorithm=body.algorithm if body.algorithm is not None else base.algorithm,
        weights=weights,
        thresholds=thresholds,
        w=body.w if body.w is not None else base.w,
        kmeans_seed=body.kmeans_seed
        if body.kmeans_seed is not None
        else base.kmeans_seed,
    )


def candidate_wire(rank: int, candidate: AnnotatedCandidate) -> dict:
    group = candidate.group
    validation = group.validation
    return {
        "group_hash": candidate.group_hash,
        "rank": rank,
        "score": group.score,
        "ordered_member_ids": list(group.ordered_member_ids),
        "per_position_gamma": list(group.per_position_gamma),
        "validation": {
            "passed": validation.passed,
            "reason": validation.reason,
            "checks": [
                {
                    "name": check.name,
                    "value": check.value,
                    "threshold": check.threshold,
                    "passed": check.passed,
                }
                for check in validation.checks
            ],
        },
        "annotations": [
            [{"keyword": a.keyword, "status": a.status.value} for a in stream]
            for stream in candidate.annotations
        ],
    }


def create_app(
    engine: PropagationEngine, config: ServiceConfig | None = None
) -> FastAPI:
    app = FastAPI(title="propagator", version=__version__)
    app.state.engine = engine
    app.state.config = config or ServiceConfig()
    app.state.search_cache = {}
    engine.refresh_index()

    @app.exception_handler(PropagatorError)
    async def on_propagator_error(request: Request, exc: PropagatorError):
        status, code = _wire_error(exc)
        return JSONResponse(
            status_code=status, content={"error_code": code, "message": str(exc)}
        )

    def persist() -> None:
        if engine.data_dir is not None:
            engine.save()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "index_seq": engine.refresh_index().high_seq}

    @app.get("/streams")
    def list_streams():
        return {"streams": [r.to_json_dict() for r in engine.store.list_data_streams()]}

    @app.post("/streams", status_code=201)
    def put_stream(body: StreamBody):
        record = DataStreamRecord(
            id=body.id,
            endpoint=body.endpoint,
            description=body.description,
            keywords=tuple(body.keywords),
            data_type=DataType.coerce(body.data_type),
        )
        stream_id = engine.store.put_data_stream(record)
        persist()
        return {"id": stream_id}

    @app.get("/vis-functions")
    def list_vis_functions():
        return {
            "vis_functions": [r.to_json_dict() for r in engine.store.list_vis_functions()]
        }

    @app.get("/pages/{page_id}")
    def get_page(page_id: str):
        return engine.store.get_page_binding(page_id).to_json_dict()

    @app.get("/pages/{page_id}/descriptor")
    def get_descriptor(page_id: str):
        descriptor = engine.descriptor(page_id)
        return {
            "title": descriptor.title,
            "description": descriptor.description,
            "vis_function_name": descriptor.vis_function_name,
            "data_endpoints": list(descriptor.data_endpoints),
            "link_targets": list(descriptor.link_targets),
        }

    @app.get("/pages/{page_id}/reference-query")
    def get_reference_query(page_id: str):
        return _query_wire(derive_reference_query(engine.context(page_id)))

    @app.post("/search")
    def search(body: SearchBody):
        query = _to_query(body.query) if body.query is not None else None
        try:
            params = _merge_params(engine.params, body.params)
        except ValueError as exc:
            raise InvalidQueryError(str(exc)) from exc
        auto_exclude = body.auto_exclude if query is None else False
        outcome = engine.search(
            body.page_id, query, params, auto_exclude=auto_exclude
        )
        app.state.search_cache[body.page_id] = {
            c.group_hash: c.group for c in outcome.candidates
        }
        return {
            "reference_page_id": outcome.reference_page_id,
            "query": _query_wire(outcome.query),
            "count": len(outcome.candidates),
            "groups": [
                candidate_wire(rank, candidate)
                for rank, candidate in enumerate(outcome.candidates, 1)
            ],
        }

    @app.post("/propagate")
    def propagate(body: PropagateBody):
        cached = app.state.search_cache.get(body.page_id, {})
        group = cached.get(body.group_hash)
        if group is None:
            raise NotFoundError(
                f"no cached group {body.group_hash!r} for page {body.page_id!r}; "
                "run /search first"
            )
        record, page = engine.activate(
            body.page_id, group, allow_missing_links=body.allow_missing_links
        )
        return {
            "new_page_id": page.id,
            "source_page_id": record.source_page_id,
            "ordered_member_ids": list(record.ordered_member_ids),
            "decided_at": record.decided_at,
        }

    @app.get("/suggest")
    def get_suggestions(prefix: str = "", limit: int = 10):
        suggestions = engine.suggest(prefix, limit)
        return {
            "suggestions": [
                {"text": s.text, "kind": s.kind.value, "count": s.count}
                for s in suggestions
            ]
        }

    @app.post("/admin/ingest/run")
    def ingest_run(body: IngestRunBody):
        if engine.data_dir is None:
            raise InvalidQueryError("service has no data directory for ingest caches")
        manifests = scan_manifests(body.manifest_dir)
        state = AgentState.load(engine.data_dir)
        outcomes = run_agents(
            manifests, engine.store, engine.data_dir, state, force=body.force
        )
        state.save(engine.data_dir)
        persist()
        return {
            "outcomes": [
                {"source_id": o.source_id, "status": o.status, "detail": o.detail}
                for o in outcomes
            ]
        }

    @app.post("/admin/index/rebuild")
    def index_rebuild():
        index = engine.rebuild_index()
        return {"high_seq": index.high_seq, "terms": index.term_count()}

    @app.get("/data/{stream_id}")
    def get_data(stream_id: str):
        engine.store.get_data_stream(stream_id)
        if engine.data_dir is None:
            raise NotFoundError(f"no cached series for {stream_id!r}")
        path = Path(engine.data_dir) / f"{stream_id}.csv"
        if not path.exists():
            raise NotFoundError(f"no cached series for {stream_id!r}")
        return PlainTextResponse(path.read_text(encoding="utf-8"), media_type="text/csv")

    return app


def serve(config: ServiceConfig) -> None:
    """Open the store named by the config and serve until interrupted."""
    import uvicorn

    from .config import ConfigError

    if not config.store_path:
        raise ConfigError("store_path is required to serve")
    engine = PropagationEngine.open(config.store_path, params=config.engine_params())
    uvicorn.run(create_app(engine, config), host="127.0.0.1", port=config.listen_port)
