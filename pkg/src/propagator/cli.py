"""Command line for serving, ingest, corpus generation, index upkeep, and propagation."""

from __future__ import annotations

import functools
import json

import click

from .config import ServiceConfig, apply_overrides, load_config
from .engine import ALGORITHMS, PropagationEngine
from .errors import NotFoundError, PropagatorError
from .index import PropagationQuery
from .ingest import (
    AgentState,
    SyntheticCorpusSpec,
    generate_synthetic_corpus,
    run_agents,
    scan_manifests,
)
from .service import candidate_wire, serve as run_service
from .store import DataType, OntologyStore, VisFunctionRecord

DEFAULT_CATEGORIES = "home,hospital,care_home,hospice,other,elsewhere"


def cli_errors(fn):
    """Turn domain errors into clean exits: 2 for unknown ids, 1 otherwise."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NotFoundError as exc:
            raise click.UsageError(str(exc)) from exc
        except PropagatorError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def resolve_store(config: ServiceConfig, store: str | None) -> str:
    path = store or config.store_path
    if not path:
        raise click.ClickException(
            "no store directory; pass --store or set store_path in the config"
        )
    return path


def open_engine(config: ServiceConfig, store: str | None) -> PropagationEngine:
    return PropagationEngine.open(
        resolve_store(config, store), params=config.engine_params()
    )


def open_or_create_engine(config: ServiceConfig, store: str | None) -> PropagationEngine:
    """Like open_engine, but a directory with no snapshot starts empty."""
    path = resolve_store(config, store)
    if OntologyStore.snapshot_exists(path):
        return PropagationEngine.open(path, params=config.engine_params())
    return PropagationEngine(OntologyStore(), params=config.engine_params(), data_dir=path)


def param_options(fn):
    """Flags shared by every verb that runs the engine."""
    options = [
        click.option("--algorithm", type=click.Choice(ALGORITHMS), default=None),
        click.option("--alpha", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--theta", type=float, default=None),
        click.option("--t-group", "t_group", type=float, default=None),
        click.option("--t-stream", "t_stream", type=float, default=None),
        click.option("--s-allpair", "s_allpair", type=float, default=None),
        click.option("--s-pair", "s_pair", type=float, default=None),
        click.option("--w", type=float, default=None),
        click.option("--kmeans-seed", "kmeans_seed", type=int, default=None),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def layer_params(config: ServiceConfig, values: dict) -> ServiceConfig:
    keys = (
        "algorithm",
        "alpha",
        "beta",
        "theta",
        "t_group",
        "t_stream",
        "s_allpair",
        "s_pair",
        "w",
        "kmeans_seed",
    )
    return apply_overrides(config, **{k: values.pop(k) for k in keys})


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="JSON config file; $PROPAGATOR_CONFIG is used when omitted.",
)
@click.pass_context
@cli_errors
def main(ctx, config_path):
    """Ontology-backed search and propagation of visualization designs."""
    ctx.obj = load_config(config_path)


@main.command("serve")
@click.option("--store", type=click.Path(file_okay=False), default=None)
@click.option("--port", type=int, default=None)
@param_options
@click.pass_obj
@cli_errors
def serve_cmd(config, store, port, **params):
    """Serve the REST API over a persisted store."""
    config = layer_params(config, params)
    config = apply_overrides(config, store_path=store, listen_port=port)
    run_service(config)


@main.command("synth-corpus")
@click.option("--store", type=click.Path(file_okay=False), required=True)
@click.option("--regions", type=int, default=20, show_default=True)
@click.option("--categories", default=DEFAULT_CATEGORIES, show_default=True)
@click.option("--distractors", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=101, show_default=True)
@click.option(
    "--reference/--no-reference",
    default=True,
    help="Also bind a stacked-bar reference page over the first region.",
)
@click.pass_obj
@cli_errors
def synth_corpus(config, store, regions, categories, distractors, seed, reference):
    """Generate the synthetic regional corpus into a store."""
    names = tuple(c.strip() for c in categories.split(",") if c.strip())
    spec = SyntheticCorpusSpec(
        regions=regions, categories=names, distractors=distractors, seed=seed
    )
    engine = open_or_create_engine(config, store)
    records = generate_synthetic_corpus(spec, engine.store)
    click.echo(f"registered {len(records)} streams")
    if reference:
        vis_id = engine.store.put_vis_function(
            VisFunctionRecord(
                id="vis-stack1",
                function_name="stacked_bar_v1",
                description="stacked bar chart of weekly values",
            )
        )
        page = engine.store.create_page_binding(
            vis_id=vis_id,
            data_ids=tuple(f"ds-r001-{c}" for c in names),
            title="Weekly mortality for region_1",
            description="Weekly mortality by place of death for region_1",
            is_reference=True,
            page_id="pg-ref1",
        )
        click.echo(f"reference page {page.id}")
    engine.save()


@main.group()
def ingest():
    """Fetch, transform, and register external series."""


@ingest.command("run")
@click.option(
    "--manifests",
    "manifest_dir",
    type=click.Path(exists=True, file_okay=False),
    required=True,
)
@click.option("--store", type=click.Path(file_okay=False), default=None)
@click.option("--force", is_flag=True, help="Run agents even when fresh.")
@click.pass_obj
@cli_errors
def ingest_run(config, manifest_dir, store, force):
    """Run every manifest in a directory once."""
    engine = open_or_create_engine(config, store)
    manifests = scan_manifests(manifest_dir)
    state = AgentState.load(engine.data_dir)
    outcomes = run_agents(manifests, engine.store, engine.data_dir, state, force=force)
    state.save(engine.data_dir)
    engine.save()
    failures = 0
    for outcome in outcomes:
        click.echo(f"{outcome.source_id}\t{outcome.status}\t{outcome.detail}")
        failures += outcome.status == "failure"
    if failures:
        raise click.ClickException(f"{failures} of {len(outcomes)} agents failed")


@main.group()
def index():
    """Inverted-index maintenance."""


@index.command("status")
@click.option("--store", type=click.Path(file_okay=False), default=None)
@click.pass_obj
@cli_errors
def index_status(config, store):
    engine = open_engine(config, store)
    idx = engine.refresh_index()
    click.echo(f"high_seq {idx.high_seq}")
    click.echo(f"terms {idx.term_count()}")


@index.command("rebuild")
@click.option("--store", type=click.Path(file_okay=False), default=None)
@click.pass_obj
@cli_errors
def index_rebuild(config, store):
    engine = open_engine(config, store)
    idx = engine.rebuild_index()
    click.echo(f"high_seq {idx.high_seq}")
    click.echo(f"terms {idx.term_count()}")


def build_query(must_all, must_some, must_not, data_types, free_text):
    if not (must_all or must_some or must_not or data_types or free_text):
        return None
    types = []
    for value in data_types:
        try:
            types.append(DataType(value))
        except ValueError as exc:
            raise click.UsageError(f"unknown data type {value!r}") from exc
    return PropagationQuery(
        must_all=frozenset(must_all),
        must_some=frozenset(must_some),
        must_not=frozenset(must_not),
        data_types=frozenset(types),
        free_text=tuple(free_text),
    )


@main.command("search")
@click.argument("page_id")
@click.option("--store", type=click.Path(file_okay=False), default=None)
@click.option("--must-all", "must_all", multiple=True)
@click.option("--must-some", "must_some", multiple=True)
@click.option("--must-not", "must_not", multiple=True)
@click.option("--data-type", "data_types", multiple=True)
@click.option("--free-text", "free_text", multiple=True)
@click.option("--auto-exclude/--no-auto-exclude", "auto_exclude", default=True)
@click.option("--json", "as_json", is_flag=True)
@param_options
@click.pass_obj
@cli_errors
def search_cmd(
    config,
    page_id,
    store,
    must_all,
    must_some,
    must_not,
    data_types,
    free_text,
    auto_exclude,
    as_json,
    **params,
):
    """Rank candidate stream groups for a reference page."""
    config = layer_params(config, params)
    engine = open_engine(config, store)
    query = build_query(must_all, must_some, must_not, data_types, free_text)
    outcome = engine.search(
        page_id, query, auto_exclude=auto_exclude if query is None else False
    )
    if as_json:
        click.echo(
            json.dumps(
                [
                    candidate_wire(rank, c)
                    for rank, c in enumerate(outcome.candidates, 1)
                ],
                indent=2,
            )
        )
        return
    click.echo(f"{len(outcome.candidates)} groups for {page_id}")
    for rank, candidate in enumerate(outcome.candidates, 1):
        group = candidate.group
        members = " ".join(group.ordered_member_ids)
        click.echo(f"{rank:>3}  {group.score:.4f}  {members}")


@main.command("propagate")
@click.argument("page_id")
@click.option("--store", type=click.Path(file_okay=False), default=None)
@click.option("--rank", type=int, default=None, help="Propagate the group at this rank.")
@click.option("--all-validated", is_flag=True, help="Propagate every returned group.")
@click.option("--allow-missing-links", is_flag=True)
@click.option("--yes", is_flag=True, help="Actually create pages.")
@param_options
@click.pass_obj
@cli_errors
def propagate_cmd(
    config, page_id, store, rank, all_validated, allow_missing_links, yes, **params
):
    """Create propagated pages from the current search results."""
    if (rank is None) == (not all_validated):
        raise click.UsageError("pass exactly one of --rank or --all-validated")
    config = layer_params(config, params)
    engine = open_engine(config, store)
    candidates = list(engine.search(page_id).candidates)
    if rank is not None:
        if not 1 <= rank <= len(candidates):
            raise click.UsageError(f"rank {rank} outside 1..{len(candidates)}")
        chosen = [candidates[rank - 1]]
    else:
        chosen = candidates
    if not chosen:
        raise click.ClickException("no candidate groups to propagate")
    if not yes:
        raise click.ClickException(
            f"would create {len(chosen)} pages; pass --yes to confirm"
        )
    for candidate in chosen:
        _, page = engine.activate(
            page_id, candidate.group, allow_missing_links=allow_missing_links
        )
        click.echo(page.id)


if __name__ == "__main__":
    main()
