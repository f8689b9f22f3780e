"""Shared fixtures: the regional mortality corpus with a reference page."""

import pytest

from propagator.engine import EngineParams, PropagationEngine
from propagator.ingest import SyntheticCorpusSpec, generate_synthetic_corpus
from propagator.store import OntologyStore, VisFunctionRecord

CATEGORIES = ("home", "hospital", "care_home", "hospice", "other", "elsewhere")
REF_PAGE_ID = "pg-ref1"
REF_VIS_ID = "vis-stack1"


def region_stream_ids(region, categories=CATEGORIES):
    return tuple(f"ds-r{region:03d}-{c}" for c in categories)


def build_regional_store(regions=20, distractors=30, seed=101, categories=CATEGORIES):
    store = OntologyStore()
    spec = SyntheticCorpusSpec(
        regions=regions, categories=categories, distractors=distractors, seed=seed
    )
    generate_synthetic_corpus(spec, store)
    store.put_vis_function(
        VisFunctionRecord(
            id=REF_VIS_ID,
            function_name="stacked_bar_v1",
            description="stacked bar chart of weekly values",
        )
    )
    store.create_page_binding(
        vis_id=REF_VIS_ID,
        data_ids=region_stream_ids(1, categories),
        title="Weekly mortality for region_1",
        description="Weekly mortality by place of death for region_1",
        is_reference=True,
        page_id=REF_PAGE_ID,
    )
    return store


@pytest.fixture
def small_engine():
    """15 regions, 4 distractors: fast but structurally complete.

    Region-pure grouping needs region digit tokens to be rarer than
    category tokens; that holds from 12 regions up, and 15 leaves margin.
    """
    return PropagationEngine(build_regional_store(regions=15, distractors=4))


@pytest.fixture
def desk_engine():
    """The 20-region, 30-distractor corpus behind the pinned counts."""
    return PropagationEngine(build_regional_store())
