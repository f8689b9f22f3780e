"""Manifest ingestion and the synthetic corpus generator."""

import json

import pytest

from propagator.errors import FetchError, InvalidRecordError, ParseError
from propagator.ingest import (
    AgentState,
    IngestManifest,
    SyntheticCorpusSpec,
    Transform,
    TransformKind,
    generate_synthetic_corpus,
    load_manifest,
    run_agents,
    run_manifest_once,
    scan_manifests,
)
from propagator.store import DataType, OntologyStore


def write_csv(path, rows, header="date,value"):
    lines = [header] + [f"{d},{v}" for d, v in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_manifest(source, **overrides):
    base = dict(
        source_id="mortality-oxford",
        source=str(source),
        keywords=("weekly", "mortality", "oxford"),
        data_type=DataType.TIMESERIES,
        description_template="weekly mortality for {source_id}",
        period_seconds=3600,
    )
    base.update(overrides)
    return IngestManifest(**base)


class TestTransforms:
    def test_identity_keeps_values(self):
        assert Transform().apply([1.0, 2.5]) == [1.0, 2.5]

    def test_per_capita_scales_to_100k(self):
        t = Transform(TransformKind.PER_CAPITA_100K, population=250000)
        assert t.apply([50.0]) == [20.0]

    @pytest.mark.parametrize("population", [None, 0, -5])
    def test_per_capita_requires_positive_population(self, population):
        with pytest.raises(InvalidRecordError):
            Transform(TransformKind.PER_CAPITA_100K, population=population)


class TestManifest:
    def test_rejects_short_period(self):
        with pytest.raises(InvalidRecordError):
            make_manifest("x.csv", period_seconds=0)

    def test_stream_id_is_prefixed_source_id(self):
        assert make_manifest("x.csv").stream_id == "ds-mortality-oxford"

    def test_load_round_trip(self, tmp_path):
        doc = {
            "source_id": "cases-ox",
            "source": "data.csv",
            "transform": {"kind": "per_capita_100k", "population": 152000},
            "keywords": ["weekly", "cases"],
            "data_type": "timeseries",
            "description_template": "weekly cases for {source_id}",
            "period_seconds": 60,
        }
        path = tmp_path / "cases.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        manifest = load_manifest(path)
        assert manifest.source_id == "cases-ox"
        assert manifest.transform.kind is TransformKind.PER_CAPITA_100K
        assert manifest.transform.population == 152000

    def test_scan_orders_by_source_id(self, tmp_path):
        for sid in ["beta", "alpha"]:
            (tmp_path / f"{sid}.json").write_text(
                json.dumps({"source_id": sid, "source": "x.csv"}), encoding="utf-8"
            )
        assert [m.source_id for m in scan_manifests(tmp_path)] == ["alpha", "beta"]


class TestRunManifestOnce:
    def test_registers_stream_and_caches_series(self, tmp_path):
        source = tmp_path / "raw.csv"
        write_csv(source, [("2020-01-05", 50), ("2020-01-12", 75)])
        manifest = make_manifest(
            source, transform=Transform(TransformKind.PER_CAPITA_100K, population=250000)
        )
        store = OntologyStore()
        cache = tmp_path / "cache"

        stream_id = run_manifest_once(manifest, store, cache)

        record = store.get_data_stream(stream_id)
        assert record.id == "ds-mortality-oxford"
        assert record.endpoint == "/data/ds-mortality-oxford"
        assert record.description == "weekly mortality for mortality-oxford"
        assert record.keywords == ("weekly", "mortality", "oxford")
        cached = (cache / "ds-mortality-oxford.csv").read_text(encoding="utf-8")
        assert cached.splitlines() == ["date,value", "2020-01-05,20.0", "2020-01-12,30.0"]

    def test_file_uri_source(self, tmp_path):
        source = tmp_path / "raw.csv"
        write_csv(source, [("2020-01-05", 3)])
        manifest = make_manifest(source.as_uri())
        store = OntologyStore()
        run_manifest_once(manifest, store, tmp_path / "cache")
        assert store.has_data_stream("ds-mortality-oxford")

    def test_rerun_is_value_identical(self, tmp_path):
        source = tmp_path / "raw.csv"
        write_csv(source, [("2020-01-05", 3)])
        manifest = make_manifest(source)
        store = OntologyStore()
        run_manifest_once(manifest, store, tmp_path / "cache")
        first = store.get_data_stream("ds-mortality-oxford")
        run_manifest_once(manifest, store, tmp_path / "cache")
        assert store.get_data_stream("ds-mortality-oxford") == first
        assert store.next_seq == 3

    def test_missing_source_raises_fetch_error(self, tmp_path):
        manifest = make_manifest(tmp_path / "absent.csv")
        store = OntologyStore()
        with pytest.raises(FetchError):
            run_manifest_once(manifest, store, tmp_path / "cache")
        assert store.list_data_streams() == []

    def test_non_numeric_value_raises_parse_error(self, tmp_path):
        source = tmp_path / "raw.csv"
        source.write_text("date,value\n2020-01-05,many\n", encoding="utf-8")
        store = OntologyStore()
        with pytest.raises(ParseError):
            run_manifest_once(make_manifest(source), store, tmp_path / "cache")
        assert store.list_data_streams() == []

    def test_empty_payload_raises_parse_error(self, tmp_path):
        source = tmp_path / "raw.csv"
        source.write_text("", encoding="utf-8")
        with pytest.raises(ParseError):
            run_manifest_once(make_manifest(source), OntologyStore(), tmp_path / "cache")


class TestRunAgents:
    def make_pair(self, tmp_path):
        for name in ["a", "b"]:
            write_csv(tmp_path / f"{name}.csv", [("2020-01-05", 1)])
        return [
            make_manifest(tmp_path / "a.csv", source_id="a", period_seconds=100),
            make_manifest(tmp_path / "b.csv", source_id="b", period_seconds=100),
        ]

    def test_only_stale_manifests_run(self, tmp_path):
        manifests = self.make_pair(tmp_path)
        state = AgentState(last_success={"a": 950.0, "b": 850.0})
        outcomes = run_agents(manifests, OntologyStore(), tmp_path / "c", state, now=1000.0)
        assert [o.status for o in outcomes] == ["skipped", "success"]
        assert state.last_success["b"] == 1000.0

    def test_all_fresh_runs_nothing(self, tmp_path):
        manifests = self.make_pair(tmp_path)
        state = AgentState(last_success={"a": 990.0, "b": 990.0})
        outcomes = run_agents(manifests, OntologyStore(), tmp_path / "c", state, now=1000.0)
        assert [o.status for o in outcomes] == ["skipped", "skipped"]

    def test_failure_does_not_abort_batch(self, tmp_path):
        manifests = self.make_pair(tmp_path)
        (tmp_path / "a.csv").unlink()
        store = OntologyStore()
        outcomes = run_agents(manifests, store, tmp_path / "c", AgentState(), now=1000.0)
        assert [o.status for o in outcomes] == ["failure", "success"]
        assert store.has_data_stream("ds-b")
        assert not store.has_data_stream("ds-a")

    def test_state_round_trips(self, tmp_path):
        state = AgentState(last_success={"a": 12.5})
        state.save(tmp_path)
        assert AgentState.load(tmp_path).last_success == {"a": 12.5}


CATEGORIES = ("home", "hospital", "care_home", "hospice", "other", "elsewhere")


class TestSyntheticCorpus:
    def test_clean_stream_shape(self):
        spec = SyntheticCorpusSpec(regions=2, categories=CATEGORIES, seed=7)
        records = generate_synthetic_corpus(spec)
        assert len(records) == 12
        first = records[0]
        assert first.id == "ds-r001-home"
        assert first.endpoint == "/api/v1/mortality/region_1/home"
        assert first.description == "weekly mortality in home for region_1"
        assert first.keywords == (
            "country", "weekly", "mortality", "place_of_death", "region_1", "home",
        )
        assert first.data_type is DataType.TIMESERIES

    def test_distractors_swap_the_category_keyword(self):
        spec = SyntheticCorpusSpec(regions=3, categories=CATEGORIES, distractors=4, seed=7)
        records = generate_synthetic_corpus(spec)
        distractors = records[-4:]
        for j, record in enumerate(distractors):
            assert f"noise{j}" in record.keywords
            assert not set(CATEGORIES) & set(record.keywords)
            assert record.id.startswith("ds-x")

    def test_distractor_ids_sort_after_clean_ids(self):
        spec = SyntheticCorpusSpec(regions=3, categories=CATEGORIES, distractors=4, seed=7)
        records = generate_synthetic_corpus(spec)
        ordered = sorted(r.id for r in records)
        assert all(i.startswith("ds-r") for i in ordered[:18])
        assert all(i.startswith("ds-x") for i in ordered[18:])

    def test_deterministic_under_seed(self):
        spec = SyntheticCorpusSpec(regions=5, categories=CATEGORIES, distractors=9, seed=42)
        assert generate_synthetic_corpus(spec) == generate_synthetic_corpus(spec)

    def test_seed_changes_distractor_placement(self):
        a = SyntheticCorpusSpec(regions=9, categories=CATEGORIES, distractors=8, seed=1)
        b = SyntheticCorpusSpec(regions=9, categories=CATEGORIES, distractors=8, seed=2)
        assert generate_synthetic_corpus(a) != generate_synthetic_corpus(b)

    def test_registers_into_store(self):
        store = OntologyStore()
        spec = SyntheticCorpusSpec(regions=2, categories=("home", "hospital"), seed=0)
        generate_synthetic_corpus(spec, store)
        assert len(store.list_data_streams()) == 4

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(regions=0, categories=CATEGORIES),
            dict(regions=1, categories=()),
            dict(regions=1, categories=("home", "home")),
            dict(regions=1, categories=CATEGORIES, distractors=-1),
        ],
    )
    def test_spec_validation(self, kwargs):
        with pytest.raises(InvalidRecordError):
            SyntheticCorpusSpec(**kwargs)
