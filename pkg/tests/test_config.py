"""Config loading, env fallback, and flag override layering."""

import json

import pytest

from propagator.config import (
    DEFAULT_PORT,
    ENV_VAR,
    ConfigError,
    ServiceConfig,
    apply_overrides,
    load_config,
)
from propagator.engine import EngineParams


def write_config(tmp_path, doc, name="svc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestDefaults:
    def test_default_config(self):
        cfg = ServiceConfig()
        assert cfg.store_path is None
        assert cfg.listen_port == DEFAULT_PORT
        assert cfg.algorithm == "bruteforce"
        assert cfg.engine_params() == EngineParams()

    def test_load_without_path_or_env(self, monkeypatch):
        monkeypatch.delenv(ENV_VAR, raising=False)
        assert load_config() == ServiceConfig()


class TestLoadFile:
    def test_nested_sections(self, tmp_path):
        path = write_config(
            tmp_path,
            {
                "store_path": "/data/ontology",
                "listen_port": 9001,
                "similarity": {"alpha": 0.5, "beta": 0.25, "theta": 0.25},
                "grouping": {
                    "algorithm": "spectral",
                    "t_stream": 0.3,
                    "kmeans_seed": 7,
                },
                "ranking": {"w": 0.6},
            },
        )
        cfg = load_config(path)
        assert cfg.store_path == "/data/ontology"
        assert cfg.listen_port == 9001
        assert cfg.weights.alpha == 0.5
        assert cfg.algorithm == "spectral"
        assert cfg.thresholds.t_stream == 0.3
        assert cfg.thresholds.t_group == 0.0
        assert cfg.w == 0.6
        assert cfg.kmeans_seed == 7

    def test_partial_file_keeps_defaults(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {"listen_port": 9100}))
        assert cfg.listen_port == 9100
        assert cfg.engine_params() == EngineParams()

    def test_env_var_fallback(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, {"listen_port": 9100})
        monkeypatch.setenv(ENV_VAR, str(path))
        assert load_config().listen_port == 9100

    def test_explicit_path_beats_env(self, tmp_path, monkeypatch):
        env_path = write_config(tmp_path, {"listen_port": 9100}, name="env.json")
        arg_path = write_config(tmp_path, {"listen_port": 9200}, name="arg.json")
        monkeypatch.setenv(ENV_VAR, str(env_path))
        assert load_config(arg_path).listen_port == 9200

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "svc.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="malformed"):
            load_config(path)

    def test_non_object_document(self, tmp_path):
        path = tmp_path / "svc.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(path)


class TestValidation:
    @pytest.mark.parametrize("port", [0, -1, 65536])
    def test_port_out_of_range(self, port):
        with pytest.raises(ConfigError):
            ServiceConfig(listen_port=port)

    def test_bad_algorithm(self):
        with pytest.raises(ConfigError, match="algorithm"):
            ServiceConfig(algorithm="magic")

    def test_bad_weights_in_file(self, tmp_path):
        path = write_config(tmp_path, {"similarity": {"alpha": 0.9}})
        with pytest.raises(ConfigError, match="must equal 1"):
            load_config(path)

    def test_bad_w_in_file(self, tmp_path):
        path = write_config(tmp_path, {"ranking": {"w": 1.5}})
        with pytest.raises(ConfigError):
            load_config(path)


class TestOverrides:
    def test_none_values_are_skipped(self):
        cfg = ServiceConfig()
        assert apply_overrides(cfg, listen_port=None, w=None) == cfg

    def test_direct_fields(self):
        cfg = apply_overrides(
            ServiceConfig(), store_path="/tmp/x", listen_port=9300, w=0.5
        )
        assert cfg.store_path == "/tmp/x"
        assert cfg.listen_port == 9300
        assert cfg.w == 0.5

    def test_nested_fields_rebuild_groups(self):
        cfg = apply_overrides(
            ServiceConfig(), alpha=0.5, beta=0.3, theta=0.2, t_stream=0.3
        )
        assert cfg.weights.alpha == 0.5
        assert cfg.thresholds.t_stream == 0.3
        assert cfg.thresholds.s_pair == 0.0

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config overrides"):
            apply_overrides(ServiceConfig(), shard_count=4)

    def test_invalid_override_value(self):
        with pytest.raises(ConfigError):
            apply_overrides(ServiceConfig(), w=1.5)

    def test_override_then_engine_params(self):
        cfg = apply_overrides(ServiceConfig(), algorithm="spectral", kmeans_seed=9)
        params = cfg.engine_params()
        assert params.algorithm == "spectral"
        assert params.kmeans_seed == 9
