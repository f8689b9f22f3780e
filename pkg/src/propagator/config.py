"""Service configuration: JSON file, PROPAGATOR_CONFIG env var, flag overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .engine import EngineParams
from .errors import PropagatorError
from .grouping import DEFAULT_KMEANS_SEED, GroupingThresholds
from .ranking import DEFAULT_W
from .similarity import SimilarityWeights

ENV_VAR = "PROPAGATOR_CONFIG"
DEFAULT_PORT = 8765


class ConfigError(PropagatorError):
    code = "invalid_config"


@dataclass(frozen=True)
class ServiceConfig:
    store_path: str | None = None
    listen_port: int = DEFAULT_PORT
    weights: SimilarityWeights = field(default_factory=SimilarityWeights)
    algorithm: str = "bruteforce"
    thresholds: GroupingThresholds = field(default_factory=GroupingThresholds)
    w: float = DEFAULT_W
    kmeans_seed: int = DEFAULT_KMEANS_SEED

    def __post_init__(self) -> None:
        if not 1 <= self.listen_port <= 65535:
            raise ConfigError(f"listen_port {self.listen_port} outside [1, 65535]")
        self.engine_params()

    def engine_params(self) -> EngineParams:
        try:
            return EngineParams(
                algorithm=self.algorithm,
                weights=self.weights,
                thresholds=self.thresholds,
                w=self.w,
                kmeans_seed=self.kmeans_seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _config_from_dict(raw: dict) -> ServiceConfig:
    similarity = raw.get("similarity", {})
    grouping = raw.get("grouping", {})
    ranking = raw.get("ranking", {})
    try:
        weights = SimilarityWeights(
            alpha=similarity.get("alpha", 1.0 / 3.0),
            beta=similarity.get("beta", 1.0 / 3.0),
            theta=similarity.get("theta", 1.0 / 3.0),
        )
        thresholds = GroupingThresholds(
            t_group=grouping.get("t_group", 0.0),
            t_stream=grouping.get("t_stream", 0.0),
            s_allpair=grouping.get("s_allpair", 0.0),
            s_pair=grouping.get("s_pair", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ServiceConfig(
        store_path=raw.get("store_path"),
        listen_port=int(raw.get("listen_port", DEFAULT_PORT)),
        weights=weights,
        algorithm=grouping.get("algorithm", "bruteforce"),
        thresholds=thresholds,
        w=ranking.get("w", DEFAULT_W),
        kmeans_seed=int(grouping.get("kmeans_seed", DEFAULT_KMEANS_SEED)),
    )


def load_config(path: str | Path | None = None) -> ServiceConfig:
    """Read config from an explicit path, else $PROPAGATOR_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return ServiceConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return _config_from_dict(raw)


def apply_overrides(config: ServiceConfig, **overrides) -> ServiceConfig:
    """Layer non-None flag values over a loaded config.

    Accepted keys: store_path, listen_port, algorithm, w, kmeans_seed,
    alpha/beta/theta, t_group/t_stream/s_allpair/s_pair.
    """
    values = {k: v for k, v in overrides.items() if v is not None}
    weight_keys = {"alpha", "beta", "theta"}
    threshold_keys = {"t_group", "t_stream", "s_allpair", "s_pair"}
    unknown = set(values) - weight_keys - threshold_keys - {
        "store_path", "listen_port", "algorithm", "w", "kmeans_seed",
    }
    if unknown:
        raise ConfigError(f"unknown config overrides: {sorted(unknown)}")
    try:
        if values.keys() & weight_keys:
            config = replace(
                config,
                weights=SimilarityWeights(
                    alpha=values.get("alpha", config.weights.alpha),
                    beta=values.get("beta", config.weights.beta),
                    theta=values.get("theta", config.weights.theta),
                ),
            )
        if values.keys() & threshold_keys:
            config = replace(
                config,
                thresholds=GroupingThresholds(
                    t_group=values.get("t_group", config.thresholds.t_group),
                    t_stream=values.get("t_stream", config.thresholds.t_stream),
                    s_allpair=values.get("s_allpair", config.thresholds.s_allpair),
                    s_pair=values.get("s_pair", config.thresholds.s_pair),
                ),
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    direct = {
        k: values[k]
        for k in ("store_path", "listen_port", "algorithm", "w", "kmeans_seed")
        if k in values
    }
    return replace(config, **direct) if direct else config
