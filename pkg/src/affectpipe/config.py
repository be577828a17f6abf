"""YAML run configuration: loading, dotted-path overrides, builders.

One human-editable file drives every command; ``--set a.b=value``
overrides nest by dotted path. Unknown sections or keys are rejected so
typos fail loudly instead of silently running defaults.
"""

import copy
from dataclasses import fields
from pathlib import Path

import yaml

from .corpus.synth import SynthSpec
from .errors import ConfigError
from .features.windows import WindowConfig
from .learners import ModelKind
from .pipeline import RunConfig

KNOWN_SECTIONS = ("run", "window", "learners", "paths", "synth", "lag")

_RUN_KEYS = ("scenario", "seed", "label_mode", "smoothing_n",
             "ensemble_iterations", "validation_fraction",
             "validation_chunks", "save_models", "workers")
_PATH_KEYS = ("data_root", "output_root")
_LAG_KEYS = ("subsets", "delays")


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        payload = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"config file {path} does not parse: {err}") \
            from err
    if payload is None:
        payload = {}
    if not isinstance(payload, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    unknown = set(payload) - set(KNOWN_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}; "
                          f"expected {KNOWN_SECTIONS}")
    return payload


def apply_overrides(config: dict, overrides) -> dict:
    """Apply ``key.path=value`` strings; values parse as YAML scalars."""
    out = copy.deepcopy(config)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        if not parts or not all(parts):
            raise ConfigError(f"override {item!r} has an empty key path")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as err:
            raise ConfigError(
                f"override value {raw!r} does not parse: {err}") from err
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(
                    f"override {item!r} descends into a non-mapping")
        node[parts[-1]] = value
    return out


def _check_keys(section: str, payload: dict, allowed) -> None:
    unknown = set(payload) - set(allowed)
    if unknown:
        raise ConfigError(
            f"unknown keys {sorted(unknown)} in [{section}]; "
            f"expected {sorted(allowed)}")


def build_window_config(config: dict) -> WindowConfig:
    payload = dict(config.get("window") or {})
    allowed = tuple(f.name for f in fields(WindowConfig))
    _check_keys("window", payload, allowed)
    try:
        return WindowConfig(**payload)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid [window] section: {err}") from err


def build_learners(config: dict):
    payload = config.get("learners")
    if payload is None:
        return None  # fall back to the RunConfig default roster
    if not isinstance(payload, list) or not payload:
        raise ConfigError("[learners] must be a nonempty list")
    roster = []
    for item in payload:
        if not isinstance(item, dict) or "kind" not in item:
            raise ConfigError(
                f"each learner needs a 'kind' key, got {item!r}")
        params = {k: v for k, v in item.items() if k != "kind"}
        roster.append(ModelKind(item["kind"], params))
    return tuple(roster)


def build_run_config(config: dict, scenario: str | None = None,
                     seed: int | None = None,
                     workers: int | None = None) -> RunConfig:
    payload = dict(config.get("run") or {})
    _check_keys("run", payload, _RUN_KEYS)
    if scenario is not None:
        payload["scenario"] = scenario
    if seed is not None:
        payload["seed"] = seed
    if workers is not None:
        payload["workers"] = workers
    if "scenario" not in payload:
        raise ConfigError("run.scenario is required (or pass --scenario)")
    kwargs = dict(payload)
    kwargs["window"] = build_window_config(config)
    roster = build_learners(config)
    if roster is not None:
        kwargs["learners"] = roster
    try:
        return RunConfig(**kwargs)
    except TypeError as err:
        raise ConfigError(f"invalid [run] section: {err}") from err


def build_synth_spec(config: dict) -> SynthSpec:
    payload = dict(config.get("synth") or {})
    allowed = tuple(f.name for f in fields(SynthSpec))
    _check_keys("synth", payload, allowed)
    for key in ("video_ids", "scenarios", "fast_band"):
        if key in payload and isinstance(payload[key], list):
            payload[key] = tuple(payload[key])
    try:
        return SynthSpec(**payload)
    except TypeError as err:
        raise ConfigError(f"invalid [synth] section: {err}") from err


def build_lag_settings(config: dict):
    from .evaluation import DEFAULT_DELAYS
    from .features.matrix import SIGNAL_SUBSETS

    payload = dict(config.get("lag") or {})
    _check_keys("lag", payload, _LAG_KEYS)
    subsets = tuple(payload.get("subsets", SIGNAL_SUBSETS))
    unknown = set(subsets) - set(SIGNAL_SUBSETS)
    if unknown:
        raise ConfigError(f"unknown lag subsets {sorted(unknown)}")
    delays = tuple(float(d) for d in payload.get("delays", DEFAULT_DELAYS))
    return subsets, delays


def get_paths(config: dict, output_override=None):
    payload = dict(config.get("paths") or {})
    _check_keys("paths", payload, _PATH_KEYS)
    data_root = payload.get("data_root")
    output_root = output_override or payload.get("output_root")
    return (Path(data_root) if data_root else None,
            Path(output_root) if output_root else None)
