"""Run configuration: the user's six inputs plus tool settings."""

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..interp.platform import PlatformModel, get_platform
from ..metrics import ErrorClass
from ..search import SweepSettings

SEED_ENV = "APPROXIFY_SEED"
KNOWN_KEYS = {"source", "inputs", "error_class", "error_bound", "platform", "capacitors_uf",
              "traces", "seed", "sweep", "output_dir", "repeat_traces"}
SWEEP_KEYS = set(SweepSettings.__dataclass_fields__) - {"e_b", "seed"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    source: str
    inputs: str
    error_class: ErrorClass
    error_bound: float
    platform: PlatformModel
    capacitors_uf: Tuple[float, ...]
    traces: Tuple[str, ...]
    seed: int = 0
    sweep: SweepSettings = field(default_factory=SweepSettings)
    output_dir: Optional[str] = None
    repeat_traces: bool = False


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def config_from_dict(doc: dict, base_dir: str = ".", env=None) -> RunConfig:
    """Validate a config mapping; relative paths resolve against ``base_dir``."""
    env = os.environ if env is None else env
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    missing = {"source", "inputs", "error_bound", "capacitors_uf", "traces"} - set(doc)
    if missing:
        raise ConfigError(f"missing config keys {sorted(missing)}")

    def path(p):
        if not isinstance(p, str):
            raise ConfigError(f"expected a path string, got {p!r}")
        return os.path.normpath(os.path.join(base_dir, p))

    source = _require_file(path(doc["source"]), "source file")
    inputs = _require_file(path(doc["inputs"]), "input manifest")
    traces = doc["traces"]
    if isinstance(traces, str):
        traces = [traces]
    if not traces:
        raise ConfigError("at least one trace is required")
    traces = tuple(_require_file(path(t), "trace file") for t in traces)

    try:
        e_b = float(doc["error_bound"])
    except (TypeError, ValueError):
        raise ConfigError(f"error_bound must be a number, got {doc['error_bound']!r}") from None
    if not 0 < e_b <= 1:
        raise ConfigError(f"error_bound must lie in (0, 1], got {e_b}")
    caps = doc["capacitors_uf"]
    if isinstance(caps, (int, float)):
        caps = [caps]
    if not caps or any(isinstance(c, bool) or not isinstance(c, (int, float)) or c <= 0 for c in caps):
        raise ConfigError(f"capacitors_uf must be a non-empty list of positive sizes, got {caps!r}")
    try:
        platform = get_platform(doc.get("platform", "cortex-m"))
        error_class = ErrorClass.parse(doc["error_class"]) if doc.get("error_class") else None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    seed = doc.get("seed", 0)
    if env.get(SEED_ENV):
        seed = env[SEED_ENV]
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None

    sweep_doc = doc.get("sweep") or {}
    bad = set(sweep_doc) - SWEEP_KEYS
    if bad:
        raise ConfigError(f"unknown sweep settings {sorted(bad)}")
    sweep_kw = {k: tuple(v) if isinstance(v, list) else v for k, v in sweep_doc.items()}
    try:
        sweep = SweepSettings(e_b=e_b, seed=seed, **sweep_kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sweep settings: {exc}") from None

    out = doc.get("output_dir")
    return RunConfig(source, inputs, error_class, e_b, platform, tuple(float(c) for c in caps), traces,
                     seed, sweep, path(out) if out else None, bool(doc.get("repeat_traces", False)))


def load_config(path, env=None) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(doc, os.path.dirname(os.path.abspath(path)), env)
