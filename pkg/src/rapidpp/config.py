"""Parsing and validation of JSON configuration documents.

Model documents::

    {"type": "mmpp", "generator": [[-1, 1], [1, -1]], "rates": [0, 2], "initial_state": 0}
    {"type": "periodic", "breakpoints": [0, 0.5], "values": [2, 0]}
    {"type": "constant", "rate": 1.0}
    {"type": "poisson", "rate": 1.0}
    {"type": "renewal_gamma", "shape": 2, "rate": 2}

Service documents::

    {"type": "exponential", "rate": 1.0}
    {"type": "erlang", "shape": 2, "rate": 2.0}
    {"type": "uniform", "a": 0.0, "b": 2.0}

Violations raise :class:`ConfigError` carrying the offending field path.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .arrivals import PeriodicIntensity, PoissonBase, RenewalGammaBase
from .errors import ConfigError, GeneratorValidationError
from .expansions import ErlangService, ExponentialService, ServiceModel, UniformService
from .markov_env import CtmcModel, validate_generator

__all__ = [
    "ModelSpec",
    "ExperimentConfig",
    "parse_model",
    "parse_service",
    "parse_experiment_config",
    "load_config_file",
    "resolved_config_dict",
    "config_sha256",
]

ModelSpec = CtmcModel | PeriodicIntensity | PoissonBase | RenewalGammaBase


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError("missing required field", f"{path}.{key}" if path else key)
    return obj[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return value


def _matrix(value, path: str) -> list[list[float]]:
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a non-empty list of rows", path)
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ConfigError("expected a list of numbers", f"{path}[{i}]")
        rows.append([_number(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    return rows


def _vector(value, path: str) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError("expected a list of numbers", path)
    return [_number(x, f"{path}[{i}]") for i, x in enumerate(value)]


def parse_model(obj, path: str = "model") -> ModelSpec:
    """Parse a model document into its domain object."""
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    kind = _require(obj, "type", path)
    try:
        if kind == "mmpp":
            gen = validate_generator(_matrix(_require(obj, "generator", path), f"{path}.generator"))
            rates = _vector(_require(obj, "rates", path), f"{path}.rates")
            initial = _integer(obj.get("initial_state", 0), f"{path}.initial_state")
            return CtmcModel(gen, rates, initial)
        if kind == "periodic":
            return PeriodicIntensity(
                _vector(_require(obj, "breakpoints", path), f"{path}.breakpoints"),
                _vector(_require(obj, "values", path), f"{path}.values"),
            )
        if kind in ("constant", "poisson"):
            return PoissonBase(_number(_require(obj, "rate", path), f"{path}.rate"))
        if kind == "renewal_gamma":
            return RenewalGammaBase(
                _number(_require(obj, "shape", path), f"{path}.shape"),
                _number(_require(obj, "rate", path), f"{path}.rate"),
            )
    except ConfigError:
        raise
    except (GeneratorValidationError, ValueError) as exc:
        raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown model type {kind!r}", f"{path}.type")


def parse_service(obj, path: str = "service") -> ServiceModel:
    """Parse a service document into its domain object."""
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    kind = _require(obj, "type", path)
    try:
        if kind == "exponential":
            return ExponentialService(_number(_require(obj, "rate", path), f"{path}.rate"))
        if kind == "erlang":
            return ErlangService(
                _integer(_require(obj, "shape", path), f"{path}.shape"),
                _number(_require(obj, "rate", path), f"{path}.rate"),
            )
        if kind == "uniform":
            return UniformService(
                _number(_require(obj, "a", path), f"{path}.a"),
                _number(_require(obj, "b", path), f"{path}.b"),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown service type {kind!r}", f"{path}.type")


@dataclass
class ExperimentConfig:
    """Resolved configuration shared by every command."""

    raw: dict
    model: ModelSpec
    service: ServiceModel | None
    kind: str
    t: float
    eps: float | None
    eps_grid: list[float] | None
    reps: int
    master_seed: int
    kmax: int | None
    workers: int
    tv_limit: bool
    truncation_mass: float
    out: str | None


_KNOWN_KEYS = {
    "model",
    "service",
    "kind",
    "t",
    "eps",
    "eps_grid",
    "reps",
    "master_seed",
    "kmax",
    "workers",
    "tv_limit",
    "truncation_mass",
    "out",
}


def parse_experiment_config(obj) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("top-level document must be an object")
    unknown = set(obj) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown field(s): {sorted(unknown)}")
    model = parse_model(_require(obj, "model", ""))
    service = parse_service(obj["service"]) if obj.get("service") is not None else None

    kind = obj.get("kind", "counts")
    if kind not in ("counts", "queue"):
        raise ConfigError(f"expected 'counts' or 'queue', got {kind!r}", "kind")
    if kind == "queue" and service is None:
        raise ConfigError("queue experiments require a service spec", "service")
    if kind == "queue" and isinstance(model, (PeriodicIntensity, RenewalGammaBase)):
        raise ConfigError("queue experiments require an mmpp or constant model", "model")
    if isinstance(model, PeriodicIntensity) and service is not None:
        raise ConfigError("periodic models do not take a service spec", "service")

    t = _number(obj.get("t", 1.0), "t")
    if t <= 0:
        raise ConfigError("t must be positive", "t")

    eps = obj.get("eps")
    if eps is not None:
        eps = _number(eps, "eps")
        if not 0.0 <= eps <= 1.0:
            raise ConfigError("eps must lie in [0, 1]", "eps")
    eps_grid = obj.get("eps_grid")
    if eps_grid is not None:
        eps_grid = _vector(eps_grid, "eps_grid")
        if not eps_grid or any(not 0.0 < e <= 1.0 for e in eps_grid):
            raise ConfigError("entries must lie in (0, 1]", "eps_grid")
        if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])):
            raise ConfigError("entries must decrease strictly", "eps_grid")
    if eps is not None and eps_grid is not None:
        raise ConfigError("give either eps or eps_grid, not both", "eps")

    reps = _integer(obj.get("reps", 100_000), "reps")
    if reps < 1:
        raise ConfigError("reps must be at least 1", "reps")
    master_seed = _integer(obj.get("master_seed", 0), "master_seed")
    if master_seed < 0:
        raise ConfigError("master_seed must be nonnegative", "master_seed")
    kmax = obj.get("kmax")
    if kmax is not None:
        kmax = _integer(kmax, "kmax")
        if kmax < 0:
            raise ConfigError("kmax must be nonnegative", "kmax")
    workers = _integer(obj.get("workers", 1), "workers")
    if workers < 1:
        raise ConfigError("workers must be at least 1", "workers")
    tv_limit = obj.get("tv_limit", False)
    if not isinstance(tv_limit, bool):
        raise ConfigError("expected true or false", "tv_limit")
    truncation_mass = _number(obj.get("truncation_mass", 1e-10), "truncation_mass")
    if not 0.0 < truncation_mass < 1.0:
        raise ConfigError("truncation_mass must lie in (0, 1)", "truncation_mass")
    out = obj.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("expected a string path", "out")

    return ExperimentConfig(
        raw=obj,
        model=model,
        service=service,
        kind=kind,
        t=t,
        eps=eps,
        eps_grid=eps_grid,
        reps=reps,
        master_seed=master_seed,
        kmax=kmax,
        workers=workers,
        tv_limit=tv_limit,
        truncation_mass=truncation_mass,
        out=out,
    )


def load_config_file(path: str) -> dict:
    """Read a JSON config; parse failures raise ConfigError with line/column."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")


def resolved_config_dict(cfg: ExperimentConfig) -> dict:
    """Effective configuration with defaults filled.

    Execution-resource fields (workers) and the output destination are
    excluded so results from different worker counts compare byte-for-byte.
    """
    doc = {
        "model": cfg.raw["model"],
        "kind": cfg.kind,
        "t": cfg.t,
        "reps": cfg.reps,
        "master_seed": cfg.master_seed,
        "tv_limit": cfg.tv_limit,
        "truncation_mass": cfg.truncation_mass,
    }
    if cfg.service is not None:
        doc["service"] = cfg.raw["service"]
    if cfg.eps is not None:
        doc["eps"] = cfg.eps
    if cfg.eps_grid is not None:
        doc["eps_grid"] = cfg.eps_grid
    if cfg.kmax is not None:
        doc["kmax"] = cfg.kmax
    return doc


def config_sha256(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(resolved_config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
