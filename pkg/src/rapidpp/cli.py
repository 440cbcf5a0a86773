"""Command-line front end.

Subcommands: analyze | expand | simulate | validate | tv-limit.
Flags: --config PATH, --out PATH, --seed U64 (overrides config), --reps N
(overrides config), and simulate-only --kind counts|queue.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 guard
violation (exact enumeration bound exceeded).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .arrivals import PeriodicIntensity, PoissonBase, RenewalGammaBase
from .config import (
    ExperimentConfig,
    config_sha256,
    load_config_file,
    parse_experiment_config,
    resolved_config_dict,
)
from .errors import (
    ConfigError,
    EnumerationTooLargeError,
    QuadratureError,
    SingularSystemError,
    ZeroMeanRateError,
)
from .expansions import (
    ExpansionInputs,
    PmfVector,
    corrected_count_pmf,
    corrected_count_pmf_periodic,
    corrected_queue_pmf,
    eta_squared,
    mean_q0,
    poisson_pmf,
    tv_limit_exact,
    tv_limit_mc,
)
from .harness import ExperimentSpec, convergence_study, estimate_pmf
from .markov_env import CtmcModel, analyze, validate_generator

__all__ = ["main"]


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_doc(cfg: ExperimentConfig, body: dict) -> str:
    doc = dict(body)
    doc["config"] = resolved_config_dict(cfg)
    doc["config_sha256"] = config_sha256(cfg)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_doc(cfg: ExperimentConfig, header: str, rows: list[str], truncation: float) -> str:
    canonical = json.dumps(resolved_config_dict(cfg), sort_keys=True, separators=(",", ":"))
    lines = [
        f"# config_sha256: {config_sha256(cfg)}",
        f"# config: {canonical}",
        f"# truncation_mass: {truncation!r}",
        header,
    ]
    return "\n".join(lines + rows) + "\n"


def _one_state_model(rate: float) -> CtmcModel:
    return CtmcModel(validate_generator([[0.0]]), np.array([rate]), 0)


def _require_mmpp(cfg: ExperimentConfig) -> CtmcModel:
    if not isinstance(cfg.model, CtmcModel):
        raise ConfigError("this command requires an mmpp model", "model.type")
    return cfg.model


def _require_eps(cfg: ExperimentConfig) -> float:
    if cfg.eps is None:
        raise ConfigError("missing required field", "eps")
    return cfg.eps


def _expansion_pair(cfg: ExperimentConfig, eps: float) -> tuple[PmfVector, PmfVector]:
    """Baseline Poisson pmf and first-order corrected pmf for the config."""
    model = cfg.model
    if cfg.kind == "queue":
        if isinstance(model, CtmcModel):
            analysis = analyze(model)
            lam = analysis.lambda_star
            g_x0 = float(analysis.g[model.initial_state])
            sigma2 = analysis.sigma2
        elif isinstance(model, PoissonBase):
            lam, g_x0, sigma2 = model.rate, 0.0, 0.0
        else:
            raise ConfigError("queue experiments require an mmpp or constant model", "model")
        base = poisson_pmf(mean_q0(lam, cfg.service, cfg.t), cfg.kmax)
        corrected = corrected_queue_pmf(
            lam, g_x0, sigma2, cfg.service, eps, cfg.t, base.kmax
        )
        return base, corrected
    if isinstance(model, CtmcModel):
        inputs = ExpansionInputs.from_model(model, eps, cfg.t)
        base = poisson_pmf(inputs.lambda_star * cfg.t, cfg.kmax)
        return base, corrected_count_pmf(inputs, base.kmax)
    if isinstance(model, PeriodicIntensity):
        base = poisson_pmf(model.average_rate * cfg.t, cfg.kmax)
        return base, corrected_count_pmf_periodic(model, eps, cfg.t, base.kmax)
    if isinstance(model, PoissonBase):
        base = poisson_pmf(model.rate * cfg.t, cfg.kmax)
        return base, base
    base = poisson_pmf(model.long_run_rate * cfg.t, cfg.kmax)
    return base, base


def _simulation_eps(cfg: ExperimentConfig) -> float:
    eps = _require_eps(cfg)
    if not 0.0 < eps <= 1.0:
        raise ConfigError("eps must lie in (0, 1] for simulation", "eps")
    return eps


def _experiment_spec(cfg: ExperimentConfig) -> ExperimentSpec:
    model = cfg.model
    if cfg.kind == "queue":
        if isinstance(model, CtmcModel):
            return ExperimentSpec(
                kind="queue", t=cfg.t, eps=_simulation_eps(cfg), model=model, service=cfg.service
            )
        if not isinstance(model, PoissonBase):
            raise ConfigError("queue experiments require an mmpp or constant model", "model")
        # constant rate: the speed parameter is irrelevant
        return ExperimentSpec(
            kind="queue", t=cfg.t, eps=1.0, model=_one_state_model(model.rate), service=cfg.service
        )
    if isinstance(model, CtmcModel):
        return ExperimentSpec(kind="cox", t=cfg.t, eps=_simulation_eps(cfg), model=model)
    if isinstance(model, PeriodicIntensity):
        return ExperimentSpec(kind="periodic", t=cfg.t, eps=_simulation_eps(cfg), intensity=model)
    if isinstance(model, PoissonBase):
        return ExperimentSpec(kind="constant", t=cfg.t, rate=model.rate)
    return ExperimentSpec(kind="thinned", t=cfg.t, eps=_simulation_eps(cfg), base=model)


def _cmd_analyze(cfg: ExperimentConfig, out: str | None) -> int:
    model = _require_mmpp(cfg)
    analysis = analyze(model)
    body = {
        "pi": analysis.pi.tolist(),
        "lambda_star": analysis.lambda_star,
        "g": analysis.g.tolist(),
        "sigma2": analysis.sigma2,
    }
    if cfg.service is not None:
        body["eta2"] = eta_squared(analysis.sigma2, cfg.service, cfg.t)
    if cfg.tv_limit:
        body["tv_limit"] = tv_limit_exact(model, cfg.t, cfg.truncation_mass)
    _emit(_json_doc(cfg, body), out)
    return 0


def _cmd_expand(cfg: ExperimentConfig, out: str | None) -> int:
    eps = _require_eps(cfg)
    base, corrected = _expansion_pair(cfg, eps)
    rows = [
        f"{k},{float(p)!r},{float(c)!r}"
        for k, (p, c) in enumerate(zip(base.probs, corrected.probs))
    ]
    _emit(_csv_doc(cfg, "k,p_poisson,p_corrected", rows, base.truncation_mass), out)
    return 0


def _cmd_simulate(cfg: ExperimentConfig, out: str | None) -> int:
    eps_for_expansion = cfg.eps if cfg.eps is not None else 0.0
    base, corrected = _expansion_pair(cfg, eps_for_expansion)
    spec = _experiment_spec(cfg)
    est = estimate_pmf(
        spec, cfg.reps, cfg.master_seed, kmax=base.kmax, workers=cfg.workers
    )
    rows = [
        f"{k},{float(est.probs[k])!r},{float(est.ci_low[k])!r},{float(est.ci_high[k])!r},"
        f"{float(base.probs[k])!r},{float(corrected.probs[k])!r}"
        for k in range(base.kmax + 1)
    ]
    _emit(
        _csv_doc(
            cfg, "k,p_hat,ci_low,ci_high,p_poisson,p_corrected", rows, base.truncation_mass
        ),
        out,
    )
    return 0


def _cmd_validate(cfg: ExperimentConfig, out: str | None) -> int:
    model = _require_mmpp(cfg)
    if cfg.eps_grid is None:
        raise ConfigError("missing required field", "eps_grid")
    service = cfg.service if cfg.kind == "queue" else None
    report = convergence_study(
        model,
        service,
        cfg.eps_grid,
        cfg.t,
        cfg.reps,
        cfg.master_seed,
        kmax=cfg.kmax,
        workers=cfg.workers,
    )
    _emit(_json_doc(cfg, report.to_json_dict()), out)
    return 0


def _cmd_tv_limit(cfg: ExperimentConfig, out: str | None, reps_requested: bool) -> int:
    model = _require_mmpp(cfg)
    body = {"tv_limit_exact": tv_limit_exact(model, cfg.t, cfg.truncation_mass)}
    if reps_requested:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed))
        est, se = tv_limit_mc(model, cfg.t, cfg.reps, rng)
        body["tv_limit_mc"] = {"estimate": est, "se": se, "reps": cfg.reps}
    _emit(_json_doc(cfg, body), out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rapidpp",
        description="Simulation and analytics for rapidly modulated arrival processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("analyze", "expand", "simulate", "validate", "tv-limit"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", help="output path (defaults to stdout)")
        if name in ("simulate", "validate", "tv-limit"):
            sp.add_argument("--seed", type=int, help="override master_seed")
            sp.add_argument("--reps", type=int, help="override replication count")
        if name == "simulate":
            sp.add_argument("--kind", choices=["counts", "queue"], help="override experiment kind")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = load_config_file(args.config)
        if not isinstance(raw, dict):
            raise ConfigError("top-level document must be an object")
        if getattr(args, "seed", None) is not None:
            raw["master_seed"] = args.seed
        if getattr(args, "reps", None) is not None:
            raw["reps"] = args.reps
        if getattr(args, "kind", None) is not None:
            raw["kind"] = args.kind
        cfg = parse_experiment_config(raw)
        if args.command == "analyze":
            return _cmd_analyze(cfg, args.out)
        if args.command == "expand":
            return _cmd_expand(cfg, args.out)
        if args.command == "simulate":
            return _cmd_simulate(cfg, args.out)
        if args.command == "validate":
            return _cmd_validate(cfg, args.out)
        reps_requested = "reps" in raw
        return _cmd_tv_limit(cfg, args.out, reps_requested)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, SingularSystemError, ZeroMeanRateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except EnumerationTooLargeError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
