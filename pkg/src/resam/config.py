"""Experiment configuration files and result output.

Configurations are JSON with an explicit ``schema_version``.  Parsing is
strict: unknown fields are rejected with their dotted path so typos never
silently change an experiment.  A configuration holds one base run plus
optional sweep axes (rules, attacks, betas, fs) and a replica count;
expansion takes the cartesian product in a fixed order, with replica k
running under seed ``base_seed + k``.

All files are written atomically (temp file then rename) so a crashed or
interrupted sweep never leaves half-written results behind.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .aggregation import RULE_NAMES, Rule
from .attacks import ATTACK_NAMES, Attack
from .problems import LogisticSpec, ProblemSpec, QuadraticSpec
from .simulator import THEOREM, RunConfig, RunResult, metrics_to_csv

SCHEMA_VERSION = 1
MAX_SWEEP_RUNS = 10**4
DEFAULT_OUTPUT_DIR = "results"
OUTPUT_DIR_ENV = "RESAM_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _require_keys(obj: Dict[str, Any], path: str, known: Sequence[str]) -> None:
    unknown = set(obj) - set(known)
    if unknown:
        raise ConfigError(f"unknown field(s) at {path}: {sorted(unknown)}")


def _get(obj: Dict[str, Any], path: str, key: str, kind, required: bool = True, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"missing field {path}.{key}")
        return default
    value = obj[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"field {path}.{key} must be an integer")
    if not isinstance(value, kind):
        raise ConfigError(f"field {path}.{key} must be {kind.__name__}")
    return value


def parse_rule(obj: Any, path: str) -> Rule:
    if isinstance(obj, str):
        obj = {"name": obj}
    if not isinstance(obj, dict):
        raise ConfigError(f"field {path} must be a rule name or object")
    _require_keys(obj, path, ("name", "q", "c_tau", "iters"))
    name = _get(obj, path, "name", str)
    if name not in RULE_NAMES:
        raise ConfigError(f"field {path}.name: unknown rule {name!r}")
    kwargs: Dict[str, Any] = {}
    if "q" in obj:
        kwargs["q"] = _get(obj, path, "q", int)
    if "c_tau" in obj:
        kwargs["c_tau"] = _get(obj, path, "c_tau", float)
    if "iters" in obj:
        kwargs["iters"] = _get(obj, path, "iters", int)
    try:
        return Rule(name, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"field {path}: {exc}") from exc


def parse_attack(obj: Any, path: str) -> Optional[Attack]:
    if obj is None:
        return None
    if isinstance(obj, str):
        obj = {"name": obj}
    if not isinstance(obj, dict):
        raise ConfigError(f"field {path} must be null, an attack name or object")
    _require_keys(obj, path, ("name", "zeta", "little_sign"))
    name = _get(obj, path, "name", str)
    if name not in ATTACK_NAMES:
        raise ConfigError(f"field {path}.name: unknown attack {name!r}")
    kwargs: Dict[str, Any] = {}
    if "zeta" in obj:
        kwargs["zeta"] = _get(obj, path, "zeta", float)
    if "little_sign" in obj:
        kwargs["little_sign"] = _get(obj, path, "little_sign", float)
    try:
        return Attack(name, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"field {path}: {exc}") from exc


def parse_problem(obj: Any, path: str) -> ProblemSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"field {path} must be an object")
    name = _get(obj, path, "name", str)
    if name == "quadratic":
        _require_keys(obj, path, ("name", "dim", "sigma", "theta_star"))
        theta_star = obj.get("theta_star")
        if theta_star is not None:
            if not isinstance(theta_star, list):
                raise ConfigError(f"field {path}.theta_star must be a list")
            theta_star = tuple(float(v) for v in theta_star)
        return QuadraticSpec(
            dim=_get(obj, path, "dim", int),
            sigma=_get(obj, path, "sigma", float),
            theta_star=theta_star,
        )
    if name == "logistic":
        _require_keys(
            obj, path, ("name", "dim", "mu", "n_per_class", "batch", "reg", "data_seed")
        )
        return LogisticSpec(
            dim=_get(obj, path, "dim", int),
            mu=_get(obj, path, "mu", float),
            n_per_class=_get(obj, path, "n_per_class", int),
            batch=_get(obj, path, "batch", int),
            reg=_get(obj, path, "reg", float),
            data_seed=_get(obj, path, "data_seed", int),
        )
    raise ConfigError(f"field {path}.name: unknown problem {name!r}")


def _parse_gamma_beta(obj: Dict[str, Any], path: str, key: str):
    value = obj.get(key)
    if value is None:
        raise ConfigError(f"missing field {path}.{key}")
    if isinstance(value, str):
        if value != THEOREM:
            raise ConfigError(f"field {path}.{key} must be a number or {THEOREM!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {path}.{key} must be a number or {THEOREM!r}")
    return float(value)


def parse_run(obj: Any, path: str = "run") -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError(f"field {path} must be an object")
    _require_keys(
        obj,
        path,
        (
            "n",
            "f",
            "steps",
            "gamma",
            "beta",
            "seed",
            "rule",
            "attack",
            "problem",
            "theta1",
            "byzantine_indices",
        ),
    )
    theta1 = obj.get("theta1")
    if theta1 is not None:
        if not isinstance(theta1, list):
            raise ConfigError(f"field {path}.theta1 must be a list")
        theta1 = tuple(float(v) for v in theta1)
    byz = obj.get("byzantine_indices")
    if byz is not None:
        if not isinstance(byz, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in byz
        ):
            raise ConfigError(f"field {path}.byzantine_indices must be a list of ints")
        byz = tuple(byz)
    try:
        return RunConfig(
            n=_get(obj, path, "n", int),
            f=_get(obj, path, "f", int),
            steps=_get(obj, path, "steps", int),
            gamma=_parse_gamma_beta(obj, path, "gamma"),
            beta=_parse_gamma_beta(obj, path, "beta"),
            seed=_get(obj, path, "seed", int),
            rule=parse_rule(obj.get("rule"), f"{path}.rule"),
            attack=parse_attack(obj.get("attack"), f"{path}.attack"),
            problem=parse_problem(obj.get("problem"), f"{path}.problem"),
            theta1=theta1,
            byzantine_indices=byz,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"field {path}: {exc}") from exc


@dataclass(frozen=True)
class SweepAxes:
    rules: Optional[Tuple[Rule, ...]] = None
    attacks: Optional[Tuple[Optional[Attack], ...]] = None
    betas: Optional[Tuple[Any, ...]] = None
    fs: Optional[Tuple[int, ...]] = None

    def empty(self) -> bool:
        return all(v is None for v in (self.rules, self.attacks, self.betas, self.fs))


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunConfig
    sweep: SweepAxes
    replicas: int
    output_dir: Optional[str]


def parse_config(obj: Any) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    _require_keys(obj, "$", ("schema_version", "run", "sweep", "replicas", "output_dir"))
    version = _get(obj, "$", "schema_version", int)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )
    run = parse_run(obj.get("run"))
    replicas = _get(obj, "$", "replicas", int, required=False, default=1)
    if replicas < 1:
        raise ConfigError("field $.replicas must be >= 1")
    output_dir = _get(obj, "$", "output_dir", str, required=False)

    sweep = SweepAxes()
    if "sweep" in obj:
        sobj = obj["sweep"]
        if not isinstance(sobj, dict):
            raise ConfigError("field sweep must be an object")
        _require_keys(sobj, "sweep", ("rules", "attacks", "betas", "fs"))
        rules = attacks = betas = fs = None
        if "rules" in sobj:
            if not isinstance(sobj["rules"], list):
                raise ConfigError("field sweep.rules must be a list")
            rules = tuple(
                parse_rule(r, f"sweep.rules[{i}]") for i, r in enumerate(sobj["rules"])
            )
        if "attacks" in sobj:
            if not isinstance(sobj["attacks"], list):
                raise ConfigError("field sweep.attacks must be a list")
            attacks = tuple(
                parse_attack(a, f"sweep.attacks[{i}]")
                for i, a in enumerate(sobj["attacks"])
            )
        if "betas" in sobj:
            if not isinstance(sobj["betas"], list):
                raise ConfigError("field sweep.betas must be a list")
            betas = tuple(
                _parse_gamma_beta({"beta": b}, f"sweep.betas[{i}]", "beta")
                for i, b in enumerate(sobj["betas"])
            )
        if "fs" in sobj:
            if not isinstance(sobj["fs"], list) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in sobj["fs"]
            ):
                raise ConfigError("field sweep.fs must be a list of ints")
            fs = tuple(sobj["fs"])
        sweep = SweepAxes(rules=rules, attacks=attacks, betas=betas, fs=fs)

    return ExperimentConfig(run=run, sweep=sweep, replicas=replicas, output_dir=output_dir)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(obj)


def _format_axis(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, Rule):
        return value.label()
    if isinstance(value, Attack):
        return value.label()
    return str(value)


def expand_sweep(cfg: ExperimentConfig) -> List[Tuple[str, RunConfig]]:
    """All (run_id, RunConfig) pairs of the sweep, in deterministic order:
    rules x attacks x betas x fs x replicas."""
    base = cfg.run
    rules = cfg.sweep.rules if cfg.sweep.rules is not None else (base.rule,)
    attacks = cfg.sweep.attacks if cfg.sweep.attacks is not None else (base.attack,)
    betas = cfg.sweep.betas if cfg.sweep.betas is not None else (base.beta,)
    fs = cfg.sweep.fs if cfg.sweep.fs is not None else (base.f,)

    total = len(rules) * len(attacks) * len(betas) * len(fs) * cfg.replicas
    if total > MAX_SWEEP_RUNS:
        raise ConfigError(f"sweep would produce {total} runs, cap is {MAX_SWEEP_RUNS}")

    out: List[Tuple[str, RunConfig]] = []
    idx = 0
    for rule in rules:
        for attack in attacks:
            for beta in betas:
                # Theorem-mode beta implies theorem-mode gamma and back.
                gamma = base.gamma
                if beta == THEOREM:
                    gamma = THEOREM
                elif gamma == THEOREM:
                    raise ConfigError(
                        "sweep mixes a numeric beta with gamma='theorem'"
                    )
                for f in fs:
                    for replica in range(cfg.replicas):
                        run_cfg = dataclasses.replace(
                            base,
                            rule=rule,
                            attack=attack,
                            beta=beta,
                            gamma=gamma,
                            f=f,
                            seed=base.seed + replica,
                        )
                        run_id = (
                            f"{idx:04d}_{_format_axis(rule)}_{_format_axis(attack)}"
                            f"_b{_format_axis(beta)}_f{f}_r{replica}"
                        )
                        out.append((run_id, run_cfg))
                        idx += 1
    return out


def resolve_output_dir(cli_value: Optional[str], cfg: ExperimentConfig) -> str:
    if cli_value:
        return cli_value
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return env
    if cfg.output_dir:
        return cfg.output_dir
    return DEFAULT_OUTPUT_DIR


def write_text_atomic(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path: str, payload: Any) -> None:
    write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_summary(run_id: str, config: RunConfig, result: RunResult) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "id": run_id,
        "n": config.n,
        "f": config.f,
        "steps": config.steps,
        "seed": config.seed,
        "rule": config.rule.label(),
        "attack": config.attack.label() if config.attack else None,
        "beta": result.beta,
        "gamma": result.gamma,
        "beta_requested": config.beta,
        "gamma_requested": config.gamma,
        "diverged": result.diverged,
        "diverged_at": result.diverged_at,
        "avg_grad_sq": result.avg_grad_sq,
        "final_loss": result.metrics[-1].loss if result.metrics else None,
        "final_accuracy": result.final_accuracy,
        "theta_hat_step": result.theta_hat_step,
        "theta_hat": result.theta_hat.tolist(),
    }
    if result.theory is not None:
        summary["theory"] = dataclasses.asdict(result.theory)
        summary["sigma_used"] = result.sigma_used
    return summary


def write_run_outputs(
    out_dir: str, run_id: str, config: RunConfig, result: RunResult
) -> Dict[str, Any]:
    """Write <id>.csv and <id>.json for one run; returns the index entry."""
    csv_name = f"{run_id}.csv"
    json_name = f"{run_id}.json"
    write_text_atomic(os.path.join(out_dir, csv_name), metrics_to_csv(result.metrics))
    summary = run_summary(run_id, config, result)
    write_json_atomic(os.path.join(out_dir, json_name), summary)
    return {
        "id": run_id,
        "rule": summary["rule"],
        "attack": summary["attack"],
        "beta": summary["beta"],
        "gamma": summary["gamma"],
        "f": config.f,
        "n": config.n,
        "seed": config.seed,
        "csv": csv_name,
        "summary": json_name,
        "diverged": result.diverged,
        "avg_grad_sq": result.avg_grad_sq,
        "final_accuracy": result.final_accuracy,
    }
