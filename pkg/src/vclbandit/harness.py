"""Experiment configuration, seeded replications, aggregation and CSV output.

Replication ``r`` (numbered from 1) of a run with base seed ``s`` plays the
episode seeded by ``s ^ r``.  For ``r < 2**32`` and a fixed ``s`` these seeds
are distinct, and every policy in the run faces the same instance, action
sets and noise for a given replication.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .environment import NOISE_ALIASES, NOISE_KINDS, SET_KINDS, THETA_MODES, RoundRecord, SetGenerator, make_instance, run_episode
from .estimator import ConfidenceSchedule
from .policies import KINDS, PolicyConfig

ROUND_HEADER = (
    "replication", "t", "omega", "alpha", "action_norm", "reward",
    "instant_regret", "cumulative_regret", "opt_converged",
)
SUMMARY_HEADER = (
    "policy", "d", "T", "replications", "final_regret_mean", "final_regret_median",
    "final_regret_q10", "final_regret_q90", "normalized_regret_median",
)

#: Documented defaults; any key outside these tables is a configuration error.
EXPERIMENT_DEFAULTS = {
    "dim": "5",
    "horizon": "1000",
    "replications": "10",
    "seed": "0",
    "env": "unit_ball",
    "env_size": "10",
    "noise": "gaussian_unit",
    "theta": "uniform_sphere",
    "theta_vector": "",
    "output": "",
    "workers": "1",
}
POLICY_DEFAULTS = {
    "kind": "",
    "constant_c": "1.0",
    "smooth": "false",
    "oful_delta": "0.1",
    "argmax_slack": "",
}
DIAGNOSTIC_DEFAULTS = {
    "elliptical_trials": "1000",
    "elliptical_horizon": "200",
    "elliptical_dim": "8",
    "tail_delta": "0.05",
    "tail_reps": "400",
    "tail_t": "500",
    "tail_dim": "5",
    "tail_threshold": "4.0",
    "scaling_dims": "2,5",
    "scaling_horizons": "1024,4096,16384",
    "scaling_replications": "20",
    "scaling_threshold": "1.5",
    "scaling_control_threshold": "3.0",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    name: str
    kind: str
    constant_c: float = 1.0
    smooth: bool = False
    oful_delta: float = 0.1
    argmax_slack: float | None = None

    def build(self, dim: int, horizon: int) -> PolicyConfig:
        return PolicyConfig(
            self.kind,
            ConfidenceSchedule(horizon, dim, self.smooth),
            bonus_constant=self.constant_c,
            oful_delta=self.oful_delta,
            argmax_slack=self.argmax_slack,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 5
    horizon: int = 1000
    replications: int = 10
    seed: int = 0
    policies: tuple = (PolicySpec("vcl_ucb", "vcl_ucb"),)
    env: str = "unit_ball"
    env_size: int = 10
    noise: str = "gaussian_unit"
    theta: str = "uniform_sphere"
    theta_vector: tuple | None = None
    output: str | None = None
    workers: int = 1
    diagnostics: dict = field(default_factory=lambda: dict(DIAGNOSTIC_DEFAULTS))

    def __post_init__(self):
        if self.horizon < 2:
            raise ConfigError("horizon must be >= 2")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        if self.env not in SET_KINDS:
            raise ConfigError(f"env: unknown generator {self.env!r}")
        if NOISE_ALIASES.get(self.noise, self.noise) not in NOISE_KINDS:
            raise ConfigError(f"noise: unknown kind {self.noise!r}")
        if self.theta not in THETA_MODES:
            raise ConfigError(f"theta: unknown mode {self.theta!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        names = [p.name for p in self.policies]
        if len(set(names)) != len(names):
            raise ConfigError("policy names must be unique")
        for p in self.policies:
            try:
                p.build(self.dim, self.horizon)
            except ValueError as exc:
                raise ConfigError(f"policy {p.name}: {exc}") from exc

    def generator(self) -> SetGenerator:
        return SetGenerator(self.env, self.env_size)


def _parse_bool(key, value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _typed(key, value, kind):
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r}") from exc


def _check_keys(section, allowed, where):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{where}]")


def parse_config(text: str) -> ExperimentConfig:
    """Parse the INI-style experiment format.

    Sections: ``[experiment]``, optional ``[diagnostics]`` and one
    ``[policy:<name>]`` per policy (``kind`` defaults to ``<name>``).
    """
    cp = configparser.ConfigParser(default_section="__none__", interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    exp = dict(EXPERIMENT_DEFAULTS)
    diag = dict(DIAGNOSTIC_DEFAULTS)
    policies = []
    for name in cp.sections():
        sec = cp[name]
        if name == "experiment":
            _check_keys(sec, EXPERIMENT_DEFAULTS, name)
            exp.update(sec)
        elif name == "diagnostics":
            _check_keys(sec, DIAGNOSTIC_DEFAULTS, name)
            diag.update(sec)
        elif name.startswith("policy:"):
            _check_keys(sec, POLICY_DEFAULTS, name)
            vals = dict(POLICY_DEFAULTS)
            vals.update(sec)
            pname = name.split(":", 1)[1].strip()
            kind = vals["kind"] or pname
            if kind not in KINDS:
                raise ConfigError(f"[{name}] kind: unknown policy {kind!r}")
            policies.append(
                PolicySpec(
                    pname,
                    kind,
                    _typed("constant_c", vals["constant_c"], float),
                    _parse_bool("smooth", vals["smooth"]),
                    _typed("oful_delta", vals["oful_delta"], float),
                    _typed("argmax_slack", vals["argmax_slack"], float) if vals["argmax_slack"] else None,
                )
            )
        else:
            raise ConfigError(f"unknown section [{name}]")
    theta_vector = None
    if exp["theta_vector"].strip():
        theta_vector = tuple(_typed("theta_vector", v, float) for v in exp["theta_vector"].split(","))
    kw = dict(
        dim=_typed("dim", exp["dim"], int),
        horizon=_typed("horizon", exp["horizon"], int),
        replications=_typed("replications", exp["replications"], int),
        seed=_typed("seed", exp["seed"], int),
        env=exp["env"].strip(),
        env_size=_typed("env_size", exp["env_size"], int),
        noise=exp["noise"].strip(),
        theta=exp["theta"].strip(),
        theta_vector=theta_vector,
        output=exp["output"].strip() or None,
        workers=_typed("workers", exp["workers"], int),
        diagnostics=diag,
    )
    if policies:
        kw["policies"] = tuple(policies)
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def apply_overrides(config: ExperimentConfig, **over) -> ExperimentConfig:
    """Apply CLI-style overrides (``None`` values are ignored)."""
    over = {k: v for k, v in over.items() if v is not None}
    env = over.pop("env", None)
    if env is not None:
        kind, _, size = env.partition(":")
        if kind == "finite":
            kind = "iid_sphere_finite"
        over["env"] = kind
        if size:
            over["env_size"] = _typed("env", size, int)
    policy = over.pop("policy", None)
    if policy is not None:
        match = [p for p in config.policies if p.kind == policy]
        over["policies"] = (match[0] if match else PolicySpec(policy, policy),)
    constant = over.pop("constant_c", None)
    policies = over.get("policies", config.policies)
    if constant is not None:
        policies = tuple(replace(p, constant_c=constant) for p in policies)
        over["policies"] = policies
    try:
        return replace(config, **over)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def replication_seed(base: int, r: int) -> int:
    return int(base) ^ int(r)


def make_replication_instance(config: ExperimentConfig, r: int):
    return make_instance(
        config.dim,
        config.horizon,
        replication_seed(config.seed, r),
        theta_mode=config.theta,
        theta=config.theta_vector,
        noise=config.noise,
        generator=config.generator(),
    )


def _episode_task(args):
    config, spec, r = args
    instance = make_replication_instance(config, r)
    return run_episode(instance, spec.build(config.dim, config.horizon))


def map_tasks(fn, tasks, workers: int = 1):
    """Ordered map, in a process pool when ``workers > 1``."""
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


@dataclass
class PolicyResult:
    name: str
    final_regret: np.ndarray
    mean_curve: np.ndarray
    q10_curve: np.ndarray
    q50_curve: np.ndarray
    q90_curve: np.ndarray
    normalized_median: float
    nonconverged_rounds: int
    records: list = field(default_factory=list, repr=False)


@dataclass
class RunResult:
    config: ExperimentConfig
    policies: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def nonconverged_rounds(self) -> int:
        return sum(p.nonconverged_rounds for p in self.policies.values())


def normalizer(dim: int, horizon: int) -> float:
    """``sqrt(d^2 T ln T)``, the scale of the regret bound."""
    return math.sqrt(dim * dim * horizon * math.log(horizon))


def aggregate(name: str, episodes, dim: int, horizon: int) -> PolicyResult:
    curves = np.array([[rec.cumulative_regret for rec in ep] for ep in episodes])
    q10, q50, q90 = np.quantile(curves, [0.1, 0.5, 0.9], axis=0)
    final = curves[:, -1]
    return PolicyResult(
        name,
        final,
        curves.mean(axis=0),
        q10,
        q50,
        q90,
        float(np.median(final) / normalizer(dim, horizon)),
        sum(not rec.opt_converged for ep in episodes for rec in ep),
        list(episodes),
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def round_rows(replication: int, records):
    for rec in records:
        yield (
            str(replication), str(rec.t), _fmt(rec.omega), _fmt(rec.alpha),
            _fmt(np.linalg.norm(rec.action)), _fmt(rec.reward), _fmt(rec.instant_regret),
            _fmt(rec.cumulative_regret), "1" if rec.opt_converged else "0",
        )


def write_rounds_csv(fh, episodes) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ROUND_HEADER)
    for r, records in enumerate(episodes, start=1):
        w.writerows(round_rows(r, records))


def read_rounds_csv(fh) -> list[dict]:
    """Parse a per-round CSV back into typed rows."""
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != ROUND_HEADER:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    out = []
    for row in reader:
        typed = {k: float(v) for k, v in row.items()}
        typed["replication"] = int(row["replication"])
        typed["t"] = int(row["t"])
        typed["opt_converged"] = row["opt_converged"] == "1"
        out.append(typed)
    return out


def summary_rows(result: RunResult):
    cfg = result.config
    for name, pr in result.policies.items():
        f = pr.final_regret
        yield (
            name, str(cfg.dim), str(cfg.horizon), str(cfg.replications), _fmt(f.mean()),
            _fmt(np.median(f)), _fmt(np.quantile(f, 0.1)), _fmt(np.quantile(f, 0.9)),
            _fmt(pr.normalized_median),
        )


def write_outputs(result: RunResult, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, pr in result.policies.items():
        path = os.path.join(out_dir, f"rounds_{name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_rounds_csv(fh, pr.records)
        paths.append(path)
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(summary_rows(result))
    paths.append(path)
    return paths


def run_experiment(config: ExperimentConfig, out_dir=None, workers: int | None = None) -> RunResult:
    """Run every policy for ``config.replications`` seeded episodes.

    CSV files are written to ``out_dir`` (or ``config.output``) when set.
    Results do not depend on ``workers``.
    """
    workers = config.workers if workers is None else workers
    out_dir = out_dir or config.output
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)  # fail before simulating, not after
    tasks = [(config, spec, r) for spec in config.policies for r in range(1, config.replications + 1)]
    episodes = map_tasks(_episode_task, tasks, workers)
    R = config.replications
    policies = {}
    for i, spec in enumerate(config.policies):
        policies[spec.name] = aggregate(spec.name, episodes[i * R:(i + 1) * R], config.dim, config.horizon)
    result = RunResult(config, policies)
    if out_dir:
        write_outputs(result, out_dir)
    return result


def rounds_csv_text(records, replication: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROUND_HEADER)
    w.writerows(round_rows(replication, records))
    return buf.getvalue()


__all__ = [
    "ConfigError", "ExperimentConfig", "PolicySpec", "RunResult", "PolicyResult", "RoundRecord",
    "parse_config", "load_config", "apply_overrides", "run_experiment", "aggregate",
    "read_rounds_csv", "write_rounds_csv", "rounds_csv_text", "replication_seed", "normalizer",
]
