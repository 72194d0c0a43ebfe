"""Experiment configuration: a flat, sectioned, key = value text format.

Sections are [problem], [direction], [linesearch], [run]. Unknown sections or
keys are rejected; every key has a documented default; serialization writes
all keys in a canonical order with full-precision floats, so parse(serialize)
is the identity. Overrides take "section.key=value" strings; environment
variables use the prefix SLSOPT_ with SECTION__KEY naming (for example
SLSOPT_RUN__MAX_ITERS=500).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields

import numpy as np

from . import directions, linesearch, optimizer, problems
from .errors import ConfigError, InvalidSpecError

__all__ = [
    "ProblemConfig",
    "DirectionConfig",
    "LineSearchConfig",
    "RunSectionConfig",
    "ExperimentConfig",
    "parse_config",
    "read_config",
    "serialize_config",
    "apply_env_overrides",
    "parse_spectrum",
    "build_problem",
    "build_direction_state",
    "build_sgr_params",
    "build_linesearch_params",
    "build_run_config",
]

ENV_PREFIX = "SLSOPT_"

PROBLEM_KINDS = ("least_squares", "nonconvex")


@dataclass
class ProblemConfig:
    kind: str = "least_squares"
    N: int = 100
    n: int = 200
    seed: int = 0
    spectrum: str = "const:1.0"


@dataclass
class DirectionConfig:
    kind: str = "sgd"
    beta: float = 0.9
    cg_variant: str = "pr+"
    beta_cap: float = 10.0
    epsilon: float = 1e-8
    c1: float = 10.0
    c2: float = 0.1


@dataclass
class LineSearchConfig:
    gamma: float = 0.1
    delta: float = 0.5
    alpha_max: float = 10.0
    alpha0_policy: str = "constant"
    max_backtracks: int = 60


@dataclass
class RunSectionConfig:
    max_iters: int = 1000
    grad_tol: float = 1e-10
    fgap_tol: float = 1e-8
    seed: int = 0
    trace_every: int = 10
    out_csv: str = "trace.csv"
    out_svg: str = ""


@dataclass
class ExperimentConfig:
    problem: ProblemConfig
    direction: DirectionConfig
    linesearch: LineSearchConfig
    run: RunSectionConfig

    @classmethod
    def default(cls) -> "ExperimentConfig":
        return cls(ProblemConfig(), DirectionConfig(), LineSearchConfig(), RunSectionConfig())


_SECTIONS = {
    "problem": ProblemConfig,
    "direction": DirectionConfig,
    "linesearch": LineSearchConfig,
    "run": RunSectionConfig,
}


def _coerce(section: str, key: str, raw: str, target_type):
    raw = raw.strip()
    try:
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {target_type.__name__}") from exc


def _raw_sections(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), strict=True, interpolation=None
    )
    parser.optionxform = str  # keys are case-sensitive (N vs n)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _config_from_raw(raw: dict[str, dict[str, str]]) -> ExperimentConfig:
    for section in raw:
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
    built = {}
    for section, cls in _SECTIONS.items():
        spec = {f.name: f.type for f in fields(cls)}
        defaults = cls()
        values = {}
        for key, raw_value in raw.get(section, {}).items():
            if key not in spec:
                raise ConfigError(f"unknown key {section}.{key}")
            target = type(getattr(defaults, key))
            values[key] = _coerce(section, key, raw_value, target)
        built[section] = cls(**values)
    cfg = ExperimentConfig(**built)
    validate_config(cfg)
    return cfg


def parse_config(text: str, overrides=()) -> ExperimentConfig:
    """Parse config text, then apply "section.key=value" override strings."""
    raw = _raw_sections(text)
    raw = apply_env_overrides(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, value = item.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key {dotted!r} is not of the form section.key")
        section, key = dotted.split(".", 1)
        raw.setdefault(section.strip(), {})[key.strip()] = value
    return _config_from_raw(raw)


def apply_env_overrides(raw: dict[str, dict[str, str]], environ=None) -> dict[str, dict[str, str]]:
    """Fold SLSOPT_SECTION__KEY environment variables into the raw key map.

    Keys resolve exact-case first, then lower-case, so SLSOPT_PROBLEM__N is
    the component count while the dimension needs the literal lower-case name.
    """
    environ = os.environ if environ is None else environ
    out = {s: dict(kv) for s, kv in raw.items()}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if "__" not in rest:
            raise ConfigError(f"environment override {name} must look like {ENV_PREFIX}SECTION__KEY")
        section, key = rest.split("__", 1)
        section = section.lower()
        if section not in _SECTIONS:
            raise ConfigError(f"environment override {name} names unknown section {section!r}")
        field_names = {f.name for f in fields(_SECTIONS[section])}
        if key not in field_names:
            if key.lower() in field_names:
                key = key.lower()
            else:
                raise ConfigError(f"environment override {name} names unknown key {key!r}")
        out.setdefault(section, {})[key] = value
    return out


def read_config(path, overrides=()) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides=overrides)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form: every key, fixed order, full-precision floats."""
    lines = []
    for section, cls in _SECTIONS.items():
        lines.append(f"[{section}]")
        obj = getattr(cfg, section)
        for f in fields(cls):
            lines.append(f"{f.name} = {_fmt(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)


def validate_config(cfg: ExperimentConfig):
    p, d, ls, r = cfg.problem, cfg.direction, cfg.linesearch, cfg.run
    if p.kind not in PROBLEM_KINDS:
        raise ConfigError(f"problem.kind must be one of {PROBLEM_KINDS}, got {p.kind!r}")
    if p.N < 1:
        raise ConfigError(f"problem.N must be >= 1, got {p.N}")
    if p.n < 1:
        raise ConfigError(f"problem.n must be >= 1, got {p.n}")
    if d.kind not in directions.KINDS:
        raise ConfigError(f"direction.kind must be one of {directions.KINDS}, got {d.kind!r}")
    if d.cg_variant not in directions.CG_VARIANTS:
        raise ConfigError(
            f"direction.cg_variant must be one of {directions.CG_VARIANTS}, got {d.cg_variant!r}"
        )
    if not (0.0 < d.c2 <= d.c1):
        raise ConfigError(f"direction must satisfy 0 < c2 <= c1, got c1={d.c1}, c2={d.c2}")
    if d.epsilon <= 0:
        raise ConfigError(f"direction.epsilon must be > 0, got {d.epsilon}")
    if d.beta_cap <= 0:
        raise ConfigError(f"direction.beta_cap must be > 0, got {d.beta_cap}")
    if not 0.0 < ls.gamma < 1.0:
        raise ConfigError(f"linesearch.gamma must be in (0, 1), got {ls.gamma}")
    if not 0.0 < ls.delta < 1.0:
        raise ConfigError(f"linesearch.delta must be in (0, 1), got {ls.delta}")
    if ls.alpha_max <= 0:
        raise ConfigError(f"linesearch.alpha_max must be > 0, got {ls.alpha_max}")
    _parse_policy(ls.alpha0_policy)
    if ls.max_backtracks < 1:
        raise ConfigError(f"linesearch.max_backtracks must be >= 1, got {ls.max_backtracks}")
    if r.max_iters < 1:
        raise ConfigError(f"run.max_iters must be >= 1, got {r.max_iters}")
    if r.grad_tol < 0 or r.fgap_tol < 0:
        raise ConfigError("run tolerances must be >= 0")
    if r.trace_every < 1:
        raise ConfigError(f"run.trace_every must be >= 1, got {r.trace_every}")


def _parse_policy(text: str) -> tuple[str, int]:
    if text == "constant":
        return "constant", 1
    if text == "warm_increase":
        return "warm_increase", 1
    if text.startswith("warm_increase:"):
        try:
            p = int(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad warm_increase power in {text!r}") from exc
        if p < 1:
            raise ConfigError(f"warm_increase power must be >= 1, got {p}")
        return "warm_increase", p
    raise ConfigError(
        f"linesearch.alpha0_policy must be 'constant' or 'warm_increase[:p]', got {text!r}"
    )


def parse_spectrum(text: str, N: int, n: int) -> np.ndarray:
    """Decode a spectrum spec into the singular values of the design matrix.

    Forms: "const:V[:K]", "linear:LO:HI[:K]", "geom:LO:HI[:K]", or an explicit
    comma list "v1,v2,...". K defaults to min(N, n).
    """
    text = text.strip()
    k_default = min(N, n)
    try:
        if text.startswith("const:"):
            parts = text.split(":")
            value = float(parts[1])
            k = int(parts[2]) if len(parts) > 2 else k_default
            return np.full(k, value)
        if text.startswith("linear:") or text.startswith("geom:"):
            parts = text.split(":")
            lo, hi = float(parts[1]), float(parts[2])
            k = int(parts[3]) if len(parts) > 3 else k_default
            if text.startswith("linear:"):
                return np.linspace(lo, hi, k)
            return np.geomspace(lo, hi, k)
        return np.array([float(t) for t in text.split(",")])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"cannot parse spectrum spec {text!r}") from exc


def build_problem(cfg: ExperimentConfig) -> problems.FiniteSumProblem:
    p = cfg.problem
    if p.kind == "least_squares":
        spectrum = parse_spectrum(p.spectrum, p.N, p.n)
        try:
            return problems.gen_interpolating_least_squares(p.N, p.n, p.seed, spectrum)
        except InvalidSpecError as exc:
            raise ConfigError(str(exc)) from exc
    # nonconvex: n is used for both factor sizes
    return problems.gen_nonconvex_interpolating(p.N, p.n, p.n, p.seed)


def build_direction_state(cfg: ExperimentConfig) -> directions.DirectionState:
    d = cfg.direction
    return directions.DirectionState(
        kind=d.kind,
        beta=d.beta,
        cg_variant=d.cg_variant,
        beta_cap=d.beta_cap,
        epsilon=d.epsilon,
    )


def build_sgr_params(cfg: ExperimentConfig) -> directions.SgrParams:
    return directions.SgrParams(c1=cfg.direction.c1, c2=cfg.direction.c2)


def build_linesearch_params(cfg: ExperimentConfig) -> linesearch.LineSearchParams:
    ls = cfg.linesearch
    policy, power = _parse_policy(ls.alpha0_policy)
    return linesearch.LineSearchParams(
        gamma=ls.gamma,
        delta=ls.delta,
        alpha_max=ls.alpha_max,
        alpha0_policy=policy,
        warm_power=power,
        max_backtracks=ls.max_backtracks,
    )


def build_run_config(cfg: ExperimentConfig, problem=None) -> optimizer.RunConfig:
    problem = build_problem(cfg) if problem is None else problem
    r = cfg.run
    return optimizer.RunConfig(
        problem=problem,
        direction=build_direction_state(cfg),
        linesearch=build_linesearch_params(cfg),
        sgr=build_sgr_params(cfg),
        max_iters=r.max_iters,
        grad_tol=r.grad_tol,
        fgap_tol=r.fgap_tol,
        seed=r.seed,
        trace_full_oracle_every=r.trace_every,
    )
