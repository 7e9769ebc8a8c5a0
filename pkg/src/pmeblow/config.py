"""Flat key=value run configuration with dotted sections.

The format is line-oriented: ``section.key = value`` with ``#`` comments.
Every hypothesis that can be checked without an eigenvalue solve is
validated here and reported with the hypothesis spelled out; membrane
feasibility needs a solve and is checked by the experiment driver.
"""

from dataclasses import dataclass, fields

from . import criteria
from .dynamics import ProblemSpec, RunControls, SpecError, make_initial
from .geometry import DomainError, make_domain

MODES = ("auto", "theorem1", "theorem2", "theorem3", "barenblatt", "none")

U0_KINDS = ("eigenfunction", "sine", "bump", "barenblatt", "constant")


class ConfigError(ValueError):
    """Malformed configuration or named hypothesis violation."""


@dataclass
class RunConfig:
    domain_kind: str = "interval"
    domain_extents: tuple = (1.0,)
    domain_dimension: int = 1
    domain_center: tuple | None = None
    domain_resolution: int = 128
    problem_m: float = 2.0
    problem_p: float = 1.0
    problem_q: float = 1.0
    problem_k1: float = 0.0
    problem_k2: float = 0.0
    problem_h: float = 1.0
    problem_k: int = 1
    problem_source: str = "none"
    problem_u0: str = "bump"
    problem_u0_amplitude: float = 1.0
    problem_u0_mass: float = 1.0
    problem_u0_time: float = 0.1
    run_mode: str = "auto"
    run_t_end: float = 1.0
    run_u_max: float = 1e8
    run_cadence: int = 50
    run_safety: float = 0.25
    run_seed: int = 0
    run_delta: float | None = None
    run_ladder: tuple = (100, 200, 400)
    run_window: int = 20
    run_max_steps: int | None = None
    output_dir: str = "out"

    # resolved theorem mode (filled by validation)
    mode: str = "none"

    def to_text(self):
        """Canonical, re-parseable echo of this configuration."""
        lines = []
        for key, value in sorted(self.echo().items()):
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def echo(self):
        out = {}
        for f in fields(self):
            if f.name == "mode":
                continue
            key = f.name.replace("_", ".", 1)
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(_fmt(v) for v in value)
            else:
                value = _fmt(value)
            out[key] = value
        return out

    # -- builders -------------------------------------------------------

    def build_domain(self, resolution=None):
        return make_domain(
            self.domain_kind,
            self.domain_extents,
            self.domain_dimension,
            x0=self.domain_center,
            resolution=resolution or self.domain_resolution,
        )

    def build_spec(self):
        return ProblemSpec(
            m=self.problem_m, p=self.problem_p, q=self.problem_q,
            k1=self.problem_k1, k2=self.problem_k2, h=self.problem_h,
            k=self.problem_k, source_kind=self.problem_source,
        )

    def build_controls(self):
        return RunControls(
            t_end=self.run_t_end, u_max=self.run_u_max,
            cadence=self.run_cadence, safety=self.run_safety,
            window=self.run_window, max_steps=self.run_max_steps,
        )

    def build_initial(self, domain, spec):
        return make_initial(
            domain, spec, self.problem_u0,
            amplitude=self.problem_u0_amplitude,
            mass=self.problem_u0_mass, t0=self.problem_u0_time,
        )


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


_PARSERS = {
    "domain.kind": ("domain_kind", str),
    "domain.extents": ("domain_extents", lambda s: tuple(float(x) for x in s.split(","))),
    "domain.dimension": ("domain_dimension", int),
    "domain.center": ("domain_center", lambda s: tuple(float(x) for x in s.split(","))),
    "domain.resolution": ("domain_resolution", int),
    "problem.m": ("problem_m", float),
    "problem.p": ("problem_p", float),
    "problem.q": ("problem_q", float),
    "problem.k1": ("problem_k1", float),
    "problem.k2": ("problem_k2", float),
    "problem.h": ("problem_h", float),
    "problem.k": ("problem_k", int),
    "problem.source": ("problem_source", str),
    "problem.u0": ("problem_u0", str),
    "problem.u0.amplitude": ("problem_u0_amplitude", float),
    "problem.u0.mass": ("problem_u0_mass", float),
    "problem.u0.time": ("problem_u0_time", float),
    "run.mode": ("run_mode", str),
    "run.t_end": ("run_t_end", float),
    "run.u_max": ("run_u_max", float),
    "run.cadence": ("run_cadence", int),
    "run.safety": ("run_safety", float),
    "run.seed": ("run_seed", int),
    "run.delta": ("run_delta", float),
    "run.ladder": ("run_ladder", lambda s: tuple(int(x) for x in s.split(","))),
    "run.window": ("run_window", int),
    "run.max_steps": ("run_max_steps", int),
    "output.dir": ("output_dir", str),
}

# alternate spellings produced by echo() for underscored field names
_ALIASES = {
    "problem.u0_amplitude": "problem.u0.amplitude",
    "problem.u0_mass": "problem.u0.mass",
    "problem.u0_time": "problem.u0.time",
    "run.t_end": "run.t_end",
    "run.u_max": "run.u_max",
    "run.max_steps": "run.max_steps",
}


def parse_config(text):
    """Parse and validate a configuration; returns a RunConfig."""
    cfg = RunConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        attr, conv = _PARSERS[key]
        try:
            setattr(cfg, attr, conv(value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    """Structural checks plus theorem-hypothesis checks with names."""
    if cfg.run_mode not in MODES:
        raise ConfigError(f"run.mode must be one of {MODES}")
    if cfg.problem_u0 not in U0_KINDS:
        raise ConfigError(f"problem.u0 must be one of {U0_KINDS}")
    if cfg.run_t_end <= 0:
        raise ConfigError("run.t_end must be positive")
    if cfg.run_cadence < 1:
        raise ConfigError("run.cadence must be >= 1")
    if list(cfg.run_ladder) != sorted(set(cfg.run_ladder)):
        raise ConfigError("run.ladder must be strictly increasing")

    try:
        cfg.build_domain()
        spec = cfg.build_spec()
    except (DomainError, SpecError) as exc:
        raise ConfigError(str(exc)) from exc

    cfg.mode = _resolve_mode(cfg, spec)


def _resolve_mode(cfg, spec):
    mode = cfg.run_mode
    if mode == "auto":
        if spec.source_kind == "power_absorption" and spec.k == 1:
            if spec.p >= max(spec.m, spec.q) and spec.q > 1:
                mode = "theorem1"
            elif spec.p < spec.m:
                mode = "theorem2"
            else:
                mode = "none"
        elif spec.source_kind == "gradient_absorption" and spec.k == 0:
            mode = "theorem3"
        elif spec.source_kind == "none":
            mode = "barenblatt" if cfg.problem_u0 == "barenblatt" else "none"
        else:
            mode = "none"

    if mode == "theorem1":
        if spec.source_kind != "power_absorption" or spec.k != 1:
            raise ConfigError(
                "theorem1 mode needs the power-absorption source with Robin "
                "boundary conditions (k = 1)"
            )
        if spec.p < max(spec.m, spec.q):
            raise ConfigError(
                "theorem1 hypothesis violated: requires p >= max{m, q} "
                f"(p = {spec.p}, m = {spec.m}, q = {spec.q})"
            )
        if spec.q <= 1:
            raise ConfigError("theorem1 hypothesis violated: requires q > 1")
    elif mode == "theorem2":
        if spec.source_kind != "power_absorption" or spec.k != 1:
            raise ConfigError(
                "theorem2 mode needs the power-absorption source with Robin "
                "boundary conditions (k = 1)"
            )
        if spec.p >= spec.m:
            raise ConfigError(
                "theorem2 hypothesis violated: requires p < m "
                f"(p = {spec.p}, m = {spec.m})"
            )
    elif mode == "theorem3":
        if spec.source_kind != "gradient_absorption" or spec.k != 0:
            raise ConfigError(
                "theorem3 mode needs the gradient-absorption source with "
                "Dirichlet boundary conditions (k = 0)"
            )
        if cfg.domain_dimension != 3:
            raise ConfigError(
                "theorem3 hypothesis violated: the Sobolev-route inequality "
                "restricts the lower bound to 3-dimensional domains "
                f"(got dimension {cfg.domain_dimension})"
            )
        try:
            criteria.h0_coefficients(spec.m, spec.p, spec.q, cfg.run_delta)
        except criteria.CriteriaError as exc:
            raise ConfigError(f"(H0) hypothesis violated: {exc}") from exc
    return mode
