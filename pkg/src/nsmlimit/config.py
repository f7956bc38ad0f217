"""Run configuration: a YAML document validated into a ``RunSpec``.

Schema (every key optional; defaults shown)::

    system: eqnsm            # eqnsm | nsmo | species
    grid:     {d: 2, n: 64}
    params:   {mu: 0.1, sigma: 1.0, c: 1.0, eps: 0.1, eps_ladder: null}
    initial:  {recipe: random, seed: 0, energy: 0.01, amplitude: 1.0,
               decay: 3.0, kmax: null, j_init: zero}
    time:     {T: 0.5, dt: 0.005, dt_min: null, grade: 32.0, scheme: etd2,
               cfl_safety: 0.5, m: null, save_every: 0}
    diagnostics: {k0: [2, 4], weight: true, s: 1.6, s_prime: 1.6}
    output:   {dir: out}

``initial.energy`` is the target value of the energy functional before the
``amplitude`` factor, so the initial energy is ``energy * amplitude**2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Optional

import yaml

from .initial import RECIPES
from .integrator import SCHEMES, StepperConfig
from .spectral import Grid
from .systems import Params

SYSTEMS = ("eqnsm", "nsmo", "species")
J_INIT = ("zero", "ohm", "random")


class ConfigError(ValueError):
    """Schema or precondition violation; the message names the offending field."""


SCHEMA: dict[str, dict[str, tuple]] = {
    # section -> key -> (types, default)
    "grid": {"d": ((int,), 2), "n": ((int,), 64)},
    "params": {
        "mu": ((int, float), 0.1),
        "sigma": ((int, float), 1.0),
        "c": ((int, float), 1.0),
        "eps": ((int, float), 0.1),
        "eps_ladder": ((list, type(None)), None),
    },
    "initial": {
        "recipe": ((str,), "random"),
        "seed": ((int,), 0),
        "energy": ((int, float), 0.01),
        "amplitude": ((int, float), 1.0),
        "decay": ((int, float), 3.0),
        "kmax": ((int, float, type(None)), None),
        "j_init": ((str,), "zero"),
    },
    "time": {
        "T": ((int, float), 0.5),
        "dt": ((int, float), 5e-3),
        "dt_min": ((int, float, type(None)), None),
        "grade": ((int, float), 32.0),
        "scheme": ((str,), "etd2"),
        "cfl_safety": ((int, float), 0.5),
        "m": ((int, float, type(None)), None),
        "save_every": ((int,), 0),
    },
    "diagnostics": {
        "k0": ((list,), [2, 4]),
        "weight": ((bool,), True),
        "s": ((int, float), 1.6),
        "s_prime": ((int, float), 1.6),
    },
    "output": {"dir": ((str,), "out")},
}
TOP_LEVEL = {"system": ((str,), "eqnsm")}


@dataclass(frozen=True)
class RunSpec:
    system: str = "eqnsm"
    d: int = 2
    n: int = 64
    mu: float = 0.1
    sigma: float = 1.0
    c: float = 1.0
    eps: float = 0.1
    eps_ladder: Optional[tuple] = None
    recipe: str = "random"
    seed: int = 0
    energy: float = 0.01
    amplitude: float = 1.0
    decay: float = 3.0
    kmax: Optional[float] = None
    j_init: str = "zero"
    T: float = 0.5
    dt: float = 5e-3
    dt_min: Optional[float] = None
    grade: float = 32.0
    scheme: str = "etd2"
    cfl_safety: float = 0.5
    m: Optional[float] = None
    save_every: int = 0
    k0: tuple = (2, 4)
    weight: bool = True
    s: float = 1.6
    s_prime: float = 1.6
    out: str = "out"

    # -- derived objects --------------------------------------------------
    @property
    def grid(self) -> Grid:
        return Grid(self.d, self.n)

    def params(self, eps: Optional[float] = None) -> Params:
        return Params(self.mu, self.sigma, self.c, self.eps if eps is None else eps, self.s, self.s_prime)

    def stepper(self) -> StepperConfig:
        return StepperConfig(dt=self.dt, scheme=self.scheme, cfl_safety=self.cfl_safety, m=self.m,
                             dt_min=self.dt_min, grade=self.grade, save_every=self.save_every)

    @property
    def target_energy(self) -> float:
        return self.energy * self.amplitude**2

    def with_(self, **changes) -> "RunSpec":
        return validate(replace(self, **changes))

    def to_document(self) -> dict:
        """Nested document in the published schema (the resolved config echo)."""
        flat = asdict(self)
        flat["k0"] = list(self.k0)
        flat["eps_ladder"] = None if self.eps_ladder is None else list(self.eps_ladder)
        doc: dict[str, Any] = {"system": flat["system"]}
        key_map = {"T": "T", "dir": "out"}
        for section, keys in SCHEMA.items():
            doc[section] = {k: flat[key_map.get(k, k)] for k in keys}
        return doc

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_document(), sort_keys=False)


def _check_type(path: str, value, types):
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{path}: expected {'/'.join(t.__name__ for t in types)}, got bool")
    if not isinstance(value, types):
        raise ConfigError(f"{path}: expected {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}")


def parse_document(doc: Optional[dict]) -> RunSpec:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<root>: expected a mapping")
    flat: dict[str, Any] = {}
    for key, value in doc.items():
        if key in TOP_LEVEL:
            _check_type(key, value, TOP_LEVEL[key][0])
            flat[key] = value
        elif key in SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping")
            for sub, v in value.items():
                if sub not in SCHEMA[key]:
                    raise ConfigError(f"{key}.{sub}: unknown key (allowed: {', '.join(SCHEMA[key])})")
                _check_type(f"{key}.{sub}", v, SCHEMA[key][sub][0])
                flat["out" if sub == "dir" else sub] = v
        else:
            raise ConfigError(f"{key}: unknown section (allowed: {', '.join(list(TOP_LEVEL) + list(SCHEMA))})")
    if "k0" in flat:
        flat["k0"] = tuple(flat["k0"])
    if flat.get("eps_ladder") is not None:
        flat["eps_ladder"] = tuple(flat["eps_ladder"])
    return validate(RunSpec(**flat))


def parse_config(text: str) -> RunSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<root>: not valid YAML ({exc})") from None
    return parse_document(doc)


def load_config(path) -> RunSpec:
    with open(path) as fh:
        return parse_config(fh.read())


def validate(spec: RunSpec) -> RunSpec:
    """Check every module precondition; raise ConfigError naming the field."""
    if spec.system not in SYSTEMS:
        raise ConfigError(f"system: {spec.system!r} not in {SYSTEMS}")
    if spec.d not in (2, 3):
        raise ConfigError(f"grid.d: unsupported dimension {spec.d} (use 2 or 3)")
    if spec.n < 8 or spec.n % 2:
        raise ConfigError(f"grid.n: {spec.n} must be even and >= 8")
    for name in ("mu", "sigma", "c"):
        if not getattr(spec, name) > 0:
            raise ConfigError(f"params.{name}: must be positive")
    if not 0 < spec.eps <= 1:
        raise ConfigError(f"params.eps: {spec.eps} outside (0, 1]")
    if spec.eps_ladder is not None:
        lad = spec.eps_ladder
        if not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in lad):
            raise ConfigError("params.eps_ladder: entries must be numbers")
        if any(not 0 < e <= 1 for e in lad):
            raise ConfigError("params.eps_ladder: every eps must lie in (0, 1]")
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ConfigError("params.eps_ladder: must be strictly decreasing")
    if not spec.s > 1.5:
        raise ConfigError(f"diagnostics.s: {spec.s} violates the well-posedness hypothesis s > 3/2")
    if not spec.s - 1 <= spec.s_prime <= spec.s + 1:
        raise ConfigError(f"diagnostics.s_prime: {spec.s_prime} violates s - 1 <= s' <= s + 1")
    if spec.recipe not in RECIPES:
        raise ConfigError(f"initial.recipe: {spec.recipe!r} not in {RECIPES}")
    if spec.j_init not in J_INIT:
        raise ConfigError(f"initial.j_init: {spec.j_init!r} not in {J_INIT}")
    if not spec.energy >= 0:
        raise ConfigError("initial.energy: must be non-negative")
    if not spec.amplitude >= 0:
        raise ConfigError("initial.amplitude: must be non-negative")
    if spec.kmax is not None and not spec.kmax > 0:
        raise ConfigError("initial.kmax: must be positive")
    if not spec.T >= 0:
        raise ConfigError("time.T: must be non-negative")
    if spec.scheme not in SCHEMES:
        raise ConfigError(f"time.scheme: {spec.scheme!r} not in {SCHEMES}")
    if any(not isinstance(k, int) or isinstance(k, bool) or k < -1 for k in spec.k0):
        raise ConfigError("diagnostics.k0: entries must be integers >= -1")
    try:
        spec.stepper().radius(spec.grid)
    except ValueError as exc:
        field = "time.m" if "radius" in str(exc) else "time"
        raise ConfigError(f"{field}: {exc}") from None
    return spec


def field_names() -> list[str]:
    return [f.name for f in fields(RunSpec)]
