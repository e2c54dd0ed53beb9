"""Scenario configuration: a flat YAML document validated into ScenarioConfig.

Keys are the ScenarioConfig field names. 2-D vectors are 2-element lists,
covariances are 4-element row-major lists.
"""
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import yaml

from .density import Domain, GaussianMixture
from .errors import ConfigError, InvalidMixture

MODES = ("single", "centralized", "decentralized")
REQUIRED = ("mode", "domain_x", "domain_y", "mixture_weights", "mixture_means",
            "mixture_covs", "N", "M", "n_a", "initial_positions")


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    domain_x: tuple
    domain_y: tuple
    mixture_weights: tuple
    mixture_means: tuple
    mixture_covs: tuple
    N: int
    M: int
    n_a: int
    initial_positions: object  # tuple of 2-tuples, or "random"
    t_e: Optional[int] = None
    u_max: float = 100.0
    dt: float = 1.0
    r_sensing: float = 15.0
    r_comm: Optional[float] = None
    h: int = 3
    r0: Optional[float] = None
    delta: Optional[float] = None
    v: float = 0.0
    N_h: int = 0
    time_varying: bool = False
    seed: int = 0
    snapshot_every: int = 10
    segment_sensing: bool = False
    tight_bound: bool = False
    simultaneous_rounds: bool = False

    @property
    def domain(self):
        return Domain(tuple(self.domain_x), tuple(self.domain_y))

    @property
    def mixture(self):
        covs = [[[c[0], c[1]], [c[2], c[3]]] for c in self.mixture_covs]
        return GaussianMixture(self.mixture_weights, self.mixture_means, covs)

    @property
    def effective_steps(self):
        return self.t_e if self.t_e is not None else self.M // self.n_a

    def replace(self, **changes):
        return from_dict({**to_dict(self), **changes})


FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _num(name, val, integer=False, positive=False, nonneg=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(name, f"expected a number, got {val!r}")
    if integer:
        if isinstance(val, float) and not val.is_integer():
            raise ConfigError(name, f"expected an integer, got {val!r}")
        val = int(val)
    else:
        val = float(val)
    if positive and not val > 0:
        raise ConfigError(name, f"must be > 0, got {val!r}")
    if nonneg and val < 0:
        raise ConfigError(name, f"must be >= 0, got {val!r}")
    return val


def _vec(name, val, length):
    if not isinstance(val, (list, tuple)) or len(val) != length:
        raise ConfigError(name, f"expected a {length}-element list, got {val!r}")
    return tuple(_num(f"{name}[{i}]", x) for i, x in enumerate(val))


def from_dict(raw):
    """Validate a raw mapping into a ScenarioConfig (raises ConfigError)."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in REQUIRED:
        if key not in raw or raw[key] is None:
            raise ConfigError(key, "required field is missing")
    out = {}

    mode = raw["mode"]
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}, got {mode!r}")
    out["mode"] = mode
    for key in ("domain_x", "domain_y"):
        lo, hi = _vec(key, raw[key], 2)
        if not hi > lo:
            raise ConfigError(key, "interval must be nonempty")
        out[key] = (lo, hi)

    weights = raw["mixture_weights"]
    if not isinstance(weights, (list, tuple)) or not weights:
        raise ConfigError("mixture_weights", "expected a non-empty list")
    out["mixture_weights"] = tuple(_num(f"mixture_weights[{i}]", w, nonneg=True)
                                   for i, w in enumerate(weights))
    k = len(weights)
    for key, length in (("mixture_means", 2), ("mixture_covs", 4)):
        val = raw[key]
        if not isinstance(val, (list, tuple)) or len(val) != k:
            raise ConfigError(key, f"expected {k} entries to match mixture_weights")
        out[key] = tuple(_vec(f"{key}[{i}]", x, length) for i, x in enumerate(val))

    for key in ("N", "M", "n_a"):
        out[key] = _num(key, raw[key], integer=True, positive=True)

    init = raw["initial_positions"]
    if init == "random":
        out["initial_positions"] = "random"
    else:
        if not isinstance(init, (list, tuple)) or len(init) != out["n_a"]:
            raise ConfigError("initial_positions",
                              f"expected 'random' or {out['n_a']} positions")
        out["initial_positions"] = tuple(_vec(f"initial_positions[{i}]", p, 2)
                                         for i, p in enumerate(init))

    spec = {
        "t_e": dict(integer=True, positive=True), "u_max": dict(positive=True),
        "dt": dict(positive=True), "r_sensing": dict(positive=True),
        "r_comm": dict(positive=True), "h": dict(integer=True, positive=True),
        "r0": dict(positive=True), "delta": dict(positive=True), "v": dict(nonneg=True),
        "N_h": dict(integer=True, nonneg=True), "seed": dict(integer=True, nonneg=True),
        "snapshot_every": dict(integer=True, positive=True),
    }
    for key, opts in spec.items():
        if raw.get(key) is not None:
            out[key] = _num(key, raw[key], **opts)
    for key in ("time_varying", "segment_sensing", "tight_bound", "simultaneous_rounds"):
        if key in raw:
            if not isinstance(raw[key], bool):
                raise ConfigError(key, f"expected true/false, got {raw[key]!r}")
            out[key] = raw[key]

    if out.get("h", 3) > 6:
        raise ConfigError("h", "horizon is capped at 6 (h! orders per step)")
    if mode == "single" and out["n_a"] != 1:
        raise ConfigError("n_a", "single mode requires n_a = 1")
    if mode == "centralized":
        t_e = out.get("t_e")
        if t_e is None:
            if out["M"] % out["n_a"]:
                raise ConfigError("t_e", "M is not divisible by n_a; give t_e")
            out["t_e"] = out["M"] // out["n_a"]
        elif out["M"] != out["n_a"] * t_e:
            raise ConfigError("t_e", f"centralized runs need M = n_a * t_e "
                                     f"({out['M']} != {out['n_a']} * {t_e})")
    if mode == "decentralized" and out.get("r_comm") is None:
        raise ConfigError("r_comm", "decentralized mode requires r_comm")

    cfg = ScenarioConfig(**out)
    try:
        cfg.mixture
    except InvalidMixture as exc:
        raise ConfigError("mixture_covs", str(exc)) from None
    return cfg


def to_dict(cfg):
    out = {}
    for name in FIELDS:
        val = getattr(cfg, name)
        if isinstance(val, tuple):
            val = [list(x) if isinstance(x, tuple) else x for x in val]
        out[name] = val
    return out


def loads(text):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"not valid YAML: {exc}") from None
    return from_dict(raw)


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def dumps(cfg):
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def config_hash(cfg):
    """SHA-256 over canonical JSON; stable across platforms."""
    blob = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def preset(name):
    """Load a bundled scenario (see ``otexplore/presets``)."""
    text = resources.files("otexplore.presets").joinpath(f"{name}.yaml").read_text()
    return loads(text)


def preset_names():
    return sorted(p.name[:-5] for p in resources.files("otexplore.presets").iterdir()
                  if p.name.endswith(".yaml"))
