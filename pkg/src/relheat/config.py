"""Flat experiment configuration: a key=value file plus CLI overrides.

A config plus a seed reproduces every output byte for byte at a fixed
worker count (worker count only sets the process pool size; the stream
assignment is fixed by the chunking, not by the pool).
"""

from dataclasses import dataclass, field, fields, replace

from .errors import ParameterError
from .geometry import parse_domain
from .specfun import ProcessParams
from .tracelab import Budgets

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float = 1.0
    m: float = 0.0
    d: int = 2
    domain: str = "ball:R0=1"
    t_grid: tuple = (0.05, 0.1, 0.2)
    n_paths: int = 2000
    n_x: int = 4000
    steps: int = 64
    profile_n_paths: int = 20000
    q_nodes: int = 20
    extrapolate: bool = True
    seed: int = 12345
    workers: int = 1
    chunk_points: int = 512
    out: str = "out"
    fmt: str = "csv"
    z_sigma: float = 3.0
    budget_scale: float = 1.0

    def params(self) -> ProcessParams:
        return ProcessParams(alpha=self.alpha, m=self.m, d=self.d)

    def domain_obj(self):
        return parse_domain(self.domain, self.d)

    def budgets(self) -> Budgets:
        s = self.budget_scale
        return Budgets(
            n_paths=max(100, int(self.n_paths * s)),
            n_x=max(64, int(self.n_x * s)),
            steps=self.steps,
            extrapolate=self.extrapolate,
            profile_n_paths=max(200, int(self.profile_n_paths * s)),
            q_nodes=self.q_nodes,
            chunk_points=self.chunk_points,
            workers=self.workers,
        )

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def override(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "t_grid" in kw:
            kw["t_grid"] = _as_float_tuple(kw["t_grid"])
        return replace(self, **kw)


def _as_float_tuple(value):
    if isinstance(value, (tuple, list)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in str(value).split(","))


def _parse_value(name: str, text: str):
    text = text.strip()
    if name == "t_grid":
        return _as_float_tuple(text)
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def load_config(path) -> ExperimentConfig:
    """Read a flat `key = value` file; unknown keys are an error."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ParameterError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(key, text)
    return ExperimentConfig().override(**values)


def dump_config(cfg: ExperimentConfig, path):
    with open(path, "w") as fh:
        for key, value in cfg.as_dict().items():
            if isinstance(value, list):
                value = ",".join(f"{v:g}" for v in value)
            fh.write(f"{key} = {value}\n")
