"""Exact-in-distribution sampling of subordinator increments and paths.

Stable subordinator draws use the rejection-free angle/exponential
transformation; the relativistic (tempered) subordinator is obtained by
exponential-tilting rejection with acceptance probability e^{-m dt} per
proposal.  Process increments are Gaussian with per-coordinate variance
2u conditional on the subordinator value u, matching the Brownian
convention E e^{i xi . B_t} = e^{-t |xi|^2}.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, StepTooLargeError
from .specfun import ProcessParams, kanter_factor

__all__ = [
    "RngStream",
    "PathGrid",
    "kanter_transform",
    "sample_stable_subordinator",
    "sample_tempered_subordinator",
    "sample_brownian_leg",
    "sample_increment",
    "simulate_path",
]

ACCEPTANCE_FLOOR = 1e-3


@dataclass(frozen=True)
class RngStream:
    """Deterministic, splittable random stream.

    Identical (seed, stream_id) always reproduce the same draws; distinct
    stream ids give statistically independent streams.  Backed by the
    counter-based Philox generator, but nothing downstream depends on the
    specific bit stream.
    """

    seed: int
    stream_id: int = 0
    _path: tuple = field(default=None, repr=False, compare=False)

    def _key(self) -> tuple:
        return self._path if self._path is not None else (self.stream_id,)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=self._key())
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, *indices: int) -> "RngStream":
        """Child stream at a fixed coordinate path; used for deterministic
        work splitting across workers and strata."""
        key = self._key() + tuple(int(i) for i in indices)
        return RngStream(seed=self.seed, stream_id=self.stream_id, _path=key)


@dataclass(frozen=True)
class PathGrid:
    """Time-discretized trajectory: positions[k] is the state at time k*dt."""

    start: np.ndarray
    dt: float
    horizon: float
    positions: np.ndarray

    def __post_init__(self):
        n_expected = int(math.floor(self.horizon / self.dt + 1e-12)) + 1
        if len(self.positions) != n_expected:
            raise ParameterError(
                f"positions has {len(self.positions)} entries, expected {n_expected}"
            )
        if not np.array_equal(self.positions[0], self.start):
            raise ParameterError("positions[0] must equal start")

    def __len__(self):
        return len(self.positions)


def kanter_transform(phi, w, dt: float, beta: float):
    """Map (phi, W) ~ Uniform(0,pi) x Exp(1) to a stable subordinator draw:

        T = dt^{1/beta} (A(phi)/W)^{(1-beta)/beta}

    with A the Zolotarev/Kanter angular factor.
    """
    a = kanter_factor(phi, beta)
    return dt ** (1.0 / beta) * (a / w) ** ((1.0 - beta) / beta)


def sample_stable_subordinator(dt: float, beta: float, rng: RngStream | np.random.Generator, size=None):
    """Draws of T_beta(dt), the subordinator with E e^{-lam T} = e^{-dt lam^beta}."""
    if dt <= 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must be in (0, 1), got {beta}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else int(size)
    phi = gen.uniform(0.0, math.pi, n)
    w = gen.standard_exponential(n)
    out = kanter_transform(phi, w, dt, beta)
    return float(out[0]) if size is None else out


def sample_tempered_subordinator(
    dt: float,
    params: ProcessParams,
    rng: RngStream | np.random.Generator,
    size=None,
    return_stats: bool = False,
    acceptance_floor: float = ACCEPTANCE_FLOOR,
):
    """Draws of the relativistic subordinator T_beta(dt, m) by tilting rejection.

    Proposals are stable draws accepted with probability e^{-m^{1/beta} u};
    the overall acceptance rate is e^{-m dt}.  When that rate falls below
    `acceptance_floor` the step is refused outright.
    """
    if dt <= 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    expected_rate = math.exp(-params.m * dt)
    if expected_rate < acceptance_floor:
        raise StepTooLargeError(
            f"tempering acceptance e^(-m dt) = {expected_rate:.3e} below floor "
            f"{acceptance_floor:.1e}; reduce dt below {-math.log(acceptance_floor) / params.m:.3e}"
        )
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else int(size)
    beta = params.beta
    if params.m == 0.0:
        out = sample_stable_subordinator(dt, beta, gen, size=n)
        out = np.atleast_1d(out)
        n_proposals = n
    else:
        tilt = params.m ** (1.0 / beta)
        out = np.empty(n)
        pending = np.arange(n)
        n_proposals = 0
        while len(pending):
            u = sample_stable_subordinator(dt, beta, gen, size=len(pending))
            n_proposals += len(pending)
            accept = gen.random(len(pending)) < np.exp(-tilt * u)
            out[pending[accept]] = u[accept]
            pending = pending[~accept]
    result = float(out[0]) if size is None else out
    if return_stats:
        return result, n_proposals
    return result


def sample_brownian_leg(u, d: int, gen: np.random.Generator):
    """Gaussian displacement over operational time u: per-coordinate variance 2u."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    g = gen.standard_normal((len(u), d))
    return g * np.sqrt(2.0 * u)[:, None]


def sample_increment(dt: float, params: ProcessParams, rng: RngStream | np.random.Generator, size=None):
    """Increment of the relativistic process over a step of length dt."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else int(size)
    u = np.atleast_1d(sample_tempered_subordinator(dt, params, gen, size=n))
    x = sample_brownian_leg(u, params.d, gen)
    return x[0] if size is None else x


def simulate_path(start, horizon: float, dt: float, params: ProcessParams, rng: RngStream | np.random.Generator) -> PathGrid:
    """Compose independent increments into a trajectory on the time grid."""
    if dt <= 0.0 or horizon < dt:
        raise ParameterError(f"need horizon >= dt > 0, got horizon={horizon}, dt={dt}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    start = np.asarray(start, dtype=float)
    if start.shape != (params.d,):
        raise ParameterError(f"start must have shape ({params.d},), got {start.shape}")
    n_steps = int(math.floor(horizon / dt + 1e-12))
    steps = sample_increment(dt, params, gen, size=n_steps)
    positions = np.empty((n_steps + 1, params.d))
    positions[0] = start
    np.cumsum(steps, axis=0, out=positions[1:])
    positions[1:] += start
    return PathGrid(start=start, dt=dt, horizon=horizon, positions=positions)
