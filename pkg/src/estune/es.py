"""(1+1)-Evolution Strategy with Rechenberg's 1/5th success rule.

A single parent produces a single offspring per generation via isotropic
Gaussian mutation.  The offspring replaces the parent iff it is not worse.
The mutation strength sigma is adapted every generation through the
exponential update

    sigma <- sigma * exp(tau * (I - 1/5))

where the indicator I is 1 when the offspring was accepted and 0 otherwise.
One acceptance therefore balances four rejections, which drives the
acceptance rate toward the classic 1/5 target.  The adaptation rate ``tau``
is the quantity the rest of this package tunes.

Reference: Rechenberg, I. (1973). Evolutionsstrategie: Optimierung
technischer Systeme nach Prinzipien der biologischen Evolution.

Reproducibility contract: every run owns a ``numpy.random.Generator`` backed
by the PCG64 bit generator, seeded with a 64-bit integer.  Initialization
draws one ``uniform(init_low, init_high, size=dimension)`` vector, then each
generation draws one ``standard_normal(dimension)`` vector (numpy's ziggurat
transform).  Identical seeds yield bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "FITNESS_FLOOR",
    "ConfigurationError",
    "EsConfig",
    "EsRunResult",
    "EsTemplate",
    "ObjectiveSpec",
    "get_objective",
    "make_rng",
    "mutate",
    "register_objective",
    "run_es",
    "score_of",
    "sphere_eval",
    "update_sigma",
]

# Objective values are clamped here before the log so scores stay finite.
FITNESS_FLOOR = 1e-300

_SEED_LIMIT = 1 << 64


class ConfigurationError(ValueError):
    """Raised when a run configuration violates its invariants."""


def sphere_eval(x) -> float:
    """Sum of squared coordinates; global optimum 0 at the origin.

    Accumulates left to right in IEEE double precision, so the result is
    bit-for-bit reproducible and directly comparable against any other
    left-to-right summation of the same squares.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.isfinite(arr).all():
        raise ValueError("vector entries must be finite")
    total = 0.0
    for v in arr:
        total += float(v) * float(v)
    return total


_OBJECTIVES: dict[str, Callable[[np.ndarray], float]] = {"sphere": sphere_eval}


def register_objective(name: str, fn: Callable[[np.ndarray], float]) -> None:
    """Add an objective to the registry used by ObjectiveSpec lookups."""
    _OBJECTIVES[name] = fn


def get_objective(name: str) -> Callable[[np.ndarray], float]:
    if name not in _OBJECTIVES:
        known = ", ".join(sorted(_OBJECTIVES))
        raise ConfigurationError(f"unknown objective {name!r} (known: {known})")
    return _OBJECTIVES[name]


def objective_names() -> list[str]:
    return sorted(_OBJECTIVES)


@dataclass(frozen=True)
class ObjectiveSpec:
    """A registered objective function instantiated at a fixed dimension."""

    name: str
    dimension: int

    def __post_init__(self) -> None:
        get_objective(self.name)
        if self.dimension < 1:
            raise ConfigurationError("dimension must be >= 1")


@dataclass(frozen=True)
class EsConfig:
    """Full parameterization of one (1+1)-ES run."""

    tau: float
    sigma0: float
    dimension: int
    max_generations: int
    init_low: float = -5.0
    init_high: float = 5.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.tau > 0):
            raise ConfigurationError("tau must be > 0")
        if not (self.sigma0 > 0):
            raise ConfigurationError("sigma0 must be > 0")
        if self.dimension < 1:
            raise ConfigurationError("dimension must be >= 1")
        if self.max_generations < 1:
            raise ConfigurationError("max_generations must be >= 1")
        if not (self.init_low < self.init_high):
            raise ConfigurationError("init_low must be < init_high")
        if not (0 <= self.seed < _SEED_LIMIT):
            raise ConfigurationError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class EsTemplate:
    """EsConfig minus the two per-run fields (tau and seed).

    A tuning session holds one template and stamps out configs per trial.
    """

    sigma0: float = 1.0
    dimension: int = 5
    max_generations: int = 1000
    init_low: float = -5.0
    init_high: float = 5.0

    def configure(self, tau: float, seed: int) -> EsConfig:
        return EsConfig(
            tau=tau,
            sigma0=self.sigma0,
            dimension=self.dimension,
            max_generations=self.max_generations,
            init_low=self.init_low,
            init_high=self.init_high,
            seed=seed,
        )


@dataclass(frozen=True)
class EsRunResult:
    """Outcome of one run: accepted solution quality and final step size."""

    best_f: float
    score: float
    final_sigma: float
    generations_run: int
    seed: int


def make_rng(seed: int) -> np.random.Generator:
    """The one random stream used everywhere: PCG64 behind a Generator."""
    return np.random.Generator(np.random.PCG64(seed))


def mutate(x, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Return ``x + sigma * g`` with g standard normal, leaving x untouched."""
    if not (sigma > 0):
        raise ValueError("sigma must be > 0")
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D vector")
    return arr + sigma * rng.standard_normal(arr.shape[0])


def update_sigma(sigma: float, tau: float, success: bool) -> float:
    """One exponential step-size update: sigma * exp(tau * (I - 1/5))."""
    if not (sigma > 0):
        raise ValueError("sigma must be > 0")
    if not (tau > 0):
        raise ValueError("tau must be > 0")
    indicator = 1.0 if success else 0.0
    return sigma * math.exp(tau * (indicator - 0.2))


def score_of(f_value: float) -> float:
    """Fitness score -ln(max(f, floor)); higher is better, floor keeps it finite."""
    if math.isnan(f_value) or f_value < 0:
        raise ValueError("objective value must be >= 0")
    return -math.log(max(f_value, FITNESS_FLOOR))


def run_es(
    config: EsConfig,
    objective: ObjectiveSpec,
    on_generation: Callable[[int, float, float], None] | None = None,
) -> EsRunResult:
    """Run the full (1+1)-ES loop for ``config.max_generations`` generations.

    The candidate is accepted when its objective value is less than or equal
    to the parent's, and sigma is updated every generation from that same
    indicator.  ``on_generation(gen, f_current, sigma)`` is invoked after
    each generation when given.  Pure: identical inputs give bit-identical
    results.
    """
    if objective.dimension != config.dimension:
        raise ConfigurationError(
            f"objective dimension {objective.dimension} != config dimension {config.dimension}"
        )
    fn = get_objective(objective.name)
    rng = make_rng(config.seed)
    x = rng.uniform(config.init_low, config.init_high, size=config.dimension)
    sigma = config.sigma0
    f_cur = fn(x)
    for gen in range(config.max_generations):
        candidate = mutate(x, sigma, rng)
        f_new = fn(candidate)
        success = f_new <= f_cur
        if success:
            x = candidate
            f_cur = f_new
        sigma = update_sigma(sigma, config.tau, success)
        if on_generation is not None:
            on_generation(gen, f_cur, sigma)
    return EsRunResult(
        best_f=f_cur,
        score=score_of(f_cur),
        final_sigma=sigma,
        generations_run=config.max_generations,
        seed=config.seed,
    )
