"""Synthetic outbreak datasets: simulate the ground-truth model, optionally
corrupt the reported series with multiplicative lognormal noise, and keep the
generating configuration attached for exact regeneration."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import defaults
from .dynamics import ModelParams, ObservedSeries, build_initial_state, integrate, observe

# Series order used for per-series RNG stream derivation.
NOISY_SERIES = ("active", "recovered", "deceased")


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative lognormal observation noise; sigma 0 turns it off."""

    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class DatasetConfig:
    true_params: ModelParams
    population_n: float = defaults.POPULATION_N
    horizon: int = defaults.HORIZON_DAYS
    init_observed: tuple[float, float, float] = defaults.INIT_OBSERVED
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    a0_fatal_fraction: float | None = None
    dt: float = 0.1

    def replace(self, **changes) -> "DatasetConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "true_params": self.true_params.as_dict(),
            "population_n": self.population_n,
            "horizon": self.horizon,
            "init_observed": list(self.init_observed),
            "noise_sigma": self.noise.sigma,
            "seed": self.seed,
            "a0_fatal_fraction": self.a0_fatal_fraction,
            "dt": self.dt,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetConfig":
        return cls(
            true_params=ModelParams.from_dict(data["true_params"]),
            population_n=float(data["population_n"]),
            horizon=int(data["horizon"]),
            init_observed=tuple(float(v) for v in data["init_observed"]),
            noise=NoiseSpec(float(data.get("noise_sigma", 0.0))),
            seed=int(data["seed"]),
            a0_fatal_fraction=(None if data.get("a0_fatal_fraction") is None
                               else float(data["a0_fatal_fraction"])),
            dt=float(data.get("dt", 0.1)),
        )


@dataclass(frozen=True)
class Dataset:
    """Observed case series plus the exact configuration that produced them."""

    observed: ObservedSeries
    config: DatasetConfig

    def write(self, csv_path, json_path) -> None:
        self.observed.write_csv(csv_path)
        with open(json_path, "w") as fh:
            json.dump(self.config.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def default_config(**changes) -> DatasetConfig:
    """The standard synthetic scenario; pass overrides as keyword arguments."""
    return DatasetConfig(true_params=defaults.TRUE_PARAMS).replace(**changes)


def _noise_draw(seed: int, series_index: int, day: int, sigma: float) -> float:
    # one stream per (seed, series, day) keeps draws independent of iteration
    # order and of how many days/series are generated
    rng = np.random.default_rng(np.random.SeedSequence((seed, series_index, day)))
    return rng.normal(0.0, sigma)


def generate(config: DatasetConfig) -> Dataset:
    """Simulate the configured scenario and apply observation noise.

    Noise multiplies each reported value by exp(eps with eps ~ N(0, sigma^2)),
    independently per series and day.  The cumulative series (recovered,
    deceased) are re-monotonized with a running maximum afterwards, and the
    total is recomputed from the three noisy series.
    """
    init = build_initial_state(config.true_params, config.population_n,
                               config.init_observed, config.a0_fatal_fraction)
    clean = observe(integrate(config.true_params, init, config.horizon, config.dt))
    if config.noise.sigma == 0.0:
        return Dataset(observed=clean, config=config)

    noisy = {}
    for index, name in enumerate(NOISY_SERIES):
        values = clean.series(name).copy()
        for day in range(len(values)):
            values[day] *= np.exp(_noise_draw(config.seed, index, day, config.noise.sigma))
        noisy[name] = values
    # reported cumulative counts never decrease
    noisy["recovered"] = np.maximum.accumulate(noisy["recovered"])
    noisy["deceased"] = np.maximum.accumulate(noisy["deceased"])
    observed = ObservedSeries(
        times=clean.times.copy(),
        active=noisy["active"],
        recovered=noisy["recovered"],
        deceased=noisy["deceased"],
        total=noisy["active"] + noisy["recovered"] + noisy["deceased"],
    )
    return Dataset(observed=observed, config=config)
