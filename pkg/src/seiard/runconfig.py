"""Single-document run configuration for the command-line pipeline.

One JSON object configures every subcommand.  Unset seeds are resolved by
hashing the master seed together with a component label, so a saved manifest
pins the full randomness of a run while the components stay on independent
streams.  Loading, dotted-path overrides and the builders that turn the
document into library objects all live here.
"""

from __future__ import annotations

import copy
import hashlib
import json

from . import defaults
from .dynamics import PARAM_NAMES, ModelParams
from .loss import FitWindow
from .mcmc import McmcConfig
from .optimize import METHODS, SearchSpace
from .synthdata import DatasetConfig, NoiseSpec

VARIANTS = ("original", "reparam")
THRESHOLD_MODES = ("chi2", "posterior")

# Paths whose values are name -> number maps rather than fixed schema nodes;
# overrides replace or extend them instead of being checked against defaults.
_OPEN_DICTS = frozenset({
    "pins", "dataset.true_params", "mcmc.proposal_variances", "report.params",
})


def default_config() -> dict:
    """A fresh copy of the full default run configuration."""
    return {
        "out_dir": "run",
        "master_seed": 0,
        "threads": 1,
        "variant": "reparam",
        "pins": dict(defaults.REPARAM_PINS),
        "window": [0, 28],
        "dataset": {
            "true_params": defaults.TRUE_PARAMS.as_dict(),
            "population_n": defaults.POPULATION_N,
            "horizon": defaults.HORIZON_DAYS,
            "init_observed": list(defaults.INIT_OBSERVED),
            "sigma_noise": 0.0,
            "seed": None,
            "a0_fatal_fraction": None,
            "dt": 0.1,
        },
        "fit": {
            "method": "random+nm",
            "budget": defaults.FIT_BUDGET_REPARAM,
            "seed": None,
        },
        "profile": {
            "params": ["beta"],
            "grid_points": 25,
            "inner_budget": 300,
            "seed": None,
            "alpha": 0.95,
            "threshold": "chi2",
            "windows": None,
            "warm_start": True,
        },
        "mcmc": {
            "n_samples": 20_000,
            "n_burn": 5_000,
            "n_chains": 4,
            "thin": 5,
            "seed": None,
            "hastings_correction": True,
            "u": defaults.VARIANCE_PRIOR_SHAPE,
            "v": defaults.VARIANCE_PRIOR_SCALE,
            "proposal_variances": dict(defaults.PROPOSAL_VARIANCES),
        },
        "forecast": {
            "horizons": [],
            "seeds": None,
            "budget": defaults.FIT_BUDGET_REPARAM,
            "method": "random+nm",
        },
        "report": {
            "params": None,
            "times": None,
            "rel_step": 1e-4,
        },
    }


class ConfigError(ValueError):
    """Malformed configuration or override; maps to the usage exit code."""


def _merge(base: dict, override: dict, path: str = "") -> None:
    for key, value in override.items():
        here = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict) and here not in _OPEN_DICTS:
            if not isinstance(value, dict):
                raise ConfigError(f"{here!r} must be an object")
            _merge(base[key], value, here + ".")
        else:
            base[key] = copy.deepcopy(value)


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, optionally overlaid with a JSON file.

    The file may be either a plain configuration object or a saved manifest
    ({"command": ..., "config": ...}); manifests are unwrapped so a run can
    be reproduced by pointing --config at its manifest.
    """
    config = default_config()
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        if set(data) == {"command", "config"}:
            data = data["config"]
        _merge(config, data)
    if overrides:
        _merge(config, overrides)
    return config


def apply_set(config: dict, assignment: str) -> None:
    """Apply one --set override, e.g. "mcmc.n_samples=4000".

    The value is parsed as JSON when possible and kept as a string otherwise,
    so both --set variant=original and --set profile.params='["beta"]' work.
    """
    if "=" not in assignment:
        raise ConfigError(f"--set needs path=value, got {assignment!r}")
    dotted, raw = assignment.split("=", 1)
    keys = dotted.strip().split(".")
    if not all(keys):
        raise ConfigError(f"bad --set path {dotted!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    for depth, key in enumerate(keys[:-1]):
        prefix = ".".join(keys[:depth + 1])
        if not (isinstance(node, dict) and key in node):
            raise ConfigError(f"unknown config key {prefix!r}")
        if prefix in _OPEN_DICTS and depth < len(keys) - 2:
            raise ConfigError(f"{prefix!r} is a value map; set it wholesale "
                              f"or as {prefix}.<name>=<number>")
        node = node[key]
    parent = ".".join(keys[:-1])
    if not isinstance(node, dict):
        raise ConfigError(f"{parent!r} is not an object")
    if keys[-1] not in node and parent not in _OPEN_DICTS:
        raise ConfigError(f"unknown config key {dotted.strip()!r}")
    node[keys[-1]] = value


def component_seed(master_seed: int, label: str) -> int:
    """Stable 64-bit seed for one pipeline component."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def resolve_config(config: dict) -> dict:
    """A deep copy with every unset component seed filled from the master
    seed, ready to be saved in a manifest and rerun bit-identically."""
    resolved = copy.deepcopy(config)
    master = resolved["master_seed"]
    for section, label in (("dataset", "synthdata"), ("fit", "fit"),
                           ("profile", "profile"), ("mcmc", "mcmc")):
        if resolved[section]["seed"] is None:
            resolved[section]["seed"] = component_seed(master, label)
    if resolved["forecast"]["seeds"] is None:
        resolved["forecast"]["seeds"] = [resolved["dataset"]["seed"]]
    return resolved


def validate(config: dict) -> None:
    """Cheap structural checks with usage-grade errors; the library
    constructors enforce the numeric invariants."""
    if config["variant"] not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, "
                          f"got {config['variant']!r}")
    for path in ("pins", "mcmc.proposal_variances", "dataset.true_params"):
        node = config
        for key in path.split("."):
            node = node[key]
        if not isinstance(node, dict):
            raise ConfigError(f"{path!r} must be a name -> number object")
        for name in node:
            if name not in PARAM_NAMES:
                raise ConfigError(f"{path}: unknown parameter {name!r}")
    window = config["window"]
    if len(window) != 2 or not window[0] < window[1]:
        raise ConfigError(f"window must be [t_begin, t_end] with "
                          f"t_begin < t_end, got {window}")
    if window[1] > config["dataset"]["horizon"]:
        raise ConfigError("window end exceeds the dataset horizon")
    if config["fit"]["method"] not in METHODS:
        raise ConfigError(f"fit.method must be one of {METHODS}")
    if config["forecast"]["method"] not in METHODS:
        raise ConfigError(f"forecast.method must be one of {METHODS}")
    if config["profile"]["threshold"] not in THRESHOLD_MODES:
        raise ConfigError(f"profile.threshold must be one of {THRESHOLD_MODES}")
    free = set(free_param_names(config))
    for name in config["profile"]["params"]:
        if name not in free:
            raise ConfigError(f"profile.params: {name!r} is not free under "
                              f"variant {config['variant']!r}")


def variant_pins(config: dict) -> dict[str, float]:
    if config["variant"] == "original":
        return {}
    return {name: float(value) for name, value in config["pins"].items()}


def free_param_names(config: dict) -> list[str]:
    return defaults.free_names(variant_pins(config))


def build_space(config: dict) -> SearchSpace:
    return SearchSpace(dict(defaults.SEARCH_BOUNDS), pinned=variant_pins(config))


def build_window(config: dict) -> FitWindow:
    return FitWindow(int(config["window"][0]), int(config["window"][1]))


def build_dataset_config(config: dict) -> DatasetConfig:
    d = config["dataset"]
    if d["seed"] is None:
        raise ConfigError("dataset.seed unresolved; call resolve_config first")
    return DatasetConfig(
        true_params=ModelParams.from_dict(d["true_params"]),
        population_n=float(d["population_n"]),
        horizon=int(d["horizon"]),
        init_observed=tuple(float(v) for v in d["init_observed"]),
        noise=NoiseSpec(float(d["sigma_noise"])),
        seed=int(d["seed"]),
        a0_fatal_fraction=(None if d["a0_fatal_fraction"] is None
                           else float(d["a0_fatal_fraction"])),
        dt=float(d["dt"]),
    )


def build_mcmc_config(config: dict, window: FitWindow | None = None,
                      seed: int | None = None) -> McmcConfig:
    m = config["mcmc"]
    if seed is None:
        seed = m["seed"]
    if seed is None:
        raise ConfigError("mcmc.seed unresolved; call resolve_config first")
    return McmcConfig(
        window=window if window is not None else build_window(config),
        pinned=variant_pins(config),
        proposal_variances=dict(m["proposal_variances"]),
        u=float(m["u"]),
        v=float(m["v"]),
        n_samples=int(m["n_samples"]),
        n_burn=int(m["n_burn"]),
        n_chains=int(m["n_chains"]),
        thin=int(m["thin"]),
        seed=int(seed),
        hastings_correction=bool(m["hastings_correction"]),
    )


def manifest_payload(command: str, resolved: dict) -> dict:
    return {"command": command, "config": resolved}
