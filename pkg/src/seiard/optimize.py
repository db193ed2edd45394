"""Zeroth-order bounded minimization for model fitting and the
profile-likelihood inner loop.

Two methods, both deterministic for a fixed seed:

``tpe``
    Sequential model-based optimization with a Tree-structured Parzen
    Estimator: after an initial batch of uniform draws, the observed
    evaluations are split at the gamma-quantile of loss, the good and bad
    subsets are modeled with per-dimension truncated-Gaussian kernel
    mixtures, and the next point maximizes the good/bad density ratio over a
    batch of candidate draws.

``random+nm``
    Uniform random search followed by Nelder-Mead restricted to the box
    (candidate points clipped to the bounds).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as scipy_minimize
from scipy.special import ndtr, ndtri

METHODS = ("tpe", "random+nm")

TPE_N_INIT = 20
TPE_GAMMA = 0.25
TPE_N_CANDIDATES = 24


class NoFeasiblePointError(RuntimeError):
    """Every evaluation in the run returned +inf or NaN."""


@dataclass(frozen=True)
class SearchSpace:
    """Closed per-parameter intervals plus an optional pinned-value mask.

    Pinned parameters keep an interval (their value must sit inside it) but
    are excluded from the search; every candidate carries the pinned value
    exactly.
    """

    bounds: dict[str, tuple[float, float]]
    pinned: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, (lo, hi) in self.bounds.items():
            if name in self.pinned:
                if not (lo <= self.pinned[name] <= hi):
                    raise ValueError(
                        f"pinned {name}={self.pinned[name]} outside [{lo}, {hi}]")
            elif not lo < hi:
                raise ValueError(f"{name}: need lo < hi, got [{lo}, {hi}]")
        for name in self.pinned:
            if name not in self.bounds:
                raise ValueError(f"pinned {name} has no interval")

    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(name for name in self.bounds if name not in self.pinned)

    def free_bounds(self) -> np.ndarray:
        return np.array([self.bounds[name] for name in self.free_names])

    def pin(self, name: str, value: float) -> "SearchSpace":
        """A copy with one more parameter pinned."""
        return SearchSpace(bounds=dict(self.bounds), pinned={**self.pinned, name: value})

    def assemble(self, free_values) -> dict[str, float]:
        # bounds declaration order, not pinned-dict insertion order, so the
        # result is stable however the pinned mapping was built
        values = {**dict(zip(self.free_names, free_values)), **self.pinned}
        return {name: float(values[name]) for name in self.bounds if name in values}

    def extract_free(self, params: dict[str, float]) -> np.ndarray:
        return np.array([params[name] for name in self.free_names])

    def clip_free(self, free_values) -> np.ndarray:
        b = self.free_bounds()
        return np.clip(np.asarray(free_values, dtype=float), b[:, 0], b[:, 1])


@dataclass(frozen=True)
class OptResult:
    best_params: dict[str, float]
    best_loss: float
    evaluations: list  # (params dict, loss) in evaluation order
    budget_used: int

    def write_trace_csv(self, path, param_names=None) -> None:
        names = param_names or list(self.evaluations[0][0])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eval", "loss"] + list(names))
            for k, (params, value) in enumerate(self.evaluations):
                writer.writerow([k, repr(float(value))] + [repr(float(params[n])) for n in names])


class _Recorder:
    """Evaluation bookkeeping shared by both methods."""

    def __init__(self, objective, space: SearchSpace, budget: int):
        self.objective = objective
        self.space = space
        self.budget = budget
        self.evaluations: list[tuple[dict, float]] = []
        self.free_points: list[np.ndarray] = []
        self.losses: list[float] = []

    @property
    def exhausted(self) -> bool:
        return len(self.evaluations) >= self.budget

    def evaluate(self, free_values: np.ndarray) -> float:
        params = self.space.assemble(free_values)
        value = float(self.objective(params))
        if math.isnan(value):
            value = math.inf
        self.evaluations.append((params, value))
        self.free_points.append(np.asarray(free_values, dtype=float))
        self.losses.append(value)
        return value

    def result(self) -> OptResult:
        finite = [k for k, v in enumerate(self.losses) if math.isfinite(v)]
        if not finite:
            raise NoFeasiblePointError(
                f"all {len(self.losses)} evaluations returned +inf/NaN")
        best = min(finite, key=lambda k: self.losses[k])
        return OptResult(
            best_params=self.evaluations[best][0],
            best_loss=self.losses[best],
            evaluations=self.evaluations,
            budget_used=len(self.evaluations),
        )


def _truncated_normal_logpdf(x, centers, bandwidth, lo, hi):
    """Log-density of an equal-weight mixture of truncated Gaussians plus one
    uniform component over [lo, hi].  x: (k,), centers: (m,)."""
    x = np.atleast_1d(x)[:, None]
    z = (x - centers[None, :]) / bandwidth
    log_phi = -0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - math.log(bandwidth)
    mass = ndtr((hi - centers) / bandwidth) - ndtr((lo - centers) / bandwidth)
    log_kernels = log_phi - np.log(np.maximum(mass, 1e-300))[None, :]
    uniform = np.full((x.shape[0], 1), -math.log(hi - lo))
    stacked = np.concatenate([log_kernels, uniform], axis=1)
    peak = stacked.max(axis=1, keepdims=True)
    return (peak[:, 0] + np.log(np.exp(stacked - peak).sum(axis=1))
            - math.log(stacked.shape[1]))


def _sample_truncated_normal(rng, center, bandwidth, lo, hi):
    a = ndtr((lo - center) / bandwidth)
    b = ndtr((hi - center) / bandwidth)
    u = rng.uniform(a, b)
    return float(np.clip(center + bandwidth * ndtri(u), lo, hi))


def _tpe_propose(rng, recorder: _Recorder) -> np.ndarray:
    space = recorder.space
    names = space.free_names
    observed = [(p, l) for p, l in zip(recorder.free_points, recorder.losses)
                if math.isfinite(l)]
    if len(observed) < 2:
        return _uniform_draw(rng, space)
    order = sorted(range(len(observed)), key=lambda k: observed[k][1])
    n_good = math.ceil(TPE_GAMMA * len(observed))
    good = np.array([observed[k][0] for k in order[:n_good]])
    bad = np.array([observed[k][0] for k in order[n_good:]])
    if len(bad) == 0:
        return _uniform_draw(rng, space)

    bounds = space.free_bounds()
    candidates = np.empty((TPE_N_CANDIDATES, len(names)))
    for d in range(len(names)):
        lo, hi = bounds[d]
        width = hi - lo
        bw_good = width / math.sqrt(len(good))
        for k in range(TPE_N_CANDIDATES):
            pick = rng.integers(len(good) + 1)
            if pick == len(good):
                candidates[k, d] = rng.uniform(lo, hi)
            else:
                candidates[k, d] = _sample_truncated_normal(
                    rng, good[pick, d], bw_good, lo, hi)

    score = np.zeros(TPE_N_CANDIDATES)
    for d in range(len(names)):
        lo, hi = bounds[d]
        width = hi - lo
        score += _truncated_normal_logpdf(
            candidates[:, d], good[:, d], width / math.sqrt(len(good)), lo, hi)
        score -= _truncated_normal_logpdf(
            candidates[:, d], bad[:, d], width / math.sqrt(len(bad)), lo, hi)
    return candidates[int(np.argmax(score))]


def _uniform_draw(rng, space: SearchSpace) -> np.ndarray:
    b = space.free_bounds()
    return rng.uniform(b[:, 0], b[:, 1])


def _run_tpe(recorder: _Recorder, rng, init_points) -> None:
    for point in init_points:
        if recorder.exhausted:
            return
        recorder.evaluate(recorder.space.clip_free(point))
    while not recorder.exhausted:
        if len(recorder.evaluations) < TPE_N_INIT:
            recorder.evaluate(_uniform_draw(rng, recorder.space))
        else:
            recorder.evaluate(_tpe_propose(rng, recorder))


class _BudgetExhausted(Exception):
    pass


def _run_random_nm(recorder: _Recorder, rng, init_points) -> None:
    space = recorder.space
    batch = 10 * len(space.free_names) + 10
    for point in init_points:
        if recorder.exhausted:
            return
        recorder.evaluate(space.clip_free(point))

    # indices already consumed by a Nelder-Mead descent; restarts pick the
    # best point outside them so leftover budget explores fresh basins
    polished: set[int] = set()
    bounds = [tuple(b) for b in space.free_bounds()]

    def polish(start_index: int) -> None:
        polished.add(start_index)

        def wrapped(x):
            if recorder.exhausted:
                raise _BudgetExhausted
            polished.add(len(recorder.evaluations))
            return recorder.evaluate(space.clip_free(x))

        try:
            scipy_minimize(
                wrapped, recorder.free_points[start_index],
                method="Nelder-Mead", bounds=bounds,
                options={"maxfev": recorder.budget - len(recorder.evaluations) + 1,
                         "xatol": 1e-10, "fatol": 1e-12},
            )
        except _BudgetExhausted:
            pass

    for _ in range(min(recorder.budget - len(recorder.evaluations), batch)):
        recorder.evaluate(_uniform_draw(rng, space))
    while not recorder.exhausted:
        candidates = [k for k, v in enumerate(recorder.losses)
                      if math.isfinite(v) and k not in polished]
        if candidates:
            polish(min(candidates, key=lambda k: recorder.losses[k]))
        else:
            for _ in range(min(recorder.budget - len(recorder.evaluations), batch)):
                recorder.evaluate(_uniform_draw(rng, space))


def minimize(objective, space: SearchSpace, budget: int, seed: int = 0,
             method: str = "random+nm", init_points=None) -> OptResult:
    """Minimize a black-box objective over the search space.

    Args:
        objective: callable taking a {name: value} dict (pinned values
            included) and returning a real loss; +inf marks infeasibility.
        space: intervals and pinned values.
        budget: exact number of objective evaluations to spend (>= 1).
        seed: RNG seed; runs are reproducible and prefix-stable in budget.
        method: "random+nm" (uniform exploration batch, then Nelder-Mead
            descents from the best unpolished points) or "tpe".
        init_points: optional warm-start free-parameter vectors evaluated
            first (clipped to the box, counted against the budget).

    Returns:
        OptResult with the best evaluation and the full trace.

    Raises:
        NoFeasiblePointError: every evaluation came back +inf/NaN.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    if not space.free_names:
        raise ValueError("search space has no free parameters")
    recorder = _Recorder(objective, space, budget)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    init_points = [np.asarray(p, dtype=float) for p in (init_points or [])]
    if method == "tpe":
        _run_tpe(recorder, rng, init_points)
    else:
        _run_random_nm(recorder, rng, init_points)
    return recorder.result()
