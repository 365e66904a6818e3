"""Monte Carlo experiment runner: trials, sweeps, converse experiments, emit.

Reproducibility contract: every random draw comes from a counter-based
(Philox) stream derived injectively from (master_seed, T, trial_index,
purpose tag), so a configuration plus master seed fully determines every
emitted byte, independent of worker count and scheduling.  Aggregation is
limited to commutative sums.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import decoders, thresholds
from .designs import DesignSpec
from .disguise import construct_set, disguise_mask, success_upper_bound
from .errors import InvalidParameterError
from .model import Prior, defective_mask, run_tests, sample_coupled

TAG_PRIOR = 0
TAG_DESIGN = 1

#: 95% normal quantile used by the Wilson score intervals.
WILSON_Z = 1.959963984540054

CSV_COLUMNS = ("n", "prior_kind", "prior_param", "design", "decoder", "T",
               "trials", "successes", "success_rate", "ci_low", "ci_high",
               "master_seed")

_DECODERS = {
    "comp": decoders.comp_decode,
    "dd": decoders.dd_decode,
    "map": None,  # needs the prior, dispatched in run_trial
}


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Philox stream keyed on (master_seed, *key); injective in the key."""
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: prior, design family, decoder, test budget(s).

    T may be a single test count or a grid (strictly increasing).  The JSON
    form mirrors the field names; prior and design are nested objects.
    """

    n: int
    prior: Prior
    design: DesignSpec
    T: int | Sequence[int]
    decoder: str = "dd"
    trials: int = 100
    master_seed: int = 0
    xi: float = 0.1
    epsilon: float = 0.1
    output: str | None = None
    format: str = "csv"
    fixed_design: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials}")
        if self.decoder not in _DECODERS:
            raise InvalidParameterError(
                f"decoder must be one of {sorted(_DECODERS)}, got {self.decoder!r}")
        if self.format not in ("csv", "json"):
            raise InvalidParameterError(f"format must be csv or json, got {self.format!r}")
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {self.workers}")
        grid = self.t_grid()
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidParameterError(f"T grid must be strictly increasing: {grid}")

    def t_grid(self) -> list[int]:
        ts = list(self.T) if isinstance(self.T, (list, tuple)) else [self.T]
        return [int(t) for t in ts]

    def to_dict(self) -> dict:
        prior = {"kind": self.prior.kind}
        if self.prior.p is not None:
            prior["p"] = self.prior.p
        if self.prior.k is not None:
            prior["k"] = self.prior.k
        design = {"kind": self.design.kind}
        if self.design.k is not None:
            design["k"] = self.design.k
        if self.design.kind == "bernoulli":
            design["nu"] = self.design.nu
        if self.design.path is not None:
            design["path"] = self.design.path
        grid = self.t_grid()
        return {"n": self.n, "prior": prior, "design": design,
                "T": grid[0] if len(grid) == 1 else grid,
                "decoder": self.decoder, "trials": self.trials,
                "master_seed": self.master_seed, "xi": self.xi,
                "epsilon": self.epsilon, "output": self.output,
                "format": self.format, "fixed_design": self.fixed_design,
                "workers": self.workers}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        prior = data.pop("prior")
        design = data.pop("design")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise InvalidParameterError(f"unknown config fields: {sorted(extra)}")
        return cls(prior=Prior(**prior), design=DesignSpec(**design), **data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrialOutcome:
    """Result of a single trial; partial-credit counts are informational."""

    success: bool
    overflow: bool
    false_negatives: int
    false_positives: int


def run_trial(config: ExperimentConfig, T: int, trial_index: int) -> TrialOutcome:
    """Sample a truth, build a fresh design, test, decode, score.

    Overflow draws of the coupled prior count as successes.  The one-sided
    decoder guarantees (DD subset, COMP superset) are asserted on every
    trial.
    """
    rng_prior = derive_rng(config.master_seed, T, trial_index, TAG_PRIOR)
    design_trial = 0 if config.fixed_design else trial_index
    rng_design = derive_rng(config.master_seed, T, design_trial, TAG_DESIGN)

    overflow = False
    if config.prior.kind == "coupled":
        draw = sample_coupled(config.n, config.prior.k, rng_prior, p0=config.prior.p)
        s, overflow = draw.s, draw.overflow
    else:
        s = config.prior.sample(config.n, rng_prior)
    if overflow:
        return TrialOutcome(success=True, overflow=True,
                            false_negatives=0, false_positives=0)

    design = config.design.build(config.n, T, rng_design)
    outcomes = run_tests(design, s)
    if config.decoder == "map":
        result = decoders.map_oracle_decode(
            design, outcomes,
            config.prior if config.prior.kind != "coupled"
            else Prior.combinatorial(config.prior.k))
    else:
        result = _DECODERS[config.decoder](design, outcomes)
    estimate = result.estimate
    if config.decoder == "dd" and not estimate <= s:
        raise AssertionError("DD produced a false positive in the noiseless model")
    if config.decoder == "comp" and not estimate >= s:
        raise AssertionError("COMP missed a defective in the noiseless model")
    return TrialOutcome(success=estimate == s, overflow=False,
                        false_negatives=len(s - estimate),
                        false_positives=len(estimate - s))


@dataclass(frozen=True)
class SweepRow:
    T: int
    trials: int
    successes: int
    success_rate: float
    ci_low: float
    ci_high: float
    overflow_rate: float
    mean_false_negatives: float
    mean_false_positives: float

    def to_dict(self) -> dict:
        return {"T": self.T, "trials": self.trials, "successes": self.successes,
                "success_rate": self.success_rate, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "overflow_rate": self.overflow_rate,
                "mean_false_negatives": self.mean_false_negatives,
                "mean_false_positives": self.mean_false_positives}


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    rows: tuple
    overlays: dict
    crossing_estimate: float | None

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(),
                "rows": [r.to_dict() for r in self.rows],
                "overlays": self.overlays,
                "crossing_estimate": self.crossing_estimate}

    @classmethod
    def from_dict(cls, data: dict) -> "SweepResult":
        return cls(config=ExperimentConfig.from_dict(data["config"]),
                   rows=tuple(SweepRow(**r) for r in data["rows"]),
                   overlays=dict(data["overlays"]),
                   crossing_estimate=data["crossing_estimate"])


def _point_counts(config: ExperimentConfig, T: int, lo: int, hi: int) -> np.ndarray:
    counts = np.zeros(4, dtype=np.int64)  # successes, overflows, fn, fp
    for t in range(lo, hi):
        out = run_trial(config, T, t)
        counts += (out.success, out.overflow, out.false_negatives,
                   out.false_positives)
    return counts


def _parallel_points(config: ExperimentConfig, tasks):
    """Run (T, lo, hi) chunks across workers; summation is order-free."""
    if config.workers == 1:
        return [_point_counts(config, *task) for task in tasks]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(_point_counts, config, *task) for task in tasks]
        return [f.result() for f in futures]


def locate_crossing(ts: Sequence[int], rates: Sequence[float]) -> float | None:
    """First T where the success rate crosses 1/2, by linear interpolation.

    None when the grid does not bracket 1/2 from below.
    """
    for (t0, r0), (t1, r1) in zip(zip(ts, rates), zip(ts[1:], rates[1:])):
        if r0 < 0.5 <= r1:
            return t0 + (0.5 - r0) * (t1 - t0) / (r1 - r0)
    return None


def sweep(config: ExperimentConfig) -> SweepResult:
    """Estimate the success rate on the T grid, with Wilson 95% intervals,
    threshold overlays, and the interpolated 1/2-crossing."""
    grid = config.t_grid()
    chunk = max(1, math.ceil(config.trials / max(config.workers, 1)))
    tasks = [(T, lo, min(lo + chunk, config.trials))
             for T in grid for lo in range(0, config.trials, chunk)]
    results = _parallel_points(config, tasks)

    per_t = {T: np.zeros(4, dtype=np.int64) for T in grid}
    for task, counts in zip(tasks, results):
        per_t[task[0]] += counts
    rows = []
    for T in grid:
        successes, overflows, fn, fp = map(int, per_t[T])
        lo, hi = wilson_interval(successes, config.trials)
        rows.append(SweepRow(
            T=T, trials=config.trials, successes=successes,
            success_rate=successes / config.trials, ci_low=lo, ci_high=hi,
            overflow_rate=overflows / config.trials,
            mean_false_negatives=fn / config.trials,
            mean_false_positives=fp / config.trials))

    overlays = threshold_overlays(config)
    crossing = locate_crossing(grid, [r.success_rate for r in rows])
    return SweepResult(config=config, rows=tuple(rows), overlays=overlays,
                       crossing_estimate=crossing)


def threshold_overlays(config: ExperimentConfig) -> dict:
    """Reference quantities for plotting next to a sweep."""
    n = config.n
    k_bar = config.prior.mean_defectives(n)
    overlays: dict = {"k_bar": k_bar}
    overlays["t_star"] = (thresholds.t_star(n, k_bar)
                          if 1 <= k_bar <= n else None)
    overlays["optimal_tests"] = (thresholds.optimal_tests(n, k_bar)
                                 if 1 <= k_bar <= n / 2 else None)
    p = config.prior.prevalence(n)
    if 0.0 < p <= 0.5 and n >= 2:
        c_p = thresholds.converse_constant(p, n)
        overlays["converse_budget"] = thresholds.converse_budget(
            n, p, config.xi, c_p)
    else:
        overlays["converse_budget"] = None
    return overlays


# -- converse experiments -----------------------------------------------------

@dataclass(frozen=True)
class ConverseTrialRow:
    trial: int
    w_size: int
    disguised_in_w: int
    disguised_defectives_in_w: int
    success_upper_bound: float

    def to_dict(self) -> dict:
        return {"trial": self.trial, "w_size": self.w_size,
                "disguised_in_w": self.disguised_in_w,
                "disguised_defectives_in_w": self.disguised_defectives_in_w,
                "success_upper_bound": self.success_upper_bound}


@dataclass(frozen=True)
class ConverseReport:
    config: ExperimentConfig
    T: int
    xi: float
    rows: tuple
    mean_success_upper_bound: float
    frac_trials_with_disguised_defective: float
    mean_w_size: float
    mean_disguised_in_w: float

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "T": self.T, "xi": self.xi,
                "rows": [r.to_dict() for r in self.rows],
                "mean_success_upper_bound": self.mean_success_upper_bound,
                "frac_trials_with_disguised_defective":
                    self.frac_trials_with_disguised_defective,
                "mean_w_size": self.mean_w_size,
                "mean_disguised_in_w": self.mean_disguised_in_w}


def _converse_trial(config: ExperimentConfig, T: int, trial: int,
                    xi: float) -> ConverseTrialRow:
    rng_design = derive_rng(config.master_seed, T, trial, TAG_DESIGN)
    rng_prior = derive_rng(config.master_seed, T, trial, TAG_PRIOR)
    design = config.design.build(config.n, T, rng_design)
    extraction = construct_set(design, config.prior.p, xi)
    s = config.prior.sample(config.n, rng_prior)
    mask = disguise_mask(design, s)
    w = list(extraction.w)
    in_w = mask[w] if w else np.zeros(0, dtype=bool)
    s_mask = defective_mask(config.n, s)
    disguised = int(in_w.sum())
    disguised_def = int((in_w & s_mask[w]).sum()) if w else 0
    return ConverseTrialRow(
        trial=trial, w_size=len(w), disguised_in_w=disguised,
        disguised_defectives_in_w=disguised_def,
        success_upper_bound=success_upper_bound(disguised, config.prior.p))


def converse_experiment(config: ExperimentConfig,
                        xi: float | None = None) -> ConverseReport:
    """Per trial: build a design, run the construction loop, sample a truth,
    count realized disguised items inside W, and emit (1 - p)^count.

    Requires the iid prior and a single sub-linear test budget
    T <= (1 - epsilon) n.
    """
    if config.prior.kind != "iid":
        raise InvalidParameterError("converse experiments use the iid prior")
    grid = config.t_grid()
    if len(grid) != 1:
        raise InvalidParameterError("converse experiments use a single T value")
    T = grid[0]
    if T > (1.0 - config.epsilon) * config.n:
        raise InvalidParameterError(
            f"need T <= (1 - epsilon) n = {(1 - config.epsilon) * config.n:.6g}, got {T}")
    xi = config.xi if xi is None else xi

    if config.workers == 1:
        rows = [_converse_trial(config, T, t, xi) for t in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_converse_trial, config, T, t, xi)
                       for t in range(config.trials)]
            rows = [f.result() for f in futures]

    bounds = [r.success_upper_bound for r in rows]
    return ConverseReport(
        config=config, T=T, xi=xi, rows=tuple(rows),
        mean_success_upper_bound=float(np.mean(bounds)),
        frac_trials_with_disguised_defective=float(np.mean(
            [r.disguised_defectives_in_w > 0 for r in rows])),
        mean_w_size=float(np.mean([r.w_size for r in rows])),
        mean_disguised_in_w=float(np.mean([r.disguised_in_w for r in rows])))


# -- emitters -----------------------------------------------------------------

def sweep_csv(result: SweepResult) -> str:
    """Fixed-schema CSV; float fields use shortest round-trip formatting."""
    cfg = result.config
    lines = [",".join(CSV_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(str(v) for v in (
            cfg.n, cfg.prior.kind, cfg.prior.param, cfg.design.label,
            cfg.decoder, row.T, row.trials, row.successes, row.success_rate,
            row.ci_low, row.ci_high, cfg.master_seed)))
    return "\n".join(lines) + "\n"


def emit(result, fmt: str, path: str | None) -> str:
    """Serialize a result to CSV (sweeps only) or JSON and optionally write it.

    Returns the emitted text.  A path of None or "-" skips the write.
    """
    if fmt == "csv":
        if not isinstance(result, SweepResult):
            raise InvalidParameterError("csv output is defined for sweep results only")
        text = sweep_csv(result)
    elif fmt == "json":
        payload = result.to_dict() if hasattr(result, "to_dict") else result
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        raise InvalidParameterError(f"format must be csv or json, got {fmt!r}")
    if path and path != "-":
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"writing {path}: {exc}") from exc
    return text
