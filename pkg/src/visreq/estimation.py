"""Requirement instantiation: interval binning of human trials by visual
change, spline smoothing of per-interval rates, one-sided binomial tests for
the first significant performance drop, and spline-similarity comparison.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, make_smoothing_spline

from .config import ToolkitConfig
from .humandata import TrialSet, TrialDataError
from .iqa import ViewingConditions

KINDS = ("correctness", "prediction")


class EstimationError(ValueError):
    """Unusable trial data for estimation."""


@dataclass(frozen=True)
class IntervalStats:
    index: int
    lower: float
    upper: float
    n: int
    successes: int
    rate: float
    smoothed_rate: float = float("nan")
    p_value: float = float("nan")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class SplineModel:
    knots: np.ndarray
    coefficients: np.ndarray
    smoothing_parameter: float
    _eval: object = None
    x_range: tuple[float, float] = (0.0, 1.0)
    pointwise_ci: tuple[np.ndarray, np.ndarray, np.ndarray, float] | None = None

    def __call__(self, x) -> np.ndarray:
        # Evaluate with edge clamping: outside the fitted range the curve
        # holds its boundary value, and outputs stay in [0, 1].
        t = np.clip(np.asarray(x, dtype=float), *self.x_range)
        return np.clip(self._eval(t), 0.0, 1.0)


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    kind: str
    baseline: float
    per_interval: tuple[IntervalStats, ...]
    alpha: float
    epsilon: float | None = None


@dataclass(frozen=True)
class RequirementInstance:
    task: str
    transformation: str
    kind: str
    threshold: float
    alpha: float
    provenance: str = ""
    epsilon: float | None = None

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise EstimationError(f"threshold out of (0,1]: {self.threshold}")
        if self.kind not in KINDS:
            raise EstimationError(f"unknown requirement kind {self.kind!r}")
        if (self.epsilon is None) == (self.kind == "prediction"):
            raise EstimationError("epsilon must be present iff kind is prediction")


def _majority_original_responses(trial_set: TrialSet) -> dict[str, str]:
    votes: dict[str, int] = {}
    for t in trial_set.trials:
        if t.shown == "original":
            votes[t.pair_id] = votes.get(t.pair_id, 0) + (1 if t.response == "pos"
                                                          else -1)
    # Ties resolve to "pos" so the reference label is deterministic.
    return {pid: ("pos" if v >= 0 else "neg") for pid, v in votes.items()}


def _transformed_outcomes(trial_set: TrialSet, kind: str
                          ) -> tuple[np.ndarray, np.ndarray]:
    """(delta_v, success) per transformed trial relevant to the given kind."""
    if kind not in KINDS:
        raise EstimationError(f"unknown requirement kind {kind!r}")
    majority = _majority_original_responses(trial_set) if kind == "prediction" else {}
    dvs, succ = [], []
    for t in trial_set.trials:
        if t.shown != "transformed":
            continue
        pair = trial_set.pairs[t.pair_id]
        if pair.delta_v is None:
            raise EstimationError(f"pair {t.pair_id!r} is not annotated")
        if kind == "correctness":
            ok = t.response == t.ground_truth
        else:
            ref = majority.get(t.pair_id)
            if ref is None:
                continue  # no original trials to preserve against
            ok = t.response == ref
        dvs.append(pair.delta_v)
        succ.append(ok)
    return np.asarray(dvs, dtype=float), np.asarray(succ, dtype=bool)


def _bin_indices(dvs: np.ndarray, r: int) -> np.ndarray:
    # Interval k covers (t_{k-1}, t_k]; a visual change of exactly 0 falls
    # into the first interval.
    return np.clip(np.ceil(dvs * r).astype(int), 1, r)


def bin_pairs(trial_set: TrialSet, r: int, kind: str) -> list[IntervalStats]:
    """Per-interval success counts over equidistant visual-change intervals."""
    if r < 5:
        raise EstimationError("need at least 5 intervals")
    dvs, succ = _transformed_outcomes(trial_set, kind)
    ks = _bin_indices(dvs, r) if dvs.size else np.empty(0, dtype=int)
    out = []
    for k in range(1, r + 1):
        mask = ks == k
        n = int(mask.sum())
        s = int(succ[mask].sum())
        out.append(IntervalStats(index=k, lower=(k - 1) / r, upper=k / r,
                                 n=n, successes=s, rate=s / n if n else float("nan")))
    return out


def fit_smoothing_spline(points: list[tuple[float, float, float]]) -> SplineModel:
    """Cubic smoothing spline over (x, y, weight) with GCV-chosen smoothing."""
    if len(points) < 4:
        raise EstimationError("need at least 4 nonempty intervals to fit a spline")
    pts = sorted(points)
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    w = np.array([p[2] for p in pts], dtype=float)
    if len(points) == 4:
        # GCV needs 5+ points; at exactly 4 fall back to the zero-roughness
        # limit (interpolating natural cubic).
        spl = CubicSpline(x, y, bc_type="natural")
        return SplineModel(knots=x, coefficients=spl.c.ravel().copy(),
                           smoothing_parameter=0.0, _eval=spl,
                           x_range=(float(x[0]), float(x[-1])))
    spl = make_smoothing_spline(x, y, w=w)
    lam = getattr(spl, "lam", float("nan"))
    return SplineModel(knots=spl.t.copy(), coefficients=spl.c.copy(),
                       smoothing_parameter=float(lam) if lam == lam else 0.0,
                       _eval=spl, x_range=(float(x[0]), float(x[-1])))


def _fit_from_bins(bins: list[IntervalStats]) -> SplineModel:
    pts = [(b.midpoint, b.rate, float(b.n)) for b in bins if b.n > 0]
    return fit_smoothing_spline(pts)


def binomial_p_lower(successes: int, n: int, p0: float) -> float:
    """Exact lower-tail p-value P(Binomial(n, p0) <= successes)."""
    if n < 1 or not 0 <= successes <= n:
        raise EstimationError(f"bad binomial arguments: {successes}/{n}")
    if not 0.0 < p0 < 1.0:
        raise EstimationError(f"p0 must be in (0,1): {p0}")
    log_p, log_q = math.log(p0), math.log1p(-p0)
    total = -math.inf
    for i in range(successes + 1):
        term = (math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
                + i * log_p + (n - i) * log_q)
        total = np.logaddexp(total, term)
    return float(min(math.exp(total), 1.0))


def _p_lower_allowing_degenerate(successes: int, n: int, p0: float) -> float:
    if p0 >= 1.0:
        return 1.0 if successes == n else 0.0
    if p0 <= 0.0:
        return 1.0
    return binomial_p_lower(successes, n, p0)


def estimate_threshold(trial_set: TrialSet, kind: str, r: int = 20,
                       alpha: float = 0.05, q: float = 0.05) -> ThresholdResult:
    """Largest visual change before human performance drops significantly.

    The per-interval rate is smoothed with a spline, converted back to an
    effective success count, and tested one-sided against the baseline; the
    threshold is the upper edge of the last interval before the first
    significant drop (1.0 when no drop is found).
    """
    epsilon = None
    if kind == "correctness":
        orig = [(t.response == t.ground_truth) for t in trial_set.trials
                if t.shown == "original"]
        if not orig:
            raise EstimationError("no original-image trials: baseline undefined")
        baseline = sum(orig) / len(orig)
    elif kind == "prediction":
        dv_by_pair = {pid: p.delta_v for pid, p in trial_set.pairs.items()}
        if any(v is None for v in dv_by_pair.values()):
            raise EstimationError("unannotated pairs")
        epsilon = float(np.quantile(np.array(list(dv_by_pair.values())), q))
        dvs, succ = _transformed_outcomes(trial_set, "prediction")
        near = dvs <= epsilon
        if not near.any():
            raise EstimationError("no pairs at or below epsilon: baseline undefined")
        baseline = float(succ[near].mean())
    else:
        raise EstimationError(f"unknown requirement kind {kind!r}")

    bins = bin_pairs(trial_set, r, kind)
    spline = _fit_from_bins(bins)
    tested: list[IntervalStats] = []
    first_drop: int | None = None
    for b in bins:
        if b.n == 0:
            tested.append(b)
            continue
        smoothed = float(spline(b.midpoint))
        eff = int(round(smoothed * b.n))
        p = _p_lower_allowing_degenerate(eff, b.n, baseline)
        tested.append(IntervalStats(b.index, b.lower, b.upper, b.n, b.successes,
                                    b.rate, smoothed_rate=smoothed, p_value=p))
        if first_drop is None and p < alpha:
            first_drop = b.index
    if first_drop is None:
        threshold = 1.0
    else:
        # Never report below the first grid edge.
        threshold = max(first_drop - 1, 1) / r
    return ThresholdResult(threshold=threshold, kind=kind, baseline=baseline,
                           per_interval=tuple(tested), alpha=alpha,
                           epsilon=epsilon)


def instantiate_requirements(results: list[tuple[str, ThresholdResult]],
                             task: str, provenance: str = ""
                             ) -> list[RequirementInstance]:
    """One requirement per (transformation, kind) from threshold results."""
    if not results:
        raise EstimationError("no threshold results to instantiate")
    seen = set()
    instances = []
    for transformation, res in results:
        key = (transformation, res.kind)
        if key in seen:
            raise EstimationError(f"duplicate requirement for {key}")
        seen.add(key)
        instances.append(RequirementInstance(
            task=task, transformation=transformation, kind=res.kind,
            threshold=res.threshold, alpha=res.alpha, provenance=provenance,
            epsilon=res.epsilon))
    return instances


def save_requirements(instances: list[RequirementInstance], path: str | Path,
                      config: ToolkitConfig | None = None) -> None:
    if not instances:
        raise EstimationError("no requirement instances to write")
    config = config or ToolkitConfig()
    doc = {
        "task": instances[0].task,
        "viewing_conditions": config.vc_dict(),
        "entries": [
            {"transformation": r.transformation, "kind": r.kind,
             "threshold": r.threshold, "epsilon": r.epsilon,
             "alpha": r.alpha, "provenance": r.provenance}
            for r in instances
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_requirements(path: str | Path
                      ) -> tuple[str, ViewingConditions, list[RequirementInstance]]:
    doc = json.loads(Path(path).read_text())
    vc = ViewingConditions(**doc.get("viewing_conditions", {}))
    task = doc.get("task", "")
    instances = [
        RequirementInstance(task=task, transformation=e["transformation"],
                            kind=e["kind"], threshold=float(e["threshold"]),
                            alpha=float(e["alpha"]),
                            provenance=e.get("provenance", ""),
                            epsilon=e.get("epsilon"))
        for e in doc["entries"]
    ]
    if not instances:
        raise EstimationError(f"{path}: empty requirements file")
    return task, vc, instances


@dataclass(frozen=True)
class OverlapReport:
    grid: np.ndarray
    bands_a: tuple[np.ndarray, np.ndarray]
    bands_b: tuple[np.ndarray, np.ndarray]
    overlap: bool
    confidence: float


def _bootstrap_band(trial_set: TrialSet, kind: str, r: int, grid: np.ndarray,
                    confidence: float, resamples: int,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    dvs, succ = _transformed_outcomes(trial_set, kind)
    if dvs.size == 0:
        raise EstimationError("no transformed trials")
    ks = _bin_indices(dvs, r)
    curves = np.empty((resamples, grid.size))
    n = dvs.size
    for b in range(resamples):
        idx = rng.integers(0, n, size=n)
        counts = np.bincount(ks[idx], minlength=r + 1)[1:]
        hits = np.bincount(ks[idx], weights=succ[idx].astype(float),
                           minlength=r + 1)[1:]
        pts = [((k + 0.5) / r, hits[k] / counts[k], float(counts[k]))
               for k in range(r) if counts[k] > 0]
        spline = fit_smoothing_spline(pts)
        curves[b] = spline(grid)
    # Simultaneous (sup-norm calibrated) band: the overlap decision inspects
    # every grid point, so pointwise quantiles would separate same-process
    # sets ~30% of the time from multiplicity alone.
    mu = curves.mean(axis=0)
    sd = np.maximum(curves.std(axis=0, ddof=1), 1e-9)
    sup = np.max(np.abs(curves - mu) / sd, axis=1)
    q = float(np.quantile(sup, confidence))
    return mu - q * sd, mu + q * sd


def splines_overlap(set_a: TrialSet, set_b: TrialSet, confidence: float = 0.83,
                    kind: str = "correctness", r: int = 20, resamples: int = 200,
                    seed: int = 0) -> tuple[bool, OverlapReport]:
    """Whether two trial sets' smoothed performance curves are statistically
    indistinguishable: their simultaneous bootstrap confidence bands overlap
    at every point of a 101-point grid."""
    if set_a.transformation != set_b.transformation:
        raise EstimationError("trial sets cover different transformations")
    grid = np.linspace(0.0, 1.0, 101)
    rng = np.random.default_rng(seed)
    lo_a, hi_a = _bootstrap_band(set_a, kind, r, grid, confidence, resamples, rng)
    lo_b, hi_b = _bootstrap_band(set_b, kind, r, grid, confidence, resamples, rng)
    overlap = bool(np.all((lo_a <= hi_b) & (lo_b <= hi_a)))
    report = OverlapReport(grid=grid, bands_a=(lo_a, hi_a), bands_b=(lo_b, hi_b),
                           overlap=overlap, confidence=confidence)
    return overlap, report
