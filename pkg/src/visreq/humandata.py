"""Human-trial records: CSV ingestion/validation, visual-change annotation of
stimulus pairs, and a synthetic-human simulator with a known drop point.

CSV contracts (UTF-8, comma separated, header row):
  pairs manifest: pair_id,original_path,transformed_path,transformation,params_json,seed,delta_v
  trials:         trial_id,pair_id,shown,subject_id,response,ground_truth
with shown in {original,transformed} and labels in {pos,neg}.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .iqa import ViewingConditions, delta_v
from .images import load_image
from .transforms import ParamAssignment

PAIRS_HEADER = ["pair_id", "original_path", "transformed_path", "transformation",
                "params_json", "seed", "delta_v"]
TRIALS_HEADER = ["trial_id", "pair_id", "shown", "subject_id", "response",
                 "ground_truth"]
LABELS = ("pos", "neg")
ROLES = ("original", "transformed")


class TrialDataError(ValueError):
    """Schema or invariant violation in trial data."""


@dataclass(frozen=True)
class ImagePair:
    pair_id: str
    original_path: Path
    transformed_path: Path
    transformation: str
    params: ParamAssignment
    delta_v: float | None = None


@dataclass(frozen=True)
class Trial:
    trial_id: str
    pair_id: str
    shown: str
    subject_id: str
    response: str
    ground_truth: str

    def __post_init__(self):
        if self.shown not in ROLES:
            raise TrialDataError(f"trial {self.trial_id}: bad shown={self.shown!r}")
        if self.response not in LABELS or self.ground_truth not in LABELS:
            raise TrialDataError(f"trial {self.trial_id}: labels must be pos/neg")


@dataclass(frozen=True)
class TrialSet:
    trials: tuple[Trial, ...]
    pairs: dict[str, ImagePair]
    task: str
    transformation: str

    def annotated(self) -> bool:
        return all(p.delta_v is not None for p in self.pairs.values())


@dataclass(frozen=True)
class HumanModel:
    """Logistic accuracy model: floor + (base - floor)/(1 + exp(slope*(d - drop)))."""

    base_accuracy: float
    drop_at: float
    slope: float
    floor_accuracy: float
    seed: int = 0

    def __post_init__(self):
        if not (0.5 <= self.floor_accuracy <= self.base_accuracy <= 1.0):
            raise TrialDataError("need 0.5 <= floor <= base <= 1")
        if not 0.0 < self.drop_at < 1.0 or self.slope <= 0:
            raise TrialDataError("drop_at in (0,1) and slope > 0 required")

    def accuracy(self, d: float) -> float:
        return self.floor_accuracy + (self.base_accuracy - self.floor_accuracy) / (
            1.0 + math.exp(self.slope * (d - self.drop_at)))


def save_pairs(pairs: list[ImagePair], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PAIRS_HEADER)
        for p in pairs:
            dv = "" if p.delta_v is None else repr(p.delta_v)
            w.writerow([p.pair_id, p.original_path, p.transformed_path,
                        p.transformation, json.dumps(p.params.values),
                        p.params.seed, dv])


def load_pairs(path: str | Path) -> list[ImagePair]:
    pairs: list[ImagePair] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, PAIRS_HEADER, path)
        for i, row in enumerate(reader, start=2):
            pid = row["pair_id"]
            if pid in seen:
                raise TrialDataError(f"{path}: duplicate pair_id {pid!r} at row {i}")
            seen.add(pid)
            dv = row["delta_v"].strip()
            pairs.append(ImagePair(
                pair_id=pid,
                original_path=Path(row["original_path"]),
                transformed_path=Path(row["transformed_path"]),
                transformation=row["transformation"],
                params=ParamAssignment(json.loads(row["params_json"]),
                                       int(row["seed"] or 0)),
                delta_v=float(dv) if dv else None,
            ))
    return pairs


def save_trials(trials: tuple[Trial, ...] | list[Trial], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRIALS_HEADER)
        for t in trials:
            w.writerow([t.trial_id, t.pair_id, t.shown, t.subject_id,
                        t.response, t.ground_truth])


def _require_columns(fieldnames, expected, path) -> None:
    missing = set(expected) - set(fieldnames or ())
    if missing:
        raise TrialDataError(f"{path}: missing columns {sorted(missing)}")


def parse_trials(trials_file: str | Path, manifest_file: str | Path,
                 task: str = "") -> TrialSet:
    """Load and validate trials against their pairs manifest."""
    pairs = {p.pair_id: p for p in load_pairs(manifest_file)}
    transformations = {p.transformation for p in pairs.values()}
    if len(transformations) > 1:
        raise TrialDataError(
            f"{manifest_file}: mixed transformations {sorted(transformations)}")
    transformation = next(iter(transformations)) if transformations else ""

    trials: list[Trial] = []
    exposures: set[tuple[str, str]] = set()
    with open(trials_file, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _require_columns(reader.fieldnames, TRIALS_HEADER, trials_file)
        for i, row in enumerate(reader, start=2):
            trial = Trial(row["trial_id"], row["pair_id"], row["shown"],
                          row["subject_id"], row["response"], row["ground_truth"])
            if trial.pair_id not in pairs:
                raise TrialDataError(
                    f"{trials_file} row {i}: unknown pair_id {trial.pair_id!r}")
            key = (trial.subject_id, trial.pair_id)
            if key in exposures:
                raise TrialDataError(
                    f"{trials_file} row {i}: subject {trial.subject_id!r} already "
                    f"saw pair {trial.pair_id!r}")
            exposures.add(key)
            if trial.shown == "transformed" and pairs[trial.pair_id].delta_v is None:
                raise TrialDataError(
                    f"{trials_file} row {i}: pair {trial.pair_id!r} lacks a "
                    "delta_v annotation")
            trials.append(trial)
    return TrialSet(tuple(trials), pairs, task, transformation)


def annotate_pairs(pairs: list[ImagePair],
                   vc: ViewingConditions | None = None) -> list[ImagePair]:
    """Recompute and overwrite the delta_v annotation of every pair."""
    out = []
    for p in pairs:
        orig = load_image(p.original_path)
        trans = load_image(p.transformed_path)
        score = delta_v(orig, trans, vc)
        out.append(replace(p, delta_v=score.value))
    return out


def attach_delta_v(trial_set: TrialSet,
                   vc: ViewingConditions | None = None) -> TrialSet:
    """TrialSet with every pair (re)annotated with its visual change."""
    pairs = annotate_pairs(list(trial_set.pairs.values()), vc)
    return replace(trial_set, pairs={p.pair_id: p for p in pairs})


def simulate_humans(pairs: list[ImagePair], model: HumanModel,
                    subjects_per_image: int, task: str = "simulated") -> TrialSet:
    """Synthetic forced-choice trials from the logistic human model.

    Every pair gets `subjects_per_image` responses per role (original at
    visual change 0, transformed at the pair's annotation); each synthetic
    subject sees exactly one version of each image. Pair ground truth is a
    balanced seeded coin flip, as the manifest format carries no labels.
    """
    missing = [p.pair_id for p in pairs if p.delta_v is None]
    if missing:
        raise TrialDataError(f"pairs missing delta_v: {missing[:5]}")
    transformations = {p.transformation for p in pairs}
    if len(transformations) != 1:
        raise TrialDataError("simulate_humans needs a single-transformation manifest")
    rng = np.random.default_rng(model.seed)
    trials: list[Trial] = []
    tid = 0
    for p in pairs:
        gt = "pos" if rng.random() < 0.5 else "neg"
        for role, d in (("original", 0.0), ("transformed", p.delta_v)):
            acc = model.accuracy(d)
            for s in range(subjects_per_image):
                correct = rng.random() < acc
                response = gt if correct else ("neg" if gt == "pos" else "pos")
                trials.append(Trial(
                    trial_id=f"t{tid}",
                    pair_id=p.pair_id,
                    shown=role,
                    subject_id=f"sim-{role[0]}{s}-{p.pair_id}",
                    response=response,
                    ground_truth=gt,
                ))
                tid += 1
    return TrialSet(tuple(trials), {p.pair_id: p for p in pairs}, task,
                    next(iter(transformations)))
