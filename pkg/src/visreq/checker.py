"""Requirement checking: bootstrap batch sampling, visual-change-constrained
test generation, black-box model evaluation over a line-delimited subprocess
protocol (or built-in mock models), and the confidence verdict.
"""
from __future__ import annotations

import csv
import hashlib
import json
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .config import ToolkitConfig
from .estimation import RequirementInstance
from .images import Image, load_image, save_image
from .iqa import delta_v
from .transforms import apply, get_spec, sample_params

MAX_ATTEMPTS_PER_IMAGE = 50
MIN_ACCEPTANCE_RATE = 0.01
STRATA = 5
SUBPROCESS_TIMEOUT_PER_BATCH = 60.0


class CheckerError(RuntimeError):
    """Test generation or model-evaluation failure."""


@dataclass(frozen=True)
class Dataset:
    root: Path
    entries: tuple[tuple[Path, str], ...]  # (image path, pos/neg ground truth)


def load_dataset(manifest: str | Path) -> Dataset:
    """Dataset manifest CSV with header `path,label`; paths resolve against
    the manifest's directory."""
    manifest = Path(manifest)
    root = manifest.parent
    entries = []
    with open(manifest, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or {"path", "label"} - set(reader.fieldnames):
            raise CheckerError(f"{manifest}: expected columns path,label")
        for row in reader:
            if row["label"] not in ("pos", "neg"):
                raise CheckerError(f"{manifest}: label must be pos/neg")
            p = root / row["path"]
            if not p.exists():
                raise CheckerError(f"{manifest}: missing image {p}")
            entries.append((p, row["label"]))
    if not entries:
        raise CheckerError(f"{manifest}: empty dataset")
    return Dataset(root=root, entries=tuple(entries))


@dataclass(frozen=True)
class TestCase:
    case_id: str
    original_path: Path
    transformed_path: Path
    params_json: str
    seed: int
    delta_v: float
    ground_truth: str


@dataclass(frozen=True)
class TestBatch:
    cases: tuple[TestCase, ...]
    epsilon_cases: tuple[TestCase, ...] = ()


@dataclass(frozen=True)
class TestSuite:
    batches: tuple[TestBatch, ...]
    requirement: RequirementInstance
    seed: int
    skipped_images: int = 0


@dataclass(frozen=True)
class ModelEndpoint:
    kind: str                      # "subprocess" | "builtin"
    command: str = ""
    drop: float = 0.0
    at: float = 0.0
    seed: int = 0

    BUILTINS = ("oracle", "constant_positive", "degrading")

    def __post_init__(self):
        if self.kind == "builtin" and self.command not in self.BUILTINS:
            raise CheckerError(f"unknown builtin model {self.command!r}")
        if self.command == "degrading":
            if not (0.0 <= self.drop <= 1.0 and 0.0 <= self.at < 1.0):
                raise CheckerError("degrading needs drop in [0,1], at in [0,1)")


@dataclass(frozen=True)
class CheckReport:
    requirement: RequirementInstance
    baseline_estimate: float
    transformed_estimate: float
    baseline_stddev: float
    transformed_stddev: float
    reliability_distance: float
    distance_stddev: float
    z: float
    margin: float
    verdict: str                   # "satisfied" | "violated"
    baseline_batch_values: tuple[float, ...]
    transformed_batch_values: tuple[float, ...]
    runtime_seconds: float
    suite_seed: int
    model_seed: int


def _work_path(work_dir: Path, original: Path, transformation: str,
               params_json: str, seed: int) -> Path:
    key = f"{original.resolve()}|{transformation}|{params_json}|{seed}"
    digest = hashlib.sha1(key.encode()).hexdigest()
    return work_dir / digest[:2] / f"{digest}.png"


def _generate_case(case_id: str, original: Path, label: str, image: Image,
                   transformation: str, max_dv: float, rng: np.random.Generator,
                   config: ToolkitConfig, stratum: int | None) -> TestCase | None:
    """Rejection-sample a transformed variant with delta_v <= max_dv.

    With a stratum given, only that fifth of [0, max_dv] is accepted.
    Returns None when the attempt cap is exhausted.
    """
    spec = get_spec(transformation)
    for _ in range(MAX_ATTEMPTS_PER_IMAGE):
        params = sample_params(spec, rng)
        out = apply(spec, image, params, config.frost_texture_dir)
        dv = delta_v(image, out, config.viewing_conditions).value
        if dv > max_dv:
            continue
        if stratum is not None:
            width = max_dv / STRATA
            lo, hi = stratum * width, (stratum + 1) * width
            if not (lo <= dv <= hi if stratum == 0 else lo < dv <= hi):
                continue
        params_json = json.dumps(params.values, sort_keys=True)
        path = _work_path(config.work_dir, original, transformation,
                          params_json, params.seed)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            save_image(out, path, "png")
        return TestCase(case_id=case_id, original_path=original,
                        transformed_path=path, params_json=params_json,
                        seed=params.seed, delta_v=dv, ground_truth=label)
    return None


def generate_tests(dataset: Dataset, req: RequirementInstance, n: int, k: int,
                   seed: int, config: ToolkitConfig | None = None,
                   stratified: bool = False) -> TestSuite:
    """Sample n batches of k originals with replacement and materialize one
    in-range transformed variant per sampled original."""
    if n < 2 or k < 1:
        raise CheckerError("need n >= 2 batches of k >= 1 images")
    config = config or ToolkitConfig()
    config.work_dir.mkdir(parents=True, exist_ok=True)
    image_cache: dict[Path, Image] = {}
    skipped = 0
    accepted = 0
    consumed_images = 0

    def make_set(batch_idx: int, tag: str, max_dv: float,
                 rng: np.random.Generator) -> tuple[TestCase, ...]:
        nonlocal skipped, accepted, consumed_images
        cases = []
        stratum_cycle = 0
        while len(cases) < k:
            path, label = dataset.entries[int(rng.integers(0, len(dataset.entries)))]
            if path not in image_cache:
                image_cache[path] = load_image(path)
            consumed_images += 1
            if consumed_images > 100 and accepted < MIN_ACCEPTANCE_RATE * consumed_images:
                raise CheckerError(
                    "acceptance rate below 1%: parameter domains cannot reach "
                    f"delta_v <= {max_dv}")
            stratum = stratum_cycle % STRATA if stratified else None
            case = _generate_case(f"b{batch_idx}{tag}{len(cases)}", path, label,
                                  image_cache[path], req.transformation, max_dv,
                                  rng, config, stratum)
            if case is None and stratified:
                # Fall back to any in-range value for a hard-to-hit stratum.
                case = _generate_case(f"b{batch_idx}{tag}{len(cases)}", path,
                                      label, image_cache[path],
                                      req.transformation, max_dv, rng, config,
                                      None)
            if case is None:
                skipped += 1
                continue
            accepted += 1
            stratum_cycle += 1
            cases.append(case)
        return tuple(cases)

    batches = []
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        cases = make_set(i, "t", req.threshold, rng)
        eps_cases: tuple[TestCase, ...] = ()
        if req.kind == "prediction":
            eps_cases = make_set(i, "e", req.epsilon, rng)
        batches.append(TestBatch(cases=cases, epsilon_cases=eps_cases))
    return TestSuite(batches=tuple(batches), requirement=req, seed=seed,
                     skipped_images=skipped)


@dataclass(frozen=True)
class ModelQuery:
    query_id: str
    path: Path
    ground_truth: str
    delta_v: float


def _run_builtin(endpoint: ModelEndpoint, queries: list[ModelQuery]) -> list[str]:
    if endpoint.command == "constant_positive":
        return ["pos"] * len(queries)
    if endpoint.command == "oracle":
        return [q.ground_truth for q in queries]
    rng = np.random.default_rng(endpoint.seed)
    labels = []
    for q in queries:
        label = q.ground_truth
        if q.delta_v > endpoint.at and rng.random() < endpoint.drop:
            label = "neg" if label == "pos" else "pos"
        labels.append(label)
    return labels


def _run_subprocess(endpoint: ModelEndpoint, queries: list[ModelQuery],
                    timeout: float) -> list[str]:
    requests = "".join(
        json.dumps({"id": q.query_id, "path": str(q.path.resolve())}) + "\n"
        for q in queries)
    try:
        proc = subprocess.run(shlex.split(endpoint.command), input=requests,
                              capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise CheckerError(f"model timed out after {timeout:.0f}s") from exc
    if proc.returncode != 0:
        raise CheckerError(
            f"model exited with {proc.returncode}: {proc.stderr.strip()[:500]}")
    replies: dict[str, str] = {}
    for line in proc.stdout.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CheckerError(f"malformed reply line: {line[:200]}") from exc
        if "error" in obj:
            raise CheckerError(f"model error for {obj.get('id')}: {obj['error']}")
        if obj.get("label") not in ("pos", "neg"):
            raise CheckerError(f"bad label in reply: {line[:200]}")
        replies[obj["id"]] = obj["label"]
    missing = [q.query_id for q in queries if q.query_id not in replies]
    if missing or len(replies) != len(queries):
        raise CheckerError(
            f"reply count mismatch: {len(replies)} replies for {len(queries)} "
            f"requests (missing e.g. {missing[:3]})")
    return [replies[q.query_id] for q in queries]


def run_model(endpoint: ModelEndpoint, queries: list[ModelQuery],
              timeout: float | None = None) -> list[str]:
    """One pos/neg label per query, order preserving."""
    if endpoint.kind == "builtin":
        return _run_builtin(endpoint, queries)
    if endpoint.kind == "subprocess":
        return _run_subprocess(endpoint, queries, timeout
                               or SUBPROCESS_TIMEOUT_PER_BATCH)
    raise CheckerError(f"unknown endpoint kind {endpoint.kind!r}")


def z_critical(alpha: float) -> float:
    # The 0.05 value is pinned to the conventional 1.645 rather than the
    # longer ppf expansion so reported margins match hand arithmetic.
    return 1.645 if alpha == 0.05 else float(norm.ppf(1.0 - alpha))


def verdict_from_estimates(distance: float, distance_stddev: float,
                           alpha: float) -> tuple[float, float, str]:
    """(z, margin, verdict) for a reliability distance estimate."""
    z = z_critical(alpha)
    if distance_stddev == 0.0:
        margin = distance
    else:
        margin = distance + z * distance_stddev
    return z, margin, ("satisfied" if margin <= 0 else "violated")


def evaluate(suite: TestSuite, endpoint: ModelEndpoint,
             alpha: float = 0.05) -> CheckReport:
    """Bootstrap population estimates and the confidence verdict."""
    started = time.perf_counter()
    queries: list[ModelQuery] = []
    for batch in suite.batches:
        for case in batch.cases + batch.epsilon_cases:
            queries.append(ModelQuery(f"{case.case_id}:orig", case.original_path,
                                      case.ground_truth, 0.0))
            queries.append(ModelQuery(f"{case.case_id}:trans",
                                      case.transformed_path, case.ground_truth,
                                      case.delta_v))
    timeout = SUBPROCESS_TIMEOUT_PER_BATCH * max(len(suite.batches), 1)
    labels = dict(zip((q.query_id for q in queries),
                      run_model(endpoint, queries, timeout)))

    base_vals, trans_vals = [], []
    kind = suite.requirement.kind
    for batch in suite.batches:
        if kind == "correctness":
            orig_ok = [labels[f"{c.case_id}:orig"] == c.ground_truth
                       for c in batch.cases]
            trans_ok = [labels[f"{c.case_id}:trans"] == c.ground_truth
                        for c in batch.cases]
            base_vals.append(float(np.mean(orig_ok)))
            trans_vals.append(float(np.mean(trans_ok)))
        else:
            eps_same = [labels[f"{c.case_id}:trans"] == labels[f"{c.case_id}:orig"]
                        for c in batch.epsilon_cases]
            full_same = [labels[f"{c.case_id}:trans"] == labels[f"{c.case_id}:orig"]
                         for c in batch.cases]
            base_vals.append(float(np.mean(eps_same)))
            trans_vals.append(float(np.mean(full_same)))

    base = np.asarray(base_vals)
    trans = np.asarray(trans_vals)
    sd_base = float(base.std(ddof=1))
    sd_trans = float(trans.std(ddof=1))
    distance = float(base.mean() - trans.mean())
    sd_dist = float(np.sqrt(sd_base ** 2 + sd_trans ** 2))
    z, margin, verdict = verdict_from_estimates(distance, sd_dist, alpha)
    return CheckReport(
        requirement=suite.requirement,
        baseline_estimate=float(base.mean()),
        transformed_estimate=float(trans.mean()),
        baseline_stddev=sd_base, transformed_stddev=sd_trans,
        reliability_distance=distance, distance_stddev=sd_dist,
        z=z, margin=margin, verdict=verdict,
        baseline_batch_values=tuple(base_vals),
        transformed_batch_values=tuple(trans_vals),
        runtime_seconds=time.perf_counter() - started,
        suite_seed=suite.seed, model_seed=endpoint.seed)


def audit_suite(suite: TestSuite, config: ToolkitConfig | None = None,
                fraction: float = 0.02, seed: int = 0) -> int:
    """Recompute delta_v for a random sample of cases; returns the number of
    cases whose recomputed value exceeds the requirement threshold."""
    config = config or ToolkitConfig()
    cases = [c for b in suite.batches for c in b.cases]
    rng = np.random.default_rng(seed)
    sample_size = max(1, int(round(fraction * len(cases))))
    idx = rng.choice(len(cases), size=sample_size, replace=False)
    violations = 0
    for i in idx:
        c = cases[i]
        dv = delta_v(load_image(c.original_path), load_image(c.transformed_path),
                     config.viewing_conditions).value
        if dv > suite.requirement.threshold + 1e-9:
            violations += 1
    return violations


def convergence_check(dataset: Dataset, req: RequirementInstance,
                      endpoint: ModelEndpoint, n: int, k: int,
                      seeds: tuple[int, int] = (1, 2),
                      config: ToolkitConfig | None = None,
                      alpha: float = 0.05) -> bool:
    """Whether two independently seeded runs agree on population estimates to
    within twice the pooled standard error."""
    reports = []
    for s in seeds:
        suite = generate_tests(dataset, req, n, k, seed=s, config=config)
        ep = endpoint if endpoint.kind != "builtin" else \
            ModelEndpoint("builtin", endpoint.command, endpoint.drop,
                          endpoint.at, seed=endpoint.seed + s)
        reports.append(evaluate(suite, ep, alpha))
    r1, r2 = reports
    for e1, sd1, e2, sd2 in (
        (r1.baseline_estimate, r1.baseline_stddev,
         r2.baseline_estimate, r2.baseline_stddev),
        (r1.transformed_estimate, r1.transformed_stddev,
         r2.transformed_estimate, r2.transformed_stddev),
    ):
        pooled = np.sqrt(sd1 ** 2 + sd2 ** 2)
        if abs(e1 - e2) > 2.0 * pooled / np.sqrt(n):
            return False
    return True


def report_to_dict(report: CheckReport) -> dict:
    req = report.requirement
    return {
        "requirement": {"task": req.task, "transformation": req.transformation,
                        "kind": req.kind, "threshold": req.threshold,
                        "epsilon": req.epsilon, "alpha": req.alpha},
        "baseline_estimate": report.baseline_estimate,
        "transformed_estimate": report.transformed_estimate,
        "baseline_stddev": report.baseline_stddev,
        "transformed_stddev": report.transformed_stddev,
        "reliability_distance": report.reliability_distance,
        "distance_stddev": report.distance_stddev,
        "z": report.z,
        "margin": report.margin,
        "verdict": report.verdict,
        "runtime_seconds": report.runtime_seconds,
        "suite_seed": report.suite_seed,
        "model_seed": report.model_seed,
    }


def write_batch_csv(report: CheckReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["batch", "baseline_metric", "transformed_metric"])
        for i, (b, t) in enumerate(zip(report.baseline_batch_values,
                                       report.transformed_batch_values)):
            w.writerow([i, b, t])
