"""Command-line entry point covering the two workflows (threshold estimation
from human trials; requirement checking against a black-box model) plus
utilities for single transformations and visual-change scoring.

Exit codes: 0 success, 1 domain error, 2 usage error, 3 check found a
violated requirement.
"""
from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import checker as ck
from . import estimation as est
from . import humandata as hd
from . import transforms as tr
from .config import ToolkitConfig
from .images import ImageError, image_from_array, load_image, save_image
from .iqa import IqaError, delta_v

EXIT_VIOLATED = 3

DOMAIN_ERRORS = (ImageError, IqaError, tr.TransformError, hd.TrialDataError,
                 est.EstimationError, ck.CheckerError, OSError, ValueError,
                 KeyError, json.JSONDecodeError)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _config_option(fn):
    return click.option("--config", "config_path", type=click.Path(exists=True),
                        default=None,
                        help="Toolkit config JSON (viewing conditions, "
                             "work/texture directories, defaults).")(fn)


@click.group()
def main() -> None:
    """Human-baselined reliability requirements for machine-vision classifiers."""


@main.command()
@click.option("--original", required=True, type=click.Path(exists=True))
@click.option("--transformed", required=True, type=click.Path(exists=True))
@_config_option
def deltav(original: str, transformed: str, config_path: str | None) -> None:
    """Visual change score between two aligned images (prints score, raw
    information-fidelity value, and whether the change is below the human
    visibility threshold)."""
    try:
        cfg = ToolkitConfig.load(config_path)
        score = delta_v(load_image(original), load_image(transformed),
                        cfg.viewing_conditions)
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"{score.value:.6f}")
    click.echo(f"vif_raw={score.vif_raw:.6f}")
    click.echo(f"below_visibility_threshold={str(score.below_visibility_threshold).lower()}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--name", required=True,
              help="Transformation name (see `transform --list` docs): one of "
                   + ", ".join(s.name for s in tr.registry()) + ".")
@click.option("--params", "params_json", required=True,
              help='Parameter JSON, e.g. \'{"factor": 1.4}\'.')
@click.option("--seed", type=int, default=0, show_default=True)
@_config_option
def transform(input_path: str, output_path: str, name: str, params_json: str,
              seed: int, config_path: str | None) -> None:
    """Apply one named transformation with explicit parameters."""
    try:
        cfg = ToolkitConfig.load(config_path)
        spec = tr.get_spec(name)
        params = tr.ParamAssignment(values=json.loads(params_json), seed=seed)
        params.validate(spec)
        out = tr.apply(spec, load_image(input_path), params, cfg.frost_texture_dir)
        save_image(out, output_path, Path(output_path).suffix.lstrip(".") or "png")
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(output_path)


def _collect_images(directory: Path) -> list[Path]:
    paths = sorted(p for p in directory.iterdir()
                   if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    if not paths:
        raise ImageError(f"no PNG/JPEG images in {directory}")
    return paths


@main.command("gen-pairs")
@click.option("--images", "images_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of original PNG/JPEG images.")
@click.option("--transformation", required=True)
@click.option("--count", type=int, required=True, help="Number of pairs.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--outdir", required=True, type=click.Path(file_okay=False),
              help="Directory for materialized transformed images.")
@click.option("--out", "out_csv", required=True, type=click.Path(),
              help="Pairs manifest CSV (pair_id,original_path,transformed_path,"
                   "transformation,params_json,seed,delta_v).")
@click.option("--jobs", type=int, default=0, show_default="available parallelism",
              help="Worker threads for visual-change scoring.")
@_config_option
def gen_pairs(images_dir: str, transformation: str, count: int, seed: int,
              outdir: str, out_csv: str, jobs: int,
              config_path: str | None) -> None:
    """Sample transformed variants of a directory of originals and write an
    annotated pairs manifest."""
    try:
        cfg = ToolkitConfig.load(config_path)
        spec = tr.get_spec(transformation)
        originals = _collect_images(Path(images_dir))
        out_root = Path(outdir)
        out_root.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(seed)
        cache = {p: load_image(p) for p in originals}
        work = []
        for i in range(count):
            src = originals[int(rng.integers(0, len(originals)))]
            params = tr.sample_params(spec, rng)
            work.append((i, src, params))

        def build(item):
            i, src, params = item
            image = tr.apply(spec, cache[src], params, cfg.frost_texture_dir)
            dest = out_root / f"pair_{i:05d}.png"
            save_image(image, dest, "png")
            dv = delta_v(cache[src], image, cfg.viewing_conditions).value
            return hd.ImagePair(pair_id=f"p{i:05d}", original_path=src,
                                transformed_path=dest,
                                transformation=transformation, params=params,
                                delta_v=dv)

        workers = jobs if jobs > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(build, work))
        hd.save_pairs(pairs, out_csv)
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"{len(pairs)} pairs -> {out_csv}")


@main.command("simulate-humans")
@click.option("--pairs", "pairs_csv", required=True, type=click.Path(exists=True))
@click.option("--subjects", type=int, default=5, show_default=True)
@click.option("--base", type=float, default=0.97, show_default=True)
@click.option("--floor", type=float, default=0.60, show_default=True)
@click.option("--drop-at", type=float, default=0.6, show_default=True)
@click.option("--slope", type=float, default=40.0, show_default=True)
@click.option("--task", default="simulated", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_csv", required=True, type=click.Path(),
              help="Trials CSV (trial_id,pair_id,shown,subject_id,response,"
                   "ground_truth).")
def simulate_humans_cmd(pairs_csv: str, subjects: int, base: float, floor: float,
                        drop_at: float, slope: float, task: str, seed: int,
                        out_csv: str) -> None:
    """Generate synthetic forced-choice trials from a logistic accuracy model
    over an annotated pairs manifest."""
    try:
        pairs = hd.load_pairs(pairs_csv)
        model = hd.HumanModel(base_accuracy=base, drop_at=drop_at, slope=slope,
                              floor_accuracy=floor, seed=seed)
        trial_set = hd.simulate_humans(pairs, model, subjects, task)
        hd.save_trials(trial_set.trials, out_csv)
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(f"{len(trial_set.trials)} trials -> {out_csv}")


@main.command()
@click.option("--trials", "trials_csv", required=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_csv", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(est.KINDS), required=True)
@click.option("--intervals", type=int, default=20, show_default=True,
              help="Number of equal-width visual-change bins.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--q", type=float, default=0.05, show_default=True,
              help="Quantile defining minimal change (prediction kind).")
@click.option("--task", default="", help="Task label for the requirements file.")
@click.option("--provenance", default="", help="Free-text provenance note.")
@click.option("--out", "out_json", required=True, type=click.Path(),
              help="Requirements JSON output.")
@click.option("--diagnostics", "diag_csv", type=click.Path(), default=None,
              help="Optional per-interval stats CSV for plotting.")
@_config_option
def estimate(trials_csv: str, pairs_csv: str, kind: str, intervals: int,
             alpha: float, q: float, task: str, provenance: str, out_json: str,
             diag_csv: str | None, config_path: str | None) -> None:
    """Estimate the human-tolerated visual-change threshold from trial data
    and write a requirements file."""
    try:
        cfg = ToolkitConfig.load(config_path)
        trial_set = hd.parse_trials(trials_csv, pairs_csv, task=task)
        result = est.estimate_threshold(trial_set, kind, r=intervals,
                                        alpha=alpha, q=q)
        instances = est.instantiate_requirements(
            [(trial_set.transformation, result)],
            task=task or trial_set.task, provenance=provenance)
        est.save_requirements(instances, out_json, cfg)
        if diag_csv is not None:
            _write_diagnostics(result, diag_csv)
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    eps = "" if result.epsilon is None else f" epsilon={result.epsilon:.6f}"
    click.echo(f"{kind} threshold={result.threshold:.6f}"
               f" baseline={result.baseline:.6f}{eps} -> {out_json}")


def _write_diagnostics(result: est.ThresholdResult, path: str) -> None:
    import csv as _csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["interval", "lower", "upper", "midpoint", "n", "successes",
                    "rate", "smoothed_rate", "p_value"])
        for s in result.per_interval:
            w.writerow([s.index, s.lower, s.upper, s.midpoint, s.n,
                        s.successes, s.rate, s.smoothed_rate, s.p_value])


@main.command("compare-splines")
@click.option("--trials-a", required=True, type=click.Path(exists=True))
@click.option("--pairs-a", required=True, type=click.Path(exists=True))
@click.option("--trials-b", required=True, type=click.Path(exists=True))
@click.option("--pairs-b", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(est.KINDS), default="correctness",
              show_default=True)
@click.option("--confidence", type=float, default=0.83, show_default=True)
@click.option("--intervals", type=int, default=20, show_default=True)
@click.option("--resamples", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def compare_splines(trials_a: str, pairs_a: str, trials_b: str, pairs_b: str,
                    kind: str, confidence: float, intervals: int,
                    resamples: int, seed: int) -> None:
    """Whether two trial sets' smoothed performance curves are statistically
    indistinguishable (pointwise bootstrap bands overlap everywhere)."""
    try:
        set_a = hd.parse_trials(trials_a, pairs_a)
        set_b = hd.parse_trials(trials_b, pairs_b)
        overlap, _ = est.splines_overlap(set_a, set_b, confidence=confidence,
                                         kind=kind, r=intervals,
                                         resamples=resamples, seed=seed)
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(json.dumps({"overlap": overlap, "confidence": confidence}))


def _endpoint(model_cmd: str | None, model_builtin: str | None, drop: float,
              at: float, seed: int) -> ck.ModelEndpoint:
    if (model_cmd is None) == (model_builtin is None):
        raise click.UsageError("exactly one of --model-cmd/--model-builtin required")
    if model_cmd is not None:
        return ck.ModelEndpoint("subprocess", model_cmd, seed=seed)
    return ck.ModelEndpoint("builtin", model_builtin, drop=drop, at=at, seed=seed)


def _model_options(fn):
    for deco in (
        click.option("--model-cmd", default=None,
                     help="Black-box model command speaking the line-delimited "
                          'JSON protocol: {"id","path"} in, {"id","label"} out.'),
        click.option("--model-builtin",
                     type=click.Choice(ck.ModelEndpoint.BUILTINS), default=None,
                     help="Built-in mock model."),
        click.option("--drop", type=float, default=0.1, show_default=True,
                     help="degrading builtin: label-flip probability."),
        click.option("--at", type=float, default=0.0, show_default=True,
                     help="degrading builtin: visual change where drop starts."),
    ):
        fn = deco(fn)
    return fn


@main.command()
@click.option("--requirements", "req_json", required=True,
              type=click.Path(exists=True))
@click.option("--dataset", "dataset_csv", required=True,
              type=click.Path(exists=True),
              help="Dataset manifest CSV with header path,label.")
@_model_options
@click.option("--n", type=int, default=None, help="Batches (default from config).")
@click.option("--k", type=int, default=None, help="Images per batch.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--stratified", is_flag=True,
              help="Stratify sampling over five visual-change strata.")
@click.option("--out", "out_json", required=True, type=click.Path(),
              help="Report JSON output.")
@click.option("--batch-csv", default=None, type=click.Path(),
              help="Optional per-batch metric CSV (entry index suffixed when "
                   "checking several requirements).")
@_config_option
def check(req_json: str, dataset_csv: str, model_cmd: str | None,
          model_builtin: str | None, drop: float, at: float, n: int | None,
          k: int | None, alpha: float, seed: int, stratified: bool,
          out_json: str, batch_csv: str | None, config_path: str | None) -> None:
    """Check every requirement in a requirements file against a model.

    Exit 0 when all requirements are satisfied, 3 when any is violated.
    """
    try:
        cfg = ToolkitConfig.load(config_path)
        task, _, instances = est.load_requirements(req_json)
        dataset = ck.load_dataset(dataset_csv)
        endpoint = _endpoint(model_cmd, model_builtin, drop, at, seed)
        n = n or cfg.default_n
        k = k or cfg.default_k
        reports = []
        for idx, req in enumerate(instances):
            suite = ck.generate_tests(dataset, req, n, k, seed=seed, config=cfg,
                                      stratified=stratified)
            report = ck.evaluate(suite, endpoint, alpha)
            reports.append(report)
            if batch_csv is not None:
                path = Path(batch_csv)
                if len(instances) > 1:
                    path = path.with_name(f"{path.stem}_{idx}{path.suffix}")
                ck.write_batch_csv(report, path)
        doc = {"task": task,
               "reports": [ck.report_to_dict(r) for r in reports]}
        Path(out_json).write_text(json.dumps(doc, indent=2) + "\n")
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    for r in reports:
        click.echo(f"{r.requirement.transformation}[{r.requirement.kind}]: "
                   f"{r.verdict} (margin={r.margin:+.6f})")
    if any(r.verdict == "violated" for r in reports):
        sys.exit(EXIT_VIOLATED)


@main.command()
@click.option("--requirements", "req_json", required=True,
              type=click.Path(exists=True))
@click.option("--dataset", "dataset_csv", required=True,
              type=click.Path(exists=True))
@_model_options
@click.option("--n", type=int, default=None)
@click.option("--k", type=int, default=None)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--seeds", default="1,2", show_default=True,
              help="Two comma-separated suite seeds.")
@_config_option
def convergence(req_json: str, dataset_csv: str, model_cmd: str | None,
                model_builtin: str | None, drop: float, at: float,
                n: int | None, k: int | None, alpha: float, seeds: str,
                config_path: str | None) -> None:
    """Run each requirement twice with different seeds and report whether the
    bootstrap estimates agree to within twice the pooled standard error."""
    try:
        cfg = ToolkitConfig.load(config_path)
        _, _, instances = est.load_requirements(req_json)
        dataset = ck.load_dataset(dataset_csv)
        parts = seeds.split(",")
        if len(parts) != 2:
            raise click.UsageError("--seeds wants exactly two values, e.g. 1,2")
        seed_pair = (int(parts[0]), int(parts[1]))
        endpoint = _endpoint(model_cmd, model_builtin, drop, at, seed_pair[0])
        results = {}
        for req in instances:
            ok = ck.convergence_check(dataset, req, endpoint,
                                      n or cfg.default_n, k or cfg.default_k,
                                      seeds=seed_pair, config=cfg, alpha=alpha)
            results[f"{req.transformation}[{req.kind}]"] = ok
    except DOMAIN_ERRORS as exc:
        _fail(str(exc))
    click.echo(json.dumps({"converged": results}))
    if not all(results.values()):
        sys.exit(1)


if __name__ == "__main__":
    main()
