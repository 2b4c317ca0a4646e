"""HTTP facade over the toolkit: visual-change scoring, transformation
application, threshold estimation, and requirement checking. Paths in request
bodies refer to the service host's filesystem; the CLI remains the primary
interface for local work.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import checker as ck
from .. import estimation as est
from .. import humandata as hd
from .. import transforms as tr
from ..config import ToolkitConfig
from ..images import ImageError, load_image, save_image
from ..iqa import IqaError, delta_v
from ..iqa.vsnr import ViewingConditions
from . import schemas as sc

DOMAIN_ERRORS = (ImageError, IqaError, tr.TransformError, hd.TrialDataError,
                 est.EstimationError, ck.CheckerError, OSError, ValueError,
                 KeyError)


def create_app(config: ToolkitConfig | None = None) -> FastAPI:
    config = config or ToolkitConfig()
    app = FastAPI(title="visreq",
                  description="Human-baselined reliability requirements for "
                              "machine-vision classifiers")

    def _vc(body: sc.ViewingConditionsBody | None) -> ViewingConditions:
        if body is None:
            return config.viewing_conditions
        return ViewingConditions(**body.model_dump())

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/transformations", response_model=list[sc.TransformationInfo])
    def transformations():
        return [sc.TransformationInfo(name=s.name,
                                      param_domains=dict(s.param_domains),
                                      stochastic=s.stochastic,
                                      cv_hazop_entries=list(s.cv_hazop_entries))
                for s in tr.registry()]

    @app.post("/deltav", response_model=sc.DeltaVResponse)
    def deltav(req: sc.DeltaVRequest):
        try:
            score = delta_v(load_image(req.original_path),
                            load_image(req.transformed_path),
                            _vc(req.viewing_conditions))
        except DOMAIN_ERRORS as exc:
            raise HTTPException(400, str(exc))
        return sc.DeltaVResponse(
            value=score.value, vif_raw=score.vif_raw,
            below_visibility_threshold=score.below_visibility_threshold)

    @app.post("/transform", response_model=sc.TransformResponse)
    def transform(req: sc.TransformRequest):
        try:
            spec = tr.get_spec(req.name)
            params = tr.ParamAssignment(values=req.params, seed=req.seed)
            params.validate(spec)
            original = load_image(req.input_path)
            out = tr.apply(spec, original, params, config.frost_texture_dir)
            suffix = Path(req.output_path).suffix.lstrip(".") or "png"
            save_image(out, req.output_path, suffix)
            dv = delta_v(original, out, config.viewing_conditions).value
        except DOMAIN_ERRORS as exc:
            raise HTTPException(400, str(exc))
        return sc.TransformResponse(output_path=req.output_path, delta_v=dv)

    @app.post("/estimate", response_model=sc.EstimateResponse)
    def estimate(req: sc.EstimateRequest):
        try:
            trial_set = hd.parse_trials(req.trials_csv, req.pairs_csv,
                                        task=req.task)
            result = est.estimate_threshold(trial_set, req.kind,
                                            r=req.intervals, alpha=req.alpha,
                                            q=req.q)
            instances = est.instantiate_requirements(
                [(trial_set.transformation, result)],
                task=req.task or trial_set.task, provenance=req.provenance)
        except DOMAIN_ERRORS as exc:
            raise HTTPException(400, str(exc))
        return sc.EstimateResponse(
            task=instances[0].task,
            entries=[sc.RequirementBody(transformation=r.transformation,
                                        kind=r.kind, threshold=r.threshold,
                                        epsilon=r.epsilon, alpha=r.alpha,
                                        provenance=r.provenance)
                     for r in instances],
            baseline=result.baseline)

    @app.post("/check", response_model=sc.CheckResponse)
    def check(req: sc.CheckRequest):
        try:
            if (req.model_cmd is None) == (req.model_builtin is None):
                raise HTTPException(
                    422, "exactly one of model_cmd/model_builtin required")
            if req.model_cmd is not None:
                endpoint = ck.ModelEndpoint("subprocess", req.model_cmd,
                                            seed=req.seed)
            else:
                endpoint = ck.ModelEndpoint("builtin", req.model_builtin,
                                            drop=req.drop, at=req.at,
                                            seed=req.seed)
            b = req.requirement
            instance = est.RequirementInstance(
                task=req.task, transformation=b.transformation, kind=b.kind,
                threshold=b.threshold, alpha=b.alpha, provenance=b.provenance,
                epsilon=b.epsilon)
            cfg = config if req.work_dir is None else ToolkitConfig(
                viewing_conditions=config.viewing_conditions,
                frost_texture_dir=config.frost_texture_dir,
                work_dir=Path(req.work_dir))
            dataset = ck.load_dataset(req.dataset_csv)
            suite = ck.generate_tests(dataset, instance, req.n, req.k,
                                      seed=req.seed, config=cfg,
                                      stratified=req.stratified)
            report = ck.evaluate(suite, endpoint, req.alpha)
        except DOMAIN_ERRORS as exc:
            raise HTTPException(400, str(exc))
        return sc.CheckResponse(
            verdict=report.verdict, margin=report.margin,
            reliability_distance=report.reliability_distance,
            distance_stddev=report.distance_stddev,
            baseline_estimate=report.baseline_estimate,
            transformed_estimate=report.transformed_estimate,
            baseline_stddev=report.baseline_stddev,
            transformed_stddev=report.transformed_stddev,
            z=report.z, runtime_seconds=report.runtime_seconds,
            suite_seed=report.suite_seed, model_seed=report.model_seed)

    return app
