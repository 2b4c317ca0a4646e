"""Request/response bodies for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class ViewingConditionsBody(BaseModel):
    viewing_distance: float = 19.1
    display_resolution: float = 96.0
    display_peak_luminance: float = 100.0
    black_level_offset: float = 0.03
    gamma: float = 2.2


class DeltaVRequest(BaseModel):
    original_path: str
    transformed_path: str
    viewing_conditions: ViewingConditionsBody | None = None


class DeltaVResponse(BaseModel):
    value: float
    vif_raw: float
    below_visibility_threshold: bool


class TransformationInfo(BaseModel):
    name: str
    param_domains: dict[str, tuple[float, float]]
    stochastic: bool
    cv_hazop_entries: list[str]


class TransformRequest(BaseModel):
    input_path: str
    output_path: str
    name: str
    params: dict[str, float]
    seed: int = 0


class TransformResponse(BaseModel):
    output_path: str
    delta_v: float


class EstimateRequest(BaseModel):
    trials_csv: str
    pairs_csv: str
    kind: str
    intervals: int = 20
    alpha: float = 0.05
    q: float = 0.05
    task: str = ""
    provenance: str = ""


class RequirementBody(BaseModel):
    transformation: str
    kind: str
    threshold: float
    epsilon: float | None = None
    alpha: float = 0.05
    provenance: str = ""


class EstimateResponse(BaseModel):
    task: str
    entries: list[RequirementBody]
    baseline: float


class CheckRequest(BaseModel):
    dataset_csv: str
    task: str = ""
    requirement: RequirementBody
    model_builtin: str | None = None
    model_cmd: str | None = None
    drop: float = 0.1
    at: float = 0.0
    n: int = Field(default=200, ge=2)
    k: int = Field(default=50, ge=1)
    alpha: float = 0.05
    seed: int = 7
    stratified: bool = False
    work_dir: str | None = None


class CheckResponse(BaseModel):
    verdict: str
    margin: float
    reliability_distance: float
    distance_stddev: float
    baseline_estimate: float
    transformed_estimate: float
    baseline_stddev: float
    transformed_stddev: float
    z: float
    runtime_seconds: float
    suite_seed: int
    model_seed: int
