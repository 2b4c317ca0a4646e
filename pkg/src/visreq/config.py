"""Toolkit configuration: viewing conditions, directories, and defaults."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .iqa import ViewingConditions


@dataclass(frozen=True)
class ToolkitConfig:
    viewing_conditions: ViewingConditions = field(default_factory=ViewingConditions)
    frost_texture_dir: Path | None = None
    work_dir: Path = Path("visreq-work")
    default_r: int = 20
    default_alpha: float = 0.05
    default_q: float = 0.05
    default_n: int = 200
    default_k: int = 50

    @staticmethod
    def load(path: str | Path | None) -> "ToolkitConfig":
        """Load config from JSON; documented defaults apply when path is None."""
        if path is None:
            return ToolkitConfig()
        raw = json.loads(Path(path).read_text())
        vc = ViewingConditions(**raw.get("viewing_conditions", {}))
        frost = raw.get("frost_texture_dir")
        if frost is not None:
            frost = Path(frost)
            if not frost.is_dir():
                raise FileNotFoundError(f"frost_texture_dir does not exist: {frost}")
        return ToolkitConfig(
            viewing_conditions=vc,
            frost_texture_dir=frost,
            work_dir=Path(raw.get("work_dir", "visreq-work")),
            default_r=int(raw.get("default_r", 20)),
            default_alpha=float(raw.get("default_alpha", 0.05)),
            default_q=float(raw.get("default_q", 0.05)),
            default_n=int(raw.get("default_n", 200)),
            default_k=int(raw.get("default_k", 50)),
        )

    def vc_dict(self) -> dict:
        vc = self.viewing_conditions
        return {
            "viewing_distance": vc.viewing_distance,
            "display_resolution": vc.display_resolution,
            "display_peak_luminance": vc.display_peak_luminance,
            "black_level_offset": vc.black_level_offset,
            "gamma": vc.gamma,
        }
