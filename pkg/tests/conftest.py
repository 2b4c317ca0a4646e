import csv
import re
from pathlib import Path

import numpy as np
import pytest

from visreq.config import ToolkitConfig
from visreq.humandata import ImagePair
from visreq.images import image_from_array, load_image
from visreq.transforms import ParamAssignment

CORPUS_DIR = Path(__file__).resolve().parents[1] / "src" / "visreq" / "data" / "corpus"
TABLE1_PATH = CORPUS_DIR.parent / "table1_requirements.json"


@pytest.fixture(scope="session")
def corpus_paths():
    paths = sorted(CORPUS_DIR.glob("*.png"))
    assert len(paths) >= 10
    return paths


@pytest.fixture(scope="session")
def corpus_images(corpus_paths):
    return [load_image(p) for p in corpus_paths]


@pytest.fixture(scope="session")
def small_images(corpus_images):
    # 64x64 crops keep metric-heavy simulation tests fast
    return [image_from_array(im.pixels[:64, :64].astype(np.float64))
            for im in corpus_images]


@pytest.fixture(scope="session")
def small_image_dir(small_images, tmp_path_factory):
    from visreq.images import save_image
    root = tmp_path_factory.mktemp("small")
    for i, im in enumerate(small_images):
        save_image(im, root / f"img_{i:02d}.png", "png")
    return root


@pytest.fixture(scope="session")
def dataset_manifest(small_image_dir, tmp_path_factory):
    """path,label manifest over the 64x64 crops, alternating labels."""
    root = tmp_path_factory.mktemp("dataset")
    manifest = root / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "label"])
        for i, p in enumerate(sorted(small_image_dir.glob("*.png"))):
            w.writerow([str(p.resolve()), "pos" if i % 2 == 0 else "neg"])
    return manifest


@pytest.fixture()
def work_config(tmp_path):
    return ToolkitConfig(work_dir=tmp_path / "work")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion test."""
    results: dict[int, str] = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_criterion_(\d+)", getattr(rep, "nodeid", ""))
            if m and getattr(rep, "when", "call") in ("call", "setup"):
                num = int(m.group(1))
                status = "PASS" if outcome == "passed" else "FAIL"
                if results.get(num) != "FAIL":
                    results[num] = status
    if results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(
                f"ACCEPTANCE CRITERION {num}: {results[num]}")


def synthetic_pairs(delta_vs, transformation="gaussian_noise"):
    """Pairs manifest entries with prescribed visual-change values and no
    backing files, for estimator tests that never open images."""
    return [
        ImagePair(pair_id=f"p{i:05d}", original_path=Path(f"o{i}.png"),
                  transformed_path=Path(f"t{i}.png"),
                  transformation=transformation,
                  params=ParamAssignment({"sigma": 0.1}, seed=i),
                  delta_v=float(dv))
        for i, dv in enumerate(delta_vs)
    ]
