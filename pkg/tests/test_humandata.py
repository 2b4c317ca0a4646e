import csv

import numpy as np
import pytest

from conftest import synthetic_pairs
from visreq import humandata as hd
from visreq import transforms as tr
from visreq.images import save_image
from visreq.iqa import delta_v


def _model(**kw):
    defaults = dict(base_accuracy=0.97, drop_at=0.6, slope=40.0,
                    floor_accuracy=0.60, seed=0)
    defaults.update(kw)
    return hd.HumanModel(**defaults)


def test_simulate_five_subjects_thousand_pairs_two_roles():
    pairs = synthetic_pairs(np.linspace(0.0, 1.0, 1000))
    ts = hd.simulate_humans(pairs, _model(), subjects_per_image=5)
    assert len(ts.trials) == 10_000
    assert {t.shown for t in ts.trials} == {"original", "transformed"}


def test_simulate_constant_model_matches_accuracy():
    pairs = synthetic_pairs(np.linspace(0.0, 1.0, 2000))
    model = _model(base_accuracy=0.95, floor_accuracy=0.95)
    ts = hd.simulate_humans(pairs, model, subjects_per_image=5)
    shown_t = [t for t in ts.trials if t.shown == "transformed"]
    acc = np.mean([t.response == t.ground_truth for t in shown_t])
    se = np.sqrt(0.95 * 0.05 / len(shown_t))
    assert abs(acc - 0.95) <= 2 * se


def test_simulate_floor_reached_past_drop():
    pairs = synthetic_pairs(np.random.default_rng(0).uniform(0.7, 1.0, 3000))
    ts = hd.simulate_humans(pairs, _model(), subjects_per_image=5)
    shown_t = [t for t in ts.trials if t.shown == "transformed"]
    acc = np.mean([t.response == t.ground_truth for t in shown_t])
    se = np.sqrt(0.6 * 0.4 / len(shown_t))
    assert abs(acc - 0.60) <= 2 * se


def test_simulate_deterministic():
    pairs = synthetic_pairs([0.1, 0.5, 0.9])
    a = hd.simulate_humans(pairs, _model(seed=7), 3)
    b = hd.simulate_humans(pairs, _model(seed=7), 3)
    assert a.trials == b.trials


def test_trials_round_trip(tmp_path):
    pairs = synthetic_pairs(np.linspace(0.0, 1.0, 50))
    ts = hd.simulate_humans(pairs, _model(), 2, task="rt")
    hd.save_trials(ts.trials, tmp_path / "trials.csv")
    hd.save_pairs(pairs, tmp_path / "pairs.csv")
    back = hd.parse_trials(tmp_path / "trials.csv", tmp_path / "pairs.csv",
                           task="rt")
    assert back.trials == ts.trials
    assert back.transformation == ts.transformation


def test_pairs_round_trip(tmp_path):
    pairs = synthetic_pairs([0.0, 0.25, 1.0])
    hd.save_pairs(pairs, tmp_path / "pairs.csv")
    back = hd.load_pairs(tmp_path / "pairs.csv")
    assert [p.delta_v for p in back] == [p.delta_v for p in pairs]
    assert [p.params for p in back] == [p.params for p in pairs]


def test_duplicate_subject_pair_exposure_names_row(tmp_path):
    pairs = synthetic_pairs([0.3])
    hd.save_pairs(pairs, tmp_path / "pairs.csv")
    rows = [
        ["t0", "p00000", "transformed", "s1", "pos", "pos"],
        ["t1", "p00000", "transformed", "s1", "neg", "pos"],
    ]
    with open(tmp_path / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(hd.TRIALS_HEADER)
        w.writerows(rows)
    with pytest.raises(hd.TrialDataError, match="row 3"):
        hd.parse_trials(tmp_path / "trials.csv", tmp_path / "pairs.csv")


def test_dangling_pair_reference(tmp_path):
    hd.save_pairs(synthetic_pairs([0.3]), tmp_path / "pairs.csv")
    with open(tmp_path / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(hd.TRIALS_HEADER)
        w.writerow(["t0", "ghost", "transformed", "s1", "pos", "pos"])
    with pytest.raises(hd.TrialDataError, match="ghost"):
        hd.parse_trials(tmp_path / "trials.csv", tmp_path / "pairs.csv")


def test_missing_column_rejected(tmp_path):
    hd.save_pairs(synthetic_pairs([0.3]), tmp_path / "pairs.csv")
    with open(tmp_path / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial_id", "pair_id", "shown", "subject_id", "response"])
        w.writerow(["t0", "p00000", "transformed", "s1", "pos"])
    with pytest.raises(hd.TrialDataError, match="ground_truth"):
        hd.parse_trials(tmp_path / "trials.csv", tmp_path / "pairs.csv")


def test_bad_label_rejected():
    with pytest.raises(hd.TrialDataError):
        hd.Trial("t0", "p0", "transformed", "s1", "maybe", "pos")
    with pytest.raises(hd.TrialDataError):
        hd.Trial("t0", "p0", "sideways", "s1", "pos", "pos")


def test_annotate_pairs_identity_and_idempotence(corpus_paths, tmp_path):
    src = corpus_paths[0]
    pair = hd.ImagePair(pair_id="p0", original_path=src, transformed_path=src,
                        transformation="brightness",
                        params=tr.ParamAssignment({"factor": 1.0}))
    annotated = hd.annotate_pairs([pair])
    assert annotated[0].delta_v == 0.0
    again = hd.annotate_pairs(annotated)
    assert again[0].delta_v == 0.0


def test_annotation_spans_high_delta_v(corpus_images, tmp_path):
    # 10 noise levels across the sigma domain must reach strong visual change
    spec = tr.get_spec("gaussian_noise")
    src = corpus_images[0]
    values = []
    for i, sigma in enumerate(np.linspace(0.01, 0.38, 10)):
        out = tr.apply(spec, src, tr.ParamAssignment({"sigma": float(sigma)},
                                                     seed=i))
        p_orig = tmp_path / "orig.png"
        p_trans = tmp_path / f"t{i}.png"
        if not p_orig.exists():
            save_image(src, p_orig, "png")
        save_image(out, p_trans, "png")
        pair = hd.ImagePair(pair_id=f"p{i}", original_path=p_orig,
                            transformed_path=p_trans,
                            transformation="gaussian_noise",
                            params=tr.ParamAssignment({"sigma": float(sigma)},
                                                      seed=i))
        values.append(hd.annotate_pairs([pair])[0].delta_v)
    assert max(values) > 0.8


def test_human_model_validation():
    with pytest.raises(hd.TrialDataError):
        _model(floor_accuracy=0.3)
    with pytest.raises(hd.TrialDataError):
        _model(drop_at=1.5)
    with pytest.raises(hd.TrialDataError):
        _model(slope=-1.0)
