import sys
import textwrap
from pathlib import Path

import numpy as np
import pytest

from visreq import checker as ck
from visreq.estimation import RequirementInstance


def _req(threshold=0.9, kind="correctness", epsilon=None, alpha=0.05):
    return RequirementInstance(task="t", transformation="gaussian_noise",
                               kind=kind, threshold=threshold, alpha=alpha,
                               epsilon=epsilon)


@pytest.fixture(scope="module")
def dataset(dataset_manifest):
    return ck.load_dataset(dataset_manifest)


@pytest.fixture(scope="module")
def small_suite(dataset, tmp_path_factory):
    from visreq.config import ToolkitConfig
    cfg = ToolkitConfig(work_dir=tmp_path_factory.mktemp("work"))
    return ck.generate_tests(dataset, _req(), n=5, k=6, seed=11, config=cfg)


def test_load_dataset_validates(tmp_path):
    bad = tmp_path / "m.csv"
    bad.write_text("path,label\nmissing.png,pos\n")
    with pytest.raises(ck.CheckerError, match="missing image"):
        ck.load_dataset(bad)
    bad.write_text("path\nx.png\n")
    with pytest.raises(ck.CheckerError, match="path,label"):
        ck.load_dataset(bad)


def test_generate_tests_counts_and_bounds(small_suite):
    assert len(small_suite.batches) == 5
    for batch in small_suite.batches:
        assert len(batch.cases) == 6
        for case in batch.cases:
            assert case.delta_v <= 0.9
            assert case.transformed_path.exists()


def test_generate_tests_deterministic(dataset, work_config):
    a = ck.generate_tests(dataset, _req(), n=2, k=3, seed=4, config=work_config)
    b = ck.generate_tests(dataset, _req(), n=2, k=3, seed=4, config=work_config)
    assert a == b


def test_generate_tests_threshold_one_never_rejects(dataset, work_config):
    suite = ck.generate_tests(dataset, _req(threshold=1.0), n=2, k=4, seed=1,
                              config=work_config)
    assert suite.skipped_images == 0


def test_generate_tests_tight_threshold_enforced(dataset, work_config):
    suite = ck.generate_tests(dataset, _req(threshold=0.3), n=2, k=4, seed=2,
                              config=work_config)
    for batch in suite.batches:
        for case in batch.cases:
            assert case.delta_v <= 0.3


def test_stratified_covers_strata(dataset, work_config):
    suite = ck.generate_tests(dataset, _req(threshold=0.9), n=2, k=10, seed=3,
                              config=work_config, stratified=True)
    for batch in suite.batches:
        strata = {min(int(c.delta_v / 0.18), 4) for c in batch.cases}
        assert len(strata) >= 3


def test_audit_on_fresh_suite_is_clean(small_suite, work_config):
    assert ck.audit_suite(small_suite, work_config, fraction=0.2) == 0


def test_builtin_oracle_and_constant():
    queries = [ck.ModelQuery("a", Path("x.png"), "pos", 0.1),
               ck.ModelQuery("b", Path("y.png"), "neg", 0.2)]
    oracle = ck.ModelEndpoint("builtin", "oracle")
    assert ck.run_model(oracle, queries) == ["pos", "neg"]
    const = ck.ModelEndpoint("builtin", "constant_positive")
    assert ck.run_model(const, queries) == ["pos", "pos"]


def test_builtin_degrading_flips_beyond_at():
    queries = [ck.ModelQuery(f"q{i}", Path("x.png"), "pos", dv)
               for i, dv in enumerate([0.0] * 50 + [0.9] * 400)]
    ep = ck.ModelEndpoint("builtin", "degrading", drop=0.5, at=0.5, seed=1)
    labels = ck.run_model(ep, queries)
    assert labels[:50] == ["pos"] * 50
    flipped = sum(1 for lab in labels[50:] if lab == "neg")
    assert 140 <= flipped <= 260  # ~Binomial(400, 0.5)


def test_unknown_builtin_rejected():
    with pytest.raises(ck.CheckerError):
        ck.ModelEndpoint("builtin", "noop")


def _stub(tmp_path, body):
    script = tmp_path / "stub.py"
    script.write_text(textwrap.dedent(body))
    return f"{sys.executable} {script}"


GOLDEN_REQUESTS = [("case-1", "pos"), ("case-2", "neg"), ("case-3", "pos"),
                   ("case-4", "neg"), ("case-5", "pos")]


def test_subprocess_golden_transcript(tmp_path):
    # replies come back out of order; the harness must match on id
    replies = [f'{{"id": "case-{i}", "label": "{lab}"}}'
               for i, (_, lab) in enumerate(GOLDEN_REQUESTS, start=1)]
    body = f"""
        import sys
        lines = {replies[::-1]!r}
        n = sum(1 for _ in sys.stdin)
        assert n == len(lines)
        for line in lines:
            print(line)
    """
    cmd = _stub(tmp_path, body)
    queries = [ck.ModelQuery(cid, Path(f"{cid}.png"), lab, 0.0)
               for cid, lab in GOLDEN_REQUESTS]
    ep = ck.ModelEndpoint("subprocess", cmd)
    assert ck.run_model(ep, queries) == [lab for _, lab in GOLDEN_REQUESTS]


def test_subprocess_error_reply_raises(tmp_path):
    cmd = _stub(tmp_path, """
        import sys, json
        for line in sys.stdin:
            req = json.loads(line)
            print(json.dumps({"id": req["id"], "error": "unreadable"}))
    """)
    ep = ck.ModelEndpoint("subprocess", cmd)
    with pytest.raises(ck.CheckerError, match="unreadable"):
        ck.run_model(ep, [ck.ModelQuery("q", Path("x.png"), "pos", 0.0)])


def test_subprocess_missing_reply_raises(tmp_path):
    cmd = _stub(tmp_path, """
        import sys
        for _ in sys.stdin:
            pass
    """)
    ep = ck.ModelEndpoint("subprocess", cmd)
    with pytest.raises(ck.CheckerError, match="mismatch"):
        ck.run_model(ep, [ck.ModelQuery("q", Path("x.png"), "pos", 0.0)])


def test_subprocess_nonzero_exit_raises(tmp_path):
    cmd = _stub(tmp_path, "import sys; sys.exit(9)")
    ep = ck.ModelEndpoint("subprocess", cmd)
    with pytest.raises(ck.CheckerError, match="exited with 9"):
        ck.run_model(ep, [ck.ModelQuery("q", Path("x.png"), "pos", 0.0)])


def test_margin_arithmetic_exact():
    z, margin, verdict = ck.verdict_from_estimates(0.0045, 0.0061, alpha=0.05)
    assert z == 1.645
    assert abs(margin - (0.0045 + 1.645 * 0.0061)) < 1e-12
    assert verdict == "violated"


def test_verdict_zero_sigma_by_sign():
    assert ck.verdict_from_estimates(-0.01, 0.0, 0.05)[2] == "satisfied"
    assert ck.verdict_from_estimates(0.0, 0.0, 0.05)[2] == "satisfied"
    assert ck.verdict_from_estimates(0.01, 0.0, 0.05)[2] == "violated"


def test_verdict_monotone_in_alpha():
    # z decreases with alpha, so a satisfied verdict can never flip back to
    # violated as alpha grows, for any fixed estimates
    alphas = (0.01, 0.05, 0.1, 0.25, 0.4)
    zs = [ck.z_critical(a) for a in alphas]
    assert zs == sorted(zs, reverse=True)
    for dist, sd in ((-0.02, 0.01), (0.001, 0.002), (0.05, 0.01)):
        verdicts = [ck.verdict_from_estimates(dist, sd, a)[2] for a in alphas]
        flipped = [(a, b) for a, b in zip(verdicts, verdicts[1:])
                   if a == "satisfied" and b == "violated"]
        assert not flipped


def test_evaluate_oracle_satisfied(small_suite):
    report = ck.evaluate(small_suite, ck.ModelEndpoint("builtin", "oracle"))
    assert report.verdict == "satisfied"
    assert report.reliability_distance == 0.0
    assert report.margin <= 0.0
    assert report.distance_stddev == pytest.approx(
        np.hypot(report.baseline_stddev, report.transformed_stddev))


def test_evaluate_prediction_kind(dataset, work_config):
    suite = ck.generate_tests(dataset,
                              _req(kind="prediction", epsilon=0.2,
                                   threshold=0.9),
                              n=3, k=4, seed=6, config=work_config)
    for batch in suite.batches:
        assert len(batch.epsilon_cases) == 4
        for case in batch.epsilon_cases:
            assert case.delta_v <= 0.2
    report = ck.evaluate(suite, ck.ModelEndpoint("builtin", "oracle"))
    assert report.verdict == "satisfied"


def test_evaluate_degrading_detects_bad_model(small_suite):
    ep = ck.ModelEndpoint("builtin", "degrading", drop=0.5, at=0.0, seed=2)
    report = ck.evaluate(small_suite, ep)
    assert report.verdict == "violated"
    assert report.reliability_distance > 0


def test_batch_metric_normality(dataset, tmp_path_factory):
    # central-limit sanity: per-batch means from the degrading model are not
    # wildly skewed at moderate k
    from scipy.stats import skew
    from visreq.config import ToolkitConfig
    cfg = ToolkitConfig(work_dir=tmp_path_factory.mktemp("w"))
    suite = ck.generate_tests(dataset, _req(), n=60, k=10, seed=13, config=cfg)
    ep = ck.ModelEndpoint("builtin", "degrading", drop=0.3, at=0.0, seed=3)
    report = ck.evaluate(suite, ep)
    assert abs(skew(report.transformed_batch_values)) < 1.0


def test_convergence_oracle_true(dataset, work_config):
    ok = ck.convergence_check(dataset, _req(),
                              ck.ModelEndpoint("builtin", "oracle"),
                              n=4, k=4, config=work_config)
    assert ok is True


def test_report_round_trip_csv(small_suite, tmp_path):
    report = ck.evaluate(small_suite, ck.ModelEndpoint("builtin", "oracle"))
    doc = ck.report_to_dict(report)
    assert doc["verdict"] == "satisfied"
    assert doc["requirement"]["transformation"] == "gaussian_noise"
    out = tmp_path / "batches.csv"
    ck.write_batch_csv(report, out)
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "batch,baseline_metric,transformed_metric"
    assert len(rows) == 1 + len(small_suite.batches)
