import numpy as np
import pytest
from scipy.stats import spearmanr

from visreq import transforms as tr
from visreq.images import image_from_array, to_luminance
from visreq.iqa import IqaError, ViewingConditions, delta_v, vif, vsnr_visible
from visreq.iqa.wavelet import dwt2


def _noisy(image, sigma, seed=0):
    spec = tr.get_spec("gaussian_noise")
    return tr.apply(spec, image, tr.ParamAssignment({"sigma": sigma}, seed=seed))


def test_vif_self_identity(corpus_images):
    for im in corpus_images:
        lum = to_luminance(im)
        assert vif(lum, lum) == pytest.approx(1.0, abs=1e-9)


def test_vif_dimension_mismatch(corpus_images):
    a = to_luminance(corpus_images[0])
    b = to_luminance(image_from_array(corpus_images[0].pixels[:64, :64]
                                      .astype(float)))
    with pytest.raises(IqaError, match="dimension"):
        vif(a, b)


def test_vif_constant_reference_rejected():
    flat = to_luminance(image_from_array(np.full((64, 64, 3), 100.0)))
    noisy = to_luminance(_noisy(image_from_array(np.full((64, 64, 3), 100.0)),
                                0.1))
    with pytest.raises(IqaError):
        vif(flat, noisy)


def test_vif_contrast_enhancement_exceeds_one(corpus_images):
    spec = tr.get_spec("contrast")
    hits = 0
    for im in corpus_images[:5]:
        out = tr.apply(spec, im, tr.ParamAssignment({"alpha": 1.15}))
        if vif(to_luminance(im), to_luminance(out)) > 1.0:
            hits += 1
    assert hits >= 4


def test_vif_strong_noise_below_golden(corpus_images):
    # frozen during bring-up: sigma 0.3 noise lands well under 0.3
    im = corpus_images[0]
    value = vif(to_luminance(im), to_luminance(_noisy(im, 0.3)))
    assert value < 0.3


def test_vsnr_identical_images_invisible(corpus_images):
    lum = to_luminance(corpus_images[0])
    assert vsnr_visible(lum, lum, ViewingConditions()) is False


def test_vsnr_strong_noise_visible_everywhere(corpus_images):
    vc = ViewingConditions()
    for im in corpus_images:
        assert vsnr_visible(to_luminance(im), to_luminance(_noisy(im, 0.2)),
                            vc) is True


def test_vsnr_single_pixel_flip_invisible():
    rng = np.random.default_rng(0)
    base = rng.uniform(40, 215, size=(224, 224, 3))
    im = image_from_array(base)
    bumped = base.copy()
    bumped[112, 112] += 1.0
    assert vsnr_visible(to_luminance(im), to_luminance(image_from_array(bumped)),
                        ViewingConditions()) is False


def test_viewing_conditions_validate():
    with pytest.raises(ValueError):
        ViewingConditions(viewing_distance=-1.0)


def test_dwt_constant_image_has_no_detail():
    # analysis filters have unit DC gain: a flat image yields zero detail
    # coefficients at every level and a flat residual at the input value
    flat = np.full((96, 96), 0.42)
    coefs = dwt2(flat, levels=5)
    for level in coefs[:-1]:
        for band in level.values():
            assert np.abs(band).max() < 1e-10
    assert np.allclose(coefs[-1]["ll"], 0.42, atol=1e-10)
    for name in ("lh", "hl", "hh"):
        assert np.abs(coefs[-1][name]).max() < 1e-10


def test_delta_v_identity_zero(corpus_images):
    for im in corpus_images:
        score = delta_v(im, im)
        assert score.value == 0.0
        assert score.below_visibility_threshold is True


def test_delta_v_invisible_change_zero():
    rng = np.random.default_rng(1)
    base = rng.uniform(40, 215, size=(96, 96, 3))
    im = image_from_array(base)
    bumped = base.copy()
    bumped[48, 48] += 1.0
    assert delta_v(im, image_from_array(bumped)).value == 0.0


def test_delta_v_enhancement_clamps_to_zero(corpus_images):
    spec = tr.get_spec("contrast")
    out = tr.apply(spec, corpus_images[0], tr.ParamAssignment({"alpha": 1.15}))
    score = delta_v(corpus_images[0], out)
    assert score.vif_raw > 1.0
    assert score.value == 0.0


def test_delta_v_monotone_in_noise(corpus_images):
    sigmas = np.linspace(0.01, 0.38, 20)
    values = [delta_v(corpus_images[1], _noisy(corpus_images[1], s, seed=3)).value
              for s in sigmas]
    rho = spearmanr(sigmas, values).statistic
    assert rho >= 0.9
    assert 0.0 <= min(values) and max(values) <= 1.0


def test_delta_v_range_clamped(corpus_images):
    for s in (0.1, 0.25, 0.38):
        v = delta_v(corpus_images[2], _noisy(corpus_images[2], s)).value
        assert 0.0 <= v <= 1.0
