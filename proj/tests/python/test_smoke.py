"""Smoke tests for the python bindings."""
import math

try:
    import wmforensics as wm
except ImportError:
    import _wmforensics as wm


def make_lm():
    return wm.SyntheticLM(seed=1, vocab_size=128, context_order=3, entropy_level=1.0)


def test_synthetic_lm_dist():
    lm = make_lm()
    d = lm.dist_next([3, 5])
    assert len(d.probs) == 128
    assert abs(sum(d.probs) - 1.0) < 1e-9
    assert d.probs == lm.dist_next([3, 5]).probs


def test_filters():
    d = wm.ProbDist([0.5, 0.3, 0.2])
    out = wm.filter_top_k(d, 2)
    assert abs(out.probs[0] - 0.625) < 1e-12
    assert out.probs[2] == 0.0
    out_p = wm.filter_top_p(d, 0.7)
    assert out_p.probs[2] == 0.0


def test_theta_and_sampling():
    key = wm.WatermarkKey.from_hex("00" * 32)
    th = wm.theta(key, [0, 1, 2, 3, 4], n_ct=5)
    assert abs(th - 0.24993306624176878) < 1e-15
    d = wm.ProbDist([0.3, 0.7])
    assert wm.sample_delta(d, 0.2) == 0
    assert wm.sample_delta(d, 0.3) == 1


def test_generate_and_detect_roundtrip():
    lm = make_lm()
    key = wm.WatermarkKey.random(5)
    params = wm.GenParams()
    params.top_k = 32
    params.max_len = 20
    seq = wm.generate_watermarked(lm, [7, 8, 9, 10, 11, 12], key, params)
    assert len(seq.tokens) == 20
    report = wm.detect(lm, key, seq, wm.DetectorConfig())
    assert report.n_it == 0
    assert not report.verdict_modified
    assert report.drllr_avg > 0.0


def test_attack_flips_modification_flag():
    lm = make_lm()
    key = wm.WatermarkKey.random(5)
    params = wm.GenParams()
    params.top_k = 32
    params.max_len = 30
    seq = wm.generate_watermarked(lm, [7, 8, 9, 10, 11, 12], key, params)
    rec = wm.apply_attack(seq, "replacement", 0.1, seed=3, vocab_size=128)
    assert len(rec.sites) == 3
    report = wm.detect(lm, key, rec.attacked, wm.DetectorConfig())
    assert report.n_it >= 1
    assert report.verdict_modified


def test_kgw_and_metrics():
    lm = make_lm()
    key = wm.WatermarkKey.random(9)
    kp = wm.KgwParams()
    kp.gen.top_k = 64
    kp.gen.max_len = 30
    seq = wm.generate_kgw(lm, [1, 2, 3], key, kp)
    z = wm.z_score(seq, key, kp, 128)
    assert math.isfinite(z)

    assert wm.roc_auc([2.0, 3.0], [0.0, 1.0]) == 1.0
    m = wm.confusion_metrics([True, False], [True, False])
    assert m["f1"] == 1.0


def test_sequence_json_roundtrip():
    lm = make_lm()
    key = wm.WatermarkKey.random(5)
    params = wm.GenParams()
    params.max_len = 5
    seq = wm.generate_watermarked(lm, [1, 2, 3, 4, 5], key, params)
    back = wm.Sequence.from_json(seq.to_json())
    assert back.tokens == seq.tokens
    assert back.watermark == "delta"


def test_domain_errors_surface():
    d = wm.ProbDist([0.5, 0.5])
    try:
        wm.filter_top_k(d, 0)
    except wm.DomainError:
        pass
    else:
        raise AssertionError("expected DomainError")
