import math

import pytest

import nlc


def test_special_parameters():
    p = nlc.LeslieParams.special()
    assert p.K1 == 1.0 and p.K3 == 4.0
    assert nlc.validate(p) == []
    assert nlc.is_unit_gh(p)
    assert p.CL() == pytest.approx(1.0)
    assert p.CU() == pytest.approx(2.0)
    c, dc = nlc.wave_speed(p, math.pi / 4)
    assert c == pytest.approx(math.sqrt(2.5))
    assert dc == pytest.approx(3 / (2 * math.sqrt(2.5)))


def test_alpha_setter_derives_gammas():
    p = nlc.LeslieParams()
    p.alpha = [0.0, -1.2, -0.2, 1.5, 0.5, -0.9]
    assert p.gamma1 == pytest.approx(1.0)
    assert p.gamma2 == pytest.approx(-1.4)
    with pytest.raises(ValueError):
        p.alpha = [1.0]


def test_kernel_and_constants():
    assert nlc.kernel(0.0, 1.0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-15)
    assert nlc.k2_constant(1.0, 1.0, 2.0) == pytest.approx(56.0)
    p = nlc.LeslieParams.special()
    assert nlc.predicted_time(p, math.pi / 4, 0.0, 0.01) == 0.5
    f = nlc.BlowupFamily()
    assert f.M == 40.0
    assert f.M > nlc.BlowupFamily.threshold(p, f.theta_star)


def test_config_errors_name_the_key():
    cfg = nlc.default_config()
    del cfg["params"]["K1"]
    with pytest.raises(ValueError, match="params.K1"):
        nlc.run(cfg)


def test_smooth_run(tmp_path):
    cfg = nlc.default_config()
    cfg.update({"scenario": "smooth", "T": 0.2, "half_width": 4.0, "output": str(tmp_path)})
    status, summary = nlc.run(cfg)
    assert status == 0
    assert summary["max_abs_slack"] <= 1e-3 * summary["energy0"]
    assert (tmp_path / "energy.csv").read_text().splitlines()[0] == (
        "t,E,dissipation,slack,maxJ,min_one_plus_cos_w,min_one_plus_cos_z"
    )
