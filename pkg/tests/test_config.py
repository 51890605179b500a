import pytest

from rbns.config import ConfigError, RunConfig, parse_config, serialize_config

MINIMAL = """
[physical]
ra = 1e5
pr = 10.0

[grid]
n1 = 64
n2 = 65
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.physical.ra == 1e5
    assert cfg.geometry.modes == ()          # flat walls
    assert cfg.boundary.alpha_bottom_mean == 1.0
    assert cfg.time.dt is None               # automatic step
    assert cfg.time.effective_burn_in() == pytest.approx(0.2 * cfg.time.t_end)


def test_mode_passthrough():
    cfg = parse_config(MINIMAL + "\n[geometry]\nmodes = 1:0.0:0.1\n")
    assert cfg.geometry.modes == ((1, 0.0, 0.1),)
    prof = cfg.geometry.profile()
    assert prof.evaluate(0.25) == pytest.approx(0.1)


def test_n2_rule_named():
    with pytest.raises(ConfigError, match="n2 >= 8"):
        parse_config(MINIMAL.replace("n2 = 65", "n2 = 4"))


def test_n1_fft_friendly():
    with pytest.raises(ConfigError, match="FFT-friendly"):
        parse_config(MINIMAL.replace("n1 = 64", "n1 = 13"))
    parse_config(MINIMAL.replace("n1 = 64", "n1 = 60"))  # 2^2 * 3 * 5 passes


def test_unknown_key_and_section_located():
    with pytest.raises(ConfigError, match=r"\[grid\] n3"):
        parse_config(MINIMAL + "\n[grid]\nn3 = 2\n".replace("[grid]\n", ""))
    with pytest.raises(ConfigError, match=r"\[nonsense\]"):
        parse_config(MINIMAL + "\n[nonsense]\nx = 1\n")


def test_type_error_located():
    with pytest.raises(ConfigError, match=r"\[physical\] ra"):
        parse_config(MINIMAL.replace("ra = 1e5", "ra = fast"))


def test_negative_amplitude_rejected():
    with pytest.raises(ConfigError, match="negative amplitude"):
        parse_config(MINIMAL + "\n[initial]\ntemp_perturbation = -0.1\n")


def test_delta_override_cap():
    with pytest.raises(ConfigError, match="delta_override"):
        parse_config(MINIMAL + "\n[bounds]\ndelta_override = 0.7\n")


def test_dt_validation():
    with pytest.raises(ConfigError, match=r"\[time\] dt"):
        parse_config(MINIMAL + "\n[time]\ndt = -0.1\n")
    cfg = parse_config(MINIMAL + "\n[time]\ndt = auto\n")
    assert cfg.time.dt is None


def test_round_trip_idempotent():
    cfg = parse_config(MINIMAL + "\n[geometry]\nmodes = 1:0.0:0.1, 2:0.25:-0.125\n")
    text = serialize_config(cfg)
    cfg2 = parse_config(text)
    assert cfg2 == cfg
    assert serialize_config(cfg2) == text


def test_round_trip_default_config():
    cfg = RunConfig()
    assert parse_config(serialize_config(cfg)) == cfg


def test_bad_case_named():
    with pytest.raises(ConfigError, match="unknown bound case"):
        parse_config(MINIMAL + "\n[bounds]\ncases = three_sevenths, wrong\n")
