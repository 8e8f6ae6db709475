import json

import pytest

from nashseek.config import (ConfigError, ExperimentConfig, SeekerSection, dumps_ini, from_dict,
                             load_config, loads_ini, reference_config, quadratic_config, save_config,
                             to_dict)


def test_ini_round_trip_lossless(tmp_path):
    cfg = reference_config(str(tmp_path))
    cfg.seeker.lambda0 = 0.1 + 0.2  # not representable in short decimal
    path = tmp_path / "c.ini"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert loads_ini(dumps_ini(cfg)) == cfg


def test_json_round_trip(tmp_path):
    cfg = quadratic_config(str(tmp_path), seed=7, noise_std=0.3)
    cfg.quadratic.coupling = [[0.0, 0.5], [0.25, 0.0]]
    cfg.quadratic.centers = [1.0, 2.0]
    cfg.quadratic.curvature = [1.0, 2.0]
    cfg.seeker = SeekerSection([0.1, 0.1], [1.0, 1.5], [0.0, 0.0], [1.0, 1.0], initial=[0.0, 0.0])
    path = tmp_path / "c.json"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert from_dict(json.loads(json.dumps(to_dict(cfg)))) == cfg


def test_defaults_of_reproduction():
    cfg = reference_config()
    assert cfg.seeker.lambda0 == 0.01 and cfg.seeker.horizon == 200000
    assert cfg.seeker.growth == [0.9, 0.9] and cfg.seeker.frequency == [0.9, 1.0]
    assert cfg.window_fraction == 0.1 and cfg.seeker.initial_offset == 10.0


@pytest.mark.parametrize("text,field", [
    ("[experiment]\ngame = chess\n[seeker]\ninitial = 0\n", "experiment.game"),
    ("[experiment]\ngame = quadratic\n[quadratic]\n[seeker]\nlambda0 = 0\ninitial = 0\n", "seeker.lambda0"),
    ("[experiment]\ngame = quadratic\n[quadratic]\n[seeker]\nhorizon = ten\ninitial = 0\n", "seeker.horizon"),
    ("[experiment]\ngame = quadratic\n[quadratic]\n[seeker]\ncolour = red\n", "seeker"),
    ("[experiment]\ngame = quadratic\n[seeker]\ninitial = 0\n", "quadratic"),
    ("[experiment]\ngame = quadratic\n[quadratic]\n[seeker]\n", "seeker.initial"),
    ("[experiment]\ngame = quadratic\n[quadratic]\n[seeker]\nfrequency = 1, 2\ninitial = 0\n", "seeker.frequency"),
    ("[experiment]\ngame = quadratic\n[quadratic]\n[seeker]\nclamp_nonnegative = maybe\ninitial = 0\n",
     "seeker.clamp_nonnegative"),
    ("[experiment]\ngame = quadratic\nwindow_fraction = 2\n[quadratic]\n[seeker]\ninitial = 0\n",
     "experiment.window_fraction"),
    ("[nonsense]\nx = 1\n", "nonsense"),
])
def test_errors_name_field(text, field):
    with pytest.raises(ConfigError) as info:
        loads_ini(text)
    assert info.value.field_name == field


def test_unparseable(tmp_path):
    with pytest.raises(ConfigError):
        loads_ini("no section header")
    bad = tmp_path / "x.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_json_type_checks():
    d = to_dict(quadratic_config())
    d["seed"] = 1.5
    with pytest.raises(ConfigError) as info:
        from_dict(d)
    assert info.value.field_name == "experiment.seed"


def test_minimal_ini():
    cfg = loads_ini("[experiment]\ngame = quadratic\n[quadratic]\n[seeker]\ninitial = 0.5\n")
    assert isinstance(cfg, ExperimentConfig) and cfg.seeker.initial == [0.5]
