import json
import math

import pytest

from run_config import build_run_config, get_preset, list_presets, load_run_config, to_system_params, with_param
from utils.errors import ConfigError
from utils.params import PotentialKind, derive


def test_aliases_resolve_to_presets():
    assert get_preset("oscillation") == get_preset("coherent")
    assert get_preset("Mismatched")["params"]["omega_down_MHz"] == 16.0
    assert {"dissipative", "coherent", "matched", "mismatched", "subtractor", "vdw"} <= set(list_presets())


def test_unknown_preset():
    with pytest.raises(ConfigError):
        get_preset("no-such-preset")


def test_file_overrides_preset_and_flags_override_file():
    cfg = build_run_config({"preset": "coherent", "params": {"od_c": 50.0}, "jobs": 2},
                           {"jobs": 4, "out_dir": None})
    assert cfg.preset == "coherent"
    assert cfg.params.od_c == 50.0
    assert cfg.params.omega_up_MHz == 8.0
    assert cfg.jobs == 4
    assert cfg.out_dir == "out"


def test_validation_error_names_the_field():
    with pytest.raises(ConfigError) as exc:
        build_run_config({"preset": "matched", "params": {"gamma_MHz": -3.0}})
    assert "params.gamma_MHz" in str(exc.value)
    with pytest.raises(ConfigError) as exc:
        build_run_config({"preset": "coherent", "sweep": {"quantity": "od_c", "min": 5, "max": 5, "points": 2}})
    assert "sweep" in str(exc.value)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as exc:
        build_run_config({"preset": "matched", "params": {"omega_MHz": 3.0}})
    assert "params.omega_MHz" in str(exc.value)


def test_units_converted():
    p = to_system_params(build_run_config({"preset": "matched"}).params)
    assert p.omega_up == pytest.approx(2 * math.pi * 8.0)
    assert p.length_L == pytest.approx(48.0)
    assert derive(p).xi == pytest.approx(0.01)


def test_physical_dressing_config():
    cfg = build_run_config({"params": {
        "omega_up_MHz": 8, "omega_down_MHz": 8, "gamma_MHz": 3, "od_c": 35,
        "dressing": {"omega_dress_MHz": 1.0, "delta_dress_MHz": 10.0, "c6_MHz_um6": 10.0 * 12.0 ** 6}}})
    p = to_system_params(cfg.params)
    assert p.length_L == pytest.approx(48.0)
    assert derive(p).rc == pytest.approx(12.0)


def test_vdw_length_follows_distance():
    p = to_system_params(build_run_config({"preset": "vdw"}).params)
    assert p.potential_kind is PotentialKind.VDW
    assert p.length_L == pytest.approx(100.0)


def test_with_param_dotted():
    cfg = build_run_config({"preset": "matched"})
    assert with_param(cfg.params, "dressing.xi", 0.5).dressing.xi == 0.5
    assert with_param(cfg.params, "od_c", 75.0).od_c == 75.0
    with pytest.raises(ConfigError):
        with_param(cfg.params, "nope", 1.0)
    with pytest.raises(ConfigError):
        with_param(cfg.params, "od_c", -1.0)


def test_load_json_and_yaml(tmp_path):
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"preset": "matched", "jobs": 3}), encoding="utf-8")
    assert load_run_config(str(js)).jobs == 3
    ym = tmp_path / "run.yaml"
    ym.write_text("preset: velocity-matched\nemit_plots: true\n", encoding="utf-8")
    assert load_run_config(str(ym)).emit_plots is True
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(str(bad))
