# -*- coding: utf-8 -*-
"""
run_config.py
Run configuration for every rydex subcommand.
- Reads a JSON (or YAML) run file.
- Merges a named preset from the local catalog (YAML if available, else JSON fallback).
- Validates the result and converts user units (MHz, μm) to the internal ones (rad/μs, μm).
Usage:
    from run_config import load_run_config, to_system_params
    cfg = load_run_config("data/configs/spectrum.json", overrides={"jobs": 4})
    params = to_system_params(cfg.params)
"""

from __future__ import annotations
import copy
import json
import os
import threading
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from utils.errors import ConfigError
from utils.params import DressingParams, PotentialKind, SystemParams, mhz

# Optional YAML support
try:
    import yaml  # type: ignore
except Exception:
    yaml = None

_LOCK = threading.Lock()

PRESETS_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "presets.yaml")

ALIASES = {
    "dissipative": ["dissipative", "saturation"],
    "coherent": ["coherent", "oscillation"],
    "matched": ["matched", "velocity-matched", "pulse"],
    "mismatched": ["mismatched", "velocity-mismatched"],
    "subtractor": ["subtractor", "two-photon"],
    "vdw": ["vdw", "van-der-waals", "direct"],
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DressingConfig(_Strict):
    xi: Optional[float] = Field(None, ge=0)
    rc_um: Optional[float] = Field(None, gt=0)
    omega_dress_MHz: Optional[float] = Field(None, gt=0)
    delta_dress_MHz: Optional[float] = Field(None, gt=0)
    c6_MHz_um6: Optional[float] = Field(None, gt=0)
    delta_ratio: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _either_xi_or_physical(self):
        if self.xi is not None:
            if self.rc_um is None:
                raise ValueError("rc_um is required together with xi")
            return self
        missing = [k for k in ("omega_dress_MHz", "delta_dress_MHz", "c6_MHz_um6") if getattr(self, k) is None]
        if missing:
            raise ValueError(f"give xi + rc_um, or all of omega_dress_MHz, delta_dress_MHz, c6_MHz_um6 (missing {missing})")
        return self


class PotentialConfig(_Strict):
    kind: Literal["dressed", "vdw"] = "dressed"
    d_perp_um: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _vdw_needs_distance(self):
        if self.kind == "vdw" and self.d_perp_um is None:
            raise ValueError("d_perp_um is required for the vdw potential")
        return self


class ParamsConfig(_Strict):
    omega_up_MHz: float = Field(gt=0)
    omega_down_MHz: float = Field(gt=0)
    gamma_MHz: float = Field(gt=0)
    od_c: float = Field(gt=0)
    length_um: Optional[float] = Field(None, gt=0)
    length_over_scale: float = Field(4.0, gt=0)
    r_perp_um: float = Field(0.0, ge=0)
    waist_um: float = Field(2.0, gt=0)
    lambda0_um: float = Field(0.78, gt=0)
    enforce_length: bool = True
    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    dressing: DressingConfig


class SweepConfig(_Strict):
    quantity: str
    min: float
    max: float
    points: int = Field(ge=2)
    scale: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _ordered(self):
        if not self.min < self.max:
            raise ValueError("min must be smaller than max")
        return self


class CacheConfig(_Strict):
    enabled: bool = True
    path: str = "data/result_cache"
    ttl_hours: float = Field(720.0, gt=0)


class ScatterSection(_Strict):
    omega_over_Gamma: float = 0.0
    beam_average: bool = False
    self_check: bool = False
    dz_over_scale: float = Field(0.005, gt=0)
    rings: int = Field(64, ge=4)
    angles: int = Field(32, ge=4)


class SpectrumSection(_Strict):
    omega_min_over_Gamma: float = -2.0
    omega_max_over_Gamma: float = 2.0
    points: int = Field(201, ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.omega_min_over_Gamma < self.omega_max_over_Gamma:
            raise ValueError("omega_min_over_Gamma must be smaller than omega_max_over_Gamma")
        return self


class PulseSection(_Strict):
    dt_over_Gamma: float = Field(10.0, gt=0)
    n_cells: int = Field(2000, ge=50)
    cfl: float = Field(0.9, gt=0)
    fft_points: int = Field(2048, ge=1024)
    span: float = Field(16.0, ge=8)
    lossy: bool = True


class SubtractSection(_Strict):
    n: int = Field(2, ge=1)
    theta: float = 0.0
    r2_points: int = Field(41, ge=2)
    alpha2: List[float] = Field(default_factory=lambda: [2.0, 5.0, 10.0, 50.0, 100.0])
    theta_points: int = Field(61, ge=2)
    fock_n: List[int] = Field(default_factory=lambda: [2, 3])
    fock_r2: float = Field(0.0199, gt=0, lt=1)
    matrix_r2: float = Field(0.5, gt=0, lt=1)
    matrix_stride: int = Field(10, ge=1)


class OptimizeSection(_Strict):
    alpha2: List[float] = Field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0, 50.0, 100.0])
    theta: float = 0.0
    theta_points: int = Field(61, ge=2)


class TwoPhotonSection(_Strict):
    r2: List[float] = Field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    n_eff: float = Field(0.1, gt=0)
    cells: int = Field(200, ge=200)
    bins: int = Field(160, ge=2)
    cfl: float = Field(0.9, gt=0)
    window: float = Field(4.5, gt=0)
    literal_s32: bool = False
    t_sign: Literal["positive", "negative"] = "positive"   # negative: T < 0, Ω↑ > Ω↓


class RepeaterSection(_Strict):
    detector_efficiency: float = Field(1.0, ge=0, le=1)
    phi: float = 0.0
    t_re: Optional[float] = None
    t_im: float = 0.0
    r_re: Optional[float] = None
    r_im: float = 0.0

    @model_validator(mode="after")
    def _both_or_none(self):
        if (self.t_re is None) != (self.r_re is None):
            raise ValueError("give both t_re and r_re, or neither")
        return self


class FeasibilitySection(_Strict):
    gamma_s_MHz: float = Field(0.1, ge=0)
    gamma_c_MHz: float = Field(0.005, ge=0)
    dt_over_Gamma: float = Field(10.0, ge=0)


class RunConfig(_Strict):
    preset: Optional[str] = None
    params: ParamsConfig
    sweep: Optional[SweepConfig] = None
    scatter: ScatterSection = Field(default_factory=ScatterSection)
    spectrum: SpectrumSection = Field(default_factory=SpectrumSection)
    pulse: PulseSection = Field(default_factory=PulseSection)
    subtract: SubtractSection = Field(default_factory=SubtractSection)
    optimize: OptimizeSection = Field(default_factory=OptimizeSection)
    two_photon: TwoPhotonSection = Field(default_factory=TwoPhotonSection)
    repeater: RepeaterSection = Field(default_factory=RepeaterSection)
    feasibility: FeasibilitySection = Field(default_factory=FeasibilitySection)
    out_dir: str = "out"
    emit_plots: bool = False
    jobs: int = Field(1, ge=1)
    cache: CacheConfig = Field(default_factory=CacheConfig)


def _canonicalize(name: str) -> str:
    n = str(name or "").strip().lower()
    for canon, words in ALIASES.items():
        if n in words:
            return canon
    return n


def _load_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            if path.lower().endswith((".yaml", ".yml")):
                if yaml is None:
                    raise ConfigError("YAML config given but pyyaml is not installed")
                data = yaml.safe_load(f) or {}
            else:
                data = json.load(f)
        except (ValueError, getattr(yaml, "YAMLError", ValueError)) as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def _load_catalog(path: str) -> dict:
    if yaml and path.lower().endswith(".yaml"):
        if not os.path.exists(path):
            return {}
        with open(path, "r", encoding="utf-8") as f:
            return yaml.safe_load(f) or {}
    # JSON fallback (if YAML not available)
    alt = path if path.lower().endswith(".json") else (os.path.splitext(path)[0] + ".json")
    if not os.path.exists(alt):
        return {}
    with open(alt, "r", encoding="utf-8") as f:
        return json.load(f)


def get_preset(name: str, catalog_path: str = PRESETS_PATH) -> dict:
    key = _canonicalize(name)
    with _LOCK:
        catalog = _load_catalog(catalog_path)
    if key not in catalog:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(catalog)}")
    return copy.deepcopy(catalog[key])


def list_presets(catalog_path: str = PRESETS_PATH) -> List[str]:
    with _LOCK:
        return sorted(_load_catalog(catalog_path))


def deep_merge(base: dict, top: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (top or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _format_errors(exc: ValidationError) -> str:
    return "; ".join(f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in exc.errors())


def build_run_config(data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None,
                     catalog_path: str = PRESETS_PATH) -> RunConfig:
    """preset < file < overrides; flags that are None are ignored."""
    merged = dict(data or {})
    if merged.get("preset"):
        merged = deep_merge(get_preset(merged["preset"], catalog_path), merged)
        merged["preset"] = _canonicalize(merged["preset"])
    clean = {k: v for k, v in (overrides or {}).items() if v is not None}
    merged = deep_merge(merged, clean)
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {_format_errors(e)}") from None


def load_run_config(path: str, overrides: Optional[Dict[str, Any]] = None,
                    catalog_path: str = PRESETS_PATH) -> RunConfig:
    return build_run_config(_load_file(path), overrides, catalog_path)


def to_system_params(cfg: ParamsConfig) -> SystemParams:
    dr = cfg.dressing
    if dr.xi is not None:
        dressing = DressingParams(xi_override=dr.xi, rc=dr.rc_um, delta_ratio=dr.delta_ratio)
        rc = dr.rc_um
    else:
        dressing = DressingParams(omega_dress=mhz(dr.omega_dress_MHz), delta_dress=mhz(dr.delta_dress_MHz),
                                  c6=mhz(dr.c6_MHz_um6), delta_ratio=dr.delta_ratio)
        rc = (dr.c6_MHz_um6 / dr.delta_dress_MHz) ** (1.0 / 6.0)
    kind = PotentialKind(cfg.potential.kind)
    scale = cfg.potential.d_perp_um if kind is PotentialKind.VDW else rc
    length = cfg.length_um if cfg.length_um is not None else cfg.length_over_scale * scale
    return SystemParams(
        omega_up=mhz(cfg.omega_up_MHz),
        omega_down=mhz(cfg.omega_down_MHz),
        gamma=mhz(cfg.gamma_MHz),
        od_c=cfg.od_c,
        dressing=dressing,
        length_L=length,
        r_perp=cfg.r_perp_um,
        waist_w=cfg.waist_um,
        lambda0=cfg.lambda0_um,
        potential_kind=kind,
        d_perp=cfg.potential.d_perp_um,
        enforce_length=cfg.enforce_length,
    )


def with_param(cfg: ParamsConfig, quantity: str, value: float) -> ParamsConfig:
    """Copy of cfg with one (dotted) field replaced, re-validated."""
    data = cfg.model_dump()
    node = data
    parts = quantity.split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"sweep quantity {quantity!r} is not a params field")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"sweep quantity {quantity!r} is not a params field")
    node[parts[-1]] = value
    try:
        return ParamsConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"sweep value {quantity}={value!r}: {_format_errors(e)}") from None
