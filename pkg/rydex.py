# rydex.py
# -*- coding: utf-8 -*-
"""
Command line entry point: one subcommand per computation, CSV + JSON artifacts per run.

    python rydex.py scatter-sweep --config data/configs/scatter_sweep.json --jobs 4 --plot
    python rydex.py feasibility --config data/configs/feasibility.json --out out/feas
"""

import os, sys, uuid, math, argparse
from dataclasses import asdict
from typing import Callable, Dict, List, Optional

ROOT = os.path.dirname(os.path.abspath(__file__))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

import numpy as np
import pandas as pd

# === internal imports ===
from run_config import RunConfig, load_run_config, to_system_params, with_param
from utils.errors import RydexError, ConfigError
from utils.logging_setup import init_logging, get_logger, set_correlation_id, log_exception, fields, context
from utils.params import derive, feasibility, mhz
from utils.scatter1d import (ScatterCoeffs, ScatterSettings, BeamQuadrature, band_limit, beam_average,
                             free_transmission, solve_scattering, spectrum)
from utils.timedomain import pulse_for, synthesize_response, evolve_dsp, overlap, l2_error
from utils.subtractor import (RootNotBracketedError, SubtractorInput, coherent_density_matrix, fock_density_matrix,
                              fock_purity_vs_phase, optimize_rate, purity_vs_phase, tradeoff_curve)
from utils.twophoton import (GridSpec, analytic_reference, evolve_two_photon, phase_matched_params,
                             pulse_for_density, reduce_density_matrix)
from utils.repeater import run_protocol
from utils.exporters import to_csv, to_json, envelope
from utils.result_cache import ResultCache, hash_point
from utils.sweeps import map_points, sweep_values
from utils import plots

logger = get_logger("cli")

COMMANDS: Dict[str, Callable] = {}


def command(name: str):
    def register(fn):
        COMMANDS[name] = fn
        return fn
    return register


# ========= Helpers =========
def _out(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out_dir, name)


def _derived_dict(params) -> dict:
    return derive(params).as_dict()


def _settings(cfg: RunConfig) -> ScatterSettings:
    return ScatterSettings(dz_over_scale=cfg.scatter.dz_over_scale, self_check=cfg.scatter.self_check)


def _matrix_frame(x: np.ndarray, matrix: np.ndarray, stride: int = 1, **labels) -> pd.DataFrame:
    xs, m = x[::stride], matrix[::stride, ::stride]
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    frame = pd.DataFrame({"x_us": xx.ravel(), "y_us": yy.ravel(), "rho_over_eta": m.ravel()})
    for k, v in labels.items():
        frame.insert(0, k, v)
    return frame


# ========= scatter-sweep =========
def _scatter_point(job: dict) -> dict:
    """One sweep point; top-level so the process pool can pickle it."""
    params, settings = job["params"], job["settings"]
    d = derive(params)
    omega = job["omega_over_Gamma"] * d.eit_bandwidth
    rows = [dict(solver="1d", **solve_scattering(params, omega, settings=settings, derived=d).row())]
    if job["beam"]:
        quad = BeamQuadrature(rings=job["rings"], angles=job["angles"])
        rows.append(dict(solver="beam", **beam_average(params, omega, settings, d, quad).row()))
    return {"rows": rows}


@command("scatter-sweep")
def cmd_scatter_sweep(cfg: RunConfig) -> List[str]:
    if cfg.sweep is None:
        raise ConfigError("scatter-sweep needs a 'sweep' section")
    values = sweep_values(cfg.sweep)
    q = cfg.sweep.quantity
    settings = _settings(cfg)
    jobs = []
    for v in values:
        params = to_system_params(with_param(cfg.params, q, float(v)))
        jobs.append({"params": params, "settings": settings, "beam": cfg.scatter.beam_average,
                     "omega_over_Gamma": cfg.scatter.omega_over_Gamma,
                     "rings": cfg.scatter.rings, "angles": cfg.scatter.angles})

    cache = ResultCache(path=cfg.cache.path, ttl_hours=cfg.cache.ttl_hours, enabled=cfg.cache.enabled)
    keys = [hash_point({"params": j["params"].as_dict(), "settings": asdict(j["settings"]),
                        **{k: j[k] for k in ("beam", "omega_over_Gamma", "rings", "angles")}}) for j in jobs]
    results: List[Optional[dict]] = [cache.get(k) for k in keys]
    todo = [i for i, r in enumerate(results) if r is None]
    logger.info("scatter.sweep " + fields(quantity=q, points=len(jobs), cached=len(jobs) - len(todo)))
    with context(logger, "scatter.sweep.run", points=len(todo), jobs=cfg.jobs):
        fresh = map_points(_scatter_point, [jobs[i] for i in todo], cfg.jobs)
    for i, res in zip(todo, fresh):
        results[i] = res
        cache.set(keys[i], res)
    cache.close()

    rows = []
    for v, res in zip(values, results):
        for r in res["rows"]:
            rows.append({q: float(v), **r})
    frame = pd.DataFrame(rows)
    base = to_system_params(cfg.params)
    written = [to_csv(_out(cfg, "scatter_sweep.csv"), frame)]
    written.append(to_json(_out(cfg, "scatter_sweep.json"), envelope(
        cfg.model_dump(), _derived_dict(base), command="scatter-sweep",
        solver={"dz_over_scale": settings.dz_over_scale, "band_fraction": settings.band_fraction,
                "beam_rings": cfg.scatter.rings, "beam_angles": cfg.scatter.angles})))
    if cfg.emit_plots:
        for solver, part in frame.groupby("solver"):
            written.append(plots.line_plot(part, q, ["|T|2", "|R|2", "loss"],
                                           _out(cfg, f"scatter_sweep_{solver}.svg"), title=solver))
    return written


# ========= spectrum / pulse =========
@command("spectrum")
def cmd_spectrum(cfg: RunConfig) -> List[str]:
    params = to_system_params(cfg.params)
    d = derive(params)
    sp = cfg.spectrum
    x = np.linspace(sp.omega_min_over_Gamma, sp.omega_max_over_Gamma, sp.points)
    grid = x * d.eit_bandwidth
    settings = _settings(cfg)
    with context(logger, "spectrum.solve", points=sp.points):
        result = spectrum(params, grid, settings=settings, derived=d)
    free_dn, free_up = free_transmission(params, grid, d)
    frame = pd.DataFrame({
        "omega_over_Gamma": x,
        "|T|2": np.abs(result.t) ** 2,
        "|R|2": np.abs(result.r) ** 2,
        "T_re": result.t.real, "T_im": result.t.imag,
        "R_re": result.r.real, "R_im": result.r.imag,
        "free_down": free_dn, "free_up": free_up,
        "in_band": np.abs(grid) <= band_limit(params, d, settings.band_fraction),
    })
    written = [to_csv(_out(cfg, "spectrum.csv"), frame)]
    written.append(to_json(_out(cfg, "spectrum.json"), envelope(
        cfg.model_dump(), d.as_dict(), command="spectrum",
        band_limit_over_Gamma=band_limit(params, d, settings.band_fraction) / d.eit_bandwidth)))
    if cfg.emit_plots:
        written.append(plots.line_plot(frame, "omega_over_Gamma", ["|T|2", "|R|2", "free_down"],
                                       _out(cfg, "spectrum.svg"), xlabel="ω/Γ"))
    return written


@command("pulse")
def cmd_pulse(cfg: RunConfig) -> List[str]:
    params = to_system_params(cfg.params)
    d = derive(params)
    pc = cfg.pulse
    pulse = pulse_for(params, pc.dt_over_Gamma, d)
    syn = synthesize_response(params, pulse, settings=_settings(cfg), derived=d,
                              n_points=pc.fft_points, span=pc.span)
    dsp = evolve_dsp(params, pulse, derived=d, n_cells=pc.n_cells, cfl=pc.cfl, lossy=pc.lossy)
    keep = np.abs(syn.t - pulse.t0) <= 8.0 * pulse.dt + params.length_L / min(d.v_up, d.v_down)
    syn_w = syn.resample(syn.t[keep])
    dsp_w = dsp.resample(syn_w.t)
    frame = pd.DataFrame({
        "t_us": syn_w.t,
        "input": pulse.amplitude(syn_w.t) ** 2,
        "syn_down": np.abs(syn_w.e_down) ** 2, "syn_up": np.abs(syn_w.e_up) ** 2,
        "dsp_down": np.abs(dsp_w.e_down) ** 2, "dsp_up": np.abs(dsp_w.e_up) ** 2,
    })
    summary = {
        "pulse_dt_us": pulse.dt,
        "synthesis": {"p_down": syn.probability("down"), "p_up": syn.probability("up")},
        "dsp": {"p_down": dsp.probability("down"), "p_up": dsp.probability("up"),
                "norm_in": dsp.norm_in, "absorbed": dsp.absorbed, "norm_error": dsp.norm_error},
        "l2_error_up": l2_error(dsp_w.e_up, syn_w.e_up, syn_w.t),
        "overlap_up_input": overlap(syn_w.e_up, pulse.amplitude(syn_w.t), syn_w.t),
    }
    logger.info("pulse.compare " + fields(l2_error_up=summary["l2_error_up"], norm_error=dsp.norm_error))
    written = [to_csv(_out(cfg, "pulse_trace.csv"), frame),
               to_csv(_out(cfg, "pulse_synthesis.csv"), syn_w.frame()),
               to_csv(_out(cfg, "pulse_dsp.csv"), dsp.frame())]
    written.append(to_json(_out(cfg, "pulse.json"), envelope(cfg.model_dump(), d.as_dict(),
                                                             command="pulse", summary=summary)))
    if cfg.emit_plots:
        written.append(plots.line_plot(frame, "t_us", ["input", "syn_down", "syn_up", "dsp_down", "dsp_up"],
                                       _out(cfg, "pulse.svg"), xlabel="t (μs)"))
    return written


# ========= subtract / optimize =========
@command("subtract")
def cmd_subtract(cfg: RunConfig) -> List[str]:
    sc = cfg.subtract
    params = to_system_params(cfg.params)
    pulse = pulse_for(params, cfg.pulse.dt_over_Gamma)
    r2_grid = np.linspace(1e-3, 1.0 - 1e-3, sc.r2_points)
    fock = tradeoff_curve(r2_grid, n=sc.n, theta=sc.theta)
    fock.insert(0, "n", sc.n)
    coherent = pd.concat([tradeoff_curve(r2_grid, alpha2=a, theta=sc.theta).assign(alpha2=a)
                          for a in sc.alpha2], ignore_index=True)
    thetas = np.linspace(0.0, math.pi, sc.theta_points)
    phase = pd.concat([fock_purity_vs_phase(n, sc.fock_r2, thetas, pulse).assign(n=n) for n in sc.fock_n],
                      ignore_index=True)

    t = math.sqrt(1.0 - sc.matrix_r2) * complex(math.cos(sc.theta), math.sin(sc.theta))
    rho_f = fock_density_matrix(SubtractorInput.fock(sc.n, t, pulse))
    frames = [_matrix_frame(rho_f.x, rho_f.normalized(), sc.matrix_stride, statistics="fock")]
    if sc.alpha2:
        rho_c = coherent_density_matrix(SubtractorInput.coherent(sc.alpha2[0], t, pulse))
        frames.append(_matrix_frame(rho_c.x, rho_c.normalized(), sc.matrix_stride, statistics="coherent"))

    written = [to_csv(_out(cfg, "subtract_fock.csv"), fock),
               to_csv(_out(cfg, "subtract_coherent.csv"), coherent),
               to_csv(_out(cfg, "subtract_fock_phase.csv"), phase),
               to_csv(_out(cfg, "subtract_density.csv"), pd.concat(frames, ignore_index=True))]
    written.append(to_json(_out(cfg, "subtract.json"), envelope(
        cfg.model_dump(), _derived_dict(params), command="subtract",
        density_matrix={"fock_trace": rho_f.trace(), "fock_purity": rho_f.purity(),
                        "hermiticity_error": rho_f.hermiticity_error()})))
    if cfg.emit_plots:
        written.append(plots.line_plot(fock, "R2", ["eta", "purity"], _out(cfg, "subtract_fock.svg"),
                                       xlabel="|R|²"))
        written.append(plots.matrix_plot(rho_f.normalized(), [rho_f.x[0], rho_f.x[-1]] * 2,
                                         _out(cfg, "subtract_fock_rho.svg"), title="|ρ|/η"))
    return written


@command("optimize")
def cmd_optimize(cfg: RunConfig) -> List[str]:
    oc = cfg.optimize
    rows, phase = [], []
    thetas = np.linspace(0.0, math.pi, oc.theta_points)
    for a2 in oc.alpha2:
        try:
            r_opt2, value = optimize_rate(a2, oc.theta)
        except RootNotBracketedError as e:
            logger.warning("optimize.no_root " + fields(alpha2=a2, reason=str(e)))
            rows.append({"alpha2": a2, "R_opt2": float("nan"), "eta": float("nan"), "bracketed": False})
            continue
        rows.append({"alpha2": a2, "R_opt2": r_opt2, "eta": value, "bracketed": True})
        phase.append(purity_vs_phase(a2, r_opt2, thetas).assign(alpha2=a2))
    frame = pd.DataFrame(rows)
    written = [to_csv(_out(cfg, "optimize.csv"), frame)]
    if phase:
        written.append(to_csv(_out(cfg, "optimize_phase.csv"), pd.concat(phase, ignore_index=True)))
    written.append(to_json(_out(cfg, "optimize.json"), envelope(cfg.model_dump(), None, command="optimize")))
    if cfg.emit_plots and frame["bracketed"].any():
        ok = frame[frame["bracketed"]]
        written.append(plots.line_plot(ok, "alpha2", ["eta", "R_opt2"], _out(cfg, "optimize.svg"),
                                       xlabel="|α|²"))
    return written


# ========= two-photon =========
def _two_photon_point(job: dict) -> dict:
    params = phase_matched_params(job["base"], job["r2"], job["theta"])
    pulse = pulse_for_density(params, job["n_eff"])
    state = evolve_two_photon(params, pulse, job["spec"])
    rho = reduce_density_matrix(state)
    eta_a, pur_a = analytic_reference(params)
    return {
        "row": {"R2": job["r2"], "n_eff": state.n_eff, "eta": rho.trace(), "purity": rho.purity(),
                "eta_flux": state.flux_up, "eta_analytic": eta_a, "purity_analytic": pur_a,
                "p_dd": state.p_dd, "p_total": state.p_up + state.p_dd, "norm_error": state.norm_error},
        "bins": state.bins,
        "matrix": rho.normalized(),
    }


@command("two-photon")
def cmd_two_photon(cfg: RunConfig) -> List[str]:
    tc = cfg.two_photon
    base = to_system_params(cfg.params)
    spec = GridSpec(cells=tc.cells, bins=tc.bins, cfl=tc.cfl, window=tc.window, literal_s32=tc.literal_s32)
    theta = math.pi if tc.t_sign == "negative" else 0.0
    jobs = [{"base": base, "r2": float(r2), "theta": theta, "n_eff": tc.n_eff, "spec": spec} for r2 in tc.r2]
    with context(logger, "twophoton.sweep", points=len(jobs), jobs=cfg.jobs):
        results = map_points(_two_photon_point, jobs, cfg.jobs)
    frame = pd.DataFrame([r["row"] for r in results])
    matrices = pd.concat([_matrix_frame(r["bins"], r["matrix"], 1, R2=r["row"]["R2"]) for r in results],
                         ignore_index=True)
    written = [to_csv(_out(cfg, "two_photon.csv"), frame),
               to_csv(_out(cfg, "two_photon_density.csv"), matrices)]
    written.append(to_json(_out(cfg, "two_photon.json"), envelope(
        cfg.model_dump(), _derived_dict(base), command="two-photon",
        grid={"cells": spec.cells, "bins": spec.bins, "cfl": spec.cfl, "footprint_bytes": spec.footprint()})))
    if cfg.emit_plots:
        written.append(plots.line_plot(frame, "R2", ["eta", "purity", "eta_analytic", "purity_analytic"],
                                       _out(cfg, "two_photon.svg"), xlabel="|R|²"))
        for r in results:
            b = r["bins"]
            written.append(plots.matrix_plot(r["matrix"], [b[0], b[-1]] * 2,
                                             _out(cfg, f"two_photon_rho_{r['row']['R2']:.2f}.svg"),
                                             title=f"|R|² = {r['row']['R2']:.2f}"))
    return written


# ========= repeater / feasibility =========
@command("repeater")
def cmd_repeater(cfg: RunConfig) -> List[str]:
    rc = cfg.repeater
    params = to_system_params(cfg.params)
    if rc.t_re is not None:
        coeffs = ScatterCoeffs(complex(rc.t_re, rc.t_im), complex(rc.r_re, rc.r_im))
    else:
        coeffs = solve_scattering(params, settings=_settings(cfg))
    report = run_protocol(coeffs, rc.detector_efficiency, rc.phi)
    rows = [dict(stage="elementary", **r.row()) for r in report.patterns]
    rows += [dict(stage="connection", **r.row()) for r in report.connection_patterns]
    written = [to_csv(_out(cfg, "repeater_patterns.csv"), pd.DataFrame(rows))]
    written.append(to_json(_out(cfg, "repeater.json"), envelope(
        cfg.model_dump(), _derived_dict(params), command="repeater",
        coefficients=coeffs.row(), report=report.as_dict())))
    return written


@command("feasibility")
def cmd_feasibility(cfg: RunConfig) -> List[str]:
    fc = cfg.feasibility
    params = to_system_params(cfg.params)
    d = derive(params)
    pulse_dt = fc.dt_over_Gamma / d.eit_bandwidth
    report = feasibility(params, mhz(fc.gamma_s_MHz), mhz(fc.gamma_c_MHz), pulse_dt)
    logger.info("feasibility " + fields(spinwave=report.cond_spinwave, control=report.cond_control,
                                        geometry=report.cond_geometry))
    row = {"pulse_dt_us": pulse_dt, **report.as_dict()}
    return [to_csv(_out(cfg, "feasibility.csv"), pd.DataFrame([row])),
            to_json(_out(cfg, "feasibility.json"), envelope(cfg.model_dump(), d.as_dict(),
                                                            command="feasibility", report=row))]


# ========= entry =========
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rydex", description="Atom-photon spin-exchange via Rydberg dressing")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON or YAML run file")
    p.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")
    p.add_argument("--plot", action="store_true", default=None, help="also write SVG plots")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    init_logging(app_name="rydex", level=os.getenv("LOG_LEVEL", "INFO"))
    set_correlation_id(str(uuid.uuid4())[:8])
    try:
        cfg = load_run_config(args.config, {"out_dir": args.out, "jobs": args.jobs, "emit_plots": args.plot})
        with context(logger, f"cmd.{args.command}", config=args.config):
            written = COMMANDS[args.command](cfg)
    except RydexError as e:
        log_exception(logger, e)
        print(f"rydex {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
