"""Command-line front end.

    torsion-wigner --protocol two-pulse --out run1 [--config cfg.json]

Everything is validated and computed before the output directory is touched, so
a failed run leaves no partial artifacts. Exit codes: 0 success, 2 invalid
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .coupling import (
    OverlapInputs,
    coupling_breakdown,
    g12ma_estimate,
    g_oe_longitudinal,
    longitudinal_overlap_closed,
    longitudinal_overlap_quadrature,
    matched_wavevector,
    optical_angular_frequency,
    reference_overlap_inputs,
    scaling_check_g_vs_length,
)
from .errors import CoverageError, GridMismatchError, NumericalError, TorsionWignerError
from .fock_oracle import oracle_gps_cat
from .params import (
    check_timescales,
    derive_params,
    load_params,
    photon_threshold,
    reference_params,
    thermal_occupation,
    wavevector_discrepancy,
    zero_point_angle_at_length,
)
from .phase_space import (
    default_axes,
    dumps_json,
    fidelity_overlap,
    gaussian_to_grid,
    linf_distance,
    load_grid,
    make_even_cat,
    make_fock_wigner,
    negativity_volume,
    purity,
    save_grid,
    symmetric_axis,
)
from .protocols import (
    GPS_SPAN,
    CatPrepConfig,
    closed_form_scat,
    closed_form_sfock,
    gps_optical_cat,
    mechanical_state_prep,
    report_from_state,
    single_pulse_squeeze,
    squeeze_by_conditioning,
    two_pulse_protocol,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

PROTOCOLS = ("params-report", "coupling-report", "squeeze", "gps-cat", "mech-prep",
             "two-pulse", "oracle-check")

DEFAULT_GRID_POINTS = 401
DEFAULT_GRID_SPAN = 10.0
DEFAULT_TRUNCATION = 40
ORACLE_GUARD = 1e-4

# key -> accepted types
CONFIG_KEYS = {
    "params_file": (str,), "protocol": (str,), "output_dir": (str,), "seed": (int,),
    "grid_points": (int,), "grid_span": (float,), "truncation": (int,),
    "chi": (float,), "chi_cooling": (float,), "n_bar": (float,), "temperature": (float,),
    "r1": (float,), "r2": (float,), "T_tap": (float,), "m": (int, list), "eta": (float,),
    "V_theta": (float,), "V_L": (float,), "homodyne_outcome_p": (float,),
    "homodyne_sigma": (float,), "optical_state": (str,), "alpha": (float,), "fock_n": (int,),
    "override_variances": (bool,), "outcomes": (list,),
}
CAT_KEYS = ("r1", "r2", "T_tap", "eta", "chi", "V_theta", "V_L", "homodyne_outcome_p")


class ConfigError(TorsionWignerError):
    pass


@dataclass
class RunConfig:
    protocol: str
    output_dir: Path
    params_file: Optional[Path] = None
    seed: int = 0
    grid_points: int = DEFAULT_GRID_POINTS
    grid_span: float = DEFAULT_GRID_SPAN
    truncation: int = DEFAULT_TRUNCATION
    options: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.options.get(key, default)


def _check_type(key, value):
    kinds = CONFIG_KEYS[key]
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"config key '{key}' has wrong type ({type(value).__name__})")
    if float in kinds and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kinds):
        raise ConfigError(f"config key '{key}' has wrong type ({type(value).__name__})")
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"config key '{key}' must be finite")
    if key == "m" and isinstance(value, list):
        if not value or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in value):
            raise ConfigError("config key 'm' must be a non-negative integer or a list of them")
    if key == "outcomes":
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError("config key 'outcomes' must be a list of numbers")
        value = [float(v) for v in value]
    return value


def build_run_config(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    opts = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        opts[key] = _check_type(key, value)
    for key, flag in (("protocol", args.protocol), ("output_dir", args.out),
                      ("grid_points", args.grid_points), ("grid_span", args.grid_span),
                      ("truncation", args.truncation)):
        if flag is not None:
            opts[key] = flag
    protocol = opts.pop("protocol", None)
    if protocol is None:
        raise ConfigError("config key 'protocol' is required (or pass --protocol)")
    if protocol not in PROTOCOLS:
        raise ConfigError(f"config key 'protocol' must be one of {', '.join(PROTOCOLS)}")
    out = opts.pop("output_dir", None)
    if out is None:
        raise ConfigError("config key 'output_dir' is required (or pass --out)")
    out = Path(out)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"config key 'output_dir' is not a directory: {out}")
    params_file = opts.pop("params_file", None)
    if params_file is not None:
        params_file = Path(params_file)
        if not params_file.is_file():
            raise ConfigError(f"config key 'params_file' names a missing file: {params_file}")
    cfg = RunConfig(protocol, out, params_file, opts.pop("seed", 0),
                    opts.pop("grid_points", DEFAULT_GRID_POINTS),
                    float(opts.pop("grid_span", DEFAULT_GRID_SPAN)),
                    opts.pop("truncation", DEFAULT_TRUNCATION), opts)
    if cfg.grid_points < 3:
        raise ConfigError("config key 'grid_points' must be at least 3")
    if not cfg.grid_span > 0:
        raise ConfigError("config key 'grid_span' must be positive")
    if cfg.truncation < 2:
        raise ConfigError("config key 'truncation' must be at least 2")
    return cfg


# ---------------------------------------------------------------- protocol runners


@dataclass
class RunOutput:
    report: dict
    grids: dict = field(default_factory=dict)  # name -> (GridWigner, extra metadata)


def _params(cfg: RunConfig):
    return load_params(cfg.params_file) if cfg.params_file else reference_params()


def _cat_config(cfg: RunConfig, m: Optional[int] = None) -> CatPrepConfig:
    kw = {k: cfg.options[k] for k in CAT_KEYS if k in cfg.options}
    m_opt = cfg.get("m", 1)
    kw["m"] = m if m is not None else (m_opt[0] if isinstance(m_opt, list) else m_opt)
    return CatPrepConfig(**kw)


def _m_values(cfg: RunConfig, default):
    m = cfg.get("m", default)
    return list(m) if isinstance(m, list) else [m]


def _n_bar(cfg: RunConfig, p) -> float:
    if "n_bar" in cfg.options:
        return cfg.options["n_bar"]
    return thermal_occupation(p.torsion_freq_Omega, cfg.get("temperature", 0.1))


def _validate(cfg: RunConfig):
    """Build every input object up front so bad values fail before any work."""
    p = _params(cfg)
    if cfg.protocol in ("gps-cat", "mech-prep", "two-pulse", "oracle-check"):
        for m in _m_values(cfg, 1):
            _cat_config(cfg, m)
    if cfg.get("optical_state", "cat") not in ("fock", "cat", "gps"):
        raise ConfigError("config key 'optical_state' must be 'fock', 'cat' or 'gps'")
    if cfg.get("alpha", 2.0) < 0:
        raise ConfigError("config key 'alpha' must be non-negative")
    if cfg.get("fock_n", 1) < 0:
        raise ConfigError("config key 'fock_n' must be non-negative")
    if cfg.get("temperature", 0.1) < 0:
        raise ConfigError("config key 'temperature' must be non-negative")
    if cfg.get("n_bar", 0.0) < 0:
        raise ConfigError("config key 'n_bar' must be non-negative")
    if cfg.get("homodyne_sigma", 0.0) < 0:
        raise ConfigError("config key 'homodyne_sigma' must be non-negative")
    if cfg.protocol == "squeeze" and cfg.get("chi", 1.0) == 0:
        raise ConfigError("config key 'chi' must be non-zero for squeezing")
    return p


def run_params_report(cfg: RunConfig, p) -> RunOutput:
    d = derive_params(p)
    with np.errstate(all="ignore"):
        timescales_ok = check_timescales(p)
    rep = {
        "params": p.to_dict(),
        "derived": d.to_dict(),
        "photon_threshold_chi1": photon_threshold(p.g_coupling, p.cavity_kappa, 1.0),
        "thermal_occupation": thermal_occupation(p.torsion_freq_Omega, cfg.get("temperature", 0.1)),
        "temperature": cfg.get("temperature", 0.1),
        "timescales_ok": timescales_ok,
        "wavevector": wavevector_discrepancy(p),
    }
    return RunOutput(rep)


def run_coupling_report(cfg: RunConfig, p) -> RunOutput:
    d = derive_params(p)
    inputs = reference_overlap_inputs(p)
    omega = optical_angular_frequency(p.wavelength_lambda)
    closed = longitudinal_overlap_closed(inputs.L, inputs.beta1, inputs.beta2, inputs.k_t)
    quad = longitudinal_overlap_quadrature(inputs.L, inputs.beta1, inputs.beta2, inputs.k_t)
    g12 = g12ma_estimate(d.theta_zp, d.delta_eps, omega, omega, inputs)
    k_res = matched_wavevector(p.beam_length_L, p.beam_length_L, 20)  # k_t L = 40 pi
    resonant = longitudinal_overlap_closed(p.beam_length_L, p.beta2 + k_res, p.beta2, k_res)

    lengths = np.geomspace(1e-3, 1e-2, 11)

    def theta_zp_of_L(L):
        return zero_point_angle_at_length(p, L, matched_wavevector(L, lengths[0]))

    base = OverlapInputs(p.beam_length_L, p.beta1, p.beta2, d.k_t, inputs.transverse_factor)
    slope = scaling_check_g_vs_length(base, theta_zp_of_L, lengths, delta_eps=d.delta_eps,
                                      omega1=omega, omega2=omega)
    rep = {
        "transverse_factor": inputs.transverse_factor,
        "overlap_closed": closed,
        "overlap_quadrature": quad,
        "overlap_difference": abs(closed - quad),
        "resonant_overlap": resonant,
        "resonant_kt_L": k_res * p.beam_length_L,
        "g_oe_longitudinal": g_oe_longitudinal(inputs.L, p.beta1, p.beta2, inputs.k_t),
        "g_oe_quadrature": longitudinal_overlap_quadrature(inputs.L, p.beta1, p.beta2,
                                                           inputs.k_t, odd=True),
        "g12MA": g12,
        "breakdown": coupling_breakdown(g12).to_dict(),
        "g_vs_length_exponent": slope,
    }
    return RunOutput(rep)


def run_squeeze(cfg: RunConfig, p) -> RunOutput:
    n_bar = _n_bar(cfg, p)
    chi = cfg.get("chi", 1.0)
    formula = single_pulse_squeeze(n_bar, chi)
    state, density = squeeze_by_conditioning(n_bar, chi)
    explicit = report_from_state(state, n_bar, chi)
    sx, sp = np.sqrt(np.diag(state.cov))
    axes = (symmetric_axis(8.0 * sx, cfg.grid_points), symmetric_axis(8.0 * sp, cfg.grid_points))
    grid = gaussian_to_grid(state, *axes)
    densities = {}
    for q in cfg.get("outcomes", []):
        densities[format(q, ".17g")] = squeeze_by_conditioning(n_bar, chi, q)[1]
    rep = {
        "formula": formula.to_dict(),
        "explicit": explicit.to_dict(),
        "var_theta_difference": abs(formula.var_theta_out - explicit.var_theta_out),
        "var_L_difference": abs(formula.var_L_out - explicit.var_L_out),
        "outcome_density_p0": density,
        "outcome_densities": densities,
        "below_vacuum": formula.var_theta_out <= 1.0,
    }
    return RunOutput(rep, {"mechanical": (grid, {"n_eff": formula.n_eff})})


def _state_stats(w) -> dict:
    return {"negativity_volume": negativity_volume(w), "purity": purity(w),
            "moments": list(w.moments())}


def run_gps_cat(cfg: RunConfig, p) -> RunOutput:
    axes = default_axes(max(cfg.grid_span, GPS_SPAN), cfg.grid_points)
    rep = {"grid_span_used": float(axes[0][-1]), "runs": {}}
    grids = {}
    for m in _m_values(cfg, 1):
        cat = _cat_config(cfg, m)
        res = gps_optical_cat(cat, *axes)
        rep["runs"][f"m{m}"] = {"config": cat.to_dict(), "success_weight": res.success_weight,
                                "nodes": list(res.nodes), **_state_stats(res.state)}
        grids[f"gps_m{m}"] = (res.state, {"success_weight": res.success_weight, "m": m})
    return RunOutput(rep, grids)


def run_mech_prep(cfg: RunConfig, p) -> RunOutput:
    cat_cfg = _cat_config(cfg)
    kind = cfg.get("optical_state", "cat")
    sigma = cfg.get("homodyne_sigma", 0.0)
    axes = default_axes(cfg.grid_span, cfg.grid_points)
    reference = None
    if kind == "fock":
        n = cfg.get("fock_n", 1)
        span = max(10.0, math.sqrt(4 * n + 2) + 8.0)
        optical = make_fock_wigner(n, *default_axes(span, cfg.grid_points))
        if n == 1:
            reference = closed_form_sfock(cat_cfg.V_theta, cat_cfg.V_L, *axes)
    elif kind == "cat":
        alpha = cfg.get("alpha", 2.0)
        optical = make_even_cat(alpha, angle=math.pi / 2)
        reference = closed_form_scat(cat_cfg.V_theta, cat_cfg.V_L, alpha, *axes)
    else:
        optical = gps_optical_cat(cat_cfg, *default_axes(max(cfg.grid_span, GPS_SPAN),
                                                         cfg.grid_points)).state
    res = mechanical_state_prep(optical, cat_cfg, theta_axis=axes[0], L_axis=axes[1],
                                homodyne_sigma=sigma)
    rep = {"config": cat_cfg.to_dict(), "optical_state": kind, "homodyne_sigma": sigma,
           "success_weight": res.success_weight, "nodes": list(res.nodes),
           **_state_stats(res.state)}
    grids = {"mechanical": (res.state, {"success_weight": res.success_weight})}
    if reference is not None:
        rep["closed_form_linf"] = linf_distance(res.state, reference)
        rep["closed_form_fidelity"] = fidelity_overlap(res.state, reference)
        grids["closed_form"] = (reference, {})
    return RunOutput(rep, grids)


def run_two_pulse(cfg: RunConfig, p) -> RunOutput:
    cat_cfg = _cat_config(cfg)
    n_bar = _n_bar(cfg, p)
    optical_axes = default_axes(max(cfg.grid_span, GPS_SPAN), cfg.grid_points)
    res = two_pulse_protocol(cat_cfg, n_bar=n_bar, params=p, chi_cooling=cfg.get("chi_cooling"),
                             override_variances=cfg.get("override_variances", False),
                             optical_axes=optical_axes, points=cfg.grid_points)
    rep = {"config": cat_cfg.to_dict(), "n_bar": n_bar, "cooling": res.cooling.to_dict(),
           "rotated_covariance": res.rotated_state.cov.tolist(), "weights": res.weights,
           "optical": _state_stats(res.optical.state), "mechanical": _state_stats(res.final.state),
           "success_weight": res.success_weight}
    grids = {"mechanical": (res.final.state, {"success_weight": res.success_weight}),
             "optical": (res.optical.state, {"success_weight": res.optical.success_weight})}
    return RunOutput(rep, grids)


def run_oracle_check(cfg: RunConfig, p) -> RunOutput:
    axes = default_axes(max(cfg.grid_span, GPS_SPAN), cfg.grid_points)
    rep = {"truncation": cfg.truncation, "grid_span_used": float(axes[0][-1]), "runs": {}}
    grids = {}
    for m in _m_values(cfg, [0, 1, 2, 3]):
        cat = _cat_config(cfg, m)
        phase = gps_optical_cat(cat, *axes)
        oracle, prob = oracle_gps_cat(cat.r1, cat.r2, cat.transmittance, m, cat.eta, *axes,
                                      truncation=cfg.truncation, max_deficit=ORACLE_GUARD,
                                      max_leakage=ORACLE_GUARD)
        rep["runs"][f"m{m}"] = {"linf": linf_distance(phase.state, oracle),
                                "success_phase_space": phase.success_weight,
                                "success_oracle": prob,
                                "negativity_phase_space": negativity_volume(phase.state)}
        grids[f"phase_m{m}"] = (phase.state, {"success_weight": phase.success_weight})
        grids[f"oracle_m{m}"] = (oracle, {"success_weight": prob})
    return RunOutput(rep, grids)


RUNNERS = {
    "params-report": run_params_report,
    "coupling-report": run_coupling_report,
    "squeeze": run_squeeze,
    "gps-cat": run_gps_cat,
    "mech-prep": run_mech_prep,
    "two-pulse": run_two_pulse,
    "oracle-check": run_oracle_check,
}


# ---------------------------------------------------------------- output


def _flatten(prefix, obj, lines):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], lines)
    elif isinstance(obj, float):
        lines.append(f"{prefix}: {format(obj, '.17g')}")
    elif isinstance(obj, (list, tuple)):
        lines.append(f"{prefix}: [{', '.join(format(v, '.17g') if isinstance(v, float) else str(v) for v in obj)}]")
    else:
        lines.append(f"{prefix}: {obj}")


def write_outputs(cfg: RunConfig, out: RunOutput):
    """Write into a sibling staging directory, then move the files into place."""
    target = cfg.output_dir
    target.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        written = []
        for name in sorted(out.grids):
            grid, extra = out.grids[name]
            path, side = save_grid(grid, stage / f"state_{name}.csv", extra)
            load_grid(path)  # round-trip check of the invariants
            written += [path.name, side.name]
        report = {"protocol": cfg.protocol, "version": __version__, "seed": cfg.seed,
                  "grid_points": cfg.grid_points, "grid_span": cfg.grid_span,
                  "truncation": cfg.truncation, "results": out.report, "artifacts": written}
        (stage / "report.json").write_text(dumps_json(report), encoding="utf-8")
        lines = [f"protocol: {cfg.protocol}"]
        _flatten("", out.report, lines)
        lines.append("artifacts: " + ", ".join(written))
        (stage / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        if target.exists():
            for f in sorted(stage.iterdir()):
                os.replace(f, target / f.name)
        else:
            os.replace(stage, target)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="torsion-wigner",
                                 description="Phase-space simulations of pulsed torsional optomechanics.")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--protocol", choices=PROTOCOLS)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--grid-points", type=int, default=None,
                    help=f"points per grid axis (default {DEFAULT_GRID_POINTS})")
    ap.add_argument("--grid-span", type=float, default=None,
                    help=f"grid half-width in quadrature units (default {DEFAULT_GRID_SPAN:g})")
    ap.add_argument("--truncation", type=int, default=None,
                    help=f"Fock truncation for the oracle (default {DEFAULT_TRUNCATION})")
    ap.add_argument("--version", action="version", version=__version__)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_run_config(args)
        params = _validate(cfg)
    except TorsionWignerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        out = RUNNERS[cfg.protocol](cfg, params)
    except (NumericalError, CoverageError, GridMismatchError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TorsionWignerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        write_outputs(cfg, out)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except TorsionWignerError as exc:
        print(f"numerical failure: written grid failed its re-load check: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
