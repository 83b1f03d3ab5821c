"""Batch experiment runner behind the ``conic-em`` entry point.

``conic-em run <config> [--out DIR] [--threads N] [--no-plot]`` executes one
named experiment from a flat INI-style config and writes
``<experiment>.csv``, ``<experiment>.verdict.json``, ``manifest.json`` and
(by default) PNG figures into the output directory.  ``conic-em list`` prints
the registered experiments.  Exit codes: 0 pass, 2 verdict fail, 1 error.

Outputs are deterministic for a fixed config and seed (fixed summation order
throughout); the manifest carries wall time and is the one file excluded from
byte-identity.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, parallel
from . import plotting
from .asymptotics import (
    fit_decay_exponent,
    lower_bound_constant,
    radial_moment,
    tail_by_quadrature,
    verify_cgo_norm_bounds,
    verify_lemma24,
)
from .errors import ConfigParse, ConicEMError, UnknownExperiment
from .fields import (
    CGOParams,
    bump_field,
    constant_field,
    constant_kernel,
    exp_field,
    herglotz_electric,
    holder_source,
    plane_wave_incident,
    plateau_field,
    rho_p,
    rotational_power_field,
    zero_field,
)
from .geometry import Background, Ball, make_cone, make_coronal
from .herglotz import SYNTHETIC_NOTE, apex_average_profile, remainder_bound_check
from .indicator import (
    NOISE_FLOOR,
    classify_visibility,
    coronal_uniqueness_experiment,
    integral_identity_residual,
    recover_apex_source,
)
from .fields import cgo_pair_electric
from .quadrature import QuadratureSpec
from .scattering import (
    SourcePair,
    born_far_field,
    constant_medium,
    coronal_tip_sources,
    far_field_equiv_check,
    far_field_from_source,
    farfield_distance,
    nonradiating_source,
    pattern_to_csv,
)

BORN_NOTE = "first-order (Born) surrogate; exact-solution statements apply beyond it"


# --- config handling --------------------------------------------------------------

class Config:
    """Thin typed access over a parsed INI config."""

    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser

    def section(self, name):
        return self.parser[name] if self.parser.has_section(name) else {}

    def get(self, section, key, default=None, cast=str):
        sec = self.section(section)
        if key not in sec:
            return default
        raw = sec[key]
        try:
            if cast is bool:
                return str(raw).strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except ValueError as exc:
            raise ConfigParse(f"[{section}] {key} = {raw!r}: {exc}") from exc

    def vector(self, section, key, default=None):
        sec = self.section(section)
        if key not in sec:
            return default
        try:
            vals = [float(tok) for tok in sec[key].split()]
        except ValueError as exc:
            raise ConfigParse(f"[{section}] {key}: {exc}") from exc
        if len(vals) != 3:
            raise ConfigParse(f"[{section}] {key}: need exactly 3 numbers")
        return np.array(vals)

    def schedule(self, key, default, minimum=1, monotone="increasing"):
        sec = self.section("schedule")
        if key not in sec:
            vals = list(default)
        else:
            try:
                vals = [float(tok) for tok in sec[key].split()]
            except ValueError as exc:
                raise ConfigParse(f"[schedule] {key}: {exc}") from exc
        if len(vals) < minimum:
            raise ConfigParse(f"[schedule] {key}: schedule too short "
                              f"(need >= {minimum}, got {len(vals)})")
        diffs = np.diff(vals)
        if monotone == "increasing" and np.any(diffs <= 0):
            raise ConfigParse(f"[schedule] {key}: must be strictly increasing")
        if monotone == "decreasing" and np.any(diffs >= 0):
            raise ConfigParse(f"[schedule] {key}: must be strictly decreasing")
        return vals


def load_config(path) -> Config:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigParse(f"malformed config {path}: {exc}") from exc
    if not parser.has_section("experiment") or "name" not in parser["experiment"]:
        raise ConfigParse("config must contain [experiment] with a name key")
    return Config(parser)


def _background(cfg: Config) -> Background:
    return Background(omega=cfg.get("background", "omega", 1.0, float),
                      eps0=cfg.get("background", "eps0", 1.0, float),
                      mu0=cfg.get("background", "mu0", 1.0, float))


def _quad_spec(cfg: Config, **overrides) -> QuadratureSpec:
    kwargs = {
        "radial_order": cfg.get("quad", "radial_order", 32, int),
        "polar_order": cfg.get("quad", "polar_order", 16, int),
        "azimuthal_order": cfg.get("quad", "azimuthal_order", 16, int),
        "tau_scaling": cfg.get("quad", "tau_scaling", True, bool),
    }
    kwargs.update(overrides)
    return QuadratureSpec(**kwargs)


def _cone_block(cfg: Config, name, default_half_deg, default_radius=1.0,
                default_apex=(0.0, 0.0, 0.0), default_axis=(0.0, 0.0, 1.0)):
    sec = f"cone {name}"
    return make_cone(
        cfg.vector(sec, "apex", np.asarray(default_apex, float)),
        cfg.vector(sec, "axis", np.asarray(default_axis, float)),
        np.deg2rad(cfg.get(sec, "half_angle_deg", default_half_deg, float)),
        cfg.get(sec, "radius", default_radius, float),
    )


def field_from_block(cfg: Config, name: str, bg: Background):
    """Build a field from a ``[field NAME]`` block; kinds match the documented set."""
    sec = f"field {name}"
    if not cfg.parser.has_section(sec):
        raise ConfigParse(f"missing [{sec}] block")
    kind = cfg.get(sec, "kind", None)
    if kind == "cgo_electric" or kind == "cgo_magnetic":
        params = CGOParams(d=cfg.vector(sec, "d", np.array([0.0, 0.0, -1.0])),
                           d_perp=cfg.vector(sec, "d_perp", np.array([1.0, 0.0, 0.0])),
                           tau=cfg.get(sec, "tau", 10.0, float), k=bg.k)
        from .fields import cgo_pair_electric, cgo_pair_magnetic
        maker = cgo_pair_electric if kind == "cgo_electric" else cgo_pair_magnetic
        return maker(params, bg)
    if kind == "plane_wave":
        return plane_wave_incident(cfg.vector(sec, "polarization", np.array([1.0, 0, 0])),
                                   cfg.vector(sec, "direction", np.array([0.0, 0, 1.0])), bg)
    if kind == "herglotz":
        kern = constant_kernel(cfg.vector(sec, "kernel_value", np.array([1.0, 0, 0])),
                               k1=cfg.get(sec, "k1", bg.k, float))
        return herglotz_electric(kern, cfg.get(sec, "quad_order", 32, int))
    if kind == "bump":
        return bump_field(cfg.vector(sec, "center", np.zeros(3)),
                          cfg.get(sec, "radius", 0.5, float),
                          cfg.vector(sec, "polarization", np.array([1.0, 0, 0])))
    if kind == "holder_source":
        return holder_source(cfg.vector(sec, "center", np.zeros(3)),
                             cfg.get(sec, "alpha", 0.5, float),
                             cfg.vector(sec, "c0", np.zeros(3)),
                             cfg.get(sec, "c1", 1.0, float),
                             cfg.vector(sec, "chat", np.array([1.0, 0, 0])))
    raise ConfigParse(f"[{sec}] unknown field kind {kind!r}")


# --- output helpers ------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")
    return str(path)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def write_verdict(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return str(path)


# --- experiments -----------------------------------------------------------------------

_REGISTRY: dict[str, tuple] = {}


def experiment(name, description, claim):
    def deco(fn):
        _REGISTRY[name] = (fn, description, claim)
        return fn
    return deco


@experiment("lemma23_tail",
            "radial moment identity and tail bound over an (alpha, eta, cutoff) grid",
            "truncated radial moment: Gamma identity and exponential tail bound")
def _exp_lemma23(cfg, bg, spec, out, name):
    alphas = cfg.schedule("alpha", [0.25, 0.5, 1.0, 2.0])
    re_etas = cfg.schedule("re_eta", [1.0, 2.0, 5.0])
    im_etas = cfg.schedule("im_eta", [0.0, 1.0, 3.0])
    cutoffs = cfg.schedule("cutoff", [0.5, 1.0, 2.0])
    rows = []
    for alpha in alphas:
        for re in re_etas:
            for im in im_etas:
                for cut in cutoffs:
                    eta = complex(re, im)
                    rm = radial_moment(alpha, eta, cut)
                    tail_q = tail_by_quadrature(alpha, eta, cut)
                    resid = abs(rm.full - (rm.truncated + tail_q)) / abs(rm.full)
                    rows.append({
                        "alpha": alpha, "re_eta": re, "im_eta": im, "cutoff": cut,
                        "identity_residual_rel": resid,
                        "tail_abs": abs(rm.tail), "bound_value": rm.bound_value,
                        "bound_applicable": rm.bound_applicable,
                        "bound_ok": bool(rm.bound_ok) if rm.bound_ok is not None else "n/a",
                    })
    max_resid = max(r["identity_residual_rel"] for r in rows)
    bounds_ok = all(r["bound_ok"] is True for r in rows if r["bound_applicable"])
    ok = max_resid <= 1e-10 and bounds_ok
    csv = write_csv(out / f"{name}.csv",
                    ["alpha", "re_eta", "im_eta", "cutoff", "identity_residual_rel",
                     "tail_abs", "bound_value", "bound_applicable", "bound_ok"], rows)
    figs = [plotting.residual_scatter(out / f"{name}_residuals.png",
                                      [r["identity_residual_rel"] for r in rows], 1e-10,
                                      "moment identity residuals")]
    return ok, {"max_identity_residual_rel": max_resid, "tail_bounds_hold": bounds_ok,
                "cases": len(rows)}, [csv], figs


@experiment("lemma24_sweep",
            "normalized cone exponential integral against its lower-bound constant",
            "cone exponential-integral lower bound")
def _exp_lemma24(cfg, bg, spec, out, name):
    cone = _cone_block(cfg, "main", 30.0)
    taus = cfg.schedule("tau", [20.0, 40.0, 80.0, 160.0, 320.0], minimum=4)
    rep = verify_lemma24(cone, bg, taus, spec=spec)
    csv = write_csv(out / f"{name}.csv",
                    ["tau", "abs_I", "normalized", "margin", "margin_robust", "verdict"],
                    rep.rows)
    figs = [plotting.sweep_semilogx(
        out / f"{name}_normalized.png", rep.column("tau"),
        {"tau^3 |I| (1+k^2/tau^2)^{3/2}": rep.column("normalized")},
        "tau", "normalized integral", "cone integral lower-bound sweep",
        hline=rep.context["C_K"], hlabel="C_K")]
    return rep.verdict, {"C_K": rep.context["C_K"],
                         "angular_limit": rep.context["angular_limit"],
                         "cauchy": rep.context["cauchy"],
                         "min_normalized": float(np.min(rep.column("normalized")))}, [csv], figs


@experiment("cgo_identities",
            "random-draw algebraic identities of the complex test vectors",
            "CGO vector algebra: rho.p = 0, rho^p = -k^2 (d^d_perp)/tau, rho.rho = -k^2")
def _exp_cgo(cfg, bg, spec, out, name):
    n = cfg.get("cgo_identities", "draws", 100, int)
    seed = cfg.get("experiment", "seed", 1234, int)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        v = rng.normal(size=3)
        d = v / np.linalg.norm(v)
        w = rng.normal(size=3)
        w -= (w @ d) * d
        d_perp = w / np.linalg.norm(w)
        # k = O(1) fixed wavenumber, tau the large parameter, as in every sweep;
        # k -> 0 with tau -> inf shrinks the wedge k^2/tau below float cancellation
        tau = float(rng.uniform(0.5, 200.0))
        k = float(rng.uniform(0.5, 5.0))
        params = CGOParams(d=d, d_perp=d_perp, tau=tau, k=k)
        rho, p = rho_p(params)
        dot_rel = abs(rho @ p) / (np.linalg.norm(rho) * np.linalg.norm(p))
        wedge = np.cross(rho, p) + k**2 / tau * np.cross(d, d_perp)
        wedge_rel = (np.linalg.norm(wedge) / (k**2 / tau)) if k > 0 else np.linalg.norm(wedge)
        rho2_rel = abs(rho @ rho + k**2) / max(k**2, 1.0)
        rows.append({"draw": i, "tau": tau, "k": k, "rho_dot_p_rel": dot_rel,
                     "wedge_rel": wedge_rel, "rho_sq_rel": rho2_rel})
    m1 = max(r["rho_dot_p_rel"] for r in rows)
    m2 = max(r["wedge_rel"] for r in rows)
    m3 = max(r["rho_sq_rel"] for r in rows)
    ok = m1 <= 1e-12 and m2 <= 1e-10 and m3 <= 1e-10
    csv = write_csv(out / f"{name}.csv",
                    ["draw", "tau", "k", "rho_dot_p_rel", "wedge_rel", "rho_sq_rel"], rows)
    figs = [plotting.residual_scatter(out / f"{name}_residuals.png",
                                      [r["rho_dot_p_rel"] for r in rows], 1e-12,
                                      "rho.p orthogonality residuals")]
    return ok, {"max_rho_dot_p_rel": m1, "max_wedge_rel": m2, "max_rho_sq_rel": m3,
                "draws": n}, [csv], figs


def _manufactured_trig(bg, m_vec, qE, qH):
    rho = 1j * np.asarray(m_vec, float)
    qE = np.asarray(qE, complex)
    qH = np.asarray(qH, complex)
    E = exp_field(qE, rho, label="manufactured_E")
    H = exp_field(qH, rho, label="manufactured_H")
    J1 = exp_field(np.cross(rho, qE) - 1j * bg.omega * bg.mu0 * qH, rho, label="J1")
    J2 = exp_field(np.cross(rho, qH) + 1j * bg.omega * bg.eps0 * qE, rho, label="J2")
    return E, H, J1, J2


@experiment("integral_identity",
            "manufactured-solution residuals of both volume/boundary identities",
            "volume/boundary integral identities for the source system")
def _exp_identity(cfg, bg, spec, out, name):
    cone = _cone_block(cfg, "main", 45.0)
    mdir = np.array([0.3, -0.5, 0.81])
    m = cfg.get("integral_identity", "m_scale", 9.0, float) * mdir / np.linalg.norm(mdir)
    E, H, J1, J2 = _manufactured_trig(bg, m, [1.0, 0.5, -0.2], [0.1, -0.4, 0.9])
    params = CGOParams(d=np.array([0.0, 0.0, -1.0]), d_perp=np.array([1.0, 0.0, 0.0]),
                       tau=5.0, k=bg.k)
    cgo = cgo_pair_electric(params, bg)
    rows = []
    for order in (32, 64):
        s = QuadratureSpec(radial_order=order, polar_order=order, azimuthal_order=order,
                           tau_scaling=spec.tau_scaling)
        r = integral_identity_residual(E, H, J1, J2, cone, cgo, bg, s,
                                       tau_hint=params.tau)
        rows.append({"order": order, "rel1": r.rel1, "rel2": r.rel2})
    imp1 = rows[0]["rel1"] / max(rows[1]["rel1"], 1e-300)
    imp2 = rows[0]["rel2"] / max(rows[1]["rel2"], 1e-300)
    ok = (rows[0]["rel1"] <= 1e-8 and rows[0]["rel2"] <= 1e-8
          and imp1 >= 100.0 and imp2 >= 100.0)
    csv = write_csv(out / f"{name}.csv", ["order", "rel1", "rel2"], rows)
    figs = [plotting.sweep_loglog(out / f"{name}_convergence.png",
                                  [r["order"] for r in rows],
                                  {"identity 1": [r["rel1"] for r in rows],
                                   "identity 2": [r["rel2"] for r in rows]},
                                  "quadrature order", "relative residual",
                                  "identity residual vs order")]
    return ok, {"rel1_order32": rows[0]["rel1"], "rel2_order32": rows[0]["rel2"],
                "improvement1": imp1, "improvement2": imp2}, [csv], figs


@experiment("nonradiating",
            "constructive non-radiating pair: suppressed pattern and zero apex values",
            "non-radiating construction: zero far field, vanishing apex values")
def _exp_nonradiating(cfg, bg, spec, out, name):
    bg = Background(omega=cfg.get("background", "omega", 2.0, float),
                    eps0=bg.eps0, mu0=bg.mu0)
    radius = cfg.get("nonradiating", "bump_radius", 0.5, float)
    E0 = bump_field([0.0, 0.0, 0.0], radius, [1.0, 0.5j, 0.0])
    H0 = bump_field([0.0, 0.0, 0.0], radius, [0.0, 1.0, -0.3])
    src = nonradiating_source(E0, H0, bg)
    s = QuadratureSpec(radial_order=max(spec.radial_order, 128),
                       polar_order=spec.polar_order,
                       azimuthal_order=spec.azimuthal_order,
                       tau_scaling=spec.tau_scaling)
    pat = far_field_from_source(src, bg, spec=s)
    rng = np.random.default_rng(cfg.get("experiment", "seed", 1234, int))
    probe = rng.uniform(-radius, radius, (2000, 3))
    vol = 4.0 / 3.0 * np.pi * radius**3
    scale = max(float(np.abs(src.J1(probe)).max()),
                float(np.abs(src.J2(probe)).max())) * vol
    ratio = pat.sup_norm() / scale
    # Cauchy data of the construction on a cone containing the bump support
    cone = make_cone([0, 0, -0.25 - radius], [0, 0, 1.0], np.pi / 4, 2.2 * radius + 0.25)
    est = recover_apex_source((E0, H0), cone, bg, cfg.schedule("tau", [8.0, 16.0, 32.0], minimum=3))
    j_rel = max(np.linalg.norm(est.J1_apex), np.linalg.norm(est.J2_apex)) / scale
    equiv = far_field_equiv_check(pat)
    ok = ratio <= 1e-6 and j_rel <= 5e-3 and equiv <= 1e-8
    rows = [{"quantity": "pattern_sup_over_scale", "value": ratio},
            {"quantity": "apex_estimate_over_scale", "value": j_rel},
            {"quantity": "equiv_residual", "value": equiv},
            {"quantity": "source_scale", "value": scale}]
    csv = write_csv(out / f"{name}.csv", ["quantity", "value"], rows)
    pattern_to_csv(pat, out / f"{name}_pattern.csv")
    figs = [plotting.pattern_heatmap(out / f"{name}_pattern.png", pat,
                                     "non-radiating pattern magnitude")]
    return ok, {"pattern_ratio": ratio, "apex_ratio": j_rel, "equiv_residual": equiv},\
        [csv, str(out / f"{name}_pattern.csv")], figs


@experiment("visibility",
            "constant cone source radiates a pattern far above the noise floor",
            "conical corner with nonzero apex source is visible")
def _exp_visibility(cfg, bg, spec, out, name):
    cone = _cone_block(cfg, "main", 45.0)
    amp = cfg.vector("visibility", "amplitude", np.array([0.0, 0.0, 1.0]))
    src = SourcePair(J1=zero_field(support=cone),
                     J2=constant_field(amp, support=cone, label="cone_constant"),
                     support=cone, label="visibility_source")
    pat = far_field_from_source(src, bg, spec=spec)
    verdict = classify_visibility(pat, tol=NOISE_FLOOR)
    norm = pat.l2_norm()
    equiv = far_field_equiv_check(pat)
    tang = pat.tangentiality_residual()
    ok = verdict == "visible" and norm >= 1e3 * NOISE_FLOOR and equiv <= 1e-8 and tang <= 1e-8
    pattern_to_csv(pat, out / f"{name}.csv")
    figs = [plotting.pattern_heatmap(out / f"{name}_pattern.png", pat,
                                     "cone source pattern magnitude")]
    return ok, {"classification": verdict, "l2_norm": norm,
                "noise_floor": NOISE_FLOOR, "equiv_residual": equiv,
                "tangentiality": tang}, [str(out / f"{name}.csv")], figs


@experiment("apex_recovery",
            "apex source recovery on manufactured constant and planted-Hölder data",
            "apex value recovery from cap Cauchy data via CGO normalization")
def _exp_apex(cfg, bg, spec, out, name):
    cone = _cone_block(cfg, "main", 30.0)
    taus = cfg.schedule("tau", [8.0, 16.0, 32.0, 64.0, 128.0], minimum=3)
    target = np.array([1.0, 0.0, 0.0], dtype=complex)
    H_const = rotational_power_field(cone.apex, 0.0, target)
    est_c = recover_apex_source((zero_field(), H_const), cone, bg, taus, spec=spec)
    errs = [float(np.linalg.norm(a - target)) for a in est_c.per_tau["electric"]]
    final_err = float(np.linalg.norm(est_c.J2_apex - target))
    monotone = all(b <= a * (1 + 1e-9) for a, b in zip(errs, errs[1:]))

    alpha = cfg.get("apex_recovery", "alpha", 0.5, float)
    H_hold = rotational_power_field(cone.apex, alpha, target)
    est_h = recover_apex_source((zero_field(), H_hold), cone, bg, taus, spec=spec)
    expo = est_h.decay["electric"].exponent
    hold_mag = float(np.linalg.norm(est_h.J2_apex))

    ok = (errs[-1] <= 0.05 and final_err <= 0.05 and monotone
          and 3.3 <= expo <= 3.7)
    rows = [{"tau": t, "const_error": e} for t, e in zip(taus, errs)]
    csv = write_csv(out / f"{name}.csv", ["tau", "const_error"], rows)
    figs = [plotting.sweep_loglog(out / f"{name}_error.png", taus,
                                  {"constant-source recovery error": errs},
                                  "tau", "error", "apex recovery error decay")]
    return ok, {"final_error": final_err, "per_tau_error_monotone": monotone,
                "holder_fitted_exponent": expo, "holder_estimate_norm": hold_mag,
                "holder_alpha": alpha}, [csv], figs


def _default_coronal_pair(cfg, bg):
    base = Ball(center=np.zeros(3), radius=1.0)

    def mk(n):
        apexes = {2: [(0, 0, 2.0), (2.0, 0, 0)],
                  3: [(0, 0, 2.0), (2.0, 0, 0), (0, -2.0, 0)]}[n]
        cones = [make_cone(a, np.asarray(a, float) / np.linalg.norm(a), np.pi / 8, 0.9)
                 for a in apexes]
        return make_coronal(base, cones)

    dom_a, dom_b = mk(2), mk(3)
    src_a = coronal_tip_sources(dom_a, [[1.0, 0, 0], [0, 1.0, 0]],
                                base_value=[0, 0, 0.5], label="A")
    src_b = coronal_tip_sources(dom_b, [[1.0, 0, 0], [0, 1.0, 0], [0.5, 0.5, 0]],
                                base_value=[0, 0, 0.5], label="B")
    return (dom_a, src_a), (dom_b, src_b)


@experiment("coronal_uniqueness",
            "two coronal configurations differing by one corner vs identical ones",
            "coronal-shape uniqueness: far fields separate configurations at corners")
def _exp_coronal(cfg, bg, spec, out, name):
    cfg_a, cfg_b = _default_coronal_pair(cfg, bg)
    rep = coronal_uniqueness_experiment(cfg_a, cfg_b, bg, spec=spec)
    rep_same = coronal_uniqueness_experiment(cfg_a, cfg_a, bg, spec=spec, recover=False)
    rows = [{"comparison": "A_vs_B", "distance": rep.distance, "verdict": rep.verdict},
            {"comparison": "A_vs_A", "distance": rep_same.distance,
             "verdict": rep_same.verdict}]
    for d in rep.corner_diagnostics:
        rows.append({"comparison": f"corner_{d['side']}",
                     "distance": float(np.linalg.norm(d["J2_apex"])),
                     "verdict": "recovered"})
    ok = (rep.verdict == "distinguishable" and rep_same.distance <= 1e-9)
    csv = write_csv(out / f"{name}.csv", ["comparison", "distance", "verdict"], rows)
    pattern_to_csv(rep.pattern_a, out / f"{name}_patternA.csv")
    pattern_to_csv(rep.pattern_b, out / f"{name}_patternB.csv")
    figs = [plotting.pattern_heatmap(out / f"{name}_patternA.png", rep.pattern_a,
                                     "configuration A pattern"),
            plotting.pattern_heatmap(out / f"{name}_patternB.png", rep.pattern_b,
                                     "configuration B pattern")]
    return ok, {"distance_AB": rep.distance, "distance_AA": rep_same.distance,
                "corners_recovered": [
                    {"side": d["side"], "apex": d["apex"],
                     "J2_apex_norm": float(np.linalg.norm(d["J2_apex"]))}
                    for d in rep.corner_diagnostics]}, \
        [csv, str(out / f"{name}_patternA.csv"), str(out / f"{name}_patternB.csv")], figs


@experiment("born_medium",
            "first-order medium pattern of a cone-supported contrast (Born surrogate)",
            "medium with conical corner scatters every incident wave (first order)")
def _exp_born(cfg, bg, spec, out, name):
    cone = _cone_block(cfg, "main", 45.0)
    eps1 = cfg.get("born_medium", "eps1", 1.1, float)
    med = constant_medium(cone, eps1=eps1, mu1=cfg.get("born_medium", "mu1", 1.0, float),
                          sigma1=cfg.get("born_medium", "sigma1", 0.0, float))
    inc = plane_wave_incident(cfg.vector("born_medium", "polarization", np.array([1.0, 0, 0])),
                              cfg.vector("born_medium", "direction", np.array([0.0, 0, 1.0])),
                              bg)
    pat = born_far_field(med, inc, bg, spec=spec)
    norm = pat.l2_norm()
    ok = norm > 10.0 * NOISE_FLOOR and far_field_equiv_check(pat) <= 1e-8
    pattern_to_csv(pat, out / f"{name}.csv")
    figs = [plotting.pattern_heatmap(out / f"{name}_pattern.png", pat,
                                     "Born medium pattern (first-order)")]
    return ok, {"l2_norm": norm, "noise_floor": NOISE_FLOOR, "note": BORN_NOTE,
                "eps1": eps1}, [str(out / f"{name}.csv")], figs


@experiment("herglotz_bounds",
            "CGO norm-ratio sweeps, the C^1 remainder sweep, and the closed-form check",
            "Herglotz-route estimates: norm ratios bounded, remainder controlled")
def _exp_herglotz(cfg, bg, spec, out, name):
    cone = _cone_block(cfg, "main", 30.0)
    taus = cfg.schedule("tau", [20.0, 40.0, 80.0, 160.0, 320.0], minimum=4)
    sweep = verify_cgo_norm_bounds(cone, bg, taus, spec=spec)
    rem = remainder_bound_check(cone, zeta=cfg.get("herglotz_bounds", "zeta", 3.0, float),
                                beta=cfg.get("herglotz_bounds", "beta", 1.0, float),
                                a=cfg.get("herglotz_bounds", "a", 1.5, float),
                                j_list=cfg.schedule("j", [4.0, 8.0, 16.0, 32.0]),
                                k=bg.k, spec=spec)
    kern = constant_kernel([1.0, 0.0, 0.0], k1=bg.k)
    E = herglotz_electric(kern, 32)
    rng = np.random.default_rng(cfg.get("experiment", "seed", 1234, int))
    pts = rng.normal(size=(50, 3))
    pts = pts / np.linalg.norm(pts, axis=1)[:, None] * rng.uniform(0.1, 10.0 / bg.k, 50)[:, None]
    r = np.linalg.norm(pts, axis=1)
    closed = 4.0 * np.pi * np.sinc(bg.k * r / np.pi)[:, None] * np.array([1.0, 0, 0])
    closed_err = float(np.abs(E(pts) - closed).max())
    rows = []
    for row in sweep.rows:
        rows.append({"sweep": "norm_ratios", "x": row["tau"],
                     "l2_ratio": row["l2_ratio"], "int_ratio": row["int_ratio"],
                     "remainder_ratio": row["remainder_ratio"]})
    for row in rem.rows:
        rows.append({"sweep": "j_remainder", "x": row["j"], "l2_ratio": row["tau"],
                     "int_ratio": row["value"], "remainder_ratio": row["ratio"]})
    ok = sweep.verdict and rem.verdict and closed_err <= 1e-8
    csv = write_csv(out / f"{name}.csv",
                    ["sweep", "x", "l2_ratio", "int_ratio", "remainder_ratio"], rows)
    figs = [plotting.sweep_semilogx(
        out / f"{name}_ratios.png", sweep.column("tau"),
        {"||V|| tau^{3/2}": sweep.column("l2_ratio"),
         "|int V| tau^3": sweep.column("int_ratio"),
         "remainder tau^4": sweep.column("remainder_ratio")},
        "tau", "ratio", "CGO norm ratio sweeps")]
    return ok, {"norm_sweep_pass": sweep.verdict, "remainder_pass": rem.verdict,
                "closed_form_error": closed_err, "note": SYNTHETIC_NOTE}, [csv], figs


@experiment("apex_average",
            "local apex averages for planted vanishing and non-vanishing fields",
            "measure-average vanishing criterion at the apex")
def _exp_average(cfg, bg, spec, out, name):
    from .fields import ComplexVectorField
    cone = _cone_block(cfg, "main", 30.0)
    rhos = cfg.schedule("rho", [0.2, 0.1, 0.05, 0.025], monotone="decreasing")
    linear = ComplexVectorField(lambda pts: (pts - cone.apex).astype(complex),
                                smoothness="C1", label="linear")
    const = constant_field([0.7, 0.0, 0.2], label="constant")
    prof_lin = apex_average_profile(linear, cone, rhos, spec=spec)
    prof_const = apex_average_profile(const, cone, rhos, spec=spec)
    rows = []
    for tag, prof in (("linear", prof_lin), ("constant", prof_const)):
        for row in prof.rows:
            rows.append({"field": tag, "rho": row["rho"], "average": row["average"]})
    ok = prof_lin.verdict == "vanishing" and prof_const.verdict == "non-vanishing"
    csv = write_csv(out / f"{name}.csv", ["field", "rho", "average"], rows)
    figs = [plotting.profile_plot(
        out / f"{name}_profiles.png",
        {"linear (vanishing)": ([r["rho"] for r in prof_lin.rows],
                                [r["average"] for r in prof_lin.rows]),
         "constant (non-vanishing)": ([r["rho"] for r in prof_const.rows],
                                      [r["average"] for r in prof_const.rows])},
        "rho", "local average of |field|", "apex averages")]
    return ok, {"linear_verdict": prof_lin.verdict,
                "constant_verdict": prof_const.verdict,
                "linear_extrapolated": prof_lin.extrapolated,
                "note": SYNTHETIC_NOTE}, [csv], figs


# --- runner -------------------------------------------------------------------------------

def list_experiments() -> str:
    width = max(len(n) for n in _REGISTRY)
    lines = [f"{'experiment':<{width}}  claim / description",
             f"{'-' * width}  {'-' * 40}"]
    for key in _REGISTRY:  # insertion order is registration order, stable
        fn, desc, claim = _REGISTRY[key]
        lines.append(f"{key:<{width}}  {claim}")
        lines.append(f"{'':<{width}}    {desc}")
    return "\n".join(lines) + "\n"


def run_experiment(config_path, out_dir=None, threads=None, plot=True) -> int:
    started = time.time()
    try:
        cfg = load_config(config_path)
        name = cfg.get("experiment", "name")
        if name not in _REGISTRY:
            raise UnknownExperiment(f"unknown experiment {name!r}; see 'conic-em list'")
        parallel.set_workers(threads)
        out = Path(out_dir) if out_dir else Path(cfg.get("experiment", "out", "."))
        out.mkdir(parents=True, exist_ok=True)
        bg = _background(cfg)
        spec = _quad_spec(cfg)
        fn, _, claim = _REGISTRY[name]
        ok, details, outputs, figs = fn(cfg, bg, spec, out, name)
        verdict_path = write_verdict(out / f"{name}.verdict.json", {
            "experiment": name,
            "claim": claim,
            "pass": bool(ok),
            "seed": cfg.get("experiment", "seed", 1234, int),
            "details": details,
        })
        if not plot:
            for f in figs:
                Path(f).unlink(missing_ok=True)
            figs = []
        with open(config_path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        write_verdict(out / "manifest.json", {
            "experiment": name,
            "config_sha256": digest,
            "package_version": __version__,
            "numpy_version": np.__version__,
            "wall_time_s": time.time() - started,
            "threads": parallel.get_workers(),
            "outputs": sorted(outputs + [verdict_path] + figs),
        })
        return 0 if ok else 2
    except (ConfigParse, UnknownExperiment) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConicEMError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="conic-em",
                                 description="conical-corner scattering experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment from a config file")
    runp.add_argument("config")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--threads", type=int, default=None,
                      help="worker cap (CONIC_EM_THREADS is the fallback)")
    runp.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    sub.add_parser("list", help="list registered experiments")
    args = ap.parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_experiments())
        return 0
    return run_experiment(args.config, out_dir=args.out, threads=args.threads,
                          plot=not args.no_plot)


if __name__ == "__main__":
    sys.exit(main())
