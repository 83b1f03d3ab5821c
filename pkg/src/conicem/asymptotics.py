"""Executable estimate checks: radial moments, the cone exponential integral,
its large-tau lower bound, CGO norm sweeps, and decay-exponent fitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import gamma as _gamma

import numpy as np
from scipy.special import roots_jacobi

from .errors import (
    AngleOutOfRange,
    DirectionBoundViolated,
    InsufficientData,
    NonpositiveValue,
    NoUniformBound,
    PreconditionViolated,
)
from .fields import CGOParams, rho_p
from .geometry import ConeSpec, cone_direction_bound, cone_frame
from .quadrature import DEFAULT_SPEC, QuadratureSpec, gauss_legendre, integrate_cone


# --- radial moments (truncated Gamma identities) -----------------------------------

@dataclass(frozen=True)
class RadialMoment:
    """Result of the truncated moment integral int_0^cutoff r^alpha e^{-eta r} dr."""

    full: complex
    truncated: complex
    tail: complex
    bound_applicable: bool
    bound_value: float
    bound_ok: bool | None


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, alpha: float):
    # weight (1+x)^alpha on [-1, 1]
    x, w = roots_jacobi(n, 0.0, alpha)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def radial_moment(alpha: float, eta: complex, cutoff: float,
                  quad_order: int = 48) -> RadialMoment:
    """Full/truncated/tail decomposition of int r^alpha e^{-eta r} dr.

    full = Gamma(alpha+1)/eta^(alpha+1) (principal branch, Re eta > 0);
    truncated is computed by Gauss-Jacobi quadrature with weight r^alpha,
    independent of the Gamma formula; tail = full - truncated.  The tail bound
    |tail| <= (2/Re eta) e^{-cutoff Re(eta)/2} is checked whenever
    Re eta >= 2 alpha / e.
    """
    eta = complex(eta)
    if not alpha > 0:
        raise PreconditionViolated(f"alpha must be positive, got {alpha}")
    if not eta.real > 0:
        raise PreconditionViolated(f"Re(eta) must be positive, got {eta.real}")
    if not 0.0 < cutoff < np.e:
        raise PreconditionViolated(f"cutoff must lie in (0, e), got {cutoff}")
    full = _gamma(alpha + 1.0) / eta ** (alpha + 1.0)
    x, w = _jacobi_rule(quad_order, alpha)
    r = cutoff * 0.5 * (x + 1.0)
    truncated = (cutoff * 0.5) ** (alpha + 1.0) * np.sum(w * np.exp(-eta * r))
    tail = full - truncated
    applicable = eta.real >= 2.0 * alpha / np.e
    bound = 2.0 / eta.real * np.exp(-0.5 * cutoff * eta.real)
    ok = bool(abs(tail) <= bound) if applicable else None
    return RadialMoment(full=complex(full), truncated=complex(truncated),
                        tail=complex(tail), bound_applicable=applicable,
                        bound_value=float(bound), bound_ok=ok)


def tail_by_quadrature(alpha: float, eta: complex, cutoff: float,
                       panels: int = 8, order: int = 48) -> complex:
    """Independent quadrature of int_cutoff^inf r^alpha e^{-eta r} dr on (cutoff, cutoff+40/Re eta)."""
    eta = complex(eta)
    upper = cutoff + 40.0 / eta.real
    edges = np.linspace(cutoff, upper, panels + 1)
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        r, w = gauss_legendre(order, lo, hi)
        total += np.sum(w * r**alpha * np.exp(-eta * r))
    return total


# --- cone exponential integral ------------------------------------------------------

_SERIES_TERMS = 26


def _power_exp_integral(m: int, eta, r0: float):
    """int_0^{r0} r^m e^{-eta r} dr for m in {2, 3}; series branch avoids cancellation."""
    eta = np.asarray(eta, dtype=complex)
    z = eta * r0
    out = np.empty(eta.shape, dtype=complex)
    small = np.abs(z) < 0.5
    if np.any(small):
        zs = z[small]
        acc = np.zeros_like(zs)
        term = np.ones_like(zs)
        for j in range(_SERIES_TERMS):
            acc += term / (j + m + 1.0)
            term *= -zs / (j + 1.0)
        out[small] = r0 ** (m + 1) * acc
    big = ~small
    if np.any(big):
        zb = z[big]
        if m == 2:
            poly = zb * zb + 2.0 * zb + 2.0
            out[big] = (2.0 - np.exp(-zb) * poly) / eta[big] ** 3
        elif m == 3:
            poly = zb**3 + 3.0 * zb * zb + 6.0 * zb + 6.0
            out[big] = (6.0 - np.exp(-zb) * poly) / eta[big] ** 4
        else:
            raise ValueError("only m = 2, 3 supported")
    return out


def _angular_grid(cone: ConeSpec, spec: QuadratureSpec):
    # trapezoid in phi: spectrally accurate for the periodic integrand and
    # shift-invariant, so closed_radial results are rigid-motion invariant
    th, wth = gauss_legendre(spec.polar_order, 0.0, cone.half_angle)
    n_phi = 2 * spec.azimuthal_order
    ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wph = np.full(n_phi, 2.0 * np.pi / n_phi)
    sin_t = np.sin(th)
    xhat = np.empty((th.size * ph.size, 3))
    xhat[:, 0] = np.einsum("t,p->tp", sin_t, np.cos(ph)).ravel()
    xhat[:, 1] = np.einsum("t,p->tp", sin_t, np.sin(ph)).ravel()
    xhat[:, 2] = np.repeat(np.cos(th), ph.size)
    w = np.einsum("t,p->tp", wth * sin_t, wph).ravel()
    return xhat, w


def _cone_moment_closed_radial(cone: ConeSpec, rho: np.ndarray, m: int,
                               spec: QuadratureSpec) -> complex:
    """int_K r_rel^{m-2} e^{rho.x} dx via closed-form radial integral + angular quadrature."""
    frame = cone_frame(cone)
    rho_c = frame.rotation @ np.asarray(rho, dtype=complex)
    phase0 = np.exp(np.asarray(rho, dtype=complex) @ cone.apex)
    xhat, w = _angular_grid(cone, spec)
    eta = -(xhat @ rho_c)
    radial = _power_exp_integral(m, eta, cone.radius)
    return complex(phase0 * np.sum(w * radial))


def cone_exp_integral(cone: ConeSpec, params: CGOParams,
                      method: str = "closed_radial",
                      spec: QuadratureSpec = DEFAULT_SPEC) -> complex:
    """I(tau) = int_{K_{r0}} e^{rho.x} dx.

    ``closed_radial`` integrates the radial variable exactly (truncated Gamma)
    and quadratures the angles; ``full_3d`` uses the volume rule with the
    tau-substitution panels.  The CGO direction must admit a uniform bound on
    the cone (raises DirectionBoundViolated otherwise).
    """
    try:
        cone_direction_bound(cone, params.d)
    except NoUniformBound as exc:
        raise DirectionBoundViolated(str(exc)) from exc
    rho, _ = rho_p(params)
    if method == "closed_radial":
        return _cone_moment_closed_radial(cone, rho, 2, spec)
    if method == "full_3d":
        return complex(integrate_cone(lambda pts: np.exp(pts @ rho), cone, spec,
                                      tau_hint=params.tau))
    raise ValueError(f"unknown method {method!r}")


def lower_bound_constant(half_angle: float) -> float:
    """C_K = sqrt(2) pi (1 - cos theta0)."""
    if not 0.0 < half_angle < np.pi / 2:
        raise AngleOutOfRange(f"half angle must lie in (0, pi/2), got {half_angle}")
    return float(np.sqrt(2.0) * np.pi * (1.0 - np.cos(half_angle)))


def normalized_limit_closed_form(half_angle: float) -> float:
    """Limit of tau^3 |I(tau)| (1+k^2/tau^2)^(3/2): equals 2 pi cos(theta0) sin^2(theta0).

    Derived from the azimuthal integral int_0^{2pi} (A + B cos phi)^{-3} dphi =
    pi [3A^2 (A^2-B^2)^{-5/2} - (A^2-B^2)^{-3/2}] with A = cos(theta),
    B = -i sin(theta), A^2 - B^2 = 1.
    """
    if not 0.0 < half_angle < np.pi / 2:
        raise AngleOutOfRange(f"half angle must lie in (0, pi/2), got {half_angle}")
    return float(2.0 * np.pi * np.cos(half_angle) * np.sin(half_angle) ** 2)


def normalized_limit_by_quadrature(half_angle: float, n_theta: int = 96,
                                   n_phi: int = 192) -> float:
    """|2 ∫∫ sin(theta) (d.xhat + i d_perp.xhat)^{-3} dtheta dphi| with d=-e3, d_perp=e1."""
    th, wth = gauss_legendre(n_theta, 0.0, half_angle)
    ph, wph = gauss_legendre(n_phi, 0.0, 2.0 * np.pi)
    ct, st = np.cos(th)[:, None], np.sin(th)[:, None]
    base = -ct + 1j * st * np.cos(ph)[None, :]
    integrand = 2.0 * st / base**3
    return float(abs(np.sum((wth[:, None] * wph[None, :]) * integrand)))


# --- sweeps -------------------------------------------------------------------------

def _default_dperp(axis: np.ndarray) -> np.ndarray:
    seed = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    v = seed - (seed @ axis) * axis
    return v / np.linalg.norm(v)


def _canonicalize(cone: ConeSpec, d, d_perp):
    """Map cone to apex 0 / axis e3 and rotate the CGO directions along."""
    frame = cone_frame(cone)
    canon = ConeSpec(apex=np.zeros(3), axis=np.array([0.0, 0.0, 1.0]),
                     half_angle=cone.half_angle, radius=cone.radius)
    return canon, frame.rotation @ d, frame.rotation @ d_perp


def _check_schedule(tau_schedule, minimum=4):
    taus = [float(t) for t in tau_schedule]
    if len(taus) < minimum:
        raise PreconditionViolated(f"tau schedule needs >= {minimum} entries, got {len(taus)}")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise PreconditionViolated("tau schedule must be strictly increasing")
    return taus


@dataclass
class SweepReport:
    """Generic sweep result: per-tau rows plus a verdict and context values."""

    rows: list[dict] = field(default_factory=list)
    verdict: bool = False
    context: dict = field(default_factory=dict)

    def column(self, key):
        return np.array([row[key] for row in self.rows])


def verify_lemma24(cone: ConeSpec, bg, tau_schedule,
                   d=None, d_perp=None,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> SweepReport:
    """Sweep of the normalized cone exponential integral against C_K.

    Rows carry (tau, abs_I, normalized, margin, margin_robust, verdict); the
    overall verdict requires margin >= -0.01 C_K for every tau above the
    schedule median and a Cauchy normalized sequence (shrinking increments).
    margin_robust additionally subtracts the displayed remainder magnitude
    (4 pi theta0/(tau delta)) e^{-r0 tau delta/2} before comparing.
    """
    taus = _check_schedule(tau_schedule)
    d = -cone.axis if d is None else np.asarray(d, dtype=float)
    d_perp = _default_dperp(cone.axis) if d_perp is None else np.asarray(d_perp, dtype=float)
    try:
        delta = cone_direction_bound(cone, d)
    except NoUniformBound as exc:
        raise DirectionBoundViolated(str(exc)) from exc
    # work in the apex-anchored frame so the sweep is rigid-motion invariant
    cone, d, d_perp = _canonicalize(cone, d, d_perp)
    c_k = lower_bound_constant(cone.half_angle)
    k = bg.k
    rows = []
    for tau in taus:
        params = CGOParams(d=d, d_perp=d_perp, tau=tau, k=k)
        val = cone_exp_integral(cone, params, "closed_radial", spec)
        normalized = tau**3 * abs(val) * (1.0 + (k / tau) ** 2) ** 1.5
        remainder = (4.0 * np.pi * cone.half_angle / (tau * delta)
                     * np.exp(-0.5 * cone.radius * tau * delta))
        norm_robust = normalized - tau**3 * (1.0 + (k / tau) ** 2) ** 1.5 * remainder
        rows.append({
            "tau": tau,
            "abs_I": abs(val),
            "normalized": normalized,
            "margin": normalized - c_k,
            "margin_robust": norm_robust - c_k,
        })
    median = float(np.median(taus))
    seq = np.array([r["normalized"] for r in rows])
    diffs = np.abs(np.diff(seq))
    cauchy = bool(np.all(np.diff(diffs) <= 1e-12 * max(1.0, seq.max())))
    ok_rows = True
    for r in rows:
        above = r["tau"] > median
        r["verdict"] = ("pass" if r["margin"] >= -0.01 * c_k else "fail") if above else "n/a"
        if above and r["verdict"] == "fail":
            ok_rows = False
    report = SweepReport(rows=rows, verdict=ok_rows and cauchy)
    report.context = {
        "C_K": c_k,
        "delta": delta,
        "median_tau": median,
        "cauchy": cauchy,
        "angular_limit": normalized_limit_by_quadrature(cone.half_angle),
    }
    return report


def verify_cgo_norm_bounds(cone: ConeSpec, bg, tau_schedule,
                           d=None, d_perp=None,
                           spec: QuadratureSpec = DEFAULT_SPEC) -> SweepReport:
    """Boundedness sweep for ||V||_L2 tau^{3/2}, |int V| tau^3 and the C^1-remainder ratio.

    The remainder row integrates deltaE(x) = |x - apex| chat against V with
    chat = d_perp (so chat.p = 1), scaled by tau^4 as in the square-integrable
    remainder estimate.  Verdict: both norm-ratio sequences bounded
    (max/min <= 2) and eventually monotone (monotone over the upper half).
    """
    taus = _check_schedule(tau_schedule)
    d = -cone.axis if d is None else np.asarray(d, dtype=float)
    d_perp = _default_dperp(cone.axis) if d_perp is None else np.asarray(d_perp, dtype=float)
    try:
        cone_direction_bound(cone, d)
    except NoUniformBound as exc:
        raise DirectionBoundViolated(str(exc)) from exc
    cone, d, d_perp = _canonicalize(cone, d, d_perp)
    k = bg.k
    rows = []
    for tau in taus:
        params = CGOParams(d=d, d_perp=d_perp, tau=tau, k=k)
        rho, p = rho_p(params)
        # ||V||^2 = |p|^2 int e^{2 tau d.(x - apex)} dx; the apex phase cancels in |.|
        sq = _cone_moment_closed_radial(cone, (2.0 * tau) * d.astype(complex), 2, spec)
        l2 = float(np.sqrt(np.linalg.norm(p) ** 2 * abs(sq)))
        ival = cone_exp_integral(cone, params, "closed_radial", spec)
        moment3 = _cone_moment_closed_radial(cone, rho, 3, spec)
        rows.append({
            "tau": tau,
            "l2_ratio": l2 * tau**1.5,
            "int_ratio": float(np.linalg.norm(p)) * abs(ival) * tau**3,
            "remainder_ratio": abs(complex(d_perp @ p) * moment3) * tau**4,
        })
    verdicts = {}
    for key in ("l2_ratio", "int_ratio"):
        seq = np.array([r[key] for r in rows])
        bounded = seq.max() / seq.min() <= 2.0
        half = seq[len(seq) // 2:]
        mono = bool(np.all(np.diff(half) <= 1e-9 * half.max())
                    or np.all(np.diff(half) >= -1e-9 * half.max()))
        verdicts[key] = bounded and mono
    report = SweepReport(rows=rows, verdict=all(verdicts.values()))
    rem = np.array([r["remainder_ratio"] for r in rows])
    report.context = {"verdicts": verdicts,
                      "remainder_bounded": bool(rem.max() / max(rem.min(), 1e-300) <= 4.0)}
    return report


# --- decay fits ------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    """Least-squares power law fit log(value) = slope * log(tau) + intercept."""

    slope: float
    intercept: float
    r2: float
    tau_range: tuple[float, float]

    @property
    def exponent(self) -> float:
        """Decay exponent as a positive number (value ~ tau^-exponent)."""
        return -self.slope


def fit_decay_exponent(tau_samples, values) -> DecayFit:
    taus = np.asarray(list(tau_samples), dtype=float)
    vals = np.asarray(list(values), dtype=float)
    if taus.size < 3:
        raise InsufficientData(f"need >= 3 samples, got {taus.size}")
    if np.any(taus <= 0):
        raise NonpositiveValue("tau samples must be positive")
    if np.any(vals <= 0):
        raise NonpositiveValue("values must be positive for log-log fitting")
    lx, ly = np.log(taus), np.log(vals)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-28 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return DecayFit(slope=float(slope), intercept=float(intercept), r2=r2,
                    tau_range=(float(taus.min()), float(taus.max())))
