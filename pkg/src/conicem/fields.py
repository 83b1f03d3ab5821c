"""Vector fields: CGO test pairs, plane waves, Herglotz waves, bump and Hölder sources.

Every field evaluates on point batches of shape (N, 3) (a single (3,) point is
accepted too) and returns complex C^3 values.  Exponential-type fields carry
their curl analytically (curl(q e^{rho.x}) = rho ^ q e^{rho.x}); finite
differences exist only as an independent cross-check in
:func:`maxwell_residual`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NonpositiveRadius,
    NonTransversePolarization,
    PreconditionViolated,
    QuadratureBudgetExceeded,
    SupportMarginViolated,
    WavenumberMismatch,
)
from .geometry import Background, Ball, ConeSpec
from .quadrature import sphere_rule

_EVAL_CHUNK = 4096


def _as_unit(v, name):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-12:
        raise PreconditionViolated(f"{name} must be a unit vector (|{name}| = {n:.3e})")
    return v


class ComplexVectorField:
    """Evaluable map x -> C^3 with support and smoothness metadata.

    Parameters
    ----------
    eval_fn : callable
        Maps an (N, 3) float array to an (N, 3) complex array.
    support : ConeSpec | Ball | CoronalSpec | None
        Declared support; None means all of R^3.
    smoothness : str
        One of "holder", "C1", "C_inf", "analytic".
    holder_alpha : float, optional
        Required (in (0,1)) when smoothness == "holder".
    curl_fn : callable, optional
        Analytic curl with the same calling convention, when available.
    """

    __slots__ = ("eval_fn", "support", "smoothness", "holder_alpha", "curl_fn", "label")

    def __init__(self, eval_fn, support=None, smoothness="C_inf",
                 holder_alpha=None, curl_fn=None, label=""):
        if smoothness not in ("holder", "C1", "C_inf", "analytic"):
            raise ValueError(f"unknown smoothness tag {smoothness!r}")
        if smoothness == "holder":
            if holder_alpha is None or not (0.0 < holder_alpha < 1.0):
                raise ValueError("holder fields must store alpha in (0, 1)")
        self.eval_fn = eval_fn
        self.support = support
        self.smoothness = smoothness
        self.holder_alpha = holder_alpha
        self.curl_fn = curl_fn
        self.label = label

    def __call__(self, x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        vals = self.eval_fn(np.atleast_2d(pts))
        return vals[0] if single else vals

    @property
    def has_curl(self) -> bool:
        return self.curl_fn is not None

    def curl(self, x):
        if self.curl_fn is None:
            raise PreconditionViolated(f"field {self.label!r} carries no analytic curl")
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        vals = self.curl_fn(np.atleast_2d(pts))
        return vals[0] if single else vals


def constant_field(value, support=None, label="constant"):
    value = np.asarray(value, dtype=complex)

    def ev(pts):
        return np.broadcast_to(value, (pts.shape[0], 3)).copy()

    def cu(pts):
        return np.zeros((pts.shape[0], 3), dtype=complex)

    return ComplexVectorField(ev, support=support, smoothness="analytic",
                              curl_fn=cu, label=label)


def zero_field(support=None):
    return constant_field(np.zeros(3), support=support, label="zero")


def linear_combination(fields, coeffs, support=None, smoothness=None, label=""):
    """Pointwise sum(c_i * F_i); keeps analytic curls when every term has one."""
    coeffs = [complex(c) for c in coeffs]
    if smoothness is None:
        order = {"holder": 0, "C1": 1, "C_inf": 2, "analytic": 3}
        smoothness = min((f.smoothness for f in fields), key=order.get)
    alpha = None
    if smoothness == "holder":
        alphas = [f.holder_alpha for f in fields if f.smoothness == "holder"]
        alpha = min(alphas)

    def ev(pts):
        acc = np.zeros((pts.shape[0], 3), dtype=complex)
        for c, f in zip(coeffs, fields):
            acc += c * f.eval_fn(pts)
        return acc

    curl = None
    if all(f.has_curl for f in fields):
        def curl(pts):
            acc = np.zeros((pts.shape[0], 3), dtype=complex)
            for c, f in zip(coeffs, fields):
                acc += c * f.curl_fn(pts)
            return acc

    return ComplexVectorField(ev, support=support, smoothness=smoothness,
                              holder_alpha=alpha, curl_fn=curl, label=label)


# --- CGO test pairs -----------------------------------------------------------

@dataclass(frozen=True)
class CGOParams:
    """The quadruple (d, d_perp, tau, k) of the complex-exponential test fields."""

    d: np.ndarray
    d_perp: np.ndarray
    tau: float
    k: float

    def __post_init__(self):
        d = _as_unit(self.d, "d")
        dp = _as_unit(self.d_perp, "d_perp")
        if abs(d @ dp) > 1e-12:
            raise PreconditionViolated(f"d and d_perp must be orthogonal (d.d_perp = {d @ dp:.3e})")
        if not self.tau > 0:
            raise PreconditionViolated("tau must be positive")
        if self.k < 0:
            raise PreconditionViolated("k must be nonnegative")
        d = d.copy(); d.setflags(write=False)
        dp = dp.copy(); dp.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "d_perp", dp)


def rho_p(params: CGOParams):
    """Complex vectors rho = tau d + i sqrt(tau^2+k^2) d_perp, p = d_perp - i sqrt(1+k^2/tau^2) d.

    They satisfy rho.p = 0, rho^p = -k^2 (d^d_perp)/tau and rho.rho = -k^2.
    """
    tau, k = params.tau, params.k
    rho = tau * params.d + 1j * np.sqrt(tau**2 + k**2) * params.d_perp
    p = params.d_perp - 1j * np.sqrt(1.0 + (k / tau) ** 2) * params.d
    return rho, p


def exp_field(amplitude, rho, support=None, label="exp"):
    """q e^{rho.x} with exact curl rho ^ q e^{rho.x}; rho may be complex."""
    q = np.asarray(amplitude, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    rq = np.cross(rho, q)

    def ev(pts):
        return np.exp(pts @ rho)[:, None] * q

    def cu(pts):
        return np.exp(pts @ rho)[:, None] * rq

    return ComplexVectorField(ev, support=support, smoothness="analytic",
                              curl_fn=cu, label=label)


def _check_wavenumber(params: CGOParams, bg: Background):
    if abs(params.k - bg.k) > 1e-12 * max(1.0, bg.k):
        raise WavenumberMismatch(f"params.k = {params.k} but background k = {bg.k}")


def cgo_pair_electric(params: CGOParams, bg: Background):
    """(V, W) = (p e^{rho.x}, rho^p e^{rho.x}/(i omega mu0)); solves the source-free system."""
    _check_wavenumber(params, bg)
    rho, p = rho_p(params)
    V = exp_field(p, rho, label="cgo_V_electric")
    W = exp_field(np.cross(rho, p) / (1j * bg.omega * bg.mu0), rho, label="cgo_W_electric")
    return V, W


def cgo_pair_magnetic(params: CGOParams, bg: Background):
    """(V, W) = (-rho^p e^{rho.x}/(i omega eps0), p e^{rho.x}); the dual pair."""
    _check_wavenumber(params, bg)
    rho, p = rho_p(params)
    V = exp_field(-np.cross(rho, p) / (1j * bg.omega * bg.eps0), rho, label="cgo_V_magnetic")
    W = exp_field(p, rho, label="cgo_W_magnetic")
    return V, W


def plane_wave_incident(polarization, direction, bg: Background):
    """Entire plane-wave pair E = p e^{ik d.x}, H = (k/(omega mu0)) d^p e^{ik d.x}."""
    d = _as_unit(direction, "direction")
    p = np.asarray(polarization, dtype=complex)
    if abs(p @ d) > 1e-12 * max(1.0, float(np.linalg.norm(p))):
        raise NonTransversePolarization(f"polarization.direction = {p @ d:.3e} != 0")
    rho = 1j * bg.k * d
    E = exp_field(p, rho, label="plane_wave_E")
    H = exp_field(bg.k / (bg.omega * bg.mu0) * np.cross(d, p), rho, label="plane_wave_H")
    return E, H


# --- Herglotz waves -------------------------------------------------------------

@dataclass(frozen=True)
class HerglotzKernel:
    """Square-integrable kernel g: S^2 -> C^3 with its wavenumber and optional rates."""

    g: callable
    k1: float
    rates: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if not self.k1 > 0:
            raise PreconditionViolated("k1 must be positive")
        if self.rates is not None:
            zeta, beta, zeta_p, beta_p = self.rates
            if not (min(zeta, beta, zeta_p, beta_p) > 0 and beta < 2.0 / 3.0 * zeta
                    and beta_p < 2.0 / 3.0 * zeta_p):
                raise PreconditionViolated(
                    "rates must be positive with beta < (2/3) zeta and beta' < (2/3) zeta'")
        dirs, w = sphere_rule(16)
        vals = np.asarray(self.g(dirs), dtype=complex)
        norm2 = float(w @ np.sum(np.abs(vals) ** 2, axis=1))
        if not np.isfinite(norm2):
            raise PreconditionViolated("kernel has non-finite quadrature norm")


def constant_kernel(value, k1, rates=None) -> HerglotzKernel:
    value = np.asarray(value, dtype=complex)
    return HerglotzKernel(g=lambda d: np.broadcast_to(value, (d.shape[0], 3)).copy(),
                          k1=float(k1), rates=rates)


def _superposition_field(coeff_vectors, k1, dirs, label):
    # sum_i c_i e^{i k1 x.d_i}, evaluated in chunks to bound the phase matrix.
    c = np.ascontiguousarray(coeff_vectors)
    d_scaled = 1j * k1 * dirs

    def ev(pts):
        out = np.empty((pts.shape[0], 3), dtype=complex)
        for lo in range(0, pts.shape[0], _EVAL_CHUNK):
            hi = min(lo + _EVAL_CHUNK, pts.shape[0])
            out[lo:hi] = np.exp(pts[lo:hi] @ d_scaled.T) @ c
        return out

    return ev


def herglotz_electric(kernel: HerglotzKernel, quad_order: int) -> ComplexVectorField:
    """E_g(x) = ∫_{S^2} g(d) e^{i k1 x.d} dσ(d), by the product sphere rule.

    Solves curl curl E - k1^2 E = 0; with a constant kernel c the closed form is
    4π sinc(k1 |x|) c (order-zero spherical Bessel factor).
    """
    if quad_order < 4:
        raise PreconditionViolated("quad_order must be >= 4")
    dirs, w = sphere_rule(quad_order)
    if dirs.shape[0] > 10**7:
        raise QuadratureBudgetExceeded("sphere rule too large")
    g_vals = np.asarray(kernel.g(dirs), dtype=complex)
    ev = _superposition_field(w[:, None] * g_vals, kernel.k1, dirs, "herglotz_E")
    cu = _superposition_field((1j * kernel.k1 * w)[:, None] * np.cross(dirs, g_vals),
                              kernel.k1, dirs, "curl_herglotz_E")
    return ComplexVectorField(ev, support=None, smoothness="analytic",
                              curl_fn=cu, label="herglotz_electric")


def herglotz_kernel_magnetic(kernel: HerglotzKernel, bg: Background,
                             prefactor_denominator: float | None = None):
    """Magnetic kernel f(d) = (k1 / denominator) d ^ g(d); denominator defaults to omega*mu0.

    The denominator is exposed because the printed normalization mixes the
    medium wavenumber k1 with the background mu0; callers may override it.
    """
    den = bg.omega * bg.mu0 if prefactor_denominator is None else float(prefactor_denominator)
    fac = kernel.k1 / den

    def f(dirs):
        return fac * np.cross(dirs, np.asarray(kernel.g(dirs), dtype=complex))

    return f


def herglotz_magnetic(kernel: HerglotzKernel, bg: Background, quad_order: int,
                      prefactor_denominator: float | None = None) -> ComplexVectorField:
    """H_f with kernel f(d) = (k1/(omega mu0)) d^g(d); equals curl(E_g)/(i omega mu0)."""
    if quad_order < 4:
        raise PreconditionViolated("quad_order must be >= 4")
    f = herglotz_kernel_magnetic(kernel, bg, prefactor_denominator)
    dirs, w = sphere_rule(quad_order)
    f_vals = np.asarray(f(dirs), dtype=complex)
    ev = _superposition_field(w[:, None] * f_vals, kernel.k1, dirs, "herglotz_H")
    cu = _superposition_field((1j * kernel.k1 * w)[:, None] * np.cross(dirs, f_vals),
                              kernel.k1, dirs, "curl_herglotz_H")
    return ComplexVectorField(ev, support=None, smoothness="analytic",
                              curl_fn=cu, label="herglotz_magnetic")


# --- compactly supported and Hölder sources ----------------------------------------

def bump_field(center, radius, polarization) -> ComplexVectorField:
    """C^inf field pol * exp(-1/(1 - |x-c|^2/R^2)) in the ball, identically 0 outside."""
    if not radius > 0:
        raise NonpositiveRadius(f"radius must be positive, got {radius}")
    c = np.asarray(center, dtype=float)
    pol = np.asarray(polarization, dtype=complex)
    r2inv = 1.0 / radius**2

    def profile(pts):
        u = np.sum((pts - c) ** 2, axis=-1) * r2inv
        out = np.zeros(pts.shape[0])
        inside = u < 1.0 - 1e-14
        out[inside] = np.exp(-1.0 / (1.0 - u[inside]))
        return out, u, inside

    def ev(pts):
        psi, _, _ = profile(pts)
        return psi[:, None] * pol

    def cu(pts):
        # curl(pol psi) = grad(psi) ^ pol;  grad(psi) = -psi/(1-u)^2 * 2(x-c)/R^2
        psi, u, inside = profile(pts)
        g = np.zeros(pts.shape[0])
        g[inside] = -psi[inside] / (1.0 - u[inside]) ** 2
        grad = (2.0 * r2inv) * g[:, None] * (pts - c)
        return np.cross(grad.astype(complex), pol)

    return ComplexVectorField(ev, support=Ball(center=c, radius=float(radius)),
                              smoothness="C_inf", curl_fn=cu, label="bump")


def plateau_field(center, radius, value) -> ComplexVectorField:
    """C^inf field equal to ``value`` at the center, supported in the ball.

    Radial profile chi(t) = exp(1 - 1/(1 - t^2)), t = |x-center|/radius:
    chi(0) = 1 and chi vanishes with all derivatives at t = 1.  Unlike
    :func:`bump_field` the center value is nonzero, which makes this the tip
    generator for apex-nonzero coronal sources.
    """
    if not radius > 0:
        raise NonpositiveRadius(f"radius must be positive, got {radius}")
    c = np.asarray(center, dtype=float)
    val = np.asarray(value, dtype=complex)
    r2inv = 1.0 / radius**2

    def ev(pts):
        u = np.sum((pts - c) ** 2, axis=-1) * r2inv
        chi = np.zeros(pts.shape[0])
        inside = u < 1.0 - 1e-14
        chi[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside]))
        return chi[:, None] * val

    return ComplexVectorField(ev, support=Ball(center=c, radius=float(radius)),
                              smoothness="C_inf", label="plateau")


def holder_source(center, alpha, c0, c1, chat, support=None) -> ComplexVectorField:
    """J(x) = c0 + c1 |x - center|^alpha chat: Hölder-alpha with known value c0 at the center."""
    if not (0.0 < alpha < 1.0):
        raise PreconditionViolated("alpha must lie in (0,1)")
    c = np.asarray(center, dtype=float)
    c0 = np.asarray(c0, dtype=complex)
    chat = np.asarray(chat, dtype=complex)

    def ev(pts):
        r = np.linalg.norm(pts - c, axis=-1)
        return c0 + (complex(c1) * r**alpha)[:, None] * chat

    return ComplexVectorField(ev, support=support, smoothness="holder",
                              holder_alpha=float(alpha), label="holder_source")


def rotational_power_field(apex, alpha, a_vec, support=None) -> ComplexVectorField:
    """H(x) = |x-apex|^alpha (a ^ (x-apex)) / (alpha+2), with exact curl.

    curl H = r^alpha [a - (alpha/(alpha+2)) (a.rhat) rhat]; for alpha = 0 the
    curl is exactly the constant a, which makes this the manufactured-data
    generator for both the constant and the planted-Hölder apex experiments.
    """
    if alpha < 0:
        raise PreconditionViolated("alpha must be >= 0")
    x0 = np.asarray(apex, dtype=float)
    a = np.asarray(a_vec, dtype=complex)

    def ev(pts):
        rel = pts - x0
        r = np.linalg.norm(rel, axis=-1)
        amp = r**alpha / (alpha + 2.0)
        crossed = np.cross(np.broadcast_to(a, rel.shape), rel.astype(complex), axis=-1)
        return amp[:, None] * crossed

    def cu(pts):
        rel = pts - x0
        r = np.linalg.norm(rel, axis=-1)
        ra = r**alpha
        with np.errstate(invalid="ignore", divide="ignore"):
            rhat = rel / np.where(r > 0, r, 1.0)[:, None]
        adot = rhat.astype(complex) @ a
        out = ra[:, None] * np.broadcast_to(a, rel.shape).copy()
        out -= (alpha / (alpha + 2.0)) * (ra * adot)[:, None] * rhat
        return out

    smooth = "C_inf" if alpha == 0.0 else "C1"
    return ComplexVectorField(ev, support=support, smoothness=smooth,
                              curl_fn=cu, label=f"rotational_power_alpha={alpha}")


# --- residual checks ----------------------------------------------------------------

def _support_margin(support, x) -> float:
    if support is None:
        return np.inf
    x = np.asarray(x, dtype=float)
    if isinstance(support, Ball):
        return float(support.radius - np.linalg.norm(x - support.center))
    if isinstance(support, ConeSpec):
        rel = x - support.apex
        r = np.linalg.norm(rel)
        if r == 0.0:
            return 0.0
        psi = np.arccos(np.clip(rel @ support.axis / r, -1.0, 1.0))
        if psi >= support.half_angle:
            return -(r * np.sin(psi - support.half_angle))
        return float(min(support.radius - r, r * np.sin(support.half_angle - psi)))
    raise TypeError(f"no margin rule for support {type(support).__name__}")


def fd_curl(field, x, h: float) -> np.ndarray:
    """Centered second-order finite-difference curl at a single point."""
    x = np.asarray(x, dtype=float)
    grad = np.empty((3, 3), dtype=complex)  # grad[j] = dF/dx_j
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        grad[j] = (field(x + e) - field(x - e)) / (2.0 * h)
    return np.array([grad[1][2] - grad[2][1],
                     grad[2][0] - grad[0][2],
                     grad[0][1] - grad[1][0]])


def maxwell_residual(E, H, J1, J2, bg: Background, x, h: float):
    """Finite-difference residuals of the source system at x.

    r1 = curl_h(E) - i omega mu0 H - J1,  r2 = curl_h(H) + i omega eps0 E - J2.
    The stencil must stay inside every declared support with margin >= 2h.
    """
    x = np.asarray(x, dtype=float)
    for f in (E, H, J1, J2):
        if _support_margin(f.support, x) < 2.0 * h:
            raise SupportMarginViolated(
                f"point {x} within 2h = {2 * h} of the boundary of {f.label!r} support")
    r1 = fd_curl(E, x, h) - 1j * bg.omega * bg.mu0 * H(x) - J1(x)
    r2 = fd_curl(H, x, h) + 1j * bg.omega * bg.eps0 * E(x) - J2(x)
    return r1, r2
