"""Deterministic product quadrature for cones, caps, lateral surfaces, spheres, balls.

All node sets are generated from Gauss--Legendre rules (plus the periodic
trapezoid rule on the sphere's azimuth), so a given (domain, spec) pair always
produces the same nodes in the same order.  Integrals are accumulated with
numpy reductions over that fixed order, which keeps runs bit-reproducible
regardless of worker count elsewhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, EmptyIntersection, PreconditionViolated
from .geometry import Ball, ConeSpec, ConvexPolytope, CoronalSpec, cone_frame


@dataclass(frozen=True)
class QuadratureSpec:
    """Orders of the product rules plus the tau-substitution switch."""

    radial_order: int = 32
    polar_order: int = 16
    azimuthal_order: int = 16
    tau_scaling: bool = True
    node_budget: int = 10**7

    def __post_init__(self):
        if min(self.radial_order, self.polar_order, self.azimuthal_order) < 2:
            raise PreconditionViolated("all quadrature orders must be >= 2")


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=128)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float, b: float):
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _radial_panels(r0: float, order: int, tau_hint: float | None, scaling: bool):
    """Radial nodes on [0, r0]; geometric panels toward 0 resolve e^{-tau r} decay."""
    if not scaling or tau_hint is None or tau_hint * r0 <= 8.0:
        return gauss_legendre(order, 0.0, r0)
    n_half = int(np.ceil(np.log2(tau_hint * r0)))
    n_half = min(max(n_half, 1), 48)
    edges = [r0 * 0.5**j for j in range(n_half + 1)] + [0.0]
    nodes, weights = [], []
    for hi, lo in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(order, lo, hi)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _check_budget(count: int, spec: QuadratureSpec):
    if count > spec.node_budget:
        raise BudgetExceeded(f"{count} nodes exceed budget {spec.node_budget}")


def _reduce(weights: np.ndarray, values) -> complex | np.ndarray:
    vals = np.asarray(values)
    if vals.ndim == 1:
        return complex(weights @ vals) if np.iscomplexobj(vals) else float(weights @ vals)
    return weights @ vals


# --- cone volume ---------------------------------------------------------------

def cone_nodes(cone: ConeSpec, spec: QuadratureSpec = DEFAULT_SPEC,
               tau_hint: float | None = None):
    """Physical-frame nodes and weights for the truncated cone volume."""
    r, wr = _radial_panels(cone.radius, spec.radial_order, tau_hint, spec.tau_scaling)
    th, wth = gauss_legendre(spec.polar_order, 0.0, cone.half_angle)
    ph, wph = gauss_legendre(spec.azimuthal_order, 0.0, 2.0 * np.pi)
    _check_budget(r.size * th.size * ph.size, spec)
    sin_t, cos_t = np.sin(th), np.cos(th)
    # canonical points: r x (theta x phi) meshes, jacobian r^2 sin(theta)
    st_cp = np.einsum("t,p->tp", sin_t, np.cos(ph)).ravel()
    st_sp = np.einsum("t,p->tp", sin_t, np.sin(ph)).ravel()
    ct = np.repeat(cos_t, ph.size)
    ang = np.column_stack([st_cp, st_sp, ct])
    pts = np.einsum("r,ad->rad", r, ang).reshape(-1, 3)
    w_ang = np.einsum("t,p->tp", wth * sin_t, wph).ravel()
    w = np.einsum("r,a->ra", wr * r * r, w_ang).ravel()
    frame = cone_frame(cone)
    return frame.to_physical_points(pts), w


def integrate_cone(f, cone: ConeSpec, spec: QuadratureSpec = DEFAULT_SPEC,
                   tau_hint: float | None = None):
    """Integrate a scalar- or C^3-valued integrand over the truncated cone."""
    pts, w = cone_nodes(cone, spec, tau_hint)
    return _reduce(w, f(pts))


# --- cone surfaces --------------------------------------------------------------

def cap_nodes(cone: ConeSpec, spec: QuadratureSpec = DEFAULT_SPEC):
    """Nodes, weights and outward normals on the spherical cap r = r0, angle <= theta0."""
    th, wth = gauss_legendre(spec.polar_order, 0.0, cone.half_angle)
    ph, wph = gauss_legendre(spec.azimuthal_order, 0.0, 2.0 * np.pi)
    _check_budget(th.size * ph.size, spec)
    sin_t, cos_t = np.sin(th), np.cos(th)
    st_cp = np.einsum("t,p->tp", sin_t, np.cos(ph)).ravel()
    st_sp = np.einsum("t,p->tp", sin_t, np.sin(ph)).ravel()
    ct = np.repeat(cos_t, ph.size)
    rhat = np.column_stack([st_cp, st_sp, ct])
    w = cone.radius**2 * np.einsum("t,p->tp", wth * sin_t, wph).ravel()
    frame = cone_frame(cone)
    pts = frame.to_physical_points(cone.radius * rhat)
    normals = frame.to_physical_vectors(rhat)
    return pts, w, normals


def integrate_cap(f, cone: ConeSpec, spec: QuadratureSpec = DEFAULT_SPEC):
    """Surface integral over the cap; the integrand receives (points, normals)."""
    pts, w, nu = cap_nodes(cone, spec)
    return _reduce(w, f(pts, nu))


def lateral_nodes(cone: ConeSpec, spec: QuadratureSpec = DEFAULT_SPEC,
                  tau_hint: float | None = None):
    """Nodes, weights and outward normals on the lateral surface theta = theta0."""
    r, wr = _radial_panels(cone.radius, spec.radial_order, tau_hint, spec.tau_scaling)
    ph, wph = gauss_legendre(spec.azimuthal_order, 0.0, 2.0 * np.pi)
    _check_budget(r.size * ph.size, spec)
    st, ct = np.sin(cone.half_angle), np.cos(cone.half_angle)
    cp, sp = np.cos(ph), np.sin(ph)
    gen = np.column_stack([st * cp, st * sp, np.full(ph.size, ct)])  # generator dirs
    nrm = np.column_stack([ct * cp, ct * sp, np.full(ph.size, -st)])  # theta-hat at theta0
    pts = np.einsum("r,pd->rpd", r, gen).reshape(-1, 3)
    normals = np.broadcast_to(nrm, (r.size, ph.size, 3)).reshape(-1, 3)
    w = np.einsum("r,p->rp", wr * r * st, wph).ravel()
    frame = cone_frame(cone)
    return frame.to_physical_points(pts), w, frame.to_physical_vectors(normals)


def integrate_lateral(f, cone: ConeSpec, spec: QuadratureSpec = DEFAULT_SPEC):
    """Surface integral over the lateral boundary; integrand receives (points, normals)."""
    pts, w, nu = lateral_nodes(cone, spec)
    return _reduce(w, f(pts, nu))


# --- unit sphere -----------------------------------------------------------------

@lru_cache(maxsize=32)
def sphere_rule(order: int):
    """Product rule on S^2: Gauss-Legendre in cos(theta) x trapezoid in phi.

    Spectrally accurate for smooth integrands; exact for spherical harmonics of
    degree < 2*order.  Returns (directions (N,3), weights (N,)) with N = 2*order^2.
    """
    if order < 4:
        raise PreconditionViolated("sphere rule order must be >= 4")
    t, wt = _leggauss(order)  # t = cos(theta)
    n_phi = 2 * order
    ph = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wph = np.full(n_phi, 2.0 * np.pi / n_phi)
    s = np.sqrt(1.0 - t * t)
    x = np.einsum("t,p->tp", s, np.cos(ph)).ravel()
    y = np.einsum("t,p->tp", s, np.sin(ph)).ravel()
    z = np.repeat(t, n_phi)
    dirs = np.column_stack([x, y, z])
    w = np.einsum("t,p->tp", wt, wph).ravel()
    dirs.setflags(write=False)
    w.setflags(write=False)
    return dirs, w


def integrate_sphere(f, order: int):
    dirs, w = sphere_rule(order)
    return _reduce(w, f(dirs))


# --- balls and polytopes -----------------------------------------------------------

def ball_nodes(ball: Ball, spec: QuadratureSpec = DEFAULT_SPEC):
    r, wr = gauss_legendre(spec.radial_order, 0.0, ball.radius)
    dirs, wd = sphere_rule(spec.polar_order)
    _check_budget(r.size * dirs.shape[0], spec)
    pts = ball.center + np.einsum("r,nd->rnd", r, dirs).reshape(-1, 3)
    w = np.einsum("r,n->rn", wr * r * r, wd).ravel()
    return pts, w


def polytope_nodes(poly: ConvexPolytope, spec: QuadratureSpec = DEFAULT_SPEC):
    """Star-shaped spherical rule about the interior point.

    The radial extent is piecewise smooth in angle (kinks along edge cones), so
    accuracy is algebraic rather than spectral; adequate for the experiments,
    which use ball bases.
    """
    dirs, wd = sphere_rule(spec.polar_order)
    rmax = poly.radial_extent(dirs)
    r01, wr = _leggauss(spec.radial_order)
    s = 0.5 * (r01 + 1.0)  # [0, 1]
    _check_budget(dirs.shape[0] * s.size, spec)
    r = np.einsum("r,n->rn", s, rmax)  # (nr, ndir)
    pts = poly.interior + r[..., None] * dirs[None, :, :]
    w = (0.5 * wr)[:, None] * rmax[None, :] * r * r * wd[None, :]
    return pts.reshape(-1, 3), w.ravel()


def volume_nodes(domain, spec: QuadratureSpec = DEFAULT_SPEC,
                 tau_hint: float | None = None):
    """Dispatch volume nodes for any supported bounded domain."""
    if isinstance(domain, ConeSpec):
        return cone_nodes(domain, spec, tau_hint)
    if isinstance(domain, Ball):
        return ball_nodes(domain, spec)
    if isinstance(domain, ConvexPolytope):
        return polytope_nodes(domain, spec)
    if isinstance(domain, CoronalSpec):
        parts = [volume_nodes(domain.base, spec)]
        parts += [cone_nodes(domain.corner_cone(j), spec, tau_hint)
                  for j in range(len(domain.cones))]
        pts = np.concatenate([p for p, _ in parts])
        w = np.concatenate([w for _, w in parts])
        _check_budget(w.size, spec)
        return pts, w
    raise TypeError(f"unsupported integration domain {type(domain).__name__}")


def domain_measure(domain) -> float:
    if isinstance(domain, ConeSpec):
        return domain.volume()
    if isinstance(domain, Ball):
        return 4.0 * np.pi * domain.radius**3 / 3.0
    _, w = volume_nodes(domain)
    return float(np.sum(w))


# --- local averages -------------------------------------------------------------

def local_average(f, center, rho: float, domain=None,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Mean of |f| over B(center, rho) ∩ domain.

    ``domain=None`` averages over the full ball.  For a cone domain the center
    must be the apex (then the intersection is exactly a truncated cone, no
    indicator needed); a ball placed away from the cone raises
    EmptyIntersection, any other off-apex placement is unsupported.
    """
    if not rho > 0:
        raise PreconditionViolated("rho must be positive")
    center = np.asarray(center, dtype=float)

    def mean_abs(pts, w, measure):
        vals = np.abs(np.asarray(f(pts)))
        if vals.ndim == 2:  # C^3-valued field: pointwise euclidean magnitude
            vals = np.linalg.norm(f(pts), axis=-1)
        return float((w @ vals) / measure)

    if domain is None:
        pts, w = ball_nodes(Ball(center=center, radius=rho), spec)
        return mean_abs(pts, w, 4.0 * np.pi * rho**3 / 3.0)
    if isinstance(domain, ConeSpec):
        if np.linalg.norm(center - domain.apex) <= 1e-12 * max(1.0, domain.radius):
            small = ConeSpec(apex=domain.apex, axis=domain.axis,
                             half_angle=domain.half_angle,
                             radius=min(rho, domain.radius))
            pts, w = cone_nodes(small, spec)
            return mean_abs(pts, w, small.volume())
        # off-apex centers: only the trivially empty case is decidable exactly
        rel = center - domain.apex
        dist_apex = np.linalg.norm(rel)
        if dist_apex - rho >= domain.radius or (
                rel @ domain.axis < -rho):
            raise EmptyIntersection("ball does not meet the cone")
        raise PreconditionViolated(
            "cone-domain local averages support apex-centered balls only")
    raise TypeError(f"unsupported local_average domain {type(domain).__name__}")
