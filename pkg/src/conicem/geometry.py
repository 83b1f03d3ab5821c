"""Cones, coronal domains and the homogeneous background.

Conventions
-----------
A truncated cone ``K = {x0 + r*xhat : angle(xhat, a) < theta0, 0 < r < r0}``
is open: the apex and the lateral boundary are excluded from membership.
``delta = cos(theta0)`` is the uniform direction bound attained by
``d = -axis``.

In a :class:`CoronalSpec` the stored cone axes point *outward* (away from
the base body); the material spike attached to the base opens along the
reflected axis and is returned by :meth:`CoronalSpec.corner_cone`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    AngleOutOfRange,
    ApexInsideBase,
    DetachedCone,
    NonpositiveRadius,
    NoUniformBound,
    OverlappingAttachment,
    ZeroAxis,
)

_UNIT_TOL = 1e-12


def _as_vec3(x, name="vector"):
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    return v


def _frozen(v):
    v = np.array(v, dtype=float)
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class ConeSpec:
    """Truncated open cone: apex, unit axis, half angle (rad), truncation radius."""

    apex: np.ndarray
    axis: np.ndarray
    half_angle: float
    radius: float

    def __post_init__(self):
        apex = _as_vec3(self.apex, "apex")
        axis = _as_vec3(self.axis, "axis")
        if abs(np.linalg.norm(axis) - 1.0) > _UNIT_TOL:
            raise ZeroAxis("axis must be a unit vector (use make_cone to normalize)")
        if not (0.0 < self.half_angle < np.pi / 2):
            raise AngleOutOfRange(f"half_angle must lie in (0, pi/2), got {self.half_angle}")
        if not self.radius > 0.0:
            raise NonpositiveRadius(f"radius must be positive, got {self.radius}")
        object.__setattr__(self, "apex", _frozen(apex))
        object.__setattr__(self, "axis", _frozen(axis))

    @property
    def delta(self) -> float:
        """Direction bound cos(theta0) attained by d = -axis."""
        return float(np.cos(self.half_angle))

    def volume(self) -> float:
        return 2.0 * np.pi * (1.0 - np.cos(self.half_angle)) * self.radius**3 / 3.0

    def cap_area(self) -> float:
        return 2.0 * np.pi * (1.0 - np.cos(self.half_angle)) * self.radius**2

    def lateral_area(self) -> float:
        return np.pi * self.radius**2 * np.sin(self.half_angle)


def make_cone(apex, axis, half_angle, radius) -> ConeSpec:
    """Build a validated ConeSpec; the axis is normalized (only the zero vector is rejected)."""
    axis = _as_vec3(axis, "axis")
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ZeroAxis("axis must be nonzero")
    if not (0.0 < half_angle < np.pi / 2):
        raise AngleOutOfRange(f"half_angle must lie in (0, pi/2), got {half_angle}")
    if not radius > 0.0:
        raise NonpositiveRadius(f"radius must be positive, got {radius}")
    return ConeSpec(apex=_as_vec3(apex, "apex"), axis=axis / n,
                    half_angle=float(half_angle), radius=float(radius))


def cone_contains(cone: ConeSpec, x) -> bool | np.ndarray:
    """Open-cone membership; the apex itself and the lateral boundary are outside.

    Accepts a single point (shape (3,)) or a batch (N, 3); returns bool or a
    boolean array accordingly.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    rel = pts - cone.apex
    r = np.linalg.norm(rel, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = (rel @ cone.axis) / np.where(r > 0, r, 1.0)
    inside = (r > 0) & (r < cone.radius) & (cosang > np.cos(cone.half_angle))
    return bool(inside[0]) if single else inside


def cone_direction_bound(cone: ConeSpec, d) -> float:
    """Largest delta > 0 with d . xhat <= -delta over the closed cap K ∩ S^2.

    The maximum of ``d . xhat`` over the cap ``angle(xhat, axis) <= theta0`` is
    ``cos(max(0, angle(d, axis) - theta0))``; the bound exists iff that maximum
    is negative.  For ``d = -axis`` the bound equals ``cos(theta0)``.
    """
    d = _as_vec3(d, "d")
    if abs(np.linalg.norm(d) - 1.0) > 1e-10:
        raise ValueError("d must be a unit vector")
    psi = np.arccos(np.clip(d @ cone.axis, -1.0, 1.0))
    cap_max = 1.0 if psi <= cone.half_angle else np.cos(psi - cone.half_angle)
    if cap_max >= 0.0:
        raise NoUniformBound(
            f"sup of d.xhat over the cap is {cap_max:.3g} >= 0; no uniform bound")
    return float(-cap_max)


# --- rigid motions -----------------------------------------------------------

def rotation_to_e3(axis) -> np.ndarray:
    """Rotation matrix R with R @ axis = e3 (Rodrigues; stable for axis ~ -e3)."""
    a = _as_vec3(axis, "axis")
    a = a / np.linalg.norm(a)
    e3 = np.array([0.0, 0.0, 1.0])
    c = a @ e3
    if c > 1.0 - 1e-14:
        return np.eye(3)
    if c < -1.0 + 1e-14:
        # 180 degrees about e1
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(a, e3)
    vx = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


@dataclass(frozen=True)
class ConeFrame:
    """Rigid motion taking a cone to canonical position (apex 0, axis e3)."""

    rotation: np.ndarray
    apex: np.ndarray

    def to_canonical_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        return (pts - self.apex) @ self.rotation.T

    def to_physical_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts @ self.rotation + self.apex

    def to_canonical_vectors(self, vecs):
        return np.asarray(vecs) @ self.rotation.T

    def to_physical_vectors(self, vecs):
        return np.asarray(vecs) @ self.rotation


def cone_frame(cone: ConeSpec) -> ConeFrame:
    R = rotation_to_e3(cone.axis)
    return ConeFrame(rotation=_frozen(R), apex=cone.apex)


def canonical_cone(cone: ConeSpec) -> ConeSpec:
    return ConeSpec(apex=np.zeros(3), axis=np.array([0.0, 0.0, 1.0]),
                    half_angle=cone.half_angle, radius=cone.radius)


# --- base bodies --------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise NonpositiveRadius(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", _frozen(_as_vec3(self.center, "center")))

    def contains(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.linalg.norm(pts - self.center, axis=-1) < self.radius
        return bool(inside[0]) if np.asarray(x).ndim == 1 else inside

    def distance_outside(self, x) -> float:
        """Positive distance from x to the closed ball; 0 if inside."""
        return max(0.0, float(np.linalg.norm(_as_vec3(x) - self.center) - self.radius))

    def interior_point(self):
        return self.center

    def boundary_points(self, directions):
        dirs = np.asarray(directions, dtype=float)
        return self.center + self.radius * dirs, dirs


@dataclass(frozen=True)
class ConvexPolytope:
    """Intersection of half-spaces ``{x : normals @ x <= offsets}``.

    ``interior`` must be a strictly interior point; it anchors the star-shaped
    spherical parametrization used for boundary sampling and volume quadrature.
    """

    normals: np.ndarray
    offsets: np.ndarray
    interior: np.ndarray

    def __post_init__(self):
        nm = np.asarray(self.normals, dtype=float)
        off = np.asarray(self.offsets, dtype=float)
        if nm.ndim != 2 or nm.shape[1] != 3 or off.shape != (nm.shape[0],):
            raise ValueError("normals must be (m,3) and offsets (m,)")
        lens = np.linalg.norm(nm, axis=1)
        if np.any(lens == 0):
            raise ValueError("zero normal in half-space description")
        nm = nm / lens[:, None]
        off = off / lens
        c = _as_vec3(self.interior, "interior")
        slack = off - nm @ c
        if np.any(slack <= 0):
            raise ValueError("interior point is not strictly inside the polytope")
        object.__setattr__(self, "normals", _frozen(nm))
        object.__setattr__(self, "offsets", _frozen(off))
        object.__setattr__(self, "interior", _frozen(c))

    def contains(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.all(pts @ self.normals.T <= self.offsets[None, :], axis=-1)
        return bool(inside[0]) if np.asarray(x).ndim == 1 else inside

    def distance_outside(self, x) -> float:
        return max(0.0, float(np.max(self.normals @ _as_vec3(x) - self.offsets)))

    def interior_point(self):
        return self.interior

    def radial_extent(self, directions) -> np.ndarray:
        """Distance from the interior point to the boundary along each direction."""
        u = np.atleast_2d(np.asarray(directions, dtype=float))
        num = self.offsets[None, :] - (self.interior @ self.normals.T)[None, :]
        den = u @ self.normals.T
        with np.errstate(divide="ignore"):
            t = np.where(den > 1e-14, num / np.maximum(den, 1e-300), np.inf)
        return np.min(t, axis=1)

    def boundary_points(self, directions):
        u = np.atleast_2d(np.asarray(directions, dtype=float))
        num = self.offsets[None, :] - (self.interior @ self.normals.T)[None, :]
        den = u @ self.normals.T
        with np.errstate(divide="ignore"):
            t = np.where(den > 1e-14, num / np.maximum(den, 1e-300), np.inf)
        active = np.argmin(t, axis=1)
        pts = self.interior + np.min(t, axis=1)[:, None] * u
        return pts, self.normals[active]


def _fibonacci_directions(n: int) -> np.ndarray:
    # Deterministic quasi-uniform sphere covering for attachment-patch checks.
    i = np.arange(n, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


@dataclass(frozen=True)
class CoronalSpec:
    """Convex base body decorated with outward cones at disjoint attachment patches."""

    base: Ball | ConvexPolytope
    cones: tuple[ConeSpec, ...]

    @cached_property
    def _gaps(self) -> tuple[float, ...]:
        return tuple(self.base.distance_outside(c.apex) for c in self.cones)

    def corner_cone(self, j: int, trim: float = 1.0) -> ConeSpec:
        """Material corner cone at apex j: reflected axis, truncated before the base.

        ``trim`` in (0, 1] shrinks the truncation radius below the apex-to-base
        distance, guaranteeing the returned cone is disjoint from the base.
        """
        c = self.cones[j]
        r = min(c.radius, trim * self._gaps[j])
        return ConeSpec(apex=c.apex, axis=-c.axis, half_angle=c.half_angle, radius=r)


def _attachment_mask(cone: ConeSpec, samples: np.ndarray,
                     normals: np.ndarray) -> np.ndarray:
    # Near-side trace of the infinite reflected cone (the spike opening toward
    # the base) on the sampled base boundary; far-side exit points, where the
    # outward normal faces away from the apex, are not attachments.
    rel = samples - cone.apex
    r = np.linalg.norm(rel, axis=-1)
    cosang = (rel @ (-cone.axis)) / np.where(r > 0, r, 1.0)
    visible = np.einsum("nd,nd->n", normals, cone.apex - samples) > 0
    return (r > 0) & (cosang > np.cos(cone.half_angle)) & visible


def make_coronal(base, cones, n_boundary_samples: int = 4096) -> CoronalSpec:
    """Validated coronal domain: apexes outside the base, outward axes, disjoint patches."""
    cones = tuple(cones)
    interior = base.interior_point()
    for j, c in enumerate(cones):
        if base.distance_outside(c.apex) <= 0.0:
            raise ApexInsideBase(f"cone {j}: apex {c.apex} lies in the closed base body")
        if (c.apex - interior) @ c.axis <= 0.0:
            raise DetachedCone(f"cone {j}: axis does not point outward from the base")
    dirs = _fibonacci_directions(n_boundary_samples)
    samples, normals = base.boundary_points(dirs)
    masks = [_attachment_mask(c, samples, normals) for c in cones]
    for j, m in enumerate(masks):
        if not np.any(m):
            raise DetachedCone(f"cone {j}: attachment trace misses the base boundary")
    for i in range(len(cones)):
        for j in range(i + 1, len(cones)):
            if np.any(masks[i] & masks[j]):
                raise OverlappingAttachment(f"cones {i} and {j} share attachment patch points")
    return CoronalSpec(base=base, cones=cones)


# --- background ---------------------------------------------------------------

@dataclass(frozen=True)
class Background:
    """Homogeneous background: angular frequency and material constants."""

    omega: float
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        if not (self.omega > 0 and self.eps0 > 0 and self.mu0 > 0):
            raise ValueError("omega, eps0, mu0 must all be strictly positive")

    @property
    def k(self) -> float:
        """Wavenumber omega * sqrt(eps0 * mu0)."""
        return float(self.omega * np.sqrt(self.eps0 * self.mu0))

    @property
    def impedance_ratio(self) -> float:
        """sqrt(mu0 / eps0); the factor normalizing magnetic far fields."""
        return float(np.sqrt(self.mu0 / self.eps0))
