"""The forward map: far fields of compactly supported sources, the constructive
non-radiating pair, induced medium sources, and Born-level medium patterns.

Far-field kernel
----------------
With a_j(xhat) = int J_j(y) e^{-ik xhat.y} dy, the radiating solution of the
source system has

    E_inf(xhat) = (1/4pi) [ i omega mu0 (a2 - xhat (xhat.a2)) + i k xhat ^ a1 ]

derived from the free-space dyadic Green's function (the (I + grad grad / k^2)
Phi volume potential applied to J2 plus grad Phi ^ J1).  The stored magnetic
pattern is impedance-normalized,

    H_inf(xhat) = (1/4pi) [ -i k (a1 - xhat (xhat.a1)) + i omega mu0 xhat ^ a2 ],

i.e. sqrt(mu0/eps0) times the raw coefficient of the magnetic field, so that
the reciprocity identities H_inf = xhat ^ E_inf and E_inf = -xhat ^ H_inf hold
for every background; in the default eps0 = mu0 = 1 units the two conventions
coincide.  The kernel is gated by two oracles: large-radius extraction of the
near-field volume potential, and the non-radiating construction (zero pattern).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import parallel
from .errors import (
    GridMismatch,
    NonCompactSupport,
    UnboundedSupport,
)
from .fields import ComplexVectorField, linear_combination
from .geometry import Background, Ball, ConeSpec, ConvexPolytope, CoronalSpec
from .quadrature import DEFAULT_SPEC, QuadratureSpec, sphere_rule, volume_nodes

DEFAULT_GRID_ORDER = 16
_DIR_CHUNK = 64


@dataclass(frozen=True)
class SourcePair:
    """Electric-system source pair (J1, J2) with a common bounded support."""

    J1: ComplexVectorField
    J2: ComplexVectorField
    support: ConeSpec | Ball | CoronalSpec | ConvexPolytope
    alpha: float | None = None
    label: str = "source"


@dataclass(frozen=True)
class MediumParams:
    """Inhomogeneous medium: eps/mu/sigma as functions of position on a support.

    Each parameter is a scalar callable on (N,3) points (or a constant);
    gamma(x) = eps(x) + i sigma(x)/omega.  Values must equal the background
    constants outside the support; the constructor only checks positivity at
    the support's reference point.
    """

    eps: object
    mu: object
    sigma: object
    support: ConeSpec | Ball | CoronalSpec | ConvexPolytope
    label: str = "medium"

    def _eval(self, fn, pts):
        if callable(fn):
            return np.asarray(fn(pts), dtype=float)
        return np.full(pts.shape[0], float(fn))

    def eps_at(self, pts):
        return self._eval(self.eps, pts)

    def mu_at(self, pts):
        return self._eval(self.mu, pts)

    def sigma_at(self, pts):
        return self._eval(self.sigma, pts)

    def gamma_at(self, pts, omega: float):
        return self.eps_at(pts) + 1j * self.sigma_at(pts) / omega


def constant_medium(support, eps1: float, mu1: float, sigma1: float = 0.0,
                    label: str = "constant_medium") -> MediumParams:
    if eps1 <= 0 or mu1 <= 0 or sigma1 < 0:
        raise ValueError("need eps1 > 0, mu1 > 0, sigma1 >= 0")
    return MediumParams(eps=eps1, mu=mu1, sigma=sigma1, support=support, label=label)


@dataclass(frozen=True)
class FarFieldPattern:
    """Tangential far-field samples on a weighted direction grid.

    ``H`` is stored impedance-normalized (see module docstring): H = xhat ^ E
    holds per node for every valid pattern.  The raw magnetic coefficient is
    H / impedance_ratio of the generating background.
    """

    directions: np.ndarray
    weights: np.ndarray
    E: np.ndarray
    H: np.ndarray
    meta: dict = field(default_factory=dict)

    def l2_norm(self) -> float:
        """Weighted L^2(S^2) norm of the electric pattern."""
        return float(np.sqrt(self.weights @ np.sum(np.abs(self.E) ** 2, axis=1)))

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.E, axis=1))) if self.E.size else 0.0

    def tangentiality_residual(self) -> float:
        radial = np.abs(np.einsum("nd,nd->n", self.directions.astype(complex), self.E))
        scale = np.linalg.norm(self.E, axis=1)
        mask = scale > 0
        return float(np.max(radial[mask] / scale[mask])) if np.any(mask) else 0.0


def direction_grid(order: int = DEFAULT_GRID_ORDER):
    return sphere_rule(order)


def _source_hash(src: SourcePair, bg: Background, order: int) -> str:
    desc = f"{src.label}|{type(src.support).__name__}|omega={bg.omega}|eps0={bg.eps0}|mu0={bg.mu0}|grid={order}"
    return hashlib.sha256(desc.encode()).hexdigest()[:16]


def _fourier_amplitudes(J_vals, pts, w, dirs, k, workers=None):
    """a(xhat) = sum_m w_m J(y_m) e^{-i k xhat.y_m} for each grid direction."""
    weighted = w[:, None] * J_vals

    def one_chunk(chunk):
        phase = np.exp(-1j * k * (chunk @ pts.T))
        return phase @ weighted

    chunks = [dirs[lo:lo + _DIR_CHUNK] for lo in range(0, dirs.shape[0], _DIR_CHUNK)]
    return np.concatenate(parallel.ordered_map(one_chunk, chunks, workers))


def far_field_from_source(src: SourcePair, bg: Background, grid=None,
                          spec: QuadratureSpec = DEFAULT_SPEC,
                          workers: int | None = None) -> FarFieldPattern:
    """Far-field pattern of the radiating solution driven by (J1, J2)."""
    if src.support is None:
        raise UnboundedSupport("source support must be a bounded region")
    dirs, gw = direction_grid() if grid is None else grid
    pts, w = volume_nodes(src.support, spec)
    a1 = _fourier_amplitudes(np.asarray(src.J1(pts), dtype=complex), pts, w, dirs, bg.k, workers)
    a2 = _fourier_amplitudes(np.asarray(src.J2(pts), dtype=complex), pts, w, dirs, bg.k, workers)
    k, om = bg.k, bg.omega
    tang2 = a2 - dirs * np.einsum("nd,nd->n", dirs.astype(complex), a2)[:, None]
    tang1 = a1 - dirs * np.einsum("nd,nd->n", dirs.astype(complex), a1)[:, None]
    E = (1j * om * bg.mu0 * tang2 + 1j * k * np.cross(dirs, a1)) / (4.0 * np.pi)
    H = (-1j * k * tang1 + 1j * om * bg.mu0 * np.cross(dirs, a2)) / (4.0 * np.pi)
    meta = {"omega": bg.omega, "k": bg.k, "eps0": bg.eps0, "mu0": bg.mu0,
            "grid_order": int(np.sqrt(dirs.shape[0] / 2)),
            "source_hash": _source_hash(src, bg, dirs.shape[0]),
            "source": src.label}
    return FarFieldPattern(directions=dirs, weights=np.asarray(gw), E=E, H=H, meta=meta)


# --- near-field volume potential (large-radius oracle) ------------------------------

_OBS_BLOCK = 16


def near_field(src: SourcePair, bg: Background, points,
               spec: QuadratureSpec = DEFAULT_SPEC):
    """(E, H) of the radiating solution at observation points away from the support.

    Uses the dyadic Green's function; no singularity handling, so points must
    keep a distance from the support comparable to the source discretization.
    """
    pts_src, w = volume_nodes(src.support, spec)
    J1 = w[:, None] * np.asarray(src.J1(pts_src), dtype=complex)
    J2 = w[:, None] * np.asarray(src.J2(pts_src), dtype=complex)
    obs = np.atleast_2d(np.asarray(points, dtype=float))
    k, om = bg.k, bg.omega
    E_out = np.empty((obs.shape[0], 3), dtype=complex)
    H_out = np.empty((obs.shape[0], 3), dtype=complex)
    for lo in range(0, obs.shape[0], _OBS_BLOCK):
        hi = min(lo + _OBS_BLOCK, obs.shape[0])
        rvec = obs[lo:hi, None, :] - pts_src[None, :, :]          # (B, M, 3)
        r = np.linalg.norm(rvec, axis=2)
        rhat = rvec / r[..., None]
        phi = np.exp(1j * k * r) / (4.0 * np.pi * r)
        dphi = (1j * k - 1.0 / r) * phi
        ddphi = ((1j * k - 1.0 / r) ** 2 + 1.0 / r**2) * phi
        coeff_rr = (ddphi - dphi / r) / k**2                      # (B, M)
        coeff_id = phi + dphi / (r * k**2)

        def dyadic(J):
            rad = np.einsum("bmd,md->bm", rhat.astype(complex), J)
            return (np.einsum("bm,md->bd", coeff_id, J)
                    + np.einsum("bm,bmd->bd", coeff_rr * rad, rhat))

        grad_phi = dphi[..., None] * rhat                          # (B, M, 3)
        curl1 = np.einsum("bmd->bd", np.cross(grad_phi, J1[None, :, :]))
        curl2 = np.einsum("bmd->bd", np.cross(grad_phi, J2[None, :, :]))
        E_out[lo:hi] = 1j * om * bg.mu0 * dyadic(J2) + curl1
        H_out[lo:hi] = -1j * om * bg.eps0 * dyadic(J1) + curl2
    return E_out, H_out


def far_field_by_extraction(src: SourcePair, bg: Background, dirs,
                            radii=None, spec: QuadratureSpec = DEFAULT_SPEC):
    """Large-radius oracle: fit the e^{ikR}/R coefficient of the near field.

    Evaluates the volume potential at R*xhat for three radii (default
    {50, 100, 200}/k) and removes the 1/R and 1/R^2 corrections by solving the
    3x3 Vandermonde system per direction/component.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if radii is None:
        radii = np.array([50.0, 100.0, 200.0]) / bg.k
    radii = np.asarray(radii, dtype=float)
    coeffs = []
    for R in radii:
        E, _ = near_field(src, bg, R * dirs, spec)
        coeffs.append(E * R * np.exp(-1j * bg.k * R))
    coeffs = np.array(coeffs)  # (nR, ndir, 3)
    V = np.vander(1.0 / radii, N=radii.size, increasing=True)  # columns 1, 1/R, 1/R^2
    sol = np.linalg.solve(V, coeffs.reshape(radii.size, -1))
    return sol[0].reshape(dirs.shape[0], 3)


# --- constructive non-radiating pair ---------------------------------------------------

def nonradiating_source(E0: ComplexVectorField, H0: ComplexVectorField,
                        bg: Background) -> SourcePair:
    """Sources J1 = curl E0 - i omega mu0 H0, J2 = curl H0 + i omega eps0 E0.

    The radiating solution is (E0, H0) itself (compactly supported fields
    satisfy the radiation condition trivially), so the far-field pattern is
    identically zero and both sources vanish with all derivatives on the
    support boundary.
    """
    for f in (E0, H0):
        if not isinstance(f.support, Ball):
            raise NonCompactSupport("generator fields must be compactly supported (ball)")
        if not f.has_curl:
            raise NonCompactSupport("generator fields must carry analytic curls")
    b0, b1 = E0.support, H0.support
    lo = np.minimum(b0.center - b0.radius, b1.center - b1.radius)
    hi = np.maximum(b0.center + b0.radius, b1.center + b1.radius)
    center = 0.5 * (lo + hi)
    radius = float(np.max(np.linalg.norm([lo - center, hi - center], axis=1)))
    support = Ball(center=center, radius=radius)

    curlE0 = ComplexVectorField(E0.curl_fn, support=support, smoothness="C_inf",
                                label="curl_E0")
    curlH0 = ComplexVectorField(H0.curl_fn, support=support, smoothness="C_inf",
                                label="curl_H0")
    J1 = linear_combination([curlE0, H0], [1.0, -1j * bg.omega * bg.mu0],
                            support=support, smoothness="C_inf", label="nonradiating_J1")
    J2 = linear_combination([curlH0, E0], [1.0, 1j * bg.omega * bg.eps0],
                            support=support, smoothness="C_inf", label="nonradiating_J2")
    return SourcePair(J1=J1, J2=J2, support=support, label="nonradiating")


def coronal_tip_sources(coronal: CoronalSpec, apex_values, base_value=None,
                        tip_frac: float = 0.6, label: str = "coronal") -> SourcePair:
    """Admissible coronal source: C^inf radial plateaus at every apex plus an
    optional bump on the base body.

    ``apex_values[j]`` is J2 at apex j (must be nonzero for admissibility); the
    tip supports are balls of radius tip_frac * dist(apex, base), so they stay
    inside the corner cones covered by the coronal volume rule and vanish on
    the uncovered sliver next to the base.  J1 is zero.
    """
    from .fields import bump_field, plateau_field, zero_field

    if len(apex_values) != len(coronal.cones):
        raise ValueError("one apex value per cone required")
    if not 0.0 < tip_frac < 1.0:
        raise ValueError("tip_frac must lie in (0, 1)")
    pieces = []
    for j, (cone, a_j) in enumerate(zip(coronal.cones, apex_values)):
        a_j = np.asarray(a_j, dtype=complex)
        if np.linalg.norm(a_j) == 0.0:
            raise ValueError(f"apex value {j} must be nonzero (admissibility)")
        gap = coronal.base.distance_outside(cone.apex)
        pieces.append(plateau_field(cone.apex, tip_frac * gap, a_j))
    if base_value is not None and isinstance(coronal.base, Ball):
        pieces.append(bump_field(coronal.base.center, 0.8 * coronal.base.radius,
                                 base_value))
    J2 = linear_combination(pieces, [1.0] * len(pieces), support=coronal,
                            smoothness="C_inf", label=f"{label}_J2")
    return SourcePair(J1=zero_field(support=coronal), J2=J2, support=coronal,
                      label=label)


# --- induced medium sources and the Born surrogate --------------------------------------

def induced_sources_from_medium(med: MediumParams, E_t: ComplexVectorField,
                                H_t: ComplexVectorField, bg: Background) -> SourcePair:
    """J1 = i omega (mu - mu0) H^t, J2 = i omega (gamma - eps0) E^t on the medium support."""
    om = bg.omega

    def j1(pts):
        contrast = (med.mu_at(pts) - bg.mu0).astype(complex)
        return 1j * om * contrast[:, None] * H_t.eval_fn(pts)

    def j2(pts):
        contrast = med.gamma_at(pts, om) - bg.eps0
        return 1j * om * contrast[:, None] * E_t.eval_fn(pts)

    J1 = ComplexVectorField(j1, support=med.support, smoothness="C_inf", label="induced_J1")
    J2 = ComplexVectorField(j2, support=med.support, smoothness="C_inf", label="induced_J2")
    return SourcePair(J1=J1, J2=J2, support=med.support, label=f"induced({med.label})")


def born_far_field(med: MediumParams, incident, bg: Background, grid=None,
                   spec: QuadratureSpec = DEFAULT_SPEC,
                   workers: int | None = None) -> FarFieldPattern:
    """First-order (Born) medium pattern: the forward map applied to the
    incident-field induced sources.  Valid for weak contrast only; outputs are
    labeled first-order."""
    E_i, H_i = incident
    src = induced_sources_from_medium(med, E_i, H_i, bg)
    pattern = far_field_from_source(src, bg, grid=grid, spec=spec, workers=workers)
    pattern.meta["approximation"] = "born_first_order"
    return pattern


# --- pattern functionals -------------------------------------------------------------

def far_field_equiv_check(pattern: FarFieldPattern) -> float:
    """Max over nodes of |H - xhat^E| + |E + xhat^H| (the reciprocity residual)."""
    d = pattern.directions
    res1 = np.linalg.norm(pattern.H - np.cross(d, pattern.E), axis=1)
    res2 = np.linalg.norm(pattern.E + np.cross(d, pattern.H), axis=1)
    return float(np.max(res1 + res2)) if d.shape[0] else 0.0


def farfield_distance(pA: FarFieldPattern, pB: FarFieldPattern) -> float:
    """Weighted L^2(S^2) norm of the electric-pattern difference."""
    if pA.directions.shape != pB.directions.shape or \
            not np.array_equal(pA.directions, pB.directions):
        raise GridMismatch("patterns live on different direction grids")
    diff = pA.E - pB.E
    return float(np.sqrt(pA.weights @ np.sum(np.abs(diff) ** 2, axis=1)))


def hertzian_dipole_pattern(moment, bg: Background, dirs) -> np.ndarray:
    """Closed-form electric pattern of a point source J2 = moment * delta:
    E_inf = (i omega mu0 / 4pi) (xhat ^ moment) ^ xhat."""
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    m = np.asarray(moment, dtype=complex)
    tang = m - dirs * (dirs.astype(complex) @ m)[:, None]
    return 1j * bg.omega * bg.mu0 * tang / (4.0 * np.pi)


# --- serialization --------------------------------------------------------------------

_CSV_COLUMNS = ["theta", "phi", "weight",
                "ReE1", "ImE1", "ReE2", "ImE2", "ReE3", "ImE3",
                "ReH1", "ImH1", "ReH2", "ImH2", "ReH3", "ImH3"]


def pattern_to_csv(pattern: FarFieldPattern, path):
    """Write the pattern as CSV with a JSON metadata header line."""
    d = pattern.directions
    theta = np.arccos(np.clip(d[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * np.pi)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(pattern.meta, sort_keys=True) + "\n")
        fh.write(",".join(_CSV_COLUMNS) + "\n")
        for i in range(d.shape[0]):
            row = [theta[i], phi[i], pattern.weights[i]]
            for z in pattern.E[i]:
                row += [z.real, z.imag]
            for z in pattern.H[i]:
                row += [z.real, z.imag]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
