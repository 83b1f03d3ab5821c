"""Desk-scale checks of the Herglotz-approximation machinery: kernel norms,
rate gates, the C^1-remainder sweep over (j, tau = j^a), and apex averages.

No transmission eigenfunctions are computed here; every check runs on
synthetic fields with planted regularity, and reports say so.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .asymptotics import _cone_moment_closed_radial
from .errors import PreconditionViolated, RateGateFailed
from .fields import CGOParams, HerglotzKernel, rho_p
from .geometry import ConeSpec, canonical_cone
from .quadrature import DEFAULT_SPEC, QuadratureSpec, local_average, sphere_rule

SYNTHETIC_NOTE = "synthetic fields with planted regularity; no eigenfunctions computed"


def kernel_norm(kernel: HerglotzKernel, order: int) -> float:
    """L^2(S^2) norm of the kernel by the product sphere rule."""
    if order < 4:
        raise PreconditionViolated("order must be >= 4")
    dirs, w = sphere_rule(order)
    vals = np.asarray(kernel.g(dirs), dtype=complex)
    return float(np.sqrt(w @ np.sum(np.abs(vals) ** 2, axis=1)))


def rate_gate(rates) -> bool:
    """True iff beta < (2/3) zeta for the pair (zeta, beta)."""
    zeta, beta = float(rates[0]), float(rates[1])
    if zeta <= 0 or beta <= 0:
        raise PreconditionViolated("rates must be positive reals")
    return beta < 2.0 / 3.0 * zeta


@dataclass
class RemainderReport:
    rows: list[dict] = field(default_factory=list)
    verdict: bool = False
    note: str = SYNTHETIC_NOTE


def remainder_bound_check(cone: ConeSpec, zeta: float, beta: float, a: float,
                          j_list, k: float = 1.0,
                          chat=None,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> RemainderReport:
    """Sweep of |int deltaE . V| tau^4 / j^beta over (j, tau = j^a).

    deltaE(x) = j^beta |x - apex| chat plants a C^1 remainder whose C^1 norm
    grows like the admitted kernel norms; the gate requires beta < (2/3) zeta
    and a in the open interval (beta, 2 zeta / 3).
    """
    if not rate_gate((zeta, beta)):
        raise RateGateFailed(f"(zeta, beta) = ({zeta}, {beta}) fails beta < (2/3) zeta")
    if not (beta < a < 2.0 / 3.0 * zeta):
        raise RateGateFailed(f"a = {a} outside the admitted interval ({beta}, {2*zeta/3})")
    js = [float(j) for j in j_list]
    if len(js) < 2 or any(b <= x for x, b in zip(js, js[1:])):
        raise PreconditionViolated("j list must be increasing with >= 2 entries")
    canon = canonical_cone(cone)  # ratios are rigid-motion invariant by construction
    d = np.array([0.0, 0.0, -1.0])
    d_perp = np.array([1.0, 0.0, 0.0])
    chat = d_perp if chat is None else np.asarray(chat, dtype=complex)
    report = RemainderReport()
    for j in js:
        tau = j**a
        params = CGOParams(d=d, d_perp=d_perp, tau=tau, k=k)
        rho, p = rho_p(params)
        # int |x| (chat.p) e^{rho.x} dx over the canonical cone, radial part exact
        moment = _cone_moment_closed_radial(canon, rho, 3, spec)
        value = abs(complex(chat @ p) * moment) * j**beta  # planted C^1 norm j^beta
        report.rows.append({
            "j": j,
            "tau": tau,
            "value": value,
            "ratio": value * tau**4 / j**beta,
        })
    ratios = np.array([r["ratio"] for r in report.rows])
    report.verdict = bool(ratios.max() <= 2.0 * max(ratios.min(), 1e-300)
                          or ratios.max() - ratios.min() <= 1e-12)
    return report


@dataclass
class AverageProfile:
    rows: list[dict] = field(default_factory=list)
    verdict: str = ""
    extrapolated: float = 0.0
    field_scale: float = 1.0
    note: str = SYNTHETIC_NOTE


def apex_average_profile(f, cone: ConeSpec, rho_schedule,
                         spec: QuadratureSpec = DEFAULT_SPEC,
                         holder_alpha: float | None = None) -> AverageProfile:
    """local averages of |f| over B(apex, rho) ∩ K along a decreasing rho schedule.

    Verdict is "vanishing" when the averages decrease and the rho -> 0
    extrapolation (two-point Richardson, first order for C^1 fields, exponent
    alpha for Hölder-tagged ones) lands at <= 1e-3 of the field scale.
    """
    rhos = [float(r) for r in rho_schedule]
    if len(rhos) < 2 or any(b >= x for x, b in zip(rhos, rhos[1:])):
        raise PreconditionViolated("rho schedule must be strictly decreasing, >= 2 entries")
    if rhos[0] > cone.radius:
        raise PreconditionViolated("rho schedule must stay within the truncation radius")
    alpha = holder_alpha
    if alpha is None:
        alpha = getattr(f, "holder_alpha", None)
        if alpha is None:
            alpha = 1.0  # C^1 model
    profile = AverageProfile()
    avgs = []
    for rho in rhos:
        avg = local_average(f, cone.apex, rho, domain=cone, spec=spec)
        avgs.append(avg)
        profile.rows.append({"rho": rho, "average": avg})
    a1, a2 = avgs[-2], avgs[-1]
    r1, r2 = rhos[-2], rhos[-1]
    # model average(rho) = L + c rho^alpha; faster-than-model decay would
    # extrapolate below zero, but the mean of |f| is nonnegative, so clamp
    denom = r1**alpha - r2**alpha
    limit = a2 - (a1 - a2) * r2**alpha / denom if denom > 0 else a2
    profile.extrapolated = float(max(limit, 0.0))
    profile.field_scale = max(avgs)
    decreasing = all(b <= a * (1.0 + 1e-12) for a, b in zip(avgs, avgs[1:]))
    vanishing = decreasing and profile.extrapolated <= 1e-3 * max(profile.field_scale,
                                                                  1e-300)
    profile.verdict = "vanishing" if vanishing else "non-vanishing"
    return profile
