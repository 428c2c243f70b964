"""Numerical connectivity mass and isolated-node integrals, no series truncation.

The mass at ``x`` is computed in polar (2-D) or axisymmetric spherical (3-D)
coordinates centred on ``x``. Along each ray the visible segment ends at the
outer wall or at the first obstacle it enters, and the radial integral of
``r^(d-1) exp(-beta r^eta)`` up to that length has a closed form (regularised
lower incomplete gamma). Only the angular integral is done adaptively, with
breakpoints at obstacle tangents and square corners.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, gammainc

from ._gk import QuadratureError, integrate
from .channel import ChannelModel
from .geometry import (
    Annulus,
    Disk,
    Domain,
    Sphere,
    SphericalShell,
    SquareWithObstacles,
    clearance,
    contains,
    dimension,
    inner_radius,
    obstacle_arrays,
    volume,
)

__all__ = [
    "QuadratureError",
    "MassProfile",
    "bulk_mass",
    "connectivity_mass",
    "mass_at_epsilon",
    "mass_profile",
    "expected_isolated",
    "expected_isolated_many",
    "pfc_numeric",
    "pfc_numeric_many",
]

MASS_TOL = 1e-8
OUTER_TOL = 1e-6
# each outer panel costs 21 mass integrals, so its budget is much smaller
OUTER_MAX_PANELS = 400


def bulk_mass(channel: ChannelModel, d: int) -> float:
    """Mass of an unobstructed point: pi/beta in 2-D, (pi/beta)^(3/2) in 3-D when eta = 2."""
    a = d / channel.eta
    solid = 2 * math.pi if d == 2 else 4 * math.pi
    return solid * gamma(a) / (channel.eta * channel.beta**a)


def _radial(s, d, channel):
    """Integral of r^(d-1) H(r) over [0, s]."""
    beta, eta = channel.beta, channel.eta
    if eta == 2.0 and d == 2:
        return -np.expm1(-beta * np.square(s)) / (2 * beta)
    a = d / eta
    return gamma(a) * gammainc(a, beta * np.power(s, eta)) / (eta * beta**a)


def _cutoff(channel: ChannelModel, d: int, tol: float) -> float:
    """Distance beyond which the unseen part of the bulk mass is below ``tol * 1e-3`` (relative)."""
    a = d / channel.eta
    lo, hi = 0.0, channel.r0
    while 1.0 - gammainc(a, channel.beta * hi**channel.eta) > 1e-3 * tol:
        lo, hi = hi, 2 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if 1.0 - gammainc(a, channel.beta * mid**channel.eta) > 1e-3 * tol:
            lo = mid
        else:
            hi = mid
    return hi


def _exit_disk(p, ux, uy, R):
    b = p[0] * ux + p[1] * uy
    q = p[0] ** 2 + p[1] ** 2 - R**2
    return -b + np.sqrt(np.maximum(b * b - q, 0.0))


def _exit_square(p, ux, uy, L):
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(ux > 0, (L - p[0]) / ux, np.where(ux < 0, -p[0] / ux, np.inf))
        ty = np.where(uy > 0, (L - p[1]) / uy, np.where(uy < 0, -p[1] / uy, np.inf))
    return np.minimum(tx, ty)


def _obstacle_entry(p, ux, uy, c, a, s):
    wx, wy = p[0] - c[0], p[1] - c[1]
    b = wx * ux + wy * uy
    q = wx * wx + wy * wy - a * a
    disc = b * b - q
    hit = (disc > 0) & (b < 0)
    entry = -b - np.sqrt(np.where(hit, disc, 0.0))
    return np.where(hit, np.minimum(s, np.maximum(entry, 0.0)), s)


def _mass_2d(domain, channel, x, tol, cut):
    p = np.asarray(x, dtype=float)
    centers, radii = obstacle_arrays(domain)
    relevant = [
        (c, a) for c, a in zip(centers, radii) if np.hypot(*(c - p)) - a < cut
    ]
    if isinstance(domain, SquareWithObstacles):
        L = domain.L
        corners = np.array([[0, 0], [L, 0], [L, L], [0, L]], dtype=float) - p
        breaks = list(np.arctan2(corners[:, 1], corners[:, 0]))
    else:
        breaks = []
    for c, a in relevant:
        D = math.hypot(c[0] - p[0], c[1] - p[1])
        phi = math.atan2(c[1] - p[1], c[0] - p[0])
        half = math.asin(min(1.0, a / D))
        breaks += [phi - half, phi + half]
    breaks = np.sort(np.mod(breaks, 2 * math.pi))
    if len(breaks) == 0:
        breaks = np.array([0.0])
    breaks = np.concatenate((breaks, [breaks[0] + 2 * math.pi]))

    def integrand(theta):
        ux, uy = np.cos(theta), np.sin(theta)
        if isinstance(domain, SquareWithObstacles):
            s = _exit_square(p, ux, uy, domain.L)
        else:
            s = _exit_disk(p, ux, uy, domain.R)
        for c, a in relevant:
            s = _obstacle_entry(p, ux, uy, c, a, s)
        return _radial(s, 2, channel)

    val, _ = integrate(integrand, breaks, tol_abs=tol * 1e-3 * bulk_mass(channel, 2), tol_rel=tol)
    return float(val)


def _mass_3d(domain, channel, x, tol):
    D = float(np.linalg.norm(x))
    r = inner_radius(domain)
    R = domain.R
    # meridian plane: x at (D, 0); psi measured from the direction towards the centre
    p = np.array([D, 0.0])
    breaks = [0.0, math.pi]
    if r > 0:
        breaks = [0.0, math.asin(min(1.0, r / D)), math.pi]

    def integrand(psi):
        ux, uy = -np.cos(psi), np.sin(psi)
        s = _exit_disk(p, ux, uy, R)
        if r > 0:
            s = _obstacle_entry(p, ux, uy, (0.0, 0.0), r, s)
        return 2 * math.pi * np.sin(psi) * _radial(s, 3, channel)

    val, _ = integrate(integrand, breaks, tol_abs=tol * 1e-3 * bulk_mass(channel, 3), tol_rel=tol)
    return float(val)


def connectivity_mass(domain: Domain, channel: ChannelModel, x, tol: float = MASS_TOL) -> float:
    """Integral over the domain of visible(x, y) * H(|x - y|) dy.

    Raises :class:`QuadratureError` if the angular subdivision budget runs out.
    """
    if not 0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")
    x = np.asarray(x, dtype=float)
    d = dimension(domain)
    if x.shape != (d,):
        raise ValueError(f"point must have {d} coordinates")
    if not contains(domain, x)[0]:
        raise ValueError(f"point {x.tolist()} is not in the free space")
    cut = _cutoff(channel, d, tol)
    if clearance(domain, x) >= cut:
        # the whole ball of radius `cut` is visible; the rest is below tolerance
        return bulk_mass(channel, d)
    if d == 2:
        return _mass_2d(domain, channel, x, tol, cut)
    return _mass_3d(domain, channel, x, tol)


def mass_at_epsilon(domain: Domain, channel: ChannelModel, epsilon: float, tol: float = MASS_TOL) -> float:
    """Mass at distance ``epsilon`` from the inner obstacle of a radial domain.

    For Disk and Sphere ``epsilon`` is the distance from the centre.
    """
    if isinstance(domain, SquareWithObstacles):
        raise TypeError("mass_at_epsilon needs a radially symmetric domain")
    u = inner_radius(domain) + epsilon
    x = np.zeros(dimension(domain))
    x[0] = u
    return connectivity_mass(domain, channel, x, tol)


@dataclass
class MassProfile:
    domain: Domain
    channel: ChannelModel
    epsilons: np.ndarray
    masses: np.ndarray
    tol: float = MASS_TOL

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "mass"])
        for e, m in zip(self.epsilons, self.masses):
            w.writerow([repr(float(e)), repr(float(m))])
        return buf.getvalue()


def mass_profile(domain: Domain, channel: ChannelModel, epsilons, tol: float = MASS_TOL) -> MassProfile:
    eps = np.asarray(epsilons, dtype=float)
    masses = np.array([mass_at_epsilon(domain, channel, e, tol) for e in eps])
    return MassProfile(domain, channel, eps, masses, tol)


# --- outer integrals --------------------------------------------------------------


def _radial_outer(domain, channel, rhos, tol, mass_tol):
    d = dimension(domain)
    r, R = inner_radius(domain), domain.R
    solid = 2 * math.pi if d == 2 else 4 * math.pi
    bulk = bulk_mass(channel, d)
    cut = _cutoff(channel, d, mass_tol)

    def integrand(u):
        out = np.empty((len(u), len(rhos)))
        for k, uk in enumerate(u):
            x = np.zeros(d)
            x[0] = uk
            m = connectivity_mass(domain, channel, x, mass_tol)
            out[k] = solid * uk ** (d - 1) * rhos * np.exp(-rhos * m)
        return out

    lo_end = r + cut if r > 0 else 0.0
    hi_start = R - cut
    total = np.zeros(len(rhos))
    err = np.zeros(len(rhos))
    tol_abs = tol * 1e-2
    if hi_start - lo_end > 0:
        # constant-mass middle shell, integrated exactly
        shell = solid / d * (hi_start**d - lo_end**d)
        total += shell * rhos * np.exp(-rhos * bulk)
        segments = [(r, lo_end)] if r > 0 else []
        segments.append((hi_start, R))
    else:
        segments = [(r, R)]
    for a, b in segments:
        v, e = integrate(integrand, [a, b], tol_abs=tol_abs, tol_rel=tol, max_panels=OUTER_MAX_PANELS)
        total += v
        err += e
    return total, err


def _free_intervals(domain: SquareWithObstacles, x: float):
    """Sub-intervals of the vertical line at ``x`` lying outside every obstacle."""
    cuts = []
    for o in domain.obstacles:
        dx = x - o.center[0]
        if abs(dx) < o.radius:
            h = math.sqrt(o.radius**2 - dx * dx)
            cuts.append((o.center[1] - h, o.center[1] + h))
    cuts.sort()
    out, y0 = [], 0.0
    for lo, hi in cuts:
        out.append((y0, lo))
        y0 = hi
    out.append((y0, domain.L))
    return out


def _square_outer(domain, channel, rhos, tol, mass_tol):
    L = domain.L
    cut = _cutoff(channel, 2, mass_tol)
    tol_abs = tol * 1e-2

    def column(x):
        def f(ys):
            out = np.empty((len(ys), len(rhos)))
            for k, y in enumerate(ys):
                m = connectivity_mass(domain, channel, np.array([x, y]), mass_tol)
                out[k] = rhos * np.exp(-rhos * m)
            return out

        acc = np.zeros(len(rhos))
        for lo, hi in _free_intervals(domain, x):
            pts = [lo, hi] + [y for y in (cut, L - cut) if lo < y < hi]
            v, _ = integrate(f, sorted(pts), tol_abs=tol_abs / (10 * L), tol_rel=tol / 10,
                             max_panels=OUTER_MAX_PANELS)
            acc += v
        return acc

    def outer(xs):
        return np.array([column(x) for x in xs])

    xb = {0.0, L}
    xb.update(v for v in (cut, L - cut) if 0 < v < L)
    for o in domain.obstacles:
        xb.update(v for v in (o.center[0] - o.radius, o.center[0] + o.radius))
    return integrate(outer, sorted(xb), tol_abs=tol_abs, tol_rel=tol, max_panels=OUTER_MAX_PANELS)


def expected_isolated_many(domain: Domain, channel: ChannelModel, intensities, tol: float = OUTER_TOL,
                           mass_tol: float = MASS_TOL):
    """Vector of rho * integral exp(-rho M(x)) dx, one entry per intensity."""
    if not 1e-10 <= tol <= 1e-2:
        raise ValueError("tol must lie in [1e-10, 1e-2]")
    rhos = np.atleast_1d(np.asarray(intensities, dtype=float))
    if np.any(rhos <= 0):
        raise ValueError("intensities must be positive")
    if isinstance(domain, SquareWithObstacles):
        val, _ = _square_outer(domain, channel, rhos, tol, mass_tol)
    elif isinstance(domain, (Disk, Annulus, Sphere, SphericalShell)):
        val, _ = _radial_outer(domain, channel, rhos, tol, mass_tol)
    else:
        raise TypeError(f"unknown domain {domain!r}")
    return val


def expected_isolated(domain: Domain, channel: ChannelModel, intensity: float, tol: float = OUTER_TOL) -> float:
    """Mean number of isolated nodes, rho * integral exp(-rho M(x)) dx."""
    return float(expected_isolated_many(domain, channel, [intensity], tol)[0])


def pfc_numeric_many(domain: Domain, channel: ChannelModel, intensities, tol: float = OUTER_TOL):
    return 1.0 - expected_isolated_many(domain, channel, intensities, tol)


def pfc_numeric(domain: Domain, channel: ChannelModel, intensity: float, tol: float = OUTER_TOL) -> float:
    """1 - expected isolated count; returned raw, so it can go negative at low density."""
    return 1.0 - expected_isolated(domain, channel, intensity, tol)
