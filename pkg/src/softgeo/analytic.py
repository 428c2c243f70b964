"""Closed-form connectivity masses and full-connection probabilities (eta = 2).

Every P_fc predictor returns a :class:`PfcBreakdown`: the total and the
magnitude of each subtracted term. Totals are not clamped and go negative at
low density, where the isolated-node picture stops being a good description.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .geometry import Obstacle, SquareWithObstacles

SQRT_PI = math.sqrt(math.pi)
PI32 = math.pi**1.5

# regimes are auto-selected only outside [r0/5, 5 r0]
AUTO_REGIME_FACTOR = 5.0


class Regime(enum.Enum):
    SMALL = "small"
    LARGE = "large"


class RegimeError(ValueError):
    pass


class SeparationError(ValueError):
    pass


class NoCrossingError(ValueError):
    pass


class ValidityWarning(UserWarning):
    """A formula is being used outside the asymptotic regime it was derived for."""


@dataclass
class PfcBreakdown:
    total: float
    terms: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, **terms: float) -> "PfcBreakdown":
        return cls(1.0 - sum(terms.values()), dict(terms))

    def to_dict(self) -> dict:
        return {"total": self.total, "terms": dict(self.terms)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _r0(beta: float) -> float:
    return beta**-0.5


def resolve_regime(r: float, beta: float, regime: Regime | str | None = None) -> Regime:
    """Pick or check the obstacle regime for radius ``r``.

    Without an explicit regime, ``r < r0/5`` is small and ``r > 5 r0`` is large;
    anything in between must be stated explicitly and triggers a
    :class:`ValidityWarning`.
    """
    r0 = _r0(beta)
    if regime is None:
        if r < r0 / AUTO_REGIME_FACTOR:
            return Regime.SMALL
        if r > AUTO_REGIME_FACTOR * r0:
            return Regime.LARGE
        raise RegimeError(
            f"r = {r:g} is within a factor {AUTO_REGIME_FACTOR:g} of r0 = {r0:g}; pass the regime explicitly"
        )
    regime = Regime(regime)
    if regime is Regime.SMALL and not r < r0:
        raise RegimeError(f"small-obstacle regime needs r < r0 = {r0:g}, got r = {r:g}")
    if regime is Regime.LARGE and not r > r0:
        raise RegimeError(f"large-obstacle regime needs r > r0 = {r0:g}, got r = {r:g}")
    if r0 / AUTO_REGIME_FACTOR <= r <= AUTO_REGIME_FACTOR * r0:
        warnings.warn(
            f"{regime.value}-obstacle formula used at r = {r:g}, r0 = {r0:g} (outside r << r0 or r >> r0)",
            ValidityWarning,
            stacklevel=3,
        )
    return regime


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


# --- 2-D masses --------------------------------------------------------------------


def mass_disk_boundary(epsilon: float, R: float, beta: float) -> float:
    """Mass near the outer circle of a disk; ``epsilon`` is the distance from the centre."""
    return math.pi / (2 * beta) - SQRT_PI / (4 * beta * R * math.sqrt(beta)) + (R - epsilon) * math.sqrt(math.pi / beta)


def mass_annulus_small(epsilon: float, r: float, beta: float, form: str = "closed") -> float:
    if not r > 0:
        raise ValueError(f"obstacle radius must be positive, got {r}")
    if form == "closed":
        return (
            math.pi / beta
            + (r * r - 1 / beta) * math.asin(r / (r + epsilon))
            + r * math.sqrt(2 * r * epsilon + epsilon**2)
            - math.pi * r * r / 2
        )
    if form == "series":
        return (
            math.pi / (2 * beta)
            + math.sqrt(2) / (beta * math.sqrt(r)) * math.sqrt(epsilon)
            + (8 * beta * r * r - 5) / (6 * beta * math.sqrt(2) * r**1.5) * epsilon**1.5
        )
    raise ValueError(f"form must be 'closed' or 'series', got {form!r}")


def mass_annulus_large(epsilon: float, r: float, beta: float) -> float:
    """Series for a point close to a large circular obstacle.

    For ``epsilon`` much below ``1/(r beta)`` the true mass falls back to the
    half-plane value: the tangent lines from the point still hide the strip
    just beyond the obstacle, which the series counts as visible.
    """
    return math.pi / (2 * beta) + SQRT_PI / (4 * beta * r * math.sqrt(beta)) + math.sqrt(math.pi / beta) * epsilon


def crossover_epsilon(
    bulk_mass: float,
    boundary_mass_fn: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-10,
) -> float:
    """Distance at which a boundary mass approximation meets the bulk value (bisection)."""
    a, b = bracket
    fa = boundary_mass_fn(a) - bulk_mass
    fb = boundary_mass_fn(b) - bulk_mass
    if fa == 0 and fb == 0:
        raise NoCrossingError("boundary mass equals the bulk value at both ends; no isolated root")
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0 or not (math.isfinite(fa) and math.isfinite(fb)):
        raise NoCrossingError(f"no sign change of boundary mass - bulk on [{a}, {b}]")
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = boundary_mass_fn(m) - bulk_mass
        if fm == 0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


# --- 2-D P_fc ----------------------------------------------------------------------


def _bulk_2d(area, beta, rho):
    return area * rho * math.exp(-rho * math.pi / beta)


def _outer_2d(R, beta, rho):
    return 2 * math.pi * R * math.sqrt(beta / math.pi) * math.exp(
        -(rho / beta) * (math.pi / 2 - SQRT_PI / (4 * R * math.sqrt(beta)))
    )


def _hole_small_2d(r, beta, rho):
    return math.pi * r * r * (2 * beta**2 / rho) * math.exp(-rho * math.pi / (2 * beta))


def _hole_large_2d(r, beta, rho):
    return 2 * math.pi * r * math.sqrt(beta / math.pi) * math.exp(
        -(rho / beta) * (math.pi / 2 + SQRT_PI / (4 * r * math.sqrt(beta)))
    )


def pfc_disk(R: float, beta: float, intensity: float) -> PfcBreakdown:
    _check_positive(R=R, beta=beta, intensity=intensity)
    return PfcBreakdown.from_terms(
        bulk=_bulk_2d(math.pi * R * R, beta, intensity),
        outer_boundary=_outer_2d(R, beta, intensity),
    )


def pfc_annulus(r: float, R: float, beta: float, intensity: float, regime: Regime | str | None = None) -> PfcBreakdown:
    """Annulus with a small (r << r0) or large (r >> r0) inner obstacle.

    The bulk coefficient stays pi R^2 in both regimes, as in the disk result.
    """
    _check_positive(R=R, beta=beta, intensity=intensity)
    if not 0 <= r < R:
        raise ValueError(f"need 0 <= r < R, got r={r}, R={R}")
    if r == 0:
        obstacle = 0.0
    else:
        regime = resolve_regime(r, beta, regime)
        hole = _hole_small_2d if regime is Regime.SMALL else _hole_large_2d
        obstacle = hole(r, beta, intensity)
    return PfcBreakdown.from_terms(
        bulk=_bulk_2d(math.pi * R * R, beta, intensity),
        outer_boundary=_outer_2d(R, beta, intensity),
        obstacle=obstacle,
    )


def pfc_annulus_large_domain(r: float, R: float, beta: float, intensity: float) -> PfcBreakdown:
    """Both perimeters as flat walls, curvature corrections dropped."""
    _check_positive(R=R, beta=beta, intensity=intensity)
    if not 0 <= r < R:
        raise ValueError(f"need 0 <= r < R, got r={r}, R={R}")
    return PfcBreakdown.from_terms(
        bulk=_bulk_2d(math.pi * (R * R - r * r), beta, intensity),
        combined_boundary=2 * math.pi * (R + r) * math.sqrt(beta / math.pi) * math.exp(-intensity * math.pi / (2 * beta)),
    )


def _square_terms(L, beta, rho):
    return {
        "outer_boundary": 4 * L * math.sqrt(beta / math.pi) * math.exp(-math.pi * rho / (2 * beta)),
        "corners": 16 * beta / (rho * math.pi) * math.exp(-math.pi * rho / (4 * beta)),
    }


def pfc_square(L: float, beta: float, intensity: float) -> PfcBreakdown:
    _check_positive(L=L, beta=beta, intensity=intensity)
    return PfcBreakdown.from_terms(bulk=_bulk_2d(L * L, beta, intensity), **_square_terms(L, beta, intensity))


def pfc_square_obstacles(
    L: float,
    radii: Sequence[float],
    beta: float,
    intensity: float,
    centers: Sequence[Sequence[float]] | None = None,
) -> PfcBreakdown:
    """Square with small circular holes whose isolation terms simply add up.

    With ``centers`` the holes are checked to be at least ``2 r0`` from each
    other and from the walls.
    """
    _check_positive(L=L, beta=beta, intensity=intensity)
    r0 = _r0(beta)
    radii = [float(a) for a in radii]
    for k, a in enumerate(radii):
        if not 0 < a < r0:
            raise RegimeError(f"radii[{k}] = {a:g}: holes must satisfy 0 < r < r0 = {r0:g}")
    if centers is not None:
        if len(centers) != len(radii):
            raise ValueError("centers and radii differ in length")
        dom = SquareWithObstacles(L, tuple(Obstacle((float(c[0]), float(c[1])), a) for c, a in zip(centers, radii)))
        bad = dom.separation_violations(2 * r0)
        if bad:
            a, b, gap = bad[0]
            raise SeparationError(f"{a} and {b} are {gap:g} apart, need at least 2 r0 = {2 * r0:g}")
    holes_area = sum(math.pi * a * a for a in radii)
    return PfcBreakdown.from_terms(
        bulk=_bulk_2d(L * L - holes_area, beta, intensity),
        **_square_terms(L, beta, intensity),
        obstacle=sum(_hole_small_2d(a, beta, intensity) for a in radii),
    )


def obstacle_dominance_ratio(L: float, n: int, r: float, beta: float, intensity: float) -> float:
    """Summed hole terms over the bulk + wall + corner terms of the empty square.

    Holes with r <= r0 use the small-hole term, larger ones the large-hole
    (separate perimeter) term.
    """
    _check_positive(L=L, r=r, beta=beta, intensity=intensity)
    if n < 0:
        raise ValueError("n must be non-negative")
    empty = pfc_square(L, beta, intensity)
    return n * _hole_term(r, beta, intensity) / sum(empty.terms.values())


def _hole_term(r, beta, rho):
    return _hole_small_2d(r, beta, rho) if r <= _r0(beta) else _hole_large_2d(r, beta, rho)


def pfc_square_holes(L: float, n: int, r: float, beta: float, intensity: float) -> PfcBreakdown:
    """``n`` identical holes of radius ``r`` in the square, hole term chosen as in
    :func:`obstacle_dominance_ratio`; placement is assumed well separated."""
    _check_positive(L=L, r=r, beta=beta, intensity=intensity)
    return PfcBreakdown.from_terms(
        bulk=_bulk_2d(L * L - n * math.pi * r * r, beta, intensity),
        **_square_terms(L, beta, intensity),
        obstacle=n * _hole_term(r, beta, intensity),
    )


# --- 3-D ---------------------------------------------------------------------------


def shell_cone_geometry(epsilon: float, r: float) -> tuple[float, float, float, float]:
    """(cone radius, cone height, half apex angle, hidden solid-angle fraction)."""
    if not r > 0:
        raise ValueError(f"obstacle radius must be positive, got {r}")
    s = r / (r + epsilon)
    lam = s * math.sqrt(2 * r * epsilon + epsilon**2)
    h = (2 * r * epsilon + epsilon**2) / (r + epsilon)
    theta_c = math.asin(s)
    omega = 0.5 * (1 - math.sqrt(1 - s * s))
    return lam, h, theta_c, omega


def mass_shell_small(epsilon: float, r: float, beta: float, form: str = "closed") -> float:
    if not r > 0:
        raise ValueError(f"obstacle radius must be positive, got {r}")
    b32 = beta * math.sqrt(beta)
    if form == "closed":
        *_, omega = shell_cone_geometry(epsilon, r)
        cone = epsilon**2 * math.pi * r * r / (3 * (epsilon + r))
        return cone + PI32 / b32 * (1 - omega)
    if form in ("series", "series_plus"):
        # expanding the closed form gives a negative eps^(3/2) coefficient;
        # "series_plus" uses the opposite (positive) sign, kept for comparison
        sign = -1.0 if form == "series" else 1.0
        return (
            PI32 / (2 * b32)
            + PI32 / b32 / math.sqrt(2 * r) * math.sqrt(epsilon)
            + sign * 3 * PI32 / (4 * math.sqrt(2) * (r * beta) ** 1.5) * epsilon**1.5
        )
    raise ValueError(f"form must be 'closed', 'series' or 'series_plus', got {form!r}")


def mass_shell_large(epsilon: float, r: float, beta: float) -> float:
    return PI32 / (2 * beta * math.sqrt(beta)) + math.pi / (2 * beta**2 * r) + math.pi / beta * epsilon


def pfc_shell(
    r: float,
    R: float,
    beta: float,
    intensity: float,
    regime: Regime | str | None = None,
    curvature: str = "derived",
) -> PfcBreakdown:
    """Spherical shell; ``r = 0`` gives the solid sphere.

    For a large inner sphere the obstacle term's exponent is the convex-wall
    mass ``pi^(3/2)/(2 beta^(3/2)) + pi/(2 beta^2 r)``. ``curvature="outer_wall"``
    instead reuses the outer-wall exponent (``-1/(R sqrt(beta))`` correction),
    which overstates obstacle isolation by about 0.02 near P_fc = 0.8 for
    r=2, R=6, beta=1.
    """
    _check_positive(R=R, beta=beta, intensity=intensity)
    if not 0 <= r < R:
        raise ValueError(f"need 0 <= r < R, got r={r}, R={R}")
    if curvature not in ("derived", "outer_wall"):
        raise ValueError(f"curvature must be 'derived' or 'outer_wall', got {curvature!r}")
    rho = intensity
    b32 = beta * math.sqrt(beta)
    half_space = PI32 / (2 * b32)
    wall_exp = half_space - (1 / (R * math.sqrt(beta))) * (math.pi / (2 * b32))
    bulk = 4 * math.pi / 3 * (R**3 - r**3) * rho * math.exp(-rho * PI32 / b32)
    outer = 4 * math.pi * R * R * (beta / math.pi) * math.exp(-rho * wall_exp)
    if r == 0:
        obstacle = 0.0
    elif resolve_regime(r, beta, regime) is Regime.SMALL:
        obstacle = 4 / 3 * math.pi * r**3 * (12 * beta**3 / (rho * math.pi**3)) * math.exp(-rho * half_space)
    else:
        hole_exp = wall_exp if curvature == "outer_wall" else half_space + math.pi / (2 * beta**2 * r)
        obstacle = 4 * math.pi * r * r * (beta / math.pi) * math.exp(-rho * hole_exp)
    return PfcBreakdown.from_terms(bulk=bulk, outer_boundary=outer, obstacle=obstacle)


def pfc_sphere(R: float, beta: float, intensity: float) -> PfcBreakdown:
    return pfc_shell(0.0, R, beta, intensity)
