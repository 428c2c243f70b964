"""Bounded domains, uniform point placement and line-of-sight tests.

All domains are centred so that their obstacles are easy to describe:
disks, annuli, spheres and shells are centred at the origin; the square
occupies ``[0, L] x [0, L]``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

# blocked iff dist(center, segment) < radius - GRAZE_TOL; tangent segments see through
GRAZE_TOL = 1e-12


@dataclass(frozen=True)
class Disk:
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"Disk needs R > 0, got {self.R}")


@dataclass(frozen=True)
class Annulus:
    r: float
    R: float

    def __post_init__(self):
        if not 0 <= self.r < self.R:
            raise ValueError(f"Annulus needs 0 <= r < R, got r={self.r}, R={self.R}")


@dataclass(frozen=True)
class Sphere:
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"Sphere needs R > 0, got {self.R}")


@dataclass(frozen=True)
class SphericalShell:
    r: float
    R: float

    def __post_init__(self):
        if not 0 <= self.r < self.R:
            raise ValueError(f"SphericalShell needs 0 <= r < R, got r={self.r}, R={self.R}")


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class SquareWithObstacles:
    L: float
    obstacles: tuple[Obstacle, ...] = ()

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"square side must be positive, got {self.L}")
        obs = tuple(
            o if isinstance(o, Obstacle) else Obstacle((float(o[0][0]), float(o[0][1])), float(o[1]))
            for o in self.obstacles
        )
        object.__setattr__(self, "obstacles", obs)
        for k, o in enumerate(obs):
            cx, cy = o.center
            if not o.radius > 0:
                raise ValueError(f"obstacle {k}: radius must be positive")
            if min(cx, cy, self.L - cx, self.L - cy) <= o.radius:
                raise ValueError(f"obstacle {k} is not strictly inside the square")
        for i in range(len(obs)):
            for j in range(i + 1, len(obs)):
                gap = math.dist(obs[i].center, obs[j].center) - obs[i].radius - obs[j].radius
                if gap <= 0:
                    raise ValueError(f"obstacles {i} and {j} overlap")

    def separation_violations(self, min_separation: float) -> list[tuple[str, str, float]]:
        """Pairs (obstacle/boundary) closer than ``min_separation``.

        Construction only demands disjointness; callers that rely on the
        hole terms adding up independently pass ``2 * r0`` here.
        """
        bad = []
        obs = self.obstacles
        for i, o in enumerate(obs):
            cx, cy = o.center
            wall = min(cx, cy, self.L - cx, self.L - cy) - o.radius
            if wall < min_separation:
                bad.append((f"obstacle {i}", "boundary", wall))
            for j in range(i + 1, len(obs)):
                gap = math.dist(o.center, obs[j].center) - o.radius - obs[j].radius
                if gap < min_separation:
                    bad.append((f"obstacle {i}", f"obstacle {j}", gap))
        return bad


Domain = Union[Disk, Annulus, Sphere, SphericalShell, SquareWithObstacles]


def dimension(domain: Domain) -> int:
    return 3 if isinstance(domain, (Sphere, SphericalShell)) else 2


def obstacle_arrays(domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Obstacle centres ``(k, d)`` and radii ``(k,)``; empty for convex domains."""
    d = dimension(domain)
    if isinstance(domain, (Annulus, SphericalShell)) and domain.r > 0:
        return np.zeros((1, d)), np.array([float(domain.r)])
    if isinstance(domain, SquareWithObstacles) and domain.obstacles:
        centers = np.array([o.center for o in domain.obstacles], dtype=float)
        radii = np.array([o.radius for o in domain.obstacles], dtype=float)
        return centers, radii
    return np.zeros((0, d)), np.zeros(0)


def inner_radius(domain: Domain) -> float:
    return float(getattr(domain, "r", 0.0)) if isinstance(domain, (Annulus, SphericalShell)) else 0.0


def volume(domain: Domain) -> float:
    """Lebesgue measure of the free space."""
    if isinstance(domain, Disk):
        return math.pi * domain.R**2
    if isinstance(domain, Annulus):
        return math.pi * (domain.R**2 - domain.r**2)
    if isinstance(domain, Sphere):
        return 4.0 / 3.0 * math.pi * domain.R**3
    if isinstance(domain, SphericalShell):
        return 4.0 / 3.0 * math.pi * (domain.R**3 - domain.r**3)
    if isinstance(domain, SquareWithObstacles):
        return domain.L**2 - sum(math.pi * o.radius**2 for o in domain.obstacles)
    raise TypeError(f"unknown domain {domain!r}")


def contains(domain: Domain, points: np.ndarray) -> np.ndarray:
    """Boolean mask: inside the outer boundary and outside every obstacle's open disk/ball."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(domain, SquareWithObstacles):
        ok = np.all((pts >= 0) & (pts <= domain.L), axis=1)
        for o in domain.obstacles:
            ok &= np.sum((pts - np.asarray(o.center)) ** 2, axis=1) >= o.radius**2
        return ok
    rad = np.linalg.norm(pts, axis=1)
    return (rad <= domain.R) & (rad >= inner_radius(domain))


def _unit_vectors(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    if d == 2:
        phi = rng.uniform(0.0, 2 * math.pi, n)
        return np.column_stack((np.cos(phi), np.sin(phi)))
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _uniform_points(domain: Domain, count: int, rng: np.random.Generator) -> np.ndarray:
    d = dimension(domain)
    if count == 0:
        return np.zeros((0, d))
    if isinstance(domain, SquareWithObstacles):
        out = np.empty((0, 2))
        while len(out) < count:
            need = count - len(out)
            # oversample by the inverse acceptance rate
            frac = volume(domain) / domain.L**2
            cand = rng.uniform(0.0, domain.L, (int(need / frac) + 16, 2))
            out = np.concatenate((out, cand[contains(domain, cand)]))
        return out[:count]
    r, R = inner_radius(domain), domain.R
    u = rng.uniform(0.0, 1.0, count)
    # exact inverse CDF of the radial coordinate
    rad = (r**d + u * (R**d - r**d)) ** (1.0 / d)
    return rad[:, None] * _unit_vectors(rng, count, d)


@dataclass
class NodeSet:
    dimension: int
    positions: np.ndarray
    seed: int
    provenance: tuple[str, float] = ("binomial", 0)

    def __len__(self):
        return len(self.positions)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "z"][: self.dimension])
        for p in self.positions:
            w.writerow([repr(float(c)) for c in p])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed: int = 0) -> "NodeSet":
        rows = list(csv.reader(io.StringIO(text)))
        dim = len(rows[0])
        pos = np.array([[float(c) for c in row] for row in rows[1:]], dtype=float).reshape(-1, dim)
        return cls(dim, pos, seed, ("binomial", len(pos)))


def fixed_nodes(points, seed: int = 0) -> NodeSet:
    pos = np.atleast_2d(np.asarray(points, dtype=float))
    return NodeSet(pos.shape[1], pos, seed, ("fixed", len(pos)))


def sample_binomial(domain: Domain, count: int, seed: int) -> NodeSet:
    """Exactly ``count`` i.i.d. uniform points on the free space."""
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    pos = _uniform_points(domain, int(count), rng)
    return NodeSet(dimension(domain), pos, seed, ("binomial", int(count)))


def sample_poisson(domain: Domain, intensity: float, seed: int) -> NodeSet:
    """Poisson process of the given intensity restricted to the free space."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    rng = np.random.default_rng(seed)
    count = int(rng.poisson(intensity * volume(domain))) if intensity > 0 else 0
    pos = _uniform_points(domain, count, rng)
    return NodeSet(dimension(domain), pos, seed, ("poisson", float(intensity)))


def segments_blocked(x: np.ndarray, y: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Vectorised occlusion test for segments ``x[i] -> y[i]`` against all obstacles."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    blocked = np.zeros(len(x), dtype=bool)
    seg = y - x
    L2 = np.sum(seg * seg, axis=1)
    for c, a in zip(centers, radii):
        w = c - x
        t = np.where(L2 > 0, np.sum(w * seg, axis=1) / np.where(L2 > 0, L2, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        closest = x + t[:, None] * seg
        dist = np.linalg.norm(c - closest, axis=1)
        blocked |= dist < a - GRAZE_TOL
    return blocked


def visible(domain: Domain, x, y) -> bool:
    """Line-of-sight indicator between two free-space points."""
    centers, radii = obstacle_arrays(domain)
    if len(radii) == 0:
        return True
    return not bool(segments_blocked(x, y, centers, radii)[0])


def distance_to_obstacle(domain: Domain, x) -> float:
    """Distance from ``x`` to the nearest inner obstacle surface.

    Disk and Sphere use the ``r = 0`` convention (distance to the centre);
    an obstacle-free square returns ``inf``.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(domain, SquareWithObstacles):
        if not domain.obstacles:
            return math.inf
        return min(float(np.linalg.norm(x - np.asarray(o.center))) - o.radius for o in domain.obstacles)
    return float(np.linalg.norm(x)) - inner_radius(domain)


def clearance(domain: Domain, x) -> float:
    """Distance from ``x`` to the nearest boundary of any kind (outer wall or obstacle)."""
    x = np.asarray(x, dtype=float)
    if isinstance(domain, SquareWithObstacles):
        wall = min(x[0], x[1], domain.L - x[0], domain.L - x[1])
        return min(float(wall), distance_to_obstacle(domain, x))
    rad = float(np.linalg.norm(x))
    outer = domain.R - rad
    if inner_radius(domain) > 0:
        return min(outer, rad - inner_radius(domain))
    return outer


# --- JSON ---------------------------------------------------------------

_KINDS = {
    "disk": (Disk, ("R",)),
    "annulus": (Annulus, ("r", "R")),
    "sphere": (Sphere, ("R",)),
    "shell": (SphericalShell, ("r", "R")),
    "square": (SquareWithObstacles, ("L", "obstacles")),
}


def domain_to_dict(domain: Domain) -> dict:
    if isinstance(domain, SquareWithObstacles):
        return {
            "kind": "square",
            "L": domain.L,
            "obstacles": [{"center": list(o.center), "radius": o.radius} for o in domain.obstacles],
        }
    for kind, (cls, names) in _KINDS.items():
        if type(domain) is cls:
            return {"kind": kind, **{n: getattr(domain, n) for n in names}}
    raise TypeError(f"unknown domain {domain!r}")


def domain_from_dict(d: dict) -> Domain:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "spherical_shell":
        kind = "shell"
    if kind not in _KINDS:
        raise ValueError(f"unknown domain kind {kind!r}")
    cls, names = _KINDS[kind]
    extra = set(d) - set(names)
    if extra:
        raise ValueError(f"unknown keys for {kind}: {sorted(extra)}")
    if kind == "square":
        obs = []
        for k, o in enumerate(d.get("obstacles", [])):
            if set(o) != {"center", "radius"}:
                raise ValueError(f"obstacles[{k}] needs exactly 'center' and 'radius'")
            obs.append(Obstacle((float(o["center"][0]), float(o["center"][1])), float(o["radius"])))
        return SquareWithObstacles(float(d["L"]), tuple(obs))
    missing = set(names) - set(d)
    if missing:
        raise ValueError(f"missing keys for {kind}: {sorted(missing)}")
    return cls(**{n: float(d[n]) for n in names})


def domain_to_json(domain: Domain) -> str:
    return json.dumps(domain_to_dict(domain))


def domain_from_json(text: str) -> Domain:
    return domain_from_dict(json.loads(text))


def label(domain: Domain) -> str:
    """Short human-readable tag used in CSV output."""
    if isinstance(domain, SquareWithObstacles):
        return f"square(L={domain.L:g};n={len(domain.obstacles)})"
    dd = domain_to_dict(domain)
    kind = dd.pop("kind")
    return f"{kind}(" + ";".join(f"{k}={v:g}" for k, v in dd.items()) + ")"
