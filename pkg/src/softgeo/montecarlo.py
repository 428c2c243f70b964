"""Monte Carlo ensembles of soft random geometric graphs.

Trial ``t`` of a run with master seed ``s`` uses the derived seed
``trial_seed(s, t)`` for both node placement and edges, so results do not
depend on how trials are split across worker processes.
"""
from __future__ import annotations

import csv
import io
import math
import multiprocessing
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import analytic
from .channel import ChannelModel
from .geometry import (
    Annulus,
    Disk,
    Domain,
    NodeSet,
    Sphere,
    SphericalShell,
    SquareWithObstacles,
    contains,
    fixed_nodes,
    label,
    obstacle_arrays,
    sample_binomial,
    sample_poisson,
    volume,
)
from .graph import _fixed_trials, graph_stats, probe_degree, trial_seed
from .quadrature import pfc_numeric_many


@dataclass(frozen=True)
class Poisson:
    intensity: float


@dataclass(frozen=True)
class Binomial:
    count: int


@dataclass(frozen=True)
class Fixed:
    """Node positions held fixed; only the edges are resampled."""

    positions: tuple

    @classmethod
    def of(cls, points) -> "Fixed":
        return cls(tuple(map(tuple, np.atleast_2d(np.asarray(points, dtype=float)).tolist())))


Placement = Union[Poisson, Binomial, Fixed]


@dataclass
class EnsembleEstimate:
    trials: int
    successes: int
    point_estimate: float
    std_error: float
    seed: int

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int) -> "EnsembleEstimate":
        p = successes / trials
        return cls(trials, int(successes), p, math.sqrt(p * (1 - p) / trials), seed)

    def interval(self, z: float = 3.0) -> tuple[float, float]:
        return self.point_estimate - z * self.std_error, self.point_estimate + z * self.std_error


@dataclass
class PairedEstimate:
    """Connectivity and isolation evaluated on the same graph in every trial."""

    connected: EnsembleEstimate
    no_isolated: EnsembleEstimate
    isolated_mean: float
    isolated_stderr: float
    per_trial_connected: np.ndarray = field(repr=False)
    per_trial_isolated: np.ndarray = field(repr=False)


def _sample(domain: Domain, placement: Placement, seed: int) -> NodeSet:
    if isinstance(placement, Poisson):
        return sample_poisson(domain, placement.intensity, seed)
    if isinstance(placement, Binomial):
        return sample_binomial(domain, placement.count, seed)
    return fixed_nodes(placement.positions, seed)


def _run_chunk(domain, channel, placement, seed, start, stop):
    if isinstance(placement, Fixed):
        centers, radii = obstacle_arrays(domain)
        pos = np.ascontiguousarray(np.asarray(placement.positions, dtype=np.float64).reshape(-1, centers.shape[1]))
        conn, iso = _fixed_trials(
            pos, float(channel.beta), float(channel.eta), np.uint64(seed), start, stop,
            np.ascontiguousarray(centers), radii,
        )
        return np.asarray(conn, dtype=bool), np.asarray(iso, dtype=np.int64)
    conn = np.empty(stop - start, dtype=bool)
    iso = np.empty(stop - start, dtype=np.int64)
    for k, t in enumerate(range(start, stop)):
        s = trial_seed(seed, t)
        conn[k], iso[k] = graph_stats(_sample(domain, placement, s), domain, channel, s)
    return conn, iso


def _chunks(trials: int, workers: int):
    n = max(1, min(workers, trials))
    edges = np.linspace(0, trials, n + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _pool(workers: int):
    return ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context("fork"))


def _map_chunks(fn, args, trials, workers):
    parts = _chunks(trials, workers)
    if workers <= 1 or len(parts) == 1:
        return [fn(*args, a, b) for a, b in parts]
    with _pool(len(parts)) as ex:
        futures = [ex.submit(fn, *args, a, b) for a, b in parts]
        return [f.result() for f in futures]


def _validate(domain, placement, trials):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if isinstance(placement, Fixed):
        pos = np.asarray(placement.positions, dtype=float)
        if len(pos) and not np.all(contains(domain, pos)):
            raise ValueError("fixed positions must lie in the free space")


def run_trials(domain: Domain, channel: ChannelModel, placement: Placement, trials: int, seed: int,
               workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (connected flag, isolated count), in trial order."""
    _validate(domain, placement, trials)
    parts = _map_chunks(_run_chunk, (domain, channel, placement, seed), trials, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def estimate_paired(domain: Domain, channel: ChannelModel, placement: Placement, trials: int, seed: int,
                    workers: int = 1) -> PairedEstimate:
    conn, iso = run_trials(domain, channel, placement, trials, seed, workers)
    mean = float(iso.mean())
    sd = float(iso.std(ddof=1)) if trials > 1 else 0.0
    return PairedEstimate(
        EnsembleEstimate.from_counts(int(conn.sum()), trials, seed),
        EnsembleEstimate.from_counts(int(np.count_nonzero(iso == 0)), trials, seed),
        mean,
        sd / math.sqrt(trials),
        conn,
        iso,
    )


def estimate_pfc(domain: Domain, channel: ChannelModel, placement: Placement, trials: int, seed: int,
                 workers: int = 1) -> EnsembleEstimate:
    """Fraction of sampled graphs that are connected."""
    return estimate_paired(domain, channel, placement, trials, seed, workers).connected


def estimate_no_isolated(domain: Domain, channel: ChannelModel, placement: Placement, trials: int, seed: int,
                         workers: int = 1) -> EnsembleEstimate:
    """Fraction of sampled graphs without a degree-0 node."""
    return estimate_paired(domain, channel, placement, trials, seed, workers).no_isolated


# --- probe degree -------------------------------------------------------------------


@dataclass
class DegreeHistogram:
    counts: np.ndarray
    trials: int
    seed: int

    @property
    def degrees(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.counts)), self.counts)

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.counts)), self.counts) / self.trials)

    def var(self) -> float:
        k = np.arange(len(self.counts))
        m = self.mean()
        return float(np.dot((k - m) ** 2, self.counts) / (self.trials - 1))


def _degree_chunk(domain, channel, intensity, probe, seed, start, stop):
    out = np.empty(stop - start, dtype=np.int64)
    for k, t in enumerate(range(start, stop)):
        s = trial_seed(seed, t)
        out[k] = probe_degree(sample_poisson(domain, intensity, s), probe, domain, channel, s)
    return out


def degree_histogram(domain: Domain, channel: ChannelModel, intensity: float, probe, trials: int, seed: int,
                     workers: int = 1) -> DegreeHistogram:
    """Degree of a node at ``probe`` added to independent Poisson configurations."""
    probe = np.asarray(probe, dtype=float)
    if not contains(domain, probe)[0]:
        raise ValueError("probe must lie in the free space")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    parts = _map_chunks(_degree_chunk, (domain, channel, intensity, probe, seed), trials, workers)
    deg = np.concatenate(parts)
    return DegreeHistogram(np.bincount(deg), trials, seed)


# --- sweeps -------------------------------------------------------------------------

SWEEP_COLUMNS = [
    "domain", "beta", "rho_or_N", "trials", "pfc_mc", "pfc_stderr", "pnoiso_mc",
    "pfc_analytic", "pfc_quadrature", "flags",
]


@dataclass
class SweepCase:
    domain: Domain
    channel: ChannelModel
    values: Sequence[float]
    placement: str = "poisson"
    regime: str | None = None
    analytic: bool = True
    quadrature: bool = True


@dataclass
class SweepPlan:
    cases: list[SweepCase]
    trials: int
    seed: int
    workers: int = 1
    tol: float = 1e-6


@dataclass
class SweepRow:
    domain: str
    beta: float
    rho_or_N: float
    trials: int
    pfc_mc: float | None = None
    pfc_stderr: float | None = None
    pnoiso_mc: float | None = None
    pfc_analytic: float | None = None
    pfc_quadrature: float | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(f.startswith("error") for f in self.flags)


def analytic_pfc(domain: Domain, channel: ChannelModel, intensity: float, regime: str | None = None) -> float:
    """Closed-form P_fc for any supported domain at the given Poisson intensity."""
    channel.require_eta2()
    b = channel.beta
    if isinstance(domain, Disk):
        return analytic.pfc_disk(domain.R, b, intensity).total
    if isinstance(domain, Annulus):
        return analytic.pfc_annulus(domain.r, domain.R, b, intensity, regime).total
    if isinstance(domain, Sphere):
        return analytic.pfc_sphere(domain.R, b, intensity).total
    if isinstance(domain, SphericalShell):
        return analytic.pfc_shell(domain.r, domain.R, b, intensity, regime).total
    if isinstance(domain, SquareWithObstacles):
        if not domain.obstacles:
            return analytic.pfc_square(domain.L, b, intensity).total
        return analytic.pfc_square_obstacles(
            domain.L, [o.radius for o in domain.obstacles], b, intensity, [o.center for o in domain.obstacles]
        ).total
    raise TypeError(f"unknown domain {domain!r}")


def cell_seed(master: int, index: int) -> int:
    """Seed of sweep cell ``index``; a dedicated hash branch so it never collides with trial seeds."""
    return trial_seed(trial_seed(master, -1 - index), 0)


def sweep(plan: SweepPlan) -> list[SweepRow]:
    """One row per grid point; cell failures are flagged, never raised."""
    rows = []
    index = 0
    for case in plan.cases:
        vol = volume(case.domain)
        values = [float(v) for v in case.values]
        rhos = [v if case.placement == "poisson" else v / vol for v in values]
        quad = [None] * len(values)
        quad_flag = None
        if case.quadrature and values:
            try:
                positive = [k for k, r in enumerate(rhos) if r > 0]
                if positive:
                    q = pfc_numeric_many(case.domain, case.channel, [rhos[k] for k in positive], plan.tol)
                    for k, v in zip(positive, q):
                        quad[k] = float(v)
            except Exception as exc:  # noqa: BLE001 - reported per cell
                quad_flag = f"error:quadrature:{type(exc).__name__}"
        for v, rho, qv in zip(values, rhos, quad):
            row = SweepRow(label(case.domain), case.channel.beta, v, plan.trials)
            if quad_flag:
                row.flags.append(quad_flag)
            row.pfc_quadrature = qv
            try:
                placement = Poisson(v) if case.placement == "poisson" else Binomial(int(round(v)))
                est = estimate_paired(case.domain, case.channel, placement, plan.trials,
                                      cell_seed(plan.seed, index), plan.workers)
                row.pfc_mc = est.connected.point_estimate
                row.pfc_stderr = est.connected.std_error
                row.pnoiso_mc = est.no_isolated.point_estimate
            except Exception as exc:  # noqa: BLE001
                row.flags.append(f"error:simulation:{type(exc).__name__}")
            if case.analytic:
                try:
                    with warnings.catch_warnings(record=True) as caught:
                        warnings.simplefilter("always")
                        row.pfc_analytic = analytic_pfc(case.domain, case.channel, rho, case.regime) if rho > 0 else None
                    if any(issubclass(w.category, analytic.ValidityWarning) for w in caught):
                        row.flags.append("validity_warning")
                except Exception as exc:  # noqa: BLE001
                    row.flags.append(f"error:analytic:{type(exc).__name__}")
            rows.append(row)
            index += 1
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([
            r.domain, _fmt(float(r.beta)), _fmt(float(r.rho_or_N)), r.trials, _fmt(r.pfc_mc), _fmt(r.pfc_stderr),
            _fmt(r.pnoiso_mc), _fmt(r.pfc_analytic), _fmt(r.pfc_quadrature), ";".join(r.flags),
        ])
    return buf.getvalue()
