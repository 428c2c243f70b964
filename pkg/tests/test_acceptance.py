"""Acceptance suite: one test per criterion, each reporting a single PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) or through pytest, which
repeats the lines in its terminal summary.
"""
import math
import os
import sys
import time
import warnings

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))
from conftest import ACCEPTANCE_LINES  # noqa: E402

from softgeo import analytic as an  # noqa: E402
from softgeo.channel import ChannelModel  # noqa: E402
from softgeo.cli import main as cli_main  # noqa: E402
from softgeo.geometry import (  # noqa: E402
    Annulus,
    Disk,
    SphericalShell,
    SquareWithObstacles,
    fixed_nodes,
)
from softgeo.graph import exact_connection_prob  # noqa: E402
from softgeo.montecarlo import Fixed, Poisson, degree_histogram, estimate_paired, estimate_pfc  # noqa: E402
from softgeo.quadrature import bulk_mass, connectivity_mass, mass_at_epsilon, pfc_numeric_many  # noqa: E402

ONE = ChannelModel(1.0)
PFC_THRESHOLD = 0.8


def report(number, ok, summary, started):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {summary} ({time.perf_counter() - started:.1f}s)"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


# 1 -----------------------------------------------------------------------------------


def _cluster(rng, n):
    """Uniform points in Annulus(1, 4), each new one within 1.5 r0 of an earlier one.

    Independent uniform points are almost never connectable at beta = 1, which
    would make the comparison vacuous.
    """
    pts = []
    while len(pts) < n:
        rad, phi = math.sqrt(rng.uniform(1, 16)), rng.uniform(0, 2 * math.pi)
        p = np.array([rad * math.cos(phi), rad * math.sin(phi)])
        if not pts or min(np.linalg.norm(p - q) for q in pts) < 1.5:
            pts.append(p)
    return np.array(pts)


def test_criterion_1_enumeration_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240101)
    dom = Annulus(1, 4)
    trials = 100_000
    agree, worst = 0, 0.0
    informative = 0
    for case in range(20):
        pts = _cluster(rng, int(rng.integers(2, 5)))
        exact = exact_connection_prob(fixed_nodes(pts), dom, ONE)
        est = estimate_pfc(dom, ONE, Fixed.of(pts), trials, 1000 + case)
        # standard error of a binomial proportion at the oracle value
        sigma = math.sqrt(exact * (1 - exact) / trials)
        z = abs(est.point_estimate - exact) / sigma if sigma > 0 else (0.0 if est.point_estimate == exact else math.inf)
        worst = max(worst, z)
        agree += z <= 3
        informative += 0.01 < exact < 0.99
    ok = agree >= 19 and time.perf_counter() - t0 < 60
    assert report(1, ok, f"{agree}/20 fixed configurations within 3 std_error of enumeration, max |z|={worst:.2f}, {informative} with 0.01 < p < 0.99", t0)


# 2 -----------------------------------------------------------------------------------


def _max_rel(domain, fn, eps):
    errs = [abs(fn(e) - q) / q for e in eps for q in [mass_at_epsilon(domain, ONE, e)]]
    return max(errs)


def test_criterion_2_mass_series():
    t0 = time.perf_counter()
    small = np.linspace(0.0, 0.1, 11)
    large = np.linspace(0.05, 0.2, 7)
    rim = np.linspace(9.8, 10.0, 9)
    checks = {
        "annulus_small": _max_rel(Annulus(0.05, 40), lambda e: an.mass_annulus_small(e, 0.05, 1.0), small),
        "annulus_large": _max_rel(Annulus(10, 40), lambda e: an.mass_annulus_large(e, 10, 1.0), large),
        "disk_boundary": _max_rel(Disk(10), lambda e: an.mass_disk_boundary(e, 10, 1.0), rim),
        "shell_small": _max_rel(SphericalShell(0.05, 40), lambda e: an.mass_shell_small(e, 0.05, 1.0), small),
        "shell_large": _max_rel(SphericalShell(10, 40), lambda e: an.mass_shell_large(e, 10, 1.0), large),
    }
    ok = all(v <= 0.01 for v in checks.values()) and time.perf_counter() - t0 < 300
    detail = ", ".join(f"{k} {v:.1e}" for k, v in checks.items())
    assert report(2, ok, f"max relative error vs quadrature: {detail}", t0)


# 3 -----------------------------------------------------------------------------------

CLOSED_FORMS = [
    ("disk(6)", Disk(6), lambda rho: an.pfc_disk(6, 1.0, rho).total, np.arange(2.0, 12.01, 0.5)),
    ("annulus(0.05,6) small", Annulus(0.05, 6), lambda rho: an.pfc_annulus(0.05, 6, 1.0, rho).total,
     np.arange(2.0, 12.01, 0.5)),
    ("annulus(2,6) large", Annulus(2, 6), lambda rho: an.pfc_annulus(2, 6, 1.0, rho, "large").total,
     np.arange(2.0, 12.01, 0.5)),
    ("annulus(10,20) large", Annulus(10, 20), lambda rho: an.pfc_annulus(10, 20, 1.0, rho).total,
     np.arange(2.0, 12.01, 0.25)),
    ("square(30)", SquareWithObstacles(30), lambda rho: an.pfc_square(30, 1.0, rho).total,
     np.arange(3.0, 18.01, 1.0)),
    ("shell(2,6) large", SphericalShell(2, 6), lambda rho: an.pfc_shell(2, 6, 1.0, rho, "large").total,
     np.arange(2.0, 8.01, 0.25)),
]


def test_criterion_3_closed_vs_numeric():
    t0 = time.perf_counter()
    parts, ok = [], True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", an.ValidityWarning)
        for name, dom, fn, rhos in CLOSED_FORMS:
            numeric = pfc_numeric_many(dom, ONE, rhos)
            mask = numeric >= PFC_THRESHOLD
            diff = max(abs(fn(r) - q) for r, q in zip(rhos[mask], numeric[mask]))
            # guard against grids that only probe the saturated tail
            covered = numeric[mask].min() <= 0.9 and numeric[mask].max() >= 0.999
            ok &= bool(diff <= 0.02 and covered)
            parts.append(f"{name} {diff:.4f}")
    ok &= time.perf_counter() - t0 < 600
    assert report(3, ok, "max |closed - numeric| where numeric >= 0.8: " + ", ".join(parts), t0)


# 4 -----------------------------------------------------------------------------------

MC_CASES = [
    ("annulus(2,6)", Annulus(2, 6), lambda rho: an.pfc_annulus(2, 6, 1.0, rho, "large").total,
     np.arange(3.0, 5.01, 0.25)),
    ("shell(2,6)", SphericalShell(2, 6), lambda rho: an.pfc_shell(2, 6, 1.0, rho, "large").total,
     np.arange(2.25, 3.76, 0.25)),
]


def test_criterion_4_monte_carlo_vs_analytic():
    t0 = time.perf_counter()
    trials = 1000
    ok, parts = True, []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", an.ValidityWarning)
        for k, (name, dom, fn, rhos) in enumerate(MC_CASES):
            values = [fn(r) for r in rhos]
            spans = min(values) <= 0.75 and max(values) >= 0.98
            checked, worst = 0, 0.0
            for j, (rho, a) in enumerate(zip(rhos, values)):
                est = estimate_pfc(dom, ONE, Poisson(float(rho)), trials, 7000 + 100 * k + j)
                if a >= 0.9:
                    # a zero sample spread (all trials connected) falls back to the analytic spread
                    se = est.std_error if est.std_error > 0 else math.sqrt(a * (1 - a) / trials)
                    z = abs(est.point_estimate - a) / se
                    worst = max(worst, z)
                    checked += 1
                    ok &= z <= 3
            ok &= spans and checked >= 3
            parts.append(f"{name}: {checked} points with analytic >= 0.9, max |z|={worst:.2f}")
    ok &= time.perf_counter() - t0 < 900
    assert report(4, ok, "; ".join(parts), t0)


# 5 -----------------------------------------------------------------------------------


def _crossings(r, ns, rhos):
    ratio = np.array([[an.obstacle_dominance_ratio(100, n, r, 1.0, rho) for rho in rhos] for n in ns])
    first = []
    for j in range(len(rhos)):
        above = np.nonzero(ratio[:, j] > 1)[0]
        first.append(ns[above[0]] if len(above) else None)
    return ratio, first


def test_criterion_5_phase_structure():
    t0 = time.perf_counter()
    rhos = np.arange(0.5, 10.01, 0.25)
    n_small = np.arange(0, 601, 1)
    n_large = np.arange(0, 61, 1)  # 60 holes of radius 6 already cover 68% of the square
    r1, cross1 = _crossings(1.0, n_small, rhos)
    r6, cross6 = _crossings(6.0, n_large, rhos)
    nonempty = bool((r1 > 1).any() and (r6 > 1).any())
    monotone = bool(np.all(np.diff(r1[1:], axis=0) > 0) and np.all(np.diff(r6[1:], axis=0) > 0))
    matched = [(a, b) for a, b in zip(cross1, cross6) if a is not None and b is not None]
    earlier = bool(matched) and all(b < a for a, b in matched)
    ok = nonempty and monotone and earlier and time.perf_counter() - t0 < 60
    n1 = min(c for c in cross1 if c is not None)
    n6 = min(c for c in cross6 if c is not None)
    assert report(5, ok, f"ratio>1 regions nonempty={nonempty}, monotone in n={monotone}, "
                         f"r=6 crosses first at all {len(matched)} matched rho (min n: r=6 {n6}, r=1 {n1})", t0)


# 6 -----------------------------------------------------------------------------------


def _degree_check(dom, rho, probe, trials, seed):
    lam = rho * connectivity_mass(dom, ONE, probe)
    h = degree_histogram(dom, ONE, rho, probe, trials, seed)
    z_mean = abs(h.mean() - lam) / math.sqrt(lam / trials)
    z_var = abs(h.var() - lam) / math.sqrt((lam + 2 * lam**2) / trials)
    return z_mean, z_var


def test_criterion_6_poisson_degree_law():
    t0 = time.perf_counter()
    probes = {
        "bulk Disk(20)": (Disk(20), 3.0, [0.0, 0.0]),
        "eps=0.1 Annulus(0.05,40)": (Annulus(0.05, 40), 3.0, [0.15, 0.0]),
        "eps=0.1 Annulus(2,6)": (Annulus(2, 6), 3.0, [2.1, 0.0]),
    }
    ok, parts = True, []
    for k, (name, (dom, rho, probe)) in enumerate(probes.items()):
        zm, zv = _degree_check(dom, rho, probe, 10_000, 600 + k)
        ok &= zm <= 3 and zv <= 3
        parts.append(f"{name} z_mean={zm:.2f} z_var={zv:.2f}")
    ok &= time.perf_counter() - t0 < 120
    assert report(6, ok, "; ".join(parts), t0)


# 7 -----------------------------------------------------------------------------------


def test_criterion_7_containment_and_limits():
    t0 = time.perf_counter()
    batches = 0
    contained = True
    for k, (dom, rho) in enumerate([(Annulus(1, 4), 2.0), (Annulus(2, 6), 3.0), (Disk(4), 2.5)]):
        for b in range(10):
            est = estimate_paired(dom, ONE, Poisson(rho), 100, 9000 + 10 * k + b)
            contained &= est.no_isolated.successes >= est.connected.successes
            batches += 1
    m2 = connectivity_mass(Disk(20), ONE, [0.0, 0.0])
    m3 = connectivity_mass(SphericalShell(1, 30), ONE, [15.0, 0.0, 0.0])
    rel2 = abs(m2 - math.pi) / math.pi
    rel3 = abs(m3 - math.pi**1.5) / math.pi**1.5
    limits = rel2 <= 1e-6 and rel3 <= 1e-6 and bulk_mass(ONE, 2) == math.pi

    formulas = [fn for _, _, fn, _ in CLOSED_FORMS] + [
        lambda rho: an.pfc_sphere(6, 1.0, rho).total,
        lambda rho: an.pfc_square_obstacles(100, [0.5] * 5, 1.0, rho).total,
        lambda rho: an.pfc_annulus_large_domain(5, 50, 1.0, rho).total,
    ]
    grid = np.arange(0.5, 80.0, 0.05)
    to_one = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", an.ValidityWarning)
        for fn in formulas:
            tot = np.array([fn(r) for r in grid])
            beyond = tot[np.argmax(tot > 0.5):]
            to_one &= bool(np.all(np.diff(beyond) >= 0) and abs(beyond[-1] - 1) < 1e-9)
    ok = bool(contained and limits and to_one)
    assert report(7, ok, f"containment in {batches}/{batches} batches={contained}, bulk rel err 2D {rel2:.1e} "
                         f"3D {rel3:.1e}, totals monotone to 1 beyond 0.5={to_one}", t0)


# 8 -----------------------------------------------------------------------------------

CONFIGS = {
    "predict": {"command": "predict", "domain": {"kind": "annulus", "r": 2, "R": 6}, "channel": {"beta": 1},
                "regime": "large", "rho": {"start": 3, "stop": 12, "step": 0.5}},
    "simulate": {"command": "simulate", "trials": 48, "cases": [
        {"domain": {"kind": "annulus", "r": 2, "R": 6}, "channel": {"beta": 1}, "regime": "large",
         "values": [3.0, 4.0]},
        {"domain": {"kind": "square", "L": 10, "obstacles": [{"center": [5, 5], "radius": 0.5}]},
         "channel": {"beta": 1}, "placement": "binomial", "values": [150], "quadrature": False},
    ]},
    "phase_diagram": {"command": "phase_diagram", "L": 100, "r": 6, "beta": 1,
                      "n": {"start": 0, "stop": 40, "step": 5}, "rho": {"start": 1, "stop": 8, "step": 1}},
    "oracle_mass": {"command": "oracle", "table": "mass", "domain": {"kind": "shell", "r": 0.05, "R": 40},
                    "channel": {"beta": 1}, "series": "shell_small", "epsilon": [0.0, 0.01, 0.05]},
    "oracle_pfc": {"command": "oracle", "table": "pfc", "domain": {"kind": "disk", "R": 6},
                   "channel": {"beta": 1}, "rho": [6, 8, 10]},
}


def test_criterion_8_determinism(tmp_path):
    import json

    t0 = time.perf_counter()
    identical, runs = True, 0
    for name, cfg in CONFIGS.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        outputs = []
        for workers in (1, 4, 16):
            for rep in range(2):
                out = tmp_path / f"{name}-{workers}-{rep}.csv"
                code = cli_main(["--config", str(path), "--seed", "424242", "--workers", str(workers),
                                 "--out", str(out)])
                identical &= code == 0
                outputs.append(out.read_bytes())
                runs += 1
        identical &= all(o == outputs[0] for o in outputs)
    assert report(8, bool(identical), f"{runs} runs over {len(CONFIGS)} configs, workers 1/4/16 x2, "
                                      f"byte-identical={identical}", t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
