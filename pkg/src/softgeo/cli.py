"""Command-line front end.

Every run is driven by one JSON document with a ``command`` field::

    softgeo --config predict.json --out predict.csv

Exit codes: 0 success, 2 configuration or validation error (nothing written),
3 some cells of a computation failed (output written, failures flagged).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass

import numpy as np

from . import analytic, quadrature
from .channel import ChannelModel
from .geometry import (
    Annulus,
    Disk,
    Sphere,
    SphericalShell,
    SquareWithObstacles,
    domain_from_dict,
)
from .montecarlo import SweepCase, SweepPlan, analytic_pfc, sweep, sweep_csv

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 2, 3
MAX_SEED = 2**64 - 1
PFC_THRESHOLD = 0.8
SEED_ENV = "SOFTGEO_SEED"

_COMMON = {"command", "seed", "workers", "out", "clamp"}
_KEYS = {
    "predict": _COMMON | {"domain", "channel", "rho", "regime", "formula", "curvature", "format"},
    "simulate": _COMMON | {"cases", "trials", "tol"},
    "phase_diagram": _COMMON | {"L", "r", "beta", "n", "rho"},
    "oracle": _COMMON | {"table", "domain", "channel", "epsilon", "series", "form", "rho", "regime",
                         "tol", "mass_tol"},
}
_CASE_KEYS = {"domain", "channel", "placement", "values", "regime", "analytic", "quadrature"}
SERIES = ("annulus_small", "annulus_large", "disk_boundary", "shell_small", "shell_large", "bulk")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Output:
    text: str
    failed: bool = False


# --- config helpers -----------------------------------------------------------------


def _require(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}" if path else key, "missing")
    return cfg[key]


def _check_keys(cfg, allowed, path):
    if not isinstance(cfg, dict):
        raise ConfigError(path or "<root>", "expected an object")
    extra = sorted(set(cfg) - set(allowed))
    if extra:
        raise ConfigError(path or "<root>", f"unknown keys {extra}")


def _number(v, path, positive=False, nonneg=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(path, f"must be positive, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(path, f"must be non-negative, got {v!r}")
    return float(v)


def _tol(v, path) -> float:
    v = _number(v, path, positive=True)
    if not 1e-10 <= v <= 1e-2:
        raise ConfigError(path, f"must lie in [1e-10, 1e-2], got {v!r}")
    return v


def parse_grid(spec, path: str, positive=True) -> list[float]:
    """A list of numbers or ``{"start", "stop", "step"}`` with both ends included."""
    if isinstance(spec, dict):
        _check_keys(spec, {"start", "stop", "step"}, path)
        start = _number(_require(spec, "start", path), f"{path}.start")
        stop = _number(_require(spec, "stop", path), f"{path}.stop")
        step = _number(_require(spec, "step", path), f"{path}.step", positive=True)
        if stop < start:
            raise ConfigError(path, "stop must not be below start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + k * step for k in range(count)]
    elif isinstance(spec, list):
        values = [_number(v, f"{path}[{k}]") for k, v in enumerate(spec)]
    else:
        raise ConfigError(path, "expected a list or {start, stop, step}")
    for k, v in enumerate(values):
        if positive and not v > 0:
            raise ConfigError(f"{path}[{k}]", f"must be positive, got {v!r}")
        if not positive and v < 0:
            raise ConfigError(f"{path}[{k}]", f"must be non-negative, got {v!r}")
    return values


def _domain(spec, path):
    try:
        return domain_from_dict(spec)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(path, str(exc)) from None


def _channel(spec, path, need_eta2=True):
    try:
        ch = ChannelModel.from_dict(spec)
        if need_eta2:
            ch.require_eta2()
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None
    return ch


def _regime(domain, channel, regime, path):
    if regime is not None and regime not in ("small", "large"):
        raise ConfigError(path, f"regime must be 'small' or 'large', got {regime!r}")
    r = getattr(domain, "r", 0.0)
    if isinstance(domain, (Annulus, SphericalShell)) and r > 0:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", analytic.ValidityWarning)
                analytic.resolve_regime(r, channel.beta, regime)
        except analytic.RegimeError as exc:
            raise ConfigError(path, str(exc)) from None
    if isinstance(domain, SquareWithObstacles) and domain.obstacles:
        r0 = channel.r0
        for k, o in enumerate(domain.obstacles):
            if not o.radius < r0:
                raise ConfigError(f"domain.obstacles[{k}].radius", f"closed form needs radius < r0 = {r0:g}")
        bad = domain.separation_violations(2 * r0)
        if bad:
            a, b, gap = bad[0]
            raise ConfigError("domain.obstacles", f"{a} and {b} are only {gap:g} apart, need 2 r0 = {2 * r0:g}")
    return regime


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _clamp(v: float) -> float:
    return min(1.0, max(0.0, v))


# --- commands -----------------------------------------------------------------------

PREDICT_COLUMNS = ["rho", "total", "bulk", "outer_boundary", "obstacle", "corners"]


def _breakdown(domain, channel, rho, regime, formula, curvature):
    b = channel.beta
    if formula == "large_domain":
        out = analytic.pfc_annulus_large_domain(domain.r, domain.R, b, rho)
        terms = dict(out.terms)
        combined = terms.pop("combined_boundary")
        terms["outer_boundary"] = combined * domain.R / (domain.R + domain.r)
        terms["obstacle"] = combined * domain.r / (domain.R + domain.r)
        return out.total, terms
    if isinstance(domain, SphericalShell):
        out = analytic.pfc_shell(domain.r, domain.R, b, rho, regime, curvature)
    elif isinstance(domain, Annulus):
        out = analytic.pfc_annulus(domain.r, domain.R, b, rho, regime)
    elif isinstance(domain, SquareWithObstacles) and domain.obstacles:
        out = analytic.pfc_square_obstacles(
            domain.L, [o.radius for o in domain.obstacles], b, rho, [o.center for o in domain.obstacles]
        )
    else:
        return analytic_pfc_breakdown(domain, b, rho)
    return out.total, dict(out.terms)


def analytic_pfc_breakdown(domain, beta, rho):
    if isinstance(domain, Disk):
        out = analytic.pfc_disk(domain.R, beta, rho)
    elif isinstance(domain, Sphere):
        out = analytic.pfc_sphere(domain.R, beta, rho)
    else:
        out = analytic.pfc_square(domain.L, beta, rho)
    return out.total, dict(out.terms)


def cmd_predict(cfg: dict, clamp: bool = False) -> Output:
    domain = _domain(_require(cfg, "domain", ""), "domain")
    channel = _channel(_require(cfg, "channel", ""), "channel")
    rhos = parse_grid(_require(cfg, "rho", ""), "rho")
    formula = cfg.get("formula", "default")
    if formula not in ("default", "large_domain"):
        raise ConfigError("formula", f"expected 'default' or 'large_domain', got {formula!r}")
    if formula == "large_domain" and not isinstance(domain, Annulus):
        raise ConfigError("formula", "large_domain applies to annulus domains only")
    curvature = cfg.get("curvature", "derived")
    if curvature not in ("derived", "outer_wall"):
        raise ConfigError("curvature", f"expected 'derived' or 'outer_wall', got {curvature!r}")
    fmt = cfg.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format", f"expected 'csv' or 'json', got {fmt!r}")
    regime = _regime(domain, channel, cfg.get("regime"), "regime") if formula == "default" else None

    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", analytic.ValidityWarning)
        for rho in rhos:
            total, terms = _breakdown(domain, channel, rho, regime, formula, curvature)
            if clamp:
                total = _clamp(total)
            rows.append((rho, total, terms))
    if fmt == "json":
        doc = [{"rho": rho, "total": total, "terms": terms} for rho, total, terms in rows]
        return Output(json.dumps(doc, indent=2) + "\n")
    return Output(rows_csv(PREDICT_COLUMNS, (
        [rho, total] + [float(terms.get(k, 0.0)) for k in PREDICT_COLUMNS[2:]] for rho, total, terms in rows
    )))


def _parse_case(spec, path) -> SweepCase:
    _check_keys(spec, _CASE_KEYS, path)
    domain = _domain(_require(spec, "domain", path), f"{path}.domain")
    want_analytic = spec.get("analytic", True)
    want_quad = spec.get("quadrature", True)
    if not isinstance(want_analytic, bool) or not isinstance(want_quad, bool):
        raise ConfigError(path, "analytic and quadrature must be booleans")
    channel = _channel(_require(spec, "channel", path), f"{path}.channel", need_eta2=want_analytic)
    placement = spec.get("placement", "poisson")
    if placement not in ("poisson", "binomial"):
        raise ConfigError(f"{path}.placement", f"expected 'poisson' or 'binomial', got {placement!r}")
    values = parse_grid(_require(spec, "values", path), f"{path}.values", positive=False)
    if placement == "binomial" and any(v != int(v) for v in values):
        raise ConfigError(f"{path}.values", "binomial node counts must be integers")
    regime = spec.get("regime")
    if want_analytic:
        _regime(domain, channel, regime, f"{path}.regime")
    return SweepCase(domain, channel, values, placement, regime, want_analytic, want_quad)


def cmd_simulate(cfg: dict, seed: int, workers: int = 1, clamp: bool = False) -> Output:
    cases = _require(cfg, "cases", "")
    if not isinstance(cases, list):
        raise ConfigError("cases", "expected a list")
    parsed = [_parse_case(c, f"cases[{k}]") for k, c in enumerate(cases)]
    trials = _require(cfg, "trials", "")
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise ConfigError("trials", f"must be a positive integer, got {trials!r}")
    tol = _tol(cfg.get("tol", quadrature.OUTER_TOL), "tol")
    rows = sweep(SweepPlan(parsed, trials, seed, workers, tol))
    if clamp:
        for row in rows:
            if row.pfc_analytic is not None:
                row.pfc_analytic = _clamp(row.pfc_analytic)
            if row.pfc_quadrature is not None:
                row.pfc_quadrature = _clamp(row.pfc_quadrature)
    return Output(sweep_csv(rows), failed=any(r.failed for r in rows))


PHASE_COLUMNS = ["n", "rho", "ratio", "pfc", "below_threshold"]


def phase_rows(L: float, r: float, beta: float, ns, rhos, clamp: bool = False):
    """Rows ``(n, rho, ratio, pfc, below_threshold)`` of the obstacle-dominance grid."""
    rows = []
    for n in ns:
        for rho in rhos:
            ratio = analytic.obstacle_dominance_ratio(L, n, r, beta, rho)
            pfc = analytic.pfc_square_holes(L, n, r, beta, rho).total
            below = _clamp(pfc) < PFC_THRESHOLD
            rows.append((n, rho, ratio, _clamp(pfc) if clamp else pfc, below))
    return rows


def cmd_phase_diagram(cfg: dict, clamp: bool = False) -> Output:
    L = _number(_require(cfg, "L", ""), "L", positive=True)
    r = _number(_require(cfg, "r", ""), "r", positive=True)
    beta = _number(_require(cfg, "beta", ""), "beta", positive=True)
    ns = parse_grid(_require(cfg, "n", ""), "n", positive=False)
    if any(v != int(v) for v in ns):
        raise ConfigError("n", "hole counts must be integers")
    rhos = parse_grid(_require(cfg, "rho", ""), "rho")
    if not ns or not rhos:
        raise ConfigError("n" if not ns else "rho", "grid must not be empty")
    if max(ns) * math.pi * r * r >= L * L:
        raise ConfigError("n", "holes would cover the whole square")
    return Output(rows_csv(PHASE_COLUMNS, phase_rows(L, r, beta, [int(n) for n in ns], rhos, clamp)))


def _series_fn(name, domain, beta, form):
    r = getattr(domain, "r", 0.0)
    if name == "annulus_small":
        return lambda e: analytic.mass_annulus_small(e, r, beta, form)
    if name == "annulus_large":
        return lambda e: analytic.mass_annulus_large(e, r, beta)
    if name == "shell_small":
        return lambda e: analytic.mass_shell_small(e, r, beta, form)
    if name == "shell_large":
        return lambda e: analytic.mass_shell_large(e, r, beta)
    if name == "disk_boundary":
        return lambda e: analytic.mass_disk_boundary(e, domain.R, beta)
    d = 3 if isinstance(domain, (Sphere, SphericalShell)) else 2
    bulk = quadrature.bulk_mass(ChannelModel(beta), d)
    return lambda e: bulk


_SERIES_DOMAINS = {
    "annulus_small": (Annulus,),
    "annulus_large": (Annulus,),
    "shell_small": (SphericalShell,),
    "shell_large": (SphericalShell,),
    "disk_boundary": (Disk,),
    "bulk": (Disk, Annulus, Sphere, SphericalShell),
}


def cmd_oracle(cfg: dict, clamp: bool = False) -> Output:
    table = _require(cfg, "table", "")
    domain = _domain(_require(cfg, "domain", ""), "domain")
    mass_tol = _tol(cfg.get("mass_tol", quadrature.MASS_TOL), "mass_tol")
    if table == "mass":
        channel = _channel(_require(cfg, "channel", ""), "channel")
        series = _require(cfg, "series", "")
        if series not in SERIES:
            raise ConfigError("series", f"expected one of {list(SERIES)}, got {series!r}")
        if not isinstance(domain, _SERIES_DOMAINS[series]):
            raise ConfigError("domain", f"series {series!r} does not apply to this domain")
        form = cfg.get("form", "closed")
        if form not in ("closed", "series", "series_plus"):
            raise ConfigError("form", f"expected 'closed', 'series' or 'series_plus', got {form!r}")
        if form == "series_plus" and series != "shell_small":
            raise ConfigError("form", "series_plus exists only for shell_small")
        eps = parse_grid(_require(cfg, "epsilon", ""), "epsilon", positive=False)
        fn = _series_fn(series, domain, channel.beta, form)
        rows, failed = [], False
        for e in eps:
            try:
                q = quadrature.mass_at_epsilon(domain, channel, e, mass_tol)
            except ValueError as exc:
                raise ConfigError("epsilon", str(exc)) from None
            except Exception:  # noqa: BLE001 - flagged as a partial failure
                rows.append((e, "", fn(e), ""))
                failed = True
                continue
            s = fn(e)
            rows.append((e, q, s, abs(s - q) / abs(q)))
        return Output(rows_csv(["epsilon", "mass_quadrature", "mass_series", "rel_err"], rows), failed)
    if table == "pfc":
        channel = _channel(_require(cfg, "channel", ""), "channel")
        rhos = parse_grid(_require(cfg, "rho", ""), "rho")
        regime = _regime(domain, channel, cfg.get("regime"), "regime")
        tol = _tol(cfg.get("tol", quadrature.OUTER_TOL), "tol")
        try:
            numeric = quadrature.pfc_numeric_many(domain, channel, rhos, tol)
        except Exception:  # noqa: BLE001
            numeric = [None] * len(rhos)
        rows = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analytic.ValidityWarning)
            for rho, q in zip(rhos, numeric):
                a = analytic_pfc(domain, channel, rho, regime)
                if clamp:
                    a = _clamp(a)
                    q = None if q is None else _clamp(float(q))
                rows.append((rho, "" if q is None else float(q), a, "" if q is None else abs(a - float(q))))
        return Output(rows_csv(["rho", "pfc_numeric", "pfc_analytic", "abs_err"], rows), numeric[0] is None)
    raise ConfigError("table", f"expected 'mass' or 'pfc', got {table!r}")


# --- entry point --------------------------------------------------------------------


def _resolve_seed(flag, cfg) -> int:
    source, value = "--seed", flag
    if value is None and "seed" in cfg:
        source, value = "seed", cfg["seed"]
    if value is None and os.environ.get(SEED_ENV):
        source, value = SEED_ENV, os.environ[SEED_ENV]
    if value is None:
        return 0
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise ConfigError(source, f"not an integer: {value!r}") from None
    if isinstance(value, (bool, float)) or not 0 <= seed <= MAX_SEED:
        raise ConfigError(source, f"must be an unsigned 64-bit integer, got {value!r}")
    return seed


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".softgeo-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: dict, seed: int | None = None, workers: int | None = None, clamp: bool | None = None) -> Output:
    """Validate ``cfg`` and execute its command; raises ConfigError on bad input."""
    _check_keys(cfg, set().union(*_KEYS.values()), "")
    command = _require(cfg, "command", "")
    if command not in _KEYS:
        raise ConfigError("command", f"expected one of {sorted(_KEYS)}, got {command!r}")
    _check_keys(cfg, _KEYS[command], "")
    seed = _resolve_seed(seed, cfg)
    if workers is None:
        workers = cfg.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers", f"must be a positive integer, got {workers!r}")
    if clamp is None:
        clamp = cfg.get("clamp", False)
    if not isinstance(clamp, bool):
        raise ConfigError("clamp", "must be a boolean")
    if command == "predict":
        return cmd_predict(cfg, clamp)
    if command == "simulate":
        return cmd_simulate(cfg, seed, workers, clamp)
    if command == "phase_diagram":
        return cmd_phase_diagram(cfg, clamp)
    return cmd_oracle(cfg, clamp)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="softgeo", description="Connectivity of soft random geometric graphs.")
    p.add_argument("--config", required=True, help="JSON experiment description")
    p.add_argument("--seed", help=f"master seed (u64); falls back to the config, then ${SEED_ENV}")
    p.add_argument("--workers", type=int, help="worker processes for Monte Carlo trials")
    p.add_argument("--out", help="output path; stdout when omitted")
    p.add_argument("--clamp", action="store_true", default=None, help="clip probabilities to [0, 1] in the output")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"softgeo: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        result = run(cfg, args.seed, args.workers, args.clamp)
    except (ConfigError, analytic.RegimeError, analytic.SeparationError) as exc:
        print(f"softgeo: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out or (cfg.get("out") if isinstance(cfg, dict) else None)
    if out:
        atomic_write(out, result.text)
    else:
        sys.stdout.write(result.text)
    if result.failed:
        print("softgeo: some cells failed; see the flags column", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
