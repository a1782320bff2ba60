"""Command-line front end: ``coopcast {analytic,simulate,find-lambda-max,sweep}``.

Configuration files are INI-style key/value text::

    [network]
    n = 2
    f_sd = 0.5, 0.5        # one value per destination, no defaults
    f_sr = 0.8
    f_rd = 0.9, 0.9
    lambda = 0.3           # only needed by `simulate`

    [coding]               # required for protocols B and D
    q = 4
    k = 2

    [protocol]
    name = C               # A | B | C | D
    mode = faithful        # faithful | mechanistic

    [series]
    rel_tol = 1e-12
    max_terms = 1000000

    [simulation]
    slots = 1000000
    seed = 0
    seeds = 5
    resolution = 0.005

    [output]
    path = result.csv
    format = csv           # csv | records

Sweep grid files carry a single ``[grid]`` section whose keys are
comma-separated axes: ``n``, ``p``, ``pr``, ``f_sr``, ``protocols`` and, when
B or D is listed, ``q`` and ``k``.

Exit codes: 0 success, 2 validation error, 3 enumeration overflow,
4 stability bisection failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

from . import analytic
from .model import EnumerationOverflowError, NcParams, NetworkConfig
from .simulate import (
    BisectionError,
    ProtocolKind,
    SearchOptions,
    find_lambda_max,
    run,
    worker_count,
)

log = logging.getLogger("coopcast")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_OVERFLOW = 3
EXIT_BISECTION = 4

ANALYTIC_HEADER = [
    "protocol", "n", "f_sd", "f_sr", "f_rd", "q", "k",
    "lambda_max", "source_mu", "relay_etr", "binding_constraint",
]
SIMULATE_HEADER = [
    "protocol", "lambda", "seed", "slots", "arrivals", "packets_delivered",
    "throughput", "source_drift", "relay_drift", "final_source_queue", "final_relay_queue",
]
SEARCH_HEADER = [
    "protocol", "n", "f_sd", "f_sr", "f_rd", "q", "k", "slots", "seeds",
    "lambda_max", "half_width", "analytic_lambda_max",
]
SWEEP_HEADER = [
    "n", "p", "pr", "f_sr", "q", "k", "protocol",
    "lambda_max", "source_mu", "relay_etr", "binding_constraint",
    "sim_lambda_max", "sim_half_width",
]


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _line_of(text: str, section: str, key: str | None) -> int:
    """1-based line of ``key`` inside ``[section]`` (or of the header), 0 if absent."""
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return no
    return 0


@dataclass
class ExperimentConfig:
    network: NetworkConfig
    nc: NcParams | None = None
    protocol: str | None = None
    mode: str = "faithful"
    policy: analytic.SeriesPolicy = field(default_factory=analytic.SeriesPolicy)
    slots: int | None = None
    seed: int = 0
    seeds: int = 5
    resolution: float = 0.005
    lam: float | None = None
    out: str | None = None
    fmt: str = "csv"
    source: str = ""

    def canonical(self) -> str:
        return json.dumps(
            {
                "n": self.network.n,
                "f_sd": self.network.f_sd,
                "f_sr": self.network.f_sr,
                "f_rd": self.network.f_rd,
                "q": self.nc.q if self.nc else None,
                "k": self.nc.k if self.nc else None,
                "protocol": self.protocol,
                "mode": self.mode,
                "rel_tol": self.policy.rel_tol,
                "max_terms": self.policy.max_terms,
                "slots": self.slots,
                "seed": self.seed,
                "seeds": self.seeds,
                "resolution": self.resolution,
                "lambda": self.lam,
            },
            sort_keys=True,
        )

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _read_ini(path: str) -> tuple[configparser.ConfigParser, str]:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"{path}: config file not found")
    text = p.read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return parser, text


class _Fields:
    """Typed access to one INI file with line-numbered error messages."""

    def __init__(self, path: str):
        self.path = path
        self.cp, self.text = _read_ini(path)

    def fail(self, section: str, key: str | None, msg: str):
        line = _line_of(self.text, section, key)
        where = f"{self.path}:{line}" if line else self.path
        raise ValidationError(f"{where}: {msg}")

    def has(self, section: str, key: str) -> bool:
        return self.cp.has_option(section, key)

    def raw(self, section: str, key: str, required: bool = True) -> str | None:
        if not self.cp.has_option(section, key):
            if required:
                where = f"[{section}] " if self.cp.has_section(section) else ""
                self.fail(section, None, f"missing required key {where}{key!r}")
            return None
        return self.cp.get(section, key)

    def number(self, section: str, key: str, kind=float, required: bool = True):
        value = self.raw(section, key, required)
        if value is None:
            return None
        try:
            x = kind(value)
        except ValueError:
            self.fail(section, key, f"{key} = {value!r} is not a valid {kind.__name__}")
        return x

    def numbers(self, section: str, key: str, kind=float, required: bool = True):
        value = self.raw(section, key, required)
        if value is None:
            return None
        try:
            return [kind(v) for v in value.replace(";", ",").split(",") if v.strip()]
        except ValueError:
            self.fail(section, key, f"{key} = {value!r} is not a list of {kind.__name__}")


def load_config(path: str) -> ExperimentConfig:
    f = _Fields(path)
    if not f.cp.has_section("network"):
        f.fail("network", None, "missing [network] section")
    n = f.number("network", "n", int)
    f_sd = f.numbers("network", "f_sd")
    f_rd = f.numbers("network", "f_rd")
    f_sr = f.number("network", "f_sr")
    lam = f.number("network", "lambda", required=False)
    for key, vals in (("f_sd", f_sd), ("f_rd", f_rd)):
        if len(vals) != n:
            f.fail("network", key, f"{key} needs exactly n={n} entries, got {len(vals)}")
        for v in vals:
            if not 0.0 <= v <= 1.0:
                f.fail("network", key, f"{key} entry {v} outside [0, 1]")
    try:
        net = NetworkConfig(n=n, f_sd=tuple(f_sd), f_sr=f_sr, f_rd=tuple(f_rd))
    except ValueError as exc:
        f.fail("network", None, str(exc))
    cfg = ExperimentConfig(network=net, source=path)
    if lam is not None:
        if not 0.0 <= lam <= 1.0:
            f.fail("network", "lambda", f"lambda {lam} outside [0, 1]")
        cfg.lam = lam
    if f.cp.has_section("coding"):
        q = f.number("coding", "q", int)
        k = f.number("coding", "k", int)
        try:
            cfg.nc = NcParams(q, k)
        except ValueError as exc:
            f.fail("coding", "q", str(exc))
    if f.cp.has_section("protocol"):
        cfg.protocol = f.raw("protocol", "name", required=False)
        if cfg.protocol is not None and cfg.protocol.upper() not in "ABCD":
            f.fail("protocol", "name", f"unknown protocol {cfg.protocol!r}")
        cfg.mode = f.raw("protocol", "mode", required=False) or "faithful"
        if cfg.mode not in ("faithful", "mechanistic"):
            f.fail("protocol", "mode", f"unknown mode {cfg.mode!r}")
    if f.cp.has_section("series"):
        rel = f.number("series", "rel_tol", required=False)
        terms = f.number("series", "max_terms", int, required=False)
        try:
            cfg.policy = analytic.SeriesPolicy(
                rel if rel is not None else 1e-12, terms if terms is not None else 1_000_000
            )
        except ValueError as exc:
            f.fail("series", None, str(exc))
    if f.cp.has_section("simulation"):
        cfg.slots = f.number("simulation", "slots", int, required=False)
        cfg.seed = f.number("simulation", "seed", int, required=False) or 0
        cfg.seeds = f.number("simulation", "seeds", int, required=False) or 5
        cfg.resolution = f.number("simulation", "resolution", required=False) or 0.005
        sim_lam = f.number("simulation", "lambda", required=False)
        if sim_lam is not None:
            cfg.lam = sim_lam
        if cfg.slots is not None and cfg.slots < 1:
            f.fail("simulation", "slots", f"slots must be >= 1, got {cfg.slots}")
    if f.cp.has_section("output"):
        cfg.out = f.raw("output", "path", required=False)
        cfg.fmt = f.raw("output", "format", required=False) or "csv"
    return cfg


def _apply_flags(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "protocol", None):
        cfg.protocol = args.protocol
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "lam", None) is not None:
        cfg.lam = args.lam
    if getattr(args, "slots", None) is not None:
        cfg.slots = args.slots
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "seeds", None) is not None:
        cfg.seeds = args.seeds
    if getattr(args, "resolution", None) is not None:
        cfg.resolution = args.resolution
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "format", None):
        cfg.fmt = args.format
    if cfg.protocol is None:
        raise ValidationError("no protocol given (use --protocol or [protocol] name)")
    cfg.protocol = cfg.protocol.upper()
    if cfg.protocol not in ("A", "B", "C", "D"):
        raise ValidationError(f"unknown protocol {cfg.protocol!r}")
    if cfg.protocol in ("B", "D") and cfg.nc is None:
        raise ValidationError(f"protocol {cfg.protocol} needs a [coding] section with q and k")
    if cfg.slots is not None and cfg.slots < 1:
        raise ValidationError(f"slots must be >= 1, got {cfg.slots}")
    if cfg.lam is not None and not 0.0 <= cfg.lam <= 1.0:
        raise ValidationError(f"lambda {cfg.lam} outside [0, 1]")
    if cfg.seeds < 1:
        raise ValidationError("seeds must be >= 1")
    if not cfg.resolution > 0:
        raise ValidationError("resolution must be positive")
    if cfg.fmt not in ("csv", "records"):
        raise ValidationError(f"unknown output format {cfg.fmt!r}")
    return cfg


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "nan")
    if isinstance(x, (tuple, list)):
        return ";".join(_fmt(v) for v in x)
    return str(x)


def _version() -> str:
    try:
        return f"coopcast-{metadata.version('artifact')}"
    except metadata.PackageNotFoundError:
        return "coopcast-unknown"


def emit(rows: list[dict], header: list[str], out: str | None, fmt: str, provenance: dict):
    """Write rows as CSV (fixed header) or JSON records carrying provenance."""
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row.get(h)) for h in header])
    else:
        for row in rows:
            rec = {"provenance": provenance, **{k: _jsonable(v) for k, v in row.items()}}
            buf.write(json.dumps(rec, sort_keys=True) + "\n")
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, tuple):
        return list(v)
    return v


def _provenance(cfg: ExperimentConfig | None, extra: dict | None = None) -> dict:
    p = {"version": _version()}
    if cfg is not None:
        p["config_hash"] = cfg.digest
        p["seed"] = cfg.seed
    if extra:
        p.update(extra)
    return p


# ---------------------------------------------------------------------------
# commands


def _analytic_row(net: NetworkConfig, protocol: str, nc, policy) -> dict:
    res = analytic.max_stable(net, protocol, nc if protocol in "BD" else None, policy)
    return {
        "protocol": protocol,
        "n": net.n,
        "f_sd": net.f_sd,
        "f_sr": net.f_sr,
        "f_rd": net.f_rd,
        "q": nc.q if nc and protocol in "BD" else None,
        "k": nc.k if nc and protocol in "BD" else None,
        "lambda_max": float(res.lambda_max),
        "source_mu": float(res.source_mu),
        "relay_etr": float(res.relay_etr),
        "binding_constraint": res.binding_constraint.value,
    }


def cmd_analytic(cfg: ExperimentConfig) -> list[dict]:
    row = _analytic_row(cfg.network, cfg.protocol, cfg.nc, cfg.policy)
    emit([row], ANALYTIC_HEADER, cfg.out, cfg.fmt, _provenance(cfg))
    return [row]


def _kind(cfg: ExperimentConfig) -> ProtocolKind:
    return ProtocolKind.parse(cfg.protocol, cfg.nc, cfg.mode)


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    if cfg.lam is None:
        raise ValidationError("simulate needs an arrival rate (--lambda or [network] lambda)")
    slots = cfg.slots if cfg.slots is not None else 1_000_000
    rep = run(cfg.network, _kind(cfg), cfg.lam, slots, cfg.seed)
    if cfg.fmt == "records":
        emit([rep.to_dict()], [], cfg.out, "records", _provenance(cfg))
    else:
        row = {
            "protocol": rep.protocol,
            "lambda": rep.lam,
            "seed": rep.seed,
            "slots": rep.slots_run,
            "arrivals": rep.arrivals,
            "packets_delivered": rep.packets_delivered,
            "throughput": rep.throughput,
            "source_drift": rep.source_drift,
            "relay_drift": rep.relay_drift,
            "final_source_queue": rep.counters["final_source_queue"],
            "final_relay_queue": rep.counters["final_relay_queue"],
        }
        emit([row], SIMULATE_HEADER, cfg.out, "csv", _provenance(cfg))
    return rep.to_dict()


def cmd_find_lambda_max(cfg: ExperimentConfig) -> dict:
    opts = SearchOptions(
        slots=cfg.slots if cfg.slots is not None else 1_000_000,
        seeds=cfg.seeds,
        resolution=cfg.resolution,
        seed=cfg.seed,
    )
    est = find_lambda_max(cfg.network, _kind(cfg), opts)
    ana = analytic.max_stable(cfg.network, cfg.protocol, cfg.nc if cfg.protocol in "BD" else None, cfg.policy)
    row = {
        "protocol": _kind(cfg).label,
        "n": cfg.network.n,
        "f_sd": cfg.network.f_sd,
        "f_sr": cfg.network.f_sr,
        "f_rd": cfg.network.f_rd,
        "q": cfg.nc.q if cfg.nc and cfg.protocol in "BD" else None,
        "k": cfg.nc.k if cfg.nc and cfg.protocol in "BD" else None,
        "slots": opts.slots,
        "seeds": opts.seeds,
        "lambda_max": est.lambda_max,
        "half_width": est.half_width,
        "analytic_lambda_max": float(ana.lambda_max),
    }
    emit([row], SEARCH_HEADER, cfg.out, cfg.fmt, _provenance(cfg))
    return row


# sweep grids ---------------------------------------------------------------

PRESETS = {
    "fig2": {
        "n": [2, 4],
        "p": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
        "pr": [0.8],
        "f_sr": [0.8],
        "q": [4],
        "k": [2],
        "protocols": ["A", "B", "C"],
        "order": ["n", "p", "pr", "f_sr", "k", "q"],
    },
    "fig3": {
        "n": [2, 4],
        "p": [0.3],
        "pr": [0.8],
        "f_sr": [0.8],
        "q": [2, 4, 16],
        "k": [1, 2, 3],
        "protocols": ["C", "D"],
        "order": ["n", "p", "pr", "f_sr", "k", "q"],
    },
    "fig4": {
        "n": [2, 4],
        "p": [0.3],
        "pr": [0.8],
        "f_sr": [0.8],
        "q": [2, 4, 16],
        "k": [1, 2, 3],
        "protocols": ["C", "D"],
        "order": ["n", "p", "pr", "f_sr", "q", "k"],
    },
}

_GRID_AXES = {"n": int, "p": float, "pr": float, "f_sr": float, "q": int, "k": int}


def load_grid(path: str) -> dict:
    f = _Fields(path)
    if not f.cp.has_section("grid"):
        f.fail("grid", None, "missing [grid] section")
    grid: dict = {}
    bad = []
    for axis, kind in _GRID_AXES.items():
        if not f.has("grid", axis):
            continue
        try:
            vals = [kind(v) for v in f.raw("grid", axis).split(",") if v.strip()]
        except ValueError:
            bad.append(f"line {_line_of(f.text, 'grid', axis)}: axis {axis!r} has non-{kind.__name__} values")
            continue
        if not vals:
            bad.append(f"line {_line_of(f.text, 'grid', axis)}: axis {axis!r} is empty")
        grid[axis] = vals
    protos = [v.strip().upper() for v in (f.raw("grid", "protocols", required=False) or "").split(",") if v.strip()]
    grid["protocols"] = protos
    grid["order"] = ["n", "p", "pr", "f_sr", "k", "q"]
    problems = validate_grid(grid)
    if bad or problems:
        raise ValidationError(f"{path}: malformed grid: " + "; ".join(bad + problems))
    return grid


def validate_grid(grid: dict) -> list[str]:
    problems = []
    for axis in ("n", "p", "pr", "f_sr"):
        if not grid.get(axis):
            problems.append(f"axis {axis!r} missing")
    if not grid.get("protocols"):
        problems.append("axis 'protocols' missing")
    for proto in grid.get("protocols", []):
        if proto not in ("A", "B", "C", "D"):
            problems.append(f"axis 'protocols' has unknown protocol {proto!r}")
    if any(p in ("B", "D") for p in grid.get("protocols", [])):
        for axis in ("q", "k"):
            if not grid.get(axis):
                problems.append(f"axis {axis!r} missing (needed by protocols B/D)")
    for axis in ("p", "pr", "f_sr"):
        for v in grid.get(axis, []):
            if not 0.0 <= v <= 1.0:
                problems.append(f"axis {axis!r} value {v} outside [0, 1]")
    for v in grid.get("n", []):
        if v < 1:
            problems.append(f"axis 'n' value {v} must be >= 1")
    for v in grid.get("k", []):
        if v < 1:
            problems.append(f"axis 'k' value {v} must be >= 1")
    for v in grid.get("q", []):
        try:
            NcParams(v, 1)
        except ValueError:
            problems.append(f"axis 'q' value {v} is not a supported field order")
    return problems


def grid_points(grid: dict) -> list[tuple[dict, str]]:
    """Cross product in the grid's axis order; uncoded protocols once per link point."""
    order = grid["order"]
    coded_axes = [a for a in order if a in ("q", "k")]
    link_axes = [a for a in order if a not in ("q", "k")]
    pts = []
    for link_vals in itertools.product(*(grid[a] for a in link_axes)):
        base = dict(zip(link_axes, link_vals))
        for proto in grid["protocols"]:
            if proto in ("A", "C"):
                pts.append(({**base, "q": None, "k": None}, proto))
        if any(p in ("B", "D") for p in grid["protocols"]):
            for coded_vals in itertools.product(*(grid[a] for a in coded_axes)):
                point = {**base, **dict(zip(coded_axes, coded_vals))}
                for proto in grid["protocols"]:
                    if proto in ("B", "D"):
                        pts.append((point, proto))
    return pts


def _sweep_row(item, policy, sim_opts, mode) -> dict:
    point, proto = item
    net = NetworkConfig.symmetric(point["n"], point["p"], point["f_sr"], point["pr"])
    nc = NcParams(point["q"], point["k"]) if proto in ("B", "D") else None
    res = analytic.max_stable(net, proto, nc, policy)
    row = {
        **point,
        "protocol": proto,
        "lambda_max": float(res.lambda_max),
        "source_mu": float(res.source_mu),
        "relay_etr": float(res.relay_etr),
        "binding_constraint": res.binding_constraint.value,
    }
    if sim_opts is not None:
        est = find_lambda_max(net, ProtocolKind.parse(proto, nc, mode), sim_opts)
        row["sim_lambda_max"] = est.lambda_max
        row["sim_half_width"] = est.half_width
    return row


def cmd_sweep(
    grid: dict,
    policy: analytic.SeriesPolicy = analytic.DEFAULT_POLICY,
    sim_opts: SearchOptions | None = None,
    mode: str = "faithful",
    out: str | None = None,
    fmt: str = "csv",
    provenance: dict | None = None,
) -> list[dict]:
    problems = validate_grid(grid)
    if problems:
        raise ValidationError("malformed grid: " + "; ".join(problems))
    items = grid_points(grid)
    workers = worker_count()
    fn = lambda it: _sweep_row(it, policy, sim_opts, mode)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(fn, items))  # map preserves grid order
    else:
        rows = [fn(it) for it in items]
    emit(rows, SWEEP_HEADER, out, fmt, provenance or {"version": _version()})
    return rows


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coopcast",
        description="Maximum stable throughput of cooperative multicast protocols.",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sim=False):
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--protocol", type=str.upper, choices=list("ABCD"))
        p.add_argument("--mode", choices=["faithful", "mechanistic"])
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=["csv", "records"])
        if sim:
            p.add_argument("--lambda", dest="lam", type=float)
            p.add_argument("--slots", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--seeds", type=int)
            p.add_argument("--resolution", type=float)

    common(sub.add_parser("analytic", help="closed-form maximum stable throughput"))
    common(sub.add_parser("simulate", help="one simulation run"), sim=True)
    common(sub.add_parser("find-lambda-max", help="bisect the simulated stability boundary"), sim=True)

    sw = sub.add_parser("sweep", help="grid of analytic (and optionally simulated) rates")
    src = sw.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", help="INI file with a [grid] section")
    sw.add_argument("--mode", choices=["faithful", "mechanistic"], default="faithful")
    sw.add_argument("--simulate", action="store_true", help="also bisect each point")
    sw.add_argument("--slots", type=int, default=1_000_000)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--seeds", type=int, default=5)
    sw.add_argument("--resolution", type=float, default=0.005)
    sw.add_argument("--out")
    sw.add_argument("--format", choices=["csv", "records"], default="csv")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "sweep":
            if args.slots < 1:
                raise ValidationError(f"slots must be >= 1, got {args.slots}")
            grid = dict(PRESETS[args.preset]) if args.preset else load_grid(args.config)
            sim_opts = None
            if args.simulate:
                sim_opts = SearchOptions(
                    slots=args.slots, seeds=args.seeds,
                    resolution=args.resolution, seed=args.seed,
                )
            prov = {"version": _version(), "grid": args.preset or args.config, "seed": args.seed}
            cmd_sweep(grid, analytic.DEFAULT_POLICY, sim_opts, args.mode, args.out, args.format, prov)
            return EXIT_OK
        cfg = _apply_flags(load_config(args.config), args)
        if args.command == "analytic":
            cmd_analytic(cfg)
        elif args.command == "simulate":
            cmd_simulate(cfg)
        else:
            cmd_find_lambda_max(cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EnumerationOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except BisectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BISECTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
