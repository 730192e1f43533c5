"""Command-line runner: ``qgraph {spectrum,hierarchy,orbits,stats,compare,report}``.

Every artifact carries the SHA-256 of the resolved configuration (a comment
line in CSV files, a ``config_sha256`` key in JSON files) and each run
writes ``manifest.json`` with content hashes.  Output is deterministic for a
given configuration and seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .determinant import (DeterminantError, RootFindingError, expand_determinant, find_roots,
                          find_roots_numeric, regularity_degree, staircase_count,
                          MAX_SYMBOLIC_SIZE)
from .graph import (GraphSpec, GraphSpecError, assemble_bond_scattering, build_named_spec,
                    check_spec, load_builtin, spec_from_dict)
from .hierarchy import HierarchyError, LevelSequence, run_hierarchy
from .orbits import (IrregularGraphError, eigenvalue_series, enumerate_prime_orbits,
                     logdet_harmonics, series_tail_bound)
from . import statistics as st

COMMANDS = ("spectrum", "hierarchy", "orbits", "stats", "compare", "report")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
KNOWN_KEYS = {"graph", "n_roots", "m_max", "k_min", "k_max", "seed", "samples", "orbit_order",
              "neighbours", "tau_max", "tau_points", "out", "emit_plot_data"}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class RunConfig:
    command: str
    graph: dict
    graph_source: str
    n_roots: int = 1000
    m_max: list[int] = field(default_factory=lambda: [4, 8, 12])
    k_min: float | None = None
    k_max: float | None = None
    seed: int | None = None
    samples: int = 100_000
    orbit_order: int = 240
    neighbours: int = 20
    tau_max: float = 20.0
    tau_points: int = 40
    out: str = "out"
    emit_plot_data: bool = False

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d

    def digest(self) -> str:
        text = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _read_json(path: Path):
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: parse error at line {exc.lineno}, column {exc.colno}: "
                           f"{exc.msg}"]) from exc


def _resolve_graph(value, base: Path, problems: list[str]):
    if isinstance(value, str):
        if value.startswith("builtin:"):
            try:
                return load_builtin(value.split(":", 1)[1]).to_dict(), value
            except GraphSpecError as exc:
                problems.append(str(exc))
                return None, value
        p = (base / value).resolve()
        if not p.is_file():
            problems.append(f"graph file {p} not found")
            return None, str(p)
        return _read_json(p), str(p)
    if isinstance(value, dict) and "family" in value:
        try:
            return build_named_spec(value["family"], **value.get("params", {})).to_dict(), \
                f"family:{value['family']}"
        except (GraphSpecError, TypeError) as exc:
            problems.append(f"graph family: {exc}")
            return None, "family"
    if isinstance(value, dict):
        return value, "inline"
    problems.append("graph must be a path, 'builtin:NAME', a family block or an inline spec")
    return None, ""


def load_config(path, command: str, overrides: dict | None = None) -> RunConfig:
    """Read and validate a run configuration; all violations are reported together.

    ``path`` may be a configuration file, a bare graph-spec file (one with a
    ``bonds`` list) or ``builtin:NAME``.
    """
    problems: list[str] = []
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if str(path).startswith("builtin:"):
        raw, base = {"graph": str(path)}, Path.cwd()
    else:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"config file {p} not found")
        raw = _read_json(p)
        base = p.resolve().parent
        if isinstance(raw, dict) and "bonds" in raw:
            raw = {"graph": raw}
    if not isinstance(raw, dict):
        raise ConfigError(["configuration must be a JSON object"])
    for key in sorted(set(raw) - KNOWN_KEYS):
        warnings.warn(f"unknown configuration key {key!r} ignored")
    merged = {**raw, **overrides}
    if command not in COMMANDS:
        problems.append(f"unknown command {command!r}")
    if "graph" not in merged:
        problems.append("missing 'graph'")
        graph, source = None, ""
    else:
        graph, source = _resolve_graph(merged["graph"], base, problems)
    if graph is not None:
        try:
            check_spec(spec_from_dict(graph))
        except GraphSpecError as exc:
            problems.append(f"graph: {exc}")

    def integer(key, lo, default):
        v = merged.get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int) or v < lo:
            problems.append(f"{key} must be an integer >= {lo} (got {v!r})")
            return default
        return v

    n_roots = integer("n_roots", 1, 1000)
    samples = integer("samples", 1000, 100_000)
    orbit_order = integer("orbit_order", 1, 240)
    neighbours = integer("neighbours", 1, 20)
    tau_points = integer("tau_points", 1, 40)
    seed = merged.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)
                             or not 0 <= seed < 2 ** 64):
        problems.append(f"seed must be an unsigned 64-bit integer (got {seed!r})")
    if command == "stats" and seed is None:
        problems.append("stats needs an explicit seed")
    m_max = merged.get("m_max", [4, 8, 12])
    if isinstance(m_max, str):
        try:
            m_max = [int(x) for x in m_max.split(",") if x.strip()]
        except ValueError:
            problems.append(f"m_max must be a comma-separated integer list (got {m_max!r})")
            m_max = [4, 8, 12]
    if isinstance(m_max, int):
        m_max = [m_max]
    if not m_max or not all(isinstance(m, int) and m >= 1 for m in m_max):
        problems.append("m_max must list integers >= 1")
    k_min, k_max = merged.get("k_min"), merged.get("k_max")
    for key, v in (("k_min", k_min), ("k_max", k_max)):
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0):
            problems.append(f"{key} must be a non-negative number")
    if isinstance(k_min, (int, float)) and isinstance(k_max, (int, float)) and k_min >= k_max:
        problems.append("k_min must be below k_max")
    tau_max = merged.get("tau_max", 20.0)
    if not isinstance(tau_max, (int, float)) or tau_max <= 0:
        problems.append("tau_max must be positive")
    emit = merged.get("emit_plot_data", False)
    if not isinstance(emit, bool):
        problems.append("emit_plot_data must be true or false")
    if problems:
        raise ConfigError(problems)
    out = merged.get("out", "out")
    return RunConfig(command, graph, source, n_roots, list(m_max),
                     None if k_min is None else float(k_min),
                     None if k_max is None else float(k_max),
                     seed, samples, orbit_order, neighbours, float(tau_max), tau_points,
                     str(Path(out).resolve()), emit)


# ---------------------------------------------------------------------------
# artifact writing


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


class Artifacts:
    """Collects output files, stamping each with the configuration digest."""

    def __init__(self, out_dir: Path, digest: str):
        self.out = Path(out_dir)
        self.digest = digest
        self.files: list[Path] = []
        self.out.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header: list[str], rows) -> Path:
        p = self.out / name
        with open(p, "w", newline="") as fh:
            fh.write(f"# config_sha256={self.digest}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
        self.files.append(p)
        return p

    def json(self, name: str, payload: dict) -> Path:
        p = self.out / name
        body = {"config_sha256": self.digest, **_plain(payload)}
        p.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        self.files.append(p)
        return p

    def adopt(self, path: Path) -> Path:
        """Stamp a file written by a library routine."""
        path = Path(path)
        if path.suffix == ".csv":
            text = path.read_text()
            path.write_text(f"# config_sha256={self.digest}\n{text}")
        elif path.suffix == ".json":
            body = json.loads(path.read_text())
            body["config_sha256"] = self.digest
            path.write_text(json.dumps(_plain(body), indent=2, sort_keys=True) + "\n")
        self.files.append(path)
        return path

    def histogram(self, name: str, d: st.DistributionEstimate) -> Path:
        return self.csv(name, ["bin_lo", "bin_hi", "density"],
                        zip(d.edges[:-1], d.edges[1:], d.density))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_report(artifacts: list[Path], out_dir) -> Path:
    """``manifest.json`` listing every artifact with its SHA-256 (sorted by name)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for p in sorted(set(Path(a) for a in artifacts), key=lambda q: str(q)):
        digest = hashlib.sha256(p.read_bytes()).hexdigest()
        try:
            rel = str(p.resolve().relative_to(out.resolve()))
        except ValueError:
            rel = str(p)
        entries.append({"path": rel, "sha256": digest, "bytes": p.stat().st_size})
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps({"version": __version__, "files": entries}, indent=2) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# shared computations


@dataclass
class _Graph:
    spec: GraphSpec
    S: object
    det: object | None

    @classmethod
    def build(cls, cfg: RunConfig) -> "_Graph":
        spec = spec_from_dict(cfg.graph)
        S = assemble_bond_scattering(spec)
        det = expand_determinant(S) if S.size <= MAX_SYMBOLIC_SIZE else None
        return cls(spec, S, det)

    @property
    def L0(self) -> float:
        return self.S.total_length


def _spectrum(g: _Graph, cfg: RunConfig) -> LevelSequence:
    """Eigenvalues with staircase indices: all in the k-range, or the first n_roots."""
    L0 = g.L0
    k_lo = cfg.k_min if cfg.k_min else 1e-6 * np.pi / L0

    def roots_in(a, b):
        if g.det is not None:
            return find_roots(g.det.secular, a, b)
        return find_roots_numeric(g.S, a, b)

    n0 = staircase_count(g.S, k_lo) if cfg.k_min else 0
    if cfg.k_max is not None:
        k = roots_in(k_lo, cfg.k_max)
        return LevelSequence(0, np.arange(n0 + 1, n0 + 1 + k.size), k, L0)
    span = np.pi / L0 * (cfg.n_roots + 4)
    while True:
        k = roots_in(k_lo, k_lo + span)
        if k.size >= cfg.n_roots + 1:
            k = k[:cfg.n_roots]
            return LevelSequence(0, np.arange(n0 + 1, n0 + 1 + k.size), k, L0)
        span *= 1.5


def _level_rows(seq: LevelSequence):
    return zip(seq.n, seq.k, seq.delta)


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg: RunConfig, art: Artifacts) -> dict:
    g = _Graph.build(cfg)
    seq = _spectrum(g, cfg)
    art.csv("roots.csv", ["n", "k", "delta"], _level_rows(seq))
    summary = {"count": len(seq), "L0": g.L0,
               "first": seq.k[:5].tolist(), "mean_delta": float(np.mean(seq.delta))}
    if cfg.emit_plot_data and len(seq) > 1:
        art.histogram("plot_delta_histogram.csv", st.histogram(seq.delta))
    art.json("spectrum.json", summary)
    return summary


def cmd_hierarchy(cfg: RunConfig, art: Artifacts) -> dict:
    g = _Graph.build(cfg)
    if g.det is None:
        raise DeterminantError("hierarchy needs the expanded determinant (graph too large)")
    run = run_hierarchy(g.spec, cfg.n_roots, det=g.det, S=g.S)
    for p in run.export(art.out):
        art.adopt(p)
    if cfg.emit_plot_data:
        for j, lv in sorted(run.levels.items()):
            if len(lv) > 1 and np.ptp(lv.delta) > 0:
                art.histogram(f"plot_level_{j}_delta.csv", st.histogram(lv.delta))
    return run.summary()


def cmd_orbits(cfg: RunConfig, art: Artifacts) -> dict:
    g = _Graph.build(cfg)
    M = max(cfg.m_max)
    ens = enumerate_prime_orbits(g.S, M)
    rows = [[p.code_string(), " ".join(map(str, p.m)), p.length, p.amplitude.real,
             p.amplitude.imag, p.omega, p.scatterings] for p in ens.orbits]
    art.csv("orbits.csv", ["code", "m", "length", "re_A", "im_A", "omega", "scatterings"], rows)
    counts = {m: sum(1 for p in ens.orbits if p.scatterings == m) for m in range(1, M + 1)}
    summary = {"m_max": M, "orbits": len(ens), "truncated": ens.truncated,
               "counts": counts, "census": ens.census,
               "census_match": counts == ens.census}
    art.json("orbits.json", summary)
    return summary


def cmd_stats(cfg: RunConfig, art: Artifacts) -> dict:
    g = _Graph.build(cfg)
    seq = _spectrum(g, cfg)
    summary: dict = {"levels": len(seq)}
    hist = {"delta": st.histogram(seq.delta), "spacing": st.histogram(seq.spacing(1)),
            "ximean": st.histogram(seq.ximean)}
    for name, d in hist.items():
        art.histogram(f"hist_{name}.csv", d)
        if cfg.emit_plot_data:
            art.histogram(f"plot_{name}_histogram.csv", d)
    summary["spacing_mean"] = float(np.mean(seq.spacing(1)))
    degree = regularity_degree(g.det).degree if g.det is not None else None
    summary["regularity_degree"] = degree
    sampler = st.TorusSampler(cfg.samples, cfg.seed)
    h = None
    if g.det is not None:
        h = logdet_harmonics(g.det.raw, g.S.bond_lengths,
                             cfg.orbit_order if degree == 0 else min(cfg.orbit_order, 8))
    if degree == 0:
        est = st.invert_charfn(st.delta_series(h), sampler, n_bins=1000)
        art.histogram("charfn_delta.csv", est)
        summary["charfn_delta_ks"] = est.ks(seq.delta)
        summary["charfn_flags"] = est.flags
        nb = cfg.neighbours
        if len(seq) > nb + 1:
            edges = np.linspace(0.0, float(nb), 20 * nb + 1)
            dists = [st.invert_charfn(st.spacing_series(h, m), sampler, edges=edges, sigma=1e-5)
                     for m in range(1, nb + 1)]
            r2 = st.autocorrelation(dists, edges)
            pc = st.pair_counts(seq, edges, nb)
            art.csv("r2.csv", ["x_lo", "x_hi", "r2_distributions", "r2_pair_counts"],
                    zip(edges[:-1], edges[1:], r2.value, pc.value))
            summary["r2_sup_difference"] = float(np.max(np.abs(r2.value - pc.value)))
        tau = np.linspace(0.1, cfg.tau_max, cfg.tau_points)
        if len(seq) >= 20_000 + nb:
            fd = st.form_factor_direct(seq, tau, nb)
            fo = st.form_factor_orbit(h, tau, nb, sampler)
            art.csv("form_factor.csv", ["tau", "re_direct", "im_direct", "se_direct", "re_orbit",
                                        "im_orbit", "se_orbit"],
                    [[t, a.real, a.imag, sa, b.real, b.imag, sb] for t, a, sa, b, sb in
                     zip(tau, fd.value, fd.se, fo.value, fo.se)])
            z = np.abs(fd.value - fo.value) / np.sqrt(fd.se ** 2 + fo.se ** 2)
            summary["form_factor_max_z"] = float(np.max(z))
        else:
            summary["form_factor"] = "skipped: direct route needs two windows of 10^4 levels"
    else:
        summary["charfn"] = "skipped: orbit series describe regular graphs only"
    if len(seq) >= 10_000:
        summary["universality"] = st.universality_checks(seq, h)
    art.json("stats.json", summary)
    return summary


def cmd_compare(cfg: RunConfig, art: Artifacts) -> dict:
    g = _Graph.build(cfg)
    if g.det is None:
        raise DeterminantError("compare needs the expanded determinant (graph too large)")
    degree = regularity_degree(g.det).degree
    seq = _spectrum(g, cfg)
    full = logdet_harmonics(g.det.raw, g.S.bond_lengths, max(96, max(cfg.m_max) + 24))
    rows, errors = [], []
    for M in sorted(cfg.m_max):
        h = enumerate_prime_orbits(g.S, M).harmonics()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            k, _ = eigenvalue_series(h, seq.n, degree=degree, allow_irregular=True)
        err = float(np.max(np.abs(k - seq.k)))
        tail = series_tail_bound(full, M)
        errors.append(err)
        rows.append([M, len(h), err, tail])
    art.csv("compare.csv", ["m_max", "harmonics", "max_error", "tail_bound"], rows)
    summary = {"regularity_degree": degree, "levels": len(seq),
               "max_error": dict(zip(sorted(cfg.m_max), errors)),
               "non_increasing": all(b <= a for a, b in zip(errors, errors[1:])),
               "tail_bound_order": int(full.order.max())}
    art.json("compare.json", summary)
    return summary


def cmd_report(cfg: RunConfig, art: Artifacts) -> dict:
    g = _Graph.build(cfg)
    report: dict = {"graph": {"name": g.spec.name, "bonds": g.spec.n_bonds, "L0": g.L0}}
    if g.det is not None:
        reg = regularity_degree(g.det)
        report["determinant"] = {"terms": g.det.n_terms, "gamma0": g.det.gamma0}
        report["regularity_degree"] = reg.degree
        report["regularity_sums"] = reg.sigmas
        run = run_hierarchy(g.spec, cfg.n_roots, det=g.det, S=g.S)
        report["hierarchy"] = run.summary()
        report["fluctuation_spread"] = run.spreads.get(0, 0.0)
    seq = _spectrum(g, cfg)
    report["spectrum"] = {"count": len(seq), "first": seq.k[:5].tolist(),
                          "delta_std": float(np.std(seq.delta))}
    census = enumerate_prime_orbits(g.S, min(max(cfg.m_max), 8)).census
    report["orbit_census"] = census
    report["config"] = cfg.echo()
    report["version"] = __version__
    art.json("report.json", report)
    return report


HANDLERS = {"spectrum": cmd_spectrum, "hierarchy": cmd_hierarchy, "orbits": cmd_orbits,
            "stats": cmd_stats, "compare": cmd_compare, "report": cmd_report}


def run_command(cfg: RunConfig) -> tuple[dict, Path]:
    art = Artifacts(Path(cfg.out), cfg.digest())
    summary = HANDLERS[cfg.command](cfg, art)
    manifest = write_report(art.files, art.out)
    return summary, manifest


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgraph", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="run configuration, graph-spec JSON, or builtin:NAME")
        p.add_argument("--n-roots", type=int)
        p.add_argument("--m-max", help="comma-separated orbit cutoffs, e.g. 4,8,12")
        p.add_argument("--k-min", type=float)
        p.add_argument("--k-max", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--out")
        p.add_argument("--emit-plot-data", action="store_true", default=None)
    return parser


def _fail(kind: str, message, code: int, **extra) -> int:
    payload = {"error": kind, "message": str(message), "exit_code": code, **extra}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"n_roots": args.n_roots, "m_max": args.m_max, "k_min": args.k_min,
                 "k_max": args.k_max, "seed": args.seed, "samples": args.samples,
                 "out": args.out, "emit_plot_data": args.emit_plot_data}
    try:
        cfg = load_config(args.config, args.command, overrides)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG, problems=exc.problems)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    try:
        summary, manifest = run_command(cfg)
    except (HierarchyError, RootFindingError, DeterminantError, IrregularGraphError) as exc:
        return _fail("numeric", exc, EXIT_NUMERIC)
    except GraphSpecError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO, path=getattr(exc, "filename", None))
    print(json.dumps({"command": cfg.command, "manifest": str(manifest),
                      "config_sha256": cfg.digest()}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
