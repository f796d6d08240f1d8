"""Command line experiment runner.

    nevaikit <subcommand> [--config PATH] [--set KEY=VALUE ...] [--out PATH]
                          [--seed U64] [--threads N]

Every run writes CSV preceded by ``#`` provenance lines (tool version,
config hash, seed and the full effective config as JSON). Exit status is 0
on success, 2 for configuration errors, 3 for numeric-domain errors and 4
for convergence failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from . import __version__
from .config import (SUBCOMMANDS, ConfigError, ExperimentConfig, config_from_dict, load_toml,
                     provenance_lines, sweep_grid)
from .errors import ConvergenceError, DomainError, NevaiError

Table = Tuple[List[str], List[Sequence[Any]]]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


# ---------------------------------------------------------------------------
# subcommand bodies; each returns (columns, rows)


def run_eval(cfg: ExperimentConfig) -> Table:
    from .recurrence import ortho_stream

    p = cfg.params
    st = ortho_stream(cfg.build_model(), p["x0"], p["N"])
    idx = np.arange(0, p["N"] + 1, p["stride"])
    rows = zip(idx.tolist(), np.sign(st.p[idx]).astype(int).tolist(), st.log_abs_p[idx].tolist(),
               st.log_K[idx].tolist(), st.ratio[idx].tolist())
    return ["n", "sign_p", "log_abs_p", "log_K", "ratio"], list(rows)


def run_nevai(cfg: ExperimentConfig) -> Table:
    from .recurrence import nevai_ratio_stream

    p = cfg.params
    r = nevai_ratio_stream(cfg.build_model(), p["x0"], p["N"])
    idx = np.arange(0, p["N"] + 1, p["stride"])
    if idx[-1] != p["N"]:
        idx = np.append(idx, p["N"])
    return ["n", "ratio"], list(zip(idx.tolist(), r[idx].tolist()))


def run_lyapunov(cfg: ExperimentConfig) -> Table:
    from .transfer import growth_test, lyapunov_estimate

    p = cfg.params
    seq = cfg.build_model()
    est = lyapunov_estimate(seq, p["x0"], p["N"], p["windows"])
    cols = ["x0", "N", "gamma_hat", "last_window_slope", "growth_test"]
    row = [est.x0, est.N, est.gamma_hat, est.last_window_slope, growth_test(seq, p["x0"], p["N"])]
    if est.window_slopes:
        cols += [f"window_{i + 1}" for i in range(len(est.window_slopes))]
        row += list(est.window_slopes)
    return cols, [row]


def run_eta(cfg: ExperimentConfig) -> Table:
    from .recurrence import eta_moment_k, eta_moments

    p = cfg.params
    seq = cfg.build_model()
    rows: List[Sequence[Any]] = [("raw", k, eta_moment_k(seq, p["x0"], p["n"], k))
                                 for k in range(p["kmax"] + 1)]
    em = eta_moments(seq, p["x0"], p["n"])
    rows.append(("central", 1, em.first))
    rows.append(("central", 2, em.second))
    return ["kind", "k", "value"], rows


def run_spectrum(cfg: ExperimentConfig) -> Table:
    from .spectral import spectral_measure_at, truncate

    p = cfg.params
    if p["coordinate"] > p["m"]:
        raise ConfigError(f"params.coordinate: must be <= m = {p['m']}")
    mu = spectral_measure_at(truncate(cfg.build_model(), p["m"], p.get("corner_b")), p["coordinate"])
    rows = [(j + 1, x, w) for j, (x, w) in enumerate(zip(mu.atoms.tolist(), mu.weights.tolist()))]
    return ["j", "atom", "weight"], rows


def run_moments(cfg: ExperimentConfig) -> Table:
    from .spectral import operator_moment, spectral_measure_at, truncate

    p = cfg.params
    seq = cfg.build_model()
    mu = spectral_measure_at(truncate(seq, p["m"]), 1) if "m" in p else None
    rows = []
    for k in range(p["K"] + 1):
        op = operator_moment(seq, k)
        rows.append((k, op) if mu is None else (k, op, mu.moment(k), abs(mu.moment(k) - op)))
    cols = ["k", "operator_moment"] + ([] if mu is None else ["measure_moment", "abs_diff"])
    return cols, rows


def run_green(cfg: ExperimentConfig) -> Table:
    from .green import boundary_value_probe, green_first_row, weyl_wronskian_residual

    p = cfg.params
    seq = cfg.build_model()
    N = p["N"]
    if "z" in p:
        z = complex(*p["z"])
        n_max = min(p["n_max"], N - 1)
        g = green_first_row(seq, N, z, n_max)
        rows = [(n, g[n - 1].real, g[n - 1].imag, weyl_wronskian_residual(seq, N, z, n))
                for n in range(1, n_max + 1)]
        return ["n", "re", "im", "wronskian_residual"], rows
    res = boundary_value_probe(seq, N, p["x0"], p["probe_index"], p["eps"])
    changes = (math.nan,) + res.relative_changes
    rows = [(e, v.real, v.imag, c) for e, v, c in zip(res.eps, res.values, changes)]
    flag = "not_assessed" if res.stabilized is None else str(res.stabilized).lower()
    rows.append(("stabilized", flag, "", ""))
    return ["eps", "re", "im", "relative_change"], rows


def run_prufer(cfg: ExperimentConfig) -> Table:
    from .prufer import prufer_run

    p = cfg.params
    run = prufer_run(cfg.build_model(), p["x0"], p["N"])
    ps = run.partial_sums
    idx = np.arange(0, run.N, p["stride"])
    rows = zip((idx + 1).tolist(), run.R[idx].tolist(), run.theta[idx].tolist(),
               run.k[idx].tolist(), run.X[idx].tolist(), ps[idx].tolist())
    return ["n", "R", "theta", "k", "X", "partial_sum"], list(rows)


def run_bounds(cfg: ExperimentConfig) -> Table:
    from .bounds import FUZZERS

    p = cfg.params
    rows = []
    for i, name in enumerate(p["checks"]):
        rng = np.random.default_rng([cfg.seed, i])
        rows.append(FUZZERS[name](p["samples"], rng).row())
    return ["check", "samples", "violations", "min_slack", "min_ratio", "skipped"], rows


SWEEP_COLUMNS = {
    "nevai": ["x0", "ratio"],
    "lyapunov": ["x0", "gamma_hat", "last_window_slope"],
    "growth": ["x0", "growth_test"],
    "christoffel": ["x0", "lambda"],
    "block_slope": ["x0", "slope", "eta", "relative_error"],
}


def sweep_point(model_spec: Dict[str, Any], seed: int, diagnostic: str, N: int, x0: float,
                block: int = 3) -> Tuple:
    """One sweep row; a module-level function so worker processes can import it."""
    cfg = ExperimentConfig("sweep", model_spec, {}, seed, 1)
    seq = cfg.build_model()
    if diagnostic == "nevai":
        from .recurrence import final_state
        return (x0, final_state(seq, x0, N).ratio)
    if diagnostic == "lyapunov":
        from .transfer import lyapunov_estimate
        est = lyapunov_estimate(seq, x0, N)
        return (x0, est.gamma_hat, est.last_window_slope)
    if diagnostic == "growth":
        from .transfer import growth_test
        return (x0, growth_test(seq, x0, N))
    if diagnostic == "christoffel":
        from .recurrence import christoffel
        return (x0, christoffel(seq, x0, N))
    from .transfer import block_slope, hyperbolic_rate, log_norm_profile
    if not hasattr(seq, "center"):
        raise DomainError("block_slope needs a block41 model")
    lo, hi = seq.block("C", block)
    prof = log_norm_profile(seq, x0, hi)
    slope = block_slope(prof, lo, hi)
    eta = hyperbolic_rate(x0)[1]
    eta = math.nan if eta is None else eta
    rel = abs(slope - eta) / eta if eta and eta > 0 else math.nan
    return (x0, slope, eta, rel)


def run_sweep(cfg: ExperimentConfig) -> Table:
    p = cfg.params
    grid = sweep_grid(p)
    diag = p["diagnostic"]
    args = [(cfg.model, cfg.seed, diag, p["N"], x, p["block"]) for x in grid]
    if cfg.threads == 1 or len(grid) == 1:
        rows = [sweep_point(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, len(grid))) as ex:
            rows = list(ex.map(sweep_point, *zip(*args)))
    return SWEEP_COLUMNS[diag], rows


RUNNERS = {
    "eval": run_eval, "nevai": run_nevai, "lyapunov": run_lyapunov, "eta": run_eta,
    "spectrum": run_spectrum, "moments": run_moments, "green": run_green,
    "prufer": run_prufer, "bounds": run_bounds, "sweep": run_sweep,
}


def render_csv(cfg: ExperimentConfig, table: Table) -> str:
    cols, rows = table
    buf = io.StringIO()
    for line in provenance_lines(cfg, __version__):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run(cfg: ExperimentConfig) -> str:
    """Execute an experiment and return the CSV text."""
    return render_csv(cfg, RUNNERS[cfg.kind](cfg))


# ---------------------------------------------------------------------------
# argument handling


def _apply_set(data: Dict[str, Any], assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set {assignment!r}: expected KEY=VALUE")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    try:
        value = load_toml(f"v = {raw}")["v"]
    except ConfigError:
        value = raw  # bare string
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: '{part}' is not a table")
    node[parts[-1]] = value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nevaikit", description="Orthogonal polynomial experiments.")
    ap.add_argument("--version", action="version", version=f"nevaikit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML experiment file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. params.N=1000 or model.kind='\"free\"'")
        sp.add_argument("--out", help="CSV destination (default: stdout)")
        sp.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        sp.add_argument("--threads", type=int, help="worker processes for sweeps")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data: Dict[str, Any] = {}
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = load_toml(fh.read())
        for s in args.set:
            _apply_set(data, s)
        if args.seed is not None:
            data["seed"] = args.seed
        if args.threads is not None:
            data["threads"] = args.threads
        cfg = config_from_dict(data, args.command)
        text = run(cfg)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 4
    except NevaiError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
