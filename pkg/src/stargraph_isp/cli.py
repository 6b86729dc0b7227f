"""Command-line front end.

    stargraph-isp direct   --graph G --K 100 --out DIR
    stargraph-isp inverse  --spectral DIR/spectral.json --graph G --out DIR
    stargraph-isp validate --graph G [--spectral S] [--out DIR]
    stargraph-isp demo     example1 --out DIR

``--graph`` is a graph JSON file or the name of a built-in graph
(``example1``, ``example2``, ``zero``).  For ``inverse`` the graph file only
supplies the edge lengths and, when its ``potential_values`` are not empty,
the true potentials for the error columns.

All output is computed first and written at the end, floats with 17
significant digits, so identical runs give byte-identical files.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .direct import DIRECT_N, generate_spectral_data
from .graph import DEMO_GRAPHS, SpectralDataSet, StarGraph, make_demo_graph
from .inverse import (
    InverseConfig,
    compute_dd_spectrum,
    compute_dn_spectrum,
    compute_multipliers,
    estimate_omega,
    run_inverse_pipeline,
    solve_endpoint_s,
    solve_endpoint_sigma,
)
from .nsbf import (
    compute_coefficients,
    eval_phi_N,
    eval_phi_prime_N,
    eval_S_N,
    eval_S_prime_N,
)
from .numerics import DEFAULT_GRID_POINTS, Grid, SampledFunction
from .oracle import oracle_graph_spectrum, oracle_norming_vectors, oracle_spectrum, shoot

log = logging.getLogger("stargraph_isp")

SUMMARY_INDICES = (1, 2, 5, 10, 100)
VALIDATE_K = 100
ORACLE_K = 30
CHECK_RHO = (0.5, 1.0, 5.0, 20.0, 50.0)

# validate tolerances
TOL_SPECTRUM = 1e-8  # relative, NSBF vs shooting
TOL_ALPHA = 1e-6
TOL_SERIES = 1e-6  # max(1, rho) |S_N - S|
TOL_BETA0 = 1e-8
TOL_WRONSKIAN = 5e-6
TOL_STAGE1 = 1e-2  # residual norm of the endpoint system
# the pipeline runs at N = 10; on Example 1 with 100 data its errors are
# ~7e-7 on the first DD roots and ~2e-5 on the first multipliers
TOL_DD = 1e-5  # relative, first DD roots vs shooting
TOL_BETA = 5e-4  # max(1, nu) |beta - S(nu, L)|
TOL_CLOSED = 1e-8


def fmt(x):
    """17 significant digits, the round-trip precision of a double."""
    return format(float(x), ".17g")


def _json(obj):
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"not serializable: {type(o).__name__}")

    return json.dumps(obj, indent=1, sort_keys=True, default=default) + "\n"


# ---------------------------------------------------------------------------
# inputs


def load_graph(spec, grid_points=DEFAULT_GRID_POINTS):
    """Graph from a JSON path or a built-in name."""
    if spec is None:
        raise SystemExit("error: --graph is required")
    path = Path(spec)
    if path.is_file():
        try:
            return StarGraph.load(path)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise SystemExit(f"error: cannot read graph file {spec}: {exc}") from None
    if spec in DEMO_GRAPHS:
        return make_demo_graph(spec, grid_points)
    raise SystemExit(f"error: {spec} is neither a file nor one of {sorted(DEMO_GRAPHS)}")


def load_lengths(spec, grid_points=DEFAULT_GRID_POINTS):
    """Edge lengths and, if known, the true potentials (else ``None``)."""
    path = Path(spec) if spec else None
    if path is not None and path.is_file():
        try:
            d = json.loads(path.read_text())
            lengths = np.array([float(e["length"]) for e in d["edges"]])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise SystemExit(f"error: cannot read graph file {spec}: {exc}") from None
        if all(len(e.get("potential_values", [])) for e in d["edges"]):
            return lengths, StarGraph.from_dict(d)
        return lengths, None
    graph = load_graph(spec, grid_points)
    return graph.lengths, graph


def load_spectral(path):
    if path is None:
        raise SystemExit("error: --spectral is required")
    try:
        return SpectralDataSet.load(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise SystemExit(f"error: cannot read spectral file {path}: {exc}") from None


def resolve_workers(value):
    if value is not None:
        w = value
    else:
        env = os.environ.get("STARGRAPH_ISP_WORKERS", "1")
        try:
            w = int(env)
        except ValueError:
            raise SystemExit(f"error: STARGRAPH_ISP_WORKERS={env!r} is not an integer") from None
    if w < 1:
        raise SystemExit("error: workers must be positive")
    return w


# ---------------------------------------------------------------------------
# emitters


def eigenvalue_csv(data):
    buf = io.StringIO()
    buf.write(",".join(["k", "lambda"] + [f"alpha_{i + 1}" for i in range(data.M)]) + "\n")
    for k, (lam, a) in enumerate(zip(data.lam, data.alpha), start=1):
        buf.write(",".join([str(k), fmt(lam)] + [fmt(v) for v in a]) + "\n")
    return buf.getvalue()


def read_eigenvalue_csv(text):
    """Inverse of :func:`eigenvalue_csv`."""
    rows = [r.split(",") for r in text.strip().splitlines()[1:]]
    lam = np.array([float(r[1]) for r in rows])
    alpha = np.array([[float(v) for v in r[2:]] for r in rows])
    return SpectralDataSet(lam, alpha)


def summary_lines(data):
    lines = []
    for k in SUMMARY_INDICES:
        if k <= data.K:
            lam = data.lam[k - 1]
            rho = math.copysign(math.sqrt(abs(lam)), lam)
            lines.append(f"lambda_{k} = {fmt(lam)}   rho_{k} = {fmt(rho)}")
    return lines


def potential_csv(rec, q_true=None):
    x = rec.q.grid.points
    q = rec.q.values
    buf = io.StringIO()
    if q_true is None:
        buf.write("x,q_recovered\n")
        for a, b in zip(x, q):
            buf.write(f"{fmt(a)},{fmt(b)}\n")
    else:
        qt = np.asarray(q_true(x), dtype=float)
        buf.write("x,q_true,q_recovered,abs_error\n")
        for a, t, b in zip(x, qt, q):
            buf.write(f"{fmt(a)},{fmt(t)},{fmt(b)},{fmt(abs(b - t))}\n")
    return buf.getvalue()


def read_potential_csv(text):
    """Columns of a recovered-potential CSV as a dict of arrays."""
    lines = text.strip().splitlines()
    names = lines[0].split(",")
    cols = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).T
    return dict(zip(names, cols))


def gnuplot_dat(potentials, truths):
    """One data block per edge (``index i`` in gnuplot), columns x, q_rec, q_true."""
    buf = io.StringIO()
    for i, rec in enumerate(potentials):
        buf.write(f"# edge {i + 1}: x q_recovered q_true\n")
        if rec is not None:
            x = rec.q.grid.points
            qt = truths[i](x) if truths is not None else np.full(x.size, np.nan)
            for a, b, c in zip(x, rec.q.values, qt):
                buf.write(f"{fmt(a)} {fmt(b)} {fmt(c)}\n")
        buf.write("\n\n")
    return buf.getvalue()


def gnuplot_script(M, with_truth, dat="recovered.dat"):
    cols = min(3, M)
    rows = math.ceil(M / cols)
    out = [
        "# gnuplot script: recovered potentials, one panel per edge",
        f"set terminal pngcairo size {400 * cols},{300 * rows}",
        "set output 'recovered.png'",
        f"set multiplot layout {rows},{cols}",
        "set key top right",
    ]
    for i in range(M):
        out.append(f"set title 'edge {i + 1}'")
        plot = f"plot '{dat}' index {i} using 1:2 with points pt 7 ps 0.4 title 'recovered'"
        if with_truth:
            plot += f", '' index {i} using 1:3 with lines lw 2 title 'true'"
        out.append(plot)
    out.append("unset multiplot")
    return "\n".join(out) + "\n"


def write_outputs(out_dir, files):
    """Write every file at once, after all computation finished."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


# ---------------------------------------------------------------------------
# commands


def cmd_direct(args):
    graph = load_graph(args.graph, args.grid)
    K = args.K or 100
    N = args.N if args.N is not None else DIRECT_N
    t0 = time.perf_counter()
    data = generate_spectral_data(graph, K, N, workers=resolve_workers(args.workers))
    log.info("direct problem: %d eigenvalues in %.1f s", K, time.perf_counter() - t0)
    files = {
        "spectral.json": _json(data.to_dict()),
        "eigenvalues.csv": eigenvalue_csv(data),
    }
    if args.out:
        write_outputs(args.out, files)
    for line in summary_lines(data):
        print(line)
    return 0, data


def _inverse_config(args):
    kw = {"workers": resolve_workers(args.workers)}
    for name in ("N", "Nc", "KD", "KN", "xm"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = v
    Nc = kw.get("Nc", InverseConfig.Nc)
    KN = kw.get("KN", InverseConfig.KN)
    if KN < 2 * (Nc + 1):
        warnings.warn(f"KN={KN} < 2(Nc+1)={2 * (Nc + 1)}: interior systems are underdetermined",
                      stacklevel=2)
    try:
        return InverseConfig(**kw)
    except ValueError as exc:
        raise SystemExit(f"error: {exc}") from None


def inverse_files(data, lengths, graph, config):
    t0 = time.perf_counter()
    result = run_inverse_pipeline(data, lengths, config)
    elapsed = time.perf_counter() - t0
    truths = [e.potential for e in graph.edges] if graph is not None else None
    files = {}
    summary = []
    for i, rec in enumerate(result.potentials):
        if rec is None:
            summary.append(f"edge {i + 1}: FAILED ({result.diagnostics['errors'][str(i + 1)]})")
            continue
        qt = truths[i] if truths else None
        files[f"edge_{i + 1}.csv"] = potential_csv(rec, qt)
        line = f"edge {i + 1}: s0/tau0 disagreement {rec.disagreement:.3e}"
        if qt is not None:
            line += f", max abs error {float(np.max(rec.error(qt))):.3e}"
        summary.append(line)
    diag = dict(result.diagnostics)
    files["diagnostics.json"] = _json(diag)
    files["recovered.dat"] = gnuplot_dat(result.potentials, truths)
    files["plot.gp"] = gnuplot_script(len(lengths), truths is not None)
    log.info("inverse problem: %d edges in %.1f s", len(lengths), elapsed)
    return files, summary, result


def cmd_inverse(args):
    data = load_spectral(args.spectral)
    if args.K:
        data = data.head(args.K)
    lengths, graph = load_lengths(args.graph, args.grid)
    files, summary, result = inverse_files(data, lengths, graph, _inverse_config(args))
    if args.out:
        write_outputs(args.out, files)
    for line in summary:
        print(line)
    return (1 if result.diagnostics["errors"] else 0), result


def cmd_demo(args):
    name = args.name
    if name not in DEMO_GRAPHS:
        raise SystemExit(f"error: unknown demo {name!r}; choose from {sorted(DEMO_GRAPHS)}")
    graph = make_demo_graph(name, args.grid)
    K = args.K or (200 if name == "example2" else 100)
    data = generate_spectral_data(graph, K, DIRECT_N, workers=resolve_workers(args.workers))
    files = {
        "graph.json": _json(graph.to_dict()),
        "spectral.json": _json(data.to_dict()),
        "eigenvalues.csv": eigenvalue_csv(data),
    }
    print(f"{name}: {graph.M} edges, {K} eigenvalues")
    for line in summary_lines(data):
        print(line)
    inv, summary, result = inverse_files(data, graph.lengths, graph, _inverse_config(args))
    files.update(inv)
    if args.out:
        write_outputs(args.out, files)
    for line in summary:
        print(line)
    return (1 if result.diagnostics["errors"] else 0), result


# ---------------------------------------------------------------------------
# validation


def _check(name, value, tol):
    value = float(value)
    return {"check": name, "value": value, "tolerance": tol,
            "margin": tol - value if math.isfinite(value) else -math.inf,
            "passed": bool(value <= tol)}


def series_checks(graph, N=DIRECT_N):
    """NSBF tables against the shooting oracle, edge by edge."""
    out = []
    rho = np.array(CHECK_RHO)
    for i, e in enumerate(graph.edges, start=1):
        q = e.potential
        tb = compute_coefficients(q, N)
        x = tb.grid.points
        phi0 = shoot(q, 0.0, init="neumann", trace=True).trace
        S0 = shoot(q, 0.0, init="dirichlet", trace=True).trace
        d_g = np.max(np.abs(tb.g[0] - (phi0 - 1.0)))
        d_s = np.max(np.abs(tb.s[0][1:] - 3.0 * (S0[1:] / x[1:] - 1.0)))
        out.append(_check(f"edge{i}.beta0_g", d_g, TOL_BETA0))
        out.append(_check(f"edge{i}.beta0_s", d_s, TOL_BETA0))
        ref = shoot(q, rho, init="dirichlet", trace=True).trace
        dS = max(np.max(np.abs(eval_S_N(tb, r, x) - ref[j])) * max(1.0, r)
                 for j, r in enumerate(rho))
        out.append(_check(f"edge{i}.S_N_vs_oracle", dS, TOL_SERIES))
        W = max(np.max(np.abs(eval_phi_N(tb, r, x) * eval_S_prime_N(tb, r, x)
                              - eval_phi_prime_N(tb, r, x) * eval_S_N(tb, r, x) - 1.0))
                for r in rho)
        out.append(_check(f"edge{i}.wronskian", W, TOL_WRONSKIAN))
    return out


def spectrum_checks(graph, K, N=DIRECT_N, workers=1):
    """Spectral data of ``K`` eigenvalues; the first ``ORACLE_K`` are checked by shooting."""
    data = generate_spectral_data(graph, K, N, workers=workers)
    n = min(K, ORACLE_K)
    t = data.t[:n]
    t_ref = oracle_graph_spectrum(graph, n)
    out = [_check("spectrum_vs_oracle", np.max(np.abs(t - t_ref) / np.maximum(np.abs(t_ref), 1.0)),
                  TOL_SPECTRUM)]
    if not data.degenerate:
        a_ref = oracle_norming_vectors(graph, t_ref)
        out.append(_check("norming_vectors_vs_oracle", np.max(np.abs(data.alpha[:n] - a_ref)),
                          TOL_ALPHA))
    return out, data


def pipeline_checks(data, graph, config=None, count=10):
    """Stage-1 residual, DD roots, interlacing and multipliers against the oracle."""
    cfg = config or InverseConfig()
    out = []
    L = graph.lengths
    s_end, info = solve_endpoint_s(data, L, cfg.N)
    out.append(_check("stage1_residual", info["residual"], TOL_STAGE1))
    out.append(_check("stage1_rank_deficit", info["shape"][1] - info["rank"], 0))
    mus, omegas = [], []
    for i, e in enumerate(graph.edges):
        mu = compute_dd_spectrum(s_end[i], L[i], cfg.KD)
        mus.append(mu)
        omegas.append(estimate_omega(mu, L[i]))
    sigma_end, _ = solve_endpoint_sigma(data, L, np.array(omegas), cfg.N)
    for i, e in enumerate(graph.edges, start=1):
        mu = mus[i - 1]
        ref = oracle_spectrum(e.potential, "DD", count)
        out.append(_check(f"edge{i}.dd_vs_oracle", np.max(np.abs(mu[:count] - ref) / ref), TOL_DD))
        nu = compute_dn_spectrum(sigma_end[i - 1], omegas[i - 1], L[i - 1], cfg.KD)
        n = min(mu.size, nu.size)
        interlaced = bool(np.all(nu[:n] < mu[:n]) and np.all(mu[:n - 1] < nu[1:n]))
        out.append(_check(f"edge{i}.interlacing_violations", 0.0 if interlaced else 1.0, 0))
        beta = compute_multipliers(s_end[i - 1], nu[:count], L[i - 1])
        beta_ref = shoot(e.potential, nu[:count], init="dirichlet").y
        out.append(_check(f"edge{i}.beta_vs_oracle",
                          np.max(np.abs(beta - beta_ref) * np.maximum(1.0, nu[:count])), TOL_BETA))
    return out


def closed_form_checks(N=10):
    """q = 1 on [0, 1]: ``S = sin(k x)/k`` with ``k^2 = rho^2 - 1``, DD roots ``(pi n)^2 + 1``."""
    grid = Grid.uniform(1.0, DEFAULT_GRID_POINTS)
    q = SampledFunction(grid, np.ones(len(grid)))
    tb = compute_coefficients(q, N)
    x = grid.points
    dS = 0.0
    for r in CHECK_RHO:
        k = np.sqrt(complex(r * r - 1.0))
        exact = x if k == 0 else np.real(np.sin(k * x) / k)
        dS = max(dS, float(np.max(np.abs(eval_S_N(tb, r, x) - exact))))
    mu = compute_dd_spectrum(tb.s_end, 1.0, 10)
    exact_mu = np.sqrt((np.pi * np.arange(1, 11)) ** 2 + 1.0)
    return [
        _check("q1.S_N_closed_form", dS, TOL_CLOSED),
        _check("q1.omega", abs(tb.omega - 0.5), TOL_CLOSED),
        _check("q1.dd_closed_form", np.max(np.abs(mu - exact_mu)), TOL_CLOSED),
    ]


def cmd_validate(args):
    graph = load_graph(args.graph, args.grid)
    K = args.K or VALIDATE_K
    checks = closed_form_checks()
    checks += series_checks(graph)
    spec_checks, generated = spectrum_checks(graph, K, workers=resolve_workers(args.workers))
    checks += spec_checks
    data = load_spectral(args.spectral) if args.spectral else generated
    if data.M != graph.M:
        raise SystemExit(f"error: spectral data have M={data.M}, graph has {graph.M} edges")
    cfg = _inverse_config(args)
    if data.K > cfg.N:
        checks += pipeline_checks(data, graph, cfg)
    else:
        log.warning("only %d spectral data; pipeline checks skipped", data.K)
    passed = all(c["passed"] for c in checks)
    report = {"graph": args.graph, "K": K, "passed": passed, "checks": checks}
    if args.out:
        write_outputs(args.out, {"report.json": _json(report)})
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']:<32} "
              f"{c['value']:.3e} <= {c['tolerance']:.1e}")
    print("PASS" if passed else "FAIL")
    return (0 if passed else 1), report


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="stargraph-isp",
                                description="Direct and inverse spectral problems on star graphs.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--graph", help="graph JSON file or built-in name")
        sp.add_argument("--spectral", help="spectral data JSON file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--K", type=int, help="number of eigenvalues")
        sp.add_argument("--N", type=int, help=f"series truncation (direct: {DIRECT_N}, inverse: 10)")
        sp.add_argument("--Nc", type=int, help="interior truncation")
        sp.add_argument("--KD", type=int, help="Dirichlet-Dirichlet roots per edge")
        sp.add_argument("--KN", type=int, help="Dirichlet-Neumann roots per edge")
        sp.add_argument("--grid", type=int, default=DEFAULT_GRID_POINTS,
                        help="grid points of built-in potentials")
        sp.add_argument("--xm", type=int, help="interior recovery points per edge")
        sp.add_argument("--workers", type=int, help="threads (default $STARGRAPH_ISP_WORKERS or 1)")
        return sp

    common(sub.add_parser("direct", help="eigenvalues and norming vectors of a graph"))
    common(sub.add_parser("inverse", help="recover potentials from spectral data"))
    common(sub.add_parser("validate", help="oracle cross-checks and invariants"))
    demo = common(sub.add_parser("demo", help="direct then inverse on a built-in graph"))
    demo.add_argument("name", nargs="?", default="example1", choices=sorted(DEMO_GRAPHS))
    return p


COMMANDS = {"direct": cmd_direct, "inverse": cmd_inverse, "validate": cmd_validate, "demo": cmd_demo}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    for name in ("K", "N", "Nc", "KD", "KN", "grid", "xm"):
        v = getattr(args, name)
        if v is not None and v < (0 if name in ("N", "Nc") else 1):
            raise SystemExit(f"error: --{name} must be positive")
    code, _ = COMMANDS[args.command](args)
    return code


if __name__ == "__main__":
    sys.exit(main())
