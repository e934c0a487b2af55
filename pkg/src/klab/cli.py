"""Command-line front end: ``klab <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import KlabError, NumericalError, ValidationError
from .graph import Graph, all_pairs_distances, graph_to_json, read_graph
from .local_law import (
    SpectrumBundle,
    SweepRecord,
    delocalization_stats,
    domain_grid,
    empirical_stieltjes,
    km_histogram,
    km_ks_distance,
    km_sample,
    local_law_error,
    r_star,
    records_to_jsonl,
    spectrum,
)
from .dense import SpectralPoint
from .nbw import verify_nbw_bound
from .sampler import (
    EnlargedSample,
    apply_resampling,
    enumerate_regular,
    involution,
    propose_resampling,
    sample_regular,
)
from .tree_green import m_d

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
ENUMERATION_LIMIT = 7


def _header(args) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    return {"tool": "klab", "version": __version__, "command": args.command, "config": config}


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_graph(args) -> Graph:
    if getattr(args, "graph", None):
        G = read_graph(args.graph)
        if args.d is None:
            args.d = G.d
        return G
    if args.n is None or args.d is None:
        raise ValidationError("give --graph or both --n and --d")
    return sample_regular(args.n, args.d, np.random.default_rng(args.seed))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    G = sample_regular(args.n, args.d, np.random.default_rng(args.seed))
    text = graph_to_json(G, meta=_header(args))
    if args.out:
        _emit(text, args.out)
        print(f"edges: {G.num_edges}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _grid_points(args):
    if args.eta is not None or args.re is not None:
        return [SpectralPoint(complex(args.re or 0.0, args.eta if args.eta is not None else 0.1))]
    floor = args.eta_floor if args.eta_floor is not None else "desk"
    grid = domain_grid(args.n_eff, args.alpha, args.d, resolution=(args.grid_re, args.grid_eta), eta_floor=floor)
    return list(grid.points)


def cmd_localcheck(args) -> int:
    G = _load_graph(args)
    args.n_eff = G.n
    d = args.d
    r = args.r if args.r is not None else r_star(G.n, args.alpha, d)
    points = _grid_points(args)
    D = all_pairs_distances(G)

    def work(k):
        z = points[k]
        t0 = time.perf_counter()
        rep = local_law_error(G, z, d, r, pair_budget=args.pairs, rng=[args.seed or 0, k],
                              near_budget=args.near_pairs, distances=D)
        value = rep.to_dict()
        value.pop("tree_diag_errors")
        wall = time.perf_counter() - t0 if args.timing else None
        return SweepRecord(args.seed, G.n, d, (z.z.real, z.z.imag), "local_law", value, r, args.alpha, wall)

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        records = list(pool.map(work, range(len(points))))
    worst = max(records, key=lambda rec: rec.value["max"])
    summary = SweepRecord(args.seed, G.n, d, worst.z, "local_law_summary",
                          {"max_over_grid": worst.value["max"],
                           "max_m_diff": max(rec.value["m_diff"] for rec in records),
                           "points": len(records)}, r, args.alpha)
    _emit(records_to_jsonl(records + [summary], header=_header(args)), args.out)
    return EXIT_OK


def cmd_switchtest(args) -> int:
    from scipy.stats import chisquare

    rng = np.random.default_rng(args.seed)
    passes = regular_ok = 0
    hist = Counter()
    for _ in range(args.trials):
        G = sample_regular(args.n, args.d, rng)
        S = propose_resampling(G, 0, args.ell, rng)
        x = EnlargedSample(G, S)
        y = involution(x)
        regular_ok += int(y.graph.is_regular(args.d))
        passes += int(involution(y) == x)
        hist[len(S.admissible)] += 1
    result = {
        "header": _header(args),
        "trials": args.trials,
        "involution_passes": passes,
        "regularity_passes": regular_ok,
        "admissible_histogram": {str(k): hist[k] for k in sorted(hist)},
    }
    if args.n <= ENUMERATION_LIMIT and args.samples > 0:
        graphs = enumerate_regular(args.n, args.d)
        index = {g.edges.tobytes(): k for k, g in enumerate(graphs)}
        direct = np.zeros(len(graphs))
        composite = np.zeros(len(graphs))
        for _ in range(args.samples):
            G = sample_regular(args.n, args.d, rng)
            direct[index[G.edges.tobytes()]] += 1
            S = propose_resampling(G, 0, args.ell, rng)
            composite[index[apply_resampling(G, S, check=False).edges.tobytes()]] += 1
        result["labelled_graphs"] = len(graphs)
        result["chi2_p_direct"] = float(chisquare(direct).pvalue)
        result["chi2_p_composite"] = float(chisquare(composite).pvalue)
    _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_density(args) -> int:
    if args.iid:
        if args.n is None or args.d is None:
            raise ValidationError("--iid needs --n and --d")
        S = SpectrumBundle.synthetic(km_sample(args.n, args.d, np.random.default_rng(args.seed)), args.d)
    else:
        G = _load_graph(args)
        S = spectrum(G, args.d, vectors=False)
    centers, emp, rho = km_histogram(S, args.d, args.bins)
    ks = km_ks_distance(S, args.d)
    lines = ["# " + json.dumps(_header(args), sort_keys=True), "bin_center,empirical,rho_d"]
    lines += [f"{c:.10g},{e:.10g},{p:.10g}" for c, e, p in zip(centers, emp, rho)]
    _emit("\n".join(lines) + "\n", args.out)
    print(f"KS: {ks:.6g}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    G = _load_graph(args)
    S = spectrum(G, args.d, vectors=True)
    deloc = delocalization_stats(S, args.bulk_margin)
    out = {
        "header": _header(args),
        "n": S.n,
        "d": S.d,
        "eigenvalues": S.eigenvalues.tolist(),
        "ks": km_ks_distance(S, args.d),
        "max_sup_norm_scaled": deloc.max_sup_norm_scaled,
        "n_bulk": deloc.n_bulk,
    }
    if args.eta is not None:
        z = SpectralPoint(complex(args.re or 0.0, args.eta))
        m = empirical_stieltjes(S, z)
        md = m_d(z, args.d)
        out["m"] = [m.real, m.imag]
        out["m_diff"] = abs(m - md)
    _emit(json.dumps(out, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_nbwcheck(args) -> int:
    G = _load_graph(args)
    rng = np.random.default_rng([args.seed or 0, 7])
    D = all_pairs_distances(G)
    checked = violations = 0
    worst = 0.0
    for _ in range(args.pairs):
        i, j = (int(x) for x in rng.integers(0, G.n, 2))
        if D[i, j] < 0 or D[i, j] > args.max_dist:
            continue
        for k in range(1, args.k + 1):
            chk = verify_nbw_bound(G, i, j, k)
            checked += 1
            violations += int(not chk.holds)
            worst = max(worst, chk.count / chk.bound)
    out = {"header": _header(args), "checked": checked, "violations": violations, "max_count_over_bound": worst}
    _emit(json.dumps(out, sort_keys=True) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p, graph=True):
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    if graph:
        p.add_argument("--graph", help="read the graph from a JSON file instead of sampling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="klab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"klab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a random regular graph")
    _common(p, graph=False)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("localcheck", help="local-law error over the spectral domain")
    _common(p)
    p.add_argument("--alpha", type=float, default=4.5)
    p.add_argument("--r", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--re", type=float)
    p.add_argument("--eta-floor", type=float, dest="eta_floor")
    p.add_argument("--grid-re", type=int, default=9, dest="grid_re")
    p.add_argument("--grid-eta", type=int, default=3, dest="grid_eta")
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--near-pairs", type=int, default=200, dest="near_pairs")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--timing", action="store_true", help="record wall time (output no longer byte-stable)")
    p.set_defaults(func=cmd_localcheck)

    p = sub.add_parser("switchtest", help="involution and uniformity diagnostics for resampling")
    _common(p, graph=False)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--samples", type=int, default=100_000, help="chi-square samples (small n only)")
    p.set_defaults(func=cmd_switchtest)

    p = sub.add_parser("density", help="eigenvalue histogram against the Kesten-McKay density")
    _common(p)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--iid", action="store_true", help="use i.i.d. Kesten-McKay draws instead of a graph")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("spectrum", help="eigenvalues, KS distance and delocalization summary")
    _common(p)
    p.add_argument("--eta", type=float)
    p.add_argument("--re", type=float)
    p.add_argument("--bulk-margin", type=float, default=0.1, dest="bulk_margin")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("nbwcheck", help="check non-backtracking walk count bounds")
    _common(p)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--max-dist", type=int, default=4, dest="max_dist")
    p.set_defaults(func=cmd_nbwcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"klab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KlabError, ValueError, OSError) as exc:
        print(f"klab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
