"""Command-line front end: exact values, bounds, simulations, figure CSVs.

Exit codes: 0 success, 1 usage error, 2 runtime/cap error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import bounds, markov, sim
from .policy import CoverageSearchError

DEFAULT_TRIALS = 100_000
DEFAULT_SEED = 0
DEFAULT_FIG2_KMAX = 32

FIGURES = ("fig1a", "fig1b", "fig1c", "fig2")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _check_k(k: int, upper: int = 63) -> int:
    if not 2 <= k <= upper:
        raise UsageError(f"k must be in [2, {upper}], got {k} (single-packet runs are trivial)")
    return k


def _check_p(p: float) -> float:
    if not 0.0 <= p < 1.0:
        raise UsageError(f"loss probability must satisfy 0 <= p < 1, got {p}")
    return p


def _default_p_grid() -> list[float]:
    return [round(0.05 * i, 2) for i in range(19)]  # 0.00 .. 0.90


def _parse_p_grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad p-grid: {exc}") from exc
    if not grid:
        raise UsageError("empty p-grid")
    for p in grid:
        _check_p(p)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("p-grid must be strictly increasing")
    return grid


def cmd_exact(args, out) -> int:
    k = _check_k(args.k, upper=3)
    p = _check_p(args.p)
    chain = markov.build_chain(k)
    e_tx = markov.expected_absorption_time(chain, p)
    rt = bounds.retransmission_ratio(e_tx, k)
    payload = {"command": "exact", "k": k, "p": p, "e_tx": e_tx, "rt": rt}
    if args.oracle:
        fine = markov.absorption_time_fine(markov.build_fine_chain(k), p)
        payload["fine"] = fine
        payload["diff"] = abs(e_tx - fine)
    if args.json:
        out.write(json.dumps(payload) + "\n")
        return EXIT_OK
    out.write(f"k={k} p={p:g}\n")
    out.write(f"E[t_x]={e_tx:.6f}\n")
    out.write(f"R_t={rt:.6f}\n")
    if args.oracle:
        out.write(f"fine={payload['fine']:.6f}\n")
        out.write(f"diff={payload['diff']:.6e}\n")
    return EXIT_OK


def cmd_bound(args, out) -> int:
    k = _check_k(args.k)
    p = _check_p(args.p)
    query = bounds.BoundQuery(k=k, p=p)
    ell = bounds.expected_ell(query)
    mds = bounds.mds_expected(query)
    delta = bounds.expected_delta(p)
    rt_ell = bounds.retransmission_ratio(ell, k)
    rt_mds = bounds.retransmission_ratio(mds, k)
    payload = {"command": "bound", "k": k, "p": p, "e_ell": ell, "e_delta": delta,
               "mds": mds, "rt_ell": rt_ell, "rt_mds": rt_mds,
               "rt_gap": rt_ell - rt_mds}
    if args.json:
        out.write(json.dumps(payload) + "\n")
        return EXIT_OK
    out.write(f"k={k} p={p:g}\n")
    out.write(f"E[l]={ell:.6f}\n")
    out.write(f"E[delta]={delta:.6f}\n")
    out.write(f"MDS={mds:.6f}\n")
    out.write(f"R_t upper={rt_ell:.6f}\n")
    out.write(f"R_t mds={rt_mds:.6f}\n")
    out.write(f"R_t gap={rt_ell - rt_mds:.6f}\n")
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    k = _check_k(args.k)
    p = _check_p(args.p)
    if args.trials < 1:
        raise UsageError(f"trials must be >= 1, got {args.trials}")
    if args.max_tx < 1:
        raise UsageError(f"max-tx must be >= 1, got {args.max_tx}")
    config = sim.ExperimentConfig(
        k=k, p=p, policy=args.policy, trials=args.trials,
        master_seed=args.seed, max_tx_per_trial=args.max_tx,
        rl_include_zero=args.include_zero,
    )
    result = sim.run_experiment(config)
    payload = {"command": "simulate", "policy": args.policy, "k": k, "p": p,
               "trials": args.trials, "seed": args.seed,
               "mean": result.mean_tx, "stderr": result.stderr, "rt": result.rt}
    if args.json:
        out.write(json.dumps(payload) + "\n")
        return EXIT_OK
    out.write(f"policy={args.policy} k={k} p={p:g} trials={args.trials} seed={args.seed}\n")
    out.write(f"mean={result.mean_tx:.6f}\n")
    out.write(f"stderr={result.stderr:.6f}\n")
    out.write(f"R_t={result.rt:.6f}\n")
    return EXIT_OK


FIGURE_SERIES = {
    "fig1a": ("exact_xor", "mds", "rl_sim", "rl_sim_stderr"),
    "fig1b": ("exact_xor", "mds", "rl_sim", "rl_sim_stderr"),
    "fig1c": ("exact_minus_mds_rt",),
    "fig2": ("bound_ell", "mds", "rl_sim", "rl_sim_stderr"),
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: which curves, over which loss probabilities."""

    figure_id: str
    p_grid: tuple[float, ...]
    series: tuple[str, ...]

    def __post_init__(self):
        if self.figure_id not in FIGURES:
            raise UsageError(f"figure must be one of {FIGURES}, got {self.figure_id!r}")
        for p in self.p_grid:
            _check_p(p)
        if any(b <= a for a, b in zip(self.p_grid, self.p_grid[1:])):
            raise UsageError("p-grid must be strictly increasing")

    @classmethod
    def build(cls, figure_id: str, p_grid=None) -> "FigureSpec":
        grid = tuple(p_grid) if p_grid is not None else tuple(_default_p_grid())
        return cls(figure_id, grid, FIGURE_SERIES.get(figure_id, ()))


def _rl_point(k: int, p: float, trials: int, seed: int) -> tuple[float, float]:
    config = sim.ExperimentConfig(k=k, p=p, policy="rl", trials=trials, master_seed=seed)
    result = sim.run_experiment(config)
    return result.rt, result.stderr / k


def _point_rows(spec: FigureSpec, k: int, p: float, trials: int,
                seed: int) -> list[tuple[str, int, float, str, float]]:
    values = {}
    if "exact_xor" in spec.series or "exact_minus_mds_rt" in spec.series:
        values["exact_xor"] = markov.expected_absorption_time(markov.build_chain(k), p) / k
    if "mds" in spec.series or "exact_minus_mds_rt" in spec.series:
        values["mds"] = bounds.mds_expected(bounds.BoundQuery(k=k, p=p)) / k
    if "bound_ell" in spec.series:
        values["bound_ell"] = bounds.expected_ell(bounds.BoundQuery(k=k, p=p)) / k
    if "rl_sim" in spec.series:
        values["rl_sim"], values["rl_sim_stderr"] = _rl_point(k, p, trials, seed)
    if "exact_minus_mds_rt" in spec.series:
        values["exact_minus_mds_rt"] = values["exact_xor"] - values["mds"]
    return [(spec.figure_id, k, p, metric, values[metric]) for metric in spec.series]


def figure_rows(spec: FigureSpec, trials: int, seed: int,
                k_max: int) -> list[tuple[str, int, float, str, float]]:
    """Rows (figure, k, p, metric, value); all transmission metrics in R_t units.

    Points are independent and may be computed in parallel; the final ordering
    is fixed by sorting, so the output does not depend on the dispatch.
    """
    if spec.figure_id == "fig1a":
        points = [(2, p) for p in spec.p_grid]
    elif spec.figure_id == "fig1b":
        points = [(3, p) for p in spec.p_grid]
    elif spec.figure_id == "fig1c":
        points = [(k, p) for k in (2, 3) for p in spec.p_grid]
    else:
        points = [(k, p) for p in (0.25, 0.5) for k in range(2, k_max + 1)]

    threads = min(sim._thread_count(), len(points))
    if threads > 1:
        # build the chains up front; the cache is then read-only across threads
        for k in {k for k, _ in points if k <= 3}:
            markov.build_chain(k)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = pool.map(lambda kp: _point_rows(spec, *kp, trials, seed), points)
            rows = [row for chunk in chunks for row in chunk]
    else:
        rows = [row for kp in points for row in _point_rows(spec, *kp, trials, seed)]
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    return rows


def cmd_figure(args, out) -> int:
    if args.trials < 1:
        raise UsageError(f"trials must be >= 1, got {args.trials}")
    k_max = _check_k(args.k_max)
    p_grid = _parse_p_grid(args.p_grid) if args.p_grid else None
    spec = FigureSpec.build(args.which, p_grid)
    rows = figure_rows(spec, args.trials, args.seed, k_max)

    if args.json:
        text = json.dumps([
            {"figure": f, "k": k, "p": p, "metric": m, "value": round(v, 6)}
            for f, k, p, m, v in rows
        ]) + "\n"
    else:
        lines = ["figure,k,p,metric,value"]
        lines += [f"{f},{k},{p:g},{m},{v:.6f}" for f, k, p, m, v in rows]
        text = "\n".join(lines) + "\n"

    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
    else:
        out.write(text)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="xorcast",
                     description="Transmission counts for XOR-coded multicast to 3 clients")
    sub = parser.add_subparsers(dest="command", required=True)

    p_exact = sub.add_parser("exact", help="exact expected transmissions (k=2 or 3)")
    p_exact.add_argument("--k", type=int, required=True)
    p_exact.add_argument("--p", type=float, required=True)
    p_exact.add_argument("--oracle", action="store_true",
                         help="also solve the joint-state chain and print the difference")
    p_exact.add_argument("--json", action="store_true")
    p_exact.set_defaults(func=cmd_exact)

    p_bound = sub.add_parser("bound", help="closed-form upper bound and MDS baseline")
    p_bound.add_argument("--k", type=int, required=True)
    p_bound.add_argument("--p", type=float, required=True)
    p_bound.add_argument("--json", action="store_true")
    p_bound.set_defaults(func=cmd_bound)

    p_sim = sub.add_parser("simulate", help="Monte Carlo estimate under a policy")
    p_sim.add_argument("--policy", choices=sorted(sim.POLICIES), required=True)
    p_sim.add_argument("--k", type=int, required=True)
    p_sim.add_argument("--p", type=float, required=True)
    p_sim.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p_sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_sim.add_argument("--max-tx", type=int, default=1_000_000,
                       help="per-trial transmission cap")
    p_sim.add_argument("--include-zero", action="store_true",
                       help="let the random-linear policy draw the zero vector")
    p_sim.add_argument("--json", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_fig = sub.add_parser("figure", help="CSV data behind the summary figures")
    p_fig.add_argument("--which", required=True)
    p_fig.add_argument("--out", default=None, help="output path (default: stdout)")
    p_fig.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p_fig.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_fig.add_argument("--p-grid", default=None,
                       help="comma-separated loss probabilities (default 0.00..0.90 step 0.05)")
    p_fig.add_argument("--k-max", type=int, default=DEFAULT_FIG2_KMAX,
                       help="largest packet count for the batch-size sweep")
    p_fig.add_argument("--json", action="store_true")
    p_fig.set_defaults(func=cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, sys.stdout)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except sim.TransmissionCapError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (markov.SolverError, CoverageSearchError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
