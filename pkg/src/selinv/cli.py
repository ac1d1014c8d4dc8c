"""Selected entries of the inverse of a sparse matrix, from the command line.

Exit codes: 0 success, 2 bad input or arguments, 3 singular matrix,
4 verification failure, 5 sequential/simulated mismatch.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from dataclasses import dataclass

import numpy as np

from .dist import ProcGrid, distribute, gather, parallel_selinv, schedule_priorities
from .inverse import diag_step_crosscheck, extract_selected, selected_inversion
from .numeric import SingularPivotError, normalize
from .pipeline import factor
from .sparse import MatrixMarketError, mm_read, mm_write
from .symbolic import RelaxParams
from .verify import (SingularMatrixError, compare_selected, dense_invert, factor_residual,
                     max_block_deviation, trace_identity_check)

EXIT_OK, EXIT_PARSE, EXIT_SINGULAR, EXIT_VERIFY, EXIT_EQUIV = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    matrix: str
    ordering: str = "mindeg"
    relax: RelaxParams = RelaxParams()
    grid: ProcGrid = ProcGrid(1, 1)
    seed: int = 0
    scalar: str = "auto"
    json: bool = False

    @classmethod
    def from_args(cls, ns) -> "RunConfig":
        if not ns.matrix:
            raise ValueError("--matrix is required")
        return cls(ns.matrix, ns.ordering, RelaxParams(ns.relax_max, ns.relax_pad),
                   ProcGrid.parse(ns.grid), ns.seed, ns.scalar, ns.json)


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _emit(cfg: RunConfig, summary: dict, out=None):
    out = out or sys.stdout
    if cfg.json:
        out.write(json.dumps(summary, default=_jsonable, sort_keys=False) + "\n")
    else:
        for k, v in summary.items():
            out.write(f"{k}={_fmt(v)}\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(type(v))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6e}"
    if isinstance(v, bool):
        return str(v).lower()
    return str(v)


def _load(cfg: RunConfig):
    try:
        a = mm_read(cfg.matrix)
    except OSError as exc:
        raise _Failure(EXIT_PARSE, f"cannot read {cfg.matrix}: {exc.strerror or exc}") from None
    if a.n_rows != a.n_cols:
        raise _Failure(EXIT_PARSE, f"matrix must be square, got {a.n_rows}x{a.n_cols}")
    if cfg.scalar == "real":
        if a.values.dtype.kind == "c":
            raise _Failure(EXIT_PARSE, "--scalar real given for a complex matrix")
        a = a.astype(np.float64)
    elif cfg.scalar == "complex":
        a = a.astype(np.complex128)
    return a


def _factor(cfg: RunConfig, a, ns):
    return factor(a, ordering=cfg.ordering, relax=cfg.relax,
                  perturb_pivots=getattr(ns, "perturb_pivots", False),
                  pivot_threshold=getattr(ns, "pivot_threshold", None))


def _base_summary(a, an, fac) -> dict:
    return {"n": a.n_rows, "nnz_A": a.nnz, "nnz_LU": an.nnz_lu,
            "nnz_LU_stored": an.nnz_lu_stored, "supernodes": an.partition.count,
            "etree_depth": int(an.etree.depth.max(initial=-1)) + 1,
            "factor_flops": fac.flops.factor_flops}


def cmd_factor(cfg: RunConfig, ns) -> int:
    a = _load(cfg)
    an, fac = _factor(cfg, a, ns)
    summary = _base_summary(a, an, fac)
    summary["perturbed_pivots"] = len(fac.perturbations)
    if a.n_rows <= ns.oracle_cap:
        summary["factor_residual"] = factor_residual(fac, an.a_perm)
    _emit(cfg, summary)
    return EXIT_OK


def _selinv(cfg, a, ns, diag_formula="row", debug=False):
    an, fac = _factor(cfg, a, ns)
    summary = _base_summary(a, an, fac)
    summary["perturbed_pivots"] = len(fac.perturbations)
    normalize(fac)
    selected_inversion(fac, diag_formula=diag_formula, debug=debug)
    summary["selinv_flops"] = fac.flops.selinv_flops
    summary["flop_ratio"] = fac.flops.ratio
    return an, fac, extract_selected(fac, a), summary


def cmd_selinv(cfg: RunConfig, ns) -> int:
    a = _load(cfg)
    an, fac, sel, summary = _selinv(cfg, a, ns, debug=ns.check_diag_formula)
    if ns.trace_check:
        summary["trace_deviation"] = trace_identity_check(a, sel)
    if ns.check_diag_formula:
        summary["diag_formula_gap"] = max(
            (diag_step_crosscheck(fac, k) for k in range(an.partition.count)), default=0.0)
    summary["selected_entries"] = len(sel)
    if ns.output:
        mm_write(sel.to_csc(), ns.output, comment="selected entries of the inverse")
        summary["output"] = ns.output
    _emit(cfg, summary)
    if ns.trace_check and summary["trace_deviation"] > ns.tol:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify(cfg: RunConfig, ns) -> int:
    a = _load(cfg)
    _, _, sel, summary = _selinv(cfg, a, ns)
    try:
        oracle = dense_invert(a, cap=ns.oracle_cap)
    except SingularMatrixError as exc:
        raise _Failure(EXIT_SINGULAR, str(exc)) from None
    except ValueError as exc:
        raise _Failure(EXIT_PARSE, str(exc)) from None
    rep = compare_selected(sel, oracle, tol=ns.tol)
    summary.update({"oracle_residual": oracle.residual, **rep.to_dict(),
                    "trace_deviation": trace_identity_check(a, sel)})
    _emit(cfg, summary)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_simulate(cfg: RunConfig, ns) -> int:
    a = _load(cfg)
    an, fac = _factor(cfg, a, ns)
    normalize(fac)
    pm = distribute(fac, cfg.grid)
    out, stats = parallel_selinv(pm, schedule_priorities(an.etree), cfg.seed,
                                 naive=ns.naive_collectives, shuffle_ties=ns.shuffle_ties,
                                 threads=ns.threads)
    result = gather(out, fac)
    summary = {"n": a.n_rows, "grid": str(cfg.grid), "seed": cfg.seed,
               "supernodes": an.partition.count, "messages": stats.total_messages,
               "bytes": stats.total_bytes, "max_rank_sends": stats.max_sends,
               "max_rank_recvs": int(stats.msgs_recv.max(initial=0)),
               "max_collective_sends": stats.max_collective_sends,
               "max_collective_recvs": stats.max_collective_recvs,
               "critical_path_ticks": stats.critical_path_ticks,
               "collectives": "star" if ns.naive_collectives else "tree"}
    code = EXIT_OK
    if ns.check:
        seq = copy.deepcopy(fac)
        selected_inversion(seq, diag_formula="column")
        dev = max_block_deviation(result, seq)
        summary["max_block_deviation"] = dev
        summary["equivalent"] = dev <= ns.tol_equiv
        if dev > ns.tol_equiv:
            code = EXIT_EQUIV
    if ns.stats_out:
        stats.to_csv(ns.stats_out)
        summary["stats_out"] = ns.stats_out
    _emit(cfg, summary)
    return code


def cmd_stats(cfg: RunConfig, ns) -> int:
    a = _load(cfg)
    _, _, _, summary = _selinv(cfg, a, ns)
    _emit(cfg, summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--matrix", help="input Matrix Market file")
    g.add_argument("--ordering", default="mindeg",
                   help="natural, mindeg or file:<path> (one new index per line)")
    g.add_argument("--grid", default="1x1", help="process grid PRxPC (default 1x1)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--relax-max", type=int, default=64, help="largest supernode")
    g.add_argument("--relax-pad", type=int, default=8,
                   help="explicit zeros allowed per column when merging")
    g.add_argument("--scalar", choices=["auto", "real", "complex"], default="auto")
    g.add_argument("--json", action="store_true", help="print the summary as one JSON object")
    g.add_argument("--perturb-pivots", action="store_true",
                   help="replace tiny pivots instead of failing")
    g.add_argument("--pivot-threshold", type=float, default=None)
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="selinv", description=__doc__.splitlines()[0],
                                epilog="global options go after the subcommand")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("selinv", parents=[common], help="selected entries of the inverse")
    s.add_argument("--output", "-o", help="write selected entries here (Matrix Market)")
    s.add_argument("--trace-check", action="store_true", help="report |Tr[A Ainv] - N| / N")
    s.add_argument("--check-diag-formula", action="store_true",
                   help="compare both diagonal update formulas")
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_selinv)

    f = sub.add_parser("factor", parents=[common], help="factor only and report structure")
    f.add_argument("--oracle-cap", type=int, default=512)
    f.set_defaults(func=cmd_factor)

    m = sub.add_parser("simulate", parents=[common], help="simulate the distributed run")
    m.add_argument("--naive-collectives", action="store_true",
                   help="root sends to every participant directly")
    m.add_argument("--shuffle-ties", type=int, default=None, metavar="SEED")
    m.add_argument("--stats-out", help="per-rank communication CSV")
    m.add_argument("--check", action="store_true", help="compare with the sequential result")
    m.add_argument("--tol-equiv", type=float, default=1e-12)
    m.add_argument("--threads", action="store_true", help="per-rank work on a thread pool")
    m.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="compare with a dense inverse")
    v.add_argument("--oracle-cap", type=int, default=512)
    v.add_argument("--tol", type=float, default=1e-8)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("stats", parents=[common], help="structure and flop counts")
    t.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_args(ns)
        return ns.func(cfg, ns)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except MatrixMarketError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SingularPivotError as exc:
        print(f"error: singular: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
