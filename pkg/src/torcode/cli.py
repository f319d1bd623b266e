"""``torcode`` command line.

    torcode code build|dmin|dump     codebooks and their toroidal distances
    torcode dfr bound|mc|dist        union bound, Monte Carlo, noise law dump
    torcode verify <suite>           oracle suites (exit 1 on failure)
    torcode report table2            distance / DFR / CER table and scatter plot
    torcode bench                    numba vs numpy kernel timings

Exit codes: 0 success, 1 verification failure, 2 usage error. Logs go to
stderr, data to stdout or the requested files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field

from . import __version__, bench, report, verify
from . import codebooks as cbk
from .dfr import InfeasibleError, dfr_monte_carlo, dfr_union_bound
from .noise import noise_projection_dist
from .pke import PRESETS, ParamsError, make_params
from .probdist import PREC, PRUNE_BITS

log = logging.getLogger("torcode")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    action: str
    preset: str = "kyber1024"
    q: int = 3329
    overrides: dict = field(default_factory=dict)
    construction: str = "baseline"
    ell: int | None = None
    gamma: int | None = None
    seed: int = 0
    prec: int = PREC
    prune_bits: int = PRUNE_BITS
    workers: int | None = None
    out: str | None = None

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        preset = "stressed" if getattr(args, "stressed", False) else getattr(args, "preset", "kyber1024")
        over = {k: getattr(args, k, None) for k in ("k", "eta1", "eta2", "du", "dv")}
        return cls(args.command, getattr(args, "action", ""), preset, getattr(args, "q", 3329),
                   {k: v for k, v in over.items() if v is not None},
                   getattr(args, "construction", "baseline") or "baseline", getattr(args, "ell", None),
                   getattr(args, "gamma", None), getattr(args, "seed", 0), getattr(args, "prec", PREC),
                   getattr(args, "prune_bits", PRUNE_BITS), getattr(args, "workers", None),
                   getattr(args, "out", None))

    def codebook(self, construction: str | None = None, ell: int | None = None, gamma: int | None = None):
        name = construction or self.construction
        ell = self.ell if ell is None else ell
        gamma = self.gamma if gamma is None else gamma
        if gamma is not None and not 0 <= 2 * gamma < self.q:
            raise UsageError(f"--gamma must satisfy 0 <= gamma < q/2 = {self.q / 2}, got {gamma}")
        try:
            return cbk.build(name, self.q, ell, gamma)
        except cbk.CodebookError as exc:
            raise UsageError(str(exc)) from exc

    def params(self, cb=None):
        """Validated Params; raised errors become usage errors before any work starts."""
        try:
            return make_params(self.preset, cb if cb is not None else self.codebook(), q=self.q, **self.overrides)
        except ParamsError as exc:
            raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# output helpers

def _write(path: str, text: str):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _csv_text(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# code

def _dmin_rows(cfg: RunConfig, all_codes: bool):
    q = cfg.q
    if all_codes:
        specs = [("baseline", None, None), ("minal", 2, cbk.gamma_star(q, 2)), ("minal", 4, cbk.gamma_star(q, 4)),
                 ("minal", 4, cbk.minal_gamma_for_ratio(q, 0.547)), ("mld", None, None), ("gtd4", None, None),
                 ("gtd8", None, None)]
    else:
        specs = [(cfg.construction, cfg.ell, cfg.gamma)]
    rows = []
    for name, ell, gamma in specs:
        cb = cfg.codebook(name, ell, gamma)
        rows.append({"construction": cb.construction, "ell": cb.ell, "gamma": cb.params.get("gamma", ""),
                     "size": cb.size, "dmin_sq": cb.min_sqdist(), "dmin": round(cb.dmin(), 4),
                     "dmin_over_q": round(cb.dmin() / q, 4)})
    return rows


def cmd_code(cfg: RunConfig, args) -> int:
    if cfg.action == "dmin":
        rows = _dmin_rows(cfg, args.all)
        text = _csv_text(rows, list(rows[0]))
        if cfg.out:
            _write(cfg.out, text)
        sys.stdout.write(text)
        return EXIT_OK
    cb = cfg.codebook()
    if cfg.action == "build":
        text = cb.dumps()
        if cfg.out:
            _write(cfg.out, text)
        else:
            sys.stdout.write(text + "\n")
        log.info("%s l=%d: %d codewords, dmin/q=%.4f", cb.construction, cb.ell, cb.size, cb.dmin() / cb.q)
        return EXIT_OK
    # dump: label, bits, codeword
    rows = [{"label": lab, "bits": "".join(map(str, cbk.label_to_bits(lab, cb.ell))),
             "codeword": " ".join(map(str, cw))} for lab, cw in zip(cb.labels, cb.codewords)]
    text = _csv_text(rows, ["label", "bits", "codeword"])
    if cfg.out:
        _write(cfg.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# dfr

def _mc_codes(cfg: RunConfig, all_codes: bool):
    if not all_codes:
        return [cfg.codebook()]
    q = cfg.q
    return [cbk.build_mld(q), cbk.build_baseline(q), cbk.build_minal(q, 2, cbk.gamma_star(q, 2)),
            cbk.build_minal(q, 4, cbk.gamma_star(q, 4)), cbk.build_gtd4(q), cbk.build_gtd8(q)]


def cmd_dfr(cfg: RunConfig, args) -> int:
    if cfg.action == "bound":
        params = cfg.params()
        try:
            rep = dfr_union_bound(params, method=args.method, lifts=args.lifts, workers=cfg.workers,
                                  allow_long=args.allow_long, prec=cfg.prec, prune_bits=cfg.prune_bits)
        except InfeasibleError as exc:
            log.error("%s", exc)
            log.error("use --method chernoff, or pass --allow-long to run the exact evaluation anyway")
            return EXIT_USAGE
        if cfg.out:
            _write(cfg.out + ".json", rep.to_json())
            _write(cfg.out + ".csv", rep.to_csv())
        if args.cache_dir:
            report.save_cell(rep, params.codebook, args.cache_dir)
        sys.stdout.write(rep.to_csv())
        return EXIT_OK

    if cfg.action == "mc":
        rows = []
        for cb in _mc_codes(cfg, args.all):
            params = cfg.params(cb)
            res = dfr_monte_carlo(params, trials=args.trials, seed=cfg.seed, engine=args.engine)
            row = asdict(res)
            row.update(ell=cb.ell, gamma=cb.params.get("gamma", ""), preset=cfg.preset)
            rows.append(row)
            log.info("%s l=%d: %d/%d failures", cb.construction, cb.ell, res.failures, res.trials)
        cols = ["preset", "construction", "ell", "gamma", "trials", "failures", "estimate", "ci_low",
                "ci_high", "confidence", "seed", "engine"]
        text = _csv_text(rows, cols)
        if cfg.out:
            _write(cfg.out + ".json", json.dumps({"schema": "torcode.mc/1", "results": rows}, indent=2))
            _write(cfg.out + ".csv", text)
        sys.stdout.write(text)
        return EXIT_OK

    # dist: law of <n, d> for one block
    params = cfg.params()
    try:
        d = [int(x) for x in args.d.split(",")]
    except ValueError:
        raise UsageError(f"--d must be comma separated integers, got {args.d!r}") from None
    if len(d) != params.ell:
        raise UsageError(f"--d needs {params.ell} entries for this codebook")
    dist = noise_projection_dist(params, d, prec=cfg.prec, prune_bits=cfg.prune_bits)
    lm = dist.log2_masses()
    pruned = math.log2(dist.pruned) - cfg.prec if dist.pruned else float("-inf")
    buf = io.StringIO()
    buf.write("# schema=torcode.dist/1\n")
    buf.write(f"# params={json.dumps(params.describe(), sort_keys=True)}\n")
    buf.write(f"# d={','.join(map(str, d))} prec={cfg.prec} prune_bits={cfg.prune_bits} pruned_mass_log2={pruned:.3f}\n")
    buf.write("value,log2_mass\n")
    for i, v in enumerate(lm):
        if v != float("-inf"):
            buf.write(f"{dist.lo + i},{v:.6f}\n")
    if cfg.out:
        _write(cfg.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    log.info("support [%d, %d], pruned mass 2^%.1f", dist.lo, dist.hi, pruned)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify / report / bench

def cmd_verify(cfg: RunConfig, args) -> int:
    suite = cfg.action
    if suite == "all":
        results = verify.run_all()
    elif suite == "theorem1":
        results = [verify.check_theorem1(args.q)]
    elif suite == "splitting":
        results = [verify.check_splitting(args.n, args.ell, args.q)]
    elif suite == "lemma1":
        results = [verify.check_lemma1()]
    elif suite == "lattice":
        results = [verify.check_lattice()]
    else:
        results = [verify.check_decoder(queries=args.queries)]
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_report(cfg: RunConfig, args) -> int:
    rows = report.table2(cfg.q, cache_dir=args.cache_dir, compute=not args.no_compute,
                         exact_max_ell=args.exact_max_ell, chernoff_max_ell=args.chernoff_max_ell,
                         lifts=args.lifts, workers=cfg.workers)
    paths = report.write_table2(rows, args.out_dir)
    missing = sum(r["method"] is None for r in rows)
    if missing:
        log.warning("%d of %d cells missing; see %s", missing, len(rows), paths["table"])
    sys.stdout.write(_csv_text(rows, report.TABLE_COLUMNS))
    return EXIT_OK


def cmd_bench(cfg: RunConfig, args) -> int:
    rows = bench.run(repeat=args.repeat, seed=cfg.seed)
    print(bench.format_rows(rows))
    return EXIT_OK if all(r.get("agree", True) for r in rows) else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser

def _add_code_opts(p):
    p.add_argument("--construction", default="baseline", choices=cbk.CONSTRUCTIONS)
    p.add_argument("--q", type=int, default=3329)
    p.add_argument("--ell", type=int, help="dimension for Minal codes (2, 4 or 8)")
    p.add_argument("--gamma", type=int, help="Minal tailoring parameter, 0 <= gamma < q/2 (default: optimal)")


def _add_param_opts(p):
    p.add_argument("--preset", default="kyber1024", choices=sorted(PRESETS))
    p.add_argument("--stressed", action="store_true", help="shorthand for --preset stressed")
    for name in ("k", "eta1", "eta2", "du", "dv"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--prec", type=int, default=PREC, help="fixed-point bits of the probability engine")
    p.add_argument("--prune-bits", type=int, default=PRUNE_BITS, help="drop edge masses below 2^-N")
    p.add_argument("--workers", type=int, help="process pool size (default: $TORCODE_WORKERS or 1)")


class _Sub:
    """Wraps a subparsers action so every leaf parser inherits the common options."""

    def __init__(self, action, common):
        self.action, self.common = action, common

    def add_parser(self, name, **kw):
        return self.action.add_parser(name, parents=[self.common], **kw)

    def nested(self, parser, dest):
        return _Sub(parser.add_subparsers(dest=dest, required=True), self.common)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="torcode", description="Toroidal-distance codes for Kyber.CPA")
    ap.add_argument("--version", action="version", version=f"torcode {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    # lets -v also follow the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = _Sub(ap.add_subparsers(dest="command", required=True), common)

    code = sub.add_parser("code", help="build codebooks and report distances")
    csub = sub.nested(code, "action")
    for name in ("build", "dmin", "dump"):
        p = csub.add_parser(name)
        _add_code_opts(p)
        p.add_argument("--out", help="output file (default: stdout)")
        if name == "dmin":
            p.add_argument("--all", action="store_true", help="every construction of the comparison table")

    dfr = sub.add_parser("dfr", help="decryption failure rates")
    dsub = sub.nested(dfr, "action")
    p = dsub.add_parser("bound", help="union bound with exact tails or Chernoff")
    _add_code_opts(p)
    _add_param_opts(p)
    p.add_argument("--method", default="exact", choices=("exact", "chernoff", "both"))
    p.add_argument("--lifts", default="near", choices=("near", "single"))
    p.add_argument("--allow-long", action="store_true", help="permit hours-scale exact l=8 runs")
    p.add_argument("--cache-dir", help="also store the report where 'report table2' looks for cells")
    p.add_argument("--out", help="output prefix; writes PREFIX.json and PREFIX.csv")
    p = dsub.add_parser("mc", help="Monte Carlo failure counts with 99%% Clopper-Pearson intervals")
    _add_code_opts(p)
    _add_param_opts(p)
    p.add_argument("--all", action="store_true", help="run the six comparison codes")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engine", default="batched", choices=("batched", "scalar"))
    p.add_argument("--out", help="output prefix; writes PREFIX.json and PREFIX.csv")
    p = dsub.add_parser("dist", help="dump the law of <n, d> as CSV (value, log2 mass)")
    _add_code_opts(p)
    _add_param_opts(p)
    p.add_argument("--d", required=True, help="difference vector, comma separated")
    p.add_argument("--out", help="output CSV (default: stdout)")

    ver = sub.add_parser("verify", help="run oracle suites")
    vsub = sub.nested(ver, "action")
    vsub.add_parser("all")
    vsub.add_parser("lemma1")
    vsub.add_parser("lattice")
    p = vsub.add_parser("theorem1")
    p.add_argument("--q", type=int, default=17)
    p = vsub.add_parser("splitting")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--ell", type=int, default=2)
    p.add_argument("--q", type=int, default=17)
    p = vsub.add_parser("decoder")
    p.add_argument("--queries", type=int, default=100_000)

    rep = sub.add_parser("report", help="reproduction artifacts")
    rsub = sub.nested(rep, "action")
    p = rsub.add_parser("table2")
    p.add_argument("--q", type=int, default=3329)
    p.add_argument("--out-dir", default="table2_out")
    p.add_argument("--cache-dir", help="directory of cached 'dfr bound' reports")
    p.add_argument("--no-compute", action="store_true", help="only use cached cells")
    p.add_argument("--exact-max-ell", type=int, default=1, help="compute exact cells up to this l")
    p.add_argument("--chernoff-max-ell", type=int, default=4, help="compute Chernoff cells up to this l")
    p.add_argument("--lifts", default="near", choices=("near", "single"))
    p.add_argument("--workers", type=int)

    p = sub.add_parser("bench", help="numba vs numpy kernel timings")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    return ap


COMMANDS = {"code": cmd_code, "dfr": cmd_dfr, "verify": cmd_verify, "report": cmd_report, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with 2 on bad usage
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("code", "dfr"):
        if getattr(args, "gamma", None) is not None and args.construction != "minal":
            parser.error("--gamma only applies to --construction minal")
    cfg = RunConfig.from_args(args)
    try:
        if args.command == "dfr":
            cfg.params()  # validate overrides before any computation
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"torcode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:  # e.g. piped into head
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
