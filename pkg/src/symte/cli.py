"""Command-line entry point: ``symte <command> ...``.

Every command prints its main table as CSV on stdout. With ``--out DIR`` the
tables are also written to DIR together with ``run_config.json`` holding the
fully resolved parameters. Values from ``--config FILE`` (JSON, keys named
like the long options) are overridden by flags given on the command line.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .align import aligned_event_matrix, lag_compare_scan, lag_scan
from .bootstrap import BootstrapConfig, shuffle_pvalue
from .campaign import KINDS, cdf_area, records_csv, run_campaign
from .errors import DataError, DegenerateVarianceError, NonConvergenceError
from .inference import te_significance_test
from .io import load_series, parse_clock, read_manifest, symbols_text
from .netinfer import NetworkJob, coarse_grain, infer_network

log = logging.getLogger("symte")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# defaults for options that a config file may also set
DEFAULTS: Dict[str, dict] = {
    "te": {"past_window": 1, "delta_t": 0.0, "bootstrap": 0, "seed": 0, "workers": 1,
           "session": None},
    "compare": {"past_window": 1, "shifts": "0", "threshold": 0.01, "session": None},
    "lagscan": {"past_window": 1, "shifts": None, "threshold": 0.01, "session": None},
    "network": {"past_window": 1, "delta_t": 0.0, "q": 0.01, "min_events": 1000,
                "n_tests": None, "workers": 1, "session": None},
    "bench": {"dims": None, "T": None, "alpha": None, "s": None, "s_c": None,
              "replicates": 100, "seed": 0, "bootstrap": 0, "workers": 1,
              "threshold": 0.01, "n_tables": 20},
    "encode": {"label": None, "session": None},
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument parsing helpers
# --------------------------------------------------------------------------

def parse_shifts(text) -> List[float]:
    """Comma list of seconds, or ``start:stop:step`` with stop included."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text).strip()
    if not text:
        raise UsageError("shift grid is empty")
    try:
        if ":" in text:
            start, stop, step = (Decimal(x) for x in text.split(":"))
            if step <= 0:
                raise UsageError("shift step must be positive")
            n = int((stop - start) / step) + 1
            out = [float(start + k * step) for k in range(max(n, 0))]
        else:
            out = [float(Decimal(x)) for x in text.split(",") if x.strip()]
    except (InvalidOperation, ValueError):
        raise UsageError(f"cannot parse shift grid {text!r}") from None
    if not out:
        raise UsageError("shift grid is empty")
    return out


def parse_float_list(text, name) -> List[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        out = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {name} list {text!r}") from None
    if not out:
        raise UsageError(f"{name} list is empty")
    return out


def parse_dims(entries) -> List[tuple]:
    """Dims tuples from entries like ``2,2,2`` or ``2-4,2-4,2-4`` (ranges expand)."""
    if isinstance(entries, str):
        entries = [entries]
    out = []
    for entry in entries:
        if isinstance(entry, (list, tuple)):
            out.append(tuple(int(x) for x in entry))
            continue
        axes = []
        for part in str(entry).split(","):
            lo, _, hi = part.strip().partition("-")
            try:
                lo_i = int(lo)
                hi_i = int(hi) if hi else lo_i
            except ValueError:
                raise UsageError(f"cannot parse dims {entry!r}") from None
            if hi_i < lo_i:
                raise UsageError(f"empty range in dims {entry!r}")
            axes.append(range(lo_i, hi_i + 1))
        out.extend(itertools.product(*axes))
    if not out:
        raise UsageError("dims grid is empty")
    return out


def parse_session(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        start, end = text
    else:
        start, sep, end = str(text).partition(",")
        if not sep:
            raise UsageError("--session needs START,END")
    try:
        bounds = parse_clock(str(start)), parse_clock(str(end))
    except ValueError:
        raise UsageError(f"cannot parse session {text!r}") from None
    if bounds[1] <= bounds[0]:
        raise UsageError("session end must be after its start")
    return bounds


def _common(p, *names):
    if "past_window" in names:
        p.add_argument("--past-window", type=int, help="target history length (default 1)")
    if "delta_t" in names:
        p.add_argument("--delta-t", type=float, help="forward shift in seconds (default 0)")
    if "shifts" in names:
        p.add_argument("--shifts", help="shift grid: '0,0.25,0.5' or 'start:stop:step'")
    if "threshold" in names:
        p.add_argument("--threshold", type=float, help="significance threshold (default 0.01)")
    if "seed" in names:
        p.add_argument("--seed", type=int, help="random seed (default 0)")
    if "workers" in names:
        p.add_argument("--workers", type=int, help="parallel workers; output does not depend on it")
    if "bootstrap" in names:
        p.add_argument("--bootstrap", type=int, metavar="Q", help="number of resamples (0 = off)")
    if "session" in names:
        p.add_argument("--session", help="keep ticks with UTC time of day in START,END (HH:MM[:SS])")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--config", type=Path, help="JSON file with option values")
    p.add_argument("--plot", action="store_true", help="also render PNG figures into --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symte", description="Symbolic transfer entropy with analytic significance tests."
    )
    parser.add_argument("--version", action="version", version=f"symte {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("te", help="TE from SOURCE to TARGET with its chi-square test")
    p.add_argument("target", type=Path)
    p.add_argument("source", type=Path)
    _common(p, "past_window", "delta_t", "bootstrap", "seed", "workers", "session")

    p = sub.add_parser("compare", help="Vuong comparison of two sources across shifts")
    p.add_argument("target", type=Path)
    p.add_argument("source_b", type=Path)
    p.add_argument("source_c", type=Path)
    _common(p, "past_window", "shifts", "threshold", "session")

    p = sub.add_parser("lagscan", help="TE and its significance across forward shifts")
    p.add_argument("target", type=Path)
    p.add_argument("source", type=Path)
    _common(p, "past_window", "shifts", "threshold", "session")

    p = sub.add_parser("network", help="Bonferroni lead-lag network from a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--q", type=float, help="family-wise level before Bonferroni (default 0.01)")
    p.add_argument("--min-events", type=int, help="drop series with fewer events (default 1000)")
    p.add_argument("--n-tests", type=int, help="Bonferroni test count (default n(n+1)/2)")
    _common(p, "past_window", "delta_t", "workers", "session")

    p = sub.add_parser("bench", help="Monte-Carlo benchmark campaign")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--dims", action="append", help="alphabet sizes, e.g. 2,2,2 or 2-4,2-4,2-4; repeatable")
    p.add_argument("--T", dest="T", help="comma list of sample sizes")
    p.add_argument("--alpha", help="comma list of Dirichlet concentrations (null campaigns)")
    p.add_argument("--s", help="comma list of target TEs in nats (equal-te)")
    p.add_argument("--s-c", type=float, help="fixed TE for source c (equal-te; default S)")
    p.add_argument("--replicates", type=int, help="replicates per grid cell (default 100)")
    p.add_argument("--n-tables", type=int, help="constructed tables per equal-te cell (default 20)")
    _common(p, "seed", "workers", "bootstrap", "threshold")

    p = sub.add_parser("encode", help="sign-encode a tick file into a symbol file")
    p.add_argument("ticks", type=Path)
    p.add_argument("--label")
    _common(p, "session")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and explicit flags (in that order)."""
    params = dict(DEFAULTS[args.command])
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise DataError(f"cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.config}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(loaded, dict):
            raise DataError(f"{args.config}: config must be a JSON object")
        unknown = sorted(set(loaded) - set(params))
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        params.update(loaded)
    skip = {"command", "config", "out", "plot", "verbose"}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        params[key] = str(value) if isinstance(value, Path) else value
    if params.get("workers", 1) < 1:
        raise UsageError("--workers must be >= 1")
    if "threshold" in params and not 0 < params["threshold"] < 1:
        raise UsageError("--threshold must lie in (0, 1)")
    if params.get("past_window", 1) < 1:
        raise UsageError("--past-window must be >= 1")
    return params


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return "" if v is None else v


def table_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


class Output:
    """Collects named files for ``--out``.

    ``run_config.json`` is written by :meth:`finish`, so its presence marks a
    completed run.
    """

    def __init__(self, out: Optional[Path], command: str, params: dict):
        self.dir = out
        self.config = {"command": command, "version": __version__, "params": params}
        if out is not None:
            try:
                out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise DataError(f"cannot create {out}: {exc.strerror}") from None

    def finish(self) -> None:
        self.write("run_config.json", json.dumps(self.config, indent=2, sort_keys=True) + "\n")

    def write(self, name: str, text: str) -> None:
        if self.dir is not None:
            (self.dir / name).write_text(text)

    def path(self, name: str) -> Path:
        return self.dir / name


def _series(path, session, label=None):
    return load_series(path, label=label, session=session)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_te(params, out: Output, plot: bool) -> str:
    session = parse_session(params["session"])
    target = _series(params["target"], session)
    source = _series(params["source"], session)
    em = aligned_event_matrix(target, [source], params["delta_t"], params["past_window"])
    res = te_significance_test(em)
    header = ["target", "source", "delta_t", "T", "te_nats", "te_bits", "statistic", "df",
              "p_value", "small_sample"]
    row = [target.label, source.label, float(params["delta_t"]), res.T, res.te, res.te_bits,
           res.statistic, res.df, res.p_value, res.small_sample]
    if params["bootstrap"]:
        cfg = BootstrapConfig(q=params["bootstrap"], seed=params["seed"], mode="shuffle",
                              workers=params["workers"])
        header += ["p_shuffle", "q", "seed"]
        row += [shuffle_pvalue(em, cfg), cfg.q, cfg.seed]
    text = table_csv(header, [row])
    out.write("te.csv", text)
    return text


def cmd_lagscan(params, out: Output, plot: bool) -> str:
    if params["shifts"] is None:
        raise UsageError("lagscan needs --shifts")
    shifts = parse_shifts(params["shifts"])
    session = parse_session(params["session"])
    target = _series(params["target"], session)
    source = _series(params["source"], session)
    profile = lag_scan(target, source, shifts, params["past_window"], params["threshold"])
    text = profile.to_csv()
    cutoff = "none" if profile.cutoff_shift is None else repr(profile.cutoff_shift)
    out.write("lagscan.csv", text)
    out.write("cutoff.txt", f"cutoff_shift={cutoff}\n")
    if plot:
        from .plotting import lag_profile_figure

        lag_profile_figure(profile, out.path("lagscan.png"))
    return text + f"# cutoff_shift={cutoff}\n"


def cmd_compare(params, out: Output, plot: bool) -> str:
    shifts = parse_shifts(params["shifts"])
    session = parse_session(params["session"])
    target = _series(params["target"], session)
    b = _series(params["source_b"], session)
    c = _series(params["source_c"], session)
    profile = lag_compare_scan(target, b, c, shifts, params["past_window"], params["threshold"])
    text = profile.to_csv()
    bands = table_csv(["first_shift", "last_shift", "more_informative"],
                      [(lo, hi, b.label if sign > 0 else c.label) for lo, hi, sign in profile.bands])
    out.write("compare.csv", text)
    out.write("bands.csv", bands)
    if plot:
        from .plotting import compare_profile_figure

        compare_profile_figure(profile, out.path("compare.png"))
    return text + "".join(f"# band {line}\n" for line in bands.splitlines()[1:])


def cmd_network(params, out: Output, plot: bool) -> str:
    session = parse_session(params["session"])
    entries = read_manifest(params["manifest"])
    series, groups = [], []
    for entry in entries:
        try:
            series.append(_series(entry.path, session, label=entry.label))
        except DataError as exc:
            log.warning("series %s excluded: %s", entry.label, exc)
            continue
        groups.append(entry.group)
    if not 0 < params["q"] < 1:
        raise UsageError("--q must lie in (0, 1)")
    if params["n_tests"] is not None and params["n_tests"] < 1:
        raise UsageError("--n-tests must be >= 1")
    if params["min_events"] < params["past_window"] + 2:
        raise UsageError("--min-events must be at least past window + 2")
    job = NetworkJob(series, groups, q_conf=params["q"], min_events=params["min_events"],
                     past_window=params["past_window"], delta_t=params["delta_t"],
                     n_tests=params["n_tests"], workers=params["workers"])
    net = infer_network(job)
    text = net.edges_csv()
    out.write("edges.csv", text)
    out.write("coarse.csv", coarse_grain(net).to_csv())
    out.write("summary.json", net.summary_json())
    return text


def _bench_summary(kind, records, threshold) -> str:
    cells: Dict[tuple, list] = {}
    for r in records:
        param = r.alpha if kind != "equal-te" else r.s_b
        # repr keys so NaN placeholders compare equal
        cells.setdefault((r.dims, r.T, repr(param), repr(r.s_c)), []).append(r)
    rows = []
    for recs in cells.values():
        dims, T = recs[0].dims, recs[0].T
        param = recs[0].alpha if kind != "equal-te" else recs[0].s_b
        s_c = recs[0].s_c
        stat = np.array([r.statistic for r in recs])
        # one-sided p for the directional equal-TE question, analytic p otherwise
        p_a = np.array([r.p_one_sided for r in recs])
        p_b = np.array([r.p_bootstrap for r in recs])
        have_boot = bool(np.all(np.isfinite(p_b)))
        rows.append([
            kind, dims, T, param, s_c, len(recs), float(stat.mean()),
            float(stat.std()), recs[0].df, cdf_area(p_a),
            cdf_area([r.p_analytic for r in recs]),
            cdf_area(p_b) if have_boot else math.nan,
            float(np.mean(p_a < threshold)),
            float(np.mean(p_b < threshold)) if have_boot else math.nan,
        ])
    return table_csv(["campaign", "dims", "T", "param", "s_c", "n", "mean_statistic",
                      "std_statistic", "df", "area_analytic", "area_two_sided", "area_bootstrap",
                      "tpr_analytic", "tpr_bootstrap"], rows)


def cmd_bench(params, out: Output, plot: bool) -> str:
    kind = params["kind"]
    if params["dims"] is None or params["T"] is None:
        raise UsageError("bench needs --dims and --T")
    dims = parse_dims(params["dims"])
    T_grid = [int(t) for t in parse_float_list(params["T"], "T")]
    if kind == "equal-te":
        if params["s"] is None:
            raise UsageError("equal-te needs --s")
        grid = parse_float_list(params["s"], "S")
    else:
        if params["alpha"] is None:
            raise UsageError(f"{kind} needs --alpha")
        grid = parse_float_list(params["alpha"], "alpha")
    if params["replicates"] < 1:
        raise UsageError("--replicates must be >= 1")
    records = run_campaign(
        kind, dims, T_grid, grid, params["replicates"], seed=params["seed"],
        bootstrap_q=params["bootstrap"], workers=params["workers"],
        n_tables=params["n_tables"], s_c=params["s_c"],
    )
    text = records_csv(records)
    out.write("campaign.csv", text)
    out.write("summary.csv", _bench_summary(kind, records, params["threshold"]))
    if plot:
        from .plotting import pvalue_cdf_figure

        series = {"analytic": [r.p_one_sided for r in records]}
        if params["bootstrap"]:
            series["bootstrap"] = [r.p_bootstrap for r in records]
        pvalue_cdf_figure(series, out.path("pvalue_cdf.png"))
    return text


def cmd_encode(params, out: Output, plot: bool) -> str:
    session = parse_session(params["session"])
    series = _series(params["ticks"], session, label=params["label"])
    text = symbols_text(series)
    out.write(f"{series.label}.sym.csv", text)
    return text


COMMANDS = {
    "te": cmd_te, "compare": cmd_compare, "lagscan": cmd_lagscan,
    "network": cmd_network, "bench": cmd_bench, "encode": cmd_encode,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="symte: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        params = resolve(args)
        if args.plot and args.out is None:
            raise UsageError("--plot needs --out")
        out = Output(args.out, args.command, params)
        text = COMMANDS[args.command](params, out, args.plot)
        out.finish()
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"symte: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"symte: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DegenerateVarianceError, ValueError) as exc:
        print(f"symte: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"symte: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        sys.stdout.write(text)
        sys.stdout.flush()
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
