"""Command-line interface.

One executable, one subcommand per capability:

    rectgilbert coeffs        exact series coefficients h_n
    rectgilbert dist          pdf/cdf tables (exact series, simulation,
                              or mean-field)
    rectgilbert simulate-full stopping-set episodes and h̄_n estimates
    rectgilbert simulate-half trapezoid-walk ray-length sampling
    rectgilbert moments       exact / integral-equation moments
    rectgilbert meanfield     mean-field series and curves
    rectgilbert tessellate    window realisation to SVG + CSV

Conventions shared by all subcommands: ``--q`` takes an exact rational
string ("1/2", "0.3"), ``--lambda`` the seed intensity, ``--seed`` the
master RNG seed, and ``--threads`` a worker count that can never change
results (only speed).  With ``--out`` the table goes to a file and a
JSON manifest (parameters, artifact hashes, wall clock) is written next
to it; without it the table prints to stdout.  Every numeric table
carries an uncertainty column.  The exit code is nonzero when a result
is numerically flagged (non-convergence or truncation dominance).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from fractions import Fraction

import numpy as np

from . import __version__, backend, meanfield, moments
from .fullsim import distribution_table, estimate, mean_length, taylor_check
from .halfsim import monte_carlo_report
from .meanfield import MeanFieldSeriesError, model_intensities, series_coefficients
from .moments import ConvergenceError
from .recurrence import SeriesEvalConfig, cdf as series_cdf, compute_h, \
    pdf as series_pdf
from .rng import Xoshiro256PP
from .tessellation import Window, generate, interior_lengths, render_svg, to_csv

#: Series-evaluation truncation estimate reported for mean-field values
#: away from q = 1/2 (evaluations exceeding it raise instead).
_MF_TRUNC = 1e-6


def _parse_q(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc
    if not (0 <= q <= 1):
        raise argparse.ArgumentTypeError(f"q must lie in [0, 1], got {text}")
    return q


def _parse_positive(text: str) -> float:
    val = float(text)
    if not (val > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return val


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if count < 1 or stop < start:
        raise argparse.ArgumentTypeError(f"bad grid spec {text!r}")
    return np.linspace(start, stop, count)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv_text(schema: str, meta: dict, columns, rows) -> str:
    lines = [f"# rectgilbert-{schema}/1"]
    for key, val in meta.items():
        lines.append(f"# {key}={val}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _json_text(schema: str, meta: dict, columns, rows) -> str:
    def clean(v):
        if isinstance(v, (np.floating, float)):
            v = float(v)
            return v if math.isfinite(v) else repr(v)
        if isinstance(v, np.integer):
            return int(v)
        if isinstance(v, Fraction):
            return str(v)
        return v

    doc = {
        "schema": f"rectgilbert-{schema}/1",
        "meta": {k: clean(v) for k, v in meta.items()},
        "columns": list(columns),
        "rows": [[clean(v) for v in row] for row in rows],
    }
    return json.dumps(doc, indent=2) + "\n"


def _render(args, schema: str, meta: dict, columns, rows) -> str:
    fmt = getattr(args, "format", "csv")
    if fmt == "json":
        return _json_text(schema, meta, columns, rows)
    return _csv_text(schema, meta, columns, rows)


def _hash_entry(path: str, data: bytes) -> dict:
    return {
        "path": path,
        "sha256": hashlib.sha256(data).hexdigest(),
        "bytes": len(data),
    }


def _deliver(args, text: str, params: dict, t0: float,
             extra: list[tuple[str, str]] | None = None) -> None:
    """Print or write the main table; any file artifact gets a manifest."""
    out = getattr(args, "out", None)
    artifacts = []
    if out:
        artifacts.append((out, text))
    else:
        sys.stdout.write(text)
    artifacts.extend(extra or [])
    if not artifacts:
        return
    entries = []
    for path, content in artifacts:
        data = content.encode()
        with open(path, "wb") as fh:
            fh.write(data)
        entries.append(_hash_entry(path, data))
    manifest = {
        "schema": "rectgilbert-run/1",
        "version": __version__,
        "backend": backend.backend_name(),
        "subcommand": args.cmd,
        "parameters": params,
        "artifacts": entries,
        "wall_clock_s": round(time.monotonic() - t0, 6),
    }
    with open(artifacts[0][0] + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _common_params(args, **extra) -> dict:
    params = {}
    for name in ("q", "lam", "reps", "seed", "threads", "n_terms", "n_cap",
                 "model", "n_max", "grid_spec", "width", "height", "margin"):
        if hasattr(args, name):
            val = getattr(args, name)
            key = "lambda" if name == "lam" else name
            params[key] = str(val) if isinstance(val, Fraction) else val
    params.update(extra)
    return params


# ----------------------------------------------------------------- coeffs

def cmd_coeffs(args) -> int:
    t0 = time.monotonic()
    h = compute_h(args.q, args.n_max)
    rows = [(n, str(v), float(v)) for n, v in enumerate(h.values)]
    text = _render(args, "coeffs",
                   {"q": args.q, "n_max": args.n_max,
                    "note": "h_exact is exact; h_decimal is its nearest double"},
                   ("n", "h_exact", "h_decimal"), rows)
    _deliver(args, text, _common_params(args), t0)
    return 0


# ------------------------------------------------------------------- dist

def _dist_half_exact(args, grid):
    a_max = 0.5 * args.lam * float(grid.max(initial=0.0)) ** 2
    n_terms = args.n_terms or max(64, int(a_max + 12 * math.sqrt(a_max + 1) + 30))
    h = compute_h(args.q, n_terms - 1)
    cfg = SeriesEvalConfig(lam=args.lam, n_terms=n_terms)
    rows = []
    flagged = False
    for ell in grid:
        p = series_pdf(h, cfg, float(ell))
        c = series_cdf(h, cfg, float(ell))
        flagged |= not (p.converged and c.converged)
        rows.append((float(ell), p.value, p.tail_bound, c.value, c.tail_bound))
    return rows, {"n_terms": n_terms, "err_kind": "series tail bound"}, flagged


def _dist_full_sim(args, grid):
    est = estimate(args.reps, args.q, lam=args.lam, master_seed=args.seed,
                   threads=args.threads)
    pdf_v, pdf_se, cdf_v, cdf_se = distribution_table(est, args.lam, grid)
    rows = list(zip(grid.tolist(), pdf_v.tolist(), pdf_se.tolist(),
                    cdf_v.tolist(), cdf_se.tolist()))
    meta = {"reps": args.reps, "cap_hits": est.cap_hits,
            "err_kind": "covariance-correct standard error"}
    return rows, meta, est.cap_hits > 0


def _dist_meanfield(args, grid, model):
    rows = []
    closed = args.q == Fraction(1, 2)
    for ell in grid:
        s = meanfield.survival(args.q, args.lam, float(ell), model)
        f = meanfield.meanfield_pdf(args.q, args.lam, float(ell), model)
        err = 0.0 if closed else _MF_TRUNC
        rows.append((float(ell), f, err, 1.0 - s, err))
    meta = {"err_kind": "closed form (0) or series truncation bound"}
    return rows, meta, False


def cmd_dist(args) -> int:
    t0 = time.monotonic()
    grid = args.grid
    if args.model == "half-exact":
        rows, meta, flagged = _dist_half_exact(args, grid)
    elif args.model == "full-sim":
        rows, meta, flagged = _dist_full_sim(args, grid)
    else:
        model = args.model.removeprefix("meanfield-")
        rows, meta, flagged = _dist_meanfield(args, grid, model)
    meta = {"model": args.model, "q": args.q, "lambda": args.lam, **meta}
    text = _render(args, "dist", meta,
                   ("ell", "pdf", "pdf_err", "cdf", "cdf_err"), rows)
    _deliver(args, text, _common_params(args, model=args.model), t0)
    return 2 if flagged else 0


# ---------------------------------------------------------- simulate-full

def cmd_simulate_full(args) -> int:
    t0 = time.monotonic()
    est = estimate(args.reps, args.q, lam=args.lam, n_cap=args.n_cap,
                   master_seed=args.seed, threads=args.threads,
                   record_raw=bool(args.episode_log))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        el, el_se = mean_length(est, args.lam)
    n = est.episodes
    hist = est.histogram.astype(np.float64)
    ks = np.arange(est.n_cap + 1, dtype=np.float64)
    finite = n - est.cap_hits
    rows = [("episodes", n, 0.0), ("cap_hits", est.cap_hits, 0.0),
            ("mean_length", el, el_se)]
    if finite:
        m1 = float(hist[1:] @ ks[1:]) / finite
        v1 = float(hist[1:] @ (ks[1:] - m1) ** 2) / max(finite - 1, 1)
        bi_se = math.sqrt(v1 / finite)
        rows.append(("mean_blocking_index", m1, bi_se))
        rows.append(("mean_squares_created", m1 + 1.0, bi_se))
    for i, frac in enumerate(est.h_hat):
        p = float(frac)
        rows.append((f"hbar_{i}", p, math.sqrt(p * (1.0 - p) / n)))
    meta = {"q": args.q, "lambda": args.lam, "n_cap": args.n_cap,
            "seed": args.seed, "backend": backend.backend_name()}
    text = _render(args, "fullsim", meta, ("quantity", "value", "se"), rows)
    extra = []
    if args.episode_log:
        bi = est.raw_indices
        lines = ["# rectgilbert-episodes/1", "episode,blocking_index,squares_created"]
        lines.extend(
            f"{i},{k},{k + 1}" if k else f"{i},inf,inf"
            for i, k in enumerate(bi.tolist())
        )
        extra.append((args.episode_log, "\n".join(lines) + "\n"))
    _deliver(args, text, _common_params(args), t0, extra=extra)
    return 2 if est.cap_hits else 0


# ---------------------------------------------------------- simulate-half

def cmd_simulate_half(args) -> int:
    t0 = time.monotonic()
    report = monte_carlo_report(
        args.q, args.lam, args.reps, master_seed=args.seed,
        survival_grid=args.grid, threads=args.threads,
        return_samples=bool(args.samples_out))
    rows = [
        ("samples", report.samples, 0.0),
        ("mean", report.mean, report.mean_se),
        ("second_moment", report.second_moment, report.second_moment_se),
        ("mean_steps", report.mean_steps, report.mean_steps_se),
    ]
    if report.survival_grid is not None:
        for g, s, se in zip(report.survival_grid, report.survival,
                            report.survival_se):
            rows.append((f"survival@{float(g)!r}", float(s), float(se)))
    meta = {"q": args.q, "lambda": args.lam, "seed": args.seed,
            "backend": backend.backend_name()}
    text = _render(args, "halfsim", meta, ("quantity", "value", "se"), rows)
    extra = []
    if args.samples_out:
        lines = ["# rectgilbert-samples/1", "sample,length,steps"]
        lines.extend(
            f"{i},{length!r},{steps}"
            for i, (length, steps) in enumerate(
                zip(report.lengths.tolist(), report.steps.tolist()))
        )
        extra.append((args.samples_out, "\n".join(lines) + "\n"))
    _deliver(args, text, _common_params(args), t0, extra=extra)
    return 0


# ---------------------------------------------------------------- moments

def cmd_moments(args) -> int:
    t0 = time.monotonic()
    rep = moments.moment_report(args.q, args.lam)
    diag = rep.numeric_diagnostics
    if rep.method == "closed_form":
        unc = 0.0
    else:
        rv = diag.get("refinement_values")
        # leading-order Richardson remainder for the O(h^2) grid scheme
        unc = abs(rv[-1] - rv[-2]) / 3.0 if rv else diag.get("sup_residual", 0.0)
    rows = [("mean", rep.mean, unc, rep.method)]
    if rep.second_moment is not None:
        rows.append(("second_moment", rep.second_moment,
                     diag.get("crosscheck_gap", 0.0), rep.method))
    try:
        mf = meanfield.meanfield_mean(args.q, args.lam, "half")
        rows.append(("mean", mf, 0.0, "mean_field"))
    except MeanFieldSeriesError:
        pass
    meta = {"q": args.q, "lambda": args.lam}
    if getattr(args, "format", "csv") == "json":
        meta = {**meta, **{f"diag_{k}": v for k, v in diag.items()
                           if isinstance(v, (int, float))}}
    text = _render(args, "moments", meta,
                   ("quantity", "value", "uncertainty", "method"), rows)
    _deliver(args, text, _common_params(args), t0)
    return 0


# -------------------------------------------------------------- meanfield

def cmd_meanfield(args) -> int:
    t0 = time.monotonic()
    q_exact = args.q
    lam_exact = Fraction(args.lam).limit_denominator(10**12) \
        if args.lam != int(args.lam) else Fraction(int(args.lam))
    P, Q = model_intensities(q_exact, lam_exact, args.model)
    if args.grid is None:
        series = series_coefficients(P, Q, args.n_max)
        rows = [(2 * m + 1, str(c), float(c))
                for m, c in enumerate(series.numeric_coefficients())]
        text = _render(args, "meanfield-coeffs",
                       {"model": args.model, "q": args.q, "lambda": args.lam,
                        "P": str(P), "Q": str(Q)},
                       ("power", "coeff_exact", "coeff_decimal"), rows)
        _deliver(args, text, _common_params(args), t0)
        return 0
    closed = args.q == Fraction(1, 2)
    rows = []
    for ell in args.grid:
        s = meanfield.survival(args.q, args.lam, float(ell), args.model)
        f = meanfield.meanfield_pdf(args.q, args.lam, float(ell), args.model)
        err = 0.0 if closed else _MF_TRUNC
        rows.append((float(ell), s, f, err))
    text = _render(args, "meanfield-curve",
                   {"model": args.model, "q": args.q, "lambda": args.lam,
                    "err_kind": "closed form (0) or series truncation bound"},
                   ("ell", "survival", "pdf", "err"), rows)
    _deliver(args, text, _common_params(args), t0)
    return 0


# -------------------------------------------------------------- tessellate

def cmd_tessellate(args) -> int:
    t0 = time.monotonic()
    if not args.out:
        print("rectgilbert: error: tessellate requires --out BASE "
              "(writes BASE.svg and BASE.csv)", file=sys.stderr)
        return 2
    window = Window(width=args.width, height=args.height, margin=args.margin)
    rng = Xoshiro256PP.from_stream(args.seed, 0)
    segments = generate(args.model, float(args.q), args.lam, window, rng)
    svg = render_svg(segments, window)
    csv_text = to_csv(segments)
    interior = interior_lengths(segments, window, "E")
    n_tr = sum(1 for s in segments if s.truncated)
    summary_rows = [
        ("segments", len(segments), 0.0),
        ("truncated", n_tr, 0.0),
    ]
    if len(interior) > 1:
        summary_rows.append(
            ("interior_east_mean", float(interior.mean()),
             float(interior.std(ddof=1) / math.sqrt(len(interior)))))
    summary = _csv_text("tessellate-summary",
                        {"model": args.model, "q": args.q,
                         "lambda": args.lam, "seed": args.seed},
                        ("quantity", "value", "se"), summary_rows)
    base = args.out
    extra = [(base + ".csv", csv_text)]
    args.out = base + ".svg"
    sys.stdout.write(summary)
    _deliver(args, svg, _common_params(args), t0, extra=extra)
    return 0


# ------------------------------------------------------------ taylor table

def cmd_taylor(args) -> int:
    t0 = time.monotonic()
    rows = [(r.power, str(r.half_model), str(r.full_model), int(r.equal))
            for r in taylor_check()]
    text = _render(args, "taylor",
                   {"note": "survival expansions: half model at lambda=2, "
                            "full model at lambda=1; exact rationals"},
                   ("ell_power", "half_model", "full_model", "equal"), rows)
    _deliver(args, text, _common_params(args), t0)
    return 0


# ------------------------------------------------------------------ parser

def _add_common(sp, *, reps: int | None = None, grid: bool = False,
                fmt=("csv", "json")):
    sp.add_argument("--q", type=_parse_q, default=Fraction(1, 2),
                    help="seed-kind probability as an exact rational (default 1/2)")
    sp.add_argument("--lambda", dest="lam", type=_parse_positive, default=1.0,
                    help="seed intensity (default 1)")
    sp.add_argument("--seed", type=int, default=0, help="master RNG seed")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: RECTGILBERT_THREADS or CPU count)")
    sp.add_argument("--out", default=None,
                    help="output file (writes a .manifest.json next to it)")
    if fmt:
        sp.add_argument("--format", choices=fmt, default=fmt[0])
    if reps is not None:
        sp.add_argument("--reps", type=int, default=reps,
                        help=f"sample/episode count (default {reps})")
    if grid:
        sp.add_argument("--grid", type=_parse_grid, default=None,
                        help="evaluation grid start:stop:count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rectgilbert",
        description="Rectangular Gilbert tessellation ray-length toolkit")
    parser.add_argument("--version", action="version",
                        version=f"rectgilbert {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("coeffs", help="exact series coefficients h_n")
    _add_common(sp)
    sp.add_argument("--n-max", type=int, default=10)
    sp.set_defaults(func=cmd_coeffs)

    sp = sub.add_parser("dist", help="pdf/cdf table for one model")
    _add_common(sp, reps=100000)
    sp.add_argument("--model", required=True,
                    choices=("half-exact", "full-sim",
                             "meanfield-half", "meanfield-full"))
    sp.add_argument("--grid", type=_parse_grid, required=True,
                    help="evaluation grid start:stop:count")
    sp.add_argument("--n-terms", dest="n_terms", type=int, default=None,
                    help="series truncation override (half-exact)")
    sp.set_defaults(func=cmd_dist)

    sp = sub.add_parser("simulate-full", help="stopping-set episode estimates")
    _add_common(sp, reps=100000)
    sp.add_argument("--n-cap", dest="n_cap", type=int, default=2048)
    sp.add_argument("--episode-log", default=None,
                    help="optional per-episode CSV log path")
    sp.set_defaults(func=cmd_simulate_full)

    sp = sub.add_parser("simulate-half", help="trapezoid-walk sampling")
    _add_common(sp, reps=100000, grid=True)
    sp.add_argument("--samples-out", default=None,
                    help="optional raw sample CSV path")
    sp.set_defaults(func=cmd_simulate_half)

    sp = sub.add_parser("moments", help="exact/integral-equation moments")
    _add_common(sp)
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("meanfield", help="mean-field series and curves")
    _add_common(sp, grid=True)
    sp.add_argument("--model", choices=("half", "full"), default="half")
    sp.add_argument("--n-max", type=int, default=9,
                    help="highest series power for the coefficient table")
    sp.set_defaults(func=cmd_meanfield)

    sp = sub.add_parser("tessellate", help="render a window realisation")
    _add_common(sp, fmt=())
    sp.add_argument("--model", choices=("full", "half"), default="half")
    sp.add_argument("--width", type=_parse_positive, default=10.0)
    sp.add_argument("--height", type=_parse_positive, default=10.0)
    sp.add_argument("--margin", type=float, default=None,
                    help="buffer margin (default 8/sqrt(lambda))")
    sp.set_defaults(func=cmd_tessellate)

    sp = sub.add_parser("taylor", help="half/full survival Taylor table")
    _add_common(sp)
    sp.set_defaults(func=cmd_taylor)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, MeanFieldSeriesError, ConvergenceError) as exc:
        print(f"rectgilbert: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
