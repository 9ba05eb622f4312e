"""Command-line front end.

    ebrates fit       --counts C --population P --year 2016
    ebrates estimate  --counts C --population P --year 2016 --top 10
    ebrates simulate  --counts C --population P --year 2016 --reps 100000 --seed 1
    ebrates replay    OUT/manifest.json

Each command writes headered CSV / JSON files plus a ``manifest.json`` that
``replay`` can use to regenerate them byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import BetaParams, RngState, beta_pdf, fit_beta_moments, moments_to_beta
from .errors import ConvergenceError, DegenerateError, DomainError, InputError, SimulationError
from .estimators import estimate_towns
from .ingestion import Dataset, file_sha256, load_csv, load_dataset, load_header_map, observations_in, rates
from .simulation import (
    COVERAGE_COLUMNS,
    LOSS_COLUMNS,
    SimulationConfig,
    TruthSet,
    build_truths,
    run_simulation,
    synthetic_towns,
)
from .specfun import beta_quantile_array

log = logging.getLogger("ebrates")

EXIT_OK = 0
EXIT_INPUT = 3
EXIT_DEGENERATE = 4
EXIT_NUMERICAL = 5
OUT_DIR_ENV = "EBRATES_OUT_DIR"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_json(path: Path, obj) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# -- data loading ------------------------------------------------------------


def _load(args) -> Dataset:
    if args.dataset:
        return load_dataset(args.dataset)
    if not (args.counts and args.population):
        raise InputError("give --dataset, or both --counts and --population")
    header_map = load_header_map(args.header_map) if args.header_map else None
    return load_csv(args.counts, args.population, args.category, header_map)


_PATH_ARGS = ("dataset", "counts", "population", "header_map", "truths")


def _input_files(args) -> list[str]:
    return [getattr(args, n) for n in _PATH_ARGS if getattr(args, n, None)]


def _year(ds: Dataset, year):
    if year is None:
        return ds.years[-1]
    if year not in ds.years:
        raise InputError(f"year {year} not in data (years: {list(ds.years)})")
    return year


def _prior_for(ds: Dataset, year: int) -> BetaParams:
    return fit_beta_moments(rates(ds, year))


# -- commands ------------------------------------------------------------------


def cmd_fit(args, out: Path) -> list[Path]:
    ds = _load(args)
    year = _year(ds, args.year)
    obs = observations_in(ds, year)
    sample = rates(ds, year)
    prior = fit_beta_moments(sample)
    m = len(sample)
    report = {
        "year": year,
        "m": m,
        "mean": sample.mean,
        "variance": sample.variance,
        "alpha": prior.alpha,
        "beta": prior.beta,
    }
    files = [write_json(out / "prior.json", report)]

    # quantile-quantile pairs at plotting positions (i - 1/2) / m
    emp = np.sort(np.asarray(sample.rates))
    pos = (np.arange(1, m + 1) - 0.5) / m
    fitted = beta_quantile_array(pos, prior.alpha, prior.beta)
    files.append(write_csv(out / "qq.csv", ("position", "empirical", "fitted"), zip(pos.tolist(), emp.tolist(), fitted.tolist())))

    top = min(1.0, max(float(emp[-1]) * 1.2, beta_quantile_array(0.9999, prior.alpha, prior.beta).item()))
    grid = np.linspace(0.0, top, 401)
    files.append(
        write_csv(out / "density.csv", ("x", "density"), ((x, beta_pdf(x, prior)) for x in grid.tolist()))
    )
    counts, edges = np.histogram(emp, bins=max(10, int(math.sqrt(m))), range=(0.0, top))
    files.append(
        write_csv(
            out / "histogram.csv",
            ("bin_lo", "bin_hi", "count", "density"),
            zip(edges[:-1].tolist(), edges[1:].tolist(), counts.tolist(), (counts / (m * np.diff(edges))).tolist()),
        )
    )
    files.append(
        write_csv(
            out / "funnel.csv",
            ("town", "population", "count", "rate"),
            ((o.town, o.population, o.count, o.count / o.population) for o in obs),
        )
    )
    if year - 1 in ds.years:
        prev = {o.town: o.count / o.population for o in observations_in(ds, year - 1)}
        rows = [(o.town, prev[o.town], o.count / o.population) for o in obs if o.town in prev]
        files.append(write_csv(out / "regression.csv", ("town", f"rate_{year - 1}", f"rate_{year}"), rows))

    print(f"year {year}: m={m} mean={sample.mean:.6g} S2={sample.variance:.6g}")
    print(f"beta prior by moments: alpha={prior.alpha:.4f} beta={prior.beta:.4f}")
    return files


ESTIMATE_COLUMNS = (
    "town", "count", "population", "mle", "shrinkage", "js", "delta",
    "wald_lo", "wald_hi", "cred_lo", "cred_hi",
    "info_ratio_success", "info_ratio_failure", "shrinkage_rank", "mle_rank",
)


def _estimate_rows(records):
    for r in records:
        yield (
            r.town, r.count, r.population, r.mle, r.shrinkage, r.js, r.delta,
            r.wald.lower, r.wald.upper, r.credible.lower, r.credible.upper,
            r.info_ratio_success, r.info_ratio_failure, r.shrinkage_rank, r.mle_rank,
        )


def cmd_estimate(args, out: Path) -> list[Path]:
    ds = _load(args)
    year = _year(ds, args.year)
    obs = observations_in(ds, year)
    prior = _prior_for(ds, year)
    records = estimate_towns(obs, prior, level=args.level, positive_part=args.js_positive_part)
    files = [write_csv(out / "estimates.csv", ESTIMATE_COLUMNS, _estimate_rows(records))]
    ranked = sorted(records, key=lambda r: r.shrinkage_rank)
    top = ranked[: args.top]
    files.append(write_csv(out / "top.csv", ESTIMATE_COLUMNS, _estimate_rows(top)))

    # history of the three highest and three lowest towns by MLE
    by_mle = sorted(records, key=lambda r: r.mle_rank)
    picks = [r.town for r in by_mle[:3]] + [r.town for r in by_mle[-3:]]
    rows = []
    for y in ds.years:
        try:
            yobs = observations_in(ds, y)
            yrec = estimate_towns(yobs, _prior_for(ds, y), level=args.level)
        except (DegenerateError, DomainError) as exc:
            log.warning("year %d skipped in history: %s", y, exc)
            continue
        for r in yrec:
            if r.town in picks:
                rows.append((r.town, y, r.mle, r.wald.lower, r.wald.upper, r.shrinkage, r.credible.lower, r.credible.upper))
    rows.sort(key=lambda row: (picks.index(row[0]), row[1]))
    files.append(
        write_csv(
            out / "history.csv",
            ("town", "year", "mle", "wald_lo", "wald_hi", "shrinkage", "cred_lo", "cred_hi"),
            rows,
        )
    )

    print(f"year {year}: prior alpha={prior.alpha:.4f} beta={prior.beta:.4f}, level={args.level}")
    print(f"{'rank':>4}  {'town':<24} {'n':>9} {'mle':>9} {'shrink':>9} {'cred_lo':>9} {'cred_hi':>9} {'mle_rank':>8}")
    for r in top:
        print(
            f"{r.shrinkage_rank:>4}  {r.town:<24} {r.population:>9d} {r.mle:>9.5f} {r.shrinkage:>9.5f} "
            f"{r.credible.lower:>9.5f} {r.credible.upper:>9.5f} {r.mle_rank:>8d}"
        )
    return files


def _read_truths(path) -> TruthSet:
    towns, truths, pops = [], [], []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        missing = {"town", "truth", "population"} - set(reader.fieldnames or ())
        if missing:
            raise InputError(f"{path}:1: missing column(s) {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                towns.append(row["town"].strip())
                truths.append(float(row["truth"]))
                pops.append(int(row["population"]))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    return TruthSet(towns, np.array(truths), np.array(pops, dtype=np.int64))


def cmd_simulate(args, out: Path) -> list[Path]:
    frozen = None
    if args.truths:
        ts = _read_truths(args.truths)
    elif args.synthetic:
        ts = synthetic_towns(args.synthetic, seed=args.seed)
    else:
        ds = _load(args)
        year = _year(ds, args.year)
        ts = build_truths(_towns_with_year(ds, year), reference_year=year)
        if args.freeze_prior:
            frozen = _prior_for(ds, year)
    if args.freeze_prior and frozen is None:
        t = ts.truths
        frozen = moments_to_beta(float(np.mean(t)), float(np.var(t, ddof=1)))

    cfg = SimulationConfig(
        truths=ts.truths,
        populations=ts.populations,
        replications=args.reps,
        level=args.level,
        seed=args.seed,
        refit_prior_each_rep=not args.freeze_prior,
        prior=frozen,
        positive_part=args.js_positive_part,
    )
    summary = run_simulation(cfg, workers=args.workers)

    doc = summary.to_dict()
    doc["config"] = {
        "towns": len(ts.towns),
        "level": args.level,
        "seed": args.seed,
        "refit_prior_each_rep": not args.freeze_prior,
        "frozen_prior": None if frozen is None else {"alpha": frozen.alpha, "beta": frozen.beta},
    }
    files = [write_json(out / "summary.json", doc)]
    samples = np.hstack([summary.loss_samples, summary.coverage_samples])
    files.append(
        write_csv(
            out / "samples.csv",
            ("replication",) + LOSS_COLUMNS + COVERAGE_COLUMNS,
            ([i] + row for i, row in enumerate(samples.tolist())),
        )
    )
    files.append(
        write_csv(
            out / "truths.csv",
            ("town", "truth", "population"),
            zip(ts.towns, ts.truths.tolist(), ts.populations.tolist()),
        )
    )
    # one realization, drawn exactly as replication 0 draws it
    k = RngState(args.seed, 0).generator.binomial(ts.populations, ts.truths)
    files.append(
        write_csv(
            out / "simulated_funnel.csv",
            ("town", "population", "count", "rate"),
            zip(ts.towns, ts.populations.tolist(), k.tolist(), (k / ts.populations).tolist()),
        )
    )

    se = summary.mc_standard_errors
    print(f"{summary.replications} replications, {len(ts.towns)} towns, failed={len(summary.failed_replications)}")
    print(f"{'estimator':<12} {'risk':>12} {'mc_se':>10}")
    for name, key in (("mle", "risk_mle"), ("shrinkage", "risk_shrinkage"), ("js", "risk_js")):
        print(f"{name:<12} {getattr(summary, key):>12.6g} {_fmt_se(se[key]):>10}")
    print(f"{'interval':<12} {'coverage':>12} {'mc_se':>10}")
    for name, key in (("wald", "coverage_wald"), ("credible", "coverage_credible")):
        print(f"{name:<12} {getattr(summary, key):>12.4f} {_fmt_se(se[key]):>10}")
    return files


def _fmt_se(v) -> str:
    return "nan" if not math.isfinite(v) else f"{v:.3g}"


def _towns_with_year(ds: Dataset, year: int):
    keep = {o.town for o in ds.observations if o.year == year}
    dropped = sorted({o.town for o in ds.observations} - keep)
    if dropped:
        log.warning("%d town(s) absent in %d excluded from truths", len(dropped), year)
    return [o for o in ds.observations if o.town in keep]


COMMANDS = {"fit": cmd_fit, "estimate": cmd_estimate, "simulate": cmd_simulate}


# -- parser --------------------------------------------------------------------


def _add_data_args(p):
    g = p.add_argument_group("data")
    g.add_argument("--counts", help="CSV with town,year,count[,category]")
    g.add_argument("--population", help="CSV with town,year,population")
    g.add_argument("--category", help="crime category to select from the counts file")
    g.add_argument("--header-map", help="JSON mapping canonical to actual column names")
    g.add_argument("--dataset", help="normalized town,year,count,population CSV instead of --counts/--population")
    g.add_argument("--year", type=int, help="analysis / reference year (default: latest)")


def _add_common(p):
    p.add_argument("--out-dir", help=f"output directory (default: ${OUT_DIR_ENV} or ./ebrates-out)")
    p.add_argument("--level", type=float, default=0.95, help="interval level (default 0.95)")
    p.add_argument("--js-positive-part", action="store_true", help="clamp the James-Stein factor at 0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebrates", description="Empirical-Bayes shrinkage of binomial rates")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the beta prior by moments")
    _add_data_args(p)
    _add_common(p)

    p = sub.add_parser("estimate", help="per-town estimates and intervals")
    _add_data_args(p)
    _add_common(p)
    p.add_argument("--top", type=int, default=10, help="rows in the top-N view (default 10)")

    p = sub.add_parser("simulate", help="Monte Carlo risk and coverage study")
    _add_data_args(p)
    _add_common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--truths", help="CSV with town,truth,population instead of data")
    src.add_argument("--synthetic", type=int, metavar="M", help="M synthetic towns: Beta(5, 917) rates, log-uniform sizes")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--freeze-prior", action="store_true", help="fit the prior once instead of per replication")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", help="write outputs here instead of the recorded directory")
    return parser


# -- manifest & main -------------------------------------------------------------

_MANIFEST_SKIP = {"command", "verbose", "manifest"}


def _manifest(args, out: Path, files) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _MANIFEST_SKIP}
    inputs = {p: file_sha256(Path(p)) for p in _input_files(args)}
    return {
        "command": args.command,
        "config": config,
        "inputs": inputs,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": {f.name: file_sha256(f) for f in files},
    }


def _replay_args(manifest_path: str, out_dir):
    with open(manifest_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    ns = build_parser().parse_args([doc["command"]])
    for k, v in doc["config"].items():
        setattr(ns, k, v)
    if out_dir:
        ns.out_dir = out_dir
    for p, digest in doc.get("inputs", {}).items():
        if file_sha256(Path(p)) != digest:
            raise InputError(f"{p}: input changed since the manifest was written")
    return ns


def run(args) -> int:
    if args.command == "replay":
        args = _replay_args(args.manifest, args.out_dir)
    for name in _PATH_ARGS:
        if getattr(args, name, None):
            setattr(args, name, str(Path(getattr(args, name)).resolve()))
    out = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or "ebrates-out")
    args.out_dir = str(out)
    out.mkdir(parents=True, exist_ok=True)
    files = COMMANDS[args.command](args, out)
    write_json(out / "manifest.json", _manifest(args, out, files))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except (InputError, DomainError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateError, SimulationError) as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
