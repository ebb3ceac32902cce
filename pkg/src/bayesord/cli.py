"""Command-line front end: fit, effects, evidence, compare, simulate, summarize.

Every command writes into ``--out`` (atomic temp-then-rename writes) and
leaves a ``manifest.json`` recording what was run. Tables are plain
comma-separated text with fixed column order:

  summary.csv   parameter, mean, std, lower, upper, inefficiency
  effects.csv   covariate, label, dP1..dPJ, se1..seJ, keep, marker
  evidence.csv  run, model, log_ml, log_lik, log_prior, log_ordinate, fingerprint
  compare.csv   model_1, model_0, ln_bf
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .core import DrawsStore, ModelKind, PriorSpec, SamplerConfig
from .diagnostics import simulate_dataset, summarize_draws
from .effects import CovariateShift, average_covariate_effect, effect_significance_filter
from .errors import DomainError, SchemaError, ValidationError
from .evidence import EvidenceResult, log_bayes_factor, log_marginal_likelihood
from .probit import run_probit_chain
from .quantile import run_quantile_chain
from .survey import (RecodeSpec, build_design, load_delimited, read_dataset, summarize_categories,
                     write_dataset)

SUPPRESSED = "×"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# small IO helpers
# ---------------------------------------------------------------------------

def _write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _write_json(path: Path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    tmp.replace(path)


def _fmt(x, digits=6) -> str:
    return f"{float(x):.{digits}f}"


def _parse_p_grid(text: str):
    try:
        a, b, c = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--p-grid expects start:stop:step, got {text!r}") from None
    if c <= 0:
        raise UsageError("--p-grid step must be positive")
    count = int(round((b - a) / c)) + 1
    return [round(a + i * c, 10) for i in range(count)]


def _p_tag(p) -> str:
    return "probit" if p is None else f"quantile_p{p:.2f}"


# ---------------------------------------------------------------------------
# dataset resolution
# ---------------------------------------------------------------------------

def _load_dataset(data_path, wave=None, recode=None):
    """Survey file + wave mapping, or a dataset cache written by ``simulate``."""
    if data_path is None:
        raise UsageError("--data is required")
    if wave is None and recode is None:
        return read_dataset(data_path), None
    spec = RecodeSpec.load(recode) if recode else RecodeSpec.for_wave(wave)
    records = load_delimited(data_path, spec)
    data, report = build_design(records, spec, report=True)
    return data, {"parsed": report.parsed, "kept": report.kept, "rejected": report.rejected,
                  "dropped_missing": report.dropped_missing,
                  "dropped_no_purchase": report.dropped_no_purchase,
                  "rejects": [list(r) for r in records.rejects[:50]]}


def _priors_for(data, path):
    if path is None:
        return PriorSpec.default(data.k, data.J), "default"
    with open(path, encoding="utf-8") as fh:
        return PriorSpec.from_dict(json.load(fh), data.k, data.J), str(path)


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _run_one(job):
    data, priors, cfg, p, seq = job
    rng = kernels.make_rng(seq)
    if p is None:
        return run_probit_chain(data, priors, cfg, rng=rng)
    return run_quantile_chain(data, priors, cfg, rng=rng, p=p)


def _pool(stores):
    if len(stores) == 1:
        return stores[0]
    first = stores[0]
    return DrawsStore(np.vstack([s.beta_draws for s in stores]),
                      np.vstack([s.delta_draws for s in stores]),
                      sum(s.mh_accept_count for s in stores), first.model_kind,
                      first.covariate_names, float(np.mean([s.iota for s in stores])),
                      first.fingerprint, None)


def _write_summary(path, draws, level):
    summary = summarize_draws(draws, level)
    rows = [[name, _fmt(m), _fmt(s), _fmt(lo), _fmt(hi), _fmt(ie, 3)]
            for name, m, s, lo, hi, ie in summary.rows()]
    rows.append(["acceptance_rate", _fmt(draws.acceptance_rate, 4), "", "", "", ""])
    _write_csv(path, ["parameter", "mean", "std", "lower", "upper", "inefficiency"], rows)


def cmd_fit(args) -> int:
    if args.model == "probit":
        if args.p or args.p_grid:
            raise UsageError("--p/--p-grid only apply to --model quantile")
        p_list = [None]
    else:
        p_list = list(args.p or [])
        if args.p_grid:
            p_list += _parse_p_grid(args.p_grid)
        if not p_list:
            raise UsageError("--model quantile needs --p or --p-grid")
        p_list = list(dict.fromkeys(p_list))
        for p in p_list:
            if not 0.0 < p < 1.0:
                raise UsageError(f"quantile p must lie in (0, 1), got {p}")

    t0 = time.perf_counter()
    data, report = _load_dataset(args.data, args.wave, args.recode)
    priors, prior_source = _priors_for(data, args.priors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timings = {"load": time.perf_counter() - t0}

    jobs, index = [], []
    for p in p_list:
        cfg = SamplerConfig(args.iters, args.burnin, args.iota, args.seed, p, args.chains,
                            refresh=args.refresh, delta_target=args.delta_target)
        # one chain uses the seed directly, so it matches run_*_chain(config)
        seqs = ([args.seed] if args.chains == 1
                else np.random.SeedSequence(args.seed).spawn(args.chains))
        for c, seq in enumerate(seqs):
            jobs.append((data, priors, cfg, p, seq))
            index.append((p, c))

    t1 = time.perf_counter()
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as ex:
            stores = list(ex.map(_run_one, jobs))
    else:
        stores = [_run_one(j) for j in jobs]
    timings["sampling"] = time.perf_counter() - t1

    runs = []
    for p in p_list:
        tag = _p_tag(p)
        run_dir = out / tag
        run_dir.mkdir(exist_ok=True)
        chain_stores = [s for s, (pp, _) in zip(stores, index) if pp == p]
        if len(chain_stores) > 1:
            for c, s in enumerate(chain_stores):
                s.save(run_dir / f"draws_chain{c}.npz")
                _write_summary(run_dir / f"summary_chain{c}.csv", s, args.level)
        pooled = _pool(chain_stores)
        pooled.save(run_dir / "draws.npz")
        _write_summary(run_dir / "summary.csv", pooled, args.level)
        runs.append({"tag": tag, "p": p, "acceptance_rate": pooled.acceptance_rate,
                     "iota": pooled.iota})

    manifest = {
        "command": "fit", "version": __version__,
        "model": args.model, "p": p_list if args.model == "quantile" else None,
        "iterations": args.iters, "burn_in": args.burnin, "iota": args.iota,
        "seed": args.seed, "chains": args.chains, "refresh": args.refresh,
        "delta_target": args.delta_target, "level": args.level,
        "priors": prior_source, "prior_values": priors.to_dict(),
        "data": str(args.data), "wave": args.wave, "recode": args.recode,
        "fingerprint": data.fingerprint(), "n": data.n, "k": data.k, "J": data.J,
        "covariates": list(data.covariate_names), "design_report": report, "runs": runs,
        "timings": {k: round(v, 3) for k, v in timings.items()},
    }
    _write_json(out / "manifest.json", manifest)
    print(f"fit: wrote {len(runs)} run(s) to {out}")
    return 0


def _load_run(run_dir):
    """(draws, data, manifest, tag) from a fit output directory or a run subdirectory."""
    run_dir = Path(run_dir)
    if (run_dir / "draws.npz").exists():
        manifest_path, tag = run_dir.parent / "manifest.json", run_dir.name
    else:
        subdirs = sorted(d for d in run_dir.iterdir() if (d / "draws.npz").exists()) \
            if run_dir.is_dir() else []
        if len(subdirs) != 1:
            raise UsageError(f"{run_dir} does not identify a single fitted run "
                             f"(found {[d.name for d in subdirs]})")
        manifest_path, tag, run_dir = run_dir / "manifest.json", subdirs[0].name, subdirs[0]
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    draws = DrawsStore.load(run_dir / "draws.npz")
    data, _ = _load_dataset(manifest["data"], manifest.get("wave"), manifest.get("recode"))
    if data.fingerprint() != draws.fingerprint:
        raise ValidationError(f"data at {manifest['data']} no longer matches the fitted run")
    return draws, data, manifest, tag, run_dir


# ---------------------------------------------------------------------------
# effects
# ---------------------------------------------------------------------------

def _shift_label(name, increment):
    if name.startswith("Income") and increment == 5:
        return "ΔI=$50,000"
    return f"Δ{name}={increment:+g}"


def cmd_effects(args) -> int:
    draws, data, manifest, tag, run_dir = _load_run(args.run)
    names = list(data.covariate_names)
    shifts = []
    if args.covariates:
        for name in args.covariates:
            if name not in names[1:]:
                raise UsageError(f"unknown covariate {name!r}; known: {', '.join(names[1:])}")
            shifts.append(CovariateShift.binary(names.index(name), label=name))
    for spec in args.shift or []:
        name, _, inc = spec.rpartition(":")
        match = [n for n in names[1:] if n == name or n.lower().startswith(name.lower())]
        if not name or len(match) != 1:
            raise UsageError(f"--shift {spec!r}: expected name:+increment with one of "
                             f"{', '.join(names[1:])}")
        try:
            increment = float(inc)
        except ValueError:
            raise UsageError(f"--shift {spec!r}: increment is not a number") from None
        shifts.append(CovariateShift(names.index(match[0]), increment=increment,
                                     label=_shift_label(match[0], increment)))
    if not shifts:
        for j, name in enumerate(names[1:], start=1):
            col = data.X[:, j]
            if np.all((col == 0.0) | (col == 1.0)):
                shifts.append(CovariateShift.binary(j, label=name))

    J = data.J
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for shift in shifts:
            eff = average_covariate_effect(draws, data, shift)
            keep = effect_significance_filter(draws, shift, args.level)
            rows.append([names[shift.index], shift.label, *(_fmt(v, 4) for v in eff.mean),
                         *(_fmt(v, 4) for v in eff.std_error), int(keep),
                         "" if keep else SUPPRESSED])
    header = ["covariate", "label", *(f"dP{j}" for j in range(1, J + 1)),
              *(f"se{j}" for j in range(1, J + 1)), "keep", "marker"]
    out = Path(args.out or run_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "effects.csv", header, rows)
    _write_json(out / "effects_manifest.json", {
        "command": "effects", "version": __version__, "run": str(args.run), "level": args.level,
        "shifts": [[names[s.index], s.label] for s in shifts], "fingerprint": data.fingerprint()})
    print(f"effects: {len(rows)} row(s) -> {out / 'effects.csv'}")
    return 0


# ---------------------------------------------------------------------------
# evidence / compare
# ---------------------------------------------------------------------------

def cmd_evidence(args) -> int:
    results = []
    for run in args.run:
        draws, data, manifest, tag, run_dir = _load_run(run)
        priors, _ = _priors_for(data, manifest.get("priors") if manifest.get("priors") != "default"
                                else None)
        cfg = SamplerConfig(manifest["iterations"], manifest["burn_in"], manifest["iota"],
                            manifest["seed"], draws.model_kind.p,
                            refresh=manifest.get("refresh", "sweep"))
        res = log_marginal_likelihood(data, priors, cfg, draws.model_kind, draws=draws,
                                      reduced_draws=args.reduced_draws, seed=args.seed)
        _write_json(run_dir / "evidence.json", res.to_dict())
        results.append((str(run), res))
    out = Path(args.out) if args.out else None
    rows = [[run, r.model_kind, _fmt(r.log_marginal_likelihood, 4), _fmt(r.log_likelihood, 4),
             _fmt(r.log_prior, 4), _fmt(r.log_posterior_ordinate, 4), r.fingerprint]
            for run, r in results]
    if out:
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "evidence.csv", ["run", "model", "log_ml", "log_lik", "log_prior",
                                          "log_ordinate", "fingerprint"], rows)
        _write_json(out / "manifest.json", {"command": "evidence", "version": __version__,
                                            "runs": args.run, "reduced_draws": args.reduced_draws,
                                            "seed": args.seed})
    for row in rows:
        print(f"{row[0]}: ln ML = {row[2]}")
    return 0


def _evidence_from(item):
    path = Path(item)
    if path.is_dir():
        candidates = [path / "evidence.json"] + sorted(path.glob("*/evidence.json"))
        found = [c for c in candidates if c.exists()]
        if len(found) != 1:
            raise UsageError(f"{path}: expected exactly one evidence.json")
        path = found[0]
    with open(path, encoding="utf-8") as fh:
        return str(item), EvidenceResult.from_dict(json.load(fh))


def cmd_compare(args) -> int:
    items = [_evidence_from(e) for e in args.evidence]
    if len(items) < 2:
        raise UsageError("compare needs at least two evidence results")
    rows = []
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            (n1, r1), (n0, r0) = items[i], items[j]
            rows.append([n1, n0, _fmt(log_bayes_factor(r1, r0), 4)])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "compare.csv", ["model_1", "model_0", "ln_bf"], rows)
    _write_json(out / "manifest.json", {"command": "compare", "version": __version__,
                                        "evidence": args.evidence})
    for row in rows:
        print(f"ln BF({row[0]} vs {row[1]}) = {row[2]}")
    return 0


# ---------------------------------------------------------------------------
# simulate / summarize
# ---------------------------------------------------------------------------

def _floats(text, flag):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def cmd_simulate(args) -> int:
    beta = _floats(args.beta, "--beta")
    gamma = _floats(args.gamma, "--gamma")
    if args.model == "quantile":
        if args.p is None or len(args.p) != 1:
            raise UsageError("simulate --model quantile needs a single --p")
        kind = ModelKind.quantile(args.p[0])
    else:
        kind = ModelKind.probit()
    data = simulate_dataset(beta, gamma, args.n, kind, args.design, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(data, out / "data.csv")
    _write_json(out / "truth.json", {"beta": beta, "gamma": gamma, "model": str(kind)})
    _write_json(out / "manifest.json", {
        "command": "simulate", "version": __version__, "beta": beta, "gamma": gamma,
        "n": args.n, "model": str(kind), "design": args.design, "seed": args.seed,
        "fingerprint": data.fingerprint()})
    print(f"simulate: n={data.n}, J={data.J} -> {out / 'data.csv'}")
    return 0


def cmd_summarize(args) -> int:
    data, report = _load_dataset(args.data, args.wave, args.recode)
    labels = None
    if args.wave or args.recode:
        spec = RecodeSpec.load(args.recode) if args.recode else RecodeSpec.for_wave(args.wave)
        labels = spec.dependent_labels
    summary = summarize_categories(data, labels)
    out = Path(args.out)
    summary.write(out)
    _write_json(out / "manifest.json", {"command": "summarize", "version": __version__,
                                        "data": str(args.data), "wave": args.wave,
                                        "fingerprint": data.fingerprint(),
                                        "design_report": report})
    print(f"summarize: n={data.n} -> {out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesord",
                                     description="Bayesian ordinal probit and quantile models")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--data", help="survey file (with --wave/--recode) or dataset cache csv")
        p.add_argument("--wave", choices=["2021", "2022", "2023"])
        p.add_argument("--recode", help="custom RecodeSpec JSON instead of a shipped wave")

    fit = sub.add_parser("fit", help="run the MCMC sampler")
    data_args(fit)
    fit.add_argument("--model", choices=["probit", "quantile"], default="probit")
    fit.add_argument("--p", type=float, action="append", help="quantile (repeatable)")
    fit.add_argument("--p-grid", help="start:stop:step, e.g. 0.05:0.95:0.05")
    fit.add_argument("--priors", help="JSON with beta_mean, beta_cov, delta_mean, delta_cov")
    fit.add_argument("--iters", type=_positive_int, default=12_500)
    fit.add_argument("--burnin", type=int, default=2_500)
    fit.add_argument("--iota", type=float, default=1.0)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--chains", type=_positive_int, default=1)
    fit.add_argument("--workers", type=_positive_int, default=1)
    fit.add_argument("--refresh", choices=["sweep", "burn_in"], default="sweep")
    fit.add_argument("--delta-target", choices=["marginal", "conditional"], default="marginal")
    fit.add_argument("--level", type=float, default=0.95)
    fit.add_argument("--manifest", help="re-run from a fit manifest (other flags ignored)")
    fit.add_argument("--out", default="out")

    eff = sub.add_parser("effects", help="average covariate effects from a fitted run")
    eff.add_argument("--run", required=True, help="fit output directory or run subdirectory")
    eff.add_argument("--covariates", nargs="+", help="binary covariates to flip 0 -> 1")
    eff.add_argument("--shift", action="append", help="name:+increment, e.g. income:+5")
    eff.add_argument("--level", type=float, default=0.95)
    eff.add_argument("--out")

    ev = sub.add_parser("evidence", help="log marginal likelihood of fitted runs")
    ev.add_argument("--run", nargs="+", required=True)
    ev.add_argument("--reduced-draws", type=_positive_int, default=5_000)
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--out")

    cmp_ = sub.add_parser("compare", help="log Bayes factors between evidence results")
    cmp_.add_argument("--evidence", nargs="+", required=True,
                      help="evidence.json files or run directories")
    cmp_.add_argument("--out", default="out")

    sim = sub.add_parser("simulate", help="write a synthetic dataset cache")
    sim.add_argument("--beta", required=True)
    sim.add_argument("--gamma", required=True, help="cut-points starting at 0")
    sim.add_argument("--n", type=_positive_int, default=1000)
    sim.add_argument("--model", choices=["probit", "quantile"], default="probit")
    sim.add_argument("--p", type=float, action="append")
    sim.add_argument("--design", choices=["normal", "bernoulli"], default="normal")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default="out")

    summ = sub.add_parser("summarize", help="category counts and stacked outcome shares")
    data_args(summ)
    summ.add_argument("--out", default="out")
    return parser


def _apply_manifest(args):
    with open(args.manifest, encoding="utf-8") as fh:
        m = json.load(fh)
    if m.get("command") != "fit":
        raise UsageError(f"{args.manifest} is not a fit manifest")
    args.model, args.data, args.wave = m["model"], m["data"], m.get("wave")
    args.recode = m.get("recode")
    args.p, args.p_grid = (m["p"] if m["model"] == "quantile" else None), None
    args.iters, args.burnin, args.iota = m["iterations"], m["burn_in"], m["iota"]
    args.seed, args.chains, args.refresh = m["seed"], m["chains"], m["refresh"]
    args.delta_target, args.level = m.get("delta_target", "marginal"), m.get("level", 0.95)
    args.priors = None if m["priors"] == "default" else m["priors"]


COMMANDS = {"fit": cmd_fit, "effects": cmd_effects, "evidence": cmd_evidence,
            "compare": cmd_compare, "simulate": cmd_simulate, "summarize": cmd_summarize}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit" and args.manifest:
            _apply_manifest(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bayesord {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, DomainError, SchemaError, FileNotFoundError) as exc:
        print(f"bayesord {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
