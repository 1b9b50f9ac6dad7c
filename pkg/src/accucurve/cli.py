"""Command-line front end: simulate, fit, predict, compare.

Every run writes a ``manifest.json`` capturing the full configuration and
the SHA-256 of each data file, so any artifact can be reproduced exactly
from its manifest. Exit codes: 0 success, 2 usage or input error,
3 numerical failure, 4 consistency failure between artifacts.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import (ConsistencyError, ConvergenceError, DataFormatError,
                     ParameterError, RegimeError, SeparationError)
from .figures import render_curve_figure, render_dic_figure, render_richness_figure
from .inference import (PosteriorDraws, PriorSpec, dic, draws_from_csv, draws_to_csv,
                        fit_mle, gibbs_multisite, gibbs_single, loglik_beta,
                        loglik_gamma, merge_chains)
from .prediction import (HorizonBand, band_from_betas, extrapolate,
                         required_additional_samples, richness)
from .sequences import (DiscoverySequence, SiteDataset, curve_from_indicators,
                        indicators_from_tags, read_indicators, read_site_dataset,
                        read_tags, split, write_indicators, write_tags)
from .simulate import GeneratorSpec, generate
from .survival import SurvivalParams

_FAMILIES = ("ll1", "ll2", "ll3")


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, options: dict,
                    data_files: list[str], figures: list[str] = ()) -> None:
    manifest = {
        "command": command,
        "options": options,
        "package": f"accucurve {__version__}",
        "data_files": {name: _sha256(out_dir / name) for name in data_files},
        "figures": list(figures),
    }
    _write_json(out_dir / "manifest.json", manifest)


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DataFormatError, ParameterError, RegimeError) as exc:
            raise click.UsageError(str(exc))
        except FileNotFoundError as exc:
            raise click.UsageError(str(exc))
        except (SeparationError, ConvergenceError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(3)
        except ConsistencyError as exc:
            click.echo(f"consistency failure: {exc}", err=True)
            sys.exit(4)
    return wrapper


def _ensure_out(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


@click.group()
@click.version_option(__version__)
def cli():
    """Accumulation-curve modelling: simulation, fitting, prediction, comparison."""


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@cli.command()
@click.option("--kind", required=True,
              type=click.Choice(["dirichlet", "pitman-yor", "dirichlet-multinomial",
                                 "zipf", "model"]))
@click.option("--n", "length", required=True, type=int, help="Sequence length.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--alpha", type=float, default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--H", "support", type=int, default=None, help="Support size (finite kinds).")
@click.option("--shape", type=float, default=None, help="Zipf shape exponent.")
@click.option("--family", type=click.Choice(_FAMILIES), default=None,
              help="Survival family for --kind model.")
@click.option("--phi", type=float, default=None, help="Damping parameter for --kind model.")
@click.option("--out", envvar="ACCUCURVE_OUT", required=True,
              help="Output directory (env: ACCUCURVE_OUT).")
@_guard
def simulate(kind, length, seed, alpha, sigma, support, shape, family, phi, out):
    """Write a synthetic dataset: tag file (where defined), indicator CSV, manifest."""
    params = None
    if kind == "model":
        if family is None:
            raise ParameterError("--kind model requires --family")
        if alpha is None:
            raise ParameterError("--kind model requires --alpha")
        if family == "ll1":
            params = SurvivalParams.ll1(alpha)
        elif family == "ll2":
            if sigma is None:
                raise ParameterError("ll2 requires --sigma")
            params = SurvivalParams.ll2(alpha, sigma)
        else:
            if sigma is None or phi is None:
                raise ParameterError("ll3 requires --sigma and --phi")
            params = SurvivalParams.ll3(alpha, sigma, phi)
    spec = GeneratorSpec(kind=kind, n=length, seed=seed, alpha=alpha, sigma=sigma,
                         H=support, shape=shape, params=params)
    tags, sequence = generate(spec)
    out_dir = _ensure_out(out)
    files = []
    if tags is not None:
        write_tags(out_dir / "tags.txt", tags)
        files.append("tags.txt")
    write_indicators(out_dir / "indicators.csv", sequence)
    files.append("indicators.csv")
    _write_manifest(out_dir, "simulate", spec.to_dict(), files)
    click.echo(f"wrote {', '.join(files)} to {out_dir} (n={sequence.n}, k={sequence.k})")


@cli.command()
@click.option("--family", type=click.Choice(_FAMILIES), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--sigma", type=float, default=0.0, show_default=True)
@click.option("--phi", type=float, default=1.0, show_default=True)
@click.option("--n", "length", required=True, type=int,
              help="Number of observations the count refers to.")
@click.option("--out", envvar="ACCUCURVE_OUT", required=True)
@_guard
def pmf(family, alpha, sigma, phi, length, out):
    """Exact distribution of the distinct count after n observations (CSV k,probability)."""
    if family == "ll1":
        params = SurvivalParams.ll1(alpha)
    elif family == "ll2":
        params = SurvivalParams.ll2(alpha, sigma)
    else:
        params = SurvivalParams.ll3(alpha, sigma, phi)
    from .pbdist import PoissonBinomial
    dist = PoissonBinomial(params.discovery_probs(length))
    out_dir = _ensure_out(out)
    with open(out_dir / "pmf.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "probability"])
        for k, value in enumerate(dist.pmf):
            writer.writerow([k, _fmt(value)])
    _write_manifest(out_dir, "pmf",
                    {"family": family, "params": params.to_dict(), "n": length},
                    ["pmf.csv"])
    click.echo(f"wrote pmf.csv to {out_dir} (mean {dist.mean:.4g}, sd {dist.variance ** 0.5:.4g})")


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _load_single(input_path: str, tags: bool, min_length: int) -> DiscoverySequence:
    if tags:
        return indicators_from_tags(read_tags(input_path, min_length))
    return read_indicators(input_path, min_length)


def _run_chains(chains: int, seed: int, runner) -> list[PosteriorDraws]:
    seeds = np.random.SeedSequence(seed).spawn(max(chains, 1))
    rngs = [np.random.default_rng(s) for s in seeds]
    if chains <= 1:
        return [runner(rngs[0])]
    with ThreadPoolExecutor(max_workers=chains) as pool:
        return list(pool.map(runner, rngs))


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--tags", is_flag=True, help="Input is a tag file rather than indicator CSV.")
@click.option("--covariates", type=click.Path(exists=True), default=None,
              help="Covariate CSV; switches to the multi-site model.")
@click.option("--family", type=click.Choice(_FAMILIES), default="ll3", show_default=True)
@click.option("--method", type=click.Choice(["mle", "mcmc"]), required=True)
@click.option("--split", "split_fraction", type=float, default=None,
              help="Fit on the first floor(fraction * n) observations.")
@click.option("--iters", default=15000, show_default=True, type=int)
@click.option("--burn", default=5000, show_default=True, type=int)
@click.option("--chains", default=1, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--prior-sd", default=10.0, show_default=True, type=float)
@click.option("--min-length", default=2, show_default=True, type=int)
@click.option("--min-sequences", default=0, show_default=True, type=int,
              help="Drop multi-site sequences shorter than this (0 = keep all).")
@click.option("--out", envvar="ACCUCURVE_OUT", required=True)
@_guard
def fit(input_path, tags, covariates, family, method, split_fraction, iters, burn,
        chains, seed, prior_sd, min_length, min_sequences, out):
    """Fit a survival family by maximum likelihood or MCMC; write fit.json (+ draws.csv)."""
    out_dir = _ensure_out(out)
    report: dict = {
        "command": "fit",
        "family": family,
        "method": method,
        "split": split_fraction,
        "input": {"path": str(input_path), "sha256": _sha256(input_path),
                  "format": "tags" if tags else ("multisite" if covariates else "indicators")},
        "seed": seed,
    }
    files = ["fit.json"]

    if covariates:
        if method != "mcmc":
            raise ParameterError("the multi-site model is fit by MCMC only")
        report["input"]["covariates_path"] = str(covariates)
        report["input"]["covariates_sha256"] = _sha256(covariates)
        data = read_site_dataset(input_path, covariates, min_length, min_sequences)
        if split_fraction is not None:
            data = SiteDataset(tuple(
                type(s)(s.site_id, split(s.sequence, split_fraction)[0], s.covariates)
                for s in data))
        prior = PriorSpec.default_multisite(data.covariate_matrix(), prior_sd)
        runs = _run_chains(chains, seed,
                           lambda rng: gibbs_multisite(data, prior, iters, burn, rng))
        merged = runs[0] if len(runs) == 1 else merge_chains(
            runs, loglik_gamma(np.vstack([r.draws for r in runs]).mean(axis=0), data))
        draws_to_csv(merged, out_dir / "draws.csv")
        files.append("draws.csv")
        gamma_bar = merged.posterior_mean()
        report.update({
            "mode": "multisite",
            "gamma_mean": [float(v) for v in gamma_bar],
            "posterior_sd": [float(v) for v in merged.draws.std(axis=0)],
            "covariance": np.atleast_2d(np.cov(merged.draws.T)).tolist(),
            "converged": True,
            "constraint_active": None,
            "columns": list(merged.columns),
            "loglik": merged.loglik_at_mean,
            "dic": dic(merged),
            "sites": merged.meta["sites"],
            "covariate_dim": merged.meta["covariate_dim"],
            "mcmc": {"iters": iters, "burn": burn, "chains": chains, "seed": seed,
                     "prior_sd": prior_sd,
                     "loglik_at_mean": merged.loglik_at_mean,
                     "tmvn_rejections": merged.meta.get("tmvn_rejections", 0),
                     "tmvn_fallback_draws": merged.meta.get("tmvn_fallback_draws", 0),
                     "draws_file": "draws.csv"},
        })
        _write_json(out_dir / "fit.json", report)
        _write_manifest(out_dir, "fit", _cli_options(locals()), files)
        click.echo(f"multi-site mcmc fit: {len(data)} sites, dic={report['dic']:.4g}")
        return

    full = _load_single(input_path, tags, min_length)
    seq = full
    if split_fraction is not None:
        seq, _ = split(full, split_fraction)
    report.update({"mode": "single", "n": seq.n, "k": seq.k, "n_full": full.n})

    if method == "mle":
        result = fit_mle(seq, family)
        report.update(result.to_dict())
        _write_json(out_dir / "fit.json", report)
        _write_manifest(out_dir, "fit", _cli_options(locals()), files)
        click.echo(f"mle fit {family}: alpha={result.params.alpha:.4g} "
                   f"sigma={result.params.sigma:.4g} phi={result.params.phi:.4g} "
                   f"(fixed-point gap {result.fixed_point_gap:.2e})")
        return

    prior = PriorSpec.default(family, prior_sd)
    runs = _run_chains(chains, seed,
                       lambda rng: gibbs_single(seq, prior, iters, burn, rng, family))
    merged = runs[0] if len(runs) == 1 else merge_chains(
        runs, loglik_beta(np.vstack([r.draws for r in runs]).mean(axis=0), seq))
    draws_to_csv(merged, out_dir / "draws.csv")
    files.append("draws.csv")
    beta_bar = merged.posterior_mean()
    params_bar = SurvivalParams.from_beta(family, beta_bar)
    report.update({
        "params": params_bar.to_dict(),
        "beta": [float(v) for v in beta_bar],
        "posterior_sd": [float(v) for v in merged.draws.std(axis=0)],
        "posterior_mean_alpha": float(np.exp(merged.draws[:, 0]).mean()),
        "covariance": np.atleast_2d(np.cov(merged.draws.T)).tolist(),
        "converged": True,
        "constraint_active": None,
        "loglik": merged.loglik_at_mean,
        "dic": dic(merged),
        "mcmc": {"iters": iters, "burn": burn, "chains": chains, "seed": seed,
                 "prior_sd": prior_sd,
                 "loglik_at_mean": merged.loglik_at_mean,
                 "tmvn_rejections": merged.meta.get("tmvn_rejections", 0),
                 "tmvn_fallback_draws": merged.meta.get("tmvn_fallback_draws", 0),
                 "draws_file": "draws.csv"},
    })
    _write_json(out_dir / "fit.json", report)
    _write_manifest(out_dir, "fit", _cli_options(locals()), files)
    click.echo(f"mcmc fit {family}: n={seq.n} k={seq.k} dic={report['dic']:.4g}")


def _cli_options(scope: dict) -> dict:
    skip = {"out_dir", "report", "files", "full", "seq", "data", "prior", "runs",
            "merged", "result", "beta_bar", "params_bar", "gamma_bar", "positions",
            "rows", "bands"}
    scalar = (str, int, float, bool, type(None))
    out = {}
    for key, value in scope.items():
        if key in skip or key.startswith("_") or callable(value):
            continue
        if isinstance(value, scalar):
            out[key] = value
        elif isinstance(value, (list, tuple)) and all(isinstance(v, scalar) for v in value):
            out[key] = list(value)
    return out


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def _curve_grid(n_total: int, n_train: int, horizon_points, max_points=240) -> np.ndarray:
    pts = set(np.unique(np.geomspace(1, max(n_total, 1), max_points).astype(int)).tolist())
    pts.update([1, n_train, n_total])
    pts.update(int(p) for p in horizon_points)
    return np.array(sorted(p for p in pts if p >= 1), dtype=int)


def _curve_table(betas, n_train, k_train, observed_counts, grid, level, rng,
                 sims_per_draw=64, max_draws=160, sim_chunk=64):
    """Simulate posterior predictive paths and summarize them on the grid.

    In-sample columns describe the model's own accumulation distribution;
    out-of-sample columns condition on the observed k at the split point.
    """
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    if betas.shape[0] > max_draws:
        idx = np.unique(np.linspace(0, betas.shape[0] - 1, max_draws).round().astype(int))
        betas = betas[idx]
    n_grid = int(grid.max())
    t = np.arange(n_grid, dtype=float)
    log_t = np.log(np.where(t > 0, t, 1.0))
    cols = grid - 1
    train_col = n_train - 1
    expected_in = np.zeros(grid.size)
    expected_tail = np.zeros(grid.size)
    pooled_in = []
    pooled_out = []
    lo_q, hi_q = (1.0 - level) / 2.0, (1.0 + level) / 2.0
    for beta in betas:
        probs = np.empty(n_grid)
        probs[0] = 1.0
        if n_grid > 1:
            eta = beta[0] + beta[1] * log_t[1:] + beta[2] * t[1:]
            probs[1:] = 1.0 / (1.0 + np.exp(-eta))
        cum = np.cumsum(probs)
        expected_in += cum[cols]
        expected_tail += np.maximum(cum[cols] - cum[train_col], 0.0)
        done = 0
        while done < sims_per_draw:
            block = min(sim_chunk, sims_per_draw - done)
            paths = (np.asarray(rng.random((block, n_grid)) < probs)).cumsum(axis=1)
            at_grid = paths[:, cols]
            pooled_in.append(at_grid)
            pooled_out.append(at_grid - paths[:, train_col][:, None])
            done += block
    expected_in /= betas.shape[0]
    expected_tail /= betas.shape[0]
    sims_in = np.vstack(pooled_in)
    sims_out = np.vstack(pooled_out)

    rows = []
    for j, pos in enumerate(grid):
        if pos <= n_train:
            expected = expected_in[j]
            lower = float(np.quantile(sims_in[:, j], lo_q))
            upper = float(np.quantile(sims_in[:, j], hi_q))
        else:
            expected = k_train + expected_tail[j]
            lower = k_train + float(np.quantile(sims_out[:, j], lo_q))
            upper = k_train + float(np.quantile(sims_out[:, j], hi_q))
        observed = observed_counts[pos - 1] if pos <= len(observed_counts) else None
        rows.append((int(pos), observed, float(expected), lower, upper))
    return rows


def _write_curve_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "observed", "expected", "lower", "upper"])
        for pos, observed, expected, lower, upper in rows:
            writer.writerow([pos, "" if observed is None else int(observed),
                             _fmt(expected), _fmt(lower), _fmt(upper)])


def _write_predictions_csv(path, bands, n_train, observed_counts) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n_plus_m", "expected", "lower", "upper",
                         "observed", "abs_error"])
        for band in bands:
            pos = n_train + band.m
            observed = observed_counts[pos - 1] if pos <= len(observed_counts) else None
            row = [band.m, pos, _fmt(band.mean), _fmt(band.lower), _fmt(band.upper)]
            if observed is None:
                row.extend(["", ""])
            else:
                row.extend([int(observed), _fmt(abs(band.mean - observed))])
            writer.writerow(row)


def _richness_payload(source, n, k, tail_tol, targets, plugin_params,
                      covariates=None) -> dict:
    report = richness(source, n, k, tail_tol, covariates=covariates)
    payload = {
        "n": n,
        "k": k,
        "regime": report.regime,
        "infinite": not report.finite,
        "richness_mean": None if not report.finite else report.mean,
        "richness_q025": report.quantile(0.025),
        "richness_q975": report.quantile(0.975),
        "saturation": report.saturation,
        "saturation_plugin": report.saturation_plugin,
        "expected_lifetime_bounds": None if report.bounds is None else list(report.bounds),
        "richness_midpoint_approx": report.midpoint_approx,
        "required_m_for": {},
    }
    for target in targets:
        key = format(target, "g")
        if not report.finite:
            payload["required_m_for"][key] = None
            continue
        try:
            payload["required_m_for"][key] = required_additional_samples(
                plugin_params, n, k, target, tail_tol)
        except (RegimeError, ParameterError):
            payload["required_m_for"][key] = None
    return payload


@cli.command()
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True),
              help="fit.json produced by the fit command.")
@click.option("--horizons", default=None,
              help="Comma-separated horizons m; default n/3,n,2n.")
@click.option("--level", default=0.95, show_default=True, type=float)
@click.option("--saturation-target", "targets", multiple=True, type=float,
              help="Saturation targets for sampling-effort planning (repeatable).")
@click.option("--tail-tol", default=1e-12, show_default=True, type=float)
@click.option("--sims-per-draw", default=64, show_default=True, type=int)
@click.option("--max-draws", default=160, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--no-figures", is_flag=True)
@click.option("--out", envvar="ACCUCURVE_OUT", required=True)
@_guard
def predict(fit_path, horizons, level, targets, tail_tol, sims_per_draw, max_draws,
            seed, no_figures, out):
    """Rarefaction/extrapolation curve, richness and saturation reports, figures."""
    out_dir = _ensure_out(out)
    with open(fit_path, encoding="utf-8") as fh:
        fit_report = json.load(fh)
    fit_dir = Path(fit_path).parent
    input_info = fit_report["input"]
    input_path = Path(input_info["path"])
    if not input_path.exists():
        candidate = fit_dir / input_path.name
        if candidate.exists():
            input_path = candidate
    if not input_path.exists():
        raise DataFormatError(f"input data {input_info['path']} not found")
    if _sha256(input_path) != input_info["sha256"]:
        raise ConsistencyError(f"{input_path} changed since the fit was produced")
    targets = tuple(targets) if targets else (0.99, 0.995)
    if not 0.0 < level < 1.0:
        raise ParameterError("level must be in (0, 1)")
    rng = np.random.default_rng(seed)

    if fit_report.get("mode") == "multisite":
        _predict_multisite(fit_report, fit_dir, input_path, out_dir, horizons, level,
                           targets, tail_tol, sims_per_draw, max_draws, rng, no_figures)
        _write_manifest(out_dir, "predict", _cli_options(locals()),
                        sorted(p.name for p in out_dir.glob("*.csv"))
                        + ["richness.json"],
                        sorted(p.name for p in out_dir.glob("*.png")))
        return

    tags = input_info.get("format") == "tags"
    full = _load_single(input_path, tags, min_length=1)
    n_train, k_train = fit_report["n"], fit_report["k"]
    observed = curve_from_indicators(full).counts
    horizon_list = _parse_horizons(horizons, n_train)

    if fit_report["method"] == "mcmc":
        mcmc = fit_report["mcmc"]
        draws = draws_from_csv(fit_dir / mcmc["draws_file"], "single",
                               fit_report["family"], mcmc["loglik_at_mean"])
        betas = draws.beta_full()
        bands = band_from_betas(betas, n_train, k_train, horizon_list, level, rng,
                                sims_per_draw=max(sims_per_draw, 200), max_draws=max_draws)
        richness_source = draws
        plugin_params = SurvivalParams.from_beta(fit_report["family"], np.asarray(fit_report["beta"]))
    else:
        plugin_params = SurvivalParams.from_dict(fit_report["params"])
        betas = plugin_params.beta[None, :]
        bands = [_plugin_band(plugin_params, n_train, k_train, m, level)
                 for m in horizon_list]
        richness_source = plugin_params

    grid = _curve_grid(max(full.n, n_train + max(horizon_list)), n_train,
                       [n_train + m for m in horizon_list])
    rows = _curve_table(betas, n_train, k_train, observed, grid, level, rng,
                        sims_per_draw, max_draws)
    _write_curve_csv(out_dir / "curve.csv", rows)
    _write_predictions_csv(out_dir / "predictions.csv", bands, n_train, observed)
    payload = _richness_payload(richness_source, n_train, k_train, tail_tol, targets,
                                plugin_params)
    payload["level"] = level
    payload["horizons"] = horizon_list
    _write_json(out_dir / "richness.json", payload)
    files = ["curve.csv", "predictions.csv", "richness.json"]
    figures = []
    if not no_figures:
        positions = [r[0] for r in rows]
        render_curve_figure(
            positions,
            [np.nan if r[1] is None else r[1] for r in rows],
            [r[2] for r in rows], [r[3] for r in rows], [r[4] for r in rows],
            n_train, out_dir / "curve.png")
        figures.append("curve.png")
    _write_manifest(out_dir, "predict", _cli_options(locals()), files, figures)
    click.echo(f"wrote {', '.join(files + figures)} to {out_dir}")


def _plugin_band(params, n, k, m, level):
    result = extrapolate(params, n, k, m, level)
    return HorizonBand(m, result.mean, result.lower, result.upper)


def _parse_horizons(text, n_train) -> list[int]:
    if text:
        try:
            horizons = sorted({int(v) for v in text.split(",") if v.strip()})
        except ValueError as exc:
            raise ParameterError(f"bad --horizons value {text!r}") from exc
        if not horizons or horizons[0] < 1:
            raise ParameterError("horizons must be positive integers")
        return horizons
    return sorted({max(1, math.ceil(n_train / 3)), n_train, 2 * n_train})


def _predict_multisite(fit_report, fit_dir, input_path, out_dir, horizons, level,
                       targets, tail_tol, sims_per_draw, max_draws, rng, no_figures):
    covariates_path = Path(fit_report["input"]["covariates_path"])
    if not covariates_path.exists():
        candidate = fit_dir / covariates_path.name
        if candidate.exists():
            covariates_path = candidate
    if _sha256(covariates_path) != fit_report["input"]["covariates_sha256"]:
        raise ConsistencyError(f"{covariates_path} changed since the fit was produced")
    data = read_site_dataset(input_path, covariates_path, min_length=1)
    full_by_id = {site.site_id: site for site in data}
    mcmc = fit_report["mcmc"]
    draws = draws_from_csv(fit_dir / mcmc["draws_file"], "multisite", None,
                           mcmc["loglik_at_mean"])
    sites_payload = {}
    richness_means, saturations = [], []
    for site_info in fit_report["sites"]:
        site_id = site_info["site_id"]
        z = np.asarray(site_info["z"], dtype=float)
        n_train, k_train = site_info["n"], site_info["k"]
        full_site = full_by_id.get(site_id)
        observed = (curve_from_indicators(full_site.sequence).counts
                    if full_site is not None else np.array([]))
        horizon_list = _parse_horizons(horizons, n_train)
        betas = draws.site_betas(z)
        bands = band_from_betas(betas, n_train, k_train, horizon_list, level, rng,
                                sims_per_draw=max(sims_per_draw, 200), max_draws=max_draws)
        grid = _curve_grid(max(len(observed), n_train + max(horizon_list)), n_train,
                           [n_train + m for m in horizon_list])
        rows = _curve_table(betas, n_train, k_train, observed, grid, level, rng,
                            sims_per_draw, max_draws)
        _write_curve_csv(out_dir / f"curve_{site_id}.csv", rows)
        _write_predictions_csv(out_dir / f"predictions_{site_id}.csv", bands,
                               n_train, observed)
        beta_bar = betas.mean(axis=0)
        plugin = SurvivalParams.from_beta("ll3", beta_bar)
        payload = _richness_payload(draws, n_train, k_train, tail_tol, targets,
                                    plugin, covariates=z)
        sites_payload[site_id] = payload
        if payload["richness_mean"] is not None:
            richness_means.append(payload["richness_mean"])
            saturations.append(payload["saturation"])
    _write_json(out_dir / "richness.json",
                {"level": level, "sites": sites_payload})
    if not no_figures and richness_means:
        render_richness_figure(richness_means, saturations,
                               out_dir / "richness_saturation.png")
    click.echo(f"wrote per-site curves and richness.json to {out_dir}")


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

@cli.command()
@click.argument("fits", nargs=-1, type=click.Path(exists=True))
@click.option("--out", envvar="ACCUCURVE_OUT", required=True)
@click.option("--no-figures", is_flag=True)
@_guard
def compare(fits, out, no_figures):
    """Rank MCMC fits of the same dataset by DIC."""
    if len(fits) < 2:
        raise click.UsageError("compare needs at least two fit.json files")
    loaded = []
    for path in fits:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
        if "dic" not in report:
            raise click.UsageError(f"{path}: no DIC (compare requires mcmc fits)")
        loaded.append((path, report))
    reference = loaded[0][1]
    ref_key = (reference["input"]["sha256"], reference.get("split"))
    for path, report in loaded[1:]:
        if (report["input"]["sha256"], report.get("split")) != ref_key:
            raise ConsistencyError(
                f"{path} was fit on different data than {loaded[0][0]} "
                "(input hash or split differs)")
    ranked = sorted(loaded, key=lambda item: item[1]["dic"])
    out_dir = _ensure_out(out)
    with open(out_dir / "ranking.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "fit", "family", "dic", "loglik"])
        for rank, (path, report) in enumerate(ranked, start=1):
            writer.writerow([rank, path, report.get("family", "multisite"),
                             _fmt(report["dic"]), _fmt(report["loglik"])])
    click.echo(f"{'rank':>4}  {'family':<10} {'dic':>12}  fit")
    for rank, (path, report) in enumerate(ranked, start=1):
        click.echo(f"{rank:>4}  {report.get('family', 'multisite'):<10} "
                   f"{report['dic']:>12.4g}  {path}")
    figures = []
    if not no_figures:
        render_dic_figure([r[1].get("family", "multisite") for r in ranked],
                          [r[1]["dic"] for r in ranked], out_dir / "dic_ranking.png")
        figures.append("dic_ranking.png")
    _write_manifest(out_dir, "compare", {"fits": list(fits)}, ["ranking.csv"], figures)


def main():
    cli(prog_name="accucurve")


if __name__ == "__main__":
    main()
