"""Rarefaction, extrapolation, richness, saturation and sampling-effort planning.

Conditional on the parameters, the number of new discoveries in the next m
observations is Poisson-binomial with success probabilities S(n), ...,
S(n + m - 1); everything here is built on that single fact. In-sample
smoothing (rarefaction) and out-of-sample prediction (extrapolation) are
cumulative sums of discovery probabilities; richness adds the full tail of
the series, and saturation compares what was seen with that total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import expit

from .errors import ParameterError, RegimeError
from .inference import PosteriorDraws
from .pbdist import PoissonBinomial
from .survival import SurvivalParams

_TAIL_CHUNK = 8192
_MAX_EXPLICIT_TERMS = 200_000


def rarefaction(params: SurvivalParams, n: int) -> np.ndarray:
    """Expected accumulation curve E(K_1)..E(K_n): cumulative discovery probabilities."""
    return np.cumsum(params.discovery_probs(n))


@dataclass(frozen=True)
class ExtrapolationResult:
    """Prediction of the curve m observations past the end of the sample."""

    m: int
    mean: float
    lower: float
    upper: float
    level: float
    distribution: PoissonBinomial | None = None


def extrapolate(params: SurvivalParams, n: int, k: int, m: int,
                level: float = 0.95) -> ExtrapolationResult:
    """Distribution of the total count after n + m observations, given k seen.

    The new-discovery count is Poisson-binomial with probabilities
    S(n)..S(n + m - 1); the interval comes from its central quantiles
    shifted by k.
    """
    if n < 1 or not 1 <= k <= n:
        raise ParameterError("need 1 <= k <= n")
    if m < 1:
        raise ParameterError("horizon m must be >= 1")
    if not 0.0 < level < 1.0:
        raise ParameterError("level must be in (0, 1)")
    probs = params.survival(np.arange(n, n + m, dtype=float))
    dist = PoissonBinomial(probs)
    lo, hi = dist.interval(level)
    return ExtrapolationResult(m, k + dist.mean, float(k + lo), float(k + hi), level, dist)


# ---------------------------------------------------------------------------
# Posterior predictive bands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HorizonBand:
    m: int
    mean: float
    lower: float
    upper: float


def band_from_betas(betas, n: int, k: int, horizons, level: float = 0.95,
                    rng=None, sims_per_draw: int = 2000, max_draws: int = 500,
                    sim_chunk: int = 512) -> list[HorizonBand]:
    """Simulation bands for the counts at several horizons.

    For each coefficient row a batch of Poisson-binomial paths is simulated;
    the simulations are pooled across rows and summarized by the empirical
    mean and the central ``level`` quantiles, shifted by the observed k.
    """
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    horizons = sorted({int(m) for m in horizons})
    if not horizons or horizons[0] < 1:
        raise ParameterError("horizons must be positive integers")
    if not 0.0 < level < 1.0:
        raise ParameterError("level must be in (0, 1)")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if betas.shape[0] > max_draws:
        idx = np.unique(np.linspace(0, betas.shape[0] - 1, max_draws).round().astype(int))
        betas = betas[idx]
    mmax = horizons[-1]
    t = np.arange(n, n + mmax, dtype=float)
    log_t = np.log(t)
    cols = np.array(horizons) - 1
    pooled = []
    for beta in betas:
        probs = expit(beta[0] + beta[1] * log_t + beta[2] * t)
        done = 0
        while done < sims_per_draw:
            block = min(sim_chunk, sims_per_draw - done)
            paths = (rng.random((block, mmax)) < probs).cumsum(axis=1)
            pooled.append(paths[:, cols])
            done += block
    sims = np.vstack(pooled)
    lo_q, hi_q = (1.0 - level) / 2.0, (1.0 + level) / 2.0
    out = []
    for j, m in enumerate(horizons):
        col = sims[:, j]
        out.append(HorizonBand(m, k + float(col.mean()),
                               k + float(np.quantile(col, lo_q)),
                               k + float(np.quantile(col, hi_q))))
    return out


def predictive_band(draws: PosteriorDraws, n: int, k: int, horizons,
                    level: float = 0.95, rng=None, sims_per_draw: int = 2000,
                    max_draws: int = 500) -> list[HorizonBand]:
    """Pooled posterior predictive bands from retained single-site draws."""
    if draws.n_draws < 1:
        raise ParameterError("no retained draws")
    return band_from_betas(draws.beta_full(), n, k, horizons, level, rng,
                           sims_per_draw, max_draws)


# ---------------------------------------------------------------------------
# Tail sums
# ---------------------------------------------------------------------------

def _beta_finite_regime(beta) -> bool:
    return beta[2] < 0.0 or beta[1] < -1.0


def _tail_integral(beta, a: float) -> float:
    """Integral of expit(b0 + b1 log t + b2 t) over [a, inf), finite regime."""
    b0, b1, b2 = beta

    def f(t):
        return float(expit(b0 + b1 * math.log(t) + b2 * t))

    total = 0.0
    left = a
    width = max(a, 1.0)
    if b2 < 0.0:
        # geometric damping: dyadic panels until the integrand is dead
        while True:
            right = left + width
            seg, _ = quad(f, left, right, epsabs=1e-14, epsrel=1e-10, limit=200)
            total += seg
            if f(right) < 1e-18 and seg <= 1e-14 * max(total, 1e-300):
                return total
            left = right
            width *= 2.0
            if width > 1e18:  # defensively cap; the remaining mass is negligible
                return total
    # pure power tail (b1 < -1): advance until the odds are small, then use
    # the alternating series integral of A t^b1 - A^2 t^(2 b1) + ...
    amp = math.exp(b0)
    while amp * left ** b1 >= 0.5:
        right = left + width
        seg, _ = quad(f, left, right, epsabs=1e-14, epsrel=1e-10, limit=200)
        total += seg
        left = right
        width *= 2.0
    series = 0.0
    odds = amp * left ** b1  # < 0.5 by construction, so the series converges fast
    for j in range(1, 60):
        power = j * b1 + 1.0
        term = (-1.0) ** (j + 1) * left * odds ** j / (-power)
        series += term
        if abs(term) < 1e-17 * max(abs(series), 1e-300):
            break
    return total + series


def _tail_remainder(beta, a: float) -> float:
    """Sum of expit(b0 + b1 log t + b2 t) over integer t >= a.

    Euler-Maclaurin form: integral over [a, inf) plus f(a)/2 - f'(a)/12;
    higher corrections are negligible for these smooth decaying tails.
    """
    b0, b1, b2 = beta
    fa = float(expit(b0 + b1 * math.log(a) + b2 * a))
    fprime = fa * (1.0 - fa) * (b1 / a + b2)
    return _tail_integral(beta, a) + 0.5 * fa - fprime / 12.0


def discovery_tail_sum(beta, start_t: int, tail_tol: float = 1e-12,
                       max_explicit: int = _MAX_EXPLICIT_TERMS) -> float:
    """Sum of discovery probabilities S(t) over integer t >= start_t.

    Terms are accumulated explicitly until they drop below ``tail_tol`` (the
    geometric phase), after which the remaining tail is added in closed
    Euler-Maclaurin form; slowly decaying polynomial tails switch to the
    remainder once ``max_explicit`` terms have been spent.
    """
    beta = np.asarray(beta, dtype=float)
    if start_t < 1:
        raise ParameterError("start_t must be >= 1")
    if tail_tol <= 0:
        raise ParameterError("tail_tol must be positive")
    if not _beta_finite_regime(beta):
        return math.inf
    total = 0.0
    t0 = start_t
    spent = 0
    while spent < max_explicit:
        chunk = min(_TAIL_CHUNK, max_explicit - spent)
        ts = np.arange(t0, t0 + chunk, dtype=float)
        vals = expit(beta[0] + beta[1] * np.log(ts) + beta[2] * ts)
        total += float(vals.sum())
        t0 += chunk
        spent += chunk
        if vals[-1] < tail_tol:
            break
    return total + _tail_remainder(beta, float(t0))


@dataclass(frozen=True)
class RichnessReport:
    """Posterior (or plug-in) summary of the total discoverable count.

    ``bounds`` bracket the model's asymptotic mean count between the mean
    lifetime E(T) and E(T) + 1; ``midpoint_approx`` is the E(T) + 1/2 rule.
    ``saturation`` averages k over per-draw richness; ``saturation_plugin``
    divides k by the mean richness instead. For plug-in inputs the two
    coincide. In the divergent regime ``finite`` is False and the numeric
    summaries are None.
    """

    finite: bool
    regime: str
    mean: float | None
    bounds: tuple[float, float] | None
    midpoint_approx: float | None
    saturation: float | None
    saturation_plugin: float | None
    draws_summary: dict | None
    n: int
    k: int

    def quantile(self, q: float) -> float | None:
        if self.draws_summary is None:
            return None
        return self.draws_summary.get(f"q{q:g}")


def _plugin_richness(params: SurvivalParams, n: int, k: int, tail_tol: float) -> RichnessReport:
    report = params.classify_regime()
    if not report.finite:
        return RichnessReport(False, report.regime, None, None, None, None, None,
                              None, n, k)
    if n == 0:
        # prior case: the whole series, starting at S(0) = 1
        total = 1.0 + discovery_tail_sum(params.beta, 1, tail_tol)
    else:
        total = k + discovery_tail_sum(params.beta, n, tail_tol)
    lifetime = report.expected_lifetime
    sat = (k / total) if total > 0 else None
    return RichnessReport(True, report.regime, float(total),
                          (lifetime, lifetime + 1.0), lifetime + 0.5,
                          sat, sat, None, n, k)


def _draws_richness(draws: PosteriorDraws, n: int, k: int, tail_tol: float,
                    covariates=None) -> RichnessReport:
    betas = draws.beta_full() if covariates is None else draws.site_betas(covariates)
    totals = np.empty(betas.shape[0])
    finite = True
    for i, beta in enumerate(betas):
        if not _beta_finite_regime(beta):
            finite = False
            break
        totals[i] = k + discovery_tail_sum(beta, max(n, 1), tail_tol)
    if not finite:
        return RichnessReport(False, "infinite", None, None, None, None, None, None, n, k)
    beta_bar = betas.mean(axis=0)
    params_bar = SurvivalParams.from_beta("ll3", beta_bar)
    regime_bar = params_bar.classify_regime()
    lifetime = regime_bar.expected_lifetime
    bounds = (lifetime, lifetime + 1.0) if math.isfinite(lifetime) else None
    mean_richness = float(totals.mean())
    summary = {
        "q0.025": float(np.quantile(totals, 0.025)),
        "q0.25": float(np.quantile(totals, 0.25)),
        "q0.5": float(np.quantile(totals, 0.5)),
        "q0.75": float(np.quantile(totals, 0.75)),
        "q0.975": float(np.quantile(totals, 0.975)),
    }
    return RichnessReport(True, "finite", mean_richness, bounds,
                          lifetime + 0.5 if math.isfinite(lifetime) else None,
                          float(np.mean(k / totals)), k / mean_richness,
                          summary, n, k)


def richness(params_or_draws, n: int, k: int, tail_tol: float = 1e-12,
             covariates=None) -> RichnessReport:
    """Total discoverable count, as k plus the tail of discovery probabilities.

    Accepts plug-in parameters or posterior draws; with multi-site draws the
    site's covariate vector selects the curve. A divergent parameter set
    produces a report flagged infinite rather than an exception.
    """
    if n < 0 or k < 0 or (n > 0 and k > n):
        raise ParameterError("need 0 <= k <= n")
    if tail_tol <= 0:
        raise ParameterError("tail_tol must be positive")
    if isinstance(params_or_draws, SurvivalParams):
        return _plugin_richness(params_or_draws, n, k, tail_tol)
    if isinstance(params_or_draws, PosteriorDraws):
        return _draws_richness(params_or_draws, n, k, tail_tol, covariates)
    raise ParameterError("expected SurvivalParams or PosteriorDraws")


def saturation(params_or_draws, n: int, k: int, tail_tol: float = 1e-12,
               covariates=None) -> float:
    """Fraction of the discoverable total already seen, in (0, 1].

    Raises in the divergent regime: the ratio is only meaningful when the
    total is finite (consider the ll3 family there).
    """
    report = richness(params_or_draws, n, k, tail_tol, covariates)
    if not report.finite:
        raise RegimeError("saturation undefined in the infinite-discovery regime; "
                          "fit a damped (ll3) model to estimate it")
    return float(report.saturation)


def required_additional_samples(params: SurvivalParams, n: int, k: int,
                                target_saturation: float, tail_tol: float = 1e-12,
                                max_m: int = 100_000_000) -> int:
    """Smallest m whose expected coverage reaches the target saturation.

    Solves E(K_{n+m} | data) / E(K_inf | data) >= target for the smallest
    integer m by scanning the monotone partial tail sums in growing blocks.
    Returns 0 when the target is already met.
    """
    if not 0.0 < target_saturation < 1.0:
        raise ParameterError("target saturation must be in (0, 1)")
    report = richness(params, n, k, tail_tol)
    if not report.finite:
        raise RegimeError("sampling-effort planning requires the finite regime")
    total = report.mean
    goal = target_saturation * total - k  # partial tail sum to reach
    if goal <= 0:
        return 0
    beta = params.beta
    acc = 0.0
    m_done = 0
    chunk = 1024
    while m_done < max_m:
        ts = np.arange(n + m_done, n + m_done + chunk, dtype=float)
        vals = expit(beta[0] + beta[1] * np.log(ts) + beta[2] * ts)
        csum = acc + np.cumsum(vals)
        if csum[-1] >= goal:
            return m_done + int(np.searchsorted(csum, goal, side="left")) + 1
        acc = float(csum[-1])
        m_done += chunk
        chunk = min(2 * chunk, 1 << 20)
    raise ParameterError(f"target {target_saturation} not reached within m = {max_m}")
