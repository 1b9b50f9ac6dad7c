"""Likelihood evaluation, maximum likelihood and Gibbs posterior sampling.

The discovery indicators D_2..D_n are independent Bernoulli with log-odds
linear in (1, log i, i), i = 1..n-1 (D_1 is deterministic and excluded). All
fitting therefore reduces to logistic regression with sign constraints on
the slope coefficients: beta1 < 0 and beta2 <= 0. Maximum likelihood uses
Newton iterations with step halving; Bayesian fits alternate Polya-gamma
latent draws with constrained Gaussian updates of the coefficients.

In the covariate model the three coefficients of site l are inner products
of its covariate vector with shared vectors gamma0, gamma1, gamma2, and the
constraints must hold site by site.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError, ParameterError, SeparationError
from .samplers import SignConstraints, _pg_vector, _tmvn_from_precision, feasible_point
from .sequences import DiscoverySequence, SiteDataset
from .survival import SurvivalParams, _BETA1_MAX

_FAMILY_FREE = {"ll1": (0,), "ll2": (0, 1), "ll3": (0, 1, 2)}
_MIN_N = {"ll1": 2, "ll2": 3, "ll3": 4}
_FULL_START = np.array([0.0, -1.0, 0.0])  # the ll1 special case beta = (0, -1, 0)
_BETA_NAMES = ("beta0", "beta1", "beta2")


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def design_matrix(n: int) -> np.ndarray:
    """Rows (1, log i, i) for i = 1..n-1, pairing with responses D_2..D_n."""
    if n < 2:
        raise ParameterError("need at least two observations to build a design")
    i = np.arange(1, n, dtype=float)
    return np.column_stack([np.ones(n - 1), np.log(i), i])


def multisite_design(data: SiteDataset) -> tuple[np.ndarray, np.ndarray]:
    """Stacked design and responses for the covariate model.

    Site l contributes rows (z_l, z_l log i, z_l i) for i = 1..n_l - 1.
    """
    blocks, responses = [], []
    for site in data:
        base = design_matrix(site.sequence.n)
        blocks.append(np.kron(base, site.covariates[None, :]))
        responses.append(site.sequence.indicators[1:].astype(float))
    return np.vstack(blocks), np.concatenate(responses)


def family_constraints(family: str) -> SignConstraints:
    """Sign constraints beta1 < 0, beta2 <= 0 in the family's free coordinates."""
    if family == "ll1":
        return SignConstraints.none(1)
    if family == "ll2":
        return SignConstraints(np.array([[0.0, 1.0]]), np.array([True]))
    if family == "ll3":
        return SignConstraints(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                               np.array([True, False]))
    raise ParameterError(f"unknown family {family!r}")


def multisite_constraints(covariates: np.ndarray) -> SignConstraints:
    """Per-site constraints z.gamma1 < 0 and z.gamma2 <= 0 in gamma space."""
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    n_sites, p = covariates.shape
    rows, strict = [], []
    for z in covariates:
        rows.append(np.concatenate([np.zeros(p), z, np.zeros(p)]))
        strict.append(True)
        rows.append(np.concatenate([np.zeros(p), np.zeros(p), z]))
        strict.append(False)
    return SignConstraints(np.array(rows), np.array(strict))


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------

def loglik_beta(beta, d: DiscoverySequence) -> float:
    """Bernoulli log likelihood of D_2..D_n at log-odds coefficients beta."""
    if d.n == 1:
        return 0.0
    beta = np.asarray(beta, dtype=float)
    i = np.arange(1, d.n, dtype=float)
    eta = beta[0] + beta[1] * np.log(i) + beta[2] * i
    y = d.indicators[1:].astype(float)
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def loglik_gamma(gamma, data: SiteDataset) -> float:
    """Total log likelihood across sites at shared coefficient vector gamma."""
    gamma = np.asarray(gamma, dtype=float)
    p = data.covariate_dim
    total = 0.0
    for site in data:
        beta = np.array([site.covariates @ gamma[:p],
                         site.covariates @ gamma[p:2 * p],
                         site.covariates @ gamma[2 * p:]])
        total += loglik_beta(beta, site.sequence)
    return total


def log_likelihood(params: SurvivalParams, d: DiscoverySequence) -> float:
    """Log likelihood of a discovery sequence under one parameter set.

    The deterministic first indicator contributes nothing; a length-one
    sequence has log likelihood 0.
    """
    return loglik_beta(params.beta, d)


# ---------------------------------------------------------------------------
# Maximum likelihood
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Outcome of a maximum-likelihood fit.

    ``covariance`` is the inverse observed information over the coefficients
    that were free in the final fit (``free_columns`` names them).
    ``fixed_point_gap`` is |sum_i S(i-1) - k| at the estimate; it vanishes
    for unconstrained converged fits because the intercept score equation is
    exactly that identity.
    """

    params: SurvivalParams
    beta: np.ndarray
    covariance: np.ndarray
    free_columns: tuple[str, ...]
    converged: bool
    constraint_active: bool
    loglik: float
    n_iterations: int
    fixed_point_gap: float

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "beta": [float(b) for b in self.beta],
            "covariance": [[float(v) for v in row] for row in self.covariance],
            "free_columns": list(self.free_columns),
            "converged": self.converged,
            "constraint_active": self.constraint_active,
            "loglik": self.loglik,
            "n_iterations": self.n_iterations,
            "fixed_point_gap": self.fixed_point_gap,
        }


def _newton_logistic(X, y, offset, start, grad_tol, max_iter):
    """Newton with step halving on the logistic log likelihood."""

    def nll(b):
        eta = X @ b + offset
        return float(np.logaddexp(0.0, eta).sum() - y @ eta)

    beta = np.asarray(start, dtype=float).copy()
    value = nll(beta)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = X @ beta + offset
        p = expit(eta)
        grad = X.T @ (y - p)
        if np.abs(grad).max() < grad_tol:
            break
        w = p * (1.0 - p)
        hess = X.T @ (X * w[:, None])
        try:
            direction = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            ridge = (np.trace(hess) / hess.shape[0]) * 1e-10 + 1e-12
            direction = np.linalg.solve(hess + ridge * np.eye(beta.size), grad)
        if np.abs(grad).max() < 1e-4:
            # terminal basin: objective changes fall below float resolution,
            # but the pure Newton step still contracts the gradient quadratically
            # (the log likelihood is globally concave)
            beta = beta + direction
            value = nll(beta)
            continue
        step = 1.0
        while step > 2.0 ** -45:
            candidate = beta + step * direction
            cand_value = nll(candidate)
            if cand_value < value:
                beta, value = candidate, cand_value
                break
            step *= 0.5
        else:
            break  # no descent possible at floating precision

    eta = X @ beta + offset
    p = expit(eta)
    grad = X.T @ (y - p)
    w = p * (1.0 - p)
    hess = X.T @ (X * w[:, None])
    converged = bool(np.abs(grad).max() < grad_tol)
    return beta, hess, converged, iterations


def fit_mle(d: DiscoverySequence, family: str, grad_tol: float = 1e-8,
            max_iter: int = 100) -> FitResult:
    """Constrained maximum likelihood through the logistic representation.

    The unconstrained optimum is computed first (started from the beta =
    (0, -1, 0) special case); if it violates beta1 < 0 or beta2 <= 0 the
    offending coefficient is pinned to its boundary and the rest refit.
    """
    if family not in _FAMILY_FREE:
        raise ParameterError(f"unknown family {family!r}")
    if d.n < _MIN_N[family]:
        raise ParameterError(f"{family} needs at least {_MIN_N[family]} observations, got {d.n}")
    y = d.indicators[1:].astype(float)
    if y.all():
        raise SeparationError("every response is a discovery: the likelihood is monotone "
                              "in alpha (complete separation)")
    if not y.any():
        raise SeparationError("no discoveries after the first observation: complete separation")

    V = design_matrix(d.n)
    free = list(_FAMILY_FREE[family])

    def solve(free_cols, pinned):
        full = _FULL_START.copy()
        for j, v in pinned.items():
            full[j] = v
        fixed_cols = [j for j in range(3) if j not in free_cols]
        offset = V[:, fixed_cols] @ full[fixed_cols] if fixed_cols else np.zeros(V.shape[0])
        beta_free, hess, converged, iterations = _newton_logistic(
            V[:, free_cols], y, offset, full[free_cols], grad_tol, max_iter)
        full[free_cols] = beta_free
        return full, hess, converged, iterations

    # pin boundary coefficients iteratively: a violating optimum, or Newton
    # drifting off to +infinity through the constraint, both land here
    pinned: dict[int, float] = {}
    while True:
        final_free = [j for j in free if j not in pinned]
        beta_full, hess, converged, iterations = solve(final_free, pinned)
        new_pins = {}
        if 1 in final_free and beta_full[1] >= 0.0:
            new_pins[1] = _BETA1_MAX
        if 2 in final_free and beta_full[2] > 0.0:
            new_pins[2] = 0.0
        if not new_pins:
            if not converged:
                raise ConvergenceError(
                    f"Newton did not converge within {max_iter} iterations for family {family}")
            break
        pinned.update(new_pins)
    constraint_active = bool(pinned)

    params = SurvivalParams.from_beta(family, beta_full)
    gap = abs(float(params.discovery_probs(d.n).sum()) - d.k)
    return FitResult(
        params=params,
        beta=beta_full,
        covariance=np.linalg.inv(hess),
        free_columns=tuple(_BETA_NAMES[j] for j in final_free),
        converged=converged,
        constraint_active=constraint_active,
        loglik=loglik_beta(beta_full, d),
        n_iterations=iterations,
        fixed_point_gap=gap,
    )


# ---------------------------------------------------------------------------
# Priors and posterior draws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PriorSpec:
    """Gaussian prior restricted by sign constraints.

    The covariance must be symmetric positive definite and the constraint
    region non-empty (checked by projecting the mean into it).
    """

    mean: np.ndarray
    covariance: np.ndarray
    constraints: SignConstraints

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ParameterError("prior covariance shape does not match the mean")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ParameterError("prior covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ParameterError("prior covariance must be positive definite") from exc
        if not self.constraints.empty and self.constraints.dim != mean.size:
            raise ParameterError("constraint dimension does not match the prior")
        feasible_point(mean, self.constraints)  # raises if the region is empty
        mean = mean.copy()
        mean.flags.writeable = False
        cov = cov.copy()
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def default(cls, family: str, sd: float = 10.0) -> "PriorSpec":
        """Independent zero-mean components with the given standard deviation."""
        q = len(_FAMILY_FREE[family])
        return cls(np.zeros(q), np.eye(q) * sd ** 2, family_constraints(family))

    @classmethod
    def default_multisite(cls, covariates, sd: float = 10.0) -> "PriorSpec":
        covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
        q = 3 * covariates.shape[1]
        return cls(np.zeros(q), np.eye(q) * sd ** 2, multisite_constraints(covariates))


@dataclass
class PosteriorDraws:
    """Retained MCMC draws plus per-draw log likelihoods.

    Single-site draws are stored as full (beta0, beta1, beta2) rows even for
    the restricted families, with the fixed components constant. Multi-site
    draws hold the stacked gamma vector (gamma0, gamma1, gamma2 blocks).
    """

    draws: np.ndarray
    loglik: np.ndarray
    columns: tuple[str, ...]
    kind: str                      # "single" | "multisite"
    family: str | None
    loglik_at_mean: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.asarray(self.draws, dtype=float)
        self.loglik = np.asarray(self.loglik, dtype=float)
        if self.draws.ndim != 2 or self.draws.shape[0] != self.loglik.size:
            raise ParameterError("draws and loglik sizes disagree")
        if self.draws.shape[1] != len(self.columns):
            raise ParameterError("column names do not match the draw matrix")

    @property
    def n_draws(self) -> int:
        return int(self.draws.shape[0])

    def posterior_mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)

    def beta_full(self) -> np.ndarray:
        if self.kind != "single":
            raise ParameterError("beta_full applies to single-site draws")
        return self.draws

    def site_betas(self, covariates) -> np.ndarray:
        """Per-draw (beta0, beta1, beta2) implied for one site's covariates."""
        if self.kind != "multisite":
            raise ParameterError("site_betas applies to multi-site draws")
        z = np.asarray(covariates, dtype=float)
        p = z.size
        return np.column_stack([self.draws[:, :p] @ z,
                                self.draws[:, p:2 * p] @ z,
                                self.draws[:, 2 * p:] @ z])

    def thin(self, max_draws: int) -> "PosteriorDraws":
        if self.n_draws <= max_draws:
            return self
        idx = np.unique(np.linspace(0, self.n_draws - 1, max_draws).round().astype(int))
        return PosteriorDraws(self.draws[idx], self.loglik[idx], self.columns,
                              self.kind, self.family, self.loglik_at_mean, dict(self.meta))


def dic(draws: PosteriorDraws) -> float:
    """Deviance information criterion from retained draws.

    The plug-in point is the posterior mean in coefficient space; the
    effective number of parameters is twice the gap between the plug-in log
    likelihood and the posterior mean log likelihood.
    """
    if draws.loglik is None or draws.loglik.size < 2:
        raise ParameterError("DIC needs at least two retained draws with log-likelihoods")
    if not np.isfinite(draws.loglik_at_mean):
        raise ParameterError("draws are missing the plug-in log likelihood")
    mean_ll = float(draws.loglik.mean())
    ll_bar = float(draws.loglik_at_mean)
    p_d = 2.0 * (ll_bar - mean_ll)
    return -2.0 * ll_bar + 2.0 * p_d


# ---------------------------------------------------------------------------
# Gibbs samplers
# ---------------------------------------------------------------------------

def _pg_gibbs(V, y, offset, prior: PriorSpec, iters: int, burn: int,
              rng: np.random.Generator, start) -> tuple[np.ndarray, np.ndarray, dict]:
    """Shared Polya-gamma Gibbs engine on one logistic design.

    Alternates latent PG(1, eta_i) draws with a constrained Gaussian update
    whose precision is V' Omega V + prior precision and whose shift combines
    the centred responses with the prior mean.
    """
    if burn < 0 or iters <= burn:
        raise ParameterError("need iters > burn >= 0")
    kappa = y - 0.5
    prior_prec = np.linalg.inv(prior.covariance)
    prior_shift = prior_prec @ prior.mean
    beta = feasible_point(np.asarray(start, dtype=float), prior.constraints)
    keep = iters - burn
    q = beta.size
    draws = np.empty((keep, q))
    loglik = np.empty(keep)
    eta = V @ beta + offset
    rejections = 0
    fallbacks = 0
    for r in range(iters):
        omega = _pg_vector(eta, rng)
        precision = V.T @ (V * omega[:, None]) + prior_prec
        shift = V.T @ (kappa - omega * offset) + prior_shift
        chol = np.linalg.cholesky(precision)
        half = np.linalg.solve(chol, shift)
        mean = np.linalg.solve(chol.T, half)
        beta, n_rej, used_fallback = _tmvn_from_precision(
            mean, precision, chol, prior.constraints, rng)
        rejections += n_rej
        fallbacks += int(used_fallback)
        eta = V @ beta + offset
        if r >= burn:
            i = r - burn
            draws[i] = beta
            loglik[i] = y @ eta - np.logaddexp(0.0, eta).sum()
    diagnostics = {"tmvn_rejections": rejections, "tmvn_fallback_draws": fallbacks}
    return draws, loglik, diagnostics


def gibbs_single(d: DiscoverySequence, prior: PriorSpec | None = None,
                 iters: int = 15000, burn: int = 5000, rng=0,
                 family: str = "ll3") -> PosteriorDraws:
    """Posterior sampling for one accumulation curve.

    Returns full (beta0, beta1, beta2) rows; the components fixed by the
    restricted families stay at their pinned values. Identical seeds yield
    bit-identical chains.
    """
    if family not in _FAMILY_FREE:
        raise ParameterError(f"unknown family {family!r}")
    if d.n < 2:
        raise ParameterError("need at least two observations")
    rng = _as_generator(rng)
    prior = prior if prior is not None else PriorSpec.default(family)
    free = list(_FAMILY_FREE[family])
    if prior.mean.size != len(free):
        raise ParameterError(f"prior dimension {prior.mean.size} does not match family {family}")
    V3 = design_matrix(d.n)
    fixed_cols = [j for j in range(3) if j not in free]
    offset = V3[:, fixed_cols] @ _FULL_START[fixed_cols] if fixed_cols else np.zeros(V3.shape[0])
    y = d.indicators[1:].astype(float)
    free_draws, loglik, diagnostics = _pg_gibbs(
        np.ascontiguousarray(V3[:, free]), y, offset, prior, iters, burn, rng,
        _FULL_START[free])
    if not prior.constraints.satisfied_rows(free_draws).all():
        raise AssertionError("retained draws violate the sign constraints")
    full = np.tile(_FULL_START, (free_draws.shape[0], 1))
    full[:, free] = free_draws
    mean_free = free_draws.mean(axis=0)
    beta_bar = _FULL_START.copy()
    beta_bar[free] = mean_free
    meta = {"n": d.n, "k": d.k, "iters": iters, "burn": burn, "family": family}
    meta.update(diagnostics)
    return PosteriorDraws(full, loglik, _BETA_NAMES, "single", family,
                          loglik_beta(beta_bar, d), meta)


def gibbs_multisite(data: SiteDataset, prior: PriorSpec | None = None,
                    iters: int = 15000, burn: int = 5000, rng=0) -> PosteriorDraws:
    """Posterior sampling for covariate-dependent accumulation curves.

    Every retained gamma draw satisfies z_l . gamma1 < 0 and
    z_l . gamma2 <= 0 for every site l.
    """
    rng = _as_generator(rng)
    Z = data.covariate_matrix()
    p = data.covariate_dim
    prior = prior if prior is not None else PriorSpec.default_multisite(Z)
    if prior.mean.size != 3 * p:
        raise ParameterError(f"prior dimension {prior.mean.size} does not match 3p = {3 * p}")
    V, y = multisite_design(data)
    start = np.zeros(3 * p)
    start[p] = -1.0  # gamma1 intercept; projected to feasibility either way
    draws, loglik, diagnostics = _pg_gibbs(
        V, y, np.zeros(V.shape[0]), prior, iters, burn, rng, start)
    if not prior.constraints.satisfied_rows(draws).all():
        raise AssertionError("retained draws violate the site constraints")
    columns = tuple(f"gamma{j}_{c + 1}" for j in range(3) for c in range(p))
    gamma_bar = draws.mean(axis=0)
    meta = {
        "iters": iters,
        "burn": burn,
        "covariate_dim": p,
        "sites": [{"site_id": s.site_id, "n": s.sequence.n, "k": s.sequence.k,
                   "z": [float(v) for v in s.covariates]} for s in data],
    }
    meta.update(diagnostics)
    return PosteriorDraws(draws, loglik, columns, "multisite", None,
                          loglik_gamma(gamma_bar, data), meta)


def merge_chains(chains: list[PosteriorDraws], loglik_at_mean: float) -> PosteriorDraws:
    """Concatenate post-burn-in draws of independent chains.

    The caller supplies the plug-in log likelihood at the pooled posterior
    mean (it depends on the data, which the draws do not carry).
    """
    if not chains:
        raise ParameterError("no chains to merge")
    first = chains[0]
    for other in chains[1:]:
        if other.columns != first.columns or other.kind != first.kind:
            raise ParameterError("chains disagree on layout")
    draws = np.vstack([c.draws for c in chains])
    loglik = np.concatenate([c.loglik for c in chains])
    meta = dict(first.meta)
    meta["chains"] = len(chains)
    meta["tmvn_rejections"] = sum(c.meta.get("tmvn_rejections", 0) for c in chains)
    meta["tmvn_fallback_draws"] = sum(c.meta.get("tmvn_fallback_draws", 0) for c in chains)
    return PosteriorDraws(draws, loglik, first.columns, first.kind, first.family,
                          loglik_at_mean, meta)


# ---------------------------------------------------------------------------
# Draws on disk
# ---------------------------------------------------------------------------

def draws_to_csv(draws: PosteriorDraws, path) -> None:
    """Write ``draw,<coefficients...>,loglik`` rows with full precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["draw", *draws.columns, "loglik"])
        for i in range(draws.n_draws):
            row = [i + 1]
            row.extend(format(v, ".17g") for v in draws.draws[i])
            row.append(format(draws.loglik[i], ".17g"))
            writer.writerow(row)


def draws_from_csv(path, kind: str, family: str | None,
                   loglik_at_mean: float, meta: dict | None = None) -> PosteriorDraws:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "draw" or header[-1] != "loglik":
            raise ParameterError(f"{path}: expected header 'draw,<coefficients>,loglik'")
        columns = tuple(header[1:-1])
        rows, lls = [], []
        for row in reader:
            if not row:
                continue
            rows.append([float(v) for v in row[1:-1]])
            lls.append(float(row[-1]))
    if not rows:
        raise ParameterError(f"{path}: no draws")
    return PosteriorDraws(np.array(rows), np.array(lls), columns, kind, family,
                          loglik_at_mean, meta or {})
