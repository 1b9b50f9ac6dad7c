"""Exact distribution of the distinct-label count.

The count after n observations is a sum of independent, non-identically
distributed Bernoulli indicators, i.e. Poisson-binomial. Two independent
computational routes are provided:

* ``PoissonBinomial`` builds the pmf by the standard O(n^2) convolution fold
  over the probability vector. This path works for any probability vector.
* ``distinct_count_pmf`` evaluates the closed form built from the triangular
  coefficient recurrence of the log-logistic families (a generalization of
  the signless Stirling numbers of the first kind). All coefficient math is
  carried out in log space, since phi^(-i) overflows rapidly for phi < 1.

Both routes must agree; that equivalence is one of the package's strongest
self-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ParameterError, RegimeError
from .survival import SurvivalParams

# beyond this size the coefficient route is refused; the convolution fold is
# the numerically authoritative general algorithm at scale
COEFFICIENT_N_CAP = 5000

_PMF_FLUSH = 1e-300  # denormal hygiene


class PoissonBinomial:
    """Distribution of a sum of independent Bernoulli trials.

    Parameters
    ----------
    probs : array_like
        Success probabilities, each in [0, 1].
    """

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or probs.size < 1:
            raise ParameterError("probs must be a non-empty 1-D vector")
        if not np.isfinite(probs).all() or (probs < 0).any() or (probs > 1).any():
            raise ParameterError("probabilities must lie in [0, 1]")
        self._probs = probs.copy()
        self._probs.flags.writeable = False
        self._pmf = _convolve_pmf(self._probs)
        self._pmf.flags.writeable = False
        self._cdf = np.cumsum(self._pmf)
        self._cdf[-1] = 1.0
        self._cdf.flags.writeable = False

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def n(self) -> int:
        return int(self._probs.size)

    @property
    def pmf(self) -> np.ndarray:
        """Probability of each count 0..n."""
        return self._pmf

    @property
    def cdf(self) -> np.ndarray:
        return self._cdf

    @property
    def mean(self) -> float:
        return float(self._probs.sum())

    @property
    def variance(self) -> float:
        return float((self._probs * (1.0 - self._probs)).sum())

    def quantile(self, q: float) -> int:
        """Smallest count whose cdf reaches q (left-continuous inverse)."""
        if not 0.0 < q < 1.0:
            raise ParameterError("quantile level must be in (0, 1)")
        return int(np.searchsorted(self._cdf, q, side="left"))

    def interval(self, level: float) -> tuple[int, int]:
        """Central interval from the (1 -/+ level)/2 quantiles."""
        if not 0.0 < level < 1.0:
            raise ParameterError("level must be in (0, 1)")
        return self.quantile((1.0 - level) / 2.0), self.quantile((1.0 + level) / 2.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Simulate counts by summing the underlying Bernoulli trials."""
        return (rng.random((size, self.n)) < self._probs).sum(axis=1)


def _convolve_pmf(probs: np.ndarray) -> np.ndarray:
    n = probs.size
    pmf = np.zeros(n + 1)
    buf = np.zeros(n + 1)
    pmf[0] = 1.0
    for j, p in enumerate(probs):
        top = j + 2  # counts 0..j+1 are reachable after j+1 trials
        np.multiply(pmf[:top], 1.0 - p, out=buf[:top])
        buf[1:top] += pmf[:top - 1] * p
        pmf, buf = buf, pmf
    total = pmf.sum()
    pmf /= total
    pmf[pmf < _PMF_FLUSH] = 0.0
    return pmf


@dataclass(frozen=True)
class LogCoefficientTable:
    """Triangular table of log polynomial-expansion coefficients.

    Row m holds the log coefficients of alpha^k in the expansion of
    prod_{i=0}^{m-1} (alpha + i^(1-sigma) phi^(-i)); entries that are exactly
    zero are stored as -inf. With sigma = 0 and phi = 1 the entries are the
    signless Stirling numbers of the first kind.
    """

    n: int
    sigma: float
    phi: float
    log_values: np.ndarray

    def log(self, row: int, k: int) -> float:
        return float(self.log_values[row, k])

    def value(self, row: int, k: int) -> float:
        return float(np.exp(self.log_values[row, k]))


def coefficient_table(n: int, sigma: float, phi: float) -> LogCoefficientTable:
    """Fill the triangular recurrence in log space.

    The recurrence is row[m+1, k] = row[m, k-1] + w_m * row[m, k] with weight
    w_m = m^(1-sigma) phi^(-m), accumulated by log-sum-exp so that no entry
    ever overflows.
    """
    if n < 0:
        raise ParameterError("n must be >= 0")
    if not (np.isfinite(sigma) and sigma < 1):
        raise ParameterError(f"sigma must be < 1, got {sigma}")
    if not (0 < phi <= 1):
        raise ParameterError(f"phi must be in (0, 1], got {phi}")
    if n > COEFFICIENT_N_CAP:
        raise ParameterError(
            f"coefficient table capped at n = {COEFFICIENT_N_CAP}; "
            "use PoissonBinomial for larger n"
        )
    logv = np.full((n + 1, n + 1), -np.inf)
    logv[0, 0] = 0.0
    for m in range(n):
        if m == 0:
            log_w = -np.inf  # 0^(1-sigma) = 0 by convention
        else:
            log_w = (1.0 - sigma) * np.log(m) - m * np.log(phi)
        prev = logv[m]
        shifted = prev[0:m + 1]            # C_{m,k-1} for k = 1..m+1
        stay = log_w + prev[1:m + 2]       # w_m * C_{m,k}
        logv[m + 1, 1:m + 2] = np.logaddexp(shifted, stay)
    return LogCoefficientTable(n, float(sigma), float(phi), logv)


def _coefficient_row(n: int, sigma: float, phi: float) -> np.ndarray:
    """Last row of the coefficient table by a rolling two-row recurrence."""
    prev = np.full(n + 1, -np.inf)
    prev[0] = 0.0
    cur = np.full(n + 1, -np.inf)
    for m in range(n):
        log_w = -np.inf if m == 0 else (1.0 - sigma) * np.log(m) - m * np.log(phi)
        cur.fill(-np.inf)
        cur[1:m + 2] = np.logaddexp(prev[0:m + 1], log_w + prev[1:m + 2])
        cur[0] = -np.inf
        prev, cur = cur, prev
    return prev


def distinct_count_pmf(n: int, params: SurvivalParams) -> np.ndarray:
    """Exact pmf of the distinct count over 0..n via the coefficient route.

    Agrees with ``PoissonBinomial(params.discovery_probs(n)).pmf`` to within
    1e-10 absolute; the convolution path is the reference at large n.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if n > COEFFICIENT_N_CAP:
        raise ParameterError(
            f"coefficient route capped at n = {COEFFICIENT_N_CAP}; "
            "use PoissonBinomial for larger n"
        )
    sigma, phi, alpha = params.sigma, params.phi, params.alpha
    last_row = _coefficient_row(n, sigma, phi)
    i = np.arange(n, dtype=float)
    with np.errstate(divide="ignore"):
        log_weights = (1.0 - sigma) * np.log(i) - i * np.log(phi)
    log_alpha = np.log(alpha)
    log_den = np.logaddexp(log_alpha, log_weights).sum()
    k = np.arange(n + 1, dtype=float)
    log_pmf = k * log_alpha + last_row - log_den
    pmf = np.exp(log_pmf)
    pmf /= pmf.sum()
    pmf[pmf < _PMF_FLUSH] = 0.0
    return pmf


def normal_approx_interval(params: SurvivalParams, n: int, level: float) -> tuple[float, float]:
    """Central-limit interval mean -/+ z * sd for the distinct count.

    ``z`` is the standard normal ``level`` quantile, so level = 0.5 gives a
    zero-width interval at the mean. Only valid in the divergent regime,
    where the central limit theorem holds.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0.5 <= level < 1.0:
        raise ParameterError("level must be in [0.5, 1)")
    if params.classify_regime().finite:
        raise RegimeError("normal approximation requires the infinite-discovery regime")
    probs = params.discovery_probs(n)
    mean = float(probs.sum())
    sd = float(np.sqrt((probs * (1.0 - probs)).sum()))
    z = float(ndtri(level))
    return mean - z * sd, mean + z * sd
