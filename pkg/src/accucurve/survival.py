"""Log-logistic survival families that direct discovery probabilities.

A discovery-probability sequence pi_1, pi_2, ... is obtained from a strictly
decreasing survival function S on [0, inf) via pi_i = S(i - 1), so pi_1 = 1
and the probabilities decay to zero. Three nested log-logistic families are
provided:

    ll1:  S(t) = alpha / (alpha + t)
    ll2:  S(t) = alpha / (alpha + t^(1 - sigma))
    ll3:  S(t) = alpha phi^t / (alpha phi^t + t^(1 - sigma))

with alpha > 0, sigma < 1 and 0 < phi <= 1. Setting phi = 1 recovers ll2 and
additionally sigma = 0 recovers ll1. On the log-odds scale every family is
linear in (1, log t, t):

    log S(t) / {1 - S(t)} = beta0 + beta1 log t + beta2 t,

with beta0 = log alpha, beta1 = sigma - 1 < 0 and beta2 = log phi <= 0. That
linearity is what makes exact logistic-regression machinery applicable
downstream.

The number of distinct labels eventually discovered is finite exactly when
the mean E(T) of the underlying lifetime distribution is finite, which here
means phi < 1, or phi = 1 with sigma < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import expit

from .errors import ParameterError, RegimeError

FAMILIES = ("ll1", "ll2", "ll3")

# numeric guards used when mapping from unconstrained beta space; they keep
# 1 - sigma away from 0 and phi away from underflow, and are not model limits
_BETA1_MAX = -1e-9
_LOG_PHI_MIN = math.log(1e-12)

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-10, limit=200)


@dataclass(frozen=True)
class RegimeReport:
    """Asymptotic behaviour of the accumulation curve for one parameter set.

    regime
        "finite" when the curve converges to a finite count, else "infinite".
    expected_lifetime
        E(T) = integral of S; may be math.inf.
    growth_exponent
        sigma when the divergent curve grows polynomially (sigma > 0),
        None otherwise (logarithmic growth, or finite regime).
    """

    regime: str
    expected_lifetime: float
    growth_exponent: float | None = None

    @property
    def finite(self) -> bool:
        return self.regime == "finite"


@dataclass(frozen=True)
class SurvivalParams:
    """Parameters of one log-logistic family member.

    Use the ``ll1`` / ``ll2`` / ``ll3`` constructors rather than the raw
    dataclass; they pin the fixed components of the nested families.
    """

    family: str
    alpha: float
    sigma: float = 0.0
    phi: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be positive and finite, got {self.alpha}")
        if not (np.isfinite(self.sigma) and self.sigma < 1):
            raise ParameterError(f"sigma must be < 1, got {self.sigma}")
        if not (0 < self.phi <= 1):
            raise ParameterError(f"phi must be in (0, 1], got {self.phi}")
        if self.family == "ll1" and (self.sigma != 0.0 or self.phi != 1.0):
            raise ParameterError("ll1 fixes sigma = 0 and phi = 1")
        if self.family == "ll2" and self.phi != 1.0:
            raise ParameterError("ll2 fixes phi = 1")

    @classmethod
    def ll1(cls, alpha: float) -> "SurvivalParams":
        return cls("ll1", float(alpha))

    @classmethod
    def ll2(cls, alpha: float, sigma: float) -> "SurvivalParams":
        return cls("ll2", float(alpha), float(sigma))

    @classmethod
    def ll3(cls, alpha: float, sigma: float, phi: float) -> "SurvivalParams":
        return cls("ll3", float(alpha), float(sigma), float(phi))

    # -- beta reparameterization ------------------------------------------

    @property
    def beta(self) -> np.ndarray:
        """Log-odds coefficients (log alpha, sigma - 1, log phi)."""
        return np.array([math.log(self.alpha), self.sigma - 1.0, math.log(self.phi)])

    @classmethod
    def from_beta(cls, family: str, beta) -> "SurvivalParams":
        """Invert the beta map, clamping at the numeric guard rails."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (3,):
            raise ParameterError("beta must have three components")
        if family == "ll1":
            return cls.ll1(math.exp(beta[0]))
        b1 = min(float(beta[1]), _BETA1_MAX)
        if family == "ll2":
            return cls.ll2(math.exp(beta[0]), 1.0 + b1)
        b2 = min(max(float(beta[2]), _LOG_PHI_MIN), 0.0)
        return cls.ll3(math.exp(beta[0]), 1.0 + b1, math.exp(b2))

    # -- core evaluations --------------------------------------------------

    def log_odds(self, t):
        """beta0 + beta1 log t + beta2 t, defined for t > 0."""
        t = np.asarray(t, dtype=float)
        b0, b1, b2 = self.beta
        return b0 + b1 * np.log(t) + b2 * t

    def survival(self, t):
        """S(t); accepts scalars or arrays of t >= 0 and returns values in (0, 1].

        S(0) = 1 exactly for every member of the family (the convention
        0^(1 - sigma) = 0 removes the t = 0 singularity).
        """
        t_arr = np.asarray(t, dtype=float)
        if (t_arr < 0).any():
            raise ParameterError("survival is defined for t >= 0")
        positive = t_arr > 0
        out = np.ones_like(t_arr)
        if positive.any():
            out[positive] = expit(self.log_odds(t_arr[positive]))
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(out)
        return out

    def discovery_probs(self, n: int) -> np.ndarray:
        """Probability that observation i is a new discovery, i = 1..n."""
        if n < 1:
            raise ParameterError("n must be >= 1")
        return self.survival(np.arange(n, dtype=float))

    # -- asymptotics ---------------------------------------------------------

    def expected_lifetime(self) -> float:
        """E(T) = integral of S over [0, inf); math.inf in the divergent regime."""
        if self.phi == 1.0:
            if self.sigma >= 0:
                return math.inf
            # closed form for the two-parameter family with sigma < 0
            c = 1.0 - self.sigma
            return self.alpha ** (1.0 / c) * math.pi / (c * math.sin(math.pi / c))
        return self._integrate_survival_to_inf(0.0)

    def classify_regime(self) -> RegimeReport:
        finite = self.phi < 1.0 or self.sigma < 0.0
        lifetime = self.expected_lifetime()
        growth = None
        if not finite and self.sigma > 0:
            growth = self.sigma
        return RegimeReport("finite" if finite else "infinite", lifetime, growth)

    def growth_rate(self, n: int) -> float:
        """Deterministic growth benchmark b_n = integral of S(t - 1) over [1, n].

        Only meaningful in the divergent regime; the accumulation curve
        divided by b_n converges to 1.
        """
        if n < 1:
            raise ParameterError("n must be >= 1")
        report = self.classify_regime()
        if report.finite:
            raise RegimeError("growth rate is defined only in the infinite-discovery regime")
        if self.family == "ll1":
            return self.alpha * (math.log(self.alpha + n - 1.0) - math.log(self.alpha))
        return self._integrate_survival(0.0, float(n - 1))

    # -- quadrature helpers --------------------------------------------------

    def _scalar_survival(self, t: float) -> float:
        if t <= 0:
            return 1.0
        return float(expit(self.beta[0] + self.beta[1] * math.log(t) + self.beta[2] * t))

    def _integrate_survival(self, lo: float, hi: float) -> float:
        """Integrate S over [lo, hi] on dyadic panels (robust across scales)."""
        if hi <= lo:
            return 0.0
        total = 0.0
        left = lo
        right = max(lo + 1.0, 1.0)
        while left < hi:
            seg_hi = min(right, hi)
            val, _ = quad(self._scalar_survival, left, seg_hi, **_QUAD_OPTS)
            total += val
            left = seg_hi
            right *= 2.0
        return total

    def _integrate_survival_to_inf(self, lo: float) -> float:
        """Integrate S over [lo, inf) when phi < 1, with an analytic tail.

        The truncation point is pushed out until S drops below 1e-12; beyond
        it S(t) <= alpha phi^t t^(sigma-1), whose integral is added as the
        (asymptotically tight) remainder.
        """
        t_max = max(lo + 1.0, 2.0)
        while self._scalar_survival(t_max) > 1e-12:
            t_max *= 2.0
            if t_max > 1e16:  # phi extremely close to 1
                break
        total = self._integrate_survival(lo, t_max)
        log_tail = (math.log(self.alpha) + (self.sigma - 1.0) * math.log(t_max)
                    + t_max * math.log(self.phi) - math.log(-math.log(self.phi)))
        if log_tail > -745.0:
            total += math.exp(log_tail)
        return total

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        """JSON form; the beta coefficients are included read-only."""
        return {
            "family": self.family,
            "alpha": self.alpha,
            "sigma": self.sigma,
            "phi": self.phi,
            "beta": [float(b) for b in self.beta],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SurvivalParams":
        return cls(payload["family"], float(payload["alpha"]),
                   float(payload.get("sigma", 0.0)), float(payload.get("phi", 1.0)))
