"""Random-variate samplers used by the Gibbs machinery.

Two primitives live here:

* exact Polya-gamma PG(1, z) draws via the alternating-series accept/reject
  method for the Jacobi-theta representation (proposals mix a truncated
  exponential tail with a truncated inverse Gaussian, and the series partial
  sums squeeze the target density from both sides);
* multivariate normal draws restricted by linear sign constraints, by
  rejection from the unconstrained normal with a coordinate-wise Gibbs
  fallback once a rejection budget is exhausted.

Everything is driven by a caller-supplied ``numpy.random.Generator``, so
identical seeds reproduce identical streams bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

from .errors import ParameterError

# truncation point of the piecewise Jacobi coefficient bounds
_T = 0.64
_SQRT_T = math.sqrt(_T)


def sample_polya_gamma(z, rng: np.random.Generator, size: int | None = None):
    """Exact draw(s) from PG(1, z).

    With ``size=None`` a single float is returned; otherwise an array of
    ``size`` independent draws at the same tilt. The mean of PG(1, z) is
    tanh(z/2) / (2z), which is what the moment-based tests check against.
    """
    z = float(z)
    if not np.isfinite(z):
        raise ParameterError("z must be finite")
    if size is None:
        return float(_pg_vector(np.full(1, z), rng)[0])
    return _pg_vector(np.full(int(size), z), rng)


def _pg_vector(z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vector of PG(1, z_i) draws, one per element of z."""
    zh = 0.5 * np.abs(np.asarray(z, dtype=float))
    rate = np.pi ** 2 / 8.0 + 0.5 * zh ** 2
    # mass ratio q/p between the inverse-Gaussian body and the exponential
    # tail of the proposal, computed in log space
    upper = (_T * zh - 1.0) / _SQRT_T
    lower = -(_T * zh + 1.0) / _SQRT_T
    base = np.log(rate) + rate * _T
    q_div_p = (4.0 / np.pi) * (np.exp(base - zh + log_ndtr(upper))
                               + np.exp(base + zh + log_ndtr(lower)))
    p_right = 1.0 / (1.0 + q_div_p)

    out = np.empty(zh.size)
    pending = np.arange(zh.size)
    while pending.size:
        m = pending.size
        take_right = rng.random(m) < p_right[pending]
        x = np.empty(m)
        n_right = int(take_right.sum())
        if n_right:
            x[take_right] = _T + rng.exponential(size=n_right) / rate[pending[take_right]]
        if n_right < m:
            x[~take_right] = _trunc_inv_gauss(zh[pending[~take_right]], rng)
        accept = _series_accept(x, rng)
        out[pending[accept]] = 0.25 * x[accept]
        pending = pending[~accept]
    return out


def _series_accept(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Alternating-series squeeze: True where the proposal is accepted.

    The piecewise coefficients share the form a_j(x) = pi (j + 1/2) * pref(x)
    * exp(-(j + 1/2)^2 * base(x)), with (pref, base) = ((2/(pi x))^{3/2},
    2/x) left of the truncation point and (1, pi^2 x / 2) right of it; the
    per-j work is then a single exp.
    """
    left = x <= _T
    base = np.where(left, 2.0 / x, 0.5 * np.pi ** 2 * x)
    arg = 2.0 / (np.pi * x)
    pref = np.where(left, arg * np.sqrt(arg), 1.0)

    def coef(j, idx):
        c = np.pi * (j + 0.5)
        return c * pref[idx] * np.exp(-((j + 0.5) ** 2) * base[idx])

    full = np.arange(x.size)
    partial = coef(0, full)
    y = rng.random(x.size) * partial
    accept = np.zeros(x.size, dtype=bool)
    undecided = full
    j = 0
    while undecided.size:
        j += 1
        if j % 2 == 1:
            partial[undecided] -= coef(j, undecided)
            hit = y[undecided] <= partial[undecided]
            accept[undecided[hit]] = True
            undecided = undecided[~hit]
        else:
            partial[undecided] += coef(j, undecided)
            reject = y[undecided] > partial[undecided]
            undecided = undecided[~reject]
    return accept


def _trunc_inv_gauss(zv: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-Gaussian IG(1/z, 1) draws truncated to (0, t].

    For 1/z > t the stable route is rejection from the scaled reciprocal
    chi-square restricted to (0, t], tilted by exp(-z^2 x / 2); otherwise
    the standard transform sampler is retried until it lands inside.
    """
    out = np.empty(zv.size)
    recip = zv < 1.0 / _T

    idx = np.flatnonzero(recip)
    while idx.size:
        e1 = rng.exponential(size=idx.size)
        e2 = rng.exponential(size=idx.size)
        inside = e1 * e1 <= 2.0 * e2 / _T
        cand = _T / (1.0 + _T * e1) ** 2
        accept = inside & (rng.random(idx.size) <= np.exp(-0.5 * zv[idx] ** 2 * cand))
        out[idx[accept]] = cand[accept]
        idx = idx[~accept]

    idx = np.flatnonzero(~recip)
    while idx.size:
        mu = 1.0 / zv[idx]
        y = rng.standard_normal(idx.size) ** 2
        muy = mu * y
        cand = mu * (1.0 + 0.5 * (muy - np.sqrt(4.0 * muy + muy * muy)))
        flip = rng.random(idx.size) > mu / (mu + cand)
        cand[flip] = mu[flip] ** 2 / cand[flip]
        accept = cand <= _T
        out[idx[accept]] = cand[accept]
        idx = idx[~accept]
    return out


# ---------------------------------------------------------------------------
# Constrained multivariate normal
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignConstraints:
    """Linear sign constraints: row . x < 0 (strict) or <= 0 per row."""

    matrix: np.ndarray
    strict: np.ndarray

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        strict = np.asarray(self.strict, dtype=bool).reshape(-1)
        if matrix.shape[0] != strict.size:
            raise ParameterError("one strictness flag per constraint row")
        matrix = matrix.copy()
        matrix.flags.writeable = False
        strict = strict.copy()
        strict.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "strict", strict)

    @classmethod
    def none(cls, dim: int) -> "SignConstraints":
        return cls(np.empty((0, dim)), np.empty(0, dtype=bool))

    @property
    def empty(self) -> bool:
        return self.matrix.shape[0] == 0

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def satisfied(self, x: np.ndarray) -> bool:
        if self.empty:
            return True
        s = self.matrix @ x
        return bool(np.all(np.where(self.strict, s < 0, s <= 0)))

    def satisfied_rows(self, xs: np.ndarray) -> np.ndarray:
        """Boolean mask over the rows of a (m, dim) candidate matrix."""
        if self.empty:
            return np.ones(xs.shape[0], dtype=bool)
        s = xs @ self.matrix.T
        return np.all(np.where(self.strict, s < 0, s <= 0), axis=1)

    def coordinate_bounds(self, j: int, x: np.ndarray) -> tuple[float, float]:
        """Interval for coordinate j keeping every constraint satisfied."""
        lo, hi = -np.inf, np.inf
        for row in self.matrix:
            a = row[j]
            if a == 0.0:
                continue
            rest = row @ x - a * x[j]
            bound = -rest / a
            if a > 0:
                hi = min(hi, bound)
            else:
                lo = max(lo, bound)
        return lo, hi


def feasible_point(mean: np.ndarray, constraints: SignConstraints,
                   margin: float = 1e-6, max_sweeps: int = 500) -> np.ndarray:
    """Project a point into the constraint region by cyclic projections."""
    x = np.asarray(mean, dtype=float).copy()
    if constraints.empty:
        return x
    for _ in range(max_sweeps):
        clean = True
        for row, strict in zip(constraints.matrix, constraints.strict):
            s = row @ x
            limit = -margin if strict else 0.0
            if s > limit:
                x = x - row * ((s - limit) / (row @ row))
                clean = False
        if clean and constraints.satisfied(x):
            return x
    raise ParameterError("constraint region appears empty (no feasible point found)")


def _trunc_norm_1d(mu: float, sd: float, lo: float, hi: float,
                   rng: np.random.Generator) -> float:
    """One truncated normal draw, robust in the far tails."""
    a = (lo - mu) / sd
    b = (hi - mu) / sd
    if a > b:
        raise ParameterError("empty truncation interval")
    if a < 8.0 and b > -8.0:
        fa = ndtr(a) if np.isfinite(a) else 0.0
        fb = ndtr(b) if np.isfinite(b) else 1.0
        u = fa + (fb - fa) * rng.random()
        u = min(max(u, 1e-15), 1.0 - 1e-15)
        return mu + sd * float(ndtri(u))
    # one-sided exponential rejection deep in a tail
    if a >= 8.0:
        while True:
            e = rng.exponential() / a
            if rng.random() <= math.exp(-0.5 * e * e) and (a + e) <= b:
                return mu + sd * (a + e)
    # mirror case: b <= -8, sample the reflected upper tail
    while True:
        e = rng.exponential() / (-b)
        if rng.random() <= math.exp(-0.5 * e * e) and (-b + e) <= -a:
            return mu + sd * (b - e)


def _tmvn_from_precision(mean: np.ndarray, precision: np.ndarray,
                         chol_lower: np.ndarray, constraints: SignConstraints,
                         rng: np.random.Generator, max_rejections: int = 1000,
                         gibbs_sweeps: int = 20) -> tuple[np.ndarray, int, bool]:
    """Constrained normal draw given the precision matrix and its Cholesky.

    Returns (draw, number of rejected proposals, whether the Gibbs fallback
    was used). Candidate draws are mean + L^-T xi with xi standard normal.
    """
    dim = mean.size
    if constraints.empty:
        xi = rng.standard_normal(dim)
        return mean + np.linalg.solve(chol_lower.T, xi), 0, False

    rejected = 0
    block = 1
    while rejected < max_rejections:
        xi = rng.standard_normal((block, dim))
        cand = mean + np.linalg.solve(chol_lower.T, xi.T).T
        good = constraints.satisfied_rows(cand)
        hits = np.flatnonzero(good)
        if hits.size:
            rejected += int(hits[0])
            return cand[hits[0]], rejected, False
        rejected += block
        block = min(4 * block, 256)

    # fallback: coordinate-wise Gibbs on the truncated conditionals
    x = feasible_point(mean, constraints)
    diag = np.diag(precision)
    for _ in range(gibbs_sweeps):
        for j in range(dim):
            cond_sd = 1.0 / math.sqrt(diag[j])
            shift = precision[j] @ (x - mean) - diag[j] * (x[j] - mean[j])
            cond_mean = mean[j] - shift / diag[j]
            lo, hi = constraints.coordinate_bounds(j, x)
            x[j] = _trunc_norm_1d(cond_mean, cond_sd, lo, hi, rng)
    if not constraints.satisfied(x):  # strictness can be lost to rounding
        x = feasible_point(x, constraints)
    return x, rejected, True


def sample_truncated_mvn(mean, cov, constraints: SignConstraints,
                         rng: np.random.Generator, max_rejections: int = 1000,
                         gibbs_sweeps: int = 20) -> np.ndarray:
    """Draw from N(mean, cov) restricted by linear sign constraints.

    Rejection from the unconstrained normal is attempted first; after
    ``max_rejections`` failed proposals a coordinate-wise Gibbs scan over
    univariate truncated normals takes over.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (mean.size, mean.size):
        raise ParameterError("covariance shape does not match the mean")
    try:
        precision = np.linalg.inv(cov)
        chol = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("covariance must be positive definite") from exc
    draw, _, _ = _tmvn_from_precision(mean, precision, chol, constraints, rng,
                                      max_rejections, gibbs_sweeps)
    return draw
