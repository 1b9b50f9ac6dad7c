"""Synthetic tag sequences from classical species-sampling mechanisms.

Four generators produce full tag sequences (fresh labels are consecutive
integers rendered as strings) and one draws indicator sequences directly
from a fitted survival model. All randomness flows through numpy's default
PCG64 generator: one fresh ``default_rng(seed)`` per call, so a given seed
always reproduces the same output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .sequences import DiscoverySequence, indicators_from_tags
from .survival import SurvivalParams

KINDS = ("dirichlet", "pitman-yor", "dirichlet-multinomial", "zipf", "model")


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_dirichlet(alpha: float, n: int, seed) -> list[str]:
    """Sequential scheme: new label w.p. alpha/(alpha + i - 1), else copy a
    uniformly chosen previous observation."""
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = _as_generator(seed)
    u_new = rng.random(n)
    u_copy = rng.random(n)
    prev = np.arange(n, dtype=float)  # number of earlier observations at each step
    is_new = u_new * (alpha + prev) < alpha
    tags: list[str] = []
    fresh = 0
    for i in range(n):
        if is_new[i]:
            fresh += 1
            tags.append(str(fresh))
        else:
            tags.append(tags[min(int(u_copy[i] * i), i - 1)])
    return tags


def simulate_pitman_yor(alpha: float, sigma: float, n: int, seed) -> list[str]:
    """Two-parameter scheme: new label w.p. (alpha + k sigma)/(alpha + i - 1)
    given k distinct so far, existing label j w.p. (n_j - sigma)/(alpha + i - 1).

    The existing-label mass splits as (n_j - sigma) = (1 - sigma) + (n_j - 1),
    so the choice reduces to a uniform pick over either the k distinct labels
    or the previous repeat events; both lists grow by appending only.
    """
    if not 0.0 <= sigma < 1.0:
        raise ParameterError("pitman-yor needs sigma in [0, 1)")
    if alpha <= -sigma:
        raise ParameterError("pitman-yor needs alpha > -sigma")
    if n < 1:
        raise ParameterError("n must be >= 1")
    return _py_scheme(alpha, sigma, n, _as_generator(seed))


def simulate_dirichlet_multinomial(sigma: float, H: int, n: int, seed) -> list[str]:
    """Finite-support variant: sigma < 0 with alpha = H |sigma|.

    At most H distinct labels can appear; the new-label probability hits
    zero exactly when all H have been seen.
    """
    if sigma >= 0:
        raise ParameterError("dirichlet-multinomial needs sigma < 0")
    if H < 1:
        raise ParameterError("H must be >= 1")
    if n < 1:
        raise ParameterError("n must be >= 1")
    return _py_scheme(H * abs(sigma), sigma, n, _as_generator(seed))


def _py_scheme(alpha: float, sigma: float, n: int, rng: np.random.Generator) -> list[str]:
    u_new = rng.random(n)
    u_pick = rng.random(n)
    distinct: list[str] = []
    repeats: list[str] = []
    tags: list[str] = []
    for i in range(n):
        prev = i
        k = len(distinct)
        if u_new[i] * (alpha + prev) < alpha + k * sigma:
            label = str(k + 1)
            distinct.append(label)
        else:
            w = u_pick[i] * (prev - k * sigma)
            cut = k * (1.0 - sigma)
            if w < cut:
                label = distinct[min(int(w / (1.0 - sigma)), k - 1)]
            else:
                label = repeats[min(int(w - cut), len(repeats) - 1)]
            repeats.append(label)
        tags.append(label)
    return tags


def simulate_zipf(H: int, shape: float, n: int, seed) -> list[str]:
    """Independent draws with pr(label j) proportional to j^(-shape), j = 1..H."""
    if H < 1:
        raise ParameterError("H must be >= 1")
    if shape <= 0:
        raise ParameterError("shape must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = _as_generator(seed)
    weights = np.arange(1, H + 1, dtype=float) ** -shape
    weights /= weights.sum()
    picks = rng.choice(H, size=n, p=weights)
    return [str(j + 1) for j in picks]


def simulate_from_model(params: SurvivalParams, n: int, seed) -> DiscoverySequence:
    """Independent Bernoulli indicators at the model's discovery probabilities."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = _as_generator(seed)
    probs = params.discovery_probs(n)
    return DiscoverySequence((rng.random(n) < probs).astype(np.int8))


@dataclass(frozen=True)
class GeneratorSpec:
    """Fully seeded description of one synthetic dataset."""

    kind: str
    n: int
    seed: int
    alpha: float | None = None
    sigma: float | None = None
    H: int | None = None
    shape: float | None = None
    params: SurvivalParams | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown generator kind {self.kind!r}")
        needed = {
            "dirichlet": ("alpha",),
            "pitman-yor": ("alpha", "sigma"),
            "dirichlet-multinomial": ("sigma", "H"),
            "zipf": ("H", "shape"),
            "model": ("params",),
        }[self.kind]
        for name in needed:
            if getattr(self, name) is None:
                raise ParameterError(f"generator {self.kind!r} requires {name}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "seed": self.seed}
        for name in ("alpha", "sigma", "H", "shape"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.params is not None:
            out["params"] = self.params.to_dict()
        return out


def generate(spec: GeneratorSpec) -> tuple[list[str] | None, DiscoverySequence]:
    """Run a generator spec; returns (tags or None, discovery sequence)."""
    if spec.kind == "dirichlet":
        tags = simulate_dirichlet(spec.alpha, spec.n, spec.seed)
    elif spec.kind == "pitman-yor":
        tags = simulate_pitman_yor(spec.alpha, spec.sigma, spec.n, spec.seed)
    elif spec.kind == "dirichlet-multinomial":
        tags = simulate_dirichlet_multinomial(spec.sigma, spec.H, spec.n, spec.seed)
    elif spec.kind == "zipf":
        tags = simulate_zipf(spec.H, spec.shape, spec.n, spec.seed)
    else:
        return None, simulate_from_model(spec.params, spec.n, spec.seed)
    return tags, indicators_from_tags(tags)
