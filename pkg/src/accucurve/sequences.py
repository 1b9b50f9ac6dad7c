"""Discovery indicators, accumulation curves and multi-site datasets.

A stream of labelled observations is reduced to binary indicators marking
whether each observation carries a label never seen before in the stream.
The running sum of the indicators is the accumulation curve, i.e. the number
of distinct labels observed so far. The two representations carry the same
information and convert losslessly in both directions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError


@dataclass(frozen=True)
class DiscoverySequence:
    """Ordered binary discovery indicators.

    The first indicator is always 1: the first observation is new by
    definition. Instances are immutable; the backing array is read-only.
    """

    indicators: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.indicators, dtype=np.int8)
        if arr.ndim != 1 or arr.size < 1:
            raise DataFormatError("indicators must be a non-empty 1-D array")
        if not np.isin(arr, (0, 1)).all():
            raise DataFormatError("indicators must contain only 0 and 1")
        if arr[0] != 1:
            raise DataFormatError("first indicator must be 1 (first observation is always new)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "indicators", arr)

    @property
    def n(self) -> int:
        return int(self.indicators.size)

    @property
    def k(self) -> int:
        """Number of distinct labels, i.e. the sum of the indicators."""
        return int(self.indicators.sum())

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class AccumulationCurve:
    """Cumulative distinct-label counts; starts at 1 and grows by 0 or 1."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise DataFormatError("counts must be a non-empty 1-D array")
        if arr[0] != 1:
            raise DataFormatError("curve must start at 1")
        steps = np.diff(arr)
        if steps.size and not np.isin(steps, (0, 1)).all():
            raise DataFormatError("curve must be non-decreasing with unit steps")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    @property
    def n(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts[-1])

    def __len__(self) -> int:
        return self.n


def indicators_from_tags(tags) -> DiscoverySequence:
    """Mark each tag that differs from every earlier tag.

    Tags are compared by exact string equality after stripping surrounding
    whitespace; case is preserved.
    """
    tags = list(tags)
    if not tags:
        raise DataFormatError("empty sequence")
    seen = set()
    out = np.zeros(len(tags), dtype=np.int8)
    for i, tag in enumerate(tags):
        key = str(tag).strip()
        if key not in seen:
            seen.add(key)
            out[i] = 1
    return DiscoverySequence(out)


def curve_from_indicators(d: DiscoverySequence) -> AccumulationCurve:
    return AccumulationCurve(np.cumsum(d.indicators, dtype=np.int64))


def indicators_from_curve(curve: AccumulationCurve) -> DiscoverySequence:
    counts = curve.counts
    out = np.empty(counts.size, dtype=np.int8)
    out[0] = 1
    out[1:] = np.diff(counts)
    return DiscoverySequence(out)


def split(d: DiscoverySequence, fraction: float) -> tuple[DiscoverySequence, np.ndarray]:
    """Cut a sequence into a training prefix and the remaining tail.

    The training part keeps the first ``floor(fraction * n)`` indicators. The
    tail is returned as a plain indicator array: being a continuation it may
    legitimately start with 0, so it cannot be a DiscoverySequence.
    """
    if not 0.0 < fraction < 1.0:
        raise DataFormatError("fraction must be in (0, 1)")
    # the epsilon absorbs binary representation error in rationals like 1/3
    cut = int(math.floor(fraction * d.n + 1e-9))
    if cut < 1:
        raise DataFormatError(f"split at fraction {fraction} leaves an empty training part")
    if cut >= d.n:
        raise DataFormatError(f"split at fraction {fraction} leaves an empty test part")
    return DiscoverySequence(d.indicators[:cut]), d.indicators[cut:].copy()


@dataclass(frozen=True)
class Site:
    site_id: str
    sequence: DiscoverySequence
    covariates: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.covariates, dtype=float)
        if z.ndim != 1 or z.size < 1 or not np.isfinite(z).all():
            raise DataFormatError(f"site {self.site_id!r}: covariates must be a finite 1-D vector")
        z = z.copy()
        z.flags.writeable = False
        object.__setattr__(self, "covariates", z)


@dataclass(frozen=True)
class SiteDataset:
    """Per-site discovery sequences with a shared covariate layout.

    By convention the first covariate column is an intercept.
    """

    sites: tuple[Site, ...]

    def __post_init__(self):
        sites = tuple(self.sites)
        if not sites:
            raise DataFormatError("dataset must contain at least one site")
        p = sites[0].covariates.size
        for s in sites:
            if s.covariates.size != p:
                raise DataFormatError(
                    f"site {s.site_id!r} has {s.covariates.size} covariates, expected {p}"
                )
        ids = [s.site_id for s in sites]
        if len(set(ids)) != len(ids):
            raise DataFormatError("duplicate site ids")
        object.__setattr__(self, "sites", sites)

    @property
    def covariate_dim(self) -> int:
        return int(self.sites[0].covariates.size)

    def covariate_matrix(self) -> np.ndarray:
        return np.vstack([s.covariates for s in self.sites])

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def read_tags(path, min_length: int = 2) -> list[str]:
    """Read a tag file: one tag per line, UTF-8, '#' comment lines ignored."""
    tags = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tags.append(stripped)
    if len(tags) < max(min_length, 1):
        raise DataFormatError(f"{path}: {len(tags)} tags, need at least {max(min_length, 1)}")
    return tags


def write_tags(path, tags) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tag in tags:
            fh.write(f"{tag}\n")


def _parse_indicator(value: str, where: str) -> int:
    value = value.strip()
    if value not in ("0", "1"):
        raise DataFormatError(f"{where}: discovery must be 0 or 1, got {value!r}")
    return int(value)


def read_indicators(path, min_length: int = 2) -> DiscoverySequence:
    """Read an indicator CSV with header ``index,discovery``."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["index", "discovery"]:
            raise DataFormatError(f"{path}: expected header 'index,discovery'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                idx = int(row[0])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: bad index {row[0]!r}") from exc
            rows.append((idx, _parse_indicator(row[1], f"{path}:{lineno}")))
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    indices = [r[0] for r in rows]
    if indices != list(range(1, len(rows) + 1)):
        raise DataFormatError(f"{path}: indices must be 1..n without gaps or duplicates")
    if len(rows) < max(min_length, 1):
        raise DataFormatError(f"{path}: sequence of length {len(rows)} is shorter than {min_length}")
    return DiscoverySequence(np.array([r[1] for r in rows], dtype=np.int8))


def write_indicators(path, d: DiscoverySequence) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "discovery"])
        for i, value in enumerate(d.indicators, start=1):
            writer.writerow([i, int(value)])


def read_site_dataset(indicator_path, covariate_path, min_length: int = 2,
                      min_sequences: int = 0) -> SiteDataset:
    """Read multi-site indicators (``site_id,index,discovery``) and covariates.

    ``min_sequences`` optionally drops sites whose sequence is shorter than
    the given number of observations (0 disables the filter).
    """
    per_site: dict[str, list[tuple[int, int]]] = {}
    order: list[str] = []
    with open(indicator_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["site_id", "index", "discovery"]:
            raise DataFormatError(f"{indicator_path}: expected header 'site_id,index,discovery'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            site = row[0].strip()
            if site not in per_site:
                per_site[site] = []
                order.append(site)
            try:
                idx = int(row[1])
            except ValueError as exc:
                raise DataFormatError(f"{indicator_path}:{lineno}: bad index {row[1]!r}") from exc
            per_site[site].append((idx, _parse_indicator(row[2], f"{indicator_path}:{lineno}")))

    covariates: dict[str, np.ndarray] = {}
    with open(covariate_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "site_id" or len(header) < 2:
            raise DataFormatError(f"{covariate_path}: expected header 'site_id,z1,...,zp'")
        p = len(header) - 1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 1:
                raise DataFormatError(f"{covariate_path}:{lineno}: expected {p + 1} columns")
            try:
                covariates[row[0].strip()] = np.array([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataFormatError(f"{covariate_path}:{lineno}: bad covariate value") from exc

    sites = []
    for site_id in order:
        rows = sorted(per_site[site_id], key=lambda r: r[0])
        indices = [r[0] for r in rows]
        if indices != list(range(1, len(rows) + 1)):
            raise DataFormatError(f"{indicator_path}: site {site_id!r} indices must be 1..n")
        if len(rows) < max(min_length, 1):
            raise DataFormatError(
                f"{indicator_path}: site {site_id!r} has {len(rows)} observations, need {min_length}"
            )
        if min_sequences and len(rows) < min_sequences:
            continue
        if site_id not in covariates:
            raise DataFormatError(f"{covariate_path}: missing covariates for site {site_id!r}")
        seq = DiscoverySequence(np.array([r[1] for r in rows], dtype=np.int8))
        sites.append(Site(site_id, seq, covariates[site_id]))
    if not sites:
        raise DataFormatError("no sites left after filtering")
    return SiteDataset(tuple(sites))


def write_site_dataset(indicator_path, covariate_path, data: SiteDataset) -> None:
    with open(indicator_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site_id", "index", "discovery"])
        for site in data:
            for i, value in enumerate(site.sequence.indicators, start=1):
                writer.writerow([site.site_id, i, int(value)])
    with open(covariate_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site_id"] + [f"z{j}" for j in range(1, data.covariate_dim + 1)])
        for site in data:
            writer.writerow([site.site_id] + [format(v, ".17g") for v in site.covariates])
