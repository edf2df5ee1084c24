"""Global and local spatial autocorrelation statistics on the software space.

Implements the global autocorrelation index over the proximity matrix, its
per-zone decomposition, significance via conditional permutation or a
closed-form normal approximation, and the classification of zones into
hot spots, cool spots, and outliers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateVariance,
    EmptyWeights,
    NonpositiveM,
    TooFewZones,
    ZeroVariance,
)
from .space_model import SoftwareSpaceDataset

__all__ = [
    "ClusterLabel",
    "MMode",
    "InferenceMethod",
    "GlobalMoranResult",
    "LocalMoranTerm",
    "LocalMoranRecord",
    "global_moran",
    "local_moran",
    "analytic_moments",
    "permutation_test",
    "z_score",
    "two_sided_p",
    "classify_clusters",
    "benjamini_hochberg",
]

MIN_PERMUTATIONS = 99


class ClusterLabel(Enum):
    HOT_SPOT = "HotSpot"
    COOL_SPOT = "CoolSpot"
    HIGH_VALUE_OUTLIER = "HighValueOutlier"
    LOW_VALUE_OUTLIER = "LowValueOutlier"
    NEUTRAL = "Neutral"
    ISOLATED = "Isolated"


class MMode(Enum):
    """Normalization constant used by the per-zone decomposition."""

    STANDARD = "standard"
    PAPER_LITERAL = "paper"


class InferenceMethod(Enum):
    ANALYTIC = "analytic"
    PERMUTATION = "perm"


@dataclass(frozen=True)
class GlobalMoranResult:
    i_value: float
    n: int
    s0: float
    mean_y: float


@dataclass(frozen=True)
class LocalMoranTerm:
    """Per-zone decomposition term before any significance assessment."""

    zone: str
    i_local: float
    deviation: float
    lag: float
    m_constant: float


@dataclass(frozen=True)
class LocalMoranRecord:
    """Full per-zone result: statistic, null moments, p-value, and cluster."""

    zone: str
    i_local: float
    deviation: float
    lag: float
    m_constant: float
    e_null: float
    var_null: float
    z: float
    p_value: float
    cluster: ClusterLabel
    significant: bool


def _deviations(ds: SoftwareSpaceDataset) -> np.ndarray:
    y = ds.counts.astype(np.float64)
    z = y - y.mean()
    if not np.any(z):
        raise DegenerateVariance("all execution counts are equal")
    return z


def global_moran(ds: SoftwareSpaceDataset) -> GlobalMoranResult:
    """Global autocorrelation index of the execution counts.

    Computed as (N / S0) * (z' W z) / (z' z) with z the count deviations from
    the mean and S0 the sum of all weights, over the dataset's current weight
    mode. Positive values indicate that neighboring modules carry similar
    counts, negative values that they alternate.

    Raises
    ------
    DegenerateVariance
        All counts are equal.
    EmptyWeights
        The proximity matrix has no nonzero entry.
    TooFewZones
        Fewer than two zones.
    """
    if ds.n < 2:
        raise TooFewZones(f"need at least 2 zones, got {ds.n}")
    z = _deviations(ds)
    s0 = ds.weights.total_weight()
    if s0 <= 0:
        raise EmptyWeights("proximity matrix has no nonzero weights")
    numerator = float(z @ (ds.weights.matrix @ z))
    denominator = float(z @ z)
    i_value = (ds.n / s0) * (numerator / denominator)
    return GlobalMoranResult(i_value=i_value, n=ds.n, s0=s0, mean_y=float(ds.counts.mean()))


def local_moran(ds: SoftwareSpaceDataset, m_mode: MMode = MMode.STANDARD) -> list[LocalMoranTerm]:
    """Per-zone decomposition terms of the global index.

    Each zone's statistic is (1/m) * deviation_i * lag_i with lag_i the
    weighted sum of neighbor deviations. ``MMode.STANDARD`` uses the single
    constant m = sum of squared deviations / N, which makes the mean of the
    local terms reproduce the global index under row-standardized weights
    with no isolated zone. ``MMode.PAPER_LITERAL`` instead computes, for each
    zone, m_i = (sum of the other zones' squared deviations) / (n - 1) minus
    the squared raw mean; this variant does not preserve the decomposition
    and fails with :class:`NonpositiveM` when some m_i is not positive.
    """
    if ds.n < 2:
        raise TooFewZones(f"need at least 2 zones, got {ds.n}")
    z = _deviations(ds)
    lag = np.asarray(ds.weights.matrix @ z).ravel()
    n = ds.n
    ss = float(z @ z)
    if m_mode is MMode.STANDARD:
        m = np.full(n, ss / n)
    else:
        mean_sq = float(ds.counts.mean()) ** 2
        m = (ss - z * z) / (n - 1) - mean_sq
        if np.any(m <= 0):
            bad = ds.labels[int(np.argmax(m <= 0))]
            raise NonpositiveM(f"literal m is not positive at zone {bad!r}")
    i_local = z * lag / m
    return [
        LocalMoranTerm(
            zone=ds.labels[i],
            i_local=float(i_local[i]),
            deviation=float(z[i]),
            lag=float(lag[i]),
            m_constant=float(m[i]),
        )
        for i in range(n)
    ]


def _require_inference_ready(ds: SoftwareSpaceDataset) -> np.ndarray:
    if ds.n < 3:
        raise TooFewZones(f"need at least 3 zones for inference, got {ds.n}")
    return _deviations(ds)


def analytic_moments(ds: SoftwareSpaceDataset, zone: int) -> tuple[float, float]:
    """Null mean and variance of the zone's local statistic.

    The null model is conditional randomization: the zone's own count stays
    fixed while the remaining n - 1 counts are shuffled uniformly over the
    other zones. For the standard-m local statistic the moments have closed
    forms; with w_i the zone's row sum, u_i its sum of squared row weights,
    z_i the fixed deviation, and m2 the mean squared deviation:

        E[I_i]   = -z_i^2 * w_i / ((n - 1) * m2)
        Var[I_i] = (z_i / m2)^2 * n / (n - 2)
                   * (u_i - w_i^2 / (n - 1)) * (m2 - z_i^2 / (n - 1))

    Both are exact for the permutation scheme implemented by
    :func:`permutation_test`; an isolated zone yields (0, 0).
    """
    z = _require_inference_ready(ds)
    n = ds.n
    w_i = float(ds.weights.row_sums()[zone])
    u_i = float(ds.weights.squared_row_sums()[zone])
    if w_i == 0.0:
        return 0.0, 0.0
    m2 = float(z @ z) / n
    z_i = float(z[zone])
    e_null = -(z_i * z_i) * w_i / ((n - 1) * m2)
    spread = m2 - (z_i * z_i) / (n - 1)
    var_null = (z_i / m2) ** 2 * (n / (n - 2)) * (u_i - w_i * w_i / (n - 1)) * spread
    return e_null, max(var_null, 0.0)


def permutation_test(
    ds: SoftwareSpaceDataset,
    zone: int,
    replications: int = 999,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Conditional permutation test for one zone's local statistic.

    Holds the zone's count fixed and redraws its neighbors' values from the
    remaining n - 1 counts, without replacement, ``replications`` times. The
    two-sided pseudo p-value is

        (1 + #{replicates at least as far from the replicate mean as the
        observed statistic}) / (replications + 1).

    Randomness derives from (seed, zone) only, so results are identical
    regardless of the order or parallelism in which zones are evaluated.

    Returns
    -------
    (pseudo_p, permutation_mean, permutation_sd)
    """
    if replications < MIN_PERMUTATIONS:
        raise ValueError(f"need at least {MIN_PERMUTATIONS} replications, got {replications}")
    z = _require_inference_ready(ds)
    n = ds.n
    m2 = float(z @ z) / n
    row = ds.weights.matrix.getrow(zone)
    neighbors = row.indices
    w_vec = row.data
    if neighbors.size == 0:
        return 1.0, 0.0, 0.0
    observed = float(z[zone]) * float(w_vec @ z[neighbors]) / m2
    others = np.delete(z, zone)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(zone))))
    draws = np.argsort(rng.random((replications, n - 1)), axis=1)[:, : neighbors.size]
    lags = others[draws] @ w_vec
    sims = float(z[zone]) * lags / m2
    mean = float(sims.mean())
    sd = float(sims.std())
    extreme = int(np.count_nonzero(np.abs(sims - mean) >= abs(observed - mean)))
    pseudo_p = (1 + extreme) / (replications + 1)
    return pseudo_p, mean, sd


def z_score(i_local: float, e_null: float, var_null: float) -> float:
    """Standardized local statistic; raises :class:`ZeroVariance` if var_null <= 0."""
    if var_null <= 0:
        raise ZeroVariance("null variance is zero (isolated zone?)")
    return (i_local - e_null) / math.sqrt(var_null)


def two_sided_p(z: float) -> float:
    """Two-sided normal tail probability for a z-score."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def benjamini_hochberg(p_values: Sequence[float], alpha: float) -> list[bool]:
    """False-discovery-rate rejection flags for a batch of p-values."""
    m = len(p_values)
    order = np.argsort(p_values, kind="stable")
    flags = [False] * m
    threshold_rank = 0
    for rank, idx in enumerate(order, start=1):
        if p_values[idx] <= alpha * rank / m:
            threshold_rank = rank
    for rank, idx in enumerate(order, start=1):
        if rank <= threshold_rank:
            flags[idx] = True
    return flags


def _label_for(deviation: float, lag: float, degree: int) -> ClusterLabel:
    if degree == 0:
        return ClusterLabel.ISOLATED
    if deviation == 0.0 or lag == 0.0:
        return ClusterLabel.NEUTRAL
    if deviation > 0:
        return ClusterLabel.HOT_SPOT if lag > 0 else ClusterLabel.HIGH_VALUE_OUTLIER
    return ClusterLabel.LOW_VALUE_OUTLIER if lag > 0 else ClusterLabel.COOL_SPOT


def classify_clusters(
    ds: SoftwareSpaceDataset,
    terms: Sequence[LocalMoranTerm],
    alpha: float = 0.05,
    method: InferenceMethod = InferenceMethod.PERMUTATION,
    replications: int = 999,
    seed: int | None = None,
    fdr: bool = False,
) -> list[LocalMoranRecord]:
    """Attach null moments, p-values, and cluster labels to local terms.

    Labels follow the signs of the deviation and the spatial lag: both
    positive is a hot spot, both negative a cool spot, and opposite signs
    mark high- or low-value outliers. An exact zero in either quantity is
    Neutral; zones without neighbors are Isolated and never significant.

    With ``InferenceMethod.PERMUTATION`` (the default) the null moments and
    p-value come from :func:`permutation_test`, and ``seed`` is required for
    reproducibility. ``InferenceMethod.ANALYTIC`` uses the closed-form
    moments with a two-sided normal p-value. ``fdr`` switches the
    significance flags to a Benjamini-Hochberg adjustment across all zones;
    reported p-values stay unadjusted either way.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if method is InferenceMethod.PERMUTATION and seed is None:
        raise ValueError("permutation inference requires a seed")
    if tuple(t.zone for t in terms) != ds.labels:
        raise ValueError("local terms are not aligned with the dataset's zones")
    degrees = ds.weights.degrees()
    deviations = _deviations(ds)
    standard_m = float(deviations @ deviations) / ds.n
    moments: list[tuple[float, float]] = []
    p_values: list[float] = []
    for i, term in enumerate(terms):
        # null moments are derived for the standard-m statistic; a literal
        # per-zone m only rescales it, so the moments rescale with it and the
        # p-value is unaffected
        scale = standard_m / term.m_constant
        if method is InferenceMethod.PERMUTATION:
            p, mean, sd = permutation_test(ds, i, replications=replications, seed=int(seed))
            moments.append((mean * scale, (sd * scale) ** 2))
            p_values.append(p)
        else:
            e_raw, var_raw = analytic_moments(ds, i)
            e_null, var_null = e_raw * scale, var_raw * scale * scale
            moments.append((e_null, var_null))
            z = (term.i_local - e_null) / math.sqrt(var_null) if var_null > 0 else 0.0
            p_values.append(two_sided_p(z) if var_null > 0 else 1.0)
    significant_flags = (
        benjamini_hochberg(p_values, alpha) if fdr else [p <= alpha for p in p_values]
    )
    records = []
    for i, term in enumerate(terms):
        e_null, var_null = moments[i]
        z = (term.i_local - e_null) / math.sqrt(var_null) if var_null > 0 else 0.0
        label = _label_for(term.deviation, term.lag, int(degrees[i]))
        records.append(
            LocalMoranRecord(
                zone=term.zone,
                i_local=term.i_local,
                deviation=term.deviation,
                lag=term.lag,
                m_constant=term.m_constant,
                e_null=e_null,
                var_null=var_null,
                z=z,
                p_value=p_values[i],
                cluster=label,
                significant=significant_flags[i],
            )
        )
    return records
