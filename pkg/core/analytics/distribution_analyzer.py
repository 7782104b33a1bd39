"""
Distribution analysis for agent populations

Moments, marginal and joint densities, survival (tail) functions, Pareto tail
slopes on the top fraction of the population, local mean profiles and the
closed-form mean-knowledge laws used as oracles.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd
from scipy import stats as sp_stats

from core.errors import TailFitError
from core.model import KnowledgeParams

logger = logging.getLogger('wealthkin.analytics')

MIN_TAIL_SAMPLES = 10
DEFAULT_MARGINAL_BINS = 100
DEFAULT_JOINT_BINS = 50
DEFAULT_PROFILE_BINS = 50
DEFAULT_HIST_FLOOR = 5.0
DEFAULT_HIST_PAD = 1.05


@dataclass
class Moments:
    """Sample moments of a (knowledge, wealth) population"""
    mean_knowledge: float
    mean_wealth: float
    var_knowledge: float
    var_wealth: float
    corr_xv: float
    n: int

    @property
    def corr_defined(self) -> bool:
        return math.isfinite(self.corr_xv)

    def corr_significant(self) -> bool:
        """|corr| above the 3/sqrt(N) noise floor"""
        return self.corr_defined and abs(self.corr_xv) > 3.0 / math.sqrt(self.n)

    def as_row(self, t: float) -> Dict[str, float]:
        return {
            't': t,
            'mean_knowledge': self.mean_knowledge,
            'mean_wealth': self.mean_wealth,
            'var_knowledge': self.var_knowledge,
            'var_wealth': self.var_wealth,
            'corr_xv': self.corr_xv,
        }


@dataclass
class Histogram1D:
    """
    Uniform-bin histogram; values are densities when ``density`` is set

    ``dropped`` counts samples outside the edges; densities are normalized
    over the samples inside.
    """
    edges: np.ndarray
    counts: np.ndarray
    density: bool = True
    dropped: int = 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def values(self) -> np.ndarray:
        if not self.density:
            return self.counts.astype(float)
        total = self.counts.sum()
        if total == 0:
            return np.zeros_like(self.widths)
        return self.counts / (total * self.widths)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'center': self.centers, 'density': self.values})


@dataclass
class Histogram2D:
    """Uniform-bin joint histogram over (x, v)"""
    x_edges: np.ndarray
    v_edges: np.ndarray
    counts: np.ndarray
    density: bool = True

    @property
    def values(self) -> np.ndarray:
        if not self.density:
            return self.counts.astype(float)
        total = self.counts.sum()
        area = np.outer(np.diff(self.x_edges), np.diff(self.v_edges))
        if total == 0:
            return np.zeros_like(area)
        return self.counts / (total * area)

    def to_frame(self) -> pd.DataFrame:
        xc = 0.5 * (self.x_edges[:-1] + self.x_edges[1:])
        vc = 0.5 * (self.v_edges[:-1] + self.v_edges[1:])
        xx, vv = np.meshgrid(xc, vc, indexing='ij')
        return pd.DataFrame({
            'x_center': xx.ravel(),
            'v_center': vv.ravel(),
            'density': self.values.ravel(),
        })


@dataclass
class TailDistribution:
    """Empirical survival function at the sorted sample points"""
    values: np.ndarray
    survival: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        positive = self.values > 0
        return pd.DataFrame({
            'log_value': np.log(self.values[positive]),
            'log_survival': np.log(self.survival[positive]),
        })


@dataclass
class TailFit:
    """Least-squares line through log survival vs log value on the top of the sample"""
    slope: float
    intercept: float
    top_fraction: float
    n_used: int
    residual: float

    def as_row(self, target: str) -> Dict:
        return {
            'target': target,
            'slope': self.slope,
            'intercept': self.intercept,
            'n_used': self.n_used,
            'residual': self.residual,
        }


@dataclass
class Profile:
    """Conditional means of one coordinate over bins of the other"""
    centers: np.ndarray
    means: np.ndarray
    counts: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'center': self.centers, 'mean': self.means, 'count': self.counts})


def sample_moments(x: np.ndarray, v: np.ndarray) -> Moments:
    """Sample means, unbiased variances and the Pearson correlation"""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError(f"moments need at least 2 samples, got {n}")

    mean_x = float(x.mean())
    mean_v = float(v.mean())
    dx = x - mean_x
    dv = v - mean_v
    var_x = float(dx @ dx) / (n - 1)
    var_v = float(dv @ dv) / (n - 1)
    cov = float(dx @ dv) / (n - 1)

    if var_x > 0 and var_v > 0:
        corr = cov / math.sqrt(var_x * var_v)
    else:
        corr = float('nan')

    return Moments(mean_x, mean_v, var_x, var_v, corr, n)


def moments(pop) -> Moments:
    """Moments of a Population"""
    return sample_moments(pop.x, pop.v)


def default_range(samples: np.ndarray, floor: float = DEFAULT_HIST_FLOOR,
                  pad: float = DEFAULT_HIST_PAD) -> Tuple[float, float]:
    """Histogram range [0, max(floor, pad * max sample)]"""
    top = float(np.max(samples)) if np.size(samples) else 0.0
    return 0.0, max(floor, pad * top)


def marginal(samples: np.ndarray, bins: int = DEFAULT_MARGINAL_BINS,
             value_range: Optional[Tuple[float, float]] = None) -> Histogram1D:
    """Density-normalized histogram of one coordinate"""
    samples = np.asarray(samples, dtype=float)
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if value_range is None:
        value_range = default_range(samples)
    counts, edges = np.histogram(samples, bins=bins, range=value_range)
    dropped = int(samples.size - counts.sum())
    if dropped:
        lo, hi = value_range
        logger.info(f"{dropped} of {samples.size} samples outside [{lo:g}, {hi:g}] left out of the marginal")
    return Histogram1D(edges=edges, counts=counts, density=True, dropped=dropped)


def joint_histogram(x: np.ndarray, v: np.ndarray,
                    bins: Tuple[int, int] = (DEFAULT_JOINT_BINS, DEFAULT_JOINT_BINS),
                    x_range: Optional[Tuple[float, float]] = None,
                    v_range: Optional[Tuple[float, float]] = None) -> Histogram2D:
    """Density-normalized joint histogram of (x, v)"""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    x_range = x_range or default_range(x)
    v_range = v_range or default_range(v)
    counts, x_edges, v_edges = np.histogram2d(x, v, bins=bins, range=[x_range, v_range])
    return Histogram2D(x_edges=x_edges, v_edges=v_edges, counts=counts.astype(np.int64), density=True)


def tail_distribution(samples: np.ndarray) -> TailDistribution:
    """
    Rank-based survival function

    At the i-th smallest sample (0-based) the survival value is (N - i) / N,
    i.e. the fraction of samples at or above it.
    """
    values = np.sort(np.asarray(samples, dtype=float))
    n = values.size
    if n < 1:
        raise ValueError("tail distribution needs at least one sample")
    survival = (n - np.arange(n)) / n
    return TailDistribution(values=values, survival=survival)


def tail_slope(samples: np.ndarray, top_fraction: float = 0.01) -> TailFit:
    """
    Fit the Pareto tail on the top fraction of the sample

    Ordinary least squares of log survival against log value over the
    ceil(top_fraction * N) largest samples. For survival ~ v**-mu the slope
    estimates -mu.

    Raises:
        TailFitError: fewer than 10 tail samples, or non-positive tail values
    """
    if not (0 < top_fraction <= 1):
        raise ValueError(f"top_fraction must lie in (0, 1], got {top_fraction}")

    tail = tail_distribution(samples)
    n = tail.values.size
    n_used = int(math.ceil(round(top_fraction * n, 9)))
    if n_used < MIN_TAIL_SAMPLES:
        raise TailFitError(
            f"tail fit needs at least {MIN_TAIL_SAMPLES} samples in the top "
            f"{top_fraction:.2%}, got {n_used} of {n}",
            n_used=n_used
        )

    top_values = tail.values[-n_used:]
    top_survival = tail.survival[-n_used:]
    if np.any(top_values <= 0):
        raise TailFitError("tail contains non-positive values; log-log fit undefined", n_used=n_used)

    log_v = np.log(top_values)
    log_s = np.log(top_survival)
    if np.ptp(log_v) == 0:
        raise TailFitError("tail values are all equal; slope undefined", n_used=n_used)

    fit = sp_stats.linregress(log_v, log_s)
    predicted = fit.intercept + fit.slope * log_v
    residual = float(np.sqrt(np.mean((log_s - predicted) ** 2)))

    logger.debug(f"Tail fit on {n_used} samples: slope={fit.slope:.4f}, residual={residual:.3g}")
    return TailFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        top_fraction=top_fraction,
        n_used=n_used,
        residual=residual,
    )


def local_profile(x: np.ndarray, v: np.ndarray, axis: str = 'x',
                  bins: int = DEFAULT_PROFILE_BINS,
                  value_range: Optional[Tuple[float, float]] = None) -> Profile:
    """
    Local mean profile

    axis='x' gives W(x): mean wealth per knowledge bin.
    axis='v' gives K(v): mean knowledge per wealth bin.
    Empty bins carry NaN and a zero count.
    """
    if axis not in ('x', 'v'):
        raise ValueError(f"axis must be 'x' or 'v', got {axis!r}")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")

    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    condition, other = (x, v) if axis == 'x' else (v, x)
    value_range = value_range or default_range(condition)

    counts, edges = np.histogram(condition, bins=bins, range=value_range)
    sums, _ = np.histogram(condition, bins=edges, weights=other)

    means = np.full(bins, np.nan)
    occupied = counts > 0
    means[occupied] = sums[occupied] / counts[occupied]

    return Profile(centers=0.5 * (edges[:-1] + edges[1:]), means=means, counts=counts)


def analytic_mean_knowledge(t, mean_knowledge_0: float, lam: float, lam_b: float,
                            background_mean: float):
    """
    Mean knowledge for constant lambda, lambda_B

    M_K(t) = M_K(0) exp(-lambda t) + (lambda_B M / lambda)(1 - exp(-lambda t))
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    decay = np.exp(-lam * np.asarray(t, dtype=float))
    result = mean_knowledge_0 * decay + (lam_b * background_mean / lam) * (1.0 - decay)
    return float(result) if np.ndim(t) == 0 else result


def discrete_mean_knowledge(n_steps, dt: float, mean_knowledge_0: float, lam: float,
                            lam_b: float, background_mean: float):
    """
    Expected mean knowledge after n steps of the particle scheme

    Each step multiplies the distance to the limit lambda_B M / lambda by
    (1 - lambda dt).
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    limit = lam_b * background_mean / lam
    factor = np.power(1.0 - lam * dt, np.asarray(n_steps, dtype=float))
    result = limit + (mean_knowledge_0 - limit) * factor
    return float(result) if np.ndim(n_steps) == 0 else result


def mean_knowledge_bound(kp: KnowledgeParams) -> float:
    """Upper bound lambda_bar M / lambda_minus on the long-time mean knowledge"""
    if kp.lambda_minus <= 0:
        raise ValueError(f"lambda_minus must be > 0, got {kp.lambda_minus}")
    return kp.lambda_bar * kp.background_mean / kp.lambda_minus


class DistributionAnalyzer:
    """
    Full analysis of one (x, v) snapshot

    Produces every CSV-ready frame of an analysis bundle from the settings in
    an AnalysisConfig.
    """

    def __init__(self, marginal_bins: int = DEFAULT_MARGINAL_BINS,
                 joint_bins: int = DEFAULT_JOINT_BINS,
                 profile_bins: int = DEFAULT_PROFILE_BINS,
                 top_fraction: float = 0.01,
                 knowledge_range: Optional[Sequence[float]] = None,
                 wealth_range: Optional[Sequence[float]] = None,
                 strict_tail: bool = False):
        self.marginal_bins = marginal_bins
        self.joint_bins = joint_bins
        self.profile_bins = profile_bins
        self.top_fraction = top_fraction
        self.knowledge_range = tuple(knowledge_range) if knowledge_range else None
        self.wealth_range = tuple(wealth_range) if wealth_range else None
        self.strict_tail = strict_tail

    @classmethod
    def from_config(cls, analysis_config, strict_tail: bool = False) -> 'DistributionAnalyzer':
        return cls(
            marginal_bins=analysis_config.marginal_bins,
            joint_bins=analysis_config.joint_bins,
            profile_bins=analysis_config.profile_bins,
            top_fraction=analysis_config.top_fraction,
            knowledge_range=analysis_config.knowledge_range,
            wealth_range=analysis_config.wealth_range,
            strict_tail=strict_tail,
        )

    def ranges(self, x: np.ndarray, v: np.ndarray) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """Histogram ranges for both coordinates, configured or automatic"""
        return (self.knowledge_range or default_range(x),
                self.wealth_range or default_range(v))

    def fit_tails(self, x: np.ndarray, v: np.ndarray) -> pd.DataFrame:
        """Tail fit rows for both coordinates; failed fits become NaN rows unless strict"""
        rows = []
        for target, samples in (('knowledge', x), ('wealth', v)):
            try:
                rows.append(tail_slope(samples, self.top_fraction).as_row(target))
            except TailFitError as e:
                if self.strict_tail:
                    raise
                logger.warning(f"Tail fit for {target} skipped: {e}")
                rows.append({
                    'target': target,
                    'slope': float('nan'),
                    'intercept': float('nan'),
                    'n_used': e.n_used if e.n_used is not None else 0,
                    'residual': float('nan'),
                })
        return pd.DataFrame(rows, columns=['target', 'slope', 'intercept', 'n_used', 'residual'])

    def analyze(self, x: np.ndarray, v: np.ndarray) -> Dict[str, pd.DataFrame]:
        """
        Compute all analysis frames for one snapshot

        Returns:
            Mapping of output name (file stem) to DataFrame
        """
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        x_range, v_range = self.ranges(x, v)

        frames = {
            'marginal_knowledge': marginal(x, self.marginal_bins, x_range).to_frame(),
            'marginal_wealth': marginal(v, self.marginal_bins, v_range).to_frame(),
            'tail_knowledge': tail_distribution(x).to_frame(),
            'tail_wealth': tail_distribution(v).to_frame(),
            'tailfit': self.fit_tails(x, v),
            'profile_W': local_profile(x, v, 'x', self.profile_bins, x_range).to_frame(),
            'profile_K': local_profile(x, v, 'v', self.profile_bins, v_range).to_frame(),
            'joint_density': joint_histogram(
                x, v, (self.joint_bins, self.joint_bins), x_range, v_range
            ).to_frame(),
        }

        empty_w = int((frames['profile_W']['count'] == 0).sum())
        empty_k = int((frames['profile_K']['count'] == 0).sum())
        if empty_w or empty_k:
            logger.info(f"Profiles have sparse bins: {empty_w} empty in W(x), {empty_k} empty in K(v)")

        return frames
