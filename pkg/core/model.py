"""
Domain types and microscopic interaction rules for the wealth-knowledge model

Every rule accepts scalars or numpy arrays; the solvers apply them to whole
agent arrays at once.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Tuple, Union
import logging
import math

import numpy as np

from core.errors import ParameterError, SamplingError

logger = logging.getLogger('wealthkin.model')

ArrayLike = Union[float, np.ndarray]

# Absolute slack for comparing a kappa draw against its admissible bound
KAPPA_TOLERANCE = 1e-12


class FunctionKind(Enum):
    """Shapes available for lambda, lambda_B, Psi and Phi"""
    CONSTANT = "constant"
    POWER_LAW = "power_law"


@dataclass(frozen=True)
class FunctionSpec:
    """
    Knowledge-dependent coefficient

    CONSTANT evaluates to ``value`` everywhere; POWER_LAW evaluates to
    ``coefficient * (1 + x) ** -exponent``. The coefficient is 1 unless the
    function has been rescaled (quasi-invariant scaling of lambda, lambda_B).
    """
    kind: FunctionKind
    value: float = 1.0
    exponent: float = 0.0
    coefficient: float = 1.0

    @classmethod
    def constant(cls, value: float) -> 'FunctionSpec':
        return cls(FunctionKind.CONSTANT, value=float(value))

    @classmethod
    def power_law(cls, exponent: float, coefficient: float = 1.0) -> 'FunctionSpec':
        return cls(FunctionKind.POWER_LAW, exponent=float(exponent), coefficient=float(coefficient))

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        """Evaluate at knowledge level(s) x >= 0"""
        if self.kind is FunctionKind.CONSTANT:
            if np.ndim(x) == 0:
                return self.value
            return np.full(np.shape(x), self.value, dtype=float)

        result = self.coefficient * np.power(1.0 + np.asarray(x, dtype=float), -self.exponent)
        if np.ndim(x) == 0:
            return float(result)
        return result

    def sup(self) -> float:
        """Supremum over x >= 0"""
        if self.kind is FunctionKind.CONSTANT:
            return self.value
        return self.coefficient

    def inf(self) -> float:
        """Infimum over x >= 0"""
        if self.kind is FunctionKind.CONSTANT:
            return self.value
        return 0.0

    def scaled(self, factor: float) -> 'FunctionSpec':
        """Multiply the function by a positive factor"""
        if self.kind is FunctionKind.CONSTANT:
            return replace(self, value=self.value * factor)
        return replace(self, coefficient=self.coefficient * factor)

    def is_constant(self) -> bool:
        return self.kind is FunctionKind.CONSTANT

    def __str__(self):
        if self.kind is FunctionKind.CONSTANT:
            return f"Constant({self.value:g})"
        if self.coefficient != 1.0:
            return f"{self.coefficient:g}*PowerLaw({self.exponent:g})"
        return f"PowerLaw({self.exponent:g})"


def eval_function(spec: FunctionSpec, x: ArrayLike) -> ArrayLike:
    """Evaluate a coefficient function; validation happens at construction time"""
    return spec.evaluate(x)


class BackgroundKind(Enum):
    """Laws available for the background knowledge C(z)"""
    UNIFORM = "uniform"
    POINT_MASS = "point_mass"


@dataclass(frozen=True)
class BackgroundSpec:
    """
    Background distribution C(z)

    UNIFORM(a) is uniform on (0, a); POINT_MASS(M) always yields M.
    """
    kind: BackgroundKind
    parameter: float

    @classmethod
    def uniform(cls, a: float) -> 'BackgroundSpec':
        return cls(BackgroundKind.UNIFORM, float(a))

    @classmethod
    def point_mass(cls, value: float) -> 'BackgroundSpec':
        return cls(BackgroundKind.POINT_MASS, float(value))

    @property
    def mean(self) -> float:
        """Mean M of the background"""
        if self.kind is BackgroundKind.UNIFORM:
            return self.parameter / 2.0
        return self.parameter

    def __str__(self):
        if self.kind is BackgroundKind.UNIFORM:
            return f"Uniform(0, {self.parameter:g})"
        return f"PointMass({self.parameter:g})"


@dataclass(frozen=True)
class KnowledgeParams:
    """
    Coefficients of the knowledge interaction with the background

    Bounds left as None are taken from the supremum/infimum of the
    corresponding function.
    """
    selection: FunctionSpec
    learning: FunctionSpec
    delta: float
    background: BackgroundSpec
    lambda_minus: Optional[float] = None
    lambda_plus: Optional[float] = None
    lambda_bar: Optional[float] = None

    def __post_init__(self):
        if self.lambda_minus is None:
            object.__setattr__(self, 'lambda_minus', self.selection.inf())
        if self.lambda_plus is None:
            object.__setattr__(self, 'lambda_plus', self.selection.sup())
        if self.lambda_bar is None:
            object.__setattr__(self, 'lambda_bar', self.learning.sup())

    @property
    def kappa_amplitude(self) -> float:
        """Support point of the two-point kappa law, sqrt(delta)"""
        return math.sqrt(self.delta) if self.delta > 0 else 0.0

    @property
    def kappa_lower_bound(self) -> float:
        """Smallest admissible kappa, -(1 - lambda_plus)"""
        return -(1.0 - self.lambda_plus)

    @property
    def background_mean(self) -> float:
        return self.background.mean


@dataclass(frozen=True)
class TradeParams:
    """
    Coefficients of the binary trade

    The risk law is eta = +/- risk with probability 1/2 each; sigma = risk**2.
    """
    gamma: float
    risk: float
    psi: FunctionSpec = field(default_factory=lambda: FunctionSpec.constant(1.0))
    phi: FunctionSpec = field(default_factory=lambda: FunctionSpec.constant(1.0))

    @classmethod
    def from_sigma(cls, gamma: float, sigma: float, psi: Optional[FunctionSpec] = None,
                   phi: Optional[FunctionSpec] = None) -> 'TradeParams':
        """Build from the variance sigma instead of the amplitude r"""
        if not (sigma >= 0 and math.isfinite(sigma)):
            raise ParameterError(f"variance sigma={sigma:g} must be finite and >= 0")
        risk = math.sqrt(sigma)
        return cls(
            gamma=gamma,
            risk=risk,
            psi=psi or FunctionSpec.constant(1.0),
            phi=phi or FunctionSpec.constant(1.0)
        )

    @property
    def sigma(self) -> float:
        return self.risk ** 2

    def nonnegativity_margin(self) -> float:
        """1 - gamma*sup(Psi) - r*sup(Phi); nonnegative trades need this >= 0"""
        return 1.0 - self.gamma * self.psi.sup() - self.risk * self.phi.sup()


@dataclass(frozen=True)
class ModelParams:
    """All microscopic coefficients of the model"""
    knowledge: KnowledgeParams
    trade: TradeParams

    def describe(self) -> str:
        kp, tp = self.knowledge, self.trade
        return (
            f"lambda={kp.selection}, lambda_B={kp.learning}, delta={kp.delta:g}, "
            f"background={kp.background}, gamma={tp.gamma:g}, sigma={tp.sigma:g}, "
            f"Psi={tp.psi}, Phi={tp.phi}"
        )


@dataclass
class Agent:
    """One sample of the joint density: knowledge x and wealth v"""
    x: float
    v: float


def knowledge_post_interaction(x: ArrayLike, z: ArrayLike, kappa: ArrayLike,
                               kp: KnowledgeParams) -> ArrayLike:
    """
    Knowledge after one interaction with the background

    x* = (1 - lambda(x)) x + lambda_B(x) z + kappa x

    Raises:
        SamplingError: if any kappa lies below -(1 - lambda_plus)
    """
    lower = kp.kappa_lower_bound
    if np.any(np.asarray(kappa) < lower - KAPPA_TOLERANCE):
        raise SamplingError(
            f"kappa draw below admissible bound {lower:.6g}; "
            f"min kappa = {float(np.min(kappa)):.6g}"
        )

    lam = kp.selection.evaluate(x)
    lam_b = kp.learning.evaluate(x)
    return (1.0 - lam + kappa) * x + lam_b * z


def exchange(x: ArrayLike, v: ArrayLike, y: ArrayLike, w: ArrayLike,
             eta1: ArrayLike, eta2: ArrayLike, tp: TradeParams) -> Tuple[ArrayLike, ArrayLike]:
    """
    Knowledge-modulated trade on raw coordinates

    v* = (1 - Psi(x) gamma + Phi(x) eta1) v + Psi(y) gamma w
    w* = (1 - Psi(y) gamma + Phi(y) eta2) w + Psi(x) gamma v
    """
    gamma = tp.gamma
    psi_x = tp.psi.evaluate(x)
    psi_y = tp.psi.evaluate(y)
    phi_x = tp.phi.evaluate(x)
    phi_y = tp.phi.evaluate(y)

    v_star = (1.0 - psi_x * gamma + phi_x * eta1) * v + psi_y * gamma * w
    w_star = (1.0 - psi_y * gamma + phi_y * eta2) * w + psi_x * gamma * v
    return v_star, w_star


def trade_post_interaction(a: Agent, b: Agent, eta1: float, eta2: float,
                           tp: TradeParams) -> Tuple[float, float]:
    """Post-trade wealths (v*, w*) of agents a=(x, v) and b=(y, w)"""
    return exchange(a.x, a.v, b.x, b.v, eta1, eta2, tp)


def trade_post_interaction_cpt(v: ArrayLike, w: ArrayLike, eta1: ArrayLike,
                               eta2: ArrayLike, gamma: float) -> Tuple[ArrayLike, ArrayLike]:
    """
    Knowledge-free trade with universal saving propensity

    v* = (1 - gamma + eta1) v + gamma w
    w* = (1 - gamma + eta2) w + gamma v
    """
    v_star = (1.0 - gamma + eta1) * v + gamma * w
    w_star = (1.0 - gamma + eta2) * w + gamma * v
    return v_star, w_star


def drift_D(x: ArrayLike, kp: KnowledgeParams) -> ArrayLike:
    """Mean knowledge drift D(x) = lambda_B(x) M - lambda(x) x"""
    return kp.learning.evaluate(x) * kp.background_mean - kp.selection.evaluate(x) * x
