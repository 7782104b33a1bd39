"""
Finite-volume solver for the wealth-knowledge Fokker-Planck equation

    dh/dtau = d2(d_x h)/dx2 + d2(d_v h)/dv2 + d(a_x h)/dx + d(a_v h)/dv

with a_x = x lambda(x) - lambda_B(x) M, a_v = gamma (Psi(x) v - M_W),
d_x = delta x^2 / 2, d_v = sigma Phi(x)^2 v^2 / 2, on a truncated box with
zero-flux walls. Drift fluxes are centered and diffusion fluxes are differences
of cell values of d h. Where the cell Peclet number exceeds 2 the cell
diffusion is raised just enough to keep the update monotone (a local
Lax-Friedrichs correction written on d h), so mass and the first moments obey
their exact discrete laws up to wall terms. The two directions are applied
as successive sweeps, each conservative and positivity preserving under the
stability bound.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple
import logging
import math

import numpy as np
import pandas as pd

from core.boltzmann import InitKind, InitSpec
from core.errors import ParameterError, StabilityError
from core.events import EventBus, EventType
from core.model import ModelParams
from core.validation.validator import GridValidator, validate_params

logger = logging.getLogger('wealthkin.fokker_planck')

CFL_SAFETY = 0.9

DIAGNOSTIC_COLUMNS = ['tau', 'mass', 'mean_wealth', 'mean_knowledge', 'l1_rate']


class Equation(Enum):
    """FP: M_W recomputed every step; FP2: M_W frozen at its initial value"""
    FP = "fp"
    FP2 = "fp2"


@dataclass(frozen=True)
class Grid2D:
    """Cell-centered grid on [0, x_max] x [0, v_max]"""
    x_max: float = 10.0
    v_max: float = 10.0
    nx: int = 200
    nv: int = 200

    @property
    def dx(self) -> float:
        return self.x_max / self.nx

    @property
    def dv(self) -> float:
        return self.v_max / self.nv

    @property
    def cell_area(self) -> float:
        return self.dx * self.dv

    @property
    def x_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.nx + 1)

    @property
    def v_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.v_max, self.nv + 1)

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def v_centers(self) -> np.ndarray:
        return (np.arange(self.nv) + 0.5) * self.dv


@dataclass
class Field2D:
    """Cell averages of h(x, v, tau)"""
    values: np.ndarray
    grid: Grid2D
    tau: float = 0.0

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    def marginal_x(self) -> np.ndarray:
        """Knowledge marginal density on the x cells"""
        return self.values.sum(axis=1) * self.grid.dv

    def marginal_v(self) -> np.ndarray:
        """Wealth marginal density on the v cells"""
        return self.values.sum(axis=0) * self.grid.dx

    def mean_knowledge(self) -> float:
        return float(self.marginal_x() @ self.grid.x_centers * self.grid.dx / self.mass())

    def mean_wealth(self) -> float:
        return float(self.marginal_v() @ self.grid.v_centers * self.grid.dv / self.mass())

    def to_frame(self) -> pd.DataFrame:
        xx, vv = np.meshgrid(self.grid.x_centers, self.grid.v_centers, indexing='ij')
        return pd.DataFrame({'x': xx.ravel(), 'v': vv.ravel(), 'h': self.values.ravel()})


@dataclass
class FPDiagnostics:
    """History and end-of-run facts of a Fokker-Planck run"""
    history: pd.DataFrame
    steps: int
    stationary: bool
    stability_bound: float
    initial_mass: float
    summary: Dict[str, float] = field(default_factory=dict)


def fp_coefficients(x, v, mp: ModelParams, mean_wealth: float):
    """
    Drift and diffusion coefficients at (x, v)

    Returns:
        (a_x, a_v, d_x, d_v)
    """
    kp, tp = mp.knowledge, mp.trade
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)

    a_x = x * kp.selection.evaluate(x) - kp.learning.evaluate(x) * kp.background_mean
    a_v = tp.gamma * (tp.psi.evaluate(x) * v - mean_wealth)
    d_x = 0.5 * kp.delta * x ** 2
    d_v = 0.5 * tp.sigma * tp.phi.evaluate(x) ** 2 * v ** 2

    if a_x.ndim == 0 and a_v.ndim == 0:
        return float(a_x), float(a_v), float(d_x), float(d_v)
    return a_x, a_v, d_x, d_v


def compute_MW(h: Field2D, mp: ModelParams) -> float:
    """Midpoint quadrature of w Psi(y) h(y, w) over the grid"""
    grid = h.grid
    psi = mp.trade.psi.evaluate(grid.x_centers)
    return float(psi @ h.values @ grid.v_centers * grid.cell_area)


def cell_diffusion(u: np.ndarray, d: np.ndarray, width: float) -> np.ndarray:
    """
    Cell diffusion raised to at least |u| width / 2 on both faces of the cell

    Below that value a centered drift flux loses monotonicity. Arrays run
    along their last axis: u holds the interior faces, d the cells.
    """
    need = 0.5 * np.abs(u) * width
    pad = [(0, 0)] * (need.ndim - 1)
    below = np.pad(need, pad + [(1, 0)])
    above = np.pad(need, pad + [(0, 1)])
    return np.maximum(d, np.maximum(below, above))


def face_weights(u: np.ndarray, d: np.ndarray, width: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weights of the flux A h_lo - B h_hi through each interior face

    The flux is u (h_lo + h_hi) / 2 - (D_hi h_hi - D_lo h_lo) / width with
    D from cell_diffusion. Where D equals d this is the centered flux of the
    equation; elsewhere the added part is itself a difference of cell values
    of (D - d) h, so sums over faces still telescope. A, B >= 0.

    Args:
        u: Drift velocity (-a) at the faces
        d: Diffusion coefficient of the cells
        width: Cell width

    Returns:
        (A, B) arrays shaped like u
    """
    diffusion = cell_diffusion(u, d, width) / width
    forward = np.maximum(0.5 * u + diffusion[..., :-1], 0.0)
    backward = np.maximum(diffusion[..., 1:] - 0.5 * u, 0.0)
    return forward, backward


class FokkerPlanckSolver:
    """Explicit conservative solver on a fixed grid"""

    def __init__(self, grid: Grid2D, params: ModelParams, equation: Equation = Equation.FP,
                 event_bus: Optional[EventBus] = None):
        self.grid = grid
        self.params = params
        self.equation = equation
        self.events = event_bus

        xc, vc = grid.x_centers, grid.v_centers
        kp, tp = params.knowledge, params.trade

        # x faces do not depend on M_W, so their weights are fixed for the run
        a_x_faces, _, _, _ = fp_coefficients(grid.x_edges[1:-1], 0.0, params, 0.0)
        d_x = 0.5 * kp.delta * xc ** 2
        forward, backward = face_weights(-np.asarray(a_x_faces, dtype=float), d_x, grid.dx)
        self._fwd_x = forward[:, None]
        self._bwd_x = backward[:, None]

        self._psi_c = tp.psi.evaluate(xc)
        self._v_faces = grid.v_edges[1:-1]
        self._d_v = 0.5 * tp.sigma * np.outer(tp.phi.evaluate(xc) ** 2, vc ** 2)

    def _v_weights(self, mean_wealth: float) -> Tuple[np.ndarray, np.ndarray]:
        """Weights of the v faces, shape (nx, nv - 1)"""
        u = -self.params.trade.gamma * (np.outer(self._psi_c, self._v_faces) - mean_wealth)
        return face_weights(u, self._d_v, self.grid.dv)

    @staticmethod
    def _exit_rate(forward: np.ndarray, backward: np.ndarray, axis: int) -> np.ndarray:
        """Rate at which each cell loses mass through its two faces"""
        pad = [(0, 0)] * forward.ndim
        pad_hi, pad_lo = list(pad), list(pad)
        pad_hi[axis] = (0, 1)
        pad_lo[axis] = (1, 0)
        return np.pad(forward, pad_hi) + np.pad(backward, pad_lo)

    def stability_bound(self, mean_wealth: float) -> float:
        """
        Largest admissible dtau

        0.9 * min over cells of width / (A on the upper face + B on the lower
        face), which keeps every diagonal coefficient of the update nonnegative.
        """
        grid = self.grid
        rate_x = self._exit_rate(self._fwd_x, self._bwd_x, 0)
        rate_v = self._exit_rate(*self._v_weights(mean_wealth), 1)
        with np.errstate(divide='ignore'):
            t_x = np.where(rate_x > 0, grid.dx / rate_x, np.inf)
            t_v = np.where(rate_v > 0, grid.dv / rate_v, np.inf)
        return CFL_SAFETY * float(min(t_x.min(), t_v.min()))

    def _sweep_x(self, h: np.ndarray, dtau: float) -> np.ndarray:
        flux = self._fwd_x * h[:-1, :] - self._bwd_x * h[1:, :]

        net = np.zeros_like(h)
        net[:-1, :] += flux
        net[1:, :] -= flux
        return h - (dtau / self.grid.dx) * net

    def _sweep_v(self, h: np.ndarray, dtau: float, mean_wealth: float) -> np.ndarray:
        forward, backward = self._v_weights(mean_wealth)
        flux = forward * h[:, :-1] - backward * h[:, 1:]

        net = np.zeros_like(h)
        net[:, :-1] += flux
        net[:, 1:] -= flux
        return h - (dtau / self.grid.dv) * net

    def step(self, h: Field2D, dtau: float, mean_wealth: Optional[float] = None) -> Field2D:
        """
        One conservative update of length dtau

        Raises:
            StabilityError: dtau above the stability bound
        """
        if mean_wealth is None:
            mean_wealth = compute_MW(h, self.params)
        bound = self.stability_bound(mean_wealth)
        if dtau > bound * (1.0 + 1e-12):
            raise StabilityError(dtau, bound)

        values = self._sweep_x(h.values, dtau)
        values = self._sweep_v(values, dtau, mean_wealth)
        return Field2D(values=values, grid=h.grid, tau=h.tau + dtau)

    def _emit(self, event_type: EventType, data):
        if self.events is not None:
            self.events.emit(event_type, data, source='FokkerPlanckSolver')

    def _diagnostic_row(self, h: Field2D, l1_rate: float) -> Dict[str, float]:
        return {
            'tau': h.tau,
            'mass': h.mass(),
            'mean_wealth': h.mean_wealth(),
            'mean_knowledge': h.mean_knowledge(),
            'l1_rate': l1_rate,
        }

    def run(self, init: Field2D, t_final: float, tol: float,
            record_every: int = 100, max_steps: Optional[int] = None) -> Tuple[Field2D, FPDiagnostics]:
        """
        Step until tau = t_final or until the L1 change per unit time drops below tol
        """
        h = init
        initial_mass = h.mass()
        frozen_mw = compute_MW(h, self.params) if self.equation is Equation.FP2 else None
        rows = [self._diagnostic_row(h, float('nan'))]

        steps = 0
        stationary = False
        bound = float('nan')
        l1_rate = float('nan')
        self._emit(EventType.FP_STARTED, {'t_final': t_final, 'equation': self.equation.value})

        while h.tau < t_final - 1e-12:
            if max_steps is not None and steps >= max_steps:
                logger.warning(f"Stopped after max_steps={max_steps} at tau={h.tau:.6g}")
                break

            mean_wealth = frozen_mw if frozen_mw is not None else compute_MW(h, self.params)
            bound = self.stability_bound(mean_wealth)
            dtau = min(bound, t_final - h.tau)

            new = self.step(h, dtau, mean_wealth)
            l1_rate = float(np.abs(new.values - h.values).sum() * self.grid.cell_area / dtau)
            h = new
            steps += 1

            if l1_rate < tol:
                stationary = True
                rows.append(self._diagnostic_row(h, l1_rate))
                logger.info(f"Stationary at tau={h.tau:.6g} after {steps} steps (l1_rate={l1_rate:.3g})")
                self._emit(EventType.FP_STATIONARY, {'tau': h.tau, 'steps': steps})
                break

            if steps % record_every == 0:
                rows.append(self._diagnostic_row(h, l1_rate))
                logger.debug(f"tau={h.tau:.6g} mass={rows[-1]['mass']:.15g} l1_rate={l1_rate:.3g}")

        if rows[-1]['tau'] != h.tau:
            rows.append(self._diagnostic_row(h, l1_rate))

        history = pd.DataFrame(rows, columns=DIAGNOSTIC_COLUMNS)
        diagnostics = FPDiagnostics(
            history=history,
            steps=steps,
            stationary=stationary,
            stability_bound=bound,
            initial_mass=initial_mass,
            summary=self._summary(h, initial_mass, steps, stationary, bound, history),
        )
        self._emit(EventType.FP_FINISHED, {'steps': steps, 'tau': h.tau})
        return h, diagnostics

    def _summary(self, h: Field2D, initial_mass: float, steps: int, stationary: bool,
                 bound: float, history: pd.DataFrame) -> Dict[str, float]:
        values = h.values
        area = self.grid.cell_area
        # mass in the outermost row and column of cells
        edge_mass = float((values[-1, :].sum() + values[:, -1].sum() - values[-1, -1]) * area)
        return {
            'equation': self.equation.value,
            'steps': steps,
            'stationary': int(stationary),
            'tau': h.tau,
            'stability_bound': bound,
            'initial_mass': initial_mass,
            'final_mass': h.mass(),
            'mass_drift': h.mass() - initial_mass,
            'min_value': float(values.min()),
            'tail_mass': edge_mass,
            'mean_wealth_drift': float(history['mean_wealth'].iloc[-1] - history['mean_wealth'].iloc[0]),
        }


def fp_step(h: Field2D, mp: ModelParams, dtau: float, mean_wealth: Optional[float] = None) -> Field2D:
    """One Fokker-Planck step; M_W is computed from h unless given"""
    return FokkerPlanckSolver(h.grid, mp).step(h, dtau, mean_wealth)


def fp_run(grid: Grid2D, mp: ModelParams, init: Field2D, t_final: float, tol: float,
           equation: Equation = Equation.FP, record_every: int = 100,
           max_steps: Optional[int] = None,
           event_bus: Optional[EventBus] = None) -> Tuple[Field2D, FPDiagnostics]:
    """
    Validate and run the Fokker-Planck solver

    Raises:
        ParameterError: invalid coefficients or grid
    """
    report = validate_params(mp)
    report.extend(GridValidator().validate(grid))
    if not report.is_valid():
        raise ParameterError("Fokker-Planck inputs failed validation", report)

    logger.info(f"Solving {equation.value} on {grid.nx}x{grid.nv} grid up to tau={t_final:g}")
    solver = FokkerPlanckSolver(grid, mp, equation, event_bus)
    return solver.run(init, t_final, tol, record_every=record_every, max_steps=max_steps)


def _interval_density(edges: np.ndarray, low: float, high: float) -> np.ndarray:
    """Cell densities of the uniform law on (low, high)"""
    overlap = np.clip(np.minimum(edges[1:], high) - np.maximum(edges[:-1], low), 0.0, None)
    return overlap / ((high - low) * np.diff(edges))


def _point_density(edges: np.ndarray, point: float) -> np.ndarray:
    """
    Cell densities of a point mass, shared between the two nearest cell
    centers with linear weights so that the mean is exactly the point
    """
    widths = np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    weights = np.zeros(widths.size)
    if point <= centers[0]:
        weights[0] = 1.0
    elif point >= centers[-1]:
        weights[-1] = 1.0
    else:
        lo = int(np.searchsorted(centers, point, side='right')) - 1
        share = (point - centers[lo]) / (centers[lo + 1] - centers[lo])
        weights[lo] = 1.0 - share
        weights[lo + 1] = share
    return weights / widths


def product_initial_field(grid: Grid2D, init: InitSpec) -> Field2D:
    """
    Discretize the product of the Monte Carlo initial marginals

    Wealth is taken after the mean-1 rescaling, so EQUAL becomes a point mass
    at 1 and UNIFORM the uniform law on (0, 2).
    """
    if init.knowledge is InitKind.EQUAL:
        fx = _point_density(grid.x_edges, init.knowledge_value)
    else:
        fx = _interval_density(grid.x_edges, 0.0, init.knowledge_high)

    if init.wealth is InitKind.EQUAL:
        fv = _point_density(grid.v_edges, 1.0)
    else:
        fv = _interval_density(grid.v_edges, 0.0, 2.0)

    values = np.outer(fx, fv)
    mass = values.sum() * grid.cell_area
    if mass <= 0:
        raise ParameterError("initial datum has no mass inside the grid")
    return Field2D(values=values / mass, grid=grid, tau=0.0)


def field_marginal(h: Field2D, axis: str, edges: np.ndarray) -> np.ndarray:
    """
    Marginal density of h re-binned onto arbitrary edges

    The native marginal is piecewise constant, so its cumulative mass is
    piecewise linear and re-binning is exact.
    """
    if axis == 'x':
        native_edges, density = h.grid.x_edges, h.marginal_x()
    elif axis == 'v':
        native_edges, density = h.grid.v_edges, h.marginal_v()
    else:
        raise ValueError(f"axis must be 'x' or 'v', got {axis!r}")

    cumulative = np.concatenate([[0.0], np.cumsum(density * np.diff(native_edges))])
    cumulative /= cumulative[-1]
    at_edges = np.interp(edges, native_edges, cumulative, left=0.0, right=1.0)
    return np.diff(at_edges) / np.diff(edges)


def field_moments(h: Field2D) -> Dict[str, float]:
    """Means, variances and correlation of h by midpoint quadrature"""
    grid = h.grid
    mass = h.mass()
    weights = h.values * grid.cell_area / mass
    xx, vv = np.meshgrid(grid.x_centers, grid.v_centers, indexing='ij')

    mean_x = float((weights * xx).sum())
    mean_v = float((weights * vv).sum())
    var_x = float((weights * (xx - mean_x) ** 2).sum())
    var_v = float((weights * (vv - mean_v) ** 2).sum())
    cov = float((weights * (xx - mean_x) * (vv - mean_v)).sum())
    corr = cov / math.sqrt(var_x * var_v) if var_x > 0 and var_v > 0 else float('nan')

    return {
        'mean_knowledge': mean_x,
        'mean_wealth': mean_v,
        'var_knowledge': var_x,
        'var_wealth': var_v,
        'corr_xv': corr,
    }
