"""
Monte Carlo solver for the joint wealth-knowledge kinetic equation

Nanbu-Babovsky style particle scheme: per step every agent meets the
background with probability dt/epsilon, then floor(N dt / (2 epsilon)) disjoint
random pairs trade. Time is measured on the rescaled axis tau = epsilon t.
"""

from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math
import time

import numpy as np
import pandas as pd

from core.analytics.distribution_analyzer import moments
from core.errors import ParameterError
from core.events import EventBus, EventType
from core.model import ModelParams, TradeParams, exchange, knowledge_post_interaction
from core.report import RunReport
from core.sampling import (
    RngStream, StreamRole, open_uniform, sample_background, sample_disjoint_pairs,
    sample_eta, sample_kappa, sample_selection,
)
from core.validation.validator import SimConfigValidator, validate_params

logger = logging.getLogger('wealthkin.boltzmann')

# Agents (or pairs) per random-stream chunk; fixed so results do not depend on worker count
CHUNK_SIZE = 1 << 16

MOMENT_COLUMNS = ['t', 'mean_knowledge', 'mean_wealth', 'var_knowledge', 'var_wealth', 'corr_xv']


class InitKind(Enum):
    EQUAL = "equal"
    UNIFORM = "uniform"


@dataclass
class InitSpec:
    """
    Initial agent distribution

    Wealth: EQUAL gives every agent ``wealth_value``; UNIFORM draws on
    (0, 2 * wealth_value). Mean wealth is rescaled to 1 afterwards.
    Knowledge: EQUAL gives ``knowledge_value``; UNIFORM draws on (0, knowledge_high).
    """
    wealth: InitKind = InitKind.EQUAL
    wealth_value: float = 1.0
    knowledge: InitKind = InitKind.UNIFORM
    knowledge_value: float = 0.5
    knowledge_high: float = 1.0


@dataclass
class SimConfig:
    """Monte Carlo run settings; dt, t_final and record_times are on the tau axis"""
    n_agents: int = 1_000_000
    dt: float = 1.0
    t_final: float = 100.0
    epsilon: float = 1.0
    seed: int = 0
    record_times: List[float] = field(default_factory=list)
    init: InitSpec = field(default_factory=InitSpec)
    workers: int = 1

    @property
    def interaction_probability(self) -> float:
        """Probability that an agent interacts in one step"""
        return self.dt / self.epsilon

    @property
    def pairs_per_step(self) -> int:
        return int(math.floor(self.n_agents * self.interaction_probability / 2.0 + 1e-9))

    @property
    def n_steps(self) -> int:
        steps = self.t_final / self.dt
        nearest = round(steps)
        if abs(steps - nearest) <= 1e-9 * max(1.0, steps):
            return int(nearest)
        return int(math.floor(steps))


@dataclass
class Population:
    """Empirical measure of N agents at time t"""
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0
    step_index: int = 0

    def __len__(self) -> int:
        return self.x.size

    def copy(self) -> 'Population':
        return Population(self.x.copy(), self.v.copy(), self.t, self.step_index)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'x': self.x, 'v': self.v})


def _chunks(n: int) -> List[Tuple[int, int, int]]:
    return [(c, start, min(start + CHUNK_SIZE, n)) for c, start in enumerate(range(0, n, CHUNK_SIZE))]


def apply_scaling(mp: ModelParams, epsilon: float) -> ModelParams:
    """
    Quasi-invariant scaling of the interaction coefficients

    lambda, lambda_B and gamma are multiplied by epsilon; kappa and eta by
    sqrt(epsilon), i.e. delta and sigma by epsilon. Psi, Phi and the
    background are unchanged.

    Raises:
        ParameterError: if epsilon is outside (0, 1] or the scaled set is invalid
    """
    if not (0 < epsilon <= 1):
        raise ParameterError(f"epsilon={epsilon:g} must lie in (0, 1]")
    if epsilon == 1.0:
        return mp

    kp = mp.knowledge
    scaled_knowledge = replace(
        kp,
        selection=kp.selection.scaled(epsilon),
        learning=kp.learning.scaled(epsilon),
        delta=kp.delta * epsilon,
        lambda_minus=kp.lambda_minus * epsilon,
        lambda_plus=kp.lambda_plus * epsilon,
        lambda_bar=kp.lambda_bar * epsilon,
    )
    tp = mp.trade
    scaled_trade = TradeParams.from_sigma(tp.gamma * epsilon, tp.sigma * epsilon, tp.psi, tp.phi)
    scaled = ModelParams(knowledge=scaled_knowledge, trade=scaled_trade)

    report = validate_params(scaled)
    if not report.is_valid():
        raise ParameterError(f"parameters scaled by epsilon={epsilon:g} are invalid", report)

    logger.debug(f"Scaled parameters by epsilon={epsilon:g}: {scaled.describe()}")
    return scaled


def init_population(cfg: SimConfig, rng: RngStream) -> Population:
    """Draw the initial agents and normalize the mean wealth to 1"""
    n = cfg.n_agents
    init = cfg.init

    if init.wealth is InitKind.EQUAL:
        v = np.full(n, init.wealth_value, dtype=float)
    else:
        gen = rng.substream(StreamRole.INIT_WEALTH).generator()
        v = 2.0 * init.wealth_value * open_uniform(gen, n)
    v = v / v.mean()

    if init.knowledge is InitKind.EQUAL:
        x = np.full(n, init.knowledge_value, dtype=float)
    else:
        gen = rng.substream(StreamRole.INIT_KNOWLEDGE).generator()
        x = init.knowledge_high * open_uniform(gen, n)

    return Population(x=x, v=v, t=0.0, step_index=0)


class BoltzmannSolver:
    """
    Particle solver for the joint kinetic equation

    Work is split into fixed-size chunks, each with its own random substream,
    so a run with any number of workers reproduces the sequential run bit for bit.
    """

    def __init__(self, params: ModelParams, workers: int = 1, event_bus: Optional[EventBus] = None):
        self.params = params
        self.workers = max(1, int(workers))
        self.events = event_bus
        self._executor: Optional[ThreadPoolExecutor] = None

    def __enter__(self):
        if self.workers > 1:
            self._executor = ThreadPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def _map(self, fn: Callable, items: Sequence):
        if self._executor is None:
            for item in items:
                fn(item)
        else:
            list(self._executor.map(fn, items))

    def _knowledge_phase(self, pop: Population, probability: float, rng: RngStream):
        kp = self.params.knowledge
        k = pop.step_index

        def update(chunk):
            c, start, stop = chunk
            size = stop - start
            selected = sample_selection(probability, rng.substream(StreamRole.SELECTION, k, c), size)
            z = sample_background(kp.background, rng.substream(StreamRole.BACKGROUND, k, c), size)
            kappa = sample_kappa(kp, rng.substream(StreamRole.KAPPA, k, c), size)
            x_old = pop.x[start:stop]
            x_new = knowledge_post_interaction(x_old, z, kappa, kp)
            pop.x[start:stop] = np.where(selected, x_new, x_old)

        self._map(update, _chunks(len(pop)))

    def _trade_phase(self, pop: Population, n_pairs: int, rng: RngStream):
        tp = self.params.trade
        n = len(pop)
        k = pop.step_index

        # odd population with a near-perfect matching: rotate the agent that sits out
        exclude = k % n if n - 2 * n_pairs == 1 else None
        pairs = sample_disjoint_pairs(n, n_pairs, rng.substream(StreamRole.PAIRING, k), exclude)

        def trade(chunk):
            c, start, stop = chunk
            size = stop - start
            i = pairs[start:stop, 0]
            j = pairs[start:stop, 1]
            eta1 = sample_eta(tp, rng.substream(StreamRole.ETA, k, c, 1), size)
            eta2 = sample_eta(tp, rng.substream(StreamRole.ETA, k, c, 2), size)
            v_star, w_star = exchange(pop.x[i], pop.v[i], pop.x[j], pop.v[j], eta1, eta2, tp)
            pop.v[i] = v_star
            pop.v[j] = w_star

        self._map(trade, _chunks(n_pairs))

    def step(self, pop: Population, dt: float, rng: RngStream, epsilon: float = 1.0) -> Population:
        """
        Advance the population by one time step

        Knowledge interactions first, then trades. Returns a new Population;
        the input is left untouched.
        """
        probability = dt / epsilon
        n_pairs = int(math.floor(len(pop) * probability / 2.0 + 1e-9))

        new = pop.copy()
        self._knowledge_phase(new, probability, rng)
        self._trade_phase(new, n_pairs, rng)
        new.step_index = pop.step_index + 1
        new.t = new.step_index * dt
        return new

    def _emit(self, event_type: EventType, data):
        if self.events is not None:
            self.events.emit(event_type, data, source='BoltzmannSolver')

    def run(self, cfg: SimConfig) -> RunReport:
        """Iterate steps to t_final, recording moments every step and snapshots at record_times"""
        rng = RngStream(cfg.seed)
        pop = init_population(cfg, rng)
        record_times = sorted(set(cfg.record_times))

        rows = [moments(pop).as_row(pop.t)]
        snapshots: Dict[float, Population] = {}
        if any(math.isclose(t, 0.0, abs_tol=1e-12) for t in record_times):
            snapshots[0.0] = pop.copy()

        n_steps = cfg.n_steps
        self._emit(EventType.RUN_STARTED, {'n_agents': cfg.n_agents, 'n_steps': n_steps, 'seed': cfg.seed})
        start = time.perf_counter()

        with self:
            for _ in range(n_steps):
                pop = self.step(pop, cfg.dt, rng, cfg.epsilon)
                m = moments(pop)
                rows.append(m.as_row(pop.t))

                for t in record_times:
                    if math.isclose(t, pop.t, rel_tol=1e-9, abs_tol=1e-12):
                        snapshots[t] = pop.copy()
                        self._emit(EventType.SNAPSHOT_RECORDED, {'t': t})

                self._emit(EventType.STEP_COMPLETED, {
                    'step': pop.step_index, 't': pop.t,
                    'mean_knowledge': m.mean_knowledge, 'mean_wealth': m.mean_wealth,
                })

        elapsed = time.perf_counter() - start
        self._emit(EventType.RUN_FINISHED, {'steps': n_steps, 'seconds': elapsed})

        return RunReport(
            config={},
            moments=pd.DataFrame(rows, columns=MOMENT_COLUMNS),
            snapshots=snapshots,
            final=pop,
            timings={'boltzmann_steps': elapsed},
        )


def step(pop: Population, mp: ModelParams, dt: float, rng: RngStream,
         epsilon: float = 1.0) -> Population:
    """One time step with already scaled parameters"""
    return BoltzmannSolver(mp).step(pop, dt, rng, epsilon)


def run(cfg: SimConfig, mp: ModelParams, event_bus: Optional[EventBus] = None) -> RunReport:
    """
    Validate, scale and run one Monte Carlo simulation

    Raises:
        ParameterError: with the full violation list when inputs are invalid
    """
    report = validate_params(mp)
    report.extend(SimConfigValidator().validate(cfg))
    if not report.is_valid():
        raise ParameterError("simulation inputs failed validation", report)
    for warning in report.get_warnings():
        logger.warning(repr(warning))

    scaled = apply_scaling(mp, cfg.epsilon)
    logger.info(
        f"Running {cfg.n_agents} agents for {cfg.n_steps} steps "
        f"(dt={cfg.dt:g}, epsilon={cfg.epsilon:g}, seed={cfg.seed})"
    )
    return BoltzmannSolver(scaled, workers=cfg.workers, event_bus=event_bus).run(cfg)


def _ensemble_member(args) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    cfg, mp = args
    result = run(cfg, mp)
    frame = result.moments
    return frame['t'].to_numpy(), frame['mean_wealth'].to_numpy(), frame['var_wealth'].to_numpy()


def run_ensemble(cfg: SimConfig, mp: ModelParams, seeds: Sequence[int],
                 workers: int = 1) -> pd.DataFrame:
    """
    Mean-wealth statistics over independent seeds

    Returns:
        Frame with columns t, grand_mean_wealth, combined_se (from the
        within-run variances) and seed_se (spread across seeds)
    """
    members = [(replace(cfg, seed=int(seed), record_times=[]), mp) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ensemble_member, members))
    else:
        results = [_ensemble_member(m) for m in members]

    t = results[0][0]
    means = np.vstack([r[1] for r in results])
    variances = np.vstack([r[2] for r in results])
    n_seeds = means.shape[0]

    combined_se = np.sqrt(np.sum(variances / cfg.n_agents, axis=0)) / n_seeds
    seed_se = means.std(axis=0, ddof=1) / math.sqrt(n_seeds) if n_seeds > 1 else np.full(t.size, np.nan)

    logger.info(f"Ensemble of {n_seeds} seeds finished")
    return pd.DataFrame({
        't': t,
        'grand_mean_wealth': means.mean(axis=0),
        'combined_se': combined_se,
        'seed_se': seed_se,
    })
