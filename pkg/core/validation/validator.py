"""
Validation framework for model parameters, simulation settings and grids
"""

from typing import List, Dict, Any, Optional
from dataclasses import dataclass
from enum import Enum
import logging
import math

from core.model import FunctionKind, FunctionSpec, BackgroundKind, ModelParams

logger = logging.getLogger('wealthkin.validation')

# Shared floating-point slack for bound comparisons
BOUND_TOLERANCE = 1e-12

MIN_GRID_CELLS = 16


class Severity(Enum):
    """Validation message severity levels"""
    ERROR = "error"      # Must be fixed
    WARNING = "warning"  # Should be reviewed


@dataclass
class ValidationResult:
    """Result of a validation check"""
    field: str
    message: str
    severity: Severity
    code: str
    context: Optional[Dict[str, Any]] = None

    def __repr__(self):
        return f"{self.severity.value.upper()}: {self.field} - {self.message} [{self.code}]"


class ValidationReport:
    """Collection of validation results"""

    def __init__(self):
        self.results: List[ValidationResult] = []

    def add(self, field: str, message: str, severity: Severity,
            code: str, context: Optional[Dict] = None):
        """Add a validation result"""
        self.results.append(ValidationResult(field, message, severity, code, context))

    def add_error(self, field: str, message: str, code: str, context: Optional[Dict] = None):
        self.add(field, message, Severity.ERROR, code, context)

    def add_warning(self, field: str, message: str, code: str, context: Optional[Dict] = None):
        self.add(field, message, Severity.WARNING, code, context)

    def extend(self, other: 'ValidationReport'):
        """Append every result of another report"""
        self.results.extend(other.results)

    def has_errors(self) -> bool:
        return any(r.severity == Severity.ERROR for r in self.results)

    def get_errors(self) -> List[ValidationResult]:
        return [r for r in self.results if r.severity == Severity.ERROR]

    def get_warnings(self) -> List[ValidationResult]:
        return [r for r in self.results if r.severity == Severity.WARNING]

    def codes(self) -> List[str]:
        """Codes of all errors, in insertion order"""
        return [r.code for r in self.get_errors()]

    def is_valid(self) -> bool:
        """Check if validation passed (no errors)"""
        return not self.has_errors()

    def summary(self) -> str:
        errors = len(self.get_errors())
        warnings = len(self.get_warnings())
        return f"Validation: {errors} error(s), {warnings} warning(s)"

    def __str__(self):
        lines = [self.summary()]
        for result in self.results:
            lines.append(f"  {result!r}")
        return "\n".join(lines)


class ModelParamsValidator:
    """Check every invariant of the model coefficients"""

    def validate(self, mp: ModelParams) -> ValidationReport:
        """
        Collect every violated constraint

        Args:
            mp: Model parameters to check

        Returns:
            ValidationReport listing all violations, not just the first
        """
        report = ValidationReport()

        self._validate_function('knowledge.lambda', mp.knowledge.selection, report)
        self._validate_function('knowledge.lambda_b', mp.knowledge.learning, report, allow_zero=True)
        self._validate_function('trade.psi', mp.trade.psi, report)
        self._validate_function('trade.phi', mp.trade.phi, report)

        self._validate_knowledge(mp, report)
        self._validate_background(mp, report)
        self._validate_trade(mp, report)

        logger.debug(f"Validated model parameters: {report.summary()}")
        return report

    def _validate_function(self, name: str, spec: FunctionSpec, report: ValidationReport,
                           allow_zero: bool = False):
        if spec.kind is FunctionKind.CONSTANT:
            too_small = spec.value < 0 if allow_zero else spec.value <= 0
            if too_small or not math.isfinite(spec.value):
                bound = ">= 0" if allow_zero else "> 0"
                report.add_error(
                    name,
                    f"constant value {spec.value:g} must be finite and {bound}",
                    'FUNCTION_VALUE',
                    {'value': spec.value}
                )
        else:
            if not spec.exponent > 0:
                report.add_error(
                    name,
                    f"power-law exponent {spec.exponent:g} must be > 0",
                    'FUNCTION_EXPONENT',
                    {'exponent': spec.exponent}
                )
            if not spec.coefficient > 0:
                report.add_error(
                    name,
                    f"power-law coefficient {spec.coefficient:g} must be > 0",
                    'FUNCTION_VALUE',
                    {'coefficient': spec.coefficient}
                )

    def _validate_knowledge(self, mp: ModelParams, report: ValidationReport):
        kp = mp.knowledge
        lam_minus, lam_plus, lam_bar = kp.lambda_minus, kp.lambda_plus, kp.lambda_bar

        if not (0 < lam_minus <= lam_plus < 1):
            report.add_error(
                'knowledge.lambda_bounds',
                f"declared bounds must satisfy 0 < lambda_minus <= lambda_plus < 1, "
                f"got lambda_minus={lam_minus:g}, lambda_plus={lam_plus:g}",
                'LAMBDA_BOUNDS',
                {'lambda_minus': lam_minus, 'lambda_plus': lam_plus}
            )
        if kp.selection.inf() < lam_minus - BOUND_TOLERANCE or kp.selection.sup() > lam_plus + BOUND_TOLERANCE:
            report.add_error(
                'knowledge.lambda',
                f"lambda(x)={kp.selection} leaves [{lam_minus:g}, {lam_plus:g}] for some x >= 0",
                'LAMBDA_BOUNDS',
                {'inf': kp.selection.inf(), 'sup': kp.selection.sup()}
            )

        if not (0 <= lam_bar < 1):
            report.add_error(
                'knowledge.lambda_bar',
                f"lambda_bar={lam_bar:g} must lie in [0, 1)",
                'LAMBDA_B_BOUNDS',
                {'lambda_bar': lam_bar}
            )
        if kp.learning.inf() < 0 or kp.learning.sup() > lam_bar + BOUND_TOLERANCE:
            report.add_error(
                'knowledge.lambda_b',
                f"lambda_B(x)={kp.learning} leaves [0, {lam_bar:g}] for some x >= 0",
                'LAMBDA_B_BOUNDS',
                {'sup': kp.learning.sup()}
            )

        if kp.delta < 0 or not math.isfinite(kp.delta):
            report.add_error(
                'knowledge.delta',
                f"kappa variance delta={kp.delta:g} must be finite and >= 0",
                'DELTA_NEGATIVE',
                {'delta': kp.delta}
            )
        elif kp.kappa_amplitude > 1.0 - lam_plus + BOUND_TOLERANCE:
            report.add_error(
                'knowledge.delta',
                f"sqrt(delta)={kp.kappa_amplitude:.6g} exceeds 1 - lambda_plus={1.0 - lam_plus:.6g}; "
                f"post-interaction knowledge could become negative",
                'KAPPA_BOUND',
                {'sqrt_delta': kp.kappa_amplitude, 'limit': 1.0 - lam_plus}
            )

    def _validate_background(self, mp: ModelParams, report: ValidationReport):
        bg = mp.knowledge.background
        if bg.kind is BackgroundKind.UNIFORM and not (bg.parameter > 0 and math.isfinite(bg.parameter)):
            report.add_error(
                'knowledge.background',
                f"uniform background width a={bg.parameter:g} must be finite and > 0",
                'BACKGROUND_RANGE',
                {'a': bg.parameter}
            )
        if bg.kind is BackgroundKind.POINT_MASS and not (bg.parameter >= 0 and math.isfinite(bg.parameter)):
            report.add_error(
                'knowledge.background',
                f"point-mass background M={bg.parameter:g} must be finite and >= 0",
                'BACKGROUND_RANGE',
                {'value': bg.parameter}
            )

    def _validate_trade(self, mp: ModelParams, report: ValidationReport):
        tp = mp.trade
        if not (0 < tp.gamma < 1):
            report.add_error(
                'trade.gamma',
                f"saving propensity gamma={tp.gamma:g} must lie in (0, 1)",
                'GAMMA_RANGE',
                {'gamma': tp.gamma}
            )
        if tp.risk < 0 or not math.isfinite(tp.risk):
            report.add_error(
                'trade.risk',
                f"risk amplitude r={tp.risk:g} must be finite and >= 0",
                'RISK_NEGATIVE',
                {'risk': tp.risk}
            )

        margin = tp.nonnegativity_margin()
        if margin < -BOUND_TOLERANCE:
            report.add_error(
                'trade',
                f"nonnegativity guarantee violated: 1 - gamma*sup(Psi) - r*sup(Phi) = {margin:.6g} < 0",
                'NONNEGATIVITY_GUARANTEE',
                {'margin': margin}
            )


class SimConfigValidator:
    """Check Monte Carlo run settings"""

    def validate(self, cfg) -> ValidationReport:
        report = ValidationReport()

        if cfg.n_agents < 2:
            report.add_error('simulation.n_agents', f"need at least 2 agents, got {cfg.n_agents}", 'TOO_FEW_AGENTS')
        if not (0 < cfg.epsilon <= 1):
            report.add_error(
                'simulation.epsilon',
                f"scaling parameter epsilon={cfg.epsilon:g} must lie in (0, 1]",
                'EPSILON_RANGE',
                {'epsilon': cfg.epsilon}
            )
        if not (0 < cfg.dt <= 1):
            report.add_error('simulation.dt', f"dt={cfg.dt:g} must lie in (0, 1]", 'DT_RANGE', {'dt': cfg.dt})
        elif 0 < cfg.epsilon <= 1 and cfg.interaction_probability > 1 + BOUND_TOLERANCE:
            report.add_error(
                'simulation.dt',
                f"interaction probability dt/epsilon={cfg.interaction_probability:g} exceeds 1",
                'DT_RANGE',
                {'dt': cfg.dt, 'epsilon': cfg.epsilon}
            )
        elif cfg.n_agents >= 2 and 0 < cfg.epsilon <= 1 and cfg.pairs_per_step < 1:
            report.add_error(
                'simulation.dt',
                f"floor(N*dt/(2*epsilon)) = 0 trades per step for N={cfg.n_agents}, dt={cfg.dt:g}",
                'NO_PAIRS'
            )

        if cfg.t_final < 0:
            report.add_error('simulation.t_final', f"t_final={cfg.t_final:g} must be >= 0", 'T_FINAL_RANGE')
        elif cfg.dt > 0:
            steps = cfg.t_final / cfg.dt
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                report.add_warning(
                    'simulation.t_final',
                    f"t_final={cfg.t_final:g} is not a multiple of dt={cfg.dt:g}; "
                    f"the run stops after {cfg.n_steps} steps",
                    'T_FINAL_GRID'
                )

        for t in cfg.record_times:
            if t < 0 or t > cfg.t_final + BOUND_TOLERANCE:
                report.add_warning(
                    'simulation.record_times',
                    f"record time {t:g} lies outside [0, {cfg.t_final:g}] and will never be captured",
                    'RECORD_TIME_RANGE'
                )

        if cfg.workers < 1:
            report.add_error('simulation.workers', f"workers={cfg.workers} must be >= 1", 'WORKERS_RANGE')

        return report


class GridValidator:
    """Check the truncated Fokker-Planck domain"""

    def validate(self, grid) -> ValidationReport:
        report = ValidationReport()
        if grid.nx < MIN_GRID_CELLS or grid.nv < MIN_GRID_CELLS:
            report.add_error(
                'fokker_planck.grid',
                f"grid {grid.nx}x{grid.nv} is too small; need at least {MIN_GRID_CELLS} cells per axis",
                'GRID_TOO_SMALL'
            )
        if not (grid.x_max > 0 and grid.v_max > 0):
            report.add_error(
                'fokker_planck.domain',
                f"domain bounds x_max={grid.x_max:g}, v_max={grid.v_max:g} must be > 0",
                'DOMAIN_RANGE'
            )
        return report


def validate_params(mp: ModelParams) -> ValidationReport:
    """Full violation list for a set of model parameters"""
    return ModelParamsValidator().validate(mp)
