"""
Configuration management for wealthkin

A run is described by one RunConfig made of dataclass sections. Files are
TOML (``key = value`` within named sections) or the JSON echo written into
every bundle; both go through ``RunConfig.from_dict``, which rejects unknown
keys.
"""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin
import json
import logging

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from core.boltzmann import InitKind, InitSpec, SimConfig
from core.errors import ConfigError
from core.fokker_planck import Equation, Grid2D
from core.model import (
    BackgroundKind, BackgroundSpec, FunctionKind, FunctionSpec,
    KnowledgeParams, ModelParams, TradeParams,
)

logger = logging.getLogger('wealthkin.config')

PRESET_DIR = Path(__file__).resolve().parent.parent / "resources" / "presets"

# variance used when neither model.risk nor model.sigma is given
DEFAULT_SIGMA = 0.1


@dataclass
class ModelConfig:
    """Microscopic coefficients; functions and background are tables with a ``kind``"""
    selection: Dict[str, Any] = field(default_factory=lambda: {'kind': 'constant', 'value': 0.1})
    learning: Dict[str, Any] = field(default_factory=lambda: {'kind': 'constant', 'value': 0.1})
    delta: float = 0.1
    lambda_minus: Optional[float] = None
    lambda_plus: Optional[float] = None
    lambda_bar: Optional[float] = None
    background: Dict[str, Any] = field(default_factory=lambda: {'kind': 'uniform', 'a': 2.0})
    gamma: float = 0.1
    sigma: Optional[float] = None
    risk: Optional[float] = None
    psi: Dict[str, Any] = field(default_factory=lambda: {'kind': 'constant', 'value': 1.0})
    phi: Dict[str, Any] = field(default_factory=lambda: {'kind': 'power_law', 'exponent': 2.0})


@dataclass
class SimulationConfig:
    """Monte Carlo settings; dt, t_final and record_times are on the tau axis"""
    n_agents: int = 1_000_000
    dt: float = 1.0
    t_final: float = 100.0
    epsilon: float = 1.0
    record_times: List[float] = field(default_factory=list)
    wealth_init: str = "equal"
    wealth_value: float = 1.0
    knowledge_init: str = "uniform"
    knowledge_value: float = 0.5
    knowledge_high: float = 1.0
    workers: int = 1
    particle_sample: int = 1000


@dataclass
class FokkerPlanckConfig:
    x_max: float = 10.0
    v_max: float = 10.0
    nx: int = 200
    nv: int = 200
    t_final: float = 100.0
    tol: float = 1e-4
    equation: str = "fp"
    record_every: int = 100
    max_steps: Optional[int] = None


@dataclass
class AnalysisConfig:
    """Histogram and tail-fit settings; ranges default to [0, max(5, 1.05 max)]"""
    marginal_bins: int = 100
    joint_bins: int = 50
    profile_bins: int = 50
    top_fraction: float = 0.01
    knowledge_range: Optional[List[float]] = None
    wealth_range: Optional[List[float]] = None


@dataclass
class OutputConfig:
    directory: Path = Path("runs/latest")

    def __post_init__(self):
        if isinstance(self.directory, str):
            self.directory = Path(self.directory)


@dataclass
class LoggingConfig:
    """Logging configuration"""
    level: str = "INFO"  # DEBUG, INFO, WARNING, ERROR
    log_to_file: bool = False
    log_to_console: bool = True
    log_dir: Path = Path("logs")
    max_log_size_mb: int = 10
    backup_count: int = 5

    def __post_init__(self):
        if isinstance(self.log_dir, str):
            self.log_dir = Path(self.log_dir)


SECTIONS = {
    'model': ModelConfig,
    'simulation': SimulationConfig,
    'fokker_planck': FokkerPlanckConfig,
    'analysis': AnalysisConfig,
    'output': OutputConfig,
    'logging': LoggingConfig,
}


def _number(value: Any, name: str, cast=float):
    """Convert a config value to float or int, or raise ConfigError naming the key"""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if cast is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _coerce(section: str, f, value: Any) -> Any:
    """Check a section value against the numeric type its field declares"""
    target, optional = f.type, False
    if get_origin(target) is Union:
        args = [a for a in get_args(target) if a is not type(None)]
        target, optional = args[0], True
    name = f"{section}.{f.name}"

    if value is None and optional:
        return None
    if target in (float, int):
        return _number(value, name, target)
    if get_origin(target) is list and get_args(target) == (float,):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list of numbers, got {value!r}")
        return [_number(v, name) for v in value]
    return value


def _section_from_dict(section: str, data: Dict[str, Any]):
    cls = SECTIONS[section]
    if not isinstance(data, dict):
        raise ConfigError(f"[{section}] must be a table, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    return cls(**{key: _coerce(section, known[key], value) for key, value in data.items()})


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def parse_function(table: Dict[str, Any], name: str) -> FunctionSpec:
    """Build a FunctionSpec from ``{kind = "constant"|"power_law", ...}``"""
    table = dict(table)
    try:
        kind = FunctionKind(table.pop('kind'))
    except (KeyError, ValueError):
        raise ConfigError(f"{name}: kind must be one of {[k.value for k in FunctionKind]}")

    allowed = {'value'} if kind is FunctionKind.CONSTANT else {'exponent', 'coefficient'}
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}")

    if kind is FunctionKind.CONSTANT:
        return FunctionSpec.constant(_number(table.get('value', 1.0), f"{name}.value"))
    return FunctionSpec.power_law(
        _number(table.get('exponent', 0.0), f"{name}.exponent"),
        _number(table.get('coefficient', 1.0), f"{name}.coefficient"),
    )


def parse_background(table: Dict[str, Any]) -> BackgroundSpec:
    """Build a BackgroundSpec from ``{kind = "uniform", a = ...}`` or ``{kind = "point_mass", value = ...}``"""
    table = dict(table)
    try:
        kind = BackgroundKind(table.pop('kind'))
    except (KeyError, ValueError):
        raise ConfigError(f"background: kind must be one of {[k.value for k in BackgroundKind]}")

    key = 'a' if kind is BackgroundKind.UNIFORM else 'value'
    unknown = sorted(set(table) - {key})
    if unknown:
        raise ConfigError(f"unknown key(s) in background: {', '.join(unknown)}")
    if key not in table:
        raise ConfigError(f"background of kind {kind.value} needs '{key}'")

    value = _number(table[key], f"background.{key}")
    if kind is BackgroundKind.UNIFORM:
        return BackgroundSpec.uniform(value)
    return BackgroundSpec.point_mass(value)


def parse_value(text: str) -> Any:
    """Interpret a command-line value as a TOML literal, falling back to a bare string"""
    try:
        return tomllib.loads(f"value = {text}")['value']
    except tomllib.TOMLDecodeError:
        return text


def split_values(text: str) -> List[str]:
    """Split ``v1,v2,...`` at top-level commas (brackets and braces stay intact)"""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch in '[{':
            depth += 1
        elif ch in ']}':
            depth -= 1
        if ch == ',' and depth == 0:
            parts.append(''.join(current).strip())
            current = []
        else:
            current.append(ch)
    parts.append(''.join(current).strip())
    return [p for p in parts if p]


@dataclass
class RunConfig:
    """Main run configuration"""
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    fokker_planck: FokkerPlanckConfig = field(default_factory=FokkerPlanckConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def to_dict(self) -> dict:
        """Convert to dictionary for serialization"""
        return _jsonable(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> 'RunConfig':
        """
        Create from dictionary; missing keys keep their defaults

        Raises:
            ConfigError: unknown section or key
        """
        unknown = sorted(set(data) - set(SECTIONS) - {'seed'})
        if unknown:
            raise ConfigError(f"unknown key(s) at top level: {', '.join(unknown)}")

        config = cls(seed=_number(data.get('seed', 0), 'seed', int))
        for section in SECTIONS:
            if section in data:
                setattr(config, section, _section_from_dict(section, data[section]))
        return config

    def save(self, filepath: Path):
        """Save configuration as JSON"""
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)

        with open(filepath, 'w') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

        logger.info(f"Configuration saved to {filepath}")

    @classmethod
    def load(cls, filepath: Path) -> 'RunConfig':
        """
        Load configuration from a TOML or JSON file

        Raises:
            ConfigError: missing file, parse error or unknown keys
        """
        filepath = Path(filepath)
        if not filepath.exists():
            raise ConfigError(f"config file not found: {filepath}")

        try:
            if filepath.suffix == '.toml':
                with open(filepath, 'rb') as f:
                    data = tomllib.load(f)
            elif filepath.suffix == '.json':
                with open(filepath, 'r') as f:
                    data = json.load(f)
            else:
                raise ConfigError(f"unsupported config format '{filepath.suffix}' (use .toml or .json)")
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot parse {filepath}: {e}") from e

        config = cls.from_dict(data)
        logger.info(f"Configuration loaded from {filepath}")
        return config

    def with_overrides(self, assignments: Dict[str, Any]) -> 'RunConfig':
        """
        Copy with dotted assignments applied, e.g. ``{'model.gamma': 0.2}``

        Nested tables are addressed with further dots (``model.psi.exponent``).
        """
        data = self.to_dict()
        for dotted, value in assignments.items():
            keys = dotted.split('.')
            target = data
            for key in keys[:-1]:
                if not isinstance(target.get(key), dict):
                    raise ConfigError(f"cannot assign '{dotted}': '{key}' is not a table")
                target = target[key]
            target[keys[-1]] = value
        return RunConfig.from_dict(data)

    def to_model_params(self) -> ModelParams:
        """Build the domain parameters (validation happens in the solvers)"""
        m = self.model
        knowledge = KnowledgeParams(
            selection=parse_function(m.selection, 'selection'),
            learning=parse_function(m.learning, 'learning'),
            delta=float(m.delta),
            background=parse_background(m.background),
            lambda_minus=m.lambda_minus,
            lambda_plus=m.lambda_plus,
            lambda_bar=m.lambda_bar,
        )

        psi = parse_function(m.psi, 'psi')
        phi = parse_function(m.phi, 'phi')
        if m.risk is not None and m.sigma is not None:
            raise ConfigError("give either model.risk or model.sigma, not both")
        if m.risk is not None:
            trade = TradeParams(gamma=float(m.gamma), risk=float(m.risk), psi=psi, phi=phi)
        else:
            sigma = DEFAULT_SIGMA if m.sigma is None else float(m.sigma)
            if not sigma >= 0:
                raise ConfigError(f"model.sigma={sigma:g} must be >= 0")
            trade = TradeParams.from_sigma(float(m.gamma), sigma, psi, phi)

        return ModelParams(knowledge=knowledge, trade=trade)

    def to_sim_config(self) -> SimConfig:
        s = self.simulation
        try:
            init = InitSpec(
                wealth=InitKind(s.wealth_init),
                wealth_value=float(s.wealth_value),
                knowledge=InitKind(s.knowledge_init),
                knowledge_value=float(s.knowledge_value),
                knowledge_high=float(s.knowledge_high),
            )
        except ValueError as e:
            raise ConfigError(f"simulation init: {e}") from e

        return SimConfig(
            n_agents=int(s.n_agents),
            dt=float(s.dt),
            t_final=float(s.t_final),
            epsilon=float(s.epsilon),
            seed=int(self.seed),
            record_times=[float(t) for t in s.record_times],
            init=init,
            workers=int(s.workers),
        )

    def to_grid(self) -> Grid2D:
        fp = self.fokker_planck
        return Grid2D(x_max=float(fp.x_max), v_max=float(fp.v_max), nx=int(fp.nx), nv=int(fp.nv))

    def equation(self) -> Equation:
        try:
            return Equation(self.fokker_planck.equation)
        except ValueError:
            raise ConfigError(f"fokker_planck.equation must be 'fp' or 'fp2', got {self.fokker_planck.equation!r}")


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.toml"))


def load_preset(name: str) -> RunConfig:
    """Load a named preset from resources/presets"""
    path = PRESET_DIR / f"{name}.toml"
    if not path.exists():
        raise ConfigError(f"unknown preset '{name}' (available: {', '.join(list_presets())})")
    return RunConfig.load(path)


def parse_grid(text: str):
    """Parse ``NXxNV`` into (nx, nv)"""
    try:
        nx, nv = (int(part) for part in text.lower().split('x'))
    except ValueError:
        raise ConfigError(f"grid must look like 200x200, got {text!r}")
    return nx, nv
