"""
Configuración de escenarios: archivos planos "clave = valor" con comentarios '#'.

Todas las claves tienen un valor por defecto tipado en OPTIONS. El parser acumula
todos los problemas (clave desconocida, tipo inválido, regla entre campos) con su
número de línea y recuerda qué valores se completaron por defecto.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from .closures import (AccelerationLaw, DensityFunction, LinearSpeed, PowerLaw, SaturatingAccelerationLaw,
                       TabulatedFunction, validate_pressure)
from .equilibrium import DEFAULT_TOL, MaxwellianTable, build_maxwellian_table
from .exceptions import ConfigIssue, ConfigurationError
from .kinetic_core import ModelParams, build_grid

logger = logging.getLogger(__name__)

SCENARIOS = ("fundamental_diagram", "diffusion_profile", "bump", "riemann", "stopgo",
             "micro_compare", "wspace_bump")
MODELS = ("boltzmann", "bgk", "modified_bgk", "arz")
KINETIC_SCENARIOS = ("bump", "riemann", "stopgo")
PRESSURE_SCENARIOS = ("micro_compare", "wspace_bump")


def _number(text: str) -> float:
    # Acepta fracciones como 1/4
    return float(Fraction(text.strip()))


def _integer(text: str) -> int:
    value = Fraction(text.strip())
    if value.denominator != 1:
        raise ValueError(f"{text!r} no es entero")
    return int(value)


def _boolean(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "si", "sí"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"{text!r} no es booleano")


def _number_list(text: str) -> List[float]:
    return [_number(item) for item in text.split(",") if item.strip()]


def _choice(*allowed: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = text.strip()
        if value not in allowed:
            raise ValueError(f"{value!r} no es uno de {', '.join(allowed)}")
        return value
    return parse


@dataclass(frozen=True)
class Option:
    key: str
    attr: str
    parse: Callable[[str], Any]
    default: Any
    type_name: str


OPTIONS = [
    Option("scenario", "scenario", _choice(*SCENARIOS), None, "escenario"),
    Option("model", "model", _choice(*MODELS), "boltzmann", "modelo"),
    Option("n_speeds", "n_speeds", _integer, 5, "entero"),
    Option("delta_a", "delta_a", _number, 0.25, "real"),
    Option("delta_b", "delta_b", _number, None, "real"),
    Option("r", "r", _number_list, [1.0], "lista de reales"),
    Option("round_jumps", "round_jumps", _boolean, False, "booleano"),
    Option("p_law", "p_law", _choice("saturating", "power"), "saturating", "saturating|power"),
    Option("p_m", "p_m", _number, 2.0, "real"),
    Option("p_gamma", "p_gamma", _number, 1.0, "real"),
    Option("table.n_rho", "n_rho", _integer, 101, "entero"),
    Option("table.tol", "table_tol", _number, DEFAULT_TOL, "real"),
    Option("table.warm_start", "warm_start", _boolean, False, "booleano"),
    Option("x_min", "x_min", _number, -1.0, "real"),
    Option("x_max", "x_max", _number, 1.0, "real"),
    Option("n_cells", "n_cells", _integer, 200, "entero"),
    Option("boundary", "boundary", _choice("periodic", "free_outflow"), "periodic", "frontera"),
    Option("cfl", "cfl", _number, 0.9, "real"),
    Option("llf_alpha", "llf_alpha", _choice("local", "global"), "global", "local|global"),
    Option("dt", "dt", _number, None, "real"),
    Option("eps.kind", "eps_kind", _choice("constant", "variable"), "constant", "constant|variable"),
    Option("eps.value", "eps_value", _number, 0.01, "real"),
    Option("eps.eps0", "eps0", _number, 0.99, "real"),
    Option("a", "a", _number, 0.2, "real"),
    Option("b", "b", _number, 0.2, "real"),
    Option("rho_left", "rho_left", _number, 0.2, "real"),
    Option("rho_right", "rho_right", _number, 0.9, "real"),
    Option("x_jump", "x_jump", _number, 0.0, "real"),
    Option("pressure.kind", "pressure_kind", _choice("none", "power", "table"), "none", "none|power|table"),
    Option("pressure.c", "pressure_c", _number, 1.5, "real"),
    Option("pressure.m", "pressure_m", _number, 2.0, "real"),
    Option("pressure.rho", "pressure_rho", _number_list, [], "lista de reales"),
    Option("pressure.values", "pressure_values", _number_list, [], "lista de reales"),
    Option("hesitation.c", "hesitation_c", _number, 1.5, "real"),
    Option("hesitation.m", "hesitation_m", _number, 2.0, "real"),
    Option("u_eq", "u_eq", _choice("kinetic", "linear"), "kinetic", "kinetic|linear"),
    Option("w_refine", "w_refine", _integer, 1, "entero"),
    Option("t_final", "t_final", _number, 1.0, "real"),
    Option("output_times", "output_times", _number_list, [], "lista de reales"),
    Option("n_outputs", "n_outputs", _integer, 5, "entero"),
    Option("per_node", "per_node", _boolean, False, "booleano"),
    Option("out_dir", "out_dir", str.strip, "kinetra_out", "ruta"),
    Option("seed", "seed", _integer, 0, "entero"),
    Option("micro.n_vehicles", "n_vehicles", _integer, 200, "entero"),
    Option("micro.eps", "micro_eps", _number, None, "real"),
    Option("micro.interaction", "interaction", _choice("headway", "ftl"), "headway", "headway|ftl"),
    Option("micro.c_gamma", "c_gamma", _number, 1.0, "real"),
    Option("micro.gamma", "gamma", _number, 1.0, "real"),
    Option("micro.dt", "micro_dt", _number, None, "real"),
    Option("micro.jitter", "jitter", _number, 0.5, "real"),
]
OPTIONS_BY_KEY = {option.key: option for option in OPTIONS}

# Valores por defecto que dependen del escenario
SCENARIO_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "riemann": {"boundary": "free_outflow"},
    "stopgo": {"a": 0.7, "t_final": 10.0, "eps.kind": "variable"},
    "wspace_bump": {"model": "modified_bgk", "pressure.kind": "power", "llf_alpha": "local"},
    "micro_compare": {"model": "modified_bgk", "pressure.kind": "power", "llf_alpha": "local"},
}


@dataclass
class ScenarioConfig:
    """Configuración validada; los atributos siguen la columna attr de OPTIONS."""
    scenario: str
    model: str = "boltzmann"
    n_speeds: int = 5
    delta_a: float = 0.25
    delta_b: Optional[float] = None
    r: List[float] = field(default_factory=lambda: [1.0])
    round_jumps: bool = False
    p_law: str = "saturating"
    p_m: float = 2.0
    p_gamma: float = 1.0
    n_rho: int = 101
    table_tol: float = DEFAULT_TOL
    warm_start: bool = False
    x_min: float = -1.0
    x_max: float = 1.0
    n_cells: int = 200
    boundary: str = "periodic"
    cfl: float = 0.9
    llf_alpha: str = "global"
    dt: Optional[float] = None
    eps_kind: str = "constant"
    eps_value: float = 0.01
    eps0: float = 0.99
    a: float = 0.2
    b: float = 0.2
    rho_left: float = 0.2
    rho_right: float = 0.9
    x_jump: float = 0.0
    pressure_kind: str = "none"
    pressure_c: float = 1.5
    pressure_m: float = 2.0
    pressure_rho: List[float] = field(default_factory=list)
    pressure_values: List[float] = field(default_factory=list)
    hesitation_c: float = 1.5
    hesitation_m: float = 2.0
    u_eq: str = "kinetic"
    w_refine: int = 1
    t_final: float = 1.0
    output_times: List[float] = field(default_factory=list)
    n_outputs: int = 5
    per_node: bool = False
    out_dir: str = "kinetra_out"
    seed: int = 0
    n_vehicles: int = 200
    micro_eps: Optional[float] = None
    interaction: str = "headway"
    c_gamma: float = 1.0
    gamma: float = 1.0
    micro_dt: Optional[float] = None
    jitter: float = 0.5
    # Fuera del archivo: lo fija la CLI
    jobs: int = 1
    source_text: str = ""
    explicit: Dict[str, Any] = field(default_factory=dict)
    defaults_filled: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def brake_jumps(self) -> List[float]:
        """Δb efectivos: el valor explícito o Δa/r para cada r."""
        if self.delta_b is not None:
            return [self.delta_b]
        return [self.delta_a / r for r in self.r]

    def value(self, key: str) -> Any:
        return getattr(self, OPTIONS_BY_KEY[key].attr)

    def echo(self) -> List[Tuple[str, Any, bool]]:
        """(clave, valor, vino_por_defecto) en el orden de OPTIONS."""
        return [(o.key, self.value(o.key), o.key in self.defaults_filled) for o in OPTIONS]


def _read_pairs(text: str, issues: List[ConfigIssue]) -> Dict[str, Tuple[str, int]]:
    pairs: Dict[str, Tuple[str, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            issues.append(ConfigIssue("se esperaba 'clave = valor'", line=number))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in OPTIONS_BY_KEY:
            issues.append(ConfigIssue("clave desconocida", key=key, line=number))
            continue
        if key in pairs:
            issues.append(ConfigIssue(f"clave repetida (ya definida en la línea {pairs[key][1]})",
                                      key=key, line=number))
            continue
        pairs[key] = (value, number)
    return pairs


def _cross_validate(config: ScenarioConfig, lines: Dict[str, int], issues: List[ConfigIssue]) -> None:
    def issue(message: str, *keys: str) -> None:
        line = next((lines[k] for k in keys if k in lines), None)
        found = ConfigIssue(message, key=", ".join(keys), line=line)
        if found not in issues:
            issues.append(found)

    def warn(message: str) -> None:
        config.warnings.append(message)

    scenario, model = config.scenario, config.model
    if config.n_speeds < 2:
        issue("se necesitan al menos 2 velocidades", "n_speeds")
    else:
        for delta_b in config.brake_jumps:
            try:
                build_grid(config.n_speeds, config.delta_a, delta_b, round_jumps=config.round_jumps)
            except ConfigurationError as error:
                for found in error.issues:
                    keys = (found.key, "n_speeds") if found.key else ("n_speeds",)
                    if found.key == "delta_b" and "delta_b" not in lines:
                        keys = ("delta_a", "r", "n_speeds")
                    issue(found.message, *keys)
    if "delta_b" in lines and "r" in lines:
        issue("delta_b y r son excluyentes", "delta_b", "r")
    if any(r <= 0 for r in config.r):
        issue("los valores de r deben ser positivos", "r")
    if config.p_m <= 0:
        issue("debe ser positivo", "p_m")
    if config.p_gamma <= 0:
        issue("debe ser positivo", "p_gamma")
    if config.n_rho < 3:
        issue("se necesitan al menos 3 muestras", "table.n_rho")
    if config.n_cells < 4:
        issue("se necesitan al menos 4 celdas", "n_cells")
    if config.x_max <= config.x_min:
        issue("x_max debe ser mayor que x_min", "x_min", "x_max")
    if not 0 < config.cfl <= 1:
        issue("debe estar en (0, 1]", "cfl")
    if config.dt is not None and config.dt <= 0:
        issue("debe ser positivo", "dt")
    if config.eps_value <= 0:
        issue("debe ser positivo", "eps.value")
    if not 0 < config.eps0 < 1:
        issue("debe estar en (0, 1)", "eps.eps0")
    if config.a < 0 or config.b < 0 or config.a + config.b > 1:
        issue("la densidad inicial a + b·e^{-8x²} debe quedar en [0, 1]", "a", "b")
    for key in ("rho_left", "rho_right"):
        if not 0 <= config.value(key) <= 1:
            issue("debe estar en [0, 1]", key)
    if config.t_final <= 0:
        issue("debe ser positivo", "t_final")
    if any(t < 0 for t in config.output_times):
        issue("los tiempos deben ser no negativos", "output_times")
    if config.output_times and "t_final" in lines and max(config.output_times) != config.t_final:
        warn(f"t_final={config.t_final:g} no coincide con el último tiempo de salida "
             f"{max(config.output_times):g}; se usa output_times")
    if config.n_outputs < 1:
        issue("debe ser al menos 1", "n_outputs")
    if config.w_refine < 1:
        issue("debe ser al menos 1", "w_refine")

    needs_pressure = model == "modified_bgk" or scenario in PRESSURE_SCENARIOS
    if needs_pressure and config.pressure_kind == "none":
        issue(f"el escenario {scenario} con modelo {model} requiere una presión", "pressure.kind", "model")
    if not needs_pressure and config.pressure_kind != "none":
        warn(f"pressure.kind={config.pressure_kind} se ignora con modelo {model}")
    if config.pressure_kind == "table":
        if len(config.pressure_rho) < 3 or len(config.pressure_rho) != len(config.pressure_values):
            issue("la presión tabulada requiere listas de igual longitud (>= 3)",
                  "pressure.rho", "pressure.values")
    if config.pressure_kind == "power" and (config.pressure_c <= 0 or config.pressure_m < 1):
        issue("la presión c·ρ^m requiere c > 0 y m >= 1", "pressure.c", "pressure.m")
    if config.pressure_kind != "none" and not issues:
        try:
            validate_pressure(build_pressure(config))
        except ConfigurationError as error:
            issue(str(error), "pressure.kind")

    if scenario in KINETIC_SCENARIOS and model not in ("boltzmann", "bgk"):
        issue(f"el escenario {scenario} admite los modelos boltzmann y bgk", "model")
    if scenario in PRESSURE_SCENARIOS and model != "modified_bgk":
        issue(f"el escenario {scenario} usa el modelo modified_bgk", "model")
    if scenario == "fundamental_diagram" and model != "boltzmann":
        warn("fundamental_diagram solo usa las maxwellianas; model se ignora")
    if model == "arz" and scenario != "diffusion_profile":
        issue("el modelo arz solo está disponible en diffusion_profile", "model")
    if model == "arz" and (config.hesitation_c <= 0 or config.hesitation_m < 1):
        issue("la hesitación c·ρ^m requiere c > 0 y m >= 1", "hesitation.c", "hesitation.m")
    if scenario == "stopgo" and config.eps_kind != "variable":
        warn("stopgo sin eps.kind = variable: las ondas stop-and-go aparecen con ε variable")
    if scenario == "micro_compare":
        if config.boundary != "periodic":
            issue("micro_compare necesita frontera periódica (anillo)", "boundary")
        if config.eps_kind != "constant":
            issue("micro_compare usa ε constante (el mismo en ambos modelos)", "eps.kind")
        if config.n_vehicles < 2:
            issue("se necesitan al menos 2 vehículos", "micro.n_vehicles")
        if not 0 <= config.jitter < 1:
            issue("debe estar en [0, 1)", "micro.jitter")
        if config.micro_eps is not None and config.micro_eps <= 0:
            issue("debe ser positivo", "micro.eps")
        if config.c_gamma <= 0 or config.gamma <= 0:
            issue("C_γ y γ deben ser positivos", "micro.c_gamma", "micro.gamma")


def parse_config(text: str) -> ScenarioConfig:
    """Valida el texto completo; lanza ConfigurationError con todos los problemas."""
    issues: List[ConfigIssue] = []
    pairs = _read_pairs(text, issues)
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for key, (raw, number) in pairs.items():
        option = OPTIONS_BY_KEY[key]
        try:
            values[key] = option.parse(raw)
            lines[key] = number
        except (ValueError, ZeroDivisionError) as error:
            issues.append(ConfigIssue(f"se esperaba {option.type_name}: {error}", key=key, line=number))

    if "scenario" not in pairs:
        issues.append(ConfigIssue("falta la clave obligatoria", key="scenario"))
    if "scenario" not in values:
        raise ConfigurationError(issues)

    scenario = values["scenario"]
    defaults = dict(SCENARIO_DEFAULTS.get(scenario, {}))
    settings: Dict[str, Any] = {}
    filled: List[str] = []
    for option in OPTIONS:
        if option.key in values:
            settings[option.attr] = values[option.key]
        else:
            default = defaults.get(option.key, option.default)
            settings[option.attr] = list(default) if isinstance(default, list) else default
            filled.append(option.key)
    config = ScenarioConfig(**settings)
    config.source_text = text
    config.explicit = dict(values)
    config.defaults_filled = filled
    _cross_validate(config, lines, issues)
    if issues:
        raise ConfigurationError(issues)

    logger.info("configuración %s válida; %d valores por defecto", scenario, len(filled))
    for key in filled:
        logger.debug("por defecto: %s = %s", key, config.value(key))
    for message in config.warnings:
        logger.warning(message)
    return config


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigurationError(f"no se pudo leer {path}: {error}") from error
    return parse_config(text)


def build_model_params(config: ScenarioConfig, index: int = 0) -> ModelParams:
    """Parámetros del modelo para el index-ésimo Δb de la configuración."""
    grid = build_grid(config.n_speeds, config.delta_a, config.brake_jumps[index], round_jumps=config.round_jumps)
    return ModelParams(grid=grid, prob_law=build_acceleration(config))


def build_acceleration(config: ScenarioConfig) -> DensityFunction:
    """P(ρ) = 1 - ρ^m (saturating, por defecto) o (1 - ρ)^γ (power)."""
    if config.p_law == "power":
        return AccelerationLaw(config.p_gamma)
    return SaturatingAccelerationLaw(config.p_m)


def build_table(config: ScenarioConfig, params: ModelParams) -> MaxwellianTable:
    return build_maxwellian_table(params, n_rho=config.n_rho, tol=config.table_tol,
                                  warm_start=config.warm_start, jobs=config.jobs)


def build_pressure(config: ScenarioConfig) -> Optional[DensityFunction]:
    if config.pressure_kind == "power":
        return PowerLaw(config.pressure_c, config.pressure_m)
    if config.pressure_kind == "table":
        return TabulatedFunction(config.pressure_rho, config.pressure_values)
    return None


def build_hesitation(config: ScenarioConfig) -> DensityFunction:
    return PowerLaw(config.hesitation_c, config.hesitation_m)


def build_u_eq(config: ScenarioConfig, table: Optional[MaxwellianTable] = None) -> DensityFunction:
    """U_eq analítica (1 - ρ) o la de las maxwellianas tabuladas."""
    if config.u_eq == "linear" or table is None:
        return LinearSpeed()
    return TabulatedFunction(table.rho_samples, table.u_eq)
