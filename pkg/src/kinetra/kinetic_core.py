"""
Núcleo cinético: malla de velocidades discretas, tablas de interacción binaria,
operador de colisión tipo Boltzmann Q[f,f] y momentos en velocidad.

La distribución f se guarda como pesos de Dirac por nodo de velocidad, de modo
que todas las integrales en v son sumas simples.

Relaciones:
- Consumido por equilibrium (relajación homogénea) y por solver1d (paso de colisión)
- La probabilidad de acelerar P(ρ) viene de closures.AccelerationLaw
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .closures import RHO_MAX, V_MAX, AccelerationLaw, DensityFunction, validate_acceleration
from .exceptions import ConfigIssue, ConfigurationError, DomainError

logger = logging.getLogger(__name__)

# Tolerancia relativa para decidir si un salto es múltiplo del espaciado
JUMP_RTOL = 1e-12
# Exceso de densidad admitido por errores de redondeo
DENSITY_OVERSHOOT = 1e-8


@dataclass(frozen=True)
class VelocityGrid:
    """Nodos equidistantes v_k = k/(n_speeds-1) en [0, V_M] con saltos enteros."""
    n_speeds: int
    accel_steps: int
    brake_steps: int
    v_max: float = V_MAX

    @property
    def spacing(self) -> float:
        return self.v_max / (self.n_speeds - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_speeds) * self.spacing

    @property
    def delta_a(self) -> float:
        return self.accel_steps * self.spacing

    @property
    def delta_b(self) -> float:
        return self.brake_steps * self.spacing


def _jump_in_steps(name: str, delta: float, spacing: float, round_jumps: bool, issues: list) -> int:
    steps = delta / spacing
    nearest = int(round(steps))
    if abs(steps - nearest) <= JUMP_RTOL * max(1.0, abs(steps)):
        return nearest
    if round_jumps:
        logger.warning("%s=%.6g no es múltiplo de h=%.6g; se redondea a %d nodos (%.6g)",
                       name, delta, spacing, nearest, nearest * spacing)
        return nearest
    issues.append(ConfigIssue(
        f"{delta:.6g} no es múltiplo entero del espaciado h={spacing:.6g} ({steps:.6g} nodos)", key=name))
    return nearest


def build_grid(n_speeds: int, delta_a: float, delta_b: float, round_jumps: bool = False) -> VelocityGrid:
    """
    Construye y valida la malla de velocidades.

    Con round_jumps=True los saltos no divisibles se redondean al nodo más cercano
    (y se registra el redondeo); en caso contrario se rechazan.
    """
    if int(n_speeds) != n_speeds or n_speeds < 2:
        raise ConfigurationError(ConfigIssue(f"se necesitan al menos 2 velocidades, se recibió {n_speeds}",
                                             key="n_speeds"))
    n_speeds = int(n_speeds)
    spacing = V_MAX / (n_speeds - 1)
    issues = []
    if delta_a <= 0:
        issues.append(ConfigIssue(f"debe ser positivo, se recibió {delta_a}", key="delta_a"))
    if delta_b < 0:
        issues.append(ConfigIssue(f"debe ser no negativo, se recibió {delta_b}", key="delta_b"))
    if issues:
        raise ConfigurationError(issues)
    a_steps = _jump_in_steps("delta_a", delta_a, spacing, round_jumps, issues)
    b_steps = _jump_in_steps("delta_b", delta_b, spacing, round_jumps, issues)
    if not issues and a_steps < 1:
        issues.append(ConfigIssue("el salto de aceleración se redondea a 0 nodos", key="delta_a"))
    if issues:
        raise ConfigurationError(issues)
    return VelocityGrid(n_speeds=n_speeds, accel_steps=a_steps, brake_steps=b_steps)


@dataclass(frozen=True)
class ModelParams:
    grid: VelocityGrid
    prob_law: DensityFunction = field(default_factory=AccelerationLaw)
    rho_max: float = RHO_MAX

    def __post_init__(self):
        validate_acceleration(self.prob_law)

    def probability(self, rho):
        return self.prob_law.value(rho)


@dataclass(frozen=True)
class InteractionTables:
    """Índices destino de la regla de interacción; no dependen de ρ."""
    accel_target: np.ndarray
    brake_target_slower: np.ndarray
    brake_target_faster: np.ndarray


def build_interaction_tables(grid: VelocityGrid) -> InteractionTables:
    k = np.arange(grid.n_speeds)
    accel = np.minimum(k + grid.accel_steps, grid.n_speeds - 1)
    # v_* <= v^*: frena desde su propia velocidad; v_* > v^*: desde la del líder
    brake = np.maximum(k - grid.brake_steps, 0)
    return InteractionTables(accel_target=accel, brake_target_slower=brake.copy(),
                             brake_target_faster=brake.copy())


@dataclass(frozen=True)
class KineticState:
    """Pesos f(v_k) en un punto del espacio."""
    weights: np.ndarray
    rho_max: float = RHO_MAX

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", weights)
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DomainError("los pesos de la distribución deben ser finitos y no negativos")
        if weights.sum() > self.rho_max + DENSITY_OVERSHOOT:
            raise DomainError(f"densidad {weights.sum():.6g} mayor que rho_max={self.rho_max:g}")

    @property
    def density(self) -> float:
        return float(self.weights.sum())


def collision_terms(f: np.ndarray, tables: InteractionTables, prob) -> tuple:
    """
    Términos de ganancia y pérdida de Q[f,f] para un lote de estados f (..., n).

    prob es P(ρ) evaluada por estado (escalar o arreglo con la forma de f[..., 0]).
    Las sumas sobre parejas (k_*, k^*) se reducen con sumas de cola
    S_i = Σ_{j>=i} f_j, así que el costo es lineal en el número de nodos.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    rho = f.sum(axis=-1, keepdims=True)
    prob = np.asarray(prob, dtype=float)[..., None]
    tail = np.cumsum(f[..., ::-1], axis=-1)[..., ::-1]
    tail_next = np.concatenate([tail[..., 1:], np.zeros_like(tail[..., :1])], axis=-1)

    accel = prob * rho * f
    brake_slower = (1.0 - prob) * f * tail
    brake_faster = (1.0 - prob) * f * tail_next

    targets = np.concatenate([tables.accel_target, tables.brake_target_slower, tables.brake_target_faster])
    sources = np.concatenate([accel, brake_slower, brake_faster], axis=-1)
    gain_t = np.zeros((n,) + f.shape[:-1])
    np.add.at(gain_t, targets, np.moveaxis(sources, -1, 0))
    gain = np.moveaxis(gain_t, 0, -1)
    loss = f * rho
    return gain, loss


def collision_rates(f: np.ndarray, params: ModelParams, tables: InteractionTables, prob=None) -> np.ndarray:
    """Q[f,f] para un lote de estados; prob permite congelar P(ρ)."""
    if prob is None:
        prob = params.probability(np.asarray(f).sum(axis=-1))
    gain, loss = collision_terms(f, tables, prob)
    return gain - loss


def collision_operator(state: KineticState, params: ModelParams, tables: InteractionTables,
                       prob: Optional[float] = None) -> np.ndarray:
    """Q[f,f](v_k) para todos los nodos de un estado homogéneo."""
    if not isinstance(state, KineticState):
        weights = np.asarray(state, dtype=float)
        if np.any(weights < 0):
            raise DomainError("el operador de colisión requiere pesos no negativos")
        state = KineticState(weights, rho_max=params.rho_max)
    return collision_rates(state.weights, params, tables, prob=prob)


class Moments(NamedTuple):
    density: float
    flux: float
    mean_speed: float
    variance: float
    energy: float


def moments_array(f: np.ndarray, nodes: np.ndarray):
    """Momentos de un lote (..., n). La velocidad media del vacío es 0."""
    f = np.asarray(f, dtype=float)
    density = f.sum(axis=-1)
    flux = (f * nodes).sum(axis=-1)
    energy = (f * nodes ** 2).sum(axis=-1)
    safe = np.where(density > 0, density, 1.0)
    mean_speed = np.where(density > 0, flux / safe, 0.0)
    variance = (f * (nodes - mean_speed[..., None]) ** 2).sum(axis=-1)
    return density, flux, mean_speed, variance, energy


def moments(state: KineticState, grid: VelocityGrid) -> Moments:
    weights = state.weights if isinstance(state, KineticState) else np.asarray(state, dtype=float)
    values = moments_array(weights, grid.nodes)
    return Moments(*(float(v) for v in values))
