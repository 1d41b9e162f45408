"""
Solver de volúmenes finitos 1D para el modelo cinético (Boltzmann) y su aproximación BGK.

Cada paso es un splitting de primer orden: transporte con flujo de Lax-Friedrichs
(disipación max_k |v_k| por defecto, o |v_k| por rebanada) y después colisión.
El término de colisión de Boltzmann se penaliza con un operador BGK para que el paso
no dependa de ε; la colisión BGK se resuelve exacta.

Relaciones:
- Consume equilibrium (maxwellianas interpoladas) y kinetic_core (Q[f,f])
- wspace reutiliza llf_update, ghost cells y el manejo de ε
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .equilibrium import MaxwellianTable
from .exceptions import CFLError, ConfigurationError, DomainError, SolverAbort
from .kinetic_core import DENSITY_OVERSHOOT, VelocityGrid, build_interaction_tables, collision_rates, moments_array

logger = logging.getLogger(__name__)

DEFAULT_CFL = 0.9
DEFAULT_EPS0 = 0.99
BETA_MIN = 0.1
# Valores por debajo de -NEGATIVITY_ATOL se consideran negatividad real
NEGATIVITY_ATOL = 1e-14


class Boundary(Enum):
    PERIODIC = "periodic"
    FREE_OUTFLOW = "free_outflow"


class EpsilonKind(Enum):
    CONSTANT = "constant"
    VARIABLE = "variable"


class KineticModel(Enum):
    BOLTZMANN = "boltzmann"
    BGK = "bgk"
    TRANSPORT = "transport"


@dataclass(frozen=True)
class Mesh1D:
    x_min: float
    x_max: float
    n_cells: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.n_cells < 4:
            raise ConfigurationError(f"se necesitan al menos 4 celdas, se recibió {self.n_cells}")
        if self.x_max <= self.x_min:
            raise ConfigurationError("x_max debe ser mayor que x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class KineticField:
    """Valores f(x_j, v_k) con forma (n_cells, n_speeds)."""
    mesh: Mesh1D
    grid: VelocityGrid
    values: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return self.values.sum(axis=-1)

    def with_values(self, values: np.ndarray) -> "KineticField":
        return KineticField(self.mesh, self.grid, values)


@dataclass(frozen=True)
class EpsilonModel:
    kind: EpsilonKind = EpsilonKind.CONSTANT
    value: float = 0.01
    eps0: float = DEFAULT_EPS0

    def __post_init__(self):
        object.__setattr__(self, "kind", EpsilonKind(self.kind))
        if self.kind is EpsilonKind.CONSTANT and self.value <= 0:
            raise ConfigurationError(f"ε constante debe ser positivo, se recibió {self.value}")
        if self.kind is EpsilonKind.VARIABLE and not 0 < self.eps0 < 1:
            raise ConfigurationError(f"eps0 debe estar en (0, 1), se recibió {self.eps0}")


def eval_epsilon(model: EpsilonModel, rho, rho_x=0.0):
    """ε(ρ, ρ_x) = 1 / max{1/(1-min{ρ,ε0}²), 1+max{ρ_x,0}²} o la constante."""
    rho = np.asarray(rho, dtype=float)
    if model.kind is EpsilonKind.CONSTANT:
        return np.full_like(rho, model.value)
    capped = np.minimum(rho, model.eps0)
    steep = np.maximum(np.asarray(rho_x, dtype=float), 0.0)
    return np.minimum(1.0 - capped ** 2, 1.0 / (1.0 + steep ** 2))


def with_ghosts(values: np.ndarray, boundary: Boundary) -> np.ndarray:
    """Agrega una celda fantasma a cada lado (envoltura periódica o copia del borde)."""
    if boundary is Boundary.PERIODIC:
        return np.concatenate([values[-1:], values, values[:1]], axis=0)
    return np.concatenate([values[:1], values, values[-1:]], axis=0)


def llf_update(values: np.ndarray, speeds: np.ndarray, dt: float, dx: float, boundary: Boundary,
               global_alpha: Optional[float] = None) -> np.ndarray:
    """
    Un paso de transporte f_t + (a f)_x = 0 por nodo con flujo de Lax-Friedrichs local.

    speeds tiene forma (n_nodos,) o (n_cells, n_nodos). El coeficiente de disipación
    en cada interfaz es el máximo de |a| en las dos celdas, o global_alpha si se da.
    """
    f = with_ghosts(values, boundary)
    a = with_ghosts(np.broadcast_to(speeds, values.shape), boundary)
    f_left, f_right = f[:-1], f[1:]
    a_left, a_right = a[:-1], a[1:]
    if global_alpha is None:
        alpha = np.maximum(np.abs(a_left), np.abs(a_right))
    else:
        alpha = global_alpha
    flux = 0.5 * (a_left * f_left + a_right * f_right) - 0.5 * alpha * (f_right - f_left)
    return values - (dt / dx) * (flux[1:] - flux[:-1])


def cfl_dt(mesh: Mesh1D, max_speed: float, cfl: float = DEFAULT_CFL) -> float:
    if not 0 < cfl <= 1:
        raise ConfigurationError(f"cfl debe estar en (0, 1], se recibió {cfl}")
    return cfl * mesh.dx / max_speed


def transport_step(field: KineticField, dt: float, cfl: float = DEFAULT_CFL,
                   global_alpha: bool = True) -> KineticField:
    """
    Transporte de cada rebanada de velocidad v_k con flujo LLF.

    Con global_alpha la disipación es max_k |v_k| en todas las rebanadas; si no, |v_k|
    por rebanada, que para velocidad constante coincide con upwind.
    """
    max_dt = cfl_dt(field.mesh, field.grid.v_max, cfl)
    if dt > max_dt * (1.0 + 1e-12):
        raise CFLError(dt, max_dt)
    alpha = field.grid.v_max if global_alpha else None
    values = llf_update(field.values, field.grid.nodes, dt, field.mesh.dx, field.mesh.boundary,
                        global_alpha=alpha)
    return field.with_values(values)


def density_gradient(rho: np.ndarray, mesh: Mesh1D) -> np.ndarray:
    """Diferencias centrales (ρ_{j+1} - ρ_{j-1})/(2dx); unilateral en bordes abiertos."""
    if mesh.boundary is Boundary.PERIODIC:
        return (np.roll(rho, -1) - np.roll(rho, 1)) / (2.0 * mesh.dx)
    return np.gradient(rho, mesh.dx)


def compute_rho_x(field: KineticField) -> np.ndarray:
    return density_gradient(field.density, field.mesh)


def _cell_epsilon(field: KineticField, eps_model: EpsilonModel, rho_x=None) -> np.ndarray:
    rho = field.density
    if eps_model.kind is EpsilonKind.VARIABLE and rho_x is None:
        rho_x = compute_rho_x(field)
    return eval_epsilon(eps_model, rho, 0.0 if rho_x is None else rho_x)


def collision_step_bgk(field: KineticField, dt: float, eps_model: EpsilonModel, table: MaxwellianTable,
                       rho_x=None) -> KineticField:
    """Relajación exacta f = M + (f - M) e^{-dt/ε}; ρ y por tanto M no cambian."""
    eps = _cell_epsilon(field, eps_model, rho_x)
    maxwellian = table.interpolate(field.density)
    decay = np.exp(-dt / eps)[:, None]
    return field.with_values(maxwellian + (field.values - maxwellian) * decay)


def collision_step_boltzmann(field: KineticField, dt: float, eps_model: EpsilonModel, table: MaxwellianTable,
                             rho_x=None, beta_min: float = BETA_MIN) -> KineticField:
    """
    df/dt = Q[f,f]/ε con penalización BGK.

    Q = [Q - β(M - f)] + β(M - f): la parte entre corchetes es explícita en f^n y la
    parte BGK es implícita. Con β >= ρ el paso conserva la positividad.
    """
    eps = _cell_epsilon(field, eps_model, rho_x)
    f = field.values
    rho = field.density
    maxwellian = table.interpolate(rho)
    rates = collision_rates(f, table.params, _tables_for(table.grid))
    beta = np.maximum(rho, beta_min)[:, None]
    lam = (dt / eps)[:, None]
    explicit = f + lam * (rates - beta * (maxwellian - f))
    return field.with_values((explicit + lam * beta * maxwellian) / (1.0 + lam * beta))


_TABLE_CACHE = {}


def _tables_for(grid: VelocityGrid):
    if grid not in _TABLE_CACHE:
        _TABLE_CACHE[grid] = build_interaction_tables(grid)
    return _TABLE_CACHE[grid]


def check_values(values: np.ndarray, step: int, rho_max: float = 1.0) -> None:
    """Aborta ante NaN, negatividad o densidad por encima de ρ_M."""
    bad = ~np.isfinite(values)
    if np.any(bad):
        cell, node = np.argwhere(bad)[0]
        raise SolverAbort("valor no finito", int(cell), int(node), step)
    negative = values < -NEGATIVITY_ATOL
    if np.any(negative):
        cell, node = np.argwhere(negative)[0]
        raise SolverAbort(f"valor negativo {values[cell, node]:.3e}", int(cell), int(node), step)
    rho = values.sum(axis=-1)
    if np.any(rho > rho_max + DENSITY_OVERSHOOT):
        cell = int(np.argmax(rho))
        raise SolverAbort(f"densidad {rho[cell]:.12g} por encima de ρ_M", cell, -1, step)


def bump_density(x, a: float, b: float) -> np.ndarray:
    """ρ0(x) = a + b e^{-8x²}."""
    return a + b * np.exp(-8.0 * np.asarray(x, dtype=float) ** 2)


def riemann_density(x, rho_left: float, rho_right: float, x_jump: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where(x < x_jump, rho_left, rho_right)


def maxwellian_field(mesh: Mesh1D, table: MaxwellianTable, rho0: np.ndarray) -> KineticField:
    """Dato inicial maxweliano f0(x_j, ·) = M_f(·; ρ0(x_j))."""
    return KineticField(mesh, table.grid, table.interpolate(rho0))


@dataclass
class Snapshot:
    t: float
    step: int
    rho: np.ndarray
    flux: np.ndarray
    u: np.ndarray
    eps: np.ndarray
    values: Optional[np.ndarray] = None
    # Solo en el espacio w: q = Σ w g
    q: Optional[np.ndarray] = None


@dataclass
class RunResult:
    model: str
    snapshots: List[Snapshot]
    n_steps: int = 0
    dt_min: float = float("inf")
    dt_max: float = 0.0
    mass_initial: float = 0.0
    mass_final: float = 0.0
    max_mass_step_drift: float = 0.0
    max_collision_drift: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def relative_mass_drift(self) -> float:
        return abs(self.mass_final - self.mass_initial) / max(self.mass_initial, 1e-300)

    def record_dt(self, dt: float) -> None:
        self.n_steps += 1
        self.dt_min = min(self.dt_min, dt)
        self.dt_max = max(self.dt_max, dt)


def output_schedule(t_final: float, output_times: Optional[Sequence[float]] = None, n_outputs: int = 5):
    """
    Tiempos de salida ordenados, siempre con t=0.

    Si se dan output_times, reemplazan a t_final: el último de ellos es el fin de la corrida.
    Si no, n_outputs + 1 tiempos equiespaciados en [0, t_final].
    """
    if output_times:
        times = sorted(set(float(t) for t in output_times) | {0.0})
    else:
        times = list(np.linspace(0.0, t_final, n_outputs + 1))
    if any(t < 0 for t in times):
        raise ConfigurationError("los tiempos de salida deben ser no negativos")
    return times


def _kinetic_snapshot(field: KineticField, t: float, step: int, eps: np.ndarray, keep_values: bool) -> Snapshot:
    rho, flux, u, _, _ = moments_array(field.values, field.grid.nodes)
    return Snapshot(t, step, rho, flux, u, np.asarray(eps, dtype=float),
                    field.values.copy() if keep_values else None)


def simulate(field0: KineticField, table: Optional[MaxwellianTable], eps_model: EpsilonModel,
             model: KineticModel, times: Sequence[float], cfl: float = DEFAULT_CFL,
             global_alpha: bool = True, dt_fixed: Optional[float] = None,
             keep_values: bool = False) -> RunResult:
    """
    Integra desde field0 y guarda una instantánea en cada tiempo de times.

    El paso CFL se recorta para caer exactamente en el siguiente tiempo de salida.
    Los valores se revisan tras el transporte, antes de interpolar maxwellianas, y al
    final del paso. Un SolverAbort lleva el tiempo del paso fallido y las salidas ya
    guardadas en partial.
    """
    model = KineticModel(model)
    mesh = field0.mesh
    field = field0
    rho_max = table.params.rho_max if table is not None else 1.0
    check_values(field.values, 0, rho_max)
    max_dt = cfl_dt(mesh, field.grid.v_max, cfl)
    if dt_fixed is not None and dt_fixed > max_dt * (1.0 + 1e-12):
        raise CFLError(dt_fixed, max_dt)
    base_dt = dt_fixed if dt_fixed is not None else max_dt

    result = RunResult(model=model.value, snapshots=[])
    result.mass_initial = float(field.values.sum())
    t = 0.0
    step = 0
    pending = list(times)
    eps_cells = _cell_epsilon(field, eps_model) if model is not KineticModel.TRANSPORT else np.zeros(mesh.n_cells)
    while pending:
        target = pending[0]
        if target - t <= 1e-12 * max(1.0, target):
            result.snapshots.append(_kinetic_snapshot(field, t, step, eps_cells, keep_values))
            pending.pop(0)
            continue
        dt = min(base_dt, target - t)
        mass_before = field.values.sum()
        try:
            field = transport_step(field, dt, cfl=cfl, global_alpha=global_alpha)
            check_values(field.values, step + 1, rho_max)
            if model is not KineticModel.TRANSPORT:
                rho_before = field.density
                rho_x = compute_rho_x(field) if eps_model.kind is EpsilonKind.VARIABLE else None
                eps_cells = _cell_epsilon(field, eps_model, rho_x)
                if model is KineticModel.BGK:
                    field = collision_step_bgk(field, dt, eps_model, table, rho_x=rho_x)
                else:
                    field = collision_step_boltzmann(field, dt, eps_model, table, rho_x=rho_x)
                result.max_collision_drift = max(result.max_collision_drift,
                                                 float(np.abs(field.density - rho_before).max()))
                check_values(field.values, step + 1, rho_max)
        except SolverAbort as error:
            error.t = t + dt
            result.mass_final = float(mass_before)
            error.partial = result
            logger.error("corrida %s interrumpida en t=%.6f: %s", model.value, error.t, error)
            raise
        step += 1
        t += dt
        if mesh.boundary is Boundary.PERIODIC:
            drift = abs(field.values.sum() - mass_before) / max(mass_before, 1e-300)
            result.max_mass_step_drift = max(result.max_mass_step_drift, float(drift))
        result.record_dt(dt)
        logger.debug("paso %d t=%.6f dt=%.3e masa=%.15g", step, t, dt, field.values.sum())
    result.mass_final = float(field.values.sum())
    return result


def run_equilibrium_law(rho0: np.ndarray, mesh: Mesh1D, table: MaxwellianTable, times: Sequence[float],
                        cfl: float = DEFAULT_CFL, dt_fixed: Optional[float] = None) -> RunResult:
    """
    Ley escalar ρ_t + F_eq(ρ)_x = 0 (límite ε = 0) con el mismo esquema LLF de primer orden.

    F_eq y F'_eq se interpolan linealmente de la tabla.
    """
    x = table.rho_samples
    flux_table = table.f_eq
    slope_table = np.gradient(flux_table, x)
    max_speed = float(np.abs(slope_table).max())
    max_dt = cfl_dt(mesh, max_speed, cfl)
    base_dt = dt_fixed if dt_fixed is not None else max_dt
    if base_dt > max_dt * (1.0 + 1e-12):
        raise CFLError(base_dt, max_dt)

    def snapshot(rho, t, step):
        flux = np.interp(rho, x, flux_table)
        u = np.interp(rho, x, table.u_eq)
        return Snapshot(t, step, rho.copy(), flux, u, np.zeros_like(rho))

    rho = np.asarray(rho0, dtype=float).copy()
    result = RunResult(model="equilibrium", snapshots=[])
    result.mass_initial = float(rho.sum())
    t, step = 0.0, 0
    pending = list(times)
    while pending:
        target = pending[0]
        if target - t <= 1e-12 * max(1.0, target):
            result.snapshots.append(snapshot(rho, t, step))
            pending.pop(0)
            continue
        dt = min(base_dt, target - t)
        padded = with_ghosts(rho, mesh.boundary)
        flux = np.interp(padded, x, flux_table)
        speed = np.abs(np.interp(padded, x, slope_table))
        alpha = np.maximum(speed[:-1], speed[1:])
        numerical = 0.5 * (flux[:-1] + flux[1:]) - 0.5 * alpha * (padded[1:] - padded[:-1])
        rho = rho - (dt / mesh.dx) * (numerical[1:] - numerical[:-1])
        if np.any(~np.isfinite(rho)) or np.any(rho < -NEGATIVITY_ATOL):
            cell = int(np.argmax(~np.isfinite(rho) | (rho < -NEGATIVITY_ATOL)))
            raise SolverAbort("densidad inválida en la ley de equilibrio", cell, -1, step)
        step += 1
        t += dt
        result.record_dt(dt)
    result.mass_final = float(rho.sum())
    return result


def initial_density(config, x: np.ndarray) -> np.ndarray:
    if config.scenario == "riemann":
        return riemann_density(x, config.rho_left, config.rho_right, config.x_jump)
    return bump_density(x, config.a, config.b)


def mesh_from_config(config) -> Mesh1D:
    return Mesh1D(config.x_min, config.x_max, config.n_cells, Boundary(config.boundary))


def epsilon_from_config(config) -> EpsilonModel:
    return EpsilonModel(EpsilonKind(config.eps_kind), config.eps_value, config.eps0)


def run(config, table: Optional[MaxwellianTable] = None) -> RunResult:
    """Corre un escenario cinético (bump, riemann, stopgo) descrito por ScenarioConfig."""
    from .config import build_model_params, build_table

    if table is None:
        table = build_table(config, build_model_params(config))
    mesh = mesh_from_config(config)
    rho0 = initial_density(config, mesh.centers)
    if np.any(rho0 < 0) or np.any(rho0 > table.params.rho_max):
        raise DomainError("la densidad inicial debe estar en [0, ρ_M]")
    field0 = maxwellian_field(mesh, table, rho0)
    model = KineticModel.BGK if config.model == "bgk" else KineticModel.BOLTZMANN
    times = output_schedule(config.t_final, config.output_times, config.n_outputs)
    logger.info("corriendo %s: modelo=%s, %d celdas, t_final=%g, ε=%s",
                config.scenario, model.value, mesh.n_cells, times[-1], config.eps_kind)
    return simulate(field0, table, epsilon_from_config(config), model, times, cfl=config.cfl,
                    global_alpha=config.llf_alpha == "global", dt_fixed=config.dt,
                    keep_values=config.per_node)
