"""
Modelo BGK modificado en la velocidad deseada w = v + p(ρ).

La distribución g(x, w) se transporta a velocidad w - p(ρ) y relaja hacia M_g,
que es M_f trasladada en p(ρ). Los pesos de M_f se depositan en los dos nodos w
vecinos con pesos lineales, lo que conserva exactamente masa y primer momento.

Relaciones:
- Usa el mismo esquema LLF y el mismo manejo de ε que solver1d
- Las maxwellianas M_f salen de equilibrium.MaxwellianTable
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .closures import DensityFunction, validate_pressure
from .equilibrium import MaxwellianTable
from .exceptions import CFLError, ConfigurationError, DomainError, SolverAbort
from .kinetic_core import VelocityGrid
from .solver1d import (DEFAULT_CFL, Boundary, EpsilonKind, EpsilonModel, Mesh1D, RunResult, Snapshot, cfl_dt,
                       check_values, density_gradient, eval_epsilon, llf_update)

logger = logging.getLogger(__name__)

# Posiciones a menos de esta distancia (en unidades de nodo) se asignan al nodo
SNAP_ATOL = 1e-9


@dataclass(frozen=True)
class WGrid:
    """Nodos w_k = w_min + k·spacing, k = 0..n_nodes-1."""
    w_min: float
    spacing: float
    n_nodes: int

    def __post_init__(self):
        if self.w_min < 0:
            raise ConfigurationError(f"w_min debe ser no negativo, se recibió {self.w_min}")
        if self.spacing <= 0 or self.n_nodes < 2:
            raise ConfigurationError("la malla w necesita espaciado positivo y al menos 2 nodos")

    @property
    def nodes(self) -> np.ndarray:
        return self.w_min + np.arange(self.n_nodes) * self.spacing

    @property
    def w_max(self) -> float:
        return self.w_min + (self.n_nodes - 1) * self.spacing


def build_wgrid(grid: VelocityGrid, pressure: DensityFunction, refine: int = 1, rho_max: float = 1.0) -> WGrid:
    """
    Malla w alineada con la malla v: espaciado h_v/refine, desde el menor w depositado
    (p(0) redondeado hacia abajo a la red) hasta V_M + p(ρ_M) más un nodo de margen.
    """
    if int(refine) != refine or refine < 1:
        raise ConfigurationError(f"w_refine debe ser un entero >= 1, se recibió {refine}")
    spacing = grid.spacing / int(refine)
    p_low = float(pressure.value(0.0))
    p_high = float(pressure.value(rho_max))
    w_min = max(math.floor(p_low / spacing + SNAP_ATOL), 0) * spacing
    top = grid.v_max + p_high
    n_nodes = int(math.ceil((top - w_min) / spacing - SNAP_ATOL)) + 2
    return WGrid(w_min=w_min, spacing=spacing, n_nodes=n_nodes)


@dataclass(frozen=True)
class GField:
    mesh: Mesh1D
    wgrid: WGrid
    values: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return self.values.sum(axis=-1)

    @property
    def q(self) -> np.ndarray:
        return (self.values * self.wgrid.nodes).sum(axis=-1)

    def with_values(self, values: np.ndarray) -> "GField":
        return GField(self.mesh, self.wgrid, values)


def build_mg(table: MaxwellianTable, pressure: DensityFunction, rho, wgrid: WGrid) -> np.ndarray:
    """M_g(·; ρ): cada peso de M_f en v_k se deposita en w = v_k + p(ρ)."""
    rho = np.asarray(rho, dtype=float)
    scalar = rho.ndim == 0
    rho = np.atleast_1d(rho)
    weights = table.interpolate(rho)
    shift = np.asarray(pressure.value(rho), dtype=float)
    position = (table.grid.nodes[None, :] + shift[:, None] - wgrid.w_min) / wgrid.spacing
    nearest = np.rint(position)
    position = np.where(np.abs(position - nearest) <= SNAP_ATOL, nearest, position)
    index = np.floor(position).astype(int)
    frac = position - index
    upper = np.where(frac > 0, index + 1, index)

    occupied = weights > 0
    if np.any(occupied & ((index < 0) | (upper > wgrid.n_nodes - 1))):
        raise ConfigurationError(
            f"la malla w [{wgrid.w_min:g}, {wgrid.w_max:g}] es demasiado estrecha para p={pressure.describe()}")
    index = np.clip(index, 0, wgrid.n_nodes - 1)
    upper = np.clip(upper, 0, wgrid.n_nodes - 1)

    out = np.zeros((rho.size, wgrid.n_nodes))
    rows = np.broadcast_to(np.arange(rho.size)[:, None], index.shape)
    np.add.at(out, (rows, index), weights * (1.0 - frac))
    np.add.at(out, (rows, upper), weights * frac)
    return out[0] if scalar else out


def moment_identity_residual(table: MaxwellianTable, pressure: DensityFunction, wgrid: WGrid) -> np.ndarray:
    """|Σ M_g - ρ| y |(1/ρ)Σ w M_g - (U_eq + p)| por muestra de la tabla."""
    rho = table.rho_samples
    mg = build_mg(table, pressure, rho, wgrid)
    mass_err = np.abs(mg.sum(axis=-1) - rho)
    q = (mg * wgrid.nodes).sum(axis=-1)
    safe = np.where(rho > 0, rho, 1.0)
    speed_err = np.where(rho > 0, np.abs(q / safe - (table.u_eq + pressure.value(rho))), 0.0)
    return np.maximum(mass_err, speed_err)


def transport_speeds(field: GField, pressure: DensityFunction) -> np.ndarray:
    return field.wgrid.nodes[None, :] - np.asarray(pressure.value(field.density), dtype=float)[:, None]


def max_transport_speed(wgrid: WGrid, pressure: DensityFunction, rho_max: float = 1.0) -> float:
    """Cota de |w_k - p(ρ)| sobre la malla y ρ ∈ [0, ρ_M]."""
    p_low = float(pressure.value(0.0))
    p_high = float(pressure.value(rho_max))
    return max(abs(wgrid.w_max - p_low), abs(p_high - wgrid.w_min))


def transport_step_w(field: GField, pressure: DensityFunction, dt: float, cfl: float = DEFAULT_CFL,
                     global_alpha: bool = False, rho_max: float = 1.0) -> GField:
    bound = max_transport_speed(field.wgrid, pressure, rho_max)
    max_dt = cfl_dt(field.mesh, bound, cfl)
    if dt > max_dt * (1.0 + 1e-12):
        raise CFLError(dt, max_dt)
    speeds = transport_speeds(field, pressure)
    values = llf_update(field.values, speeds, dt, field.mesh.dx, field.mesh.boundary,
                        global_alpha=bound if global_alpha else None)
    return field.with_values(values)


def relaxation_step_w(field: GField, dt: float, eps_model: EpsilonModel, table: MaxwellianTable,
                      pressure: DensityFunction, rho_x=None) -> GField:
    """g = M_g + (g - M_g) e^{-dt/ε}."""
    rho = field.density
    if eps_model.kind is EpsilonKind.VARIABLE and rho_x is None:
        rho_x = density_gradient(rho, field.mesh)
    eps = eval_epsilon(eps_model, rho, 0.0 if rho_x is None else rho_x)
    target = build_mg(table, pressure, rho, field.wgrid)
    decay = np.exp(-dt / eps)[:, None]
    return field.with_values(target + (field.values - target) * decay)


def _snapshot(field: GField, pressure: DensityFunction, t: float, step: int, eps: np.ndarray,
              keep_values: bool) -> Snapshot:
    rho = field.density
    q = field.q
    safe = np.where(rho > 0, rho, 1.0)
    u = np.where(rho > 0, q / safe - pressure.value(rho), 0.0)
    return Snapshot(t, step, rho, rho * u, u, np.asarray(eps, dtype=float),
                    field.values.copy() if keep_values else None, q=q)


def maxwellian_gfield(mesh: Mesh1D, table: MaxwellianTable, pressure: DensityFunction, wgrid: WGrid,
                      rho0: np.ndarray) -> GField:
    return GField(mesh, wgrid, build_mg(table, pressure, np.asarray(rho0, dtype=float), wgrid))


def simulate_wspace(field0: GField, table: MaxwellianTable, pressure: DensityFunction, eps_model: EpsilonModel,
                    times: Sequence[float], cfl: float = DEFAULT_CFL, global_alpha: bool = False,
                    dt_fixed: Optional[float] = None, keep_values: bool = False) -> RunResult:
    """
    Transporte LLF y relajación exacta, con los tiempos de salida de solver1d.simulate.

    La disipación por defecto es local (|w_k - p(ρ)| por nodo): la cota global difunde
    demasiado en el límite ε → 0.
    """
    rho_max = table.params.rho_max
    field = field0
    check_values(field.values, 0, rho_max)
    max_dt = cfl_dt(field.mesh, max_transport_speed(field.wgrid, pressure, rho_max), cfl)
    if dt_fixed is not None and dt_fixed > max_dt * (1.0 + 1e-12):
        raise CFLError(dt_fixed, max_dt)
    base_dt = dt_fixed if dt_fixed is not None else max_dt

    result = RunResult(model="modified_bgk", snapshots=[])
    result.mass_initial = float(field.values.sum())
    eps_cells = eval_epsilon(eps_model, field.density, density_gradient(field.density, field.mesh))
    t, step = 0.0, 0
    pending = list(times)
    while pending:
        target = pending[0]
        if target - t <= 1e-12 * max(1.0, target):
            result.snapshots.append(_snapshot(field, pressure, t, step, eps_cells, keep_values))
            pending.pop(0)
            continue
        dt = min(base_dt, target - t)
        mass_before = field.values.sum()
        try:
            field = transport_step_w(field, pressure, dt, cfl=cfl, global_alpha=global_alpha, rho_max=rho_max)
            check_values(field.values, step + 1, rho_max)
            rho_before = field.density
            rho_x = density_gradient(rho_before, field.mesh) if eps_model.kind is EpsilonKind.VARIABLE else None
            eps_cells = eval_epsilon(eps_model, rho_before, 0.0 if rho_x is None else rho_x)
            field = relaxation_step_w(field, dt, eps_model, table, pressure, rho_x=rho_x)
            result.max_collision_drift = max(result.max_collision_drift,
                                             float(np.abs(field.density - rho_before).max()))
            check_values(field.values, step + 1, rho_max)
        except SolverAbort as error:
            error.t = t + dt
            result.mass_final = float(mass_before)
            error.partial = result
            logger.error("corrida en w interrumpida en t=%.6f: %s", error.t, error)
            raise
        step += 1
        t += dt
        if field.mesh.boundary is Boundary.PERIODIC:
            drift = abs(field.values.sum() - mass_before) / max(mass_before, 1e-300)
            result.max_mass_step_drift = max(result.max_mass_step_drift, float(drift))
        result.record_dt(dt)
        logger.debug("paso w %d t=%.6f dt=%.3e", step, t, dt)
    result.mass_final = float(field.values.sum())
    return result


def run_wspace(config, table: Optional[MaxwellianTable] = None,
               pressure: Optional[DensityFunction] = None) -> RunResult:
    """Corre el escenario wspace_bump (o el lado macroscópico de micro_compare)."""
    from .config import build_model_params, build_pressure, build_table
    from .solver1d import epsilon_from_config, initial_density, mesh_from_config, output_schedule

    if table is None:
        table = build_table(config, build_model_params(config))
    if pressure is None:
        pressure = validate_pressure(build_pressure(config))
    mesh = mesh_from_config(config)
    wgrid = build_wgrid(table.grid, pressure, config.w_refine, table.params.rho_max)
    rho0 = initial_density(config, mesh.centers)
    if np.any(rho0 < 0) or np.any(rho0 > table.params.rho_max):
        raise DomainError("la densidad inicial debe estar en [0, ρ_M]")
    times = output_schedule(config.t_final, config.output_times, config.n_outputs)
    logger.info("corriendo BGK en w: p=%s, %d nodos w en [%g, %g], %d celdas",
                pressure.describe(), wgrid.n_nodes, wgrid.w_min, wgrid.w_max, mesh.n_cells)
    field0 = maxwellian_gfield(mesh, table, pressure, wgrid, rho0)
    return simulate_wspace(field0, table, pressure, epsilon_from_config(config), times, cfl=config.cfl,
                           global_alpha=config.llf_alpha == "global", dt_fixed=config.dt,
                           keep_values=config.per_node)
