"""
Equilibrios homogéneos (maxwellianas) del modelo cinético.

Las maxwellianas se obtienen integrando df/dt = Q[f,f] con Euler explícito hasta
que ‖Q‖_∞ <= tol. Se tabulan sobre un barrido de densidades y de la tabla salen
el diagrama fundamental y las derivadas en ρ que usa el análisis de estabilidad.

Relaciones:
- Consume kinetic_core (operador de colisión y momentos)
- Sus tablas alimentan stability, solver1d, wspace y micro_ftl
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import interp1d

from .exceptions import ConvergenceError, DomainError
from .kinetic_core import (DENSITY_OVERSHOOT, InteractionTables, KineticState, ModelParams,
                           build_interaction_tables, collision_rates, moments_array)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_STEPS = 10 ** 6
DEFAULT_N_RHO = 101
# Cota del paso de Euler en densidades muy bajas
DT_CAP = 10.0
# Fracción del paso que preserva positividad (dt·ρ < 1)
DT_SAFETY = 0.9


class RelaxationReport(NamedTuple):
    weights: np.ndarray
    residual: np.ndarray
    steps: np.ndarray
    converged: np.ndarray


def relax_batch(f0: np.ndarray, params: ModelParams, tables: InteractionTables,
                tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS,
                dt_cap: float = DT_CAP, prob=None) -> RelaxationReport:
    """
    Relaja un lote de estados homogéneos (n_estados, n_speeds) de forma independiente.

    El paso es dt = min(0.9/ρ, dt_cap) por fila, lo que mantiene los pesos no
    negativos porque el coeficiente de pérdida es ρ. Las filas se actualizan sin
    mezclarse, así que el resultado de cada fila no depende del lote.
    """
    f = np.array(f0, dtype=float, ndmin=2)
    rho = f.sum(axis=-1)
    if prob is None:
        prob = params.probability(rho)
    prob = np.broadcast_to(np.asarray(prob, dtype=float), rho.shape)
    dt = np.where(rho > 0, np.minimum(DT_SAFETY / np.where(rho > 0, rho, 1.0), dt_cap), 0.0)

    residual = np.zeros(rho.shape)
    steps = np.zeros(rho.shape, dtype=int)
    active = rho > 0
    converged = ~active
    step = 0
    while np.any(active):
        idx = np.flatnonzero(active)
        rates = collision_rates(f[idx], params, tables, prob=prob[idx])
        res = np.abs(rates).max(axis=-1)
        residual[idx] = res
        done = res <= tol
        converged[idx[done]] = True
        active[idx[done]] = False
        if step >= max_steps:
            break
        moving = idx[~done]
        if moving.size == 0:
            break
        f[moving] += dt[moving, None] * rates[~done]
        steps[moving] += 1
        step += 1

    # Euler conserva la masa salvo redondeo acumulado
    total = f.sum(axis=-1)
    scale = np.where(total > 0, rho / np.where(total > 0, total, 1.0), 0.0)
    f *= scale[:, None]
    return RelaxationReport(f, residual, steps, converged)


def relax(rho: float, params: ModelParams, init: Optional[KineticState] = None,
          tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS, dt_cap: float = DT_CAP,
          tables: Optional[InteractionTables] = None) -> RelaxationReport:
    """Relaja un solo estado y devuelve el reporte completo (pesos, residuo, pasos)."""
    if tol <= 0:
        raise DomainError("la tolerancia debe ser positiva")
    if not 0.0 <= rho <= params.rho_max:
        raise DomainError(f"densidad {rho} fuera de [0, {params.rho_max}]")
    tables = tables or build_interaction_tables(params.grid)
    n = params.grid.n_speeds
    if init is None:
        weights = np.full(n, rho / n)
    else:
        weights = init.weights if isinstance(init, KineticState) else np.asarray(init, dtype=float)
        if abs(weights.sum() - rho) > 1e-12 * max(1.0, rho):
            raise DomainError(f"el estado inicial tiene densidad {weights.sum():.12g} y no {rho}")
    return relax_batch(weights[None, :], params, tables, tol=tol, max_steps=max_steps, dt_cap=dt_cap)


def relax_to_equilibrium(rho: float, params: ModelParams, init: Optional[KineticState] = None,
                         tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS,
                         dt_cap: float = DT_CAP, tables: Optional[InteractionTables] = None) -> KineticState:
    """Maxwelliana M con ‖Q[M,M]‖_∞ <= tol y densidad rho."""
    report = relax(rho, params, init=init, tol=tol, max_steps=max_steps, dt_cap=dt_cap, tables=tables)
    if not report.converged[0]:
        raise ConvergenceError(f"sin convergencia a rho={rho:g}", float(report.residual[0]),
                               int(report.steps[0]), failed=[rho])
    return KineticState(report.weights[0], rho_max=params.rho_max)


class VacuumLimit(NamedTuple):
    """Momentos por unidad de masa de la maxwelliana en el límite ρ -> 0."""
    mean_speed: float
    energy: float
    variance: float


def vacuum_limit(params: ModelParams, tables: Optional[InteractionTables] = None,
                 tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS) -> VacuumLimit:
    """
    Relaja un estado de masa unitaria con P congelada en P(0).

    Q es cuadrático, así que la forma de la maxwelliana cuando ρ -> 0 es la de
    este estado; de ahí sale U_eq(0).
    """
    tables = tables or build_interaction_tables(params.grid)
    n = params.grid.n_speeds
    report = relax_batch(np.full((1, n), 1.0 / n), params, tables, tol=tol, max_steps=max_steps,
                         dt_cap=DT_SAFETY, prob=params.probability(0.0))
    if not report.converged[0]:
        logger.warning("el límite de vacío no convergió (residuo %.3e)", report.residual[0])
    _, _, u, var, energy = moments_array(report.weights[0], params.grid.nodes)
    return VacuumLimit(float(u), float(energy), float(var))


def _relax_chunk(args):
    f0, params, tables, tol, max_steps = args
    return relax_batch(f0, params, tables, tol=tol, max_steps=max_steps)


@dataclass(frozen=True)
class MaxwellianTable:
    """Maxwellianas tabuladas sobre densidades crecientes en [0, ρ_M]."""
    params: ModelParams
    rho_samples: np.ndarray
    maxwellians: np.ndarray
    vacuum: VacuumLimit
    residuals: np.ndarray
    steps: np.ndarray
    init: str = "uniform"
    tol: float = DEFAULT_TOL
    failed: Tuple[float, ...] = field(default_factory=tuple)

    @property
    def grid(self):
        return self.params.grid

    @property
    def n_samples(self) -> int:
        return self.rho_samples.size

    @cached_property
    def _moments(self):
        return moments_array(self.maxwellians, self.grid.nodes)

    @property
    def f_eq(self) -> np.ndarray:
        return self._moments[1]

    @property
    def u_eq(self) -> np.ndarray:
        u = self._moments[2].copy()
        u[self.rho_samples == 0] = self.vacuum.mean_speed
        return u

    @property
    def energy_eq(self) -> np.ndarray:
        return self._moments[4]

    @property
    def variance_eq(self) -> np.ndarray:
        return self._moments[3]

    def state(self, i: int) -> KineticState:
        return KineticState(self.maxwellians[i], rho_max=self.params.rho_max)

    @cached_property
    def _interpolant(self):
        return interp1d(self.rho_samples, self.maxwellians, axis=0, kind="linear",
                        assume_sorted=True, copy=False)

    def interpolate(self, rho) -> np.ndarray:
        """M_f(·; ρ) interpolada linealmente por nodo y renormalizada a la ρ exacta."""
        rho = np.asarray(rho, dtype=float)
        rho_max = self.rho_samples[-1]
        if np.any(rho < -DENSITY_OVERSHOOT) or np.any(rho > rho_max + DENSITY_OVERSHOOT):
            bad = rho[(rho < -DENSITY_OVERSHOOT) | (rho > rho_max + DENSITY_OVERSHOOT)]
            raise DomainError(f"densidad {float(bad.flat[0]):.12g} fuera de [0, {rho_max:g}]")
        rho = np.maximum(rho, 0.0)
        raw = self._interpolant(np.minimum(rho, rho_max))
        total = raw.sum(axis=-1)
        scale = np.where(total > 0, rho / np.where(total > 0, total, 1.0), 0.0)
        return raw * scale[..., None]


def interpolate_maxwellian(table: MaxwellianTable, rho) -> np.ndarray:
    return table.interpolate(rho)


def build_maxwellian_table(params: ModelParams, n_rho: int = DEFAULT_N_RHO, tol: float = DEFAULT_TOL,
                           max_steps: int = DEFAULT_MAX_STEPS, warm_start: bool = False,
                           jobs: int = 1, strict: bool = True) -> MaxwellianTable:
    """
    Tabula las maxwellianas en rho_i = i/(n_rho-1)·ρ_M.

    En arranque frío cada muestra parte del estado uniforme en v y el lote puede
    repartirse entre procesos; en arranque tibio se parte de la maxwelliana de la
    muestra anterior reescalada, de forma secuencial.
    """
    if n_rho < 3:
        raise DomainError(f"se necesitan al menos 3 muestras de densidad, se recibió {n_rho}")
    tables = build_interaction_tables(params.grid)
    n = params.grid.n_speeds
    rho = np.linspace(0.0, params.rho_max, n_rho)
    logger.info("tabulando %d maxwellianas (%d velocidades, Δa=%g, Δb=%g, arranque=%s)",
                n_rho, n, params.grid.delta_a, params.grid.delta_b, "tibio" if warm_start else "frío")

    if warm_start:
        weights = np.zeros((n_rho, n))
        residuals = np.zeros(n_rho)
        steps = np.zeros(n_rho, dtype=int)
        converged = np.ones(n_rho, dtype=bool)
        shape = np.full(n, 1.0 / n)
        for i, r in enumerate(rho):
            if r == 0:
                continue
            report = relax_batch((shape * r)[None, :], params, tables, tol=tol, max_steps=max_steps)
            weights[i], residuals[i], steps[i], converged[i] = (report.weights[0], report.residual[0],
                                                                report.steps[0], report.converged[0])
            shape = weights[i] / r
    else:
        f0 = rho[:, None] * np.full((n_rho, n), 1.0 / n)
        if jobs > 1:
            chunks = np.array_split(np.arange(n_rho), jobs)
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                reports = list(pool.map(_relax_chunk, [(f0[c], params, tables, tol, max_steps) for c in chunks]))
            weights = np.concatenate([r.weights for r in reports])
            residuals = np.concatenate([r.residual for r in reports])
            steps = np.concatenate([r.steps for r in reports])
            converged = np.concatenate([r.converged for r in reports])
        else:
            weights, residuals, steps, converged = relax_batch(f0, params, tables, tol=tol, max_steps=max_steps)

    failed = tuple(float(r) for r in rho[~converged])
    if failed:
        logger.warning("%d muestras sin convergencia: %s", len(failed), failed)
        if strict:
            raise ConvergenceError("tabla de maxwellianas incompleta", float(residuals.max()),
                                   int(steps.max()), failed=failed)
    logger.info("tabla lista: residuo máximo %.3e, pasos máximos %d", residuals.max(), steps.max())
    return MaxwellianTable(params=params, rho_samples=rho, maxwellians=weights,
                           vacuum=vacuum_limit(params, tables, tol=tol, max_steps=max_steps),
                           residuals=residuals, steps=steps,
                           init="warm" if warm_start else "uniform", tol=tol, failed=failed)


class FundamentalDiagram(NamedTuple):
    rho_samples: np.ndarray
    flux: np.ndarray
    char_speed: np.ndarray
    rho_c: float
    capacity: float


def _refine_argmax(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Máximo discreto refinado con la parábola por los 3 vecinos."""
    i = int(np.argmax(y))
    if i == 0 or i == y.size - 1:
        return float(x[i]), float(y[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    curvature = y0 - 2.0 * y1 + y2
    if curvature >= 0:
        return float(x[i]), float(y1)
    offset = 0.5 * (y0 - y2) / curvature
    h = 0.5 * (x[i + 1] - x[i - 1])
    return float(x[i] + offset * h), float(y1 - 0.25 * (y0 - y2) * offset)


def fundamental_diagram(table: MaxwellianTable) -> FundamentalDiagram:
    if table.n_samples < 3:
        raise DomainError("el diagrama fundamental requiere al menos 3 muestras")
    flux = table.f_eq
    char_speed = np.gradient(flux, table.rho_samples)
    rho_c, capacity = _refine_argmax(table.rho_samples, flux)
    return FundamentalDiagram(table.rho_samples, flux, char_speed, rho_c, capacity)


class DRhoMoments(NamedTuple):
    dF_eq: np.ndarray
    d_energy: np.ndarray
    d_variance: np.ndarray
    dU_eq: np.ndarray


def d_rho_moments(table: MaxwellianTable, rho) -> DRhoMoments:
    """Derivadas en ρ de flujo, energía, varianza y velocidad media por diferencias centrales."""
    rho_arr = np.asarray(rho, dtype=float)
    lo, hi = table.rho_samples[0], table.rho_samples[-1]
    if np.any(rho_arr < lo) or np.any(rho_arr > hi):
        raise DomainError(f"densidad fuera del rango de la tabla [{lo:g}, {hi:g}]")
    x = table.rho_samples
    values = [np.interp(rho_arr, x, np.gradient(y, x))
              for y in (table.f_eq, table.energy_eq, table.variance_eq, table.u_eq)]
    if rho_arr.ndim == 0:
        values = [float(v) for v in values]
    return DRhoMoments(*values)


def table_to_frame(table: MaxwellianTable) -> pd.DataFrame:
    """Formato CSV: rho, v_0..v_{n-1}, F_eq, U_eq, energy, variance."""
    columns = {"rho": table.rho_samples}
    for k in range(table.grid.n_speeds):
        columns[f"v_{k}"] = table.maxwellians[:, k]
    columns["F_eq"] = table.f_eq
    columns["U_eq"] = table.u_eq
    columns["energy"] = table.energy_eq
    columns["variance"] = table.variance_eq
    return pd.DataFrame(columns)


def table_from_frame(frame: pd.DataFrame, params: ModelParams, tol: float = DEFAULT_TOL) -> MaxwellianTable:
    """Reconstruye una tabla leída de CSV; los momentos se recalculan de los pesos."""
    n = params.grid.n_speeds
    weights = frame[[f"v_{k}" for k in range(n)]].to_numpy(dtype=float)
    rho = frame["rho"].to_numpy(dtype=float)
    tables = build_interaction_tables(params.grid)
    residuals = np.abs(collision_rates(weights, params, tables)).max(axis=-1)
    return MaxwellianTable(params=params, rho_samples=rho, maxwellians=weights,
                           vacuum=vacuum_limit(params, tables, tol=tol), residuals=residuals,
                           steps=np.zeros(rho.size, dtype=int), init="csv", tol=tol)
