"""
Simulador microscópico follow-the-leader / Bando en un anillo de longitud L.

Cada vehículo i lleva posición x_i y velocidad deseada w_i:
    ẋ_i = v_i = w_i - p(ρ_i)
    ẇ_i = (U_eq(ρ_i) + p(ρ_i) - w_i) / ε
con ρ_i = ℓ / (x_{i+1} - x_i). En modo "ftl" la presión es una variable de estado
que evoluciona con dπ_i/dt = -C_γ (v_{i+1} - v_i) / (x_{i+1} - x_i)^{γ+1}.

Las posiciones se guardan sin envolver (x_0 < x_1 < ... < x_{n-1} < x_0 + L) para
que un adelantamiento se detecte como distancia no positiva.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .closures import RHO_MAX, V_MAX, DensityFunction
from .exceptions import CollisionError, ConfigurationError, DomainError
from .solver1d import Mesh1D

logger = logging.getLogger(__name__)

DEFAULT_DT_HEADWAY = 0.1
DEFAULT_DT_RELAX = 0.2


class InteractionMode(Enum):
    HEADWAY = "headway"
    FTL = "ftl"


@dataclass(frozen=True)
class MicroParams:
    pressure: DensityFunction
    u_eq: DensityFunction
    eps: float
    vehicle_length: float
    ring_length: float
    interaction: InteractionMode = InteractionMode.HEADWAY
    c_gamma: float = 1.0
    gamma: float = 1.0
    v_max: float = V_MAX
    rho_max: float = RHO_MAX

    def __post_init__(self):
        object.__setattr__(self, "interaction", InteractionMode(self.interaction))
        issues = []
        if self.eps <= 0:
            issues.append(f"micro.eps debe ser positivo, se recibió {self.eps}")
        if self.vehicle_length <= 0:
            issues.append(f"la longitud de vehículo debe ser positiva, se recibió {self.vehicle_length}")
        if self.ring_length <= 0:
            issues.append(f"la longitud del anillo debe ser positiva, se recibió {self.ring_length}")
        if self.c_gamma <= 0:
            issues.append(f"micro.c_gamma debe ser positivo, se recibió {self.c_gamma}")
        if self.gamma <= 0:
            issues.append(f"micro.gamma debe ser positivo, se recibió {self.gamma}")
        if issues:
            raise ConfigurationError(issues)


@dataclass(frozen=True)
class VehicleArray:
    positions: np.ndarray
    w: np.ndarray
    # Solo en modo "ftl"
    pressure_state: Optional[np.ndarray] = None
    clamp_events: int = 0

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        if positions.size < 2:
            raise ConfigurationError("se necesitan al menos 2 vehículos")
        if self.w.shape != positions.shape:
            raise ConfigurationError("posiciones y velocidades deseadas deben tener la misma longitud")

    @property
    def n(self) -> int:
        return self.positions.size

    def wrapped(self, ring_length: float) -> np.ndarray:
        return np.mod(self.positions, ring_length)


def headways(positions: np.ndarray, ring_length: float) -> np.ndarray:
    """x_{i+1} - x_i, con el líder del último vehículo igual al primero desplazado en L."""
    return np.diff(positions, append=positions[0] + ring_length)


def _densities(positions: np.ndarray, params: MicroParams) -> np.ndarray:
    gaps = headways(positions, params.ring_length)
    bad = np.flatnonzero(gaps <= 0)
    if bad.size:
        raise CollisionError(int(bad[0]), float(gaps[bad[0]]))
    return np.clip(params.vehicle_length / gaps, 0.0, params.rho_max)


def local_density(vehicles: VehicleArray, params: MicroParams, i: Optional[int] = None):
    """ρ_i = ℓ / headway recortada a [0, ρ_M]; todas si i es None."""
    rho = _densities(vehicles.positions, params)
    return rho if i is None else float(rho[i])


def _pressure(vehicles_pressure, rho, params: MicroParams) -> np.ndarray:
    if params.interaction is InteractionMode.FTL:
        return vehicles_pressure
    return np.asarray(params.pressure.value(rho), dtype=float)


def speeds(vehicles: VehicleArray, params: MicroParams) -> np.ndarray:
    """v_i = w_i - p(ρ_i) sin recortar."""
    rho = local_density(vehicles, params)
    return vehicles.w - _pressure(vehicles.pressure_state, rho, params)


def _rates(x: np.ndarray, w: np.ndarray, pi: Optional[np.ndarray], params: MicroParams):
    rho = _densities(x, params)
    p = _pressure(pi, rho, params)
    v = w - p
    moving = np.clip(v, 0.0, params.v_max)
    clamped = int(np.count_nonzero(moving != v))
    dw = (params.u_eq.value(rho) + p - w) / params.eps
    dpi = None
    if params.interaction is InteractionMode.FTL:
        gaps = headways(x, params.ring_length)
        dpi = -params.c_gamma * (np.roll(moving, -1) - moving) / gaps ** (params.gamma + 1.0)
    return moving, dw, dpi, clamped


def default_dt(vehicles: VehicleArray, params: MicroParams) -> float:
    """min(0.1·headway mínima / V_M, ε/5)."""
    gap = headways(vehicles.positions, params.ring_length).min()
    return min(DEFAULT_DT_HEADWAY * gap / params.v_max, DEFAULT_DT_RELAX * params.eps)


def step(vehicles: VehicleArray, params: MicroParams, dt: float) -> VehicleArray:
    """Un paso RK2 de punto medio; la velocidad se recorta a [0, V_M] solo para mover posiciones."""
    if dt <= 0:
        raise DomainError(f"dt debe ser positivo, se recibió {dt}")
    x, w, pi = vehicles.positions, vehicles.w, vehicles.pressure_state
    v1, dw1, dpi1, c1 = _rates(x, w, pi, params)
    x_mid = x + 0.5 * dt * v1
    w_mid = w + 0.5 * dt * dw1
    pi_mid = None if dpi1 is None else pi + 0.5 * dt * dpi1
    v2, dw2, dpi2, c2 = _rates(x_mid, w_mid, pi_mid, params)
    x_new = x + dt * v2
    gaps = headways(x_new, params.ring_length)
    bad = np.flatnonzero(gaps <= 0)
    if bad.size:
        raise CollisionError(int(bad[0]), float(gaps[bad[0]]))
    clamped = c1 + c2
    if clamped:
        logger.debug("%d velocidades recortadas a [0, V_M] en el paso", clamped)
    # Re-anclar al primer período mantiene las posiciones acotadas sin cambiar las distancias
    shift = np.floor(x_new[0] / params.ring_length) * params.ring_length
    return VehicleArray(positions=x_new - shift, w=w + dt * dw2,
                        pressure_state=None if dpi2 is None else pi + dt * dpi2,
                        clamp_events=vehicles.clamp_events + clamped)


def equilibrium_w(rho, params: MicroParams):
    return params.u_eq.value(rho) + params.pressure.value(rho)


def _initial_state(positions: np.ndarray, params: MicroParams, w_offset: np.ndarray) -> VehicleArray:
    rho = _densities(positions, params)
    pi = np.asarray(params.pressure.value(rho), dtype=float) if params.interaction is InteractionMode.FTL else None
    return VehicleArray(positions=positions, w=equilibrium_w(rho, params) + w_offset, pressure_state=pi)


def uniform_ring(n: int, rho_bar: float, params: MicroParams, w_perturbation: float = 0.0,
                 x_perturbation: float = 0.0, seed: Optional[int] = None) -> VehicleArray:
    """
    Anillo equiespaciado con ℓ = L·ρ̄/n (params.vehicle_length debe coincidir).

    Las perturbaciones son un modo seno de amplitud dada, o ruido uniforme si hay semilla.
    """
    if not 0 < rho_bar <= params.rho_max:
        raise DomainError(f"ρ̄ debe estar en (0, ρ_M], se recibió {rho_bar}")
    expected = params.ring_length * rho_bar / n
    if not np.isclose(params.vehicle_length, expected, rtol=1e-12):
        raise ConfigurationError(f"la longitud de vehículo {params.vehicle_length:g} no corresponde a ρ̄={rho_bar:g}")
    spacing = params.ring_length / n
    if seed is None:
        pattern = np.sin(2.0 * np.pi * np.arange(n) / n)
    else:
        pattern = np.random.default_rng(seed).uniform(-1.0, 1.0, size=n)
    positions = np.arange(n) * spacing + x_perturbation * spacing * pattern
    return _initial_state(positions, params, w_perturbation * pattern)


def ring_params(n: int, rho_bar: float, ring_length: float, pressure: DensityFunction,
                u_eq: DensityFunction, eps: float, **kwargs) -> MicroParams:
    return MicroParams(pressure=pressure, u_eq=u_eq, eps=eps, vehicle_length=ring_length * rho_bar / n,
                       ring_length=ring_length, **kwargs)


def sample_vehicles(rho0, mesh: Mesh1D, n: int, seed: Optional[int] = None, jitter: float = 0.5,
                    refine: int = 20):
    """
    Coloca n vehículos por CDF inversa estratificada de ρ0 sobre la malla.

    Devuelve (posiciones en [0, L), ℓ) con ℓ = ∫ρ0/n; el cuantil i es (i + 1/2 + jitter·u_i)/n
    con u_i uniforme en [-1/2, 1/2).
    """
    if n < 2:
        raise ConfigurationError("se necesitan al menos 2 vehículos")
    if not 0 <= jitter < 1:
        raise ConfigurationError(f"micro.jitter debe estar en [0, 1), se recibió {jitter}")
    xs = np.linspace(mesh.x_min, mesh.x_max, refine * mesh.n_cells + 1)
    density = np.asarray(rho0(xs), dtype=float)
    if np.any(density <= 0):
        raise DomainError("la colocación por CDF inversa requiere ρ0 > 0")
    cdf = cumulative_trapezoid(density, xs, initial=0.0)
    total = cdf[-1]
    noise = np.random.default_rng(seed).uniform(-0.5, 0.5, size=n) if jitter > 0 else np.zeros(n)
    quantiles = (np.arange(n) + 0.5 + jitter * noise) / n
    positions = np.interp(quantiles * total, cdf, xs) - mesh.x_min
    return positions, total / n


def vehicles_from_positions(positions: np.ndarray, params: MicroParams) -> VehicleArray:
    """Estado de equilibrio local w_i = U_eq(ρ_i) + p(ρ_i) sobre posiciones dadas."""
    return _initial_state(np.asarray(positions, dtype=float), params, np.zeros(len(positions)))


@dataclass
class MicroFrame:
    t: float
    positions: np.ndarray
    v: np.ndarray
    w: np.ndarray


@dataclass
class MicroRun:
    frames: List[MicroFrame]
    final: VehicleArray
    n_steps: int = 0
    clamp_events: int = 0
    history: dict = field(default_factory=dict)


def run_micro(vehicles: VehicleArray, params: MicroParams, times: Sequence[float],
              dt: Optional[float] = None) -> MicroRun:
    """Integra hasta cada tiempo de salida; el paso se recorta para caer en ellos."""
    frames = []
    t, n_steps = 0.0, 0
    state = vehicles
    for target in sorted(times):
        while target - t > 1e-12 * max(1.0, target):
            h = min(dt if dt is not None else default_dt(state, params), target - t)
            state = step(state, params, h)
            t += h
            n_steps += 1
        v = np.clip(speeds(state, params), 0.0, params.v_max)
        frames.append(MicroFrame(t, state.wrapped(params.ring_length), v, state.w.copy()))
    if state.clamp_events:
        logger.info("simulación micro: %d eventos de recorte de velocidad", state.clamp_events)
    return MicroRun(frames=frames, final=state, n_steps=n_steps, clamp_events=state.clamp_events)


def bin_vehicles(positions: np.ndarray, v: np.ndarray, vehicle_length: float, mesh: Mesh1D):
    """
    Conteo por celda: ρ = ℓ·(vehículos en la celda)/dx, u = velocidad media (0 si vacía).

    positions está en coordenadas del anillo [0, L) con L = longitud de la malla.
    """
    cells = np.clip(np.floor(np.asarray(positions) / mesh.dx).astype(int), 0, mesh.n_cells - 1)
    counts = np.bincount(cells, minlength=mesh.n_cells)
    total_v = np.bincount(cells, weights=np.asarray(v, dtype=float), minlength=mesh.n_cells)
    rho = vehicle_length * counts / mesh.dx
    u = np.where(counts > 0, total_v / np.maximum(counts, 1), 0.0)
    return rho, u


def _check_ring(params: MicroParams, mesh: Mesh1D) -> None:
    if not np.isclose(mesh.length, params.ring_length, rtol=1e-12):
        raise DomainError(f"la malla mide {mesh.length:g} y el anillo {params.ring_length:g}")


def macro_profile(vehicles: VehicleArray, params: MicroParams, mesh: Mesh1D):
    """Perfiles por celda (ρ, u) del estado actual."""
    _check_ring(params, mesh)
    v = np.clip(speeds(vehicles, params), 0.0, params.v_max)
    return bin_vehicles(vehicles.wrapped(params.ring_length), v, params.vehicle_length, mesh)


def frame_profile(frame: MicroFrame, params: MicroParams, mesh: Mesh1D):
    _check_ring(params, mesh)
    return bin_vehicles(frame.positions, frame.v, params.vehicle_length, mesh)


def with_vehicle_length(params: MicroParams, vehicle_length: float) -> MicroParams:
    return replace(params, vehicle_length=vehicle_length)
