"""
Coeficientes de difusión de Chapman-Enskog y clasificación de estabilidad.

Para un modelo cerca del equilibrio la densidad cumple
    ρ_t + F_eq(ρ)_x = ε (μ(ρ) ρ_x)_x
y el signo de μ decide la estabilidad: estable si μ >= 0 en todo [0, ρ_M],
débilmente inestable si μ < 0 solo en intervalos interiores, inestable si algún
intervalo negativo toca 0 o ρ_M.

Relaciones:
- Consume las tablas de equilibrium (BGK y BGK modificado)
- El modelo ARZ se evalúa con funciones analíticas de closures, no se resuelve
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .closures import RHO_MAX, DensityFunction, validate_hesitation, validate_pressure
from .equilibrium import MaxwellianTable, d_rho_moments
from .exceptions import DomainError

SIGN_ATOL = 1e-12
# Un intervalo a menos de ENDPOINT_RTOL·(ρ_M - 0) de un extremo lo toca
ENDPOINT_RTOL = 1e-12


class ModelKind(Enum):
    BGK = "bgk"
    ARZ = "arz"
    MODIFIED = "modified"


class Classification(Enum):
    STABLE = "stable"
    WEAKLY_UNSTABLE = "weakly_unstable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class DiffusionProfile:
    model_kind: ModelKind
    rho_samples: np.ndarray
    mu: np.ndarray
    negative_intervals: Tuple[Tuple[float, float], ...]
    classification: Classification


@dataclass(frozen=True)
class ArzClosure:
    """Velocidad de equilibrio y función de hesitación del modelo ARZ."""
    u_eq: DensityFunction
    hesitation: DensityFunction

    def __post_init__(self):
        validate_hesitation(self.hesitation)


def mu_bgk(table: MaxwellianTable, rho):
    """μ_BGK = ∂_ρ(∫v² M_f) - F'_eq²."""
    d = d_rho_moments(table, rho)
    return d.d_energy - d.dF_eq ** 2


def energy_condition(table: MaxwellianTable, rho):
    """Condición de estabilidad en forma de energía: ∂_ρ(∫v² M_f) > F'_eq²."""
    d = d_rho_moments(table, rho)
    return d.d_energy > d.dF_eq ** 2


class Proposition1Check(NamedTuple):
    hypotheses_hold: bool
    mu_negative: bool


def check_proposition1(table: MaxwellianTable, rho) -> Proposition1Check:
    """Hipótesis F'_eq < 0 y ∂_ρVar < 0, y si μ_BGK es negativo."""
    d = d_rho_moments(table, rho)
    hold = np.logical_and(d.dF_eq < 0, d.d_variance < 0)
    negative = (d.d_energy - d.dF_eq ** 2) < 0
    if np.ndim(hold) == 0:
        return Proposition1Check(bool(hold), bool(negative))
    return Proposition1Check(hold, negative)


def proposition1_threshold(table: MaxwellianTable) -> Optional[float]:
    """
    Menor ρ̃ muestreado tal que las dos hipótesis valen en todas las muestras de (ρ̃, ρ_M).

    Devuelve None si las hipótesis fallan justo antes de ρ_M.
    """
    interior = table.rho_samples[1:-1]
    hold, _ = check_proposition1(table, interior)
    if not hold[-1]:
        return None
    start = hold.size - 1
    while start > 0 and hold[start - 1]:
        start -= 1
    return float(table.rho_samples[start])


class ArzDiffusion(NamedTuple):
    mu: float
    subcharacteristic: bool


def _mu_arz_values(closure: ArzClosure, rho):
    du = closure.u_eq.derivative(rho)
    dh = closure.hesitation.derivative(rho)
    mu = -np.asarray(rho) ** 2 * du * (du + dh)
    sub = np.logical_and(du < 0, du > -dh)
    return mu, sub


def mu_arz(closure: ArzClosure, rho) -> ArzDiffusion:
    """μ_ARZ = -ρ² U'_eq (U'_eq + h') y la condición subcaracterística 0 > U'_eq > -h'."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr <= 0) or np.any(rho_arr >= RHO_MAX):
        raise DomainError("mu_arz requiere ρ en (0, ρ_M)")
    mu, sub = _mu_arz_values(closure, rho_arr)
    if rho_arr.ndim == 0:
        return ArzDiffusion(float(mu), bool(sub))
    return ArzDiffusion(mu, sub)


def pressure_term(table: MaxwellianTable, pressure: DensityFunction, rho):
    """C(ρ) = -ρ² p'(ρ) U'_eq(ρ)."""
    d = d_rho_moments(table, rho)
    return -np.asarray(rho) ** 2 * pressure.derivative(rho) * d.dU_eq


def mu_modified(table: MaxwellianTable, pressure: DensityFunction, rho):
    """μ del BGK modificado en el espacio w: μ_BGK + C(ρ)."""
    validate_pressure(pressure)
    return mu_bgk(table, rho) + pressure_term(table, pressure, rho)


def mu_modified_flux_form(table: MaxwellianTable, pressure: DensityFunction, rho):
    """La misma μ escrita con el flujo: μ_BGK - ρ p' F'_eq + F_eq p'."""
    validate_pressure(pressure)
    d = d_rho_moments(table, rho)
    flux = np.interp(rho, table.rho_samples, table.f_eq)
    dp = pressure.derivative(rho)
    return d.d_energy - d.dF_eq ** 2 - np.asarray(rho) * dp * d.dF_eq + flux * dp


def _zero_crossing(r0, m0, r1, m1) -> float:
    if m0 == m1:
        return float(r0)
    return float(r0 + (r1 - r0) * m0 / (m0 - m1))


def negative_intervals(rho, mu, atol: float = SIGN_ATOL) -> List[Tuple[float, float]]:
    """Intervalos maximales con μ < 0; extremos por interpolación lineal de μ."""
    rho = np.asarray(rho, dtype=float)
    mu = np.where(np.abs(mu) <= atol, 0.0, np.asarray(mu, dtype=float))
    negative = mu < 0
    intervals = []
    i = 0
    n = rho.size
    while i < n:
        if not negative[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and negative[j + 1]:
            j += 1
        left = rho[0] if i == 0 else _zero_crossing(rho[i - 1], mu[i - 1], rho[i], mu[i])
        right = rho[-1] if j == n - 1 else _zero_crossing(rho[j], mu[j], rho[j + 1], mu[j + 1])
        intervals.append((float(left), float(right)))
        i = j + 1
    return intervals


def classify(rho, mu, atol: float = SIGN_ATOL) -> Classification:
    """
    Clasificación a partir de los intervalos con μ < 0.

    Un intervalo que llega a 0 o a ρ_M (aunque sea por el cruce con una muestra
    nula en el extremo) vuelve el perfil unstable.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.size < 3:
        raise DomainError("la clasificación requiere al menos 3 muestras")
    intervals = negative_intervals(rho, mu, atol)
    if not intervals:
        return Classification.STABLE
    reach = ENDPOINT_RTOL * (rho[-1] - rho[0])
    if any(left <= rho[0] + reach or right >= rho[-1] - reach for left, right in intervals):
        return Classification.UNSTABLE
    return Classification.WEAKLY_UNSTABLE


def diffusion_profile(kind: ModelKind, table: Optional[MaxwellianTable] = None,
                      pressure: Optional[DensityFunction] = None, closure: Optional[ArzClosure] = None,
                      rho=None, atol: float = SIGN_ATOL) -> DiffusionProfile:
    """Perfil μ(ρ) con intervalos negativos y clasificación para bgk, arz o modified."""
    kind = ModelKind(kind)
    if rho is None:
        rho = table.rho_samples if table is not None else np.linspace(0.0, RHO_MAX, 101)
    rho = np.asarray(rho, dtype=float)
    if kind is ModelKind.BGK:
        mu = mu_bgk(table, rho)
    elif kind is ModelKind.MODIFIED:
        mu = mu_modified(table, pressure, rho)
    else:
        mu, _ = _mu_arz_values(closure, rho)
    mu = np.asarray(mu, dtype=float)
    return DiffusionProfile(kind, rho, mu, tuple(negative_intervals(rho, mu, atol)), classify(rho, mu, atol))
