"""
Funciones escalares de la densidad usadas por los modelos.

Este módulo define la interfaz base para las funciones P(ρ), U_eq(ρ), h(ρ) y p(ρ).
Las subclases implementan value(); la derivada se obtiene por diferencias centrales
salvo que la familia conozca su fórmula exacta.

Relaciones:
- AccelerationLaw / SaturatingAccelerationLaw son consumidas por kinetic_core (probabilidad de acelerar)
- PowerLaw / TabulatedFunction son las presiones de stability, wspace y micro_ftl
- LinearSpeed / TabulatedFunction son los U_eq del modelo ARZ y del modelo FTL-Bando
"""

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError

RHO_MAX = 1.0
V_MAX = 1.0

# Paso relativo de las diferencias centrales
FD_STEP = 1e-6


class DensityFunction(ABC):
    """Clase base abstracta para funciones de la densidad."""

    name = "density_function"

    @abstractmethod
    def value(self, rho):
        """Evalúa la función (acepta escalares o arreglos de numpy)."""
        pass

    def derivative(self, rho):
        """Derivada por diferencias centrales con paso 1e-6·ρ_M."""
        rho = np.asarray(rho, dtype=float)
        h = FD_STEP * RHO_MAX
        return (self.value(rho + h) - self.value(rho - h)) / (2.0 * h)

    def __call__(self, rho):
        return self.value(rho)

    def describe(self) -> str:
        return self.name


class AccelerationLaw(DensityFunction):
    """Probabilidad de acelerar P(ρ) = (1 - ρ/ρ_M)^γ."""

    name = "acceleration"

    def __init__(self, gamma: float = 1.0, rho_max: float = RHO_MAX):
        if gamma <= 0:
            raise ConfigurationError(f"p_gamma debe ser positivo, se recibió {gamma}")
        self.gamma = float(gamma)
        self.rho_max = float(rho_max)

    def value(self, rho):
        x = np.clip(1.0 - np.asarray(rho, dtype=float) / self.rho_max, 0.0, 1.0)
        return x ** self.gamma

    def derivative(self, rho):
        x = np.clip(1.0 - np.asarray(rho, dtype=float) / self.rho_max, 0.0, 1.0)
        return -self.gamma / self.rho_max * x ** (self.gamma - 1.0)

    def describe(self) -> str:
        return f"P(rho)=(1-rho)^{self.gamma:g}"


class SaturatingAccelerationLaw(DensityFunction):
    """Probabilidad de acelerar P(ρ) = 1 - (ρ/ρ_M)^m.

    Con m = 2 la densidad crítica queda en ρ_c ≈ 0.44 para la malla de 5 velocidades,
    por encima de la burbuja libre a + b = 0.4.
    """

    name = "saturating"

    def __init__(self, m: float = 2.0, rho_max: float = RHO_MAX):
        if m <= 0:
            raise ConfigurationError(f"p_m debe ser positivo, se recibió {m}")
        self.m = float(m)
        self.rho_max = float(rho_max)

    def value(self, rho):
        x = np.clip(np.asarray(rho, dtype=float) / self.rho_max, 0.0, 1.0)
        return 1.0 - x ** self.m

    def derivative(self, rho):
        x = np.clip(np.asarray(rho, dtype=float) / self.rho_max, 0.0, 1.0)
        return -self.m / self.rho_max * x ** (self.m - 1.0)

    def describe(self) -> str:
        return f"P(rho)=1-rho^{self.m:g}"


class PowerLaw(DensityFunction):
    """c·ρ^m con derivada exacta. Sirve como presión p(ρ) y como hesitación h(ρ)."""

    name = "power"

    def __init__(self, c: float, m: float):
        if c <= 0:
            raise ConfigurationError(f"el coeficiente c debe ser positivo, se recibió {c}")
        if m < 1:
            raise ConfigurationError(f"el exponente m debe ser >= 1, se recibió {m}")
        self.c = float(c)
        self.m = float(m)

    def value(self, rho):
        return self.c * np.asarray(rho, dtype=float) ** self.m

    def derivative(self, rho):
        return self.c * self.m * np.asarray(rho, dtype=float) ** (self.m - 1.0)

    def describe(self) -> str:
        return f"{self.c:g}*rho^{self.m:g}"


class LinearSpeed(DensityFunction):
    """Velocidad de equilibrio U(ρ) = V_M (1 - ρ/ρ_M)."""

    name = "linear"

    def __init__(self, v_max: float = V_MAX, rho_max: float = RHO_MAX):
        self.v_max = float(v_max)
        self.rho_max = float(rho_max)

    def value(self, rho):
        return self.v_max * (1.0 - np.asarray(rho, dtype=float) / self.rho_max)

    def derivative(self, rho):
        return np.full_like(np.asarray(rho, dtype=float), -self.v_max / self.rho_max)

    def describe(self) -> str:
        return "U(rho)=1-rho"


class ConstantFunction(DensityFunction):
    """Función constante. Útil para presiones nulas en comprobaciones de consistencia."""

    name = "constant"

    def __init__(self, level: float = 0.0):
        self.level = float(level)

    def value(self, rho):
        return np.full_like(np.asarray(rho, dtype=float), self.level)

    def derivative(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float))

    def describe(self) -> str:
        return f"const={self.level:g}"


class TabulatedFunction(DensityFunction):
    """
    Función dada en muestras de densidad, interpolada linealmente.

    La derivada se toma de numpy.gradient sobre las muestras (central en el
    interior, unilateral en los extremos) e interpolada linealmente.
    """

    name = "table"

    def __init__(self, rho_samples: Sequence[float], values: Sequence[float]):
        rho_samples = np.asarray(rho_samples, dtype=float)
        values = np.asarray(values, dtype=float)
        if rho_samples.ndim != 1 or rho_samples.shape != values.shape:
            raise ConfigurationError("la tabla necesita muestras y valores de igual longitud")
        if rho_samples.size < 3:
            raise ConfigurationError("la tabla necesita al menos 3 muestras")
        if np.any(np.diff(rho_samples) <= 0):
            raise ConfigurationError("las muestras de densidad deben ser estrictamente crecientes")
        self.rho_samples = rho_samples
        self.values = values
        self._slopes = np.gradient(values, rho_samples)

    def value(self, rho):
        return np.interp(rho, self.rho_samples, self.values)

    def derivative(self, rho):
        return np.interp(rho, self.rho_samples, self._slopes)

    def describe(self) -> str:
        return f"table[{self.rho_samples.size}]"


def _interior_samples(n: int = 101) -> np.ndarray:
    return np.linspace(0.0, RHO_MAX, n)[1:]


def validate_pressure(pressure: DensityFunction) -> DensityFunction:
    """Comprueba p(ρ) >= 0 y p'(ρ) > 0 en (0, ρ_M]."""
    rho = _interior_samples()
    if np.any(pressure.value(rho) < 0):
        raise ConfigurationError(f"la presión {pressure.describe()} toma valores negativos")
    if np.any(pressure.derivative(rho) <= 0):
        raise ConfigurationError(f"la presión {pressure.describe()} debe ser estrictamente creciente (p' > 0)")
    return pressure


def validate_hesitation(hesitation: DensityFunction) -> DensityFunction:
    """Comprueba h'(ρ) > 0 en (0, ρ_M)."""
    rho = _interior_samples()[:-1]
    if np.any(hesitation.derivative(rho) <= 0):
        raise ConfigurationError(f"la hesitación {hesitation.describe()} debe ser estrictamente creciente")
    return hesitation


def validate_acceleration(law: DensityFunction) -> DensityFunction:
    """Comprueba P(ρ) ∈ [0, 1] y P no creciente en [0, ρ_M]."""
    rho = np.linspace(0.0, RHO_MAX, 101)
    values = law.value(rho)
    if np.any(values < 0) or np.any(values > 1):
        raise ConfigurationError("la probabilidad de acelerar debe estar en [0, 1]")
    if np.any(np.diff(values) > 1e-14):
        raise ConfigurationError("la probabilidad de acelerar debe ser no creciente en ρ")
    return law
