"""Excepciones propias de kinetra."""

from dataclasses import dataclass
from typing import List, Optional, Sequence


class KinetraError(Exception):
    """Excepción base para todos los errores de kinetra."""
    pass


@dataclass(frozen=True)
class ConfigIssue:
    """Un problema de configuración, con la línea del archivo si se conoce."""
    message: str
    key: Optional[str] = None
    line: Optional[int] = None

    def __str__(self) -> str:
        prefix = f"línea {self.line}: " if self.line is not None else ""
        key = f"[{self.key}] " if self.key else ""
        return f"{prefix}{key}{self.message}"


class ConfigurationError(KinetraError):
    """Parámetros inválidos. Acumula todos los problemas encontrados, no solo el primero."""

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [ConfigIssue(issues)]
        elif isinstance(issues, ConfigIssue):
            issues = [issues]
        self.issues: List[ConfigIssue] = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class DomainError(KinetraError):
    """Argumento fuera del dominio matemático de la operación."""
    pass


class ConvergenceError(KinetraError):
    """La relajación no alcanzó la tolerancia; conserva el residuo final."""

    def __init__(self, message: str, residual: float, steps: int, failed: Sequence[float] = ()):
        self.residual = residual
        self.steps = steps
        self.failed = list(failed)
        super().__init__(f"{message} (residuo={residual:.3e}, pasos={steps})")


class CFLError(KinetraError):
    """Paso de tiempo rechazado por la condición CFL."""

    def __init__(self, dt: float, required_dt: float):
        self.dt = dt
        self.required_dt = required_dt
        super().__init__(f"dt={dt:.6e} viola la condición CFL; se requiere dt <= {required_dt:.6e}")


class SolverAbort(KinetraError):
    """
    Valor negativo, NaN o densidad por encima de ρ_M detectado durante una simulación.

    El bucle que la lanza completa t (tiempo del paso fallido) y partial (las salidas
    alcanzadas antes de abortar).
    """

    def __init__(self, message: str, cell: int, node: int, step: int):
        self.cell = cell
        self.node = node
        self.step = step
        self.t: Optional[float] = None
        self.partial = None
        super().__init__(f"{message} (celda={cell}, nodo={node}, paso={step})")


class CollisionError(KinetraError):
    """Distancia entre vehículos no positiva (colisión o adelantamiento)."""

    def __init__(self, index: int, headway: float):
        self.index = index
        self.headway = headway
        super().__init__(
            f"colisión en el vehículo {index}: distancia={headway:.3e}; pruebe con un dt menor")
