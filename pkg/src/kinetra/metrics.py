"""
Medidas escalares sobre perfiles de densidad (posición del pico, variación total,
ancho de frente, distancias L¹) usadas por los escenarios y los resúmenes.
"""

from typing import List, Optional, Tuple

import numpy as np


def mass(rho: np.ndarray, dx: float) -> float:
    return float(np.sum(rho) * dx)


def l1_distance(a: np.ndarray, b: np.ndarray, dx: float) -> float:
    return float(np.sum(np.abs(np.asarray(a) - np.asarray(b))) * dx)


def peak_position(x: np.ndarray, rho: np.ndarray) -> Tuple[float, float]:
    """Posición y altura del máximo, refinadas con la parábola por los tres vecinos."""
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    i = int(np.argmax(rho))
    if i == 0 or i == rho.size - 1:
        return float(x[i]), float(rho[i])
    y0, y1, y2 = rho[i - 1], rho[i], rho[i + 1]
    curvature = y0 - 2.0 * y1 + y2
    if curvature >= 0:
        return float(x[i]), float(y1)
    offset = 0.5 * (y0 - y2) / curvature
    dx = 0.5 * (x[i + 1] - x[i - 1])
    return float(x[i] + offset * dx), float(y1 - 0.25 * (y0 - y2) * offset)


def total_variation(rho: np.ndarray, periodic: bool = True) -> float:
    rho = np.asarray(rho, dtype=float)
    tv = np.abs(np.diff(rho)).sum()
    if periodic:
        tv += abs(rho[0] - rho[-1])
    return float(tv)


def _crossings(x: np.ndarray, rho: np.ndarray, level: float) -> List[float]:
    shifted = rho - level
    found = []
    for j in range(rho.size - 1):
        a, b = shifted[j], shifted[j + 1]
        if a == 0:
            found.append(float(x[j]))
        elif a * b < 0:
            found.append(float(x[j] + (x[j + 1] - x[j]) * a / (a - b)))
    if shifted[-1] == 0:
        found.append(float(x[-1]))
    return found


def front_width(x: np.ndarray, rho: np.ndarray, rho_left: float, rho_right: float) -> Optional[float]:
    """
    Ancho mínimo de la transición entre el 10% y el 90% del salto ρ_L → ρ_R.

    Con oscilaciones puede haber varios cruces de cada nivel; se toma el par más cercano.
    Devuelve None si algún nivel no se cruza.
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    jump = rho_right - rho_left
    low = _crossings(x, rho, rho_left + 0.1 * jump)
    high = _crossings(x, rho, rho_left + 0.9 * jump)
    if not low or not high:
        return None
    return float(min(abs(b - a) for a in low for b in high))


def trend_sign(values) -> int:
    """+1 si la serie crece estrictamente, -1 si decrece estrictamente, 0 en otro caso."""
    steps = np.diff(np.asarray(values, dtype=float))
    if steps.size and np.all(steps > 0):
        return 1
    if steps.size and np.all(steps < 0):
        return -1
    return 0
