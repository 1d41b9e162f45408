"""
Escritura de resultados: CSV con pandas, manifest.txt con la procedencia de la
corrida y summary.txt con tablas de tabulate.
"""

import hashlib
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from tabulate import tabulate

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.16e"


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, path) -> Path:
    """CSV con 17 cifras significativas; byte a byte reproducible."""
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug("escrito %s (%d filas)", path, len(frame))
    return path


def snapshot_frame(x: np.ndarray, snapshot, node_prefix: str = "f") -> pd.DataFrame:
    """Columnas x, rho, flux (o q en el espacio w), u, eps y opcionalmente f_k / g_k."""
    columns = {"x": x, "rho": snapshot.rho}
    if snapshot.q is not None:
        columns["q"] = snapshot.q
    else:
        columns["flux"] = snapshot.flux
    columns["u"] = snapshot.u
    columns["eps"] = snapshot.eps
    if snapshot.values is not None:
        for k in range(snapshot.values.shape[1]):
            columns[f"{node_prefix}_{k}"] = snapshot.values[:, k]
    return pd.DataFrame(columns)


def snapshot_name(index: int, t: float) -> str:
    return f"snapshot_{index:03d}_t{t:.4f}.csv"


def write_snapshots(result, x: np.ndarray, out_dir, node_prefix: str = "f") -> List[Path]:
    out_dir = ensure_dir(out_dir)
    paths = []
    for i, snapshot in enumerate(result.snapshots):
        paths.append(write_frame(snapshot_frame(x, snapshot, node_prefix), out_dir / snapshot_name(i, snapshot.t)))
    index = pd.DataFrame({"index": range(len(result.snapshots)),
                          "t": [s.t for s in result.snapshots],
                          "step": [s.step for s in result.snapshots]})
    write_frame(index, out_dir / "snapshots.csv")
    return paths


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_diagnostics(result) -> dict:
    """Historia de dt y conservación de una corrida de solver1d / wspace."""
    return {
        "pasos": result.n_steps,
        "dt_min": result.dt_min if result.n_steps else 0.0,
        "dt_max": result.dt_max,
        "masa_inicial": result.mass_initial,
        "masa_final": result.mass_final,
        "deriva_relativa_masa": result.relative_mass_drift,
        "deriva_maxima_por_paso": result.max_mass_step_drift,
        "deriva_maxima_colision": result.max_collision_drift,
    }


def write_manifest(out_dir, config, version: str, diagnostics: dict, wall_time: float) -> Path:
    """Eco completo de la configuración (marcando los valores por defecto) y diagnósticos."""
    lines = [
        f"kinetra {version}",
        f"escenario: {config.scenario}",
        f"config_sha256: {config_hash(config.source_text)}",
        f"tiempo_de_pared_s: {wall_time:.3f}",
        "",
        "[configuración]",
    ]
    for key, value, by_default in config.echo():
        if isinstance(value, list):
            value = ", ".join(f"{v:g}" for v in value)
        suffix = "  # por defecto" if by_default else ""
        lines.append(f"{key} = {value}{suffix}")
    if config.warnings:
        lines += ["", "[advertencias]"] + config.warnings
    lines += ["", "[diagnósticos]"]
    for key, value in diagnostics.items():
        lines.append(f"{key} = {value:.16g}" if isinstance(value, float) else f"{key} = {value}")
    path = Path(out_dir) / "manifest.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_summary(out_dir, title: str, sections: Sequence[tuple]) -> Path:
    """sections: (subtítulo, filas, encabezados)."""
    parts = [title, "=" * len(title)]
    for subtitle, rows, headers in sections:
        parts += ["", subtitle, tabulate(rows, headers=headers, tablefmt="grid", floatfmt=".6g")]
    path = Path(out_dir) / "summary.txt"
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path


def write_diagnostic(out_dir, error: Exception, context: Optional[Iterable[str]] = None) -> Path:
    out_dir = ensure_dir(out_dir)
    lines = [f"{type(error).__name__}: {error}"]
    for attr in ("cell", "node", "step", "index", "headway", "dt", "required_dt", "residual", "steps"):
        if hasattr(error, attr):
            lines.append(f"{attr} = {getattr(error, attr)}")
    lines += list(context or [])
    path = out_dir / "diagnostic.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
