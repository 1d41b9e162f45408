"""
Escenarios reproducibles: cada uno corre los módulos de cálculo, escribe sus CSV
y devuelve las tablas del resumen y los diagnósticos del manifest.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from . import __version__
from .config import (ScenarioConfig, build_hesitation, build_model_params, build_pressure, build_table,
                     build_u_eq)
from .equilibrium import fundamental_diagram, table_to_frame
from .exceptions import SolverAbort
from .metrics import front_width, l1_distance, mass, peak_position, total_variation, trend_sign
from .micro_ftl import MicroParams, frame_profile, run_micro, sample_vehicles, vehicles_from_positions
from .output import (ensure_dir, run_diagnostics, write_frame, write_manifest, write_snapshots,
                     write_summary)
from .solver1d import (RunResult, Snapshot, bump_density, initial_density, mesh_from_config, output_schedule,
                       run, run_equilibrium_law)
from .stability import (ArzClosure, ModelKind, diffusion_profile, mu_bgk, mu_modified_flux_form,
                        proposition1_threshold)
from .wspace import build_wgrid, moment_identity_residual, run_wspace

logger = logging.getLogger(__name__)


@dataclass
class ScenarioOutcome:
    title: str
    sections: List[tuple] = field(default_factory=list)
    diagnostics: Dict[str, object] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)


def _tag(config: ScenarioConfig, index: int) -> str:
    if config.delta_b is not None:
        return f"db{config.delta_b:.6g}"
    return f"r{config.r[index]:g}"


def _interior_maxima(values: np.ndarray) -> int:
    inner = values[1:-1]
    return int(np.count_nonzero((inner > values[:-2]) & (inner >= values[2:])))


def _fundamental_diagram(config: ScenarioConfig, out_dir: Path) -> ScenarioOutcome:
    outcome = ScenarioOutcome("Diagrama fundamental")
    rows = []
    for i, delta_b in enumerate(config.brake_jumps):
        tag = _tag(config, i)
        table = build_table(config, build_model_params(config, i))
        fd = fundamental_diagram(table)
        outcome.files.append(write_frame(table_to_frame(table), out_dir / f"table_{tag}.csv"))
        frame = pd.DataFrame({"rho": fd.rho_samples, "F_eq": fd.flux, "U_eq": table.u_eq,
                              "char_speed": fd.char_speed})
        outcome.files.append(write_frame(frame, out_dir / f"fd_{tag}.csv"))
        rows.append([tag, delta_b, fd.rho_c, fd.capacity, _interior_maxima(fd.flux), float(table.residuals.max())])
        outcome.diagnostics[f"residuo_maximo_{tag}"] = float(table.residuals.max())
    rows.sort(key=lambda row: row[3], reverse=True)
    outcome.sections.append(("Capacidades (orden decreciente)", rows,
                             ["tabla", "Δb", "ρ_c", "capacidad", "máximos interiores", "residuo"]))
    return outcome


_MODEL_KINDS = {"boltzmann": ModelKind.BGK, "bgk": ModelKind.BGK, "modified_bgk": ModelKind.MODIFIED,
                "arz": ModelKind.ARZ}


def _format_intervals(intervals) -> str:
    return "; ".join(f"[{a:.4f}, {b:.4f}]" for a, b in intervals) or "-"


def _diffusion_profile(config: ScenarioConfig, out_dir: Path) -> ScenarioOutcome:
    outcome = ScenarioOutcome("Perfil de difusión")
    kind = _MODEL_KINDS[config.model]
    pressure = build_pressure(config)
    rows = []
    for i, _ in enumerate(config.brake_jumps):
        tag = _tag(config, i)
        table = build_table(config, build_model_params(config, i))
        closure = None
        if kind is ModelKind.ARZ:
            closure = ArzClosure(u_eq=build_u_eq(config, table), hesitation=build_hesitation(config))
        profile = diffusion_profile(kind, table=table, pressure=pressure, closure=closure)
        columns = {"rho": profile.rho_samples, "mu": profile.mu, "model": kind.value,
                   "classification": profile.classification.value}
        cross_check = float("nan")
        if kind is ModelKind.MODIFIED:
            columns["mu_bgk"] = mu_bgk(table, profile.rho_samples)
            cross_check = float(np.abs(mu_modified_flux_form(table, pressure, profile.rho_samples)
                                       - profile.mu).max())
        outcome.files.append(write_frame(pd.DataFrame(columns), out_dir / f"mu_{tag}.csv"))
        threshold = proposition1_threshold(table)
        rows.append([tag, profile.classification.value, _format_intervals(profile.negative_intervals),
                     "-" if threshold is None else f"{threshold:.4f}", cross_check])
    outcome.sections.append((f"Clasificación ({kind.value})", rows,
                             ["tabla", "clasificación", "intervalos μ < 0", "umbral hipótesis", "|forma flujo - μ|"]))
    return outcome


def _trajectory_rows(result: RunResult, x: np.ndarray, dx: float, periodic: bool,
                     jump=None) -> List[list]:
    rows = []
    for s in result.snapshots:
        peak_x, peak_h = peak_position(x, s.rho)
        row = [s.t, peak_x, peak_h, total_variation(s.rho, periodic), float(s.rho.max()), mass(s.rho, dx)]
        if jump is not None:
            row.append(front_width(x, s.rho, *jump))
        rows.append(row)
    return rows


def _trend_rows(rows: List[list]) -> List[list]:
    moving = rows[1:]
    return [["deriva del pico", trend_sign([r[1] for r in moving])],
            ["altura del pico", trend_sign([r[2] for r in moving])]]


def _tv_ratio(result: RunResult, periodic: bool) -> float:
    first = total_variation(result.snapshots[0].rho, periodic)
    last = total_variation(result.snapshots[-1].rho, periodic)
    return last / first if first > 0 else float("inf")


def _run_kinetic(config: ScenarioConfig, table, aborted: List[list]) -> RunResult:
    """Corrida de comparación: si aborta, se conservan las salidas alcanzadas."""
    try:
        return run(config, table)
    except SolverAbort as error:
        if error.partial is None:
            raise
        logger.warning("ε %s: se conservan %d salidas hasta t=%.4f", config.eps_kind,
                       len(error.partial.snapshots), error.t)
        aborted.append([config.eps_kind, error.t, error.cell, error.step, str(error)])
        return error.partial


def _kinetic(config: ScenarioConfig, out_dir: Path) -> ScenarioOutcome:
    titles = {"bump": "Evolución de un bump de densidad", "riemann": "Problema de Riemann (semáforo)",
              "stopgo": "Ondas stop-and-go"}
    outcome = ScenarioOutcome(titles[config.scenario])
    table = build_table(config, build_model_params(config))
    mesh = mesh_from_config(config)
    x = mesh.centers
    periodic = config.boundary == "periodic"
    jump = (config.rho_left, config.rho_right) if config.scenario == "riemann" else None
    headers = ["t", "x_pico", "altura", "variación total", "ρ máx", "masa"] + (["ancho frente"] if jump else [])

    comparison = config.scenario in ("stopgo", "riemann")
    aborted = []
    result = _run_kinetic(config, table, aborted) if comparison else run(config, table)
    outcome.files += write_snapshots(result, x, out_dir)
    rows = _trajectory_rows(result, x, mesh.dx, periodic, jump)
    outcome.sections.append((f"Corrida principal ({config.model}, ε {config.eps_kind})", rows, headers))
    if config.scenario != "riemann":
        outcome.sections.append(("Tendencias (+1 crece, -1 decrece, 0 mixto)", _trend_rows(rows),
                                 ["medida", "signo"]))
    outcome.diagnostics.update(run_diagnostics(result))

    if comparison:
        other = "constant" if config.eps_kind == "variable" else "variable"
        variant = _run_kinetic(replace(config, eps_kind=other), table, aborted)
        outcome.files += write_snapshots(variant, x, out_dir / f"eps_{other}")
        variant_rows = _trajectory_rows(variant, x, mesh.dx, periodic, jump)
        outcome.sections.append((f"Variante ε {other}", variant_rows, headers))

        times = output_schedule(config.t_final, config.output_times, config.n_outputs)
        reference = run_equilibrium_law(initial_density(config, x), mesh, table, times, cfl=config.cfl)
        outcome.files += write_snapshots(reference, x, out_dir / "equilibrium")
        outcome.sections.append(("Ley de equilibrio (ε = 0)",
                                 _trajectory_rows(reference, x, mesh.dx, periodic, jump), headers))
        ratios = [[f"ε {config.eps_kind}", _tv_ratio(result, periodic)],
                  [f"ε {other}", _tv_ratio(variant, periodic)],
                  ["equilibrio", _tv_ratio(reference, periodic)]]
        outcome.sections.append(("Variación total final / inicial", ratios, ["corrida", "razón"]))
        if aborted:
            outcome.sections.append(("Corridas interrumpidas (densidad fuera de [0, ρ_M])", aborted,
                                     ["ε", "t", "celda", "paso", "motivo"]))
            outcome.diagnostics["corridas_interrumpidas"] = len(aborted)
    return outcome


def _wspace_bump(config: ScenarioConfig, out_dir: Path) -> ScenarioOutcome:
    outcome = ScenarioOutcome("BGK modificado en el espacio w")
    table = build_table(config, build_model_params(config))
    pressure = build_pressure(config)
    mesh = mesh_from_config(config)
    result = run_wspace(config, table, pressure)
    outcome.files += write_snapshots(result, mesh.centers, out_dir, node_prefix="g")
    rows = _trajectory_rows(result, mesh.centers, mesh.dx, config.boundary == "periodic")
    outcome.sections.append(("Corrida en w", rows, ["t", "x_pico", "altura", "variación total", "ρ máx", "masa"]))
    outcome.sections.append(("Tendencias (+1 crece, -1 decrece, 0 mixto)", _trend_rows(rows), ["medida", "signo"]))
    wgrid = build_wgrid(table.grid, pressure, config.w_refine, table.params.rho_max)
    profile = diffusion_profile(ModelKind.MODIFIED, table=table, pressure=pressure)
    outcome.sections.append(("Consistencia", [
        ["residuo identidades de momentos", float(moment_identity_residual(table, pressure, wgrid).max())],
        ["clasificación μ modificado", profile.classification.value],
        ["intervalos μ < 0", _format_intervals(profile.negative_intervals)],
    ], ["medida", "valor"]))
    outcome.diagnostics.update(run_diagnostics(result))
    return outcome


def _micro_compare(config: ScenarioConfig, out_dir: Path) -> ScenarioOutcome:
    outcome = ScenarioOutcome("Comparación micro (FTL-Bando) / BGK en w")
    table = build_table(config, build_model_params(config))
    pressure = build_pressure(config)
    mesh = mesh_from_config(config)
    eps = config.micro_eps if config.micro_eps is not None else config.eps_value
    positions, vehicle_length = sample_vehicles(lambda x: bump_density(x, config.a, config.b), mesh,
                                                config.n_vehicles, seed=config.seed, jitter=config.jitter)
    params = MicroParams(pressure=pressure, u_eq=build_u_eq(config, table), eps=eps,
                         vehicle_length=vehicle_length, ring_length=mesh.length, interaction=config.interaction,
                         c_gamma=config.c_gamma, gamma=config.gamma)
    times = output_schedule(config.t_final, config.output_times, config.n_outputs)
    micro = run_micro(vehicles_from_positions(positions, params), params, times, dt=config.micro_dt)

    count = len(positions)
    trajectory = pd.DataFrame({
        "t": np.repeat([f.t for f in micro.frames], count),
        "i": np.tile(np.arange(count), len(micro.frames)),
        "x": np.concatenate([mesh.x_min + f.positions for f in micro.frames]),
        "v": np.concatenate([f.v for f in micro.frames]),
        "w": np.concatenate([f.w for f in micro.frames]),
    })
    micro_dir = ensure_dir(out_dir / "micro")
    outcome.files.append(write_frame(trajectory, micro_dir / "trajectory.csv"))
    profiles = RunResult(model="micro", snapshots=[])
    for f in micro.frames:
        rho, u = frame_profile(f, params, mesh)
        profiles.snapshots.append(Snapshot(f.t, 0, rho, rho * u, u, np.full(mesh.n_cells, eps)))
    outcome.files += write_snapshots(profiles, mesh.centers, micro_dir)

    macro = run_wspace(replace(config, eps_value=eps), table, pressure)
    outcome.files += write_snapshots(macro, mesh.centers, out_dir / "wspace", node_prefix="g")
    rows = [[m.t, l1_distance(m.rho, w.rho, mesh.dx), l1_distance(m.u * m.rho, w.flux, mesh.dx)]
            for m, w in zip(profiles.snapshots, macro.snapshots)]
    outcome.sections.append(("Distancia L¹ por tiempo de salida", rows, ["t", "‖ρ_micro - ρ_w‖₁", "‖q_micro - q_w‖₁"]))
    outcome.sections.append(("Simulación micro", [
        ["vehículos", len(positions)],
        ["longitud de vehículo ℓ", vehicle_length],
        ["pasos", micro.n_steps],
        ["eventos de recorte", micro.clamp_events],
    ], ["medida", "valor"]))
    outcome.diagnostics.update(run_diagnostics(macro))
    outcome.diagnostics["micro_pasos"] = micro.n_steps
    outcome.diagnostics["micro_recortes"] = micro.clamp_events
    return outcome


SCENARIO_RUNNERS: Dict[str, Callable[[ScenarioConfig, Path], ScenarioOutcome]] = {
    "fundamental_diagram": _fundamental_diagram,
    "diffusion_profile": _diffusion_profile,
    "bump": _kinetic,
    "riemann": _kinetic,
    "stopgo": _kinetic,
    "wspace_bump": _wspace_bump,
    "micro_compare": _micro_compare,
}


def run_scenario(config: ScenarioConfig, out_dir) -> ScenarioOutcome:
    """Corre el escenario, escribe datos, summary.txt y manifest.txt en out_dir."""
    out_dir = ensure_dir(out_dir)
    logger.info("escenario %s → %s", config.scenario, out_dir)
    start = time.perf_counter()
    outcome = SCENARIO_RUNNERS[config.scenario](config, out_dir)
    elapsed = time.perf_counter() - start
    outcome.files.append(write_summary(out_dir, outcome.title, outcome.sections))
    outcome.files.append(write_manifest(out_dir, config, __version__, outcome.diagnostics, elapsed))
    logger.info("escenario %s terminado en %.1f s (%d archivos)", config.scenario, elapsed, len(outcome.files))
    return outcome
