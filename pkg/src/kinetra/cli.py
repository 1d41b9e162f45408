"""
Línea de comandos:
    kinetra run <config> [--out DIR] [--jobs N] [--verbose]
    kinetra validate <config>
    kinetra plot <directorio-de-corrida>

Códigos de salida: 0 éxito, 1 error de configuración, 2 aborto en tiempo de ejecución.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from tabulate import tabulate

from .config import ScenarioConfig, load_config
from .exceptions import ConfigurationError, KinetraError
from .output import write_diagnostic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
OUT_ENV = "KINETRA_OUT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinetra", description="Modelos cinéticos de tráfico y su estabilidad")
    parser.add_argument("--verbose", "-v", action="store_true", help="registro a nivel DEBUG")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="corre un escenario")
    run.add_argument("config", help="archivo clave = valor")
    run.add_argument("--out", help=f"directorio de salida (por defecto ${OUT_ENV}/<config> o out_dir)")
    run.add_argument("--jobs", type=int, default=1, help="procesos para tabular maxwellianas")

    validate = commands.add_parser("validate", help="valida una configuración sin correrla")
    validate.add_argument("config")

    plot = commands.add_parser("plot", help="dibuja en PNG los CSV de una corrida terminada")
    plot.add_argument("run_dir")
    return parser


def resolve_out_dir(config: ScenarioConfig, config_path: Path, cli_out: Optional[str]) -> Path:
    """--out gana; luego $KINETRA_OUT/<nombre del archivo>; luego out_dir del archivo."""
    if cli_out:
        return Path(cli_out)
    root = os.environ.get(OUT_ENV)
    if root:
        return Path(root) / config_path.stem
    return Path(config.out_dir)


def _report_issues(error: ConfigurationError) -> None:
    print("configuración inválida:", file=sys.stderr)
    for issue in error.issues:
        print(f"  {issue}", file=sys.stderr)


def _validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigurationError as error:
        _report_issues(error)
        return EXIT_CONFIG
    rows = [[key, value, "sí" if by_default else ""] for key, value, by_default in config.echo()]
    print(tabulate(rows, headers=["clave", "valor", "por defecto"], tablefmt="simple"))
    for message in config.warnings:
        print(f"advertencia: {message}")
    print(f"{args.config}: configuración válida ({config.scenario})")
    return EXIT_OK


def _run(args) -> int:
    from .scenarios import run_scenario

    config_path = Path(args.config)
    try:
        config = load_config(config_path)
        if args.jobs < 1:
            raise ConfigurationError("--jobs debe ser al menos 1")
    except ConfigurationError as error:
        _report_issues(error)
        return EXIT_CONFIG
    config.jobs = args.jobs
    out_dir = resolve_out_dir(config, config_path, args.out)
    try:
        outcome = run_scenario(config, out_dir)
    except ConfigurationError as error:
        _report_issues(error)
        return EXIT_CONFIG
    except KinetraError as error:
        logger.error("corrida abortada: %s", error)
        path = write_diagnostic(out_dir, error, [f"escenario = {config.scenario}", f"config = {config_path}"])
        print(f"corrida abortada: {error} (ver {path})", file=sys.stderr)
        return EXIT_RUNTIME
    print((out_dir / "summary.txt").read_text(encoding="utf-8"))
    print(f"{len(outcome.files)} archivos en {out_dir}")
    return EXIT_OK


def _plot(args) -> int:
    from .plotting import render_run

    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        print(f"no existe el directorio {run_dir}", file=sys.stderr)
        return EXIT_CONFIG
    images = render_run(run_dir)
    print(f"{len(images)} imágenes en {run_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    handlers = {"run": _run, "validate": _validate, "plot": _plot}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
