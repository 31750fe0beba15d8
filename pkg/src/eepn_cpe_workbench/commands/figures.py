from pathlib import Path
from typing import Optional

import typer

from eepn_cpe_workbench.analytic import comparison_notes, figure_grid, floor_curves
from eepn_cpe_workbench.commands.analytic import curve_rows, visibility_note
from eepn_cpe_workbench.models import SUPPORTED_ORDERS, FloorCurve, ModulationFormat
from eepn_cpe_workbench.utils.output import write_atomic, write_rows
from eepn_cpe_workbench.utils.validate import (
    ConfigValidationError,
    parse_analytic,
)

app = typer.Typer(
    name="figures",
    help="Commands for writing the floor-versus-variance curves of every format",
    add_completion=False,
)

FIGURE_POINTS = 41


def figure_file_name(index: int, n: int) -> str:
    return f"fig{index}_{ModulationFormat(order=n).label}.csv"


def write_figures(
    directory: Path, bwa_block_size: int = 15, vv_block_size: int = 15
) -> tuple[list[Path], list[FloorCurve]]:
    """One CSV per format on a grid that spans the visible floor range, plus notes.txt."""
    directory.mkdir(parents=True, exist_ok=True)
    written, curves = [], []
    for index, n in enumerate(SUPPORTED_ORDERS, start=1):
        grid = figure_grid(n, bwa_block_size, vv_block_size, FIGURE_POINTS)
        curve = floor_curves(n, grid, bwa_block_size, vv_block_size)
        path = directory / figure_file_name(index, n)
        write_rows(path, curve_rows(curve))
        written.append(path)
        curves.append(curve)

    notes = directory / "notes.txt"
    write_atomic(notes, comparison_notes(vv_block_size).encode("utf-8"))
    written.append(notes)
    return written, curves


@app.callback(invoke_without_command=True)
def figures(
    out: str = typer.Option(..., "--out", "-o", help="Directory to write the figure files into"),
    config: Optional[str] = typer.Option(
        None, "--config", "-c", help="Analytic config supplying the block sizes"
    ),
) -> None:
    """Write fig1_qpsk.csv ... fig5_64psk.csv with the three floor curves"""
    try:
        request = parse_analytic(Path(config) if config else None)
        written, curves = write_figures(Path(out), request.bwa_block_size, request.vv_block_size)
    except ConfigValidationError as e:
        typer.secho(f"Config Validation Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=2)
    except (ValueError, FloatingPointError, ZeroDivisionError) as e:
        typer.secho(f"Numeric Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=3)
    except OSError as e:
        typer.secho(f"Output Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Abort()

    for path in written:
        typer.echo(f" - {path}")
    typer.echo(visibility_note(curves))
