from pathlib import Path
from typing import Optional

import typer

from eepn_cpe_workbench.analytic import comparison_notes, floor_curves
from eepn_cpe_workbench.models import (
    ALGORITHMS,
    VISIBLE_FLOOR_HIGH,
    VISIBLE_FLOOR_LOW,
    FloorCurve,
    ResultRow,
)
from eepn_cpe_workbench.utils.output import write_rows
from eepn_cpe_workbench.utils.validate import (
    AnalyticConfig,
    ConfigValidationError,
    parse_analytic,
)

app = typer.Typer(
    name="analytic",
    help="Commands for evaluating the closed-form BER floors",
    add_completion=False,
)


def analytic_curves(config: AnalyticConfig) -> list[FloorCurve]:
    return [floor_curves(n, config.sigma2_grid, config.bwa_block_size, config.vv_block_size) for n in config.orders]


def curve_rows(curve: FloorCurve) -> list[ResultRow]:
    """One row per (grid point, algorithm); Monte-Carlo columns empty."""
    rows = []
    for index, sigma2 in enumerate(curve.sigma2_grid):
        for algorithm in ALGORITHMS:
            block_size = {"nlms": None, "bwa": curve.bwa_block_size, "vv": curve.vv_block_size}[algorithm]
            rows.append(
                ResultRow(
                    sigma2_total=float(sigma2),
                    n=curve.order,
                    algorithm=algorithm,
                    block_size=block_size,
                    ber_floor_analytic=float(curve.column(algorithm)[index]),
                )
            )
    return rows


def visibility_note(curves: list[FloorCurve]) -> str:
    """How many floors fall outside the plotted range."""
    total = sum(curve.sigma2_grid.size * len(ALGORITHMS) for curve in curves)
    visible = sum(int(curve.visible(algorithm).sum()) for curve in curves for algorithm in ALGORITHMS)
    return (
        f"{total - visible} of {total} floors fall outside the visible range "
        f"[{VISIBLE_FLOOR_LOW:g}, {VISIBLE_FLOOR_HIGH:g}]"
    )


@app.callback(invoke_without_command=True)
def analytic(
    config: Optional[str] = typer.Option(
        None, "--config", "-c", help="Analytic config file; defaults apply when omitted"
    ),
    out: str = typer.Option(..., "--out", "-o", help="CSV file to write"),
) -> None:
    """Write the analytic BER floors of NLMS, BWA and VV to a CSV file"""
    try:
        request = parse_analytic(Path(config) if config else None)
        curves = analytic_curves(request)
        rows = [row for curve in curves for row in curve_rows(curve)]
        write_rows(Path(out), rows)
    except ConfigValidationError as e:
        typer.secho(f"Config Validation Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=2)
    except (ValueError, FloatingPointError, ZeroDivisionError) as e:
        typer.secho(f"Numeric Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=3)
    except OSError as e:
        typer.secho(f"Output Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Abort()

    typer.echo(f"Wrote {len(rows)} rows to {out}")
    typer.echo(visibility_note(curves))
    typer.echo(comparison_notes(request.vv_block_size))
