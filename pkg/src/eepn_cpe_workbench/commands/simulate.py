from pathlib import Path
from typing import Optional

import typer

from eepn_cpe_workbench import __version__
from eepn_cpe_workbench.harness import run_scenario, sweep_results, to_row
from eepn_cpe_workbench.models import BerResult, ResultRow
from eepn_cpe_workbench.utils.output import (
    build_manifest,
    manifest_path,
    write_manifest,
    write_rows,
)
from eepn_cpe_workbench.utils.validate import (
    ConfigValidationError,
    SimulationConfig,
    parse_simulation,
)

app = typer.Typer(
    name="simulate",
    help="Commands for running Monte-Carlo BER experiments",
    add_completion=False,
)


def simulate_results(request: SimulationConfig, threads: int = 1) -> list[tuple[ResultRow, BerResult]]:
    """A pure-PN sweep when the config has a grid, else a single pooled run."""
    if request.sigma2_grid is not None:
        return [
            (to_row(result, sigma2), result)
            for sigma2, result in sweep_results(request.scenario, request.sigma2_grid, request.estimators, threads)
        ]
    result = run_scenario(request.scenario, threads)
    return [(to_row(result), result)]


@app.callback(invoke_without_command=True)
def simulate(
    config: str = typer.Option(..., "--config", "-c", help="Scenario config file or run manifest"),
    out: str = typer.Option(..., "--out", "-o", help="CSV file to write; the manifest goes next to it"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override of sim.seed", min=0, max=2**64 - 1),
    threads: int = typer.Option(
        1, "--threads", envvar="CPE_WORKBENCH_THREADS", min=1, help="Worker processes; results do not depend on it"
    ),
) -> None:
    """Simulate a scenario and write its BER rows plus a run manifest"""
    output = Path(out)
    try:
        request = parse_simulation(Path(config), seed)
        results = simulate_results(request, threads)
        rows = [row for row, _ in results]
        write_rows(output, rows)
        manifest = build_manifest("simulate", request.document, request.scenario, [output], __version__)
        write_manifest(manifest_path(output), manifest)
    except ConfigValidationError as e:
        typer.secho(f"Config Validation Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=2)
    except (ValueError, FloatingPointError, ZeroDivisionError) as e:
        typer.secho(f"Numeric Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=3)
    except OSError as e:
        typer.secho(f"Output Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Abort()

    for row, result in results:
        marker = "" if result.reliable else " (unreliable)"
        typer.echo(
            f" sigma2={row.sigma2_total:.4g} {row.algorithm}: BER {row.ber_mc:.3e} "
            f"[{row.ci_low:.3e}, {row.ci_high:.3e}], analytic {row.ber_floor_analytic:.3e}{marker}"
        )
    typer.echo(f"Wrote {output} and {manifest_path(output)}")
