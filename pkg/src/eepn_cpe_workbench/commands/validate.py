import typer
from pathlib import Path

from eepn_cpe_workbench.analytic import total_variance
from eepn_cpe_workbench.utils.validate import (
    ConfigValidationError,
    load_document,
    parse_analytic,
    parse_simulation,
)

app = typer.Typer(
    name="validate",
    help="Commands for validating config files",
    add_completion=False,
)


@app.command()
def config(
    path: str = typer.Argument(help="The config file to validate"),
) -> None:
    """Validate a scenario or analytic config and show what it resolves to"""
    typer.echo(f"Validating config: {path}")
    try:
        if "analytic" in load_document(Path(path)):
            request = parse_analytic(Path(path))
            typer.echo(f"Config {path} is a valid analytic config")
            typer.echo(f" orders: {request.orders}, {len(request.sigma2_grid)} grid points")
            return

        scenario = parse_simulation(Path(path)).scenario
    except ConfigValidationError as e:
        typer.echo(f"Config {path} is invalid: {e}")
        raise typer.Exit(code=2)

    variances = total_variance(scenario.lasers, scenario.link, scenario.symbol_period)
    typer.echo(f"Config {path} is valid")
    typer.echo(f" format: {scenario.format.label}, estimator: {scenario.cpe.algorithm}")
    typer.echo(
        f" sigma2_tx_lo={variances.sigma2_tx_lo:.4e} sigma2_eepn={variances.sigma2_eepn:.4e} "
        f"sigma2_total={variances.sigma2_total:.4e} rad^2"
    )
    typer.echo(scenario.model_dump_json(indent=2))
