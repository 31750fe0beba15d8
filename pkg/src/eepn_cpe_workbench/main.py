import logging

import typer
from dotenv import load_dotenv

from .commands import (
    analytic,
    figures,
    simulate,
    validate,
)

load_dotenv()

app = typer.Typer(help="EEPN carrier phase estimation workbench CLI")


@app.callback()
def main(
    log_level: str = typer.Option(
        "WARNING", "--log-level", envvar="CPE_WORKBENCH_LOG_LEVEL", help="Logging level"
    ),
) -> None:
    logging.basicConfig(
        level=log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


app.add_typer(validate.app, name="validate")
app.add_typer(analytic.app, name="analytic")
app.add_typer(simulate.app, name="simulate")
app.add_typer(figures.app, name="figures")
