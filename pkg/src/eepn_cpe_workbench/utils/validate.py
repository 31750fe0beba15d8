"""Configuration files: JSON documents in engineering units, resolved to SI models."""
from __future__ import annotations

import difflib
import logging
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import orjson
from pydantic import Field, ValidationError, ValidationInfo, field_validator, model_validator

from eepn_cpe_workbench.models import (
    GBAUD,
    KHZ,
    SUPPORTED_ORDERS,
    Algorithm,
    ConfigModels,
    CpeConfig,
    LaserConfig,
    LinkConfig,
    ModulationFormat,
    ProcessedModels,
    ScenarioConfig,
)

logger = logging.getLogger(__name__)

# Unit-less spellings people reach for, mapped to the real keys.
KEY_ALIASES: dict[str, str] = {
    "linewidth": "delta_f_tx_khz",
    "linewidth_khz": "delta_f_tx_khz",
    "delta_f_tx": "delta_f_tx_khz",
    "delta_f_lo": "delta_f_lo_khz",
    "symbol_rate": "symbol_rate_gbaud",
    "dispersion": "dispersion_ps_nm_km",
    "length": "length_km",
    "wavelength": "wavelength_nm",
    "snr": "snr_db",
    "order": "n",
}


class ConfigIssue(ProcessedModels):
    """One violation, located by its dotted key path."""
    key: str = Field(description="Dotted key path, e.g. cpe.block_size")
    message: str = Field(description="What is wrong with the key")

    def __str__(self) -> str:
        return f"{self.key}: {self.message}"


class ConfigValidationError(Exception): ...


class ConfigFileNotFoundError(ConfigValidationError): ...


class ConfigIsNotAFileError(ConfigValidationError): ...


class ConfigIsNotAJSONFileError(ConfigValidationError): ...


class ConfigIsNotValidError(ConfigValidationError):
    def __init__(self, path: Path, issues: list[ConfigIssue]) -> None:
        self.path = path
        self.issues = issues
        super().__init__(f"Config {path} is invalid:\n" + "\n".join(f"  {issue}" for issue in issues))


def _check_order(n: int) -> None:
    if n not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported order {n}: expected one of {list(SUPPORTED_ORDERS)}")


class ModulationSection(ConfigModels):
    n: int = Field(description="Constellation size")

    @field_validator("n")
    @classmethod
    def _supported(cls, n: int) -> int:
        _check_order(n)
        return n


class SignalSection(ConfigModels):
    symbol_rate_gbaud: float = Field(gt=0, description="Symbol rate in GBaud")


class LaserSection(ConfigModels):
    delta_f_tx_khz: float = Field(ge=0, description="Tx linewidth in kHz")
    delta_f_lo_khz: float = Field(ge=0, description="LO linewidth in kHz")


class LinkSection(ConfigModels):
    dispersion_ps_nm_km: float = Field(ge=0, description="CD coefficient in ps/(nm km)")
    length_km: float = Field(ge=0, description="Fibre length in km")
    wavelength_nm: float = Field(gt=0, description="Carrier wavelength in nm")


class CpeSection(ConfigModels):
    algorithm: Algorithm = Field(description="nlms, bwa or vv")
    block_size: int = Field(default=15, ge=1, description="N_BWA or N_VV")
    mu: float = Field(default=0.1, gt=0, lt=2, description="NLMS step size")
    mode: Literal["training", "decision_directed"] = Field(default="training", description="NLMS acquisition")
    training_length: int = Field(default=500, ge=0, description="NLMS training symbols")

    @field_validator("block_size")
    @classmethod
    def _odd_window(cls, block_size: int, info: ValidationInfo) -> int:
        if info.data.get("algorithm") == "vv" and (block_size < 3 or block_size % 2 == 0):
            raise ValueError(f"window must be odd ≥ 3, got {block_size}")
        return block_size


class SimSection(ConfigModels):
    num_symbols: int = Field(ge=2, description="Symbols per trial, reference included")
    num_trials: int = Field(ge=1, description="Trials pooled per result")
    seed: int = Field(ge=0, lt=2**64, description="Base seed")
    snr_db: Union[float, Literal["off"]] = Field(description='Per-symbol SNR in dB, or "off"')


class SweepSection(ConfigModels):
    sigma2_grid: list[float] = Field(min_length=1, description="Total variances in rad^2")
    algorithms: Optional[list[Algorithm]] = Field(
        default=None, min_length=1, description="Estimators to sweep; cpe.algorithm when omitted"
    )

    @field_validator("sigma2_grid")
    @classmethod
    def _increasing(cls, grid: list[float]) -> list[float]:
        if any(value <= 0 for value in grid):
            raise ValueError("variances must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        return grid

    @field_validator("algorithms")
    @classmethod
    def _distinct(cls, algorithms: Optional[list[Algorithm]]) -> Optional[list[Algorithm]]:
        if algorithms is not None and len(set(algorithms)) != len(algorithms):
            raise ValueError("algorithms must not repeat")
        return algorithms


class ScenarioDocument(ConfigModels):
    """A scenario config file, section by section."""
    modulation: ModulationSection
    signal: SignalSection
    laser: LaserSection
    link: Optional[LinkSection] = None
    cpe: CpeSection
    sim: SimSection
    sweep: Optional[SweepSection] = None


class GridSection(ConfigModels):
    start: float = Field(default=1e-4, gt=0, description="First variance of the log grid")
    stop: float = Field(default=1.0, gt=0, description="Last variance of the log grid")
    points: int = Field(default=41, ge=1, description="Number of grid points")

    @model_validator(mode="after")
    def _ordered(self) -> "GridSection":
        if self.points > 1 and self.stop <= self.start:
            raise ValueError("stop must exceed start")
        return self


class AnalyticSection(ConfigModels):
    orders: list[int] = Field(default=list(SUPPORTED_ORDERS), min_length=1, description="Formats to evaluate")
    bwa_block_size: int = Field(default=15, ge=1, description="N_BWA")
    vv_block_size: int = Field(default=15, description="N_VV")
    sigma2_grid: Optional[list[float]] = Field(default=None, min_length=1, description="Explicit grid")
    grid: Optional[GridSection] = Field(default=None, description="Log grid")

    @field_validator("orders")
    @classmethod
    def _supported(cls, orders: list[int]) -> list[int]:
        for n in orders:
            _check_order(n)
        return orders

    @field_validator("vv_block_size")
    @classmethod
    def _odd_window(cls, block_size: int) -> int:
        if block_size < 3 or block_size % 2 == 0:
            raise ValueError(f"window must be odd ≥ 3, got {block_size}")
        return block_size

    @field_validator("sigma2_grid")
    @classmethod
    def _increasing(cls, grid: Optional[list[float]]) -> Optional[list[float]]:
        if grid is not None:
            if any(value < 0 for value in grid):
                raise ValueError("variances must be nonnegative")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError("grid must be strictly increasing")
        return grid

    @model_validator(mode="after")
    def _one_grid(self) -> "AnalyticSection":
        if self.sigma2_grid is not None and self.grid is not None:
            raise ValueError("give either sigma2_grid or grid, not both")
        return self


class AnalyticDocument(ConfigModels):
    analytic: AnalyticSection = Field(default_factory=AnalyticSection)


class AnalyticConfig(ProcessedModels):
    """Resolved analytic request."""
    orders: list[int] = Field(description="Formats to evaluate")
    bwa_block_size: int = Field(description="N_BWA")
    vv_block_size: int = Field(description="N_VV")
    sigma2_grid: list[float] = Field(description="Strictly increasing total variances")


class SimulationConfig(ProcessedModels):
    """Resolved simulate request.

    Attributes:
        document: Engineering-unit document as read, overrides applied
        scenario: SI scenario
        sigma2_grid: Pure-PN sweep grid, None for a single run
        estimators: Estimators swept at every grid point, None for a single run
    """
    document: dict[str, Any] = Field(description="Engineering-unit document, overrides applied")
    scenario: ScenarioConfig = Field(description="SI scenario")
    sigma2_grid: Optional[list[float]] = Field(default=None, description="Pure-PN sweep grid")
    estimators: Optional[list[CpeConfig]] = Field(default=None, description="Estimators swept per grid point")


def _suggest(document_model: type[ConfigModels], location: tuple[Any, ...]) -> str:
    """Names the closest valid key for an unknown key at location."""
    model: Any = document_model
    for part in location[:-1]:
        annotation = model.model_fields[part].annotation
        model = next(
            (arg for arg in getattr(annotation, "__args__", (annotation,)) if hasattr(arg, "model_fields")),
            annotation,
        )
    name = str(location[-1])
    candidates = list(model.model_fields)
    if KEY_ALIASES.get(name) in candidates:
        return f"unknown key; did you mean '{KEY_ALIASES[name]}'?"
    close = difflib.get_close_matches(name, candidates, n=1)
    return f"unknown key; did you mean '{close[0]}'?" if close else f"unknown key; expected one of {candidates}"


def _issues(error: ValidationError, document_model: type[ConfigModels]) -> list[ConfigIssue]:
    issues = []
    for entry in error.errors():
        location = tuple(entry["loc"])
        key = ".".join(str(part) for part in location) or "<document>"
        if entry["type"] == "extra_forbidden":
            message = _suggest(document_model, location)
        else:
            message = entry["msg"].removeprefix("Value error, ")
        issues.append(ConfigIssue(key=key, message=message))
    return issues


def validate_file(path: Path) -> None:
    """Checks that path names an existing JSON file."""
    file_path = Path(path)

    if not file_path.exists():
        raise ConfigFileNotFoundError(f"Config {file_path} does not exist")

    if not file_path.is_file():
        raise ConfigIsNotAFileError(f"Config {file_path} is not a file")

    if file_path.suffix != ".json":
        raise ConfigIsNotAJSONFileError(f"Config {file_path} is not a JSON file")


def is_manifest(document: dict[str, Any]) -> bool:
    return {"tool_version", "config", "outputs"} <= set(document)


def load_document(path: Path) -> dict[str, Any]:
    """Reads a config document; a run manifest yields its embedded config."""
    validate_file(path)
    try:
        document = orjson.loads(Path(path).read_bytes())
    except orjson.JSONDecodeError as e:
        raise ConfigIsNotValidError(path, [ConfigIssue(key="<document>", message=f"not valid JSON: {e}")])
    if not isinstance(document, dict):
        raise ConfigIsNotValidError(path, [ConfigIssue(key="<document>", message="expected a JSON object")])

    if is_manifest(document):
        logger.info("reading the config embedded in manifest %s", path)
        document = document["config"]
    return document


def _cpe_config(section: CpeSection, algorithm: Algorithm) -> CpeConfig:
    return CpeConfig.for_algorithm(
        algorithm,
        block_size=section.block_size,
        mu=section.mu,
        mode=section.mode,
        training_length=section.training_length,
    )


def resolve_scenario(document: ScenarioDocument) -> ScenarioConfig:
    """Converts engineering units to SI and assembles the scenario."""
    link = (
        LinkConfig.from_engineering_units(
            document.link.dispersion_ps_nm_km, document.link.length_km, document.link.wavelength_nm
        )
        if document.link is not None
        else None
    )
    return ScenarioConfig(
        format=ModulationFormat(order=document.modulation.n),
        lasers=LaserConfig(
            delta_f_tx=document.laser.delta_f_tx_khz * KHZ,
            delta_f_lo=document.laser.delta_f_lo_khz * KHZ,
        ),
        link=link,
        symbol_rate=document.signal.symbol_rate_gbaud * GBAUD,
        snr_db=None if document.sim.snr_db == "off" else document.sim.snr_db,
        cpe=_cpe_config(document.cpe, document.cpe.algorithm),
        num_symbols=document.sim.num_symbols,
        num_trials=document.sim.num_trials,
        base_seed=document.sim.seed,
    )


def parse_simulation(path: Path, seed: Optional[int] = None) -> SimulationConfig:
    """Parses a scenario config, applying an optional seed override.

    Raises:
        ConfigValidationError: With one issue per violated key
    """
    raw = load_document(path)
    if seed is not None:
        raw = {**raw, "sim": {**raw.get("sim", {}), "seed": seed}}

    try:
        document = ScenarioDocument.model_validate(raw)
    except ValidationError as e:
        raise ConfigIsNotValidError(path, _issues(e, ScenarioDocument))
    try:
        scenario = resolve_scenario(document)
    except ValidationError as e:
        # the only cross-field check left is the symbol count
        raise ConfigIsNotValidError(
            path, [ConfigIssue(key="sim.num_symbols", message=entry["msg"].removeprefix("Value error, ")) for entry in e.errors()]
        )

    grid = document.sweep.sigma2_grid if document.sweep is not None else None
    estimators = None
    if document.sweep is not None and document.sweep.algorithms is not None:
        estimators = []
        issues = []
        for algorithm in document.sweep.algorithms:
            try:
                cpe = _cpe_config(document.cpe, algorithm)
                ScenarioConfig(**{**dict(scenario), "cpe": cpe})
                estimators.append(cpe)
            except ValidationError as e:
                issues.extend(
                    ConfigIssue(key="sweep.algorithms", message=f"{algorithm}: {entry['msg'].removeprefix('Value error, ')}")
                    for entry in e.errors()
                )
        if issues:
            raise ConfigIsNotValidError(path, issues)
    return SimulationConfig(document=raw, scenario=scenario, sigma2_grid=grid, estimators=estimators)


def parse_config(path: Path) -> ScenarioConfig:
    """Parses a scenario config (or a run manifest) into an SI ScenarioConfig."""
    return parse_simulation(path).scenario


def parse_analytic(path: Optional[Path]) -> AnalyticConfig:
    """Parses an analytic config; None gives the defaults."""
    raw = load_document(path) if path is not None else {}
    try:
        section = AnalyticDocument.model_validate(raw).analytic
    except ValidationError as e:
        raise ConfigIsNotValidError(path or Path("<defaults>"), _issues(e, AnalyticDocument))

    if section.sigma2_grid is not None:
        grid = section.sigma2_grid
    else:
        log_grid = section.grid or GridSection()
        grid = np.logspace(np.log10(log_grid.start), np.log10(log_grid.stop), log_grid.points).tolist()
    return AnalyticConfig(
        orders=section.orders,
        bwa_block_size=section.bwa_block_size,
        vv_block_size=section.vv_block_size,
        sigma2_grid=grid,
    )
