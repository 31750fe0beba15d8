import math
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import orjson
import pytest

from eepn_cpe_workbench.models import (
    CpeConfig,
    LaserConfig,
    LinkConfig,
    ModulationFormat,
    ScenarioConfig,
    SymbolStream,
)
from eepn_cpe_workbench.modulation import build_constellation

SYMBOL_RATE = 28e9


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixture providing a fixed-seed generator for test inputs."""
    return np.random.default_rng(20240607)


@pytest.fixture
def qpsk() -> ModulationFormat:
    return ModulationFormat(order=4)


@pytest.fixture
def long_haul_link() -> LinkConfig:
    """2000 km of standard fibre at 1553 nm."""
    return LinkConfig.from_engineering_units(17.0, 2000.0, 1553.0)


@pytest.fixture
def random_symbols(rng: np.random.Generator) -> Callable[[int, int], SymbolStream]:
    """Fixture building streams of random n-PSK points at 28 GBaud."""
    def build(order: int, length: int) -> SymbolStream:
        points = build_constellation(order).points
        return SymbolStream(values=points[rng.integers(0, order, length)], symbol_period=1 / SYMBOL_RATE)

    return build


@pytest.fixture
def make_scenario() -> Callable[..., ScenarioConfig]:
    """Fixture building pure phase-noise scenarios (single Wiener process, no link, no AWGN)."""
    def build(
        algorithm: str = "vv",
        sigma2: float = 0.0,
        num_symbols: int = 20_000,
        num_trials: int = 1,
        order: int = 4,
        block_size: int = 15,
        mu: float = 0.1,
        base_seed: int = 11,
        symbol_rate: float = SYMBOL_RATE,
        link: Optional[LinkConfig] = None,
    ) -> ScenarioConfig:
        return ScenarioConfig(
            format=ModulationFormat(order=order),
            lasers=LaserConfig(delta_f_tx=sigma2 * symbol_rate / (2 * math.pi), delta_f_lo=0.0),
            link=link,
            symbol_rate=symbol_rate,
            snr_db=None,
            cpe=CpeConfig.for_algorithm(algorithm, block_size=block_size, mu=mu),  # type: ignore[arg-type]
            num_symbols=num_symbols,
            num_trials=num_trials,
            base_seed=base_seed,
        )

    return build


@pytest.fixture
def scenario_document() -> dict[str, Any]:
    """Fixture providing a minimal valid scenario config document."""
    return {
        "modulation": {"n": 4},
        "signal": {"symbol_rate_gbaud": 28},
        "laser": {"delta_f_tx_khz": 100, "delta_f_lo_khz": 100},
        "link": {"dispersion_ps_nm_km": 17, "length_km": 2000, "wavelength_nm": 1553},
        "cpe": {"algorithm": "vv", "block_size": 15},
        "sim": {"num_symbols": 5000, "num_trials": 2, "seed": 42, "snr_db": "off"},
    }


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[dict[str, Any], str], Path]:
    """Fixture writing a config document to a JSON file under tmp_path."""
    def write(document: dict[str, Any], name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_bytes(orjson.dumps(document))
        return path

    return write
