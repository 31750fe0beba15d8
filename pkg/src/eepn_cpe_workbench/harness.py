"""Seeded Monte-Carlo BER experiments: bits -> channel -> CPE -> decoding -> counts."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from eepn_cpe_workbench.analytic import ber_floor, total_variance
from eepn_cpe_workbench.channel import emulate_channel
from eepn_cpe_workbench.cpe import run_cpe
from eepn_cpe_workbench.models import (
    BerResult,
    ChannelSeeds,
    CpeConfig,
    LaserConfig,
    ResultRow,
    ScenarioConfig,
)
from eepn_cpe_workbench.modulation import differential_decode, differential_encode
from eepn_cpe_workbench.utils.seeds import (
    AWGN_STREAM,
    BITS_STREAM,
    LO_PN_STREAM,
    TX_PN_STREAM,
    derive_seed,
    make_generator,
)

logger = logging.getLogger(__name__)


def count_bit_errors(tx_bits: np.ndarray, rx_bits: np.ndarray) -> tuple[int, int]:
    """Hamming distance and length of two equally long bit sequences.

    Raises:
        ValueError: On a length mismatch
    """
    tx_bits = np.asarray(tx_bits)
    rx_bits = np.asarray(rx_bits)
    if tx_bits.shape != rx_bits.shape:
        raise ValueError(f"length mismatch: {tx_bits.size} transmitted vs {rx_bits.size} received bits")
    return int(np.count_nonzero(tx_bits != rx_bits)), int(tx_bits.size)


def wilson_interval(errors: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval of a binomial proportion; (0, 1) for an empty sample."""
    if total == 0:
        return 0.0, 1.0

    z = float(stats.norm.ppf(0.5 + confidence / 2))
    ratio = errors / total
    denominator = 1 + z**2 / total
    centre = (ratio + z**2 / (2 * total)) / denominator
    half_width = z * math.sqrt(ratio * (1 - ratio) / total + z**2 / (4 * total**2)) / denominator
    return min(max(0.0, centre - half_width), ratio), max(min(1.0, centre + half_width), ratio)


def analytic_floor(scenario: ScenarioConfig) -> float:
    """Closed-form floor for the scenario's total variance and estimator."""
    sigma2 = total_variance(scenario.lasers, scenario.link, scenario.symbol_period).sigma2_total
    return float(
        ber_floor(scenario.cpe.algorithm, scenario.format.order, sigma2, scenario.cpe.block_size or 15)
    )


def trial_seed(scenario: ScenarioConfig, trial_index: int) -> int:
    return derive_seed(scenario.base_seed, trial_index)


def _make_result(
    scenario: ScenarioConfig, errors: int, bits: int, seed: int, floor: Optional[float] = None
) -> BerResult:
    ci_low, ci_high = wilson_interval(errors, bits)
    return BerResult(
        bit_errors=errors,
        bits_counted=bits,
        ber=errors / bits if bits else 0.0,
        ci_low=ci_low,
        ci_high=ci_high,
        analytic_floor=analytic_floor(scenario) if floor is None else floor,
        scenario=scenario,
        seed=seed,
    )


def run_trial(scenario: ScenarioConfig, trial_index: int) -> BerResult:
    """One Monte-Carlo trial; a pure function of (scenario, trial_index).

    The differential reference symbol and the NLMS training symbols are not
    counted.
    """
    seed = trial_seed(scenario, trial_index)
    format = scenario.format
    logger.info("trial %d (seed %d): %d symbols", trial_index, seed, scenario.num_symbols)

    generator = make_generator(derive_seed(seed, BITS_STREAM))
    bits = generator.integers(0, 2, size=(scenario.num_symbols - 1) * format.bits_per_symbol, dtype=np.uint8)
    tx = differential_encode(bits, format, scenario.symbol_period)

    seeds = ChannelSeeds(
        tx_pn_seed=derive_seed(seed, TX_PN_STREAM),
        lo_pn_seed=derive_seed(seed, LO_PN_STREAM),
        awgn_seed=derive_seed(seed, AWGN_STREAM),
    )
    received = emulate_channel(tx, scenario.lasers, scenario.link, scenario.snr_db, seeds)
    corrected = run_cpe(received.samples, format, scenario.cpe, reference=tx.values).corrected
    rx_bits = differential_decode(corrected, format)

    skip = scenario.cpe.training_length * format.bits_per_symbol
    errors, counted = count_bit_errors(bits[skip:], rx_bits[skip:])
    logger.debug("trial %d: %d errors in %d bits", trial_index, errors, counted)
    return _make_result(scenario, errors, counted, seed)


def run_scenario(scenario: ScenarioConfig, threads: int = 1) -> BerResult:
    """Pools num_trials independent trials into one result.

    With threads > 1 the trials run in a process pool; pooling is an integer
    sum over trials in index order, so the result does not depend on threads.
    """
    indices = range(scenario.num_trials)
    if threads > 1 and scenario.num_trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            trials = list(executor.map(partial(run_trial, scenario), indices))
    else:
        trials = [run_trial(scenario, index) for index in indices]

    if len(trials) == 1:
        pooled = trials[0]
    else:
        pooled = _make_result(
            scenario,
            sum(trial.bit_errors for trial in trials),
            sum(trial.bits_counted for trial in trials),
            scenario.base_seed,
            trials[0].analytic_floor,
        )
    if not pooled.reliable:
        logger.warning(
            "unreliable estimate: %d errors in %d bits (n=%d, %s)",
            pooled.bit_errors,
            pooled.bits_counted,
            scenario.format.order,
            scenario.cpe.algorithm,
        )
    return pooled


def _replace(scenario: ScenarioConfig, **changes: Any) -> ScenarioConfig:
    # rebuilt rather than model_copy'd so the cross-field checks run again
    return ScenarioConfig(**{**dict(scenario), **changes})


def pure_pn_scenario(scenario: ScenarioConfig, sigma2_total: float) -> ScenarioConfig:
    """Same scenario with a single Wiener process of the given per-symbol variance.

    The variance is put on the Tx laser and the link is removed, so no EEPN
    arises and the total variance is exactly sigma2_total.
    """
    lasers = LaserConfig(delta_f_tx=sigma2_total / (2 * math.pi * scenario.symbol_period), delta_f_lo=0.0)
    return _replace(scenario, lasers=lasers, link=None)


def to_row(result: BerResult, sigma2_total: Optional[float] = None) -> ResultRow:
    scenario = result.scenario
    if sigma2_total is None:
        sigma2_total = total_variance(scenario.lasers, scenario.link, scenario.symbol_period).sigma2_total
    return ResultRow(
        sigma2_total=sigma2_total,
        n=scenario.format.order,
        algorithm=scenario.cpe.algorithm,
        block_size=scenario.cpe.block_size,
        mu=scenario.cpe.mu,
        ber_floor_analytic=result.analytic_floor,
        ber_mc=result.ber,
        ci_low=result.ci_low,
        ci_high=result.ci_high,
        num_symbols=scenario.num_symbols,
        seed=scenario.base_seed,
    )


def sweep_results(
    scenario: ScenarioConfig,
    sigma2_grid: Sequence[float],
    estimators: Optional[Sequence[CpeConfig]] = None,
    threads: int = 1,
) -> list[tuple[float, BerResult]]:
    """Pure-PN sweep over total variance, one result per (grid point, estimator).

    Raises:
        ValueError: If the grid is empty
    """
    if len(sigma2_grid) == 0:
        raise ValueError("sigma2 grid is empty")
    estimators = list(estimators) if estimators else [scenario.cpe]

    results = []
    for sigma2 in sigma2_grid:
        for cpe in estimators:
            point = _replace(pure_pn_scenario(scenario, float(sigma2)), cpe=cpe)
            logger.info("sweep point sigma2=%g, %s", sigma2, cpe.algorithm)
            results.append((float(sigma2), run_scenario(point, threads)))
    return results


def sweep(
    scenario: ScenarioConfig,
    sigma2_grid: Sequence[float],
    estimators: Optional[Sequence[CpeConfig]] = None,
    threads: int = 1,
) -> list[ResultRow]:
    """CSV rows of sweep_results."""
    return [to_row(result, sigma2) for sigma2, result in sweep_results(scenario, sigma2_grid, estimators, threads)]
