"""Carrier phase estimators: one-tap NLMS, block-wise average and Viterbi-Viterbi."""
from __future__ import annotations

import logging
import math
from typing import Optional, Union

import numpy as np
from numba import njit

from eepn_cpe_workbench.models import (
    BwaConfig,
    Constellation,
    CpeConfig,
    CpeOutput,
    ModulationFormat,
    NlmsConfig,
    PhaseEstimateSeries,
    SampleStream,
    VvConfig,
)
from eepn_cpe_workbench.modulation import build_constellation

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _nlms_kernel(x, training, points, mu):  # type: ignore[no-untyped-def]
    length = x.shape[0]
    order = points.shape[0]
    step = 2.0 * math.pi / order

    outputs = np.empty(length, dtype=np.complex128)
    taps = np.empty(length + 1, dtype=np.complex128)
    skipped = np.zeros(length, dtype=np.bool_)
    taps[0] = 1.0 + 0.0j

    for k in range(length):
        y = taps[k] * x[k]
        outputs[k] = y

        if k < training.shape[0]:
            d = training[k]
        else:
            position = (math.atan2(y.imag, y.real) % (2.0 * math.pi)) / step
            lower = math.floor(position)
            index = int(lower) % order
            fraction = position - lower
            if fraction > 0.5:
                index = (index + 1) % order
            elif fraction == 0.5:
                # exact ties go to the lower point index, as in decide_indices
                index = min(index, (index + 1) % order)
            d = points[index]

        power = x[k].real * x[k].real + x[k].imag * x[k].imag
        if power == 0.0:
            skipped[k] = True
            taps[k + 1] = taps[k]
            continue

        taps[k + 1] = taps[k] + mu * (d - y) * x[k].conjugate() / power

    return outputs, taps, skipped


def _nth_power(values: np.ndarray, order: int) -> np.ndarray:
    # repeated squaring keeps x^n exactly proportional under power-of-two scaling
    powers = np.asarray(values, dtype=np.complex128)
    for _ in range(int(math.log2(order))):
        powers = powers * powers
    return powers


def _carry_forward(raw: np.ndarray, flagged: np.ndarray) -> np.ndarray:
    """Replaces flagged entries with the last unflagged one.

    A flagged first entry holds arg(0)/n = 0, so leading flags carry 0.
    """
    if not flagged.any():
        return raw
    source = np.maximum.accumulate(np.where(flagged, 0, np.arange(raw.shape[0])))
    return raw[source]


def unwrap_phase(
    raw: np.ndarray,
    format: ModulationFormat,
    flagged: Optional[np.ndarray] = None,
) -> PhaseEstimateSeries:
    """Resolves the n-fold ambiguity of (1/n)*arg estimates.

    Each estimate moves by the multiple of 2*pi/n that brings it closest to its
    predecessor; the first estimate is kept as is.

    Args:
        raw: Raw estimates, each defined modulo 2*pi/n
        format: Modulation format
        flagged: Optional mask of estimates carried from a degenerate sum

    Returns:
        The unwrapped series with its integer offsets

    Raises:
        ValueError: If raw is empty
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("cannot unwrap an empty estimate sequence")

    period = TWO_PI / format.order
    estimates = np.unwrap(raw, period=period)
    offsets = np.rint((estimates - raw) / period).astype(np.int64)
    if flagged is None:
        flagged = np.zeros(raw.shape[0], dtype=bool)
    return PhaseEstimateSeries(estimates=estimates, offsets=offsets, flagged=flagged)


def nlms_cpe(
    stream: SampleStream,
    constellation: Constellation,
    config: NlmsConfig,
    reference: Optional[np.ndarray] = None,
) -> CpeOutput:
    """One-tap NLMS tracking: y = w*x, e = d - y, w += mu*e*conj(x)/|x|^2.

    In training mode d is the known transmitted symbol for the first
    training_length symbols and the nearest constellation point of y after.
    Zero-magnitude samples leave the tap unchanged and are reported in skipped.

    Args:
        stream: Received samples
        constellation: Decision constellation
        config: Step size and training settings
        reference: Transmitted symbols, required in training mode

    Returns:
        Corrected samples y, the tap trajectory w(0)..w(len) and per-symbol
        phase estimates -arg(w)

    Raises:
        ValueError: If the stream is empty or training symbols are missing
    """
    if len(stream) == 0:
        raise ValueError("cannot track an empty stream")

    training_length = min(config.effective_training, len(stream))
    if training_length and (reference is None or len(reference) < training_length):
        raise ValueError(f"training mode needs {training_length} known symbols")
    training = (
        np.ascontiguousarray(reference[:training_length], dtype=np.complex128)
        if training_length and reference is not None
        else np.zeros(0, dtype=np.complex128)
    )

    outputs, taps, skipped = _nlms_kernel(
        np.ascontiguousarray(stream.values, dtype=np.complex128),
        training,
        np.ascontiguousarray(constellation.points, dtype=np.complex128),
        float(config.mu),
    )
    if skipped.any():
        logger.warning("NLMS skipped %d zero-magnitude samples", int(skipped.sum()))

    return CpeOutput(
        corrected=stream.with_values(outputs),
        estimates=PhaseEstimateSeries(
            estimates=np.unwrap(-np.angle(taps[:-1])),
            offsets=np.zeros(len(stream), dtype=np.int64),
            flagged=skipped,
        ),
        taps=taps,
        skipped=skipped,
    )


def _derotate(stream: SampleStream, series: PhaseEstimateSeries) -> CpeOutput:
    return CpeOutput(
        corrected=stream.with_values(stream.values * np.exp(-1j * series.estimates)),
        estimates=series,
    )


def bwa_cpe(stream: SampleStream, format: ModulationFormat, config: BwaConfig) -> CpeOutput:
    """Block-wise average: one (1/n)*arg(sum x^n) estimate per block of N symbols.

    Symbol k belongs to block k // N; a trailing partial block gets its own
    estimate. Blocks whose sum is exactly zero carry the previous estimate.

    Raises:
        ValueError: If the stream is shorter than the block
    """
    size = config.block_size
    if len(stream) < size:
        raise ValueError(f"stream of {len(stream)} symbols is shorter than the block size {size}")

    sums = np.add.reduceat(_nth_power(stream.values, format.order), np.arange(0, len(stream), size))
    degenerate = sums == 0
    if degenerate.any():
        logger.warning("BWA: %d blocks with a zero n-th power sum", int(degenerate.sum()))

    raw = _carry_forward(np.angle(sums) / format.order, degenerate)
    blocks = unwrap_phase(raw, format, degenerate)

    def per_symbol(values: np.ndarray) -> np.ndarray:
        return np.repeat(values, size)[: len(stream)]

    series = PhaseEstimateSeries(
        estimates=per_symbol(blocks.estimates),
        offsets=per_symbol(blocks.offsets),
        flagged=per_symbol(blocks.flagged),
    )
    return _derotate(stream, series)


def vv_cpe(stream: SampleStream, format: ModulationFormat, config: VvConfig) -> CpeOutput:
    """Viterbi-Viterbi: symmetric sliding window of N symbols around each k.

    The window is truncated to the available samples at both stream edges.

    Raises:
        ValueError: If the stream is shorter than the window
    """
    size = config.block_size
    if len(stream) < size:
        raise ValueError(f"stream of {len(stream)} symbols is shorter than the window {size}")

    half = (size - 1) // 2
    powers = _nth_power(stream.values, format.order)
    sums = np.convolve(powers, np.ones(size), mode="full")[half : half + len(stream)]
    degenerate = sums == 0
    if degenerate.any():
        logger.warning("VV: %d windows with a zero n-th power sum", int(degenerate.sum()))

    raw = _carry_forward(np.angle(sums) / format.order, degenerate)
    return _derotate(stream, unwrap_phase(raw, format, degenerate))


def run_cpe(
    stream: SampleStream,
    format: Union[ModulationFormat, int],
    config: CpeConfig,
    reference: Optional[np.ndarray] = None,
) -> CpeOutput:
    """Dispatches to the estimator selected by config.algorithm."""
    if not isinstance(format, ModulationFormat):
        format = ModulationFormat(order=format)

    logger.debug("running %s CPE on %d samples", config.algorithm, len(stream))
    if config.algorithm == "nlms":
        return nlms_cpe(stream, build_constellation(format), config.nlms, reference)
    if config.algorithm == "bwa":
        return bwa_cpe(stream, format, config.bwa)
    return vv_cpe(stream, format, config.vv)
