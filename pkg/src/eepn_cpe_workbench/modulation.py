"""n-PSK constellations, Gray mapping, differential coding and hard decisions."""
from __future__ import annotations

import logging
from typing import Union

import numpy as np

from eepn_cpe_workbench.models import (
    Constellation,
    ModulationFormat,
    SampleStream,
    SymbolStream,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def gray_code(index: np.ndarray) -> np.ndarray:
    """Reflected binary code of each index."""
    return index ^ (index >> 1)


def build_constellation(format: Union[ModulationFormat, int]) -> Constellation:
    """Builds the unit-circle n-PSK constellation with offset 0 and Gray labels.

    Args:
        format: Modulation format, or its order n

    Returns:
        A constellation whose point i sits at phase 2*pi*i/n and carries gray(i)

    Raises:
        ValueError: If the order is unsupported
    """
    if not isinstance(format, ModulationFormat):
        format = ModulationFormat(order=format)

    index = np.arange(format.order)
    points = np.exp(1j * TWO_PI * index / format.order)
    return Constellation(format=format, points=points, gray_labels=gray_code(index))


def _inverse_gray_table(order: int) -> np.ndarray:
    table = np.empty(order, dtype=np.int64)
    table[gray_code(np.arange(order))] = np.arange(order)
    return table


def _bits_to_groups(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return bits.reshape(-1, bits_per_symbol) @ weights


def _groups_to_bits(groups: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((groups[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def differential_encode(
    bits: np.ndarray, format: ModulationFormat, symbol_period: float = 1.0
) -> SymbolStream:
    """Maps bits onto phase increments of a differentially encoded n-PSK stream.

    Each group of log2(n) bits (MSB first) is a Gray label; the point index
    carrying that label is the phase increment in units of 2*pi/n. A reference
    symbol at phase 0 is prepended.

    Args:
        bits: 0/1 values, length divisible by log2(n)
        format: Modulation format
        symbol_period: T_S of the produced stream in seconds

    Returns:
        len(bits)/log2(n) + 1 constellation points

    Raises:
        ValueError: If the bit count is not divisible by log2(n)
    """
    bits = np.asarray(bits, dtype=np.int64)
    b = format.bits_per_symbol
    if bits.size % b:
        raise ValueError(f"bit count {bits.size} is not divisible by log2(n) = {b}")

    increments = _inverse_gray_table(format.order)[_bits_to_groups(bits, b)]
    indices = np.concatenate(([0], np.cumsum(increments) % format.order))
    values = build_constellation(format).points[indices]
    return SymbolStream(values=values, symbol_period=symbol_period)


def decide_indices(samples: np.ndarray, order: int) -> np.ndarray:
    """Vectorised nearest-angle decision against the offset-0 n-PSK points.

    Exact ties go to the lower point index. Zero samples decide to index 0.
    """
    position = np.mod(np.angle(samples), TWO_PI) * order / TWO_PI
    lower = np.floor(position)
    fraction = position - lower
    lower_index = lower.astype(np.int64) % order
    upper_index = (lower_index + 1) % order

    indices = np.where(fraction > 0.5, upper_index, lower_index)
    return np.where(fraction == 0.5, np.minimum(lower_index, upper_index), indices)


def hard_decision(sample: complex, constellation: Constellation) -> int:
    """Index of the point with the smallest angular distance to the sample.

    Raises:
        ValueError: If the sample has zero magnitude
    """
    if sample == 0:
        raise ValueError("cannot decide a zero-magnitude sample")

    distances = np.abs(np.angle(sample * np.conj(constellation.points)))
    # argmin keeps the first minimum, so exact ties resolve to the lower index
    return int(np.argmin(distances))


def differential_decode(stream: SampleStream, format: ModulationFormat) -> np.ndarray:
    """Recovers the bits from consecutive phase differences.

    Raises:
        ValueError: If the stream holds fewer than 2 samples
    """
    values = stream.values
    if values.shape[0] < 2:
        raise ValueError(f"differential decoding needs at least 2 samples, got {values.shape[0]}")

    increments = decide_indices(values[1:] * np.conj(values[:-1]), format.order)
    return _groups_to_bits(gray_code(increments), format.bits_per_symbol)
