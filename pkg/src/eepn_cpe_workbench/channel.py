"""Laser phase noise, chromatic dispersion with electronic compensation, and AWGN.

The stages reproduce EEPN physically: the Tx phase noise passes through the
fibre dispersion and its compensator (a net pure rotation), while the LO phase
noise only passes through the compensator.
"""
from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from pydantic import Field

from eepn_cpe_workbench.models import (
    ArrayModels,
    ChannelOutput,
    ChannelSeeds,
    LaserConfig,
    LinkConfig,
    SampleStream,
    SymbolStream,
    VarianceBreakdown,
)
from eepn_cpe_workbench.utils.seeds import make_generator

logger = logging.getLogger(__name__)

MIN_FFT_SIZE = 64


class FrequencyResponse(ArrayModels):
    """All-pass response sampled on an FFT grid.

    Attributes:
        values: H(f) in numpy FFT order
        delay_spread: Dispersion-induced delay spread in symbols
    """
    values: np.ndarray = Field(description="H(f) in numpy FFT order")
    delay_spread: float = Field(default=0.0, ge=0, description="Delay spread in symbols")

    def conjugate(self) -> "FrequencyResponse":
        """The compensating response."""
        return FrequencyResponse(values=np.conj(self.values), delay_spread=self.delay_spread)

    def __len__(self) -> int:
        return int(self.values.shape[0])


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


def gen_wiener_phase(length: int, variance_per_symbol: float, seed: int) -> np.ndarray:
    """Wiener phase process with phi(0) = 0 and Gaussian increments.

    Args:
        length: Number of symbols
        variance_per_symbol: Increment variance in rad^2
        seed: 64-bit seed

    Returns:
        Phase per symbol in rad

    Raises:
        ValueError: If the variance is negative
    """
    if variance_per_symbol < 0:
        raise ValueError(f"negative variance {variance_per_symbol}")
    if length <= 0:
        return np.zeros(0)

    steps = make_generator(seed).standard_normal(length - 1) * math.sqrt(variance_per_symbol)
    return np.concatenate(([0.0], np.cumsum(steps)))


def dispersion_guard(link: Optional[LinkConfig], symbol_rate: float) -> int:
    """Dispersion delay spread D*lambda^2*L*R_S^2/c, rounded up to whole symbols."""
    if link is None:
        return 0
    return int(math.ceil(link.dispersion_product * symbol_rate**2))


def cd_response(link: LinkConfig, symbol_rate: float, fft_size: int) -> FrequencyResponse:
    """Chromatic-dispersion response exp(j*pi*(D*lambda^2/c)*L*f^2) on an FFT grid.

    Raises:
        ValueError: If fft_size is not a power of two >= 64
    """
    if fft_size < MIN_FFT_SIZE or not _is_power_of_two(fft_size):
        raise ValueError(f"fft_size must be a power of two >= {MIN_FFT_SIZE}, got {fft_size}")

    frequencies = np.fft.fftfreq(fft_size, d=1.0 / symbol_rate)
    values = np.exp(1j * np.pi * link.dispersion_product * frequencies**2)
    return FrequencyResponse(
        values=values, delay_spread=link.dispersion_product * symbol_rate**2
    )


def apply_response(stream: SampleStream, response: FrequencyResponse) -> SampleStream:
    """Circular convolution of the whole frame with the response.

    The frame is one period of a periodic signal; callers guard the edges by
    cyclic extension (see emulate_channel).

    Raises:
        ValueError: If the stream is empty, its length differs from the
            response grid, or the delay spread does not fit in the frame
    """
    length = len(stream)
    if length == 0:
        raise ValueError("cannot filter an empty stream")
    if length != len(response):
        raise ValueError(f"length mismatch: stream has {length} samples, response {len(response)}")
    if response.delay_spread > length:
        raise ValueError(
            f"guard mismatch: delay spread {response.delay_spread:.1f} symbols exceeds the {length}-sample frame"
        )

    return stream.with_values(np.fft.ifft(np.fft.fft(stream.values) * response.values))


def add_awgn(stream: SampleStream, snr_per_symbol_db: Optional[float], seed: int) -> SampleStream:
    """Adds circular complex Gaussian noise; None switches the noise off."""
    if snr_per_symbol_db is None:
        return stream

    signal_power = float(np.mean(np.abs(stream.values) ** 2))
    noise_variance = signal_power / 10 ** (snr_per_symbol_db / 10)
    noise = make_generator(seed).standard_normal((2, len(stream)))
    noise = math.sqrt(noise_variance / 2) * (noise[0] + 1j * noise[1])
    return stream.with_values(stream.values + noise)


def emulate_channel(
    tx: SymbolStream,
    lasers: LaserConfig,
    link: Optional[LinkConfig],
    snr_db: Optional[float],
    seeds: ChannelSeeds,
) -> ChannelOutput:
    """Runs Tx phase noise -> CD -> LO phase noise -> AWGN -> EDC.

    With a link the symbols are cyclically extended by at least the dispersion
    guard on both sides, up to a power-of-two frame, and trimmed afterwards.
    Without a link the CD and EDC stages are skipped.

    Args:
        tx: Transmitted symbols
        lasers: Tx and LO linewidths
        link: Fibre link, or None for back-to-back
        snr_db: Per-symbol SNR in dB, or None for no AWGN
        seeds: Seeds of the noise streams

    Returns:
        The received samples with the realised phase traces of the kept symbols
    """
    length = len(tx)
    rate = 1.0 / tx.symbol_period
    tx_variance = 2 * np.pi * lasers.delta_f_tx * tx.symbol_period
    lo_variance = 2 * np.pi * lasers.delta_f_lo * tx.symbol_period

    guard = dispersion_guard(link, rate)
    if link is None:
        frame, lead = length, 0
    else:
        frame = max(MIN_FFT_SIZE, 1 << math.ceil(math.log2(length + 2 * guard)))
        lead = (frame - length) // 2
    logger.debug("channel frame %d symbols, guard %d, lead %d", frame, guard, lead)

    extended = tx.with_values(tx.values[np.arange(-lead, frame - lead) % length])
    tx_phase = gen_wiener_phase(frame, tx_variance, seeds.tx_pn_seed)
    lo_phase = gen_wiener_phase(frame, lo_variance, seeds.lo_pn_seed)

    signal = extended.with_values(extended.values * np.exp(1j * tx_phase))
    if link is not None:
        dispersion = cd_response(link, rate, frame)
        signal = apply_response(signal, dispersion)
    signal = signal.with_values(signal.values * np.exp(1j * lo_phase))
    signal = add_awgn(signal, snr_db, seeds.awgn_seed)
    if link is not None:
        signal = apply_response(signal, dispersion.conjugate())

    kept = slice(lead, lead + length)
    return ChannelOutput(
        samples=signal.with_values(signal.values[kept]),
        tx_phase=tx_phase[kept],
        lo_phase=lo_phase[kept],
    )


def measure_phase_noise(output: ChannelOutput, tx: SymbolStream) -> VarianceBreakdown:
    """Monte-Carlo counterpart of the analytic variance breakdown.

    The laser part is the mean squared increment of the realised Tx+LO phase;
    the EEPN part is the mean squared excess of the received sample over the
    transmitted symbol rotated by the instantaneous laser phase.
    """
    laser_phase = output.tx_phase + output.lo_phase
    sigma2_tx_lo = float(np.mean(np.diff(laser_phase) ** 2))

    derotated = output.samples.values * np.conj(tx.values) * np.exp(-1j * laser_phase)
    sigma2_eepn = float(np.mean(np.abs(derotated - 1) ** 2))
    return VarianceBreakdown(
        sigma2_tx_lo=sigma2_tx_lo,
        sigma2_eepn=sigma2_eepn,
        sigma2_total=sigma2_tx_lo + sigma2_eepn,
    )
