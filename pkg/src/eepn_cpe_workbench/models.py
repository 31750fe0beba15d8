from __future__ import annotations

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SUPPORTED_ORDERS: tuple[int, ...] = (4, 8, 16, 32, 64)
SPEED_OF_LIGHT = 2.99792458e8

# Interface units -> SI, applied once when a config is resolved.
PS_PER_NM_KM = 1e-6
KM = 1e3
NM = 1e-9
KHZ = 1e3
GBAUD = 1e9

Algorithm = Literal["nlms", "bwa", "vv"]
ALGORITHMS: tuple[Algorithm, ...] = ("nlms", "bwa", "vv")

# Sweep points with fewer errors are reported as unreliable.
MIN_RELIABLE_ERRORS = 25

# Floors outside this range are not drawn.
VISIBLE_FLOOR_LOW = 1e-6
VISIBLE_FLOOR_HIGH = 0.5


class DataModel(BaseModel):
    ...


class ProcessedModels(DataModel):
    """Base class for immutable derived values."""
    model_config = ConfigDict(frozen=True)


class ConfigModels(DataModel):
    """Base class for immutable configuration; unknown fields are rejected."""
    model_config = ConfigDict(frozen=True, extra="forbid")


class ArrayModels(DataModel):
    """Base class for immutable models carrying numpy arrays."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class ModulationFormat(ConfigModels):
    """An n-PSK modulation format.

    Attributes:
        order: Constellation size n
    """
    order: int = Field(description="Constellation size n")

    @field_validator("order")
    @classmethod
    def _supported(cls, order: int) -> int:
        if order not in SUPPORTED_ORDERS:
            raise ValueError(
                f"unsupported order {order}: expected a power of two in {list(SUPPORTED_ORDERS)}"
            )
        return order

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @property
    def label(self) -> str:
        return "qpsk" if self.order == 4 else f"{self.order}psk"


class Constellation(ArrayModels):
    """Unit-circle n-PSK constellation with Gray labels.

    Attributes:
        format: Modulation format the points belong to
        points: Complex points at phases 2*pi*i/n, i = 0..n-1
        gray_labels: Gray label (as an integer bit pattern) of every point
    """
    format: ModulationFormat = Field(description="Modulation format the points belong to")
    points: np.ndarray = Field(description="Complex points at phases 2*pi*i/n, i = 0..n-1")
    gray_labels: np.ndarray = Field(description="Gray label of every point as an integer bit pattern")

    @property
    def order(self) -> int:
        return self.format.order


class SampleStream(ArrayModels):
    """Ordered complex baseband samples, one per symbol.

    Attributes:
        values: Complex samples indexed by symbol k
        symbol_period: Symbol period T_S in seconds
    """
    values: np.ndarray = Field(description="Complex samples indexed by symbol k")
    symbol_period: float = Field(gt=0, description="Symbol period T_S in seconds")

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def with_values(self, values: np.ndarray) -> "SampleStream":
        return SampleStream(values=values, symbol_period=self.symbol_period)


class SymbolStream(SampleStream):
    """A SampleStream whose values are exact constellation points."""


class LaserConfig(ConfigModels):
    """Tx and LO laser 3-dB linewidths in Hz."""
    delta_f_tx: float = Field(ge=0, description="Tx laser 3-dB linewidth in Hz")
    delta_f_lo: float = Field(ge=0, description="LO laser 3-dB linewidth in Hz")


class LinkConfig(ConfigModels):
    """Fibre link in SI units.

    Attributes:
        dispersion: CD coefficient D in s/m^2
        length: Fibre length L in m
        wavelength: Carrier wavelength in m
    """
    dispersion: float = Field(ge=0, description="CD coefficient D in s/m^2")
    length: float = Field(ge=0, description="Fibre length L in m")
    wavelength: float = Field(gt=0, description="Carrier wavelength in m")

    @classmethod
    def from_engineering_units(
        cls, dispersion_ps_nm_km: float, length_km: float, wavelength_nm: float
    ) -> "LinkConfig":
        return cls(
            dispersion=dispersion_ps_nm_km * PS_PER_NM_KM,
            length=length_km * KM,
            wavelength=wavelength_nm * NM,
        )

    @property
    def dispersion_product(self) -> float:
        """D * lambda^2 * L / c in s^2; the chirp rate of the CD transfer function."""
        return self.dispersion * self.wavelength**2 * self.length / SPEED_OF_LIGHT


class ChannelSeeds(ConfigModels):
    """Independent seeds for the Tx phase noise, LO phase noise and AWGN streams."""
    tx_pn_seed: int = Field(ge=0, lt=2**64, description="Seed of the Tx phase-noise stream")
    lo_pn_seed: int = Field(ge=0, lt=2**64, description="Seed of the LO phase-noise stream")
    awgn_seed: int = Field(ge=0, lt=2**64, description="Seed of the AWGN stream")


class NlmsConfig(ConfigModels):
    """One-tap NLMS tracker settings."""
    mu: float = Field(default=0.1, gt=0, lt=2, description="Step size mu")
    mode: Literal["training", "decision_directed"] = Field(
        default="training", description="Use known symbols for the first training_length symbols"
    )
    training_length: int = Field(default=500, ge=0, description="Number of training symbols")

    @property
    def effective_training(self) -> int:
        return self.training_length if self.mode == "training" else 0


class BwaConfig(ConfigModels):
    """Block-wise average settings."""
    block_size: int = Field(default=15, ge=1, description="Block size N_BWA")


class VvConfig(ConfigModels):
    """Viterbi-Viterbi settings."""
    block_size: int = Field(default=15, description="Sliding window size N_VV")

    @field_validator("block_size")
    @classmethod
    def _odd_window(cls, block_size: int) -> int:
        if block_size < 3 or block_size % 2 == 0:
            raise ValueError(f"window must be odd ≥ 3, got {block_size}")
        return block_size


class CpeConfig(ConfigModels):
    """Carrier phase estimator choice and its parameters."""
    algorithm: Algorithm = Field(description="Estimator: nlms, bwa or vv")
    nlms: NlmsConfig = Field(default_factory=NlmsConfig, description="NLMS settings")
    bwa: BwaConfig = Field(default_factory=BwaConfig, description="BWA settings")
    vv: VvConfig = Field(default_factory=VvConfig, description="VV settings")

    @classmethod
    def for_algorithm(
        cls,
        algorithm: Algorithm,
        block_size: int = 15,
        mu: float = 0.1,
        mode: Literal["training", "decision_directed"] = "training",
        training_length: int = 500,
    ) -> "CpeConfig":
        if algorithm == "nlms":
            return cls(algorithm=algorithm, nlms=NlmsConfig(mu=mu, mode=mode, training_length=training_length))
        if algorithm == "bwa":
            return cls(algorithm=algorithm, bwa=BwaConfig(block_size=block_size))
        return cls(algorithm=algorithm, vv=VvConfig(block_size=block_size))

    @property
    def block_size(self) -> Optional[int]:
        if self.algorithm == "bwa":
            return self.bwa.block_size
        if self.algorithm == "vv":
            return self.vv.block_size
        return None

    @property
    def mu(self) -> Optional[float]:
        return self.nlms.mu if self.algorithm == "nlms" else None

    @property
    def training_length(self) -> int:
        return self.nlms.effective_training if self.algorithm == "nlms" else 0


class ScenarioConfig(ConfigModels):
    """A complete Monte-Carlo experiment, in SI units.

    Attributes:
        format: Modulation format
        lasers: Tx and LO linewidths
        link: Fibre link; None for back-to-back (no CD, no EDC)
        symbol_rate: Symbol rate in baud
        snr_db: Per-symbol SNR in dB; None means AWGN off
        cpe: Estimator and its parameters
        num_symbols: Transmitted symbols per trial, reference symbol included
        num_trials: Independent trials pooled into one result
        base_seed: Seed every trial seed is derived from
    """
    format: ModulationFormat = Field(description="Modulation format")
    lasers: LaserConfig = Field(description="Tx and LO linewidths")
    link: Optional[LinkConfig] = Field(default=None, description="Fibre link; None for back-to-back")
    symbol_rate: float = Field(gt=0, description="Symbol rate in baud")
    snr_db: Optional[float] = Field(default=None, description="Per-symbol SNR in dB; None means off")
    cpe: CpeConfig = Field(description="Estimator and its parameters")
    num_symbols: int = Field(ge=2, description="Transmitted symbols per trial, reference included")
    num_trials: int = Field(default=1, ge=1, description="Independent trials pooled into one result")
    base_seed: int = Field(default=0, ge=0, lt=2**64, description="Seed every trial seed is derived from")

    @model_validator(mode="after")
    def _enough_symbols(self) -> "ScenarioConfig":
        needed = 10 * max(self.cpe.block_size or 1, self.cpe.training_length)
        if self.num_symbols < needed:
            raise ValueError(
                f"num_symbols {self.num_symbols} is insufficient: need at least {needed} "
                f"(10 x max(block size, training length))"
            )
        return self

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.symbol_rate


class VarianceBreakdown(ProcessedModels):
    """Per-symbol phase-noise variances in rad^2.

    Attributes:
        sigma2_tx_lo: Laser phase-noise variance
        sigma2_eepn: Equalization-enhanced phase-noise variance
        sigma2_total: Total effective variance
        rho: Correlation between the EEPN and laser terms; fixed at 0
    """
    sigma2_tx_lo: float = Field(ge=0, description="Laser phase-noise variance in rad^2")
    sigma2_eepn: float = Field(ge=0, description="EEPN variance in rad^2")
    sigma2_total: float = Field(ge=0, description="Total effective variance in rad^2")
    rho: float = Field(default=0.0, description="EEPN/laser correlation, fixed at 0")


class PhaseEstimateSeries(ArrayModels):
    """Per-symbol carrier phase estimates after n-fold unwrapping.

    Attributes:
        estimates: Unwrapped estimates phi(k) in rad
        offsets: Integer multiples of 2*pi/n added by the unwrapper
        flagged: True where the n-th power sum was exactly zero and the previous estimate was carried
    """
    estimates: np.ndarray = Field(description="Unwrapped estimates phi(k) in rad")
    offsets: np.ndarray = Field(description="Integer multiples of 2*pi/n added by the unwrapper")
    flagged: np.ndarray = Field(description="True where a degenerate sum carried the previous estimate")


class CpeOutput(ArrayModels):
    """Result of a carrier phase estimator.

    Attributes:
        corrected: Phase-corrected samples
        estimates: Phase estimates (BWA/VV); for NLMS the tap phase, negated
        taps: NLMS tap trajectory w(0)..w(len); None for BWA/VV
        skipped: NLMS symbols whose update was skipped (zero magnitude); None for BWA/VV
    """
    corrected: SampleStream = Field(description="Phase-corrected samples")
    estimates: PhaseEstimateSeries = Field(description="Per-symbol phase estimates")
    taps: Optional[np.ndarray] = Field(default=None, description="NLMS tap trajectory w(0)..w(len)")
    skipped: Optional[np.ndarray] = Field(default=None, description="NLMS symbols with a skipped update")


class ChannelOutput(ArrayModels):
    """Received samples together with the realised laser phase traces.

    Attributes:
        samples: Received samples after EDC and AWGN
        tx_phase: Realised Tx phase noise per symbol
        lo_phase: Realised LO phase noise per symbol
    """
    samples: SampleStream = Field(description="Received samples after EDC and AWGN")
    tx_phase: np.ndarray = Field(description="Realised Tx phase noise per symbol in rad")
    lo_phase: np.ndarray = Field(description="Realised LO phase noise per symbol in rad")


class FloorCurve(ArrayModels):
    """Analytic BER floors of the three estimators over a variance grid.

    Attributes:
        order: Modulation order n
        sigma2_grid: Strictly increasing total variances in rad^2
        nlms: NLMS floors
        bwa: BWA floors
        vv: VV floors
        bwa_block_size: N_BWA
        vv_block_size: N_VV
    """
    order: int = Field(description="Modulation order n")
    sigma2_grid: np.ndarray = Field(description="Strictly increasing total variances in rad^2")
    nlms: np.ndarray = Field(description="NLMS floors")
    bwa: np.ndarray = Field(description="BWA floors")
    vv: np.ndarray = Field(description="VV floors")
    bwa_block_size: int = Field(description="N_BWA")
    vv_block_size: int = Field(description="N_VV")

    def column(self, algorithm: Algorithm) -> np.ndarray:
        return {"nlms": self.nlms, "bwa": self.bwa, "vv": self.vv}[algorithm]

    def visible(
        self, algorithm: Algorithm, low: float = VISIBLE_FLOOR_LOW, high: float = VISIBLE_FLOOR_HIGH
    ) -> np.ndarray:
        """Mask of the entries inside the reported floor range."""
        floors = self.column(algorithm)
        return (floors >= low) & (floors <= high)


class BerResult(ProcessedModels):
    """Bit-error counts of one trial or of pooled trials.

    Attributes:
        bit_errors: Number of bit errors
        bits_counted: Bits compared (reference and training excluded)
        ber: Point estimate bit_errors / bits_counted
        ci_low: Lower end of the 95% Wilson interval
        ci_high: Upper end of the 95% Wilson interval
        analytic_floor: Floor predicted for the scenario's total variance
        scenario: The scenario that produced the counts
        seed: Trial seed, or the base seed for pooled results
    """
    bit_errors: int = Field(ge=0, description="Number of bit errors")
    bits_counted: int = Field(ge=0, description="Bits compared")
    ber: float = Field(description="Point estimate")
    ci_low: float = Field(description="Lower end of the 95% Wilson interval")
    ci_high: float = Field(description="Upper end of the 95% Wilson interval")
    analytic_floor: float = Field(description="Analytic floor for the scenario")
    scenario: ScenarioConfig = Field(description="The scenario that produced the counts")
    seed: int = Field(description="Trial seed, or the base seed for pooled results")

    @property
    def reliable(self) -> bool:
        return self.bit_errors >= MIN_RELIABLE_ERRORS


class ResultRow(ProcessedModels):
    """One CSV row; field order is the CSV column order."""
    sigma2_total: float = Field(description="Total effective variance in rad^2")
    n: int = Field(description="Modulation order")
    algorithm: Algorithm = Field(description="Estimator")
    block_size: Optional[int] = Field(default=None, description="N_BWA or N_VV; empty for NLMS")
    mu: Optional[float] = Field(default=None, description="NLMS step size; empty otherwise")
    ber_floor_analytic: float = Field(description="Analytic floor")
    ber_mc: Optional[float] = Field(default=None, description="Monte-Carlo BER; empty for analytic rows")
    ci_low: Optional[float] = Field(default=None, description="Wilson interval low end")
    ci_high: Optional[float] = Field(default=None, description="Wilson interval high end")
    num_symbols: Optional[int] = Field(default=None, description="Symbols per trial")
    seed: Optional[int] = Field(default=None, description="Base seed")


class RunManifest(ProcessedModels):
    """Everything needed to reproduce a run's output files.

    Attributes:
        tool_version: Package version that produced the outputs
        schema_version: CSV schema version
        command: CLI command that ran
        config: The engineering-unit config document as resolved (overrides applied)
        scenario: The resolved SI scenario
        base_seed: Base seed of the run
        timestamp: UTC time the run finished, ISO 8601
        outputs: SHA-256 digest per output file name
    """
    tool_version: str = Field(description="Package version that produced the outputs")
    schema_version: int = Field(description="CSV schema version")
    command: str = Field(description="CLI command that ran")
    config: dict = Field(description="Engineering-unit config document, overrides applied")
    scenario: ScenarioConfig = Field(description="Resolved SI scenario")
    base_seed: int = Field(description="Base seed of the run")
    timestamp: str = Field(description="UTC completion time, ISO 8601")
    outputs: dict[str, str] = Field(description="SHA-256 digest per output file name")
