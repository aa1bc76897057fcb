"""Pydantic request/response models for the service endpoints.

These mirror the JSON file schemas (same field names and units: Hz, s, W,
m, F) and reject unknown fields.  Conversion to the core dataclasses
happens here and nowhere else.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from .. import budget as budget_mod
from .. import netmodel, spectra


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SegmentIn(StrictModel):
    z0: float
    length: float
    phase_velocity: float
    loss: float = 0.0


class NetworkIn(StrictModel):
    resonator_segments: list[SegmentIn]
    coupler_position: float
    coupler_capacitance: float
    output_impedance: float | None
    qubit_coupling_capacitance: float
    transmon_capacitance: float
    josephson_energy: float

    def to_core(self) -> netmodel.NetworkSpec:
        return netmodel.NetworkSpec(
            resonator_segments=tuple(
                netmodel.TLSegment(**seg.model_dump()) for seg in self.resonator_segments
            ),
            coupler_position=self.coupler_position,
            coupler_capacitance=self.coupler_capacitance,
            output_impedance=self.output_impedance,
            qubit_coupling_capacitance=self.qubit_coupling_capacitance,
            transmon_capacitance=self.transmon_capacitance,
            josephson_energy=self.josephson_energy,
        )


class DeviceIn(StrictModel):
    omega_eg: float
    omega_fe: float
    omega_r: float
    kappa_ex: float
    two_chi: float
    g: float
    t1: float
    r_th: float
    omega_f0g1: float | None = None
    t2_star: float | None = None
    t2_echo: float | None = None
    t1f: float | None = None
    gamma_ex_q: float | None = None
    gamma2: float | None = None
    saturation: float | None = None

    def to_core(self) -> spectra.DeviceParams:
        return spectra.DeviceParams(**self.model_dump())


class StatsIn(StrictModel):
    p_a_e_given_g: float
    p_a_g_given_e: float
    p_b_e_given_g: float
    p_b_g_given_e: float
    p_c_g_given_g: float
    p_c_e_given_e: float
    r_a: float
    r_b: float
    r_c: float

    def to_core(self) -> budget_mod.ReadoutStats:
        return budget_mod.ReadoutStats(**self.model_dump())


# ---------------------------------------------------------------------------
# Requests
# ---------------------------------------------------------------------------


class SpectrumRequest(StrictModel):
    network: NetworkIn
    device: DeviceIn
    band_lo_hz: float
    band_hi_hz: float
    points: int = Field(ge=2)
    scaling: str = "fixed_phi"


class OptimizeCouplerRequest(StrictModel):
    network: NetworkIn
    target_hz: float


class NotchRequest(StrictModel):
    network: NetworkIn
    band_lo_hz: float
    band_hi_hz: float


class ModeParamsRequest(StrictModel):
    network: NetworkIn
    include_qubit: bool = True


class TraceIn(StrictModel):
    freqs_hz: list[float]
    re: list[float]
    im: list[float]

    def to_core(self) -> spectra.ComplexTrace:
        import numpy as np

        return spectra.ComplexTrace(
            freqs=np.array(self.freqs_hz),
            values=np.array(self.re) + 1j * np.array(self.im),
        )


class FitRequest(StrictModel):
    mode: str  # "resonator-ratio" or "qubit-reflection"
    trace: TraceIn
    r_th: float | None = None
    initial: dict[str, float] | None = None


class RabiRequest(StrictModel):
    device: DeviceIn
    transition: str = "ge"
    amplitude_hz: float
    drive_hz: float | None = None
    durations_s: list[float]
    n_transmon: int = 4
    n_fock: int = 3


class StarkRequest(StrictModel):
    device: DeviceIn
    drive_hz: float
    amplitude_hz: float
    power_w: float | None = None
    n_transmon: int = 4
    n_fock: int = 3


class ReadoutSimRequest(StrictModel):
    device: DeviceIn
    probe_amplitude_hz: float | None = None
    probe_duration_s: float = 40e-9
    noise_sigma: float
    n_shots: int = Field(ge=1)
    seed: int
    filter_bandwidth_hz: float | None = 30e6
    tau_ro_s: float = 120e-9
    pi_error: float = 1e-3
    n_transmon: int = 4
    n_fock: int = 4


class ResetRequest(StrictModel):
    device: DeviceIn
    durations_s: list[float]
    initial: str = "f"
    f0g1_amplitude_hz: float
    e0f0_amplitude_hz: float
    f0g1_offset_hz: float = 0.0
    e0f0_offset_hz: float = 0.0
    edge_s: float = 6e-9
    n_transmon: int = 4
    n_fock: int = 4


class BudgetRequest(StrictModel):
    stats: StatsIn
    device: DeviceIn
    tau_ro_s: float = 120e-9


# ---------------------------------------------------------------------------
# Responses
# ---------------------------------------------------------------------------


class SpectrumRow(StrictModel):
    freq_hz: float
    gamma_ex_hz: float
    single_mode_hz: float
    suppression: float | None


class SpectrumResponse(StrictModel):
    rows: list[SpectrumRow]


class ScalarResponse(StrictModel):
    value: float | None


class ModeParamsResponse(StrictModel):
    omega_r_hz: float
    kappa_ex_hz: float


class FitResponse(StrictModel):
    params: dict[str, float]
    sigmas: dict[str, float]
    residual_rms: float
    nuisance: dict[str, float]
    n_iterations: int


class RabiResponse(StrictModel):
    rabi_freq_hz: float
    amplitude_hz: float
    times_s: list[float]
    populations: list[list[float]]


class StarkResponse(StrictModel):
    stark_shift_hz: float
    amplitude_from_shift_hz: float | None
    gamma_ex_hz: float | None


class HistogramOut(StrictModel):
    bin_centers: list[float]
    counts_g: list[int]
    counts_e: list[int]


class ReadoutSimResponse(StrictModel):
    p_e_given_g: float
    p_g_given_e: float
    predicted_separation_error: float
    threshold: float
    histogram: HistogramOut
    stats: StatsIn
    n_bar: float
    n_crit: float


class ResetResponse(StrictModel):
    durations_s: list[float]
    residual: list[float]
    populations: list[list[float]]
    f0g1_drive_hz: float
    e0f0_drive_hz: float


class IntervalOut(StrictModel):
    lo: float
    hi: float


class BudgetResponse(StrictModel):
    fidelity: float
    qnd_fidelity: float
    error_model: dict[str, float | IntervalOut]
    origins: dict[str, float]
    f_budget: dict[str, IntervalOut]
    q_budget: dict[str, IntervalOut]
    readout_error_g_as_e: IntervalOut
    readout_error_e_as_g: IntervalOut
    notes: list[str]
    text_tables: str
