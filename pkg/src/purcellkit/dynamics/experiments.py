"""Time-domain experiments: Rabi, ac-Stark Ramsey, dispersive probe, reset.

Master-equation experiments drive the calibrated model at its own dressed
transition frequencies.  The dispersive probe uses the semiclassical branch
equation

    d alpha / dt = -(i delta_s + kappa/2) alpha - i eps(t),

whose square-pulse solution is piecewise exponential and is propagated in
closed form; the output field follows from a_out = a_in - sqrt(kappa) alpha
with the same sign convention as the reflection models in
:mod:`purcellkit.spectra`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..spectra import _leastsq
from .evolve import Pulse, PulseSequence, SimResult, evolve_lindblad
from .model import LindbladModel

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ProbeSpec:
    """Square readout probe: carrier (Hz), amplitude (Hz), duration (s).

    The amplitude is normalized so the on-resonance steady state holds
    ``(2 pi amplitude)^2 / (kappa/2)^2`` photons.
    """

    carrier: float
    amplitude: float
    duration: float

    def __post_init__(self):
        if self.amplitude < 0 or self.duration <= 0:
            raise ValueError("amplitude must be >= 0 and duration > 0")


@dataclass
class RabiResult:
    rabi_freq: float
    times: np.ndarray
    populations: np.ndarray
    fitted_level: int
    sim: SimResult


@dataclass
class StarkResult:
    stark_shift: float
    times: np.ndarray
    coherence: np.ndarray
    gamma_ex: float | None
    sim: SimResult


@dataclass
class ResetResult:
    durations: np.ndarray
    residual: np.ndarray
    populations: np.ndarray
    sim: SimResult


# ---------------------------------------------------------------------------
# Rabi oscillations
# ---------------------------------------------------------------------------


def _fit_decaying_cosine(times: np.ndarray, values: np.ndarray) -> float:
    """Frequency (Hz) of A cos(2 pi f t + phi) exp(-lambda t) + c."""
    values = np.asarray(values, dtype=float)
    span = times[-1] - times[0]
    dt = np.diff(times)
    if np.allclose(dt, dt[0], rtol=1e-6):
        spectrum = np.abs(np.fft.rfft(values - values.mean()))
        freqs = np.fft.rfftfreq(times.size, d=float(dt[0]))
        f0 = float(freqs[1 + np.argmax(spectrum[1:])])
    else:
        f0 = 1.0 / span
    if f0 <= 0:
        f0 = 1.0 / span
    a0 = (values.max() - values.min()) / 2.0
    c0 = float(values.mean())

    def residual(p):
        f, amp, phi, offset, lam = p
        if f < 0 or lam < 0:
            raise ValueError("invalid parameters")
        return amp * np.cos(TWO_PI * f * times + phi) * np.exp(-lam * times) + offset - values

    best = None
    for phi0 in (0.0, math.pi):
        try:
            sol = _leastsq(
                residual,
                [f0, a0, phi0, c0, 0.1 / span],
                scales=[f0, max(a0, 1e-3), 1.0, 1.0, 1.0 / span],
            )
        except Exception:
            continue
        if best is None or sol[2] < best[2]:
            best = sol
    if best is None:
        raise RuntimeError("decaying-cosine fit failed")
    return float(best[0][0])


def simulate_rabi(
    model: LindbladModel,
    omega_d: float,
    amplitude: float,
    durations,
    transition: str = "ge",
) -> RabiResult:
    """Drive a Rabi oscillation and return the fitted oscillation frequency (Hz).

    ``transition="ge"`` starts from the dressed ground state and fits the
    e-level population; ``"ef"`` starts from dressed e and fits f.
    """
    if transition not in ("ge", "ef"):
        raise ValueError("transition must be 'ge' or 'ef'")
    if transition == "ef" and model.n_transmon < 3:
        raise ValueError("ef Rabi needs n_transmon >= 3")
    if amplitude > 0.2 * abs(model.alpha):
        warnings.warn("drive amplitude is not small compared to the anharmonicity", stacklevel=2)

    durations = np.asarray(durations, dtype=float)
    grid = np.unique(np.concatenate([[0.0], durations]))
    pulse = Pulse(
        carrier=omega_d,
        amplitude=amplitude,
        start=0.0,
        duration=float(grid[-1]) + 1e-12,
        target="transmon",
    )
    rho0 = model.dressed_state(0 if transition == "ge" else 1, 0)
    sim = evolve_lindblad(model, PulseSequence((pulse,)), rho0, grid, frame=(omega_d, omega_d))

    level = 1 if transition == "ge" else 2
    keep = np.isin(grid, durations)
    times = grid[keep]
    pops = sim.populations[keep]
    rabi_freq = _fit_decaying_cosine(times, pops[:, level])
    return RabiResult(rabi_freq=rabi_freq, times=times, populations=pops, fitted_level=level, sim=sim)


# ---------------------------------------------------------------------------
# ac-Stark Ramsey
# ---------------------------------------------------------------------------


def perturbative_stark_shift(model: LindbladModel, omega_d: float, amplitude: float) -> float:
    """Second-order shift of the ge transition under an off-resonant drive (Hz)."""
    omega_eg = model.qubit_frequency("ge")
    omega_fe = omega_eg + model.alpha
    return (amplitude**2 / 2.0) * (1.0 / (omega_eg - omega_d) + 1.0 / (omega_d - omega_fe))


def simulate_stark_ramsey(
    model: LindbladModel,
    omega_d: float,
    amplitude: float,
    power_proxy: float | None = None,
    evolve_time: float | None = None,
    n_samples: int = 81,
) -> StarkResult:
    """Frequency shift of the ge coherence under a continuous off-resonant drive.

    Prepares an equal dressed-state superposition, evolves with the drive
    on, and fits the phase slope of the ge coherence in the frame rotating
    at the undriven transition frequency; this is the Ramsey fringe shift.
    """
    omega_eg = model.qubit_frequency("ge")
    omega_fe = omega_eg + model.alpha
    min_detuning = min(abs(omega_fe - omega_d), abs(omega_eg - omega_d))
    if amplitude > 0:
        ratio = min_detuning / amplitude
        if ratio < 2.0:
            raise ValueError(
                f"drive amplitude within x{ratio:.1f} of a transition detuning; "
                "the perturbative regime requires a larger margin"
            )
        if ratio < 5.0:
            warnings.warn(
                f"drive amplitude within x{ratio:.1f} of a transition detuning; "
                "the Stark shift is only marginally perturbative",
                stacklevel=2,
            )

    if evolve_time is None:
        estimate = abs(perturbative_stark_shift(model, omega_d, amplitude))
        evolve_time = 1.5 / estimate if estimate > 0 else 400e-9
        evolve_time = float(min(max(evolve_time, 50e-9), 400e-9))

    # The ge coherence carries small sidebands at the drive detunings from
    # both transitions; sample fast enough to resolve them, otherwise they
    # alias into the fitted phase slope.
    wobble = max(abs(omega_d - omega_eg), abs(omega_d - omega_fe), 1.0 / evolve_time)
    n_needed = int(4.0 * wobble * evolve_time) + 1
    n_samples = min(max(n_samples, n_needed), 4001)
    grid = np.linspace(0.0, evolve_time, n_samples)
    g_vec = model.dressed_vector(0, 0)
    e_vec = model.dressed_vector(1, 0)
    psi = (g_vec + e_vec) / math.sqrt(2.0)
    rho0 = np.outer(psi, psi.conj())

    pulses = PulseSequence(
        (
            Pulse(
                carrier=omega_d,
                amplitude=amplitude,
                start=0.0,
                duration=evolve_time + 1e-12,
                target="transmon",
            ),
        )
    ) if amplitude > 0 else PulseSequence.empty()
    sim = evolve_lindblad(model, pulses, rho0, grid, frame=(omega_eg, omega_eg))

    coherence = np.einsum("i,tij,j->t", e_vec.conj(), sim.rhos, g_vec)
    mask = np.abs(coherence) > 1e-6
    if mask.sum() < 4:
        raise RuntimeError("coherence decayed before a phase slope could be fitted")
    phase = np.unwrap(np.angle(coherence[mask]))
    slope = np.polyfit(grid[mask], phase, 1)[0]
    shift = -slope / TWO_PI

    gamma_ex = None
    if power_proxy is not None:
        from ..spectra import coupling_from_drive

        gamma_ex = coupling_from_drive(omega_d, amplitude, power_proxy)
    return StarkResult(
        stark_shift=float(shift), times=grid, coherence=coherence, gamma_ex=gamma_ex, sim=sim
    )


# ---------------------------------------------------------------------------
# Dispersive probe (semiclassical branch equations)
# ---------------------------------------------------------------------------


def _branch_response(
    delta_ang: float, kappa_ang: float, eps_ang: float, duration: float, times: np.ndarray
):
    """Closed-form cavity amplitude for a square drive on [0, duration]."""
    pole = 1j * delta_ang + kappa_ang / 2.0
    alpha_ss = -1j * eps_ang / pole
    alpha = np.zeros(times.size, dtype=complex)
    on = (times >= 0) & (times <= duration)
    alpha[on] = alpha_ss * (1.0 - np.exp(-pole * times[on]))
    after = times > duration
    alpha_end = alpha_ss * (1.0 - np.exp(-pole * duration))
    alpha[after] = alpha_end * np.exp(-pole * (times[after] - duration))
    return alpha


def simulate_probe_reflection(
    model: LindbladModel,
    probe: ProbeSpec,
    qubit_state: str = "both",
    t_grid=None,
) -> SimResult:
    """Demodulated cavity and output field for the qubit held in g and/or e.

    The resonance of each branch is the model's own dressed cavity frequency
    for that qubit level, so the branch separation equals the model's full
    dispersive shift.
    """
    if qubit_state not in ("g", "e", "both"):
        raise ValueError("qubit_state must be 'g', 'e' or 'both'")
    if t_grid is None:
        tail = 8.0 / (TWO_PI * model.kappa_ex)
        t_grid = np.linspace(0.0, probe.duration + max(tail, 20e-9), 601)
    times = np.asarray(t_grid, dtype=float)

    kappa_ang = TWO_PI * model.kappa_ex
    eps_ang = TWO_PI * probe.amplitude
    a_in = np.where((times >= 0) & (times <= probe.duration), eps_ang / math.sqrt(kappa_ang), 0.0)

    branches = ("g", "e") if qubit_state == "both" else (qubit_state,)
    amplitudes: dict[str, np.ndarray] = {}
    outputs: dict[str, np.ndarray] = {}
    for name in branches:
        level = 0 if name == "g" else 1
        delta_ang = TWO_PI * (model.resonator_frequency(level) - probe.carrier)
        alpha = _branch_response(delta_ang, kappa_ang, eps_ang, probe.duration, times)
        amplitudes[name] = alpha
        outputs[name] = a_in - math.sqrt(kappa_ang) * alpha
    if len(branches) == 2:
        outputs["diff"] = outputs["e"] - outputs["g"]

    return SimResult(
        times=times,
        populations=None,
        cavity_amplitude=amplitudes,
        output_records=outputs,
    )


def steady_state_photons(
    model: LindbladModel, probe_amplitude: float, detuning: float = 0.0
) -> tuple[float, float]:
    """Steady-state photon number of the driven branch and the critical number.

    ``detuning`` is probe minus branch resonance (Hz).  The critical photon
    number is (Delta / 2g)^2 with Delta the qubit-resonator detuning.
    """
    kappa_ang = TWO_PI * model.kappa_ex
    eps_ang = TWO_PI * probe_amplitude
    delta_ang = TWO_PI * detuning
    n_bar = eps_ang**2 / ((kappa_ang / 2.0) ** 2 + delta_ang**2)
    delta_qr = model.omega_eg - model.omega_r
    n_crit = (delta_qr / (2.0 * model.g)) ** 2
    return float(n_bar), float(n_crit)


# ---------------------------------------------------------------------------
# Two-tone unconditional reset
# ---------------------------------------------------------------------------


def simulate_reset(
    model: LindbladModel,
    f0g1_drive: tuple[float, float],
    e0f0_drive: tuple[float, float],
    durations,
    initial: str = "f",
    edge: float = 6e-9,
) -> ResetResult:
    """Residual excitation 1 - P(g0) under simultaneous two-tone reset drives.

    ``f0g1_drive`` and ``e0f0_drive`` are (frequency Hz, amplitude Hz)
    pairs; both drives stay on over the full window with flat-top ramps of
    length ``edge``, and the curve is sampled at each requested duration.
    """
    if model.n_transmon < 4:
        raise ValueError("reset simulation needs n_transmon >= 4 to expose leakage")
    if model.n_fock < 3:
        raise ValueError("reset simulation needs n_fock >= 3")
    levels = {"g": 0, "e": 1, "f": 2}
    if initial not in levels:
        raise ValueError("initial must be 'g', 'e' or 'f'")

    durations = np.asarray(durations, dtype=float)
    grid = np.unique(np.concatenate([[0.0], durations]))
    window = float(grid[-1]) + 1e-12
    pulses = []
    for freq, amp in (f0g1_drive, e0f0_drive):
        if amp > 0:
            pulses.append(
                Pulse(
                    carrier=freq,
                    amplitude=amp,
                    start=0.0,
                    duration=window,
                    target="transmon",
                    envelope="flat_top",
                    edge=edge,
                )
            )
    rho0 = model.dressed_state(levels[initial], 0)
    sim = evolve_lindblad(
        model,
        PulseSequence(tuple(pulses)),
        rho0,
        grid,
        frame=(model.omega_eg, model.omega_eg),
    )

    g0 = model.dressed_vector(0, 0)
    p_g0 = np.einsum("i,tij,j->t", g0.conj(), sim.rhos, g0).real
    keep = np.isin(grid, durations)
    return ResetResult(
        durations=grid[keep],
        residual=1.0 - p_g0[keep],
        populations=sim.populations[keep],
        sim=sim,
    )
