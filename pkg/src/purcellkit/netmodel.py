"""Distributed-element network model of a transmon coupled to a tapped resonator.

Fixed topology: junction node with a shunt capacitance, a series coupling
capacitor into a transmission-line resonator, a series-capacitor tap at
``coupler_position`` (measured from the far open end) into a resistive
output port, and an open far end.

All frequencies in this module are angular (rad/s); conversion from Hz
happens once at the file/CLI/service boundary.  The admittance seen by the
junction is evaluated two ways: directly from the complex network solution,
and through the output-port voltage as Re[Y] = |V0/V|^2 / Z0.  The latter is
immune to the catastrophic cancellation that makes the direct real part
unusable near the transmission notch, and it isolates the *external*
(output-line) dissipation when line loss is present.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import e as ECHARGE
from scipy.constants import hbar

from . import spectra
from .errors import FitQualityError, PoleConditionError

TWO_PI = 2.0 * math.pi

GRID_POINTS = 2001          # coarse pre-sampling for bracketed minimization
GOLDEN_REL_TOL = 1e-6
POLE_ADMITTANCE_FACTOR = 1e12   # |y| * Z0 beyond this flags a lossless pole


@dataclass(frozen=True)
class TLSegment:
    """Uniform transmission-line section.

    ``z0`` in ohm, ``length`` in m, ``phase_velocity`` in m/s, ``loss`` as a
    per-length attenuation in nepers/m (0 for the ideal lines used throughout
    the design flow).
    """

    z0: float
    length: float
    phase_velocity: float
    loss: float = 0.0

    def __post_init__(self):
        if not self.z0 > 0:
            raise ValueError("z0 must be > 0")
        if self.length < 0:
            raise ValueError("length must be >= 0")
        if not self.phase_velocity > 0:
            raise ValueError("phase_velocity must be > 0")
        if self.loss < 0:
            raise ValueError("loss must be >= 0")


@dataclass(frozen=True)
class NetworkSpec:
    """Resonator/coupler/qubit circuit description.

    ``resonator_segments`` run from the qubit end to the far open end.
    ``coupler_position`` is the distance of the output tap from the far open
    end.  ``output_impedance`` may be ``None`` for an unloaded (open) port.
    Capacitances in F, impedances in ohm, ``josephson_energy`` in J.
    """

    resonator_segments: tuple[TLSegment, ...]
    coupler_position: float
    coupler_capacitance: float
    output_impedance: float | None
    qubit_coupling_capacitance: float
    transmon_capacitance: float
    josephson_energy: float

    def __post_init__(self):
        segments = tuple(self.resonator_segments)
        if not segments:
            raise ValueError("resonator needs at least one segment")
        object.__setattr__(self, "resonator_segments", segments)
        if not 0 <= self.coupler_position <= self.total_length + 1e-15:
            raise ValueError("coupler_position must lie on the resonator")
        for name in ("coupler_capacitance", "qubit_coupling_capacitance", "transmon_capacitance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.output_impedance is not None and not self.output_impedance > 0:
            raise ValueError("output_impedance must be > 0 or None")
        if not self.josephson_energy > 0:
            raise ValueError("josephson_energy must be > 0")
        if self.ej_over_ec <= 20:
            warnings.warn(
                f"E_J/E_C = {self.ej_over_ec:.1f} is below the transmon regime (> 20)",
                stacklevel=2,
            )

    @property
    def total_length(self) -> float:
        return sum(seg.length for seg in self.resonator_segments)

    @property
    def charging_energy(self) -> float:
        """E_C = e^2 / 2C in J."""
        return ECHARGE**2 / (2.0 * self.transmon_capacitance)

    @property
    def ej_over_ec(self) -> float:
        return self.josephson_energy / self.charging_energy

    @property
    def phi_eg(self) -> float:
        """Transmon phase matrix element (2 E_C / E_J)^(1/4)."""
        return (2.0 * self.charging_energy / self.josephson_energy) ** 0.25

    @property
    def josephson_inductance(self) -> float:
        """Linearized junction inductance (hbar / 2e)^2 / E_J in H."""
        return (hbar / (2.0 * ECHARGE)) ** 2 / self.josephson_energy


@dataclass(frozen=True)
class AdmittanceResult:
    """Environment admittance seen by the junction at one or more frequencies."""

    omega: np.ndarray | float
    y: np.ndarray | complex
    re_y_stable: np.ndarray | float
    v_ratio: np.ndarray | complex
    at_pole: np.ndarray | bool


# ---------------------------------------------------------------------------
# ABCD machinery
# ---------------------------------------------------------------------------


def segment_abcd(seg: TLSegment, omega: float) -> np.ndarray:
    """Chain (ABCD) matrix of one line section at angular frequency ``omega``."""
    if not np.isfinite(omega) or omega <= 0:
        raise ValueError("omega must be finite and > 0")
    a, b, c, d = _segment_abcd_arrays(seg, np.asarray(float(omega)))
    return np.array([[a, b], [c, d]], dtype=complex)


def _segment_abcd_arrays(seg: TLSegment, omega: np.ndarray):
    beta = omega / seg.phase_velocity
    theta = beta * seg.length
    if seg.loss == 0.0:
        cos_t = np.cos(theta)
        sin_t = np.sin(theta)
        return cos_t, 1j * seg.z0 * sin_t, 1j * sin_t / seg.z0, cos_t
    gamma_l = (seg.loss + 1j * beta) * seg.length
    cosh_g = np.cosh(gamma_l)
    sinh_g = np.sinh(gamma_l)
    return cosh_g, seg.z0 * sinh_g, sinh_g / seg.z0, cosh_g


def cascade(matrices) -> np.ndarray:
    """Ordered product of 2x2 chain matrices (first element closest to port 1)."""
    matrices = list(matrices)
    if not matrices:
        raise ValueError("cascade of an empty list")
    out = np.asarray(matrices[0], dtype=complex)
    for m in matrices[1:]:
        out = out @ np.asarray(m, dtype=complex)
    return out


def _chain_arrays(segments, omega: np.ndarray):
    """Elementwise cascade over an omega grid; returns (A, B, C, D) arrays."""
    a = np.ones_like(omega, dtype=complex)
    b = np.zeros_like(omega, dtype=complex)
    c = np.zeros_like(omega, dtype=complex)
    d = np.ones_like(omega, dtype=complex)
    for seg in segments:
        if seg.length == 0.0:
            continue
        a2, b2, c2, d2 = _segment_abcd_arrays(seg, omega)
        a, b, c, d = a * a2 + b * c2, a * b2 + b * d2, c * a2 + d * c2, c * b2 + d * d2
    return a, b, c, d


def _split_segments(net: NetworkSpec):
    """Split the resonator at the tap: (qubit end -> tap, tap -> far end)."""
    from_qubit_end = net.total_length - net.coupler_position
    side_a: list[TLSegment] = []
    side_b: list[TLSegment] = []
    walked = 0.0
    for seg in net.resonator_segments:
        seg_end = walked + seg.length
        if seg_end <= from_qubit_end + 1e-18:
            side_a.append(seg)
        elif walked >= from_qubit_end - 1e-18:
            side_b.append(seg)
        else:
            first = from_qubit_end - walked
            side_a.append(dataclasses.replace(seg, length=first))
            side_b.append(dataclasses.replace(seg, length=seg.length - first))
        walked = seg_end
    return side_a, side_b


# ---------------------------------------------------------------------------
# Junction admittance and coupling rate
# ---------------------------------------------------------------------------


def junction_admittance(net: NetworkSpec, omega) -> AdmittanceResult:
    """Environment admittance at the junction node.

    ``omega`` may be a scalar or an array (rad/s).  ``re_y_stable`` is the
    output-port dissipation |V0/V|^2 / Z0, nonnegative by construction.
    Points sitting exactly on a lossless-network pole (junction voltage
    -> 0 for unit current) are flagged in ``at_pole`` rather than returned
    as infinities.
    """
    omega_in = np.asarray(omega, dtype=float)
    scalar = omega_in.ndim == 0
    w = np.atleast_1d(omega_in)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("omega must be finite and > 0")

    side_a, side_b = _split_segments(net)
    a, b, c, d = _chain_arrays(side_a, w)
    ab, bb, cb, db = _chain_arrays(side_b, w)

    with np.errstate(divide="ignore", invalid="ignore"):
        y_stub = cb / ab  # open-terminated stub, Y_in = C/A
        z_cc = 1.0 / (1j * w * net.coupler_capacitance)
        if net.output_impedance is None:
            y_out = np.zeros_like(y_stub)
        else:
            y_out = 1.0 / (z_cc + net.output_impedance)
        y_tap = y_stub + y_out

        m = a + b * y_tap                    # V1 / V_tap
        n = c + d * y_tap                    # I1 / V_tap
        z_cq = 1.0 / (1j * w * net.qubit_coupling_capacitance)
        denom = m + z_cq * n                 # V_junction / V_tap
        y_rest = n / denom
        y = 1j * w * net.transmon_capacitance + y_rest

        if net.output_impedance is None:
            v_ratio = np.zeros_like(denom)
            re_y_stable = np.zeros_like(w)
        else:
            v_ratio = (net.output_impedance / (z_cc + net.output_impedance)) / denom
            re_y_stable = np.abs(v_ratio) ** 2 / net.output_impedance

    z_ref = net.output_impedance if net.output_impedance is not None else 50.0
    at_pole = ~np.isfinite(y) | (np.abs(y) * z_ref > POLE_ADMITTANCE_FACTOR)

    if scalar:
        return AdmittanceResult(
            omega=float(w[0]),
            y=complex(y[0]),
            re_y_stable=float(re_y_stable[0]),
            v_ratio=complex(v_ratio[0]),
            at_pole=bool(at_pole[0]),
        )
    return AdmittanceResult(omega=w, y=y, re_y_stable=re_y_stable, v_ratio=v_ratio, at_pole=at_pole)


def external_coupling_rate(net: NetworkSpec, omega, scaling: str = "fixed_phi"):
    """External decay rate of a qubit with transition frequency ``omega`` (rad/s).

    ``scaling="fixed_phi"`` keeps the transmon matrix element phi_eg fixed as
    the notional qubit frequency is swept (required for the drive-power
    relation to hold off resonance).  ``scaling="fixed_ec"`` keeps E_C fixed
    instead, reducing to Gamma = Re[Y] / C as in flux-tunable-qubit practice.
    Returns rad/s; scalar in, scalar out.
    """
    adm = junction_admittance(net, omega)
    re_y = np.atleast_1d(np.asarray(adm.re_y_stable, dtype=float)).copy()
    at_pole = np.atleast_1d(adm.at_pole)
    w = np.atleast_1d(np.asarray(adm.omega, dtype=float))

    if scaling == "fixed_phi":
        rate = net.phi_eg**2 * (hbar * w / (2.0 * ECHARGE**2)) * re_y
    elif scaling == "fixed_ec":
        rate = re_y / net.transmon_capacitance
    else:
        raise ValueError(f"unknown scaling mode {scaling!r}")

    if np.isscalar(adm.at_pole) or np.asarray(adm.at_pole).ndim == 0:
        if adm.at_pole:
            raise PoleConditionError(f"omega = {float(w[0]):.6e} rad/s sits on a network pole")
        return float(rate[0])
    rate[at_pole] = np.nan
    return rate


def single_mode_rate(g: float, delta: float, kappa_ex: float) -> float:
    """Resonator-mediated qubit decay (g/Delta)^2 kappa_ex of the single-mode picture.

    All arguments and the result are angular rates (rad/s).
    """
    if delta == 0:
        raise ValueError("delta must be nonzero (dispersive formula invalid)")
    return (g / delta) ** 2 * kappa_ex


# ---------------------------------------------------------------------------
# Search operations
# ---------------------------------------------------------------------------


def _golden_minimize(fn, lo: float, hi: float, rel_tol: float = GOLDEN_REL_TOL) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > rel_tol * max(abs(a), abs(b), 1e-300):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def find_notch(net: NetworkSpec, search_band, points: int = GRID_POINTS) -> float | None:
    """Frequency (rad/s) minimizing the stable Re[Y] within ``search_band``.

    Pre-samples a grid, requires an interior minimum, then refines it by
    golden-section search.  Returns ``None`` when the minimum sits on the
    band edge (no notch inside the band).
    """
    lo, hi = float(search_band[0]), float(search_band[1])
    if not (0 < lo < hi):
        raise ValueError("search band must satisfy 0 < lo < hi")
    points = max(int(points), GRID_POINTS)
    grid = np.linspace(lo, hi, points)
    re_y = junction_admittance(net, grid).re_y_stable
    i_min = int(np.nanargmin(re_y))
    if i_min == 0 or i_min == points - 1:
        return None

    def objective(w):
        return junction_admittance(net, float(w)).re_y_stable

    return _golden_minimize(objective, grid[i_min - 1], grid[i_min + 1])


def optimize_coupler_position(net: NetworkSpec, omega_target: float, points: int = 801) -> float:
    """Coupler position (m from the far open end) minimizing the qubit decay at ``omega_target``."""
    if not omega_target > 0:
        raise ValueError("omega_target must be > 0")
    total = net.total_length
    positions = np.linspace(0.0, total, points)

    def rate_at(x):
        candidate = dataclasses.replace(net, coupler_position=float(x))
        return junction_admittance(candidate, omega_target).re_y_stable

    values = np.array([rate_at(x) for x in positions])
    i_min = int(np.argmin(values))
    lo = positions[max(i_min - 1, 0)]
    hi = positions[min(i_min + 1, points - 1)]
    if lo == hi:
        return float(positions[i_min])
    return float(_golden_minimize(rate_at, lo, hi, rel_tol=1e-9))


# ---------------------------------------------------------------------------
# Output-port reflection and mode parameters
# ---------------------------------------------------------------------------


def port_reflection(net: NetworkSpec, omega, include_qubit: bool = True) -> np.ndarray:
    """S11 looking into the coupler from the output port (linearized junction).

    With ``include_qubit`` the junction is approximated by its linear
    inductance, which reproduces the dressed resonator frequency; without it
    only the shunt capacitance terminates the qubit end.
    """
    if net.output_impedance is None:
        raise ValueError("network has no output port")
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    side_a, side_b = _split_segments(net)

    with np.errstate(divide="ignore", invalid="ignore"):
        if include_qubit:
            lj = net.josephson_inductance
            z_end = (1j * w * lj) / (1.0 - w**2 * lj * net.transmon_capacitance)
        else:
            z_end = 1.0 / (1j * w * net.transmon_capacitance)
        z_end = z_end + 1.0 / (1j * w * net.qubit_coupling_capacitance)
        y_end = 1.0 / z_end

        # line A reversed: tap -> qubit end
        ar, br, cr, dr = _chain_arrays(list(reversed(side_a)), w)
        y_toward_qubit = (cr + dr * y_end) / (ar + br * y_end)

        ab, bb, cb, db = _chain_arrays(side_b, w)
        y_stub = cb / ab
        z_tap = 1.0 / (y_stub + y_toward_qubit)
        z_in = 1.0 / (1j * w * net.coupler_capacitance) + z_tap
        s11 = (z_in - net.output_impedance) / (z_in + net.output_impedance)
    return s11


def resonator_mode_params(
    net: NetworkSpec,
    include_qubit: bool = True,
    scan_band=None,
    scan_points: int = 4001,
) -> tuple[float, float]:
    """Fundamental-mode center and external linewidth (rad/s, rad/s).

    Synthesizes the output-port reflection, locates the resonance by its
    group-delay peak, and fits the single-pole reflection model on a band of
    a few linewidths around it.
    """
    if net.output_impedance is None:
        raise ValueError("network has no output port")
    v_mean = net.total_length / sum(s.length / s.phase_velocity for s in net.resonator_segments)
    omega_guess = math.pi * v_mean / net.total_length
    if scan_band is None:
        scan_band = (0.6 * omega_guess, 1.5 * omega_guess)
    grid = np.linspace(scan_band[0], scan_band[1], scan_points)
    s11 = port_reflection(net, grid, include_qubit=include_qubit)
    phase = np.unwrap(np.angle(s11))
    group_delay = -np.gradient(phase, grid)

    peaks = _local_maxima(group_delay)
    if peaks.size == 0:
        raise FitQualityError("no resonance found in the scan band")
    center = grid[peaks[np.argmin(np.abs(grid[peaks] - omega_guess))]]
    kappa_guess = 4.0 / float(np.interp(center, grid, group_delay))

    half_band = 8.0 * abs(kappa_guess)
    band_grid = np.linspace(center - half_band, center + half_band, 801)
    band_grid = band_grid[band_grid > 0]
    trace = spectra.ComplexTrace(
        freqs=band_grid / TWO_PI,
        values=port_reflection(net, band_grid, include_qubit=include_qubit),
    )
    fit = spectra.fit_single_pole_reflection(
        trace, initial={"omega_r": center / TWO_PI, "kappa_ex": kappa_guess / TWO_PI}
    )
    if fit.residual_rms > 0.05:
        raise FitQualityError(
            f"single-pole model does not describe the reflection (rms {fit.residual_rms:.3g}); "
            "overlapping resonances?"
        )
    return TWO_PI * fit.params["omega_r"], TWO_PI * fit.params["kappa_ex"]


def _local_maxima(values: np.ndarray) -> np.ndarray:
    interior = (values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])
    return np.nonzero(interior)[0] + 1


# ---------------------------------------------------------------------------
# Suppression spectrum
# ---------------------------------------------------------------------------


def suppression_spectrum(
    net: NetworkSpec,
    device: spectra.DeviceParams,
    band,
    points: int,
) -> spectra.ComplexTrace:
    """Ratio of the single-mode decay estimate to the filtered decay rate.

    ``band`` is angular (rad/s); the returned trace is indexed in Hz.  The
    single-mode comparison uses the device's g and kappa_ex with
    Delta(omega) = omega - omega_r.  Grid points where Delta vanishes are
    marked invalid (NaN).
    """
    if points < 2:
        raise ValueError("points must be >= 2")
    w = np.linspace(float(band[0]), float(band[1]), int(points))
    gamma = external_coupling_rate(net, w)

    g_ang = TWO_PI * device.g
    kappa_ang = TWO_PI * device.kappa_ex
    delta = w - TWO_PI * device.omega_r
    with np.errstate(divide="ignore", invalid="ignore"):
        unfiltered = (g_ang / delta) ** 2 * kappa_ang
        ratio = unfiltered / gamma
    ratio = np.where(delta == 0.0, np.nan, ratio)
    return spectra.ComplexTrace(freqs=w / TWO_PI, values=ratio.astype(complex))
