"""Reflection-spectrum models, least-squares fits, and drive calibration.

All public interfaces take ordinary frequencies in Hz, times in seconds and
powers in watts.  Rates that enter physical formulas are converted to angular
units internally, exactly once.

The reflection models use the convention

    S11(omega) = 1 - kappa_ex / (kappa_ex/2 + i (omega - omega_r)),

i.e. full reflection with a phase flip on resonance for a lossless
single-port resonator.  The time convention implied by this sign choice
(fields ~ exp(-i omega t)) is shared with :mod:`purcellkit.dynamics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from .errors import FitConvergenceError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeviceParams:
    """Measured device quantities.

    Frequencies in Hz (``two_chi`` is signed), times in seconds,
    ``r_th`` and ``saturation`` dimensionless.  Fields that a particular
    analysis does not need may be ``None``.
    """

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

    def __post_init__(self):
        for name in ("omega_eg", "omega_fe", "omega_r", "kappa_ex", "t1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.g < 0:
            raise ValueError("g must be >= 0")
        if self.omega_f0g1 is not None and not self.omega_f0g1 > 0:
            raise ValueError("omega_f0g1 must be > 0")
        if not 0 <= self.r_th < 1:
            raise ValueError("r_th must be in [0, 1)")
        for name in ("t2_star", "t2_echo", "t1f"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be > 0")
        if self.saturation is not None and self.saturation < 0:
            raise ValueError("saturation must be >= 0")

    @property
    def alpha(self) -> float:
        """Anharmonicity omega_fe - omega_eg (Hz, negative for a transmon)."""
        return self.omega_fe - self.omega_eg

    @property
    def delta(self) -> float:
        """Qubit-resonator detuning omega_eg - omega_r (Hz)."""
        return self.omega_eg - self.omega_r


@dataclass(frozen=True)
class ComplexTrace:
    """Frequency-indexed complex response (S-parameter trace or rate spectrum)."""

    freqs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if freqs.ndim != 1 or values.ndim != 1 or freqs.size != values.size:
            raise ValueError("freqs and values must be 1-D arrays of equal length")
        if freqs.size < 2:
            raise ValueError("trace needs at least 2 points")
        if not np.all(np.diff(freqs) > 0):
            raise ValueError("freqs must be strictly increasing")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.freqs.size


@dataclass(frozen=True)
class FitResult:
    """Nonlinear least-squares estimates with one-standard-error uncertainties."""

    params: dict[str, float]
    sigmas: dict[str, float]
    residual_rms: float
    nuisance: dict[str, float] = field(default_factory=dict)
    n_iterations: int = 0

    def __post_init__(self):
        if any(s < 0 for s in self.sigmas.values()):
            raise ValueError("sigmas must be >= 0")
        if self.residual_rms < 0:
            raise ValueError("residual_rms must be >= 0")


@dataclass(frozen=True)
class DriveSpec:
    """One calibration point of the qubit drive applied through the filter."""

    omega_d: float
    power: float
    amplitude: float = 0.0
    stark_shift: float = 0.0

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("power must be >= 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")


# ---------------------------------------------------------------------------
# Model functions
# ---------------------------------------------------------------------------


def s11_single_pole(omega, omega_r: float, kappa_ex: float):
    """Reflection off a lossless single-port resonator, ``omega`` in Hz."""
    if not kappa_ex > 0:
        raise ValueError("kappa_ex must be > 0")
    return 1.0 - kappa_ex / (kappa_ex / 2.0 + 1j * (np.asarray(omega, dtype=float) - omega_r))


def s11_resonator_ratio_model(omega, omega_r: float, kappa_ex: float, two_chi: float):
    """Ratio S11(qubit in g) / S11(qubit in e) of post-selected resonator spectra.

    The e-state resonance sits at ``omega_r + two_chi``.  The ratio cancels
    any background common to the two post-selected measurements.
    """
    return s11_single_pole(omega, omega_r, kappa_ex) / s11_single_pole(
        omega, omega_r + two_chi, kappa_ex
    )


def s11_qubit_model(
    omega,
    omega_eg: float,
    gamma_ex: float,
    gamma2: float,
    saturation: float,
    r_th: float,
):
    """Continuous-wave reflection spectrum of a weakly driven qubit.

    Thermal excitation reduces the effective external decay rate to
    ``gamma_ex * (1 - r_th) / (1 + r_th)``.  All rates in Hz; the result is
    dimensionless (ratios of rates only).
    """
    if not gamma2 > 0:
        raise ValueError("gamma2 must be > 0")
    if not 0 <= r_th < 1:
        raise ValueError("r_th must be in [0, 1)")
    gamma_ex_eff = gamma_ex * (1.0 - r_th) / (1.0 + r_th)
    detuning = (omega_eg - np.asarray(omega, dtype=float)) / gamma2
    return 1.0 - (gamma_ex_eff / gamma2) * (1.0 - 1j * detuning) / (
        1.0 + saturation + detuning**2
    )


# ---------------------------------------------------------------------------
# Damped Gauss-Newton engine
# ---------------------------------------------------------------------------

MAX_ITERATIONS = 200
STEP_TOLERANCE = 1e-10


def _leastsq(residual_fn, p0, scales, max_iter=MAX_ITERATIONS):
    """Damped Gauss-Newton (Levenberg lambda schedule x10 / /10) on scaled parameters.

    ``residual_fn(p) -> 1-D real array`` may raise ``ValueError`` or
    ``FloatingPointError`` for invalid parameters; such steps are rejected.
    Returns ``(p_opt, covariance, residual_rms, n_iter)``.
    """
    p0 = np.asarray(p0, dtype=float)
    scales = np.asarray(scales, dtype=float)
    if np.any(scales <= 0):
        raise ValueError("parameter scales must be > 0")

    def cost_of(x):
        try:
            r = residual_fn(x * scales)
        except (ValueError, FloatingPointError, ZeroDivisionError):
            return None, np.inf
        if not np.all(np.isfinite(r)):
            return None, np.inf
        return r, float(r @ r)

    x = p0 / scales
    r, cost = cost_of(x)
    if r is None:
        raise FitConvergenceError("initial guess is outside the model domain")

    lam = 1e-3
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        jac = _jacobian(residual_fn, x, scales, r)
        jtj = jac.T @ jac
        g = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        cost_prev = cost
        for _ in range(60):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            r_new, cost_new = cost_of(x + step)
            if cost_new < cost:
                x = x + step
                r, cost = r_new, cost_new
                lam = max(lam / 10.0, 1e-14)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        if np.linalg.norm(step) < STEP_TOLERANCE * max(1.0, np.linalg.norm(x)):
            break
        if cost_prev - cost <= 1e-12 * cost_prev:
            break  # flat to machine-level improvement; treat as converged
    else:
        raise FitConvergenceError(
            f"no convergence after {max_iter} iterations",
            residual_rms=math.sqrt(cost / r.size),
        )

    jac = _jacobian(residual_fn, x, scales, r)
    dof = max(r.size - x.size, 1)
    sigma2 = cost / dof
    cov_scaled = _robust_inverse(jac.T @ jac) * sigma2
    cov = cov_scaled * np.outer(scales, scales)
    return x * scales, cov, math.sqrt(cost / r.size), n_iter


def _jacobian(residual_fn, x, scales, r0):
    h = 1e-7
    jac = np.empty((r0.size, x.size))
    for j in range(x.size):
        dx = h * max(abs(x[j]), 1.0)
        xp = x.copy()
        xp[j] += dx
        try:
            rp = residual_fn(xp * scales)
        except (ValueError, FloatingPointError, ZeroDivisionError):
            xp[j] -= 2 * dx
            rp = residual_fn(xp * scales)
            jac[:, j] = (r0 - rp) / dx
            continue
        jac[:, j] = (rp - r0) / dx
    return jac

def _robust_inverse(jtj):
    # Near-singular directions mean unidentifiable parameters; report them
    # with a huge variance instead of silently zeroing them out.
    eigval, eigvec = np.linalg.eigh(jtj)
    floor = max(eigval.max(), 1e-300) * 1e-14
    inv = 1.0 / np.maximum(eigval, floor)
    return (eigvec * inv) @ eigvec.T


def _stack_complex(z):
    return np.concatenate([z.real, z.imag])


def _background(freqs, scale, phase, delay, f_ref):
    # Phase is referenced to the band center; a phase at f = 0 would be
    # nearly collinear with the delay over a narrow band at GHz carriers.
    return scale * np.exp(1j * (phase - TWO_PI * (freqs - f_ref) * delay))


def _initial_background(trace: ComplexTrace):
    """Scale / center-phase / electrical-delay guess from the raw trace."""
    f_ref = float(trace.freqs.mean())
    phase = np.unwrap(np.angle(trace.values))
    slope, intercept = np.polyfit(trace.freqs - f_ref, phase, 1)
    delay = -slope / TWO_PI
    scale = float(np.median(np.abs(trace.values)))
    if scale <= 0:
        scale = 1.0
    return scale, float(intercept), delay


def _peak_and_width(freqs, weight):
    """Location of the extremum of ``weight`` and its FWHM (fallback: band/10)."""
    i0 = int(np.argmax(weight))
    peak = freqs[i0]
    half = weight[i0] / 2.0
    above = weight >= half
    if above.any():
        idx = np.nonzero(above)[0]
        width = freqs[idx[-1]] - freqs[idx[0]]
    else:
        width = 0.0
    if width <= 0:
        width = (freqs[-1] - freqs[0]) / 10.0
    return peak, width


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


def fit_resonator_ratio(trace: ComplexTrace, initial: dict | None = None) -> FitResult:
    """Fit the post-selected resonator-spectra ratio for (omega_r, kappa_ex, two_chi).

    Parameters are estimated together with a complex background
    (scale, phase offset, electrical delay) by damped least squares on
    stacked real/imaginary residuals.
    """
    initial = dict(initial or {})
    scale0, phase0, delay0 = _initial_background(trace)
    f_ref = float(trace.freqs.mean())
    normalized = trace.values / _background(trace.freqs, scale0, phase0, delay0, f_ref)
    peak, width = _peak_and_width(trace.freqs, np.abs(normalized - 1.0) ** 2)

    omega0 = initial.get("omega_r", peak)
    kappa0 = initial.get("kappa_ex", width)
    band = trace.freqs[-1] - trace.freqs[0]

    def residual(p):
        omega_r, kappa_ex, two_chi, scale, phase, delay = p
        if kappa_ex <= 0 or scale <= 0:
            raise ValueError("invalid parameters")
        model = s11_resonator_ratio_model(trace.freqs, omega_r, kappa_ex, two_chi)
        model = model * _background(trace.freqs, scale, phase, delay, f_ref)
        return _stack_complex(model - trace.values)

    scales = np.array(
        [max(omega0, 1.0), max(kappa0, 1.0), max(kappa0, 1.0), scale0, 1.0, max(abs(delay0), 1.0 / band)]
    )

    best = None
    chi_candidates = [initial["two_chi"]] if "two_chi" in initial else [-kappa0 / 4, kappa0 / 4]
    for chi0 in chi_candidates:
        p0 = [omega0, kappa0, chi0, scale0, phase0, delay0]
        try:
            sol = _leastsq(residual, p0, scales)
        except FitConvergenceError:
            continue
        if best is None or sol[2] < best[2]:
            best = sol
    if best is None:
        raise FitConvergenceError("resonator-ratio fit failed for all starting points")
    p, cov, rms, n_iter = best

    names = ["omega_r", "kappa_ex", "two_chi"]
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return FitResult(
        params={name: float(p[i]) for i, name in enumerate(names)},
        sigmas={name: float(sig[i]) for i, name in enumerate(names)},
        residual_rms=rms,
        nuisance={"scale": float(p[3]), "phase_offset": float(p[4]), "delay": float(p[5])},
        n_iterations=n_iter,
    )


def fit_single_pole_reflection(trace: ComplexTrace, initial: dict | None = None) -> FitResult:
    """Fit a bare single-pole reflection S11 for (omega_r, kappa_ex) plus background."""
    initial = dict(initial or {})
    scale0, phase0, delay0 = _initial_background(trace)
    f_ref = float(trace.freqs.mean())
    normalized = trace.values / _background(trace.freqs, scale0, phase0, delay0, f_ref)
    peak, width = _peak_and_width(trace.freqs, np.abs(normalized - 1.0) ** 2)
    omega0 = initial.get("omega_r", peak)
    kappa0 = initial.get("kappa_ex", width)
    band = trace.freqs[-1] - trace.freqs[0]

    def residual(p):
        omega_r, kappa_ex, scale, phase, delay = p
        if kappa_ex <= 0 or scale <= 0:
            raise ValueError("invalid parameters")
        model = s11_single_pole(trace.freqs, omega_r, kappa_ex)
        model = model * _background(trace.freqs, scale, phase, delay, f_ref)
        return _stack_complex(model - trace.values)

    scales = np.array([max(omega0, 1.0), max(kappa0, 1.0), scale0, 1.0, max(abs(delay0), 1.0 / band)])
    p, cov, rms, n_iter = _leastsq(residual, [omega0, kappa0, scale0, phase0, delay0], scales)
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return FitResult(
        params={"omega_r": float(p[0]), "kappa_ex": float(p[1])},
        sigmas={"omega_r": float(sig[0]), "kappa_ex": float(sig[1])},
        residual_rms=rms,
        nuisance={"scale": float(p[2]), "phase_offset": float(p[3]), "delay": float(p[4])},
        n_iterations=n_iter,
    )


def fit_qubit_reflection(trace: ComplexTrace, r_th: float, initial: dict | None = None) -> FitResult:
    """Fit the qubit reflection spectrum for (omega_eg, gamma_ex, gamma2, s).

    ``r_th`` must be measured independently; it converts the fitted effective
    decay rate back to gamma_ex.  The derived lifetime limit
    ``t_1ex = 1 / (2 pi gamma_ex)`` is reported alongside.
    """
    if not 0 <= r_th < 1:
        raise ValueError("r_th must be in [0, 1)")
    initial = dict(initial or {})
    scale0, phase0, delay0 = _initial_background(trace)
    f_ref = float(trace.freqs.mean())
    normalized = trace.values / _background(trace.freqs, scale0, phase0, delay0, f_ref)
    weight = np.abs(normalized - 1.0) ** 2
    peak, width = _peak_and_width(trace.freqs, weight)

    # The physical triple (gamma_eff, gamma2, s) spans a curved, nearly flat
    # valley.  Fit instead in (dip depth, magnitude width, gamma2), where the
    # dominant magnitude shape decouples from the phase tilt set by gamma2:
    #   model = 1 - depth * (1 - i (omega_eg - omega)/gamma2) / (1 + d^2/w^2)
    # with depth = gamma_eff/(gamma2 (1+s)) and w = gamma2 sqrt(1+s).
    omega0 = initial.get("omega_eg", peak)
    w0 = width / 1.3  # |trace-1|^2 of this lineshape has FWHM = 1.287 w
    depth0 = math.sqrt(float(weight.max()))
    if "gamma2" in initial and "s" in initial:
        g2_init = initial["gamma2"]
        w0 = g2_init * math.sqrt(1.0 + initial["s"])
    else:
        g2_init = initial.get("gamma2", w0)
    if "gamma_ex" in initial:
        geff = initial["gamma_ex"] * (1 - r_th) / (1 + r_th)
        depth0 = geff * g2_init / w0**2

    def model_of(p):
        omega_eg, depth, w_mag, gamma2, scale, phase, delay = p
        if w_mag <= 0 or gamma2 <= 0 or depth < 0 or scale <= 0:
            raise ValueError("invalid parameters")
        delta = omega_eg - trace.freqs
        shape = 1.0 - depth * (1.0 - 1j * delta / gamma2) / (1.0 + (delta / w_mag) ** 2)
        return shape * _background(trace.freqs, scale, phase, delay, f_ref)

    def residual(p):
        return _stack_complex(model_of(p) - trace.values)

    band = trace.freqs[-1] - trace.freqs[0]
    scales = np.array(
        [
            max(omega0, 1.0),
            max(depth0, 1e-3),
            max(w0, 1.0),
            max(g2_init, 1.0),
            scale0,
            1.0,
            max(abs(delay0), 1.0 / band),
        ]
    )
    p0 = [omega0, depth0, w0, g2_init, scale0, phase0, delay0]
    p, cov, rms, n_iter = _leastsq(residual, p0, scales)

    omega_eg, depth, w_mag, gamma2 = p[0], p[1], p[2], p[3]
    s = (w_mag / gamma2) ** 2 - 1.0
    gamma_eff = depth * w_mag**2 / gamma2
    thermal = (1 + r_th) / (1 - r_th)
    gamma_ex = gamma_eff * thermal

    # Covariance of the physical parameters by the delta method.
    grad = np.zeros((4, p.size))
    grad[0, 0] = 1.0
    grad[1, 1] = thermal * w_mag**2 / gamma2
    grad[1, 2] = thermal * 2.0 * depth * w_mag / gamma2
    grad[1, 3] = -thermal * depth * w_mag**2 / gamma2**2
    grad[2, 3] = 1.0
    grad[3, 2] = 2.0 * w_mag / gamma2**2
    grad[3, 3] = -2.0 * w_mag**2 / gamma2**3
    cov_phys = grad @ cov @ grad.T
    sig = np.sqrt(np.maximum(np.diag(cov_phys), 0.0))

    t_1ex = 1.0 / (TWO_PI * gamma_ex) if gamma_ex > 0 else math.inf
    sigma_t = sig[1] / (TWO_PI * gamma_ex**2) if gamma_ex > 0 else math.inf
    return FitResult(
        params={
            "omega_eg": float(omega_eg),
            "gamma_ex": float(gamma_ex),
            "gamma2": float(gamma2),
            "s": float(s),
            "t_1ex": float(t_1ex),
        },
        sigmas={
            "omega_eg": float(sig[0]),
            "gamma_ex": float(sig[1]),
            "gamma2": float(sig[2]),
            "s": float(sig[3]),
            "t_1ex": float(sigma_t),
        },
        residual_rms=rms,
        nuisance={"scale": float(p[4]), "phase_offset": float(p[5]), "delay": float(p[6])},
        n_iterations=n_iter,
    )


# ---------------------------------------------------------------------------
# Drive calibration
# ---------------------------------------------------------------------------


def coupling_from_drive(omega_d: float, amplitude: float, power: float) -> float:
    """External coupling rate (Hz) from drive amplitude (Hz) and power at the device (W).

    Implements Gamma_ex = (Omega^2 / 4) * (hbar omega_d / P) with both
    frequencies converted to angular units internally.
    """
    if not power > 0:
        raise ValueError("power must be > 0")
    if not omega_d > 0:
        raise ValueError("omega_d must be > 0")
    omega_ang = TWO_PI * omega_d
    amp_ang = TWO_PI * amplitude
    gamma_ang = (amp_ang**2 / 4.0) * (hbar * omega_ang / power)
    return gamma_ang / TWO_PI


def omega_from_stark(omega_d: float, omega_eg: float, omega_fe: float, stark_shift: float) -> float:
    """Drive amplitude (Hz) from the ac Stark shift of the ge transition.

    Valid in the perturbative regime Omega << |omega_fe - omega_d|,
    |omega_eg - omega_d|.  Raises if the shift sign is incompatible with the
    detunings (negative radicand).
    """
    if omega_d == omega_eg or omega_d == omega_fe:
        raise ValueError("drive frequency coincides with a transition frequency")
    if omega_fe == omega_eg:
        raise ValueError("zero anharmonicity")
    radicand = (
        2.0 * (omega_fe - omega_d) * (omega_eg - omega_d) / (omega_fe - omega_eg) * stark_shift
    )
    if radicand < 0:
        raise ValueError(
            "stark shift sign is inconsistent with the drive detunings "
            f"(radicand = {radicand:.3e})"
        )
    return math.sqrt(radicand)


def omega_from_rabi(rabi_freq: float, transition: str) -> float:
    """Drive amplitude (Hz) from an observed Rabi frequency.

    The ef matrix element is sqrt(2) times the ge one, so an ef Rabi
    oscillation at f corresponds to amplitude f / sqrt(2).
    """
    if rabi_freq < 0:
        raise ValueError("rabi_freq must be >= 0")
    if transition == "ge":
        return rabi_freq
    if transition == "ef":
        return rabi_freq / math.sqrt(2.0)
    raise ValueError(f"unknown transition {transition!r}")


def g_from_dispersive_shift(two_chi: float, delta: float, alpha: float) -> float:
    """Qubit-resonator coupling g (Hz) from the dispersive shift.

    Inverts chi = g^2 alpha / (Delta (Delta + alpha)) with chi = two_chi / 2.
    """
    if delta == 0 or alpha == 0 or delta + alpha == 0:
        raise ValueError("delta, alpha and delta + alpha must be nonzero")
    chi = two_chi / 2.0
    g_squared = chi * delta * (delta + alpha) / alpha
    if g_squared < 0:
        raise ValueError("sign-inconsistent inputs: g^2 < 0")
    return math.sqrt(g_squared)


def dispersive_shift_from_g(g: float, delta: float, alpha: float) -> float:
    """Forward formula 2 chi = 2 g^2 alpha / (Delta (Delta + alpha)), all in Hz."""
    if delta == 0 or delta + alpha == 0:
        raise ValueError("delta and delta + alpha must be nonzero")
    return 2.0 * g**2 * alpha / (delta * (delta + alpha))


def line_attenuation(power_at_device: float, power_at_fridge_input: float) -> float:
    """Cryogenic-line attenuation in dB from powers at the device and at the fridge input."""
    if not power_at_device > 0 or not power_at_fridge_input > 0:
        raise ValueError("powers must be > 0")
    return 10.0 * math.log10(power_at_fridge_input / power_at_device)


def attenuation_is_flat(freqs_hz, attenuation_db, threshold_db: float) -> bool:
    """True when a measured attenuation table varies by no more than ``threshold_db``."""
    att = np.asarray(attenuation_db, dtype=float)
    if att.size == 0:
        raise ValueError("empty attenuation table")
    return float(att.max() - att.min()) <= threshold_db


def transmission_point(drive: DriveSpec, omega_eg: float, omega_fe: float) -> tuple[float, float]:
    """(omega_d, Gamma_ex) from one calibration point.

    Uses the measured Rabi amplitude when present, otherwise inverts the
    Stark shift.
    """
    if drive.amplitude > 0:
        amp = drive.amplitude
    elif drive.stark_shift != 0:
        amp = omega_from_stark(drive.omega_d, omega_eg, omega_fe, drive.stark_shift)
    else:
        raise ValueError("drive point needs either amplitude or stark_shift")
    return drive.omega_d, coupling_from_drive(drive.omega_d, amp, drive.power)
