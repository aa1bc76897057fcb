"""Single-shot discrimination of the demodulated readout signal.

The amplifier chain is modeled as an ideal phase-sensitive stage: one
quadrature is selected (the one maximizing the g/e waveform contrast) and
optionally low-pass filtered with a single pole to mimic the finite
amplifier bandwidth.  Shots are the mean waveform of the prepared state
plus additive white Gaussian noise per sample on the amplified quadrature;
each shot is integrated against the matched-filter weights (the difference
of the mean waveforms) and thresholded at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolve import SimResult
from .model import LindbladModel

TWO_PI = 2.0 * math.pi

SHOT_CHUNK = 2048


@dataclass
class DiscriminationResult:
    bin_centers: np.ndarray
    counts_g: np.ndarray
    counts_e: np.ndarray
    threshold: float
    p_e_given_g: float
    p_g_given_e: float
    predicted_separation_error: float
    quadrature_angle: float
    signal_distance: float
    sigma_integrated: float
    weights: np.ndarray
    times: np.ndarray


def _single_pole_lowpass(x: np.ndarray, dt: float, bandwidth: float) -> np.ndarray:
    a = 1.0 - math.exp(-TWO_PI * bandwidth * dt)
    out = np.empty_like(x)
    acc = 0.0
    for i, value in enumerate(x):
        acc += a * (value - acc)
        out[i] = acc
    return out


def _output_record(result: SimResult, branch: str) -> np.ndarray:
    if branch in result.output_records:
        return result.output_records[branch]
    if len(result.output_records) == 1:
        return next(iter(result.output_records.values()))
    raise ValueError(f"waveform for branch {branch!r} not found in SimResult")


def readout_discrimination(
    waveform_g: SimResult,
    waveform_e: SimResult,
    noise_sigma: float,
    n_shots: int,
    seed: int,
    filter_bandwidth: float | None = None,
    n_bins: int = 61,
) -> DiscriminationResult:
    """Histogram and conditional error probabilities of the thresholded readout.

    ``noise_sigma`` is the white-noise standard deviation per sample of the
    amplified quadrature.  The RNG is counter-based (Philox) and the seed is
    mandatory, so histograms are bit-reproducible.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    times = waveform_g.times
    if times.shape != waveform_e.times.shape or not np.allclose(times, waveform_e.times):
        raise ValueError("g and e waveforms must share a time grid")
    dt = float(np.mean(np.diff(times)))

    out_g = _output_record(waveform_g, "g")
    out_e = _output_record(waveform_e, "e")
    diff = out_e - out_g
    theta = 0.5 * np.angle(np.sum(diff**2 * dt))
    i_g = np.real(np.exp(-1j * theta) * out_g)
    i_e = np.real(np.exp(-1j * theta) * out_e)
    if filter_bandwidth is not None:
        i_g = _single_pole_lowpass(i_g, dt, filter_bandwidth)
        i_e = _single_pole_lowpass(i_e, dt, filter_bandwidth)

    weights = i_e - i_g
    midpoint = 0.5 * (i_e + i_g)
    mu_e = float(np.sum(weights * (i_e - midpoint)) * dt)
    mu_g = float(np.sum(weights * (i_g - midpoint)) * dt)
    distance = mu_e - mu_g
    sigma_int = noise_sigma * math.sqrt(float(np.sum(weights**2))) * dt

    rng = np.random.Generator(np.random.Philox(seed))
    shots = {}
    for label, mean in (("g", mu_g), ("e", mu_e)):
        values = np.empty(n_shots)
        done = 0
        while done < n_shots:
            block = min(SHOT_CHUNK, n_shots - done)
            noise = rng.standard_normal((block, times.size))
            values[done : done + block] = mean + noise @ weights * (noise_sigma * dt)
            done += block
        shots[label] = values

    threshold = 0.0
    p_e_given_g = float(np.mean(shots["g"] > threshold))
    p_g_given_e = float(np.mean(shots["e"] <= threshold))

    lo = min(shots["g"].min(), shots["e"].min())
    hi = max(shots["g"].max(), shots["e"].max())
    edges = np.linspace(lo, hi, n_bins + 1)
    counts_g, _ = np.histogram(shots["g"], bins=edges)
    counts_e, _ = np.histogram(shots["e"], bins=edges)

    if sigma_int > 0:
        predicted = 0.5 * math.erfc((distance / 2.0) / (sigma_int * math.sqrt(2.0)))
    else:
        predicted = 0.0
    return DiscriminationResult(
        bin_centers=0.5 * (edges[:-1] + edges[1:]),
        counts_g=counts_g,
        counts_e=counts_e,
        threshold=threshold,
        p_e_given_g=p_e_given_g,
        p_g_given_e=p_g_given_e,
        predicted_separation_error=predicted,
        quadrature_angle=float(theta),
        signal_distance=distance,
        sigma_integrated=sigma_int,
        weights=weights,
        times=times,
    )


def stats_from_discrimination(
    model: LindbladModel,
    disc: DiscriminationResult,
    tau_ro: float = 120e-9,
    pi_error: float = 1e-3,
    back_action_ge: float = 0.0,
    back_action_eg: float = 0.0,
):
    """Compose repeated-readout statistics from a simulated discrimination.

    Separation errors come from the simulated histograms; state-flip errors
    from the device decay rates over the readout duration ``tau_ro`` (split
    evenly between the early and late halves) plus optional back-action
    terms.  The result feeds the error-budget pipeline directly.
    """
    from ..budget import TrueErrorRates, synthesize_stats

    down = (tau_ro / model.t1) / (1.0 + model.r_th)
    up = model.r_th * down
    flip_eg = down + back_action_eg
    flip_ge = up + back_action_ge
    rates = TrueErrorRates(
        eps_sep_ge=disc.p_e_given_g,
        eps_sep_eg=disc.p_g_given_e,
        eps_flip1_ge=flip_ge / 2.0,
        eps_flip1_eg=flip_eg / 2.0,
        eps_flip2_ge=flip_ge / 2.0,
        eps_flip2_eg=flip_eg / 2.0,
        eps_pi_gg=pi_error,
        eps_pi_ee=pi_error,
        r_th=model.r_th,
    )
    return synthesize_stats(rates)
