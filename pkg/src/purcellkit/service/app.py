"""HTTP endpoints wrapping the core package.

Error mapping: invalid input -> 400/422, numerical failure -> 500 with a
structured detail, model inconsistency or infeasibility -> 409.  The
service is stateless; every request carries its full configuration.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import budget as budget_mod
from .. import netmodel, spectra
from .. import dynamics as dyn
from ..errors import (
    FitConvergenceError,
    FitQualityError,
    InconsistentStatsError,
    InfeasibleModelError,
    IntegrationError,
    PoleConditionError,
)
from . import schemas

TWO_PI = 2.0 * math.pi


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, InfeasibleModelError):
        return HTTPException(
            status_code=409,
            detail={"error": str(exc), "kind": "infeasible", "certificate": exc.certificate},
        )
    if isinstance(exc, InconsistentStatsError):
        return HTTPException(status_code=409, detail={"error": str(exc), "kind": "inconsistent"})
    if isinstance(exc, (FitConvergenceError, FitQualityError, IntegrationError, PoleConditionError)):
        return HTTPException(status_code=500, detail={"error": str(exc), "kind": "numeric"})
    if isinstance(exc, ValueError):
        return HTTPException(status_code=400, detail={"error": str(exc), "kind": "input"})
    raise exc


def _interval_out(value: budget_mod.Interval) -> schemas.IntervalOut:
    return schemas.IntervalOut(lo=value.lo, hi=value.hi)


def create_app() -> FastAPI:
    app = FastAPI(title="purcellkit", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- network -----------------------------------------------------------

    @app.post("/network/spectrum", response_model=schemas.SpectrumResponse)
    def network_spectrum(req: schemas.SpectrumRequest):
        try:
            net = req.network.to_core()
            device = req.device.to_core()
            w = TWO_PI * np.linspace(req.band_lo_hz, req.band_hi_hz, req.points)
            gamma = netmodel.external_coupling_rate(net, w, scaling=req.scaling)
            g_ang = TWO_PI * device.g
            kappa_ang = TWO_PI * device.kappa_ex
            delta = w - TWO_PI * device.omega_r
            with np.errstate(divide="ignore", invalid="ignore"):
                single = np.where(delta != 0, (g_ang / delta) ** 2 * kappa_ang, np.nan)
                suppression = single / gamma
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        rows = []
        for i in range(req.points):
            supp = float(suppression[i])
            rows.append(
                schemas.SpectrumRow(
                    freq_hz=float(w[i] / TWO_PI),
                    gamma_ex_hz=float(gamma[i] / TWO_PI),
                    single_mode_hz=float(single[i] / TWO_PI),
                    suppression=supp if math.isfinite(supp) else None,
                )
            )
        return schemas.SpectrumResponse(rows=rows)

    @app.post("/network/notch", response_model=schemas.ScalarResponse)
    def network_notch(req: schemas.NotchRequest):
        try:
            value = netmodel.find_notch(
                req.network.to_core(), (TWO_PI * req.band_lo_hz, TWO_PI * req.band_hi_hz)
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return schemas.ScalarResponse(value=None if value is None else value / TWO_PI)

    @app.post("/network/optimize-coupler", response_model=schemas.ScalarResponse)
    def network_optimize(req: schemas.OptimizeCouplerRequest):
        try:
            position = netmodel.optimize_coupler_position(
                req.network.to_core(), TWO_PI * req.target_hz
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return schemas.ScalarResponse(value=position)

    @app.post("/network/mode-params", response_model=schemas.ModeParamsResponse)
    def network_mode_params(req: schemas.ModeParamsRequest):
        try:
            omega_r, kappa_ex = netmodel.resonator_mode_params(
                req.network.to_core(), include_qubit=req.include_qubit
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return schemas.ModeParamsResponse(omega_r_hz=omega_r / TWO_PI, kappa_ex_hz=kappa_ex / TWO_PI)

    # -- fits ---------------------------------------------------------------

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit(req: schemas.FitRequest):
        try:
            trace = req.trace.to_core()
            if req.mode == "resonator-ratio":
                result = spectra.fit_resonator_ratio(trace, initial=req.initial)
            elif req.mode == "qubit-reflection":
                if req.r_th is None:
                    raise ValueError("qubit-reflection fit requires r_th")
                result = spectra.fit_qubit_reflection(trace, req.r_th, initial=req.initial)
            else:
                raise ValueError(f"unknown fit mode {req.mode!r}")
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return schemas.FitResponse(
            params=result.params,
            sigmas=result.sigmas,
            residual_rms=result.residual_rms,
            nuisance=result.nuisance,
            n_iterations=result.n_iterations,
        )

    # -- simulations ---------------------------------------------------------

    @app.post("/simulate/rabi", response_model=schemas.RabiResponse)
    def simulate_rabi(req: schemas.RabiRequest):
        try:
            model = dyn.build_model(req.device.to_core(), req.n_transmon, req.n_fock)
            drive = req.drive_hz
            if drive is None:
                drive = model.qubit_frequency(req.transition)
            result = dyn.simulate_rabi(
                model, drive, req.amplitude_hz, np.array(req.durations_s), req.transition
            )
            amplitude = spectra.omega_from_rabi(result.rabi_freq, req.transition)
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return schemas.RabiResponse(
            rabi_freq_hz=result.rabi_freq,
            amplitude_hz=amplitude,
            times_s=result.times.tolist(),
            populations=result.populations.tolist(),
        )

    @app.post("/simulate/stark", response_model=schemas.StarkResponse)
    def simulate_stark(req: schemas.StarkRequest):
        try:
            model = dyn.build_model(req.device.to_core(), req.n_transmon, req.n_fock)
            result = dyn.simulate_stark_ramsey(
                model, req.drive_hz, req.amplitude_hz, power_proxy=req.power_w
            )
            try:
                amp = spectra.omega_from_stark(
                    req.drive_hz,
                    model.qubit_frequency("ge"),
                    model.qubit_frequency("ef"),
                    result.stark_shift,
                )
            except ValueError:
                amp = None
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return schemas.StarkResponse(
            stark_shift_hz=result.stark_shift,
            amplitude_from_shift_hz=amp,
            gamma_ex_hz=result.gamma_ex,
        )

    @app.post("/simulate/readout", response_model=schemas.ReadoutSimResponse)
    def simulate_readout(req: schemas.ReadoutSimRequest):
        try:
            device = req.device.to_core()
            model = dyn.build_model(device, req.n_transmon, req.n_fock)
            kappa_ang = TWO_PI * model.kappa_ex
            amplitude = req.probe_amplitude_hz
            if amplitude is None:
                # default to the steady state at 1.5x the critical photon number
                _, n_crit = dyn.steady_state_photons(model, 0.0)
                amplitude = math.sqrt(1.5 * n_crit) * kappa_ang / 2.0 / TWO_PI
            carrier = 0.5 * (model.resonator_frequency(0) + model.resonator_frequency(1))
            probe = dyn.ProbeSpec(carrier=carrier, amplitude=amplitude, duration=req.probe_duration_s)
            sim = dyn.simulate_probe_reflection(model, probe, qubit_state="both")
            disc = dyn.readout_discrimination(
                sim,
                sim,
                noise_sigma=req.noise_sigma,
                n_shots=req.n_shots,
                seed=req.seed,
                filter_bandwidth=req.filter_bandwidth_hz,
            )
            stats = dyn.stats_from_discrimination(
                model, disc, tau_ro=req.tau_ro_s, pi_error=req.pi_error
            )
            n_bar, n_crit = dyn.steady_state_photons(model, amplitude)
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        import dataclasses

        return schemas.ReadoutSimResponse(
            p_e_given_g=disc.p_e_given_g,
            p_g_given_e=disc.p_g_given_e,
            predicted_separation_error=disc.predicted_separation_error,
            threshold=disc.threshold,
            histogram=schemas.HistogramOut(
                bin_centers=disc.bin_centers.tolist(),
                counts_g=disc.counts_g.tolist(),
                counts_e=disc.counts_e.tolist(),
            ),
            stats=schemas.StatsIn(**dataclasses.asdict(stats)),
            n_bar=n_bar,
            n_crit=n_crit,
        )

    @app.post("/simulate/reset", response_model=schemas.ResetResponse)
    def simulate_reset(req: schemas.ResetRequest):
        try:
            model = dyn.build_model(req.device.to_core(), req.n_transmon, req.n_fock)
            f0g1 = model.transition_frequency((2, 0), (0, 1)) + req.f0g1_offset_hz
            e0f0 = model.qubit_frequency("ef") + req.e0f0_offset_hz
            result = dyn.simulate_reset(
                model,
                (f0g1, req.f0g1_amplitude_hz),
                (e0f0, req.e0f0_amplitude_hz),
                np.array(req.durations_s),
                initial=req.initial,
                edge=req.edge_s,
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        return schemas.ResetResponse(
            durations_s=result.durations.tolist(),
            residual=result.residual.tolist(),
            populations=result.populations.tolist(),
            f0g1_drive_hz=f0g1,
            e0f0_drive_hz=e0f0,
        )

    # -- budget ---------------------------------------------------------------

    @app.post("/budget", response_model=schemas.BudgetResponse)
    def budget(req: schemas.BudgetRequest):
        try:
            report = budget_mod.analyze_stats(
                req.stats.to_core(), req.device.to_core(), tau_ro=req.tau_ro_s
            )
        except Exception as exc:  # noqa: BLE001
            raise _http_error(exc) from exc
        em = report.error_model
        import dataclasses

        return schemas.BudgetResponse(
            fidelity=report.fidelity,
            qnd_fidelity=report.qnd_fidelity,
            error_model={
                "eps_sep_ge": em.eps_sep_ge,
                "eps_sep_eg": em.eps_sep_eg,
                "eps_flip1_ge": _interval_out(em.eps_flip1_ge),
                "eps_flip1_eg": _interval_out(em.eps_flip1_eg),
                "eps_flip2_ge": _interval_out(em.eps_flip2_ge),
                "eps_flip2_eg": _interval_out(em.eps_flip2_eg),
                "eps_pi_gg": _interval_out(em.eps_pi_gg),
                "eps_pi_ee": _interval_out(em.eps_pi_ee),
            },
            origins=dataclasses.asdict(report.origins),
            f_budget={row.name: _interval_out(row.value) for row in report.f_budget},
            q_budget={row.name: _interval_out(row.value) for row in report.q_budget},
            readout_error_g_as_e=_interval_out(report.readout_error_g_as_e),
            readout_error_e_as_g=_interval_out(report.readout_error_e_as_g),
            notes=list(report.notes),
            text_tables=budget_mod.render_budget_text(report),
        )

    return app


app = create_app()
