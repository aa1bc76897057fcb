"""JSON and CSV serialization for the toolkit's document types.

Every JSON document carries a ``schema_version`` field and unknown keys are
rejected, so unit mistakes fail loudly instead of propagating.  All
frequencies are in Hz, times in seconds, powers in watts, lengths in meters,
capacitances in farads.  CSV numeric output uses scientific notation with
12 significant digits so reruns are byte-identical.

Writes are atomic: content goes to a temporary file in the target directory
followed by an ``os.replace``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .budget import BudgetReport, Interval, ReadoutStats
from .netmodel import NetworkSpec, TLSegment
from .spectra import ComplexTrace, DeviceParams, FitResult

SCHEMA_VERSION = 1

NUMBER_FORMAT = "{:.11e}"


# ---------------------------------------------------------------------------
# Atomic writes
# ---------------------------------------------------------------------------


def atomic_write_text(path: str | Path, content: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _check_schema(doc: dict, kind: str) -> dict:
    if not isinstance(doc, dict):
        raise ValueError(f"{kind}: expected a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{kind}: schema_version must be {SCHEMA_VERSION}, got {version!r}")
    return {k: v for k, v in doc.items() if k != "schema_version"}


def _reject_unknown(kind: str, payload: dict, allowed) -> None:
    unknown = set(payload) - set(allowed)
    if unknown:
        raise ValueError(f"{kind}: unknown fields {sorted(unknown)}")


# ---------------------------------------------------------------------------
# NetworkSpec
# ---------------------------------------------------------------------------

_SEGMENT_FIELDS = ("z0", "length", "phase_velocity", "loss")
_NETWORK_FIELDS = (
    "resonator_segments",
    "coupler_position",
    "coupler_capacitance",
    "output_impedance",
    "qubit_coupling_capacitance",
    "transmon_capacitance",
    "josephson_energy",
)


def network_to_json(net: NetworkSpec) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "resonator_segments": [
            {f: getattr(seg, f) for f in _SEGMENT_FIELDS} for seg in net.resonator_segments
        ],
        "coupler_position": net.coupler_position,
        "coupler_capacitance": net.coupler_capacitance,
        "output_impedance": net.output_impedance,
        "qubit_coupling_capacitance": net.qubit_coupling_capacitance,
        "transmon_capacitance": net.transmon_capacitance,
        "josephson_energy": net.josephson_energy,
    }
    return dump_json(payload)


def network_from_json(text: str) -> NetworkSpec:
    payload = _check_schema(json.loads(text), "NetworkSpec")
    _reject_unknown("NetworkSpec", payload, _NETWORK_FIELDS)
    segments = []
    for raw in payload.pop("resonator_segments"):
        _reject_unknown("TLSegment", raw, _SEGMENT_FIELDS)
        segments.append(TLSegment(**raw))
    return NetworkSpec(resonator_segments=tuple(segments), **payload)


# ---------------------------------------------------------------------------
# DeviceParams
# ---------------------------------------------------------------------------

_DEVICE_FIELDS = tuple(f.name for f in dataclasses.fields(DeviceParams))


def device_to_json(device: DeviceParams) -> str:
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(dataclasses.asdict(device))
    return dump_json(payload)


def device_from_json(text: str) -> DeviceParams:
    payload = _check_schema(json.loads(text), "DeviceParams")
    _reject_unknown("DeviceParams", payload, _DEVICE_FIELDS)
    return DeviceParams(**payload)


# ---------------------------------------------------------------------------
# ReadoutStats
# ---------------------------------------------------------------------------

_STATS_FIELDS = tuple(f.name for f in dataclasses.fields(ReadoutStats))


def stats_to_json(stats: ReadoutStats) -> str:
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(dataclasses.asdict(stats))
    return dump_json(payload)


def stats_from_json(text: str) -> ReadoutStats:
    payload = _check_schema(json.loads(text), "ReadoutStats")
    _reject_unknown("ReadoutStats", payload, _STATS_FIELDS)
    return ReadoutStats(**payload)


def stats_from_csv(text: str) -> ReadoutStats:
    """Two-column ``name,value`` table with the ReadoutStats field names."""
    values: dict[str, float] = {}
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().startswith("#"):
            continue
        if len(row) != 2:
            raise ValueError(f"ReadoutStats CSV: expected name,value rows, got {row!r}")
        values[row[0].strip()] = float(row[1])
    _reject_unknown("ReadoutStats", values, _STATS_FIELDS)
    return ReadoutStats(**values)


# ---------------------------------------------------------------------------
# FitResult / BudgetReport
# ---------------------------------------------------------------------------


def fit_result_to_json(fit: FitResult) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "params": fit.params,
        "sigmas": fit.sigmas,
        "residual_rms": fit.residual_rms,
        "nuisance": fit.nuisance,
        "n_iterations": fit.n_iterations,
    }
    return dump_json(payload)


def _interval_payload(value: Interval) -> dict:
    return {"lo": value.lo, "hi": value.hi}


def budget_report_to_json(report: BudgetReport) -> str:
    em = report.error_model
    payload = {
        "schema_version": SCHEMA_VERSION,
        "fidelity": report.fidelity,
        "qnd_fidelity": report.qnd_fidelity,
        "error_model": {
            "eps_sep_ge": em.eps_sep_ge,
            "eps_sep_eg": em.eps_sep_eg,
            "eps_flip1_ge": _interval_payload(em.eps_flip1_ge),
            "eps_flip1_eg": _interval_payload(em.eps_flip1_eg),
            "eps_flip2_ge": _interval_payload(em.eps_flip2_ge),
            "eps_flip2_eg": _interval_payload(em.eps_flip2_eg),
            "eps_pi_gg": _interval_payload(em.eps_pi_gg),
            "eps_pi_ee": _interval_payload(em.eps_pi_ee),
        },
        "origins": dataclasses.asdict(report.origins),
        "f_budget": {row.name: _interval_payload(row.value) for row in report.f_budget},
        "q_budget": {row.name: _interval_payload(row.value) for row in report.q_budget},
        "readout_error_g_as_e": _interval_payload(report.readout_error_g_as_e),
        "readout_error_e_as_g": _interval_payload(report.readout_error_e_as_g),
        "notes": list(report.notes),
    }
    return dump_json(payload)


# ---------------------------------------------------------------------------
# CSV traces
# ---------------------------------------------------------------------------


def format_number(x: float) -> str:
    return NUMBER_FORMAT.format(x)


def table_to_csv(header: list[str], columns: list[np.ndarray]) -> str:
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise ValueError("columns must have equal length")
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in zip(*columns):
        out.write(",".join(format_number(float(x)) for x in row) + "\n")
    return out.getvalue()


def value_trace_to_csv(freqs_hz: np.ndarray, values: np.ndarray) -> str:
    """Real-valued spectrum as ``freq_hz,value``."""
    return table_to_csv(["freq_hz", "value"], [np.asarray(freqs_hz), np.asarray(values, dtype=float)])


def complex_trace_to_csv(trace: ComplexTrace) -> str:
    return table_to_csv(
        ["freq_hz", "re", "im"],
        [trace.freqs, trace.values.real, trace.values.imag],
    )


def complex_trace_from_csv(text: str) -> ComplexTrace:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["freq_hz", "re", "im"]:
        raise ValueError("trace CSV must have header 'freq_hz,re,im'")
    freqs, values = [], []
    for row in reader:
        if not row:
            continue
        freqs.append(float(row[0]))
        values.append(float(row[1]) + 1j * float(row[2]))
    if len(freqs) < 2:
        raise ValueError("trace CSV needs at least 2 data rows")
    return ComplexTrace(freqs=np.array(freqs), values=np.array(values))


def sim_result_to_csv(times: np.ndarray, populations: np.ndarray | None, cavity) -> str:
    """Time series as ``time_s,p_g,p_e,p_f,p_h,re_alpha,im_alpha``.

    Missing transmon levels are written as zero columns; ``cavity`` may be
    ``None`` when no cavity record applies.
    """
    n = len(times)
    pops = np.zeros((n, 4))
    if populations is not None:
        k = min(populations.shape[1], 4)
        pops[:, :k] = populations[:, :k]
    if cavity is None:
        cavity = np.zeros(n, dtype=complex)
    return table_to_csv(
        ["time_s", "p_g", "p_e", "p_f", "p_h", "re_alpha", "im_alpha"],
        [np.asarray(times), pops[:, 0], pops[:, 1], pops[:, 2], pops[:, 3],
         np.asarray(cavity).real, np.asarray(cavity).imag],
    )


def histogram_to_csv(bin_centers: np.ndarray, counts_g: np.ndarray, counts_e: np.ndarray) -> str:
    return table_to_csv(
        ["bin_center", "count_g", "count_e"],
        [np.asarray(bin_centers), np.asarray(counts_g, dtype=float), np.asarray(counts_e, dtype=float)],
    )
