"""Master-equation integration in a rotating frame.

The frame rotates the transmon and cavity at (generally common) reference
frequencies, which keeps the exchange coupling static; drive terms keep
their exact time dependence relative to the frame (only the counter-rotating
components at the sum frequency are dropped).  Populations are invariant
under these diagonal frames.

Integration uses an embedded Dormand-Prince 4(5) pair on the vectorized
density matrix with step rejection on both the local error estimate and on
trace drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import IntegrationError
from .model import LindbladModel, warn_if_truncated

TWO_PI = 2.0 * math.pi

TRACE_TOL = 1e-9
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-12
MAX_STEPS = 5_000_000


@dataclass(frozen=True)
class Pulse:
    """One drive tone with a square, gaussian or flat-top envelope.

    ``carrier`` and ``amplitude`` in Hz, times in seconds.  ``edge`` is the
    raised-cosine ramp length of the flat-top envelope; ``sigma`` the
    gaussian width.
    """

    carrier: float
    amplitude: float
    start: float
    duration: float
    target: str = "transmon"
    envelope: str = "square"
    phase: float = 0.0
    edge: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.target not in ("transmon", "cavity"):
            raise ValueError(f"unknown target {self.target!r}")
        if self.envelope not in ("square", "gaussian", "flat_top"):
            raise ValueError(f"unknown envelope {self.envelope!r}")

    @property
    def stop(self) -> float:
        return self.start + self.duration

    def shape(self, t: float) -> float:
        """Dimensionless envelope value at time ``t``."""
        if not self.start <= t < self.stop:
            return 0.0
        if self.envelope == "square":
            return 1.0
        if self.envelope == "gaussian":
            sigma = self.sigma if self.sigma is not None else self.duration / 6.0
            mid = self.start + self.duration / 2.0
            return math.exp(-0.5 * ((t - mid) / sigma) ** 2)
        edge = self.edge if self.edge is not None else self.duration / 8.0
        edge = min(edge, self.duration / 2.0)
        if edge <= 0:
            return 1.0
        rel = t - self.start
        if rel < edge:
            return 0.5 * (1.0 - math.cos(math.pi * rel / edge))
        if rel > self.duration - edge:
            return 0.5 * (1.0 - math.cos(math.pi * (self.duration - rel) / edge))
        return 1.0


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple[Pulse, ...]

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))

    def __iter__(self):
        return iter(self.pulses)

    def __len__(self):
        return len(self.pulses)

    @property
    def carriers(self) -> tuple[float, ...]:
        return tuple(p.carrier for p in self.pulses)

    def overlapping_pairs(self) -> list[tuple[int, int]]:
        """Indices of simultaneously active pulses (allowed, but flagged here)."""
        pairs = []
        for i in range(len(self.pulses)):
            for j in range(i + 1, len(self.pulses)):
                a, b = self.pulses[i], self.pulses[j]
                if a.start < b.stop and b.start < a.stop:
                    pairs.append((i, j))
        return pairs

    @classmethod
    def empty(cls) -> "PulseSequence":
        return cls(pulses=())


@dataclass
class SimResult:
    """Time-domain simulation output.

    ``populations`` holds the transmon-level marginals (n_times x n_levels)
    for master-equation runs and is ``None`` for semiclassical branch runs.
    ``cavity_amplitude`` and ``output_records`` are keyed by branch name
    ('mean' for master-equation runs, 'g'/'e'/'diff' for probe runs).
    """

    times: np.ndarray
    populations: np.ndarray | None
    cavity_amplitude: dict[str, np.ndarray] = field(default_factory=dict)
    output_records: dict[str, np.ndarray] = field(default_factory=dict)
    rhos: np.ndarray | None = None
    frame: tuple[float, float] | None = None
    n_steps: int = 0
    n_rejected: int = 0
    max_trace_error: float = 0.0


# ---------------------------------------------------------------------------
# Superoperator assembly
# ---------------------------------------------------------------------------


def _hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _dissipator_superop(op: np.ndarray) -> np.ndarray:
    eye = np.eye(op.shape[0])
    opdag_op = op.conj().T @ op
    return (
        np.kron(op, op.conj())
        - 0.5 * np.kron(opdag_op, eye)
        - 0.5 * np.kron(eye, opdag_op.T)
    )


@dataclass
class _DriveTerm:
    sp: np.ndarray       # superoperator of the raising part
    sm: np.ndarray       # superoperator of the lowering part
    delta: float         # carrier - frame, angular
    phase: float
    pulse: Pulse

    def coefficient(self, t: float) -> complex:
        shape = self.pulse.shape(t)
        if shape == 0.0:
            return 0.0j
        amp = TWO_PI * self.pulse.amplitude * shape
        return 0.5 * amp * np.exp(-1j * (self.delta * t + self.phase))


def resolve_frame(model: LindbladModel, seq: PulseSequence, frame) -> tuple[float, float]:
    """Rotation frequencies (Hz) for the transmon and cavity registers."""
    if frame != "auto":
        f_t, f_c = frame
        if model.g != 0 and f_t != f_c:
            raise ValueError("a coupled model needs a common rotating frame")
        return float(f_t), float(f_c)
    carriers = set(seq.carriers)
    if len(carriers) == 1:
        f = carriers.pop()
        return f, f
    if model.g == 0 and not carriers:
        return model.omega_eg, model.omega_r
    f = model.omega_eg
    return f, f


def _build_generator(model: LindbladModel, seq: PulseSequence, frame: tuple[float, float]):
    f_t, f_c = frame
    h_frame = (
        model.hamiltonian
        - TWO_PI * f_t * model.number_transmon
        - TWO_PI * f_c * model.number_cavity
    )
    l0 = _hamiltonian_superop(h_frame)
    for op in model.collapse_ops:
        l0 += _dissipator_superop(op)

    drives = []
    for pulse in seq:
        lower = model.b if pulse.target == "transmon" else model.a
        raise_op = lower.conj().T
        f_ref = f_t if pulse.target == "transmon" else f_c
        drives.append(
            _DriveTerm(
                sp=_hamiltonian_superop(raise_op),
                sm=_hamiltonian_superop(lower),
                delta=TWO_PI * (pulse.carrier - f_ref),
                phase=pulse.phase,
                pulse=pulse,
            )
        )
    return l0, drives


# ---------------------------------------------------------------------------
# Dormand-Prince 4(5)
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


def _integrate(rhs, v0: np.ndarray, t_grid: np.ndarray, rtol: float, atol: float):
    dim2 = v0.size
    n_side = int(round(math.sqrt(dim2)))
    diag_idx = np.arange(n_side) * (n_side + 1)

    t = float(t_grid[0])
    v = v0.copy()
    recorded = [v.copy()]
    sample_iter = iter(t_grid[1:])
    next_sample = next(sample_iter, None)

    k1 = rhs(t, v)
    d0 = np.linalg.norm(v)
    d1 = np.linalg.norm(k1)
    h = min(0.01 * d0 / max(d1, 1e-30), (t_grid[-1] - t) / 10.0 or 1e-12)
    h = max(h, 1e-16)

    n_steps = n_rejected = 0
    max_trace_err = 0.0
    ks = [None] * 7
    trace0 = v[diag_idx].sum().real

    while next_sample is not None:
        if n_steps + n_rejected > MAX_STEPS:
            raise IntegrationError(f"step budget exceeded at t = {t:.3e} s")
        clamped = False
        if t + h >= next_sample - 1e-18:
            h = next_sample - t
            clamped = True
        ks[0] = k1
        for i in range(1, 7):
            vi = v + h * sum(a * k for a, k in zip(_DP_A[i], ks[:i]))
            ks[i] = rhs(t + _DP_C[i] * h, vi)
        v_new = v + h * sum(a * k for a, k in zip(_DP_A[6], ks[:6]))
        # ks[6] is f(t+h, v_new): the FSAL stage, reused as k1 on acceptance
        ks[6] = rhs(t + h, v_new)
        err_vec = h * sum(e * k for e, k in zip(_DP_ERR, ks))
        scale = atol + rtol * np.maximum(np.abs(v), np.abs(v_new))
        err = math.sqrt(float(np.mean(np.abs(err_vec / scale) ** 2)))

        trace_new = v_new[diag_idx].sum().real
        trace_drift = abs(trace_new - trace0)

        if err <= 1.0 and trace_drift <= TRACE_TOL:
            t = next_sample if clamped else t + h
            v = v_new
            k1 = ks[6]
            n_steps += 1
            max_trace_err = max(max_trace_err, abs(trace_new - trace0))
            if clamped:
                recorded.append(v.copy())
                next_sample = next(sample_iter, None)
            factor = 0.9 * err ** -0.2 if err > 0 else 5.0
            h = h * min(max(factor, 0.2), 5.0)
        else:
            n_rejected += 1
            if err > 1.0:
                factor = 0.9 * err ** -0.2
                h = h * min(max(factor, 0.1), 0.9)
            else:
                h = h / 2.0  # trace drift at acceptable error: force a smaller step
            if h < 1e-18:
                raise IntegrationError(
                    f"step size underflow at t = {t:.3e} s "
                    f"(err = {err:.2e}, trace drift = {trace_drift:.2e})"
                )
    return np.array(recorded), n_steps, n_rejected, max_trace_err


# ---------------------------------------------------------------------------
# Public entry point
# ---------------------------------------------------------------------------


def evolve_lindblad(
    model: LindbladModel,
    seq: PulseSequence,
    rho0: np.ndarray,
    t_grid,
    frame="auto",
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> SimResult:
    """Integrate the master equation, sampling the state at ``t_grid``.

    ``rho0`` must be a positive-semidefinite unit-trace density matrix on
    the model's full Hilbert space.  ``frame`` is ``"auto"`` or a pair of
    rotation frequencies in Hz for (transmon, cavity).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t_grid must be a nonempty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")

    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (model.dim, model.dim):
        raise ValueError(f"rho0 must be {model.dim} x {model.dim}")
    trace = np.trace(rho0).real
    if abs(trace - 1.0) > 1e-9:
        raise ValueError(f"rho0 trace = {trace:.12f}, expected 1")
    min_eig = float(np.linalg.eigvalsh((rho0 + rho0.conj().T) / 2).min())
    if min_eig < -1e-9:
        raise ValueError(f"rho0 is not positive semidefinite (min eigenvalue {min_eig:.2e})")

    warn_if_truncated(model, seq)
    frame_resolved = resolve_frame(model, seq, frame)
    l0, drives = _build_generator(model, seq, frame_resolved)

    if drives:
        # One stacked matvec per evaluation: rows are (L0, S+_1, S-_1, ...).
        stacked = np.concatenate(
            [l0] + [block for term in drives for block in (term.sp, term.sm)], axis=0
        )
        n_blocks = 1 + 2 * len(drives)
        dim2 = l0.shape[0]

        def rhs(t, v):
            blocks = (stacked @ v).reshape(n_blocks, dim2)
            out = blocks[0]
            for i, term in enumerate(drives):
                c = term.coefficient(t)
                if c != 0.0j:
                    out = out + c * blocks[1 + 2 * i] + np.conj(c) * blocks[2 + 2 * i]
            return out

    else:

        def rhs(t, v):
            return l0 @ v

    if t_grid.size == 1:
        vecs = rho0.reshape(-1)[None, :].copy()
        n_steps = n_rejected = 0
        trace_err = 0.0
    else:
        vecs, n_steps, n_rejected, trace_err = _integrate(
            rhs, rho0.reshape(-1), t_grid, rtol, atol
        )

    rhos = vecs.reshape(-1, model.dim, model.dim)
    diag = np.einsum("tii->ti", rhos).real
    populations = diag.reshape(-1, model.n_transmon, model.n_fock).sum(axis=2)
    amp = np.einsum("ij,tji->t", model.a, rhos)
    return SimResult(
        times=t_grid,
        populations=populations,
        cavity_amplitude={"mean": amp},
        rhos=rhos,
        frame=frame_resolved,
        n_steps=n_steps,
        n_rejected=n_rejected,
        max_trace_error=trace_err,
    )
