"""Multi-level transmon coupled to a cavity: Hamiltonian and collapse operators.

The transmon is a Duffing ladder with anharmonicity ``alpha``; the cavity a
truncated harmonic oscillator; the coupling an excitation-exchange term.
Device parameters are *measured* (dressed) quantities, so ``build_model``
back-solves the bare ladder frequencies such that the model's own dressed
transition frequencies reproduce the measured ones.

Operators are stored in angular units (rad/s); the public interface speaks
Hz.  Basis ordering is ``index = n_transmon_level * n_fock + n_photons``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..spectra import DeviceParams

TWO_PI = 2.0 * math.pi

BARE_SOLVE_TOL_HZ = 0.1
BARE_SOLVE_MAX_ITER = 60
CUTOFF_LEAKAGE_WARN = 1e-3


@dataclass
class LindbladModel:
    """Assembled Hamiltonian, collapse operators and dressed-state bookkeeping.

    ``hamiltonian`` is the lab-frame H/hbar in rad/s.  ``collapse_ops``
    already include the square-rooted rates.  Frequencies (``omega_eg``,
    ``alpha``, ``omega_r``, ``g``) are the measured targets in Hz;
    ``bare_*`` are the back-solved ladder parameters.
    """

    n_transmon: int
    n_fock: int
    omega_eg: float
    alpha: float
    omega_r: float
    g: float
    kappa_ex: float
    t1: float
    t1f: float | None
    gamma_phi: float
    r_th: float
    bare_omega_q: float
    bare_alpha: float
    bare_omega_r: float
    hamiltonian: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    collapse_ops: list[np.ndarray] = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    dressed_index: dict[tuple[int, int], int] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.n_transmon * self.n_fock

    @property
    def number_transmon(self) -> np.ndarray:
        n = np.arange(self.n_transmon)
        return np.kron(np.diag(n.astype(float)), np.eye(self.n_fock))

    @property
    def number_cavity(self) -> np.ndarray:
        n = np.arange(self.n_fock)
        return np.kron(np.eye(self.n_transmon), np.diag(n.astype(float)))

    def bare_index(self, n_t: int, n_c: int) -> int:
        if not (0 <= n_t < self.n_transmon and 0 <= n_c < self.n_fock):
            raise ValueError(f"state ({n_t}, {n_c}) outside the truncation")
        return n_t * self.n_fock + n_c

    def dressed_vector(self, n_t: int, n_c: int) -> np.ndarray:
        """Eigenvector with dominant overlap on the bare state |n_t, n_c>."""
        return self.eigenvectors[:, self.dressed_index[(n_t, n_c)]]

    def dressed_energy(self, n_t: int, n_c: int) -> float:
        """Eigenfrequency (rad/s) of the dressed state."""
        return float(self.eigenvalues[self.dressed_index[(n_t, n_c)]])

    def dressed_state(self, n_t: int, n_c: int) -> np.ndarray:
        """Density matrix of the dressed state."""
        v = self.dressed_vector(n_t, n_c)
        return np.outer(v, v.conj())

    def bare_state(self, n_t: int, n_c: int) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        k = self.bare_index(n_t, n_c)
        rho[k, k] = 1.0
        return rho

    def transition_frequency(self, state_a: tuple[int, int], state_b: tuple[int, int]) -> float:
        """Dressed transition frequency (E_a - E_b)/h in Hz, signed."""
        return (self.dressed_energy(*state_a) - self.dressed_energy(*state_b)) / TWO_PI

    def dispersive_shift(self) -> float:
        """Full dispersive shift 2*chi (Hz) from the eigenvalue ladder."""
        e = self.dressed_energy
        return ((e(1, 1) - e(1, 0)) - (e(0, 1) - e(0, 0))) / TWO_PI

    def resonator_frequency(self, qubit_level: int = 0) -> float:
        """Dressed cavity transition (Hz) with the transmon in ``qubit_level``."""
        return (self.dressed_energy(qubit_level, 1) - self.dressed_energy(qubit_level, 0)) / TWO_PI

    def qubit_frequency(self, transition: str = "ge") -> float:
        """Dressed qubit transition frequency (Hz) at zero photons."""
        pairs = {"ge": ((1, 0), (0, 0)), "ef": ((2, 0), (1, 0))}
        a, b = pairs[transition]
        return self.transition_frequency(a, b)

    def drive_operator(self, target: str) -> np.ndarray:
        if target == "transmon":
            return self.b + self.b.conj().T
        if target == "cavity":
            return self.a + self.a.conj().T
        raise ValueError(f"unknown drive target {target!r}")

    def thermal_qubit_state(self) -> np.ndarray:
        """Detailed-balance steady state of the bare ladder at zero photons."""
        weights = self.r_th ** np.arange(self.n_transmon)
        weights /= weights.sum()
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        for n_t, w in enumerate(weights):
            rho[self.bare_index(n_t, 0), self.bare_index(n_t, 0)] = w
        return rho


def _ladder(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), k=1)


def _assemble_hamiltonian(
    n_transmon: int, n_fock: int, omega_q: float, alpha: float, omega_r: float, g: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lab-frame H/hbar (rad/s) plus the full-space lowering operators."""
    n_t = np.arange(n_transmon, dtype=float)
    h_t = TWO_PI * (omega_q * n_t + 0.5 * alpha * n_t * (n_t - 1.0))
    h_c = TWO_PI * omega_r * np.arange(n_fock, dtype=float)
    b_small = _ladder(n_transmon)
    a_small = _ladder(n_fock)
    eye_t = np.eye(n_transmon)
    eye_c = np.eye(n_fock)
    b = np.kron(b_small, eye_c).astype(complex)
    a = np.kron(eye_t, a_small).astype(complex)
    h = np.kron(np.diag(h_t), eye_c) + np.kron(eye_t, np.diag(h_c))
    h = h.astype(complex)
    h += TWO_PI * g * (b.conj().T @ a + b @ a.conj().T)
    return h, b, a


def _identify_dressed(eigvecs: np.ndarray) -> dict[int, int]:
    """Greedy bare-index -> eigenindex map by descending overlap."""
    overlap = np.abs(eigvecs) ** 2
    dim = overlap.shape[0]
    order = np.argsort(-overlap.max(axis=1))
    taken: set[int] = set()
    mapping: dict[int, int] = {}
    for k in order:
        for j in np.argsort(-overlap[k]):
            if j not in taken:
                mapping[int(k)] = int(j)
                taken.add(int(j))
                break
    assert len(mapping) == dim
    return mapping


def build_model(
    device: DeviceParams,
    n_transmon: int = 4,
    n_fock: int = 10,
    dephasing_ref: str = "echo",
) -> LindbladModel:
    """Assemble the Lindblad model calibrated to the measured device.

    The bare ladder frequencies are iterated until the model's dressed
    ge / ef / cavity transitions match the measured ``omega_eg``,
    ``omega_fe`` and ``omega_r``.  The T1 rate is split into downward and
    upward parts by detailed balance with ``r_th``; pure dephasing defaults
    to the echo value 1/T2_echo - 1/(2 T1) (``dephasing_ref="star"``
    switches to T2*).
    """
    if not 2 <= n_transmon <= 5:
        raise ValueError("n_transmon must be in [2, 5]")
    if n_fock < 2:
        raise ValueError("n_fock must be >= 2")

    t2 = device.t2_echo if dephasing_ref == "echo" else device.t2_star
    if dephasing_ref not in ("echo", "star"):
        raise ValueError("dephasing_ref must be 'echo' or 'star'")
    if t2 is None:
        raise ValueError(f"device is missing the T2 value for dephasing_ref={dephasing_ref!r}")
    gamma_phi = 1.0 / t2 - 1.0 / (2.0 * device.t1)
    if gamma_phi < -1e-3 / t2:
        raise ValueError("T2 exceeds 2*T1; not representable by white-noise dephasing")
    gamma_phi = max(gamma_phi, 0.0)

    alpha = device.alpha
    bare_q, bare_alpha, bare_r = device.omega_eg, alpha, device.omega_r
    h = b = a = None
    eigvals = eigvecs = None
    mapping = None
    for _ in range(BARE_SOLVE_MAX_ITER):
        h, b, a = _assemble_hamiltonian(n_transmon, n_fock, bare_q, bare_alpha, bare_r, device.g)
        eigvals, eigvecs = np.linalg.eigh(h)
        mapping = _identify_dressed(eigvecs)

        def energy(n_t, n_c):
            return eigvals[mapping[n_t * n_fock + n_c]]

        d_eg = (energy(1, 0) - energy(0, 0)) / TWO_PI
        d_r = (energy(0, 1) - energy(0, 0)) / TWO_PI
        err_q = device.omega_eg - d_eg
        err_r = device.omega_r - d_r
        if n_transmon >= 3:
            d_fe = (energy(2, 0) - energy(1, 0)) / TWO_PI
            err_a = (device.omega_fe - device.omega_eg) - (d_fe - d_eg)
        else:
            err_a = 0.0
        bare_q += err_q
        bare_alpha += err_a
        bare_r += err_r
        if max(abs(err_q), abs(err_r), abs(err_a)) < BARE_SOLVE_TOL_HZ:
            break
    else:
        warnings.warn("bare-parameter back-solve did not fully converge", stacklevel=2)

    dressed_index = {
        (n_t, n_c): mapping[n_t * n_fock + n_c]
        for n_t in range(n_transmon)
        for n_c in range(n_fock)
    }

    collapse = [math.sqrt(TWO_PI * device.kappa_ex) * a]
    down_eg = (1.0 / device.t1) / (1.0 + device.r_th)
    step_rates = {1: down_eg}
    if n_transmon >= 3:
        t1f = device.t1f if device.t1f is not None else device.t1 / 2.0
        step_rates[2] = (1.0 / t1f) / (1.0 + device.r_th)
    for n in range(3, n_transmon):
        step_rates[n] = n * down_eg  # harmonic extrapolation above the f level
    eye_c = np.eye(n_fock)
    for n, rate in step_rates.items():
        lower = np.zeros((n_transmon, n_transmon))
        lower[n - 1, n] = 1.0
        op = np.kron(lower, eye_c).astype(complex)
        collapse.append(math.sqrt(rate) * op)
        if device.r_th > 0:
            collapse.append(math.sqrt(device.r_th * rate) * op.conj().T)
    if gamma_phi > 0:
        n_op = np.kron(np.diag(np.arange(n_transmon, dtype=float)), eye_c).astype(complex)
        collapse.append(math.sqrt(2.0 * gamma_phi) * n_op)

    return LindbladModel(
        n_transmon=n_transmon,
        n_fock=n_fock,
        omega_eg=device.omega_eg,
        alpha=alpha,
        omega_r=device.omega_r,
        g=device.g,
        kappa_ex=device.kappa_ex,
        t1=device.t1,
        t1f=device.t1f,
        gamma_phi=gamma_phi,
        r_th=device.r_th,
        bare_omega_q=bare_q,
        bare_alpha=bare_alpha,
        bare_omega_r=bare_r,
        hamiltonian=h,
        b=b,
        a=a,
        collapse_ops=collapse,
        eigenvalues=eigvals,
        eigenvectors=eigvecs,
        dressed_index=dressed_index,
    )


def estimate_cutoff_leakage(model: LindbladModel, carrier_hz: float, amplitude_hz: float, target: str) -> float:
    """Perturbative estimate of population pushed above the truncation by one drive."""
    if target == "transmon":
        n_top = model.n_transmon - 1
        matrix_element = math.sqrt(n_top + 1) * amplitude_hz / 2.0
        lost_transition = model.omega_eg + n_top * model.alpha
    else:
        n_top = model.n_fock - 1
        matrix_element = math.sqrt(n_top + 1) * amplitude_hz / 2.0
        lost_transition = model.omega_r
    detuning = abs(lost_transition - carrier_hz)
    if detuning == 0:
        return 1.0
    return (matrix_element / detuning) ** 2


def warn_if_truncated(model: LindbladModel, pulses) -> None:
    for pulse in pulses:
        leak = estimate_cutoff_leakage(model, pulse.carrier, pulse.amplitude, pulse.target)
        if leak > CUTOFF_LEAKAGE_WARN:
            warnings.warn(
                f"drive at {pulse.carrier / 1e9:.3f} GHz with amplitude "
                f"{pulse.amplitude / 1e6:.1f} MHz may push ~{leak:.1e} population above the "
                f"{pulse.target} truncation; consider a larger cutoff",
                stacklevel=3,
            )
