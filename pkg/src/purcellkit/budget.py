"""Readout error-budget analysis from repeated-readout conditional probabilities.

A single readout is modeled as three error stages acting on a binary qubit
state: an early state flip (affects outcome and post-state), a separation
error (misassignment by signal-chain noise, outcome only), and a late state
flip (post-state only).  Three repeated-readout experiments feed the
analysis:

- experiment a: thermal state, readout, readout
- experiment b: thermal state, pi pulse, readout, readout
- experiment c: thermal state, readout, pi pulse, readout

Combining experiments a and b eliminates the post-selection bias of the
first readout and yields the separation errors; the remaining linear system
for the four state-flip and two pi-pulse error probabilities is
underdetermined, so each is bounded by minimizing/maximizing over the
2-dimensional solution set intersected with the nonnegativity box (exact
polygon vertex enumeration, no external solver).

``synthesize_stats`` implements the exact forward process model (full path
enumeration over the two-state chains) and serves as the module's primary
oracle: statistics generated from known error rates must reproduce those
rates through the analysis pipeline to first order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .errors import DegenerateStatsError, InconsistentStatsError, InfeasibleModelError
from .spectra import DeviceParams

TWO_PI = 2.0 * math.pi

EQUALITY_SLACK = 1e-4       # absolute slack on the flip-error linear system
NEGATIVE_CLIP = 1e-4        # small negative probabilities are first-order residue
DEFAULT_TAU_RO = 120e-9     # readout duration including ring-down (s)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReadoutStats:
    """Measured conditional probabilities and excitation ratios.

    ``p_<z>_<y>_given_<x>`` is the probability that the second readout of
    experiment ``z`` reports y given that the first reported x; ``r_<z>`` is
    the excitation ratio P(out1 = e)/P(out1 = g) of the first readout.
    """

    p_a_e_given_g: float
    p_a_g_given_e: float
    p_b_e_given_g: float
    p_b_g_given_e: float
    p_c_g_given_g: float
    p_c_e_given_e: float
    r_a: float
    r_b: float
    r_c: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name.startswith("p_") and not 0.0 <= value <= 1.0:
                raise ValueError(f"{f.name} must be in [0, 1]")
            if f.name.startswith("r_") and value < 0:
                raise ValueError(f"{f.name} must be >= 0")
        if self.r_a == self.r_b:
            raise DegenerateStatsError(
                "r_a = r_b: experiments a and b carry identical post-selection weight"
            )


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] used for bounded error probabilities."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi + 1e-15:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    def __sub__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo - other.hi, self.hi - other.lo)
        return Interval(self.lo - other, self.hi - other)

    def scaled(self, factor: float) -> "Interval":
        a, b = factor * self.lo, factor * self.hi
        return Interval(min(a, b), max(a, b))

    def clipped(self) -> "Interval":
        return Interval(min(max(self.lo, 0.0), 1.0), min(max(self.hi, 0.0), 1.0))


@dataclass(frozen=True)
class OutcomeConditionals:
    """Post-selection-free conditional probabilities P(out2 | mid1)."""

    ab_e_given_g: float
    ab_g_given_e: float
    c_g_given_g: float
    c_e_given_e: float


@dataclass(frozen=True)
class SeparationErrors:
    eps_sep_ge: float
    eps_sep_eg: float


@dataclass(frozen=True)
class ErrorModel:
    """Separation errors (point values) and bounded flip / pi-pulse errors."""

    eps_sep_ge: float
    eps_sep_eg: float
    eps_flip1_ge: Interval
    eps_flip1_eg: Interval
    eps_flip2_ge: Interval
    eps_flip2_eg: Interval
    eps_pi_gg: Interval
    eps_pi_ee: Interval


@dataclass(frozen=True)
class OriginTable:
    """State-flip error probabilities split by origin (point values)."""

    total_ge: float
    total_eg: float
    external_eg: float
    internal_ge: float
    internal_eg: float
    back_action_ge: float
    back_action_eg: float


@dataclass(frozen=True)
class BudgetRow:
    name: str
    value: Interval


@dataclass(frozen=True)
class BudgetReport:
    fidelity: float
    qnd_fidelity: float
    error_model: ErrorModel
    origins: OriginTable
    f_budget: tuple[BudgetRow, ...]
    q_budget: tuple[BudgetRow, ...]
    readout_error_g_as_e: Interval
    readout_error_e_as_g: Interval
    notes: tuple[str, ...] = ()

    @property
    def f_infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def q_infidelity(self) -> float:
        return 1.0 - self.qnd_fidelity


# ---------------------------------------------------------------------------
# Post-selection-free conditionals and separation errors
# ---------------------------------------------------------------------------


def _check_probability(name: str, value: float) -> float:
    if value < -NEGATIVE_CLIP or value > 1.0 + NEGATIVE_CLIP:
        raise InconsistentStatsError(f"{name} = {value:.6f} is outside [0, 1]")
    if value < 0.0:
        warnings.warn(f"{name} = {value:.2e} clipped to 0 (first-order residue)", stacklevel=3)
        return 0.0
    return min(value, 1.0)


def _ab_conditionals(stats: ReadoutStats) -> tuple[float, float]:
    denom = stats.r_b - stats.r_a
    e_given_g = (stats.r_b * stats.p_a_e_given_g - stats.r_a * stats.p_b_e_given_g) / denom
    g_given_e = (stats.r_b * stats.p_b_g_given_e - stats.r_a * stats.p_a_g_given_e) / denom
    return (
        _check_probability("P_ab(e|g) [out2|mid1]", e_given_g),
        _check_probability("P_ab(g|e) [out2|mid1]", g_given_e),
    )


def _separation_from_ab(stats: ReadoutStats, e_given_g: float, g_given_e: float) -> SeparationErrors:
    closure = 1.0 - e_given_g - g_given_e
    if closure <= 0:
        raise InconsistentStatsError(
            f"1 - P(e|g) - P(g|e) = {closure:.4f} must be positive"
        )
    eps_eg = (stats.p_b_e_given_g - e_given_g) / (stats.r_b * closure)
    eps_ge = stats.r_a * (stats.p_a_g_given_e - g_given_e) / closure
    return SeparationErrors(
        eps_sep_ge=_check_probability("eps_sep (g->e)", eps_ge),
        eps_sep_eg=_check_probability("eps_sep (e->g)", eps_eg),
    )


def out2_given_mid1(stats: ReadoutStats) -> OutcomeConditionals:
    """Strip the post-selection bias of the first readout from all experiments.

    Experiments a and b are combined through their excitation ratios; the
    experiment-c conditionals then follow from the same expansion, using the
    separation errors and solving the resulting 2x2 linear system exactly.
    """
    e_given_g, g_given_e = _ab_conditionals(stats)
    seps = _separation_from_ab(stats, e_given_g, g_given_e)

    _warn_if_outside_regime(stats, seps)

    a = stats.r_c * seps.eps_sep_eg
    b = seps.eps_sep_ge / stats.r_c if stats.r_c > 0 else 0.0
    # X = P_c(g|g) - a (1 - X - Y),  Y = P_c(e|e) - b (1 - X - Y)
    mat = np.array([[1.0 - a, -a], [-b, 1.0 - b]])
    rhs = np.array([stats.p_c_g_given_g - a, stats.p_c_e_given_e - b])
    x, y = np.linalg.solve(mat, rhs)
    return OutcomeConditionals(
        ab_e_given_g=e_given_g,
        ab_g_given_e=g_given_e,
        c_g_given_g=_check_probability("P_c(g|g) [out2|mid1]", float(x)),
        c_e_given_e=_check_probability("P_c(e|e) [out2|mid1]", float(y)),
    )


def _warn_if_outside_regime(stats: ReadoutStats, seps: SeparationErrors):
    eps = max(seps.eps_sep_ge, seps.eps_sep_eg)
    if eps <= 0:
        return
    excited_fraction = min(
        stats.r_a / (1.0 + stats.r_a),
        stats.r_c / (1.0 + stats.r_c),
        1.0 / (1.0 + stats.r_b),
    )
    if excited_fraction < 5.0 * eps:
        warnings.warn(
            "first-readout minority population is not large compared to the separation "
            "errors; the post-selection expansion is first-order only",
            stacklevel=4,
        )


def separation_errors(stats: ReadoutStats, cond: OutcomeConditionals) -> SeparationErrors:
    """Separation error probabilities from the post-selection-free conditionals."""
    return _separation_from_ab(stats, cond.ab_e_given_g, cond.ab_g_given_e)


# ---------------------------------------------------------------------------
# Flip-error bounds by polygon vertex enumeration
# ---------------------------------------------------------------------------

_VARIABLES = ("eps_flip1_ge", "eps_flip1_eg", "eps_flip2_ge", "eps_flip2_eg", "eps_pi_gg", "eps_pi_ee")


class FlipPolytope:
    """Feasible set of the six error unknowns.

    The four equalities

        flip1_ge + flip2_ge             = A
        flip1_eg + flip2_eg             = B
        flip1_eg + flip2_ge + pi_gg     = C
        flip1_ge + flip2_eg + pi_ee     = D

    leave two degrees of freedom, taken as t = (flip1_ge, flip1_eg).  Every
    unknown is affine in t; nonnegativity (relaxed by ``slack``) cuts a
    polygon out of the t-plane.  Bounds of any affine functional are attained
    at the polygon vertices.
    """

    def __init__(self, a: float, b: float, c: float, d: float, slack: float = 0.0):
        self.rhs = (a, b, c, d)
        self.slack = slack
        # rows: coefficient on t1, on t2, constant
        self.forms = {
            "eps_flip1_ge": (1.0, 0.0, 0.0),
            "eps_flip1_eg": (0.0, 1.0, 0.0),
            "eps_flip2_ge": (-1.0, 0.0, a),
            "eps_flip2_eg": (0.0, -1.0, b),
            "eps_pi_gg": (1.0, -1.0, c - a),
            "eps_pi_ee": (-1.0, 1.0, d - b),
        }
        self.vertices = self._enumerate_vertices()

    def _enumerate_vertices(self) -> np.ndarray:
        lines = list(self.forms.values())
        candidates = []
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                a1, b1, c1 = lines[i]
                a2, b2, c2 = lines[j]
                det = a1 * b2 - a2 * b1
                if abs(det) < 1e-12:
                    continue
                # intersection of l_i = -slack with l_j = -slack
                t1 = ((-self.slack - c1) * b2 - (-self.slack - c2) * b1) / det
                t2 = (a1 * (-self.slack - c2) - a2 * (-self.slack - c1)) / det
                candidates.append((t1, t2))
        feasible = [t for t in candidates if self._is_feasible(t)]
        return np.array(feasible) if feasible else np.empty((0, 2))

    def _is_feasible(self, t, tol: float = 1e-12) -> bool:
        return all(
            a * t[0] + b * t[1] + c >= -self.slack - tol for a, b, c in self.forms.values()
        )

    @property
    def feasible(self) -> bool:
        return self.vertices.shape[0] > 0

    def violation_certificate(self) -> dict:
        """Most violated constraint at the least-infeasible candidate point."""
        lines = list(self.forms.items())
        best = None
        grid = [(0.0, 0.0)] + [
            (-c / a if a else 0.0, -c / b if b else 0.0) for _, (a, b, c) in lines
        ]
        for t in grid:
            worst_name, worst_val = None, math.inf
            for name, (a, b, c) in lines:
                val = a * t[0] + b * t[1] + c
                if val < worst_val:
                    worst_name, worst_val = name, val
            if best is None or worst_val > best[1]:
                best = (worst_name, worst_val, t)
        return {
            "violated": best[0],
            "shortfall": -float(best[1]),
            "rhs": {"A": self.rhs[0], "B": self.rhs[1], "C": self.rhs[2], "D": self.rhs[3]},
        }

    def bound(self, coeffs: dict[str, float], const: float = 0.0) -> Interval:
        """Min/max of ``const + sum coeffs[name] * variable`` over the polygon."""
        a_tot, b_tot, c_tot = 0.0, 0.0, const
        for name, weight in coeffs.items():
            a, b, c = self.forms[name]
            a_tot += weight * a
            b_tot += weight * b
            c_tot += weight * c
        values = self.vertices @ np.array([a_tot, b_tot]) + c_tot
        return Interval(float(values.min()), float(values.max()))

    def variable_bound(self, name: str) -> Interval:
        return self.bound({name: 1.0}).clipped()


def flip_totals(cond: OutcomeConditionals, seps: SeparationErrors) -> dict[str, float]:
    """Total physical transition probabilities between the two readouts.

    The separation error acts after the state flips, so exactly
    P(out2 | mid1) = eps_sep + T (1 - eps_sep_ge - eps_sep_eg) with T the
    flip-chain transition probability; inverting this instead of the plain
    first-order subtraction removes the flip x separation cross terms.
    """
    closure = 1.0 - seps.eps_sep_ge - seps.eps_sep_eg
    return {
        "ge": (cond.ab_e_given_g - seps.eps_sep_ge) / closure,
        "eg": (cond.ab_g_given_e - seps.eps_sep_eg) / closure,
        "c_gg": (cond.c_g_given_g - seps.eps_sep_eg) / closure,
        "c_ee": (cond.c_e_given_e - seps.eps_sep_ge) / closure,
    }


def _build_polytope(stats: ReadoutStats, seps: SeparationErrors, cond: OutcomeConditionals) -> FlipPolytope:
    totals = flip_totals(cond, seps)
    a = totals["ge"]
    b = totals["eg"]
    c = totals["c_gg"]
    d = totals["c_ee"]
    poly = FlipPolytope(a, b, c, d, slack=0.0)
    if not poly.feasible:
        poly = FlipPolytope(a, b, c, d, slack=EQUALITY_SLACK)
    if not poly.feasible:
        raise InfeasibleModelError(
            "flip-error system admits no nonnegative solution",
            certificate=poly.violation_certificate(),
        )
    return poly


def flip_error_bounds(stats: ReadoutStats, seps: SeparationErrors) -> ErrorModel:
    """Interval bounds for the state-flip and pi-pulse error probabilities.

    The system is solved exactly first; the documented slack is applied only
    when rounding of the measured inputs makes the exact system infeasible.
    """
    cond = out2_given_mid1(stats)
    poly = _build_polytope(stats, seps, cond)
    bounds = {name: poly.variable_bound(name) for name in _VARIABLES}
    return ErrorModel(
        eps_sep_ge=seps.eps_sep_ge,
        eps_sep_eg=seps.eps_sep_eg,
        eps_flip1_ge=bounds["eps_flip1_ge"],
        eps_flip1_eg=bounds["eps_flip1_eg"],
        eps_flip2_ge=bounds["eps_flip2_ge"],
        eps_flip2_eg=bounds["eps_flip2_eg"],
        eps_pi_gg=bounds["eps_pi_gg"],
        eps_pi_ee=bounds["eps_pi_ee"],
    )


# ---------------------------------------------------------------------------
# Origin decomposition and fidelities
# ---------------------------------------------------------------------------


def origin_decomposition(
    flips_total: dict[str, float],
    device: DeviceParams,
    tau_ro: float = DEFAULT_TAU_RO,
) -> OriginTable:
    """Split total state-flip errors into external decay, internal loss, back action.

    ``flips_total`` holds the total (early + late) flip probabilities per
    direction under keys "ge" and "eg".  The external part uses the measured
    qubit external decay rate over the readout duration; internal loss is
    the rest of the T1 budget split by detailed balance with ``r_th``; the
    remainder is attributed to readout back action.
    """
    if not tau_ro > 0:
        raise ValueError("tau_ro must be > 0")
    if device.gamma_ex_q is None:
        raise ValueError("device.gamma_ex_q is required for the origin decomposition")
    total_ge = flips_total["ge"]
    total_eg = flips_total["eg"]

    eps_ex_eg = TWO_PI * device.gamma_ex_q * tau_ro
    down = tau_ro / device.t1 / (1.0 + device.r_th)
    eps_in_eg = down - eps_ex_eg
    eps_in_ge = (tau_ro / device.t1) * device.r_th / (1.0 + device.r_th)

    ba_eg = total_eg - eps_ex_eg - eps_in_eg
    ba_ge = total_ge - eps_in_ge
    for name, value in (("e->g", ba_eg), ("g->e", ba_ge)):
        if value < -1e-3:
            warnings.warn(
                f"back action ({name}) = {value:.2e} is negative beyond tolerance; "
                "decay rates inconsistent with the measured flips",
                stacklevel=2,
            )
    return OriginTable(
        total_ge=total_ge,
        total_eg=total_eg,
        external_eg=eps_ex_eg,
        internal_ge=eps_in_ge,
        internal_eg=eps_in_eg,
        back_action_ge=max(ba_ge, 0.0),
        back_action_eg=max(ba_eg, 0.0),
    )


def fidelities(stats: ReadoutStats) -> dict[str, float]:
    """Readout fidelity F and QND fidelity Q from the raw conditionals."""
    q = 1.0 - (stats.p_a_e_given_g + stats.p_b_g_given_e) / 2.0
    f = 1.0 - (stats.p_a_e_given_g + stats.p_c_g_given_g) / 2.0
    return {"F": f, "Q": q}


# ---------------------------------------------------------------------------
# Budget assembly
# ---------------------------------------------------------------------------


def assemble_budget(
    stats: ReadoutStats,
    cond: OutcomeConditionals,
    seps: SeparationErrors,
    error_model: ErrorModel,
    origins: OriginTable,
    device: DeviceParams,
    tau_ro: float = DEFAULT_TAU_RO,
) -> BudgetReport:
    """Fill the fidelity and QND budgets row by row.

    Bounded rows of the readout-fidelity budget are linear functionals of
    the flip-error unknowns and are bounded over the same feasible polygon
    (not by adding independent per-variable extremes).  Interval arithmetic
    is propagated without truncation; rows whose honest lower endpoint is
    negative are reported as such in ``notes`` and floored only for display.
    """
    poly = _build_polytope(stats, seps, cond)
    fid = fidelities(stats)
    notes: list[str] = []

    # --- readout-fidelity (F) budget -------------------------------------
    prep = poly.bound(
        {"eps_flip2_ge": 2.0, "eps_pi_gg": 1.0},
        const=(stats.r_a + stats.r_c) * seps.eps_sep_eg,
    ).scaled(0.5)
    flip1_row = poly.bound({"eps_flip1_ge": 1.0, "eps_flip1_eg": 1.0}).scaled(0.5)
    internal_1 = Interval(0.0, min((origins.internal_ge + origins.internal_eg) / 2.0, flip1_row.hi))
    external_1 = Interval(0.0, min(origins.external_eg / 2.0, flip1_row.hi))
    back_action_1 = flip1_row - internal_1 - external_1
    if back_action_1.lo < 0:
        notes.append(
            f"F-budget back-action lower endpoint {back_action_1.lo:.2e} floored to 0 for display"
        )
    separation_row = Interval(
        (seps.eps_sep_ge + seps.eps_sep_eg) / 2.0, (seps.eps_sep_ge + seps.eps_sep_eg) / 2.0
    )
    f_budget = (
        BudgetRow("preparation", prep),
        BudgetRow("back_action", back_action_1),
        BudgetRow("internal_loss", internal_1),
        BudgetRow("separation", separation_row),
        BudgetRow("external_decay", external_1),
    )

    # --- QND (Q) budget ----------------------------------------------------
    sep_q = (
        stats.r_a * seps.eps_sep_eg
        + seps.eps_sep_ge
        + seps.eps_sep_ge / stats.r_b
        + seps.eps_sep_eg
    ) / 2.0
    q_budget = (
        BudgetRow(
            "back_action",
            Interval(
                (origins.back_action_ge + origins.back_action_eg) / 2.0,
                (origins.back_action_ge + origins.back_action_eg) / 2.0,
            ),
        ),
        BudgetRow(
            "internal_loss",
            Interval(
                (origins.internal_ge + origins.internal_eg) / 2.0,
                (origins.internal_ge + origins.internal_eg) / 2.0,
            ),
        ),
        BudgetRow("separation", Interval(sep_q, sep_q)),
        BudgetRow(
            "external_decay", Interval(origins.external_eg / 2.0, origins.external_eg / 2.0)
        ),
    )

    g_as_e = (poly.bound({"eps_flip1_ge": 1.0}) + seps.eps_sep_ge).clipped()
    e_as_g = (poly.bound({"eps_flip1_eg": 1.0}) + seps.eps_sep_eg).clipped()

    return BudgetReport(
        fidelity=fid["F"],
        qnd_fidelity=fid["Q"],
        error_model=error_model,
        origins=origins,
        f_budget=f_budget,
        q_budget=q_budget,
        readout_error_g_as_e=g_as_e,
        readout_error_e_as_g=e_as_g,
        notes=tuple(notes),
    )


def analyze_stats(
    stats: ReadoutStats, device: DeviceParams, tau_ro: float = DEFAULT_TAU_RO
) -> BudgetReport:
    """Run the full pipeline: conditionals, separation errors, bounds, budgets."""
    cond = out2_given_mid1(stats)
    seps = separation_errors(stats, cond)
    model = flip_error_bounds(stats, seps)
    totals = flip_totals(cond, seps)
    origins = origin_decomposition(totals, device, tau_ro)
    return assemble_budget(stats, cond, seps, model, origins, device, tau_ro)


# ---------------------------------------------------------------------------
# Forward process model (the oracle)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrueErrorRates:
    """Point-valued error rates for synthesizing readout statistics."""

    eps_sep_ge: float
    eps_sep_eg: float
    eps_flip1_ge: float
    eps_flip1_eg: float
    eps_flip2_ge: float
    eps_flip2_eg: float
    eps_pi_gg: float
    eps_pi_ee: float
    r_th: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{f.name} must be in [0, 1]")


def _flip_matrix(eps_ge: float, eps_eg: float) -> np.ndarray:
    return np.array([[1.0 - eps_ge, eps_ge], [eps_eg, 1.0 - eps_eg]])


def _readout_joint(rates: TrueErrorRates) -> np.ndarray:
    """J[pre, out, post]: exact path sum over the mid-readout state."""
    m1 = _flip_matrix(rates.eps_flip1_ge, rates.eps_flip1_eg)
    m2 = _flip_matrix(rates.eps_flip2_ge, rates.eps_flip2_eg)
    sep = _flip_matrix(rates.eps_sep_ge, rates.eps_sep_eg)  # mid -> outcome
    return np.einsum("pm,mo,mq->poq", m1, sep, m2)


def _pi_matrix(rates: TrueErrorRates) -> np.ndarray:
    return np.array(
        [[rates.eps_pi_gg, 1.0 - rates.eps_pi_gg], [1.0 - rates.eps_pi_ee, rates.eps_pi_ee]]
    )


def _two_readout_experiment(rates: TrueErrorRates, prepare_pi: bool, middle_pi: bool):
    """Joint distribution of (out1, out2) plus the first-outcome marginals."""
    joint = _readout_joint(rates)
    p0 = np.array([1.0, rates.r_th]) / (1.0 + rates.r_th)
    if prepare_pi:
        p0 = p0 @ _pi_matrix(rates)
    between = _pi_matrix(rates) if middle_pi else np.eye(2)
    out1_post1 = np.einsum("p,poq->oq", p0, joint)
    out_given_pre = joint.sum(axis=2)  # J2[pre2, out2]
    out1_out2 = out1_post1 @ between @ out_given_pre
    return out1_out2, out1_post1.sum(axis=1)


def synthesize_stats(rates: TrueErrorRates) -> ReadoutStats:
    """Exact readout statistics from a known error model (forward oracle)."""
    ab_joint_a, out1_a = _two_readout_experiment(rates, prepare_pi=False, middle_pi=False)
    ab_joint_b, out1_b = _two_readout_experiment(rates, prepare_pi=True, middle_pi=False)
    c_joint, out1_c = _two_readout_experiment(rates, prepare_pi=False, middle_pi=True)
    g, e = 0, 1
    return ReadoutStats(
        p_a_e_given_g=ab_joint_a[g, e] / out1_a[g],
        p_a_g_given_e=ab_joint_a[e, g] / out1_a[e],
        p_b_e_given_g=ab_joint_b[g, e] / out1_b[g],
        p_b_g_given_e=ab_joint_b[e, g] / out1_b[e],
        p_c_g_given_g=c_joint[g, g] / out1_c[g],
        p_c_e_given_e=c_joint[e, e] / out1_c[e],
        r_a=out1_a[e] / out1_a[g],
        r_b=out1_b[e] / out1_b[g],
        r_c=out1_c[e] / out1_c[g],
    )


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------


def _fmt(value: Interval | float, point_tol: float = 5e-4) -> str:
    if isinstance(value, float):
        return f"{100 * value:.1f}%"
    if value.width < point_tol:
        return f"{100 * value.midpoint:.1f}%"
    lo = max(value.lo, 0.0)
    if lo < point_tol:
        return f"<={100 * value.hi:.1f}%"
    return f"{100 * lo:.1f}-{100 * value.hi:.1f}%"


def render_budget_text(report: BudgetReport) -> str:
    """Aligned plain-text tables mirroring the error-budget report layout."""
    em = report.error_model
    lines = []

    def table(title: str, rows: list[tuple[str, str]]):
        lines.append(title)
        width = max(len(r[0]) for r in rows)
        for label, value in rows:
            lines.append(f"  {label:<{width}}  {value:>12}")
        lines.append("")

    table(
        "Individual error probabilities",
        [
            ("Separation error (g->e)", _fmt(em.eps_sep_ge)),
            ("Separation error (e->g)", _fmt(em.eps_sep_eg)),
            ("Early state-flip error (g->e)", _fmt(em.eps_flip1_ge)),
            ("Early state-flip error (e->g)", _fmt(em.eps_flip1_eg)),
            ("Late state-flip error (g->e)", _fmt(em.eps_flip2_ge)),
            ("Late state-flip error (e->g)", _fmt(em.eps_flip2_eg)),
        ],
    )
    og = report.origins
    table(
        "State-flip error probabilities by origin",
        [
            ("Total (g->e)", _fmt(og.total_ge)),
            ("Total (e->g)", _fmt(og.total_eg)),
            ("External decay (e->g)", _fmt(og.external_eg)),
            ("Internal loss (g->e)", _fmt(og.internal_ge)),
            ("Internal loss (e->g)", _fmt(og.internal_eg)),
            ("Back action (g->e)", _fmt(og.back_action_ge)),
            ("Back action (e->g)", _fmt(og.back_action_eg)),
        ],
    )
    table(
        "Error budget of the readout infidelity",
        [("Readout infidelity", _fmt(report.f_infidelity))]
        + [(row.name, _fmt(row.value)) for row in report.f_budget],
    )
    table(
        "Error budget of the QND infidelity",
        [("QND infidelity", _fmt(report.q_infidelity))]
        + [(row.name, _fmt(row.value)) for row in report.q_budget],
    )
    table(
        "Readout error probabilities",
        [
            ("g detected as 'e'", _fmt(report.readout_error_g_as_e)),
            ("e detected as 'g'", _fmt(report.readout_error_e_as_g)),
        ],
    )
    return "\n".join(lines)
