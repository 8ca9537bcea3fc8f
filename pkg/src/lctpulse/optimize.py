"""Derivative-free refinement loops built on a small Nelder-Mead core.

Three drivers share the simplex engine:

  optimize_reversible   outer scan over filter cutoffs, inner 1-d search
                        over the correction gain, objective = reverse error
  optimize_truncation   1-d search over the truncation time tau
  fit_analytic_pulse    two-stage fit of the closed-form pulse (amplitudes
                        and switch times first, widths second)

Every objective is deterministic, so repeated runs reproduce bit-identical
histories.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import QuantumState, propagate_waveform
from .errors import ConvergenceError
from .lct import LctConfig, refined_config, run_lct
from .model import SystemParams, build_drift_hamiltonian, eigendecompose
from .pulses import (
    AnalyticPulseParams,
    Waveform,
    analytic_samples,
    lowpass_filter,
    natural_duration,
    time_reverse,
    truncate_with_gaussian_tail,
)

log = logging.getLogger(__name__)

# Simplex coefficients: reflection, expansion, contraction, shrink.
_ALPHA, _GAMMA, _RHO, _SHRINK = 1.0, 2.0, 0.5, 0.5

_PENALTY = 1e6


@dataclass
class OptimizationReport:
    """Search record shared by all drivers.

    history holds one (params, objective) pair per evaluation; best_params
    is a plain dict.  forward_error / reverse_error are filled by the
    transfer drivers and stay None for generic searches.
    """

    best_params: dict
    best_value: float
    evaluations: int
    history: list = field(default_factory=list)
    converged: bool = False
    forward_error: float | None = None
    reverse_error: float | None = None

    def __post_init__(self):
        for err in (self.forward_error, self.reverse_error):
            if err is not None and not 0.0 <= err <= 1.0:
                raise ValueError("transfer errors must lie in [0, 1]")


@dataclass(frozen=True)
class ReversibilityConfig:
    """Settings for the cutoff / gain reversibility search."""

    lambda2_init: float = 300.0
    lambda2_bounds: tuple = (100.0, 1000.0)
    cutoff_candidates_ghz: tuple = (0.40, 0.45, 0.50)
    cutoff_init_ghz: float | None = None
    fidelity_goal: float = 1e-6
    simplex_tolerance: float = 1e-3
    max_evals: int = 60
    max_outer_iters: int = 8


def _simplex_diameter(simplex: np.ndarray) -> float:
    best = simplex[0]
    return max(float(np.linalg.norm(v - best)) for v in simplex[1:])


def nelder_mead(
    objective,
    x0: np.ndarray,
    bounds: list,
    tolerance: float,
    max_evals: int,
    initial_spread: float = 0.1,
    target_value: float | None = None,
) -> OptimizationReport:
    """Simplex minimization with clip-plus-penalty bound handling.

    Out-of-bounds candidates are evaluated at the clipped point with
    _PENALTY * (squared excess) added, which steers the simplex back inside
    without ever calling the objective outside its domain.  Terminates when
    the simplex diameter falls below `tolerance`, when `max_evals` is
    spent, or as soon as the best value drops below `target_value`.
    """
    x0 = np.asarray(x0, dtype=float)
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError("x0 must start inside the bounds")

    history = []
    state = {"evals": 0}

    def f(x):
        xc = np.clip(x, lo, hi)
        excess = x - xc
        value = objective(xc) + _PENALTY * float(np.dot(excess, excess))
        state["evals"] += 1
        history.append((xc.copy(), value))
        return value

    n = x0.size
    simplex = [x0.copy()]
    for i in range(n):
        step = np.zeros(n)
        step[i] = initial_spread * (abs(x0[i]) if x0[i] != 0.0 else 1.0)
        simplex.append(np.clip(x0 + step, lo, hi))
    simplex = np.array(simplex)
    values = np.array([f(v) for v in simplex])

    def done():
        if target_value is not None and values.min() < target_value:
            return True
        if state["evals"] >= max_evals:
            return True
        order = np.argsort(values)
        return _simplex_diameter(simplex[order]) < tolerance

    while not done():
        order = np.argsort(values)
        simplex, values = simplex[order], values[order]
        centroid = simplex[:-1].mean(axis=0)

        xr = centroid + _ALPHA * (centroid - simplex[-1])
        fr = f(xr)
        if fr < values[0]:
            xe = centroid + _GAMMA * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            xc = centroid + _RHO * (simplex[-1] - centroid)
            fc = f(xc)
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
            else:
                for i in range(1, len(simplex)):
                    simplex[i] = simplex[0] + _SHRINK * (simplex[i] - simplex[0])
                    values[i] = f(simplex[i])

    order = np.argsort(values)
    simplex, values = simplex[order], values[order]
    hit_goal = target_value is not None and values[0] < target_value
    converged = hit_goal or _simplex_diameter(simplex) < tolerance
    return OptimizationReport(
        best_params={f"x{i}": float(xi) for i, xi in enumerate(simplex[0])},
        best_value=float(values[0]),
        evaluations=state["evals"],
        history=history,
        converged=converged,
    )


# ----------------------------------------------------------------
# transfer-error objectives
# ----------------------------------------------------------------

def reverse_error(
    params: SystemParams,
    wf: Waveform,
    source_label: str,
    destination_label: str,
) -> float:
    """1 - P(destination) after applying wf to the source eigenstate."""
    spectrum = eigendecompose(build_drift_hamiltonian(params))
    psi0 = QuantumState(amplitudes=spectrum.state(source_label))
    traj = propagate_waveform(params, psi0, wf, tracked=[destination_label])
    return 1.0 - traj.final_population(destination_label)


def forward_and_reverse_error(
    params: SystemParams,
    wf: Waveform,
    source_label: str,
    destination_label: str,
) -> tuple:
    """Transfer errors for wf applied forward and to the swapped pair."""
    fwd = reverse_error(params, wf, source_label, destination_label)
    rev = reverse_error(params, wf, destination_label, source_label)
    return fwd, rev


# ----------------------------------------------------------------
# reversibility search
# ----------------------------------------------------------------

def optimize_reversible(
    params: SystemParams,
    bare_pulse: Waveform,
    base_config: LctConfig,
    cfg: ReversibilityConfig,
) -> tuple:
    """Find a filter cutoff and correction gain giving two-way transfer.

    For each cutoff candidate (ascending) the bare pulse is low-passed into
    a reference, and a 1-d simplex search over lambda2 reshapes the
    correction term; the objective is the reverse transfer error.  Forward
    transfer must stay below the fidelity goal at every evaluation; a
    candidate breaking that aborts the run, because the correction stage is
    supposed to be insensitive to lambda2 in its working range.

    Returns (best total waveform, OptimizationReport).
    """
    source = base_config.initial_label
    destination = base_config.target_label

    fwd_bare = reverse_error(params, bare_pulse, source, destination)
    if fwd_bare >= cfg.fidelity_goal:
        raise ConvergenceError(
            f"bare pulse forward error {fwd_bare:.3e} misses the goal"
        )

    cutoffs = [
        c for c in cfg.cutoff_candidates_ghz
        if cfg.cutoff_init_ghz is None or c >= cfg.cutoff_init_ghz
    ]
    if not cutoffs:
        raise ValueError("no cutoff candidates at or above cutoff_init_ghz")

    best = {"value": np.inf, "wf": None, "fwd": None, "cutoff": None, "lambda2": None}
    history = []
    evaluations = 0
    converged = False

    for cutoff in cutoffs[: cfg.max_outer_iters]:
        reference = lowpass_filter(
            bare_pulse, cutoff, omega_tc_max=params.omega_tc_max
        )

        def objective(x, _cutoff=cutoff, _ref=reference):
            lam2 = float(x[0])
            run = run_lct(params, refined_config(base_config, _ref, lam2))
            fwd = run.final_error
            if fwd >= cfg.fidelity_goal:
                raise ConvergenceError(
                    f"forward error {fwd:.3e} at cutoff {_cutoff} GHz, "
                    f"lambda2 {lam2:.4g}; correction stage is unstable here"
                )
            rev = reverse_error(params, run.waveform, destination, source)
            history.append(
                ({"cutoff_ghz": _cutoff, "lambda2": lam2,
                  "forward_error": fwd, "reverse_error": rev}, rev)
            )
            if rev < best["value"]:
                best.update(
                    value=rev, wf=run.waveform, fwd=fwd,
                    cutoff=_cutoff, lambda2=lam2,
                )
            return rev

        report = nelder_mead(
            objective,
            x0=np.array([cfg.lambda2_init]),
            bounds=[cfg.lambda2_bounds],
            tolerance=cfg.simplex_tolerance * cfg.lambda2_init,
            max_evals=cfg.max_evals,
            target_value=cfg.fidelity_goal,
        )
        evaluations += report.evaluations
        log.info(
            "cutoff %.3g GHz: best reverse error %.3e after %d evals",
            cutoff, report.best_value, report.evaluations,
        )
        if report.best_value < cfg.fidelity_goal:
            converged = True
            break

    out = OptimizationReport(
        best_params={"cutoff_ghz": best["cutoff"], "lambda2": best["lambda2"]},
        best_value=best["value"],
        evaluations=evaluations,
        history=history,
        converged=converged,
        forward_error=best["fwd"],
        reverse_error=best["value"],
    )
    return best["wf"], out


# ----------------------------------------------------------------
# truncation search
# ----------------------------------------------------------------

def optimize_truncation(
    params: SystemParams,
    pulse: Waveform,
    sigma: float,
    source_label: str,
    destination_label: str,
    fidelity_goal: float = 1e-6,
    simplex_tolerance: float = 1e-3,
    max_evals: int = 60,
) -> tuple:
    """Shorten a reversible pulse with a half-Gaussian tail.

    tau starts where the reverse process first reaches 99% transfer and is
    then tuned by a 1-d simplex on max(forward, reverse) error.  Returns
    (truncated waveform, OptimizationReport).
    """
    spectrum = eigendecompose(build_drift_hamiltonian(params))
    psi_rev = QuantumState(amplitudes=spectrum.state(destination_label))
    traj = propagate_waveform(params, psi_rev, pulse, tracked=[source_label])
    tau0 = traj.time_to_population(source_label, 0.99)
    if tau0 is None:
        raise ConvergenceError("reverse transfer never reaches 99%")

    best = {"value": np.inf, "wf": None, "fwd": None, "rev": None, "tau": None}

    def objective(x):
        tau = float(x[0])
        wt = truncate_with_gaussian_tail(pulse, tau, sigma)
        fwd, rev = forward_and_reverse_error(
            params, wt, source_label, destination_label
        )
        value = max(fwd, rev)
        if value < best["value"]:
            best.update(value=value, wf=wt, fwd=fwd, rev=rev, tau=tau)
        return value

    report = nelder_mead(
        objective,
        x0=np.array([tau0]),
        bounds=[(0.5 * tau0, pulse.duration)],
        tolerance=simplex_tolerance * tau0,
        max_evals=max_evals,
        target_value=fidelity_goal,
    )
    out = OptimizationReport(
        best_params={"tau_ns": best["tau"], "sigma_ns": sigma},
        best_value=best["value"],
        evaluations=report.evaluations,
        history=report.history,
        converged=report.best_value < fidelity_goal,
        forward_error=best["fwd"],
        reverse_error=best["rev"],
    )
    return best["wf"], out


# ----------------------------------------------------------------
# analytic-pulse fit
# ----------------------------------------------------------------

_STAGE1_FIELDS = ("alpha1", "alpha3", "tau1", "tau2", "tau3")
_STAGE2_FIELDS = ("sigma1", "sigma2", "sigma3")

DEFAULT_ANALYTIC_BOUNDS = {
    "alpha1": (-20.0, -1.0),   # rad/ns
    "alpha3": (-20.0, -1.0),
    "tau1": (1.0, 15.0),
    "tau2": (1.0, 20.0),
    "tau3": (1.0, 25.0),
    "sigma1": (0.05, 5.0),
    "sigma2": (0.05, 5.0),
    "sigma3": (0.05, 5.0),
}


def _analytic_objective(params, source_label, destination_label, dt, omega_tc_max):
    spectrum = eigendecompose(build_drift_hamiltonian(params))
    psi0 = QuantumState(amplitudes=spectrum.state(source_label))
    dest_vec = spectrum.state(destination_label)

    def evaluate(p: AnalyticPulseParams) -> float:
        # Ordering violations are penalized, not fatal: the simplex may
        # wander through tau2 < tau1 territory while contracting.
        penalty = 0.0
        if p.tau1 > p.tau2:
            penalty += _PENALTY * (p.tau1 - p.tau2) ** 2
        if p.tau2 > p.tau3:
            penalty += _PENALTY * (p.tau2 - p.tau3) ** 2
        if p.alpha1 >= 0.0:
            penalty += _PENALTY * (1.0 + p.alpha1) ** 2
        if p.alpha3 >= 0.0:
            penalty += _PENALTY * (1.0 + p.alpha3) ** 2
        if penalty > 0.0:
            return 1.0 + penalty
        duration = natural_duration(p)
        n = max(2, int(round(duration / dt)))
        samples = analytic_samples(p, np.arange(n) * dt)
        samples = np.clip(samples, -omega_tc_max * (1.0 - 1e-3), 0.0)
        wf = Waveform(dt=dt, samples=samples)
        traj = propagate_waveform(params, psi0, wf, tracked=[destination_label])
        return 1.0 - traj.final_population(destination_label)

    return evaluate


def fit_analytic_pulse(
    params: SystemParams,
    init: AnalyticPulseParams,
    source_label: str,
    destination_label: str,
    bounds: dict | None = None,
    dt: float = 0.01,
    fidelity_goal: float = 1e-6,
    simplex_tolerance: float = 1e-6,
    max_evals_per_stage: int = 2000,
) -> tuple:
    """Two-stage fit of the closed-form pulse.

    Stage 1 moves the amplitudes and switch times with the widths frozen;
    stage 2 relaxes the widths around the stage-1 optimum.  Stage 2 starts
    from the stage-1 point, so its best value can only improve on stage 1.
    Returns (AnalyticPulseParams, OptimizationReport).
    """
    bounds = {**DEFAULT_ANALYTIC_BOUNDS, **(bounds or {})}
    evaluate = _analytic_objective(
        params, source_label, destination_label, dt, params.omega_tc_max
    )

    current = init

    def stage(fields, frozen: AnalyticPulseParams, spread: float):
        def obj(x):
            p = replace(frozen, **dict(zip(fields, x)))
            return evaluate(p)

        x0 = np.array([getattr(frozen, f) for f in fields])
        report = nelder_mead(
            obj,
            x0=x0,
            bounds=[bounds[f] for f in fields],
            tolerance=simplex_tolerance * max(1.0, float(np.abs(x0).max())),
            max_evals=max_evals_per_stage,
            initial_spread=spread,
            target_value=None,
        )
        x_best = np.array([report.best_params[f"x{i}"] for i in range(len(fields))])
        return replace(frozen, **dict(zip(fields, x_best))), report

    current, rep1 = stage(_STAGE1_FIELDS, current, spread=0.05)
    current, rep2 = stage(_STAGE2_FIELDS, current, spread=0.10)

    best_value = min(rep1.best_value, rep2.best_value)
    report = OptimizationReport(
        best_params={f: getattr(current, f) for f in
                     _STAGE1_FIELDS + _STAGE2_FIELDS},
        best_value=best_value,
        evaluations=rep1.evaluations + rep2.evaluations,
        history=rep1.history + rep2.history,
        converged=best_value < fidelity_goal,
        forward_error=best_value,
    )
    return current, report


def analytic_init_from_model(
    params: SystemParams,
    gap_minima: list,
    leg_duration: float,
    full_duration: float,
    tau1: float = 5.5,
) -> AnalyticPulseParams:
    """Initialization heuristic for the analytic fit.

    Amplitudes start at the two avoided-crossing shifts (deepest first:
    the pulse visits the far crossing, then parks at the near one), switch
    times at the observed transfer legs, widths small so stage 1 behaves
    almost like a two-plateau pulse.
    """
    if len(gap_minima) < 2:
        raise ValueError("need two avoided crossings to initialize")
    shifts = sorted(m.delta_omega_tc for m in gap_minima)
    return AnalyticPulseParams(
        alpha1=shifts[0],           # deeper crossing first
        alpha3=shifts[-1],
        tau1=tau1,
        tau2=tau1 + leg_duration,
        tau3=tau1 + full_duration,
        sigma1=0.5,
        sigma2=0.2,
        sigma3=0.5,
    )
