"""Local control: on-the-fly feedback shaping of the coupler shift.

The target population P_j = |<psi_j|Psi>|^2 (psi_j a drift eigenstate)
changes only through the control term, at the exact rate

    dP_j/dt = delta_omega_tc * Im(<Psi|sz_TC|psi_j><psi_j|Psi>).

Choosing the shift proportional to that same imaginary part makes the rate
a perfect square, so the transfer is monotone by construction:

    delta_omega_raw = -lambda * Im( sum_k <psi_j|sz_TC|psi_k>
                                          <psi_k|Psi><psi_j|Psi>* )

where the sum runs over the n_prime lowest drift eigenstates (all of them
unless a projection is requested; then the law is approximate but cheap
for large systems).  The raw value is clamped to (-omega_tc_max + floor, 0]
because the coupler can only tune down from its sweet spot.

The loop is explicit and causal: the feedback computed from the state at
the end of step k is the sample applied on step k+1.  The first sample is
therefore 0, and with the standard seeding (a sqrt(eta) target admixture,
all amplitudes real at t=0) the law would start from 0 regardless.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import QuantumState, TrajectoryRecord
from .errors import ConfigError
from .model import (
    DriftSpectrum,
    SystemParams,
    build_control_generator,
    build_drift_hamiltonian,
    eigendecompose,
    tc_sigma_z,
)
from .pulses import CLAMP_FLOOR_FRACTION, Waveform

# Size bound for the per-value propagator cache inside run_lct.  Capped-off
# steps (applied shift exactly 0.0) hit it constantly; active steps rarely.
_CACHE_LIMIT = 4096


@dataclass(frozen=True)
class LctConfig:
    """One local-control run.

    lambda_         feedback gain for a bare run (no reference)
    eta             seeding weight for the target admixture at t=0
    dt              sample period (ns)
    t_max           run length (ns)
    initial_label   bare label of the starting drift eigenstate
    target_label    bare label of the drift eigenstate to populate
    n_prime         number of low-lying eigenstates kept in the feedback
                    sum (None = all, the exact law)
    reference       optional fixed waveform added under the feedback; the
                    run then shapes only the correction term
    lambda2         feedback gain for the correction term; required when a
                    reference is present
    tracked         bare labels recorded in the trajectory (None = all)
    """

    lambda_: float
    eta: float
    dt: float
    t_max: float
    initial_label: str
    target_label: str
    n_prime: int | None = None
    reference: Waveform | None = None
    lambda2: float | None = None
    tracked: tuple | None = None

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ConfigError("lambda must be non-negative")
        if not 0.0 <= self.eta < 1.0:
            raise ConfigError("eta must be in [0, 1)")
        if self.dt <= 0 or self.t_max <= 0:
            raise ConfigError("dt and t_max must be positive")
        if self.t_max < self.dt:
            raise ConfigError("t_max shorter than one sample")
        if self.reference is not None and self.lambda2 is None:
            raise ConfigError("lambda2 is required when a reference is given")
        if self.lambda2 is not None and self.lambda2 < 0:
            raise ConfigError("lambda2 must be non-negative")


@dataclass
class LctResult:
    """Output of run_lct.

    waveform is the applied (total) pulse; lct_component is the shaped
    term alone, equal to the waveform when no reference was present.
    clamp_saturated flags a gain so large that more than half of the steps
    sat at the clamp floor.
    """

    waveform: Waveform
    lct_component: Waveform
    trajectory: TrajectoryRecord
    final_error: float
    clamp_saturated: bool


def seed_state(psi0: QuantumState, target: QuantumState, eta: float) -> QuantumState:
    """Mix a small target amplitude into the initial state.

    |Psi'> = sqrt(eta) |target> + sqrt(1 - eta) |psi0>, renormalized.  The
    feedback law is blind to a target population of exactly zero; eta > 0
    breaks that fixed point.
    """
    if not 0.0 <= eta < 1.0:
        raise ValueError("eta must be in [0, 1)")
    mixed = np.sqrt(eta) * target.amplitudes + np.sqrt(1.0 - eta) * psi0.amplitudes
    norm = np.linalg.norm(mixed)
    if norm == 0.0:
        raise ValueError("seeding produced the zero vector")
    return QuantumState(amplitudes=mixed / norm)


def _clamp(value: float, omega_tc_max: float) -> float:
    lo = -omega_tc_max * (1.0 - CLAMP_FLOOR_FRACTION)
    return min(0.0, max(lo, value))


def feedback_value(
    state: QuantumState,
    spectrum: DriftSpectrum,
    target_index: int,
    lambda_: float,
    n_prime: int | None = None,
    *,
    omega_tc_max: float,
) -> float:
    """Clamped feedback sample for the given instantaneous state.

    target_index addresses the ascending spectrum; n_prime restricts the
    eigenbasis sum to the lowest n_prime states and must exceed
    target_index.
    """
    dim = spectrum.dim
    if n_prime is None:
        n_prime = dim
    if not 0 < n_prime <= dim:
        raise ValueError("n_prime must be in (0, dim]")
    if not 0 <= target_index < n_prime:
        raise ValueError("target_index must lie below n_prime")
    v = spectrum.eigenvectors
    sz = _sz_for_dim(dim)
    c = v.conj().T @ state.amplitudes
    m_row = v[:, target_index].conj() @ sz @ v[:, :n_prime]
    raw = -lambda_ * float(np.imag(np.dot(m_row, c[:n_prime]) * np.conj(c[target_index])))
    return _clamp(raw, omega_tc_max)


def _sz_for_dim(dim: int) -> np.ndarray:
    """Bare sz on the last (coupler) site; the TC bit varies fastest."""
    diag = np.empty(dim)
    diag[0::2] = 1.0
    diag[1::2] = -1.0
    return np.diag(diag)


def run_lct(params: SystemParams, config: LctConfig) -> LctResult:
    """Shape a coupler-shift pulse by local-control feedback.

    Returns the applied waveform (reference plus shaped term, jointly
    clamped), the shaped term alone, the full trajectory over the run, and
    the final target-population error.
    """
    spectrum = eigendecompose(build_drift_hamiltonian(params))
    dim = spectrum.dim
    j = spectrum.index_of_label(config.target_label)
    i0 = spectrum.index_of_label(config.initial_label)

    n_prime = config.n_prime
    if n_prime is not None:
        if not 0 < n_prime <= dim:
            raise ConfigError("n_prime must be in (0, dim]")
        if j >= n_prime:
            raise ConfigError("target eigenstate lies outside the projected set")

    n_steps = int(round(config.t_max / config.dt))
    if abs(n_steps * config.dt - config.t_max) > 1e-9 * config.t_max:
        raise ConfigError("t_max must be an integer number of samples")

    reference = np.zeros(n_steps)
    if config.reference is not None:
        ref = config.reference
        if abs(ref.dt - config.dt) > 1e-12:
            raise ConfigError("reference sample period differs from the run dt")
        m = min(ref.n, n_steps)
        reference[:m] = ref.samples[:m]
        gain = config.lambda2
    else:
        gain = config.lambda_

    psi0 = QuantumState(amplitudes=spectrum.eigenvectors[:, i0])
    psi = seed_state(psi0, QuantumState(amplitudes=spectrum.eigenvectors[:, j]),
                     config.eta).amplitudes

    v = spectrum.eigenvectors
    h_d = build_drift_hamiltonian(params).matrix
    h_d_diag = np.diag(h_d).copy()
    gen_diag = np.diag(build_control_generator(params).matrix).copy()
    sz = tc_sigma_z(params).matrix
    # Feedback row <psi_j| sz_TC |psi_k> in the drift eigenbasis; the full
    # law is the projected law at n_prime = dim, same arithmetic, so the
    # two are identical sample for sample.
    n_keep = n_prime if n_prime is not None else dim
    m_row = (v[:, j].conj() @ sz @ v)[:n_keep]

    tracked = list(config.tracked) if config.tracked is not None else list(
        sorted(spectrum.bare_labels, key=lambda lab: int(lab, 2))
    )
    track_idx = np.array([spectrum.index_of_label(lab) for lab in tracked])

    lo_clamp = -params.omega_tc_max * (1.0 - CLAMP_FLOOR_FRACTION)
    cache: dict = {}
    h_buf = h_d.copy()
    diag_idx = np.arange(dim)

    total = np.zeros(n_steps)
    shaped = np.zeros(n_steps)
    pops = np.empty((n_steps + 1, track_idx.size))

    vt = v.conj().T
    c = vt @ psi
    pops[0] = np.abs(c[track_idx]) ** 2
    raw = 0.0  # nothing computed yet; first sample is the reference alone
    saturated = 0

    for k in range(n_steps):
        applied = reference[k] + raw
        if applied > 0.0:
            applied = 0.0
        elif applied < lo_clamp:
            applied = lo_clamp
            saturated += 1
        total[k] = applied
        shaped[k] = applied - reference[k]

        step = cache.get(applied)
        if step is None:
            h_buf[diag_idx, diag_idx] = h_d_diag + applied * gen_diag
            w, u = np.linalg.eigh(h_buf)
            step = (u, np.exp(-1j * w * config.dt))
            if len(cache) >= _CACHE_LIMIT:
                cache.clear()
            cache[applied] = step
        u, phases = step
        psi = u @ (phases * (u.conj().T @ psi))

        c = vt @ psi
        pops[k + 1] = np.abs(c[track_idx]) ** 2
        raw = -gain * float(
            np.imag(np.dot(m_row, c[:n_keep]) * np.conj(c[j]))
        )

    trajectory = TrajectoryRecord(
        times=np.arange(n_steps + 1) * config.dt,
        control=total.copy(),
        populations={lab: pops[:, i] for i, lab in enumerate(tracked)},
        final_state=QuantumState(amplitudes=psi),
    )
    final_error = 1.0 - float(np.abs(c[j]) ** 2)
    return LctResult(
        waveform=Waveform(dt=config.dt, samples=total),
        lct_component=Waveform(dt=config.dt, samples=shaped),
        trajectory=trajectory,
        final_error=final_error,
        clamp_saturated=saturated > n_steps // 2,
    )


def refined_config(base: LctConfig, reference: Waveform, lambda2: float) -> LctConfig:
    """Derive the correction-stage config from a bare-stage config.

    The correction stage runs unseeded: the reference pulse already moves
    population into the target, which switches the feedback on without an
    artificial target admixture.  A seed would also contaminate the emitted
    pulse, which must act on the pure initial state.
    """
    return replace(base, reference=reference, lambda2=lambda2, eta=0.0)
