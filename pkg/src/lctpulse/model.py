"""Device model: qubits exchange-coupled to a flux-tunable coupler.

The system is n fixed-frequency qubits, each coupled to one tunable coupler
(TC) through an excitation-exchange term.  In the product basis
|q_1 q_2 ... q_TC> the Hamiltonian reads

    H(t) = -1/2 sum_i omega_i sz_i
           + sum_i g_i (sp_i sm_TC + sm_i sp_TC)
           - 1/2 omega_tc(t) sz_TC

with sz|0> = +|0>, so -1/2 omega sz prices one excitation at +omega.
The drift H_d fixes the coupler at its maximum frequency omega_tc_max; the
only control is the shift delta_omega_tc(t) = omega_tc(t) - omega_tc_max,
which enters through the generator -1/2 sz_TC.

All frequencies in this module are angular (rad/ns).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import DegenerateLevelsError, UnknownLabelError
from .units import TWO_PI

# Hilbert-space ceiling for dense eigendecomposition.
DIM_CAP = 2 ** 14

# Relative threshold for the Hermiticity sanity check.
_HERM_TOL = 1e-12

# Eigenvalue-difference floor below which nonadiabatic couplings blow up.
_DEGENERACY_FLOOR = 1e-9


# ================================================================
# parameters
# ================================================================

@dataclass(frozen=True)
class SystemParams:
    """Static device parameters, angular units.

    n_qubits        number of fixed-frequency qubits
    omega           qubit frequencies (rad/ns), length n_qubits
    g               qubit-TC exchange couplings (rad/ns), length n_qubits
    omega_tc_max    TC frequency at the flux sweet spot (rad/ns)
    """

    n_qubits: int
    omega: tuple
    g: tuple
    omega_tc_max: float

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if len(self.omega) != self.n_qubits or len(self.g) != self.n_qubits:
            raise ValueError("omega and g must each have n_qubits entries")
        if any(w <= 0 for w in self.omega) or self.omega_tc_max <= 0:
            raise ValueError("frequencies must be positive")
        if any(gi <= 0 for gi in self.g):
            raise ValueError("couplings must be positive")
        if self.dim > DIM_CAP:
            raise ValueError(
                "system too large for dense eigendecomposition; use projected LCT"
            )

    @property
    def dim(self) -> int:
        return 2 ** (self.n_qubits + 1)

    @classmethod
    def from_ghz(cls, qubit_freqs_ghz, couplings_ghz, tc_max_freq_ghz):
        """Build from ordinary frequencies in GHz (the config convention)."""
        return cls(
            n_qubits=len(qubit_freqs_ghz),
            omega=tuple(TWO_PI * f for f in qubit_freqs_ghz),
            g=tuple(TWO_PI * g for g in couplings_ghz),
            omega_tc_max=TWO_PI * tc_max_freq_ghz,
        )


def product_labels(n_qubits: int) -> list:
    """All bare labels 'q_1...q_n q_TC' in product-basis (binary) order."""
    return ["".join(bits) for bits in product("01", repeat=n_qubits + 1)]


def label_index(label: str, n_qubits: int) -> int:
    """Product-basis index of a bare label; the TC bit is last."""
    if len(label) != n_qubits + 1 or any(c not in "01" for c in label):
        raise UnknownLabelError(f"bad label {label!r} for {n_qubits} qubits + TC")
    return int(label, 2)


# ================================================================
# operators
# ================================================================

@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix with a construction-time sanity check."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator must be a square matrix")
        scale = np.abs(m).max()
        if scale > 0 and np.abs(m - m.conj().T).max() > _HERM_TOL * scale:
            raise ValueError("matrix is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


_SZ = np.diag([1.0, -1.0])          # sz|0> = +|0>
_SP = np.array([[0.0, 0.0], [1.0, 0.0]])   # |1><0|
_SM = _SP.T
_ID = np.eye(2)


def _site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Embed a single 2x2 operator at `site` (TC is site n_sites-1)."""
    out = np.array([[1.0]])
    for k in range(n_sites):
        out = np.kron(out, op if k == site else _ID)
    return out


def build_drift_hamiltonian(params: SystemParams, delta_omega_tc: float = 0.0) -> HermitianOperator:
    """H_d plus an optional static coupler shift delta_omega_tc (rad/ns)."""
    n_sites = params.n_qubits + 1
    tc = n_sites - 1
    h = np.zeros((params.dim, params.dim))
    for i in range(params.n_qubits):
        h += -0.5 * params.omega[i] * _site_operator(_SZ, i, n_sites)
        flip = _site_operator(_SP, i, n_sites) @ _site_operator(_SM, tc, n_sites)
        h += params.g[i] * (flip + flip.T)
    omega_tc = params.omega_tc_max + delta_omega_tc
    h += -0.5 * omega_tc * _site_operator(_SZ, tc, n_sites)
    return HermitianOperator(h)


def build_control_generator(params: SystemParams) -> HermitianOperator:
    """d H / d delta_omega_tc = -1/2 sz_TC (diagonal: -1/2 for TC ground)."""
    n_sites = params.n_qubits + 1
    return HermitianOperator(-0.5 * _site_operator(_SZ, n_sites - 1, n_sites))


def tc_sigma_z(params: SystemParams) -> HermitianOperator:
    """Bare sz on the coupler site, used by the feedback law."""
    n_sites = params.n_qubits + 1
    return HermitianOperator(_site_operator(_SZ, n_sites - 1, n_sites))


# ================================================================
# flux map
# ================================================================

@dataclass(frozen=True)
class FluxValue:
    """External flux in units of the flux quantum."""

    phi_over_phi0: float


def flux_to_frequency(params: SystemParams, flux: FluxValue) -> float:
    """omega_tc = omega_tc_max * sqrt(|cos(pi Phi/Phi_0)|)."""
    return params.omega_tc_max * np.sqrt(np.abs(np.cos(np.pi * flux.phi_over_phi0)))


def frequency_to_flux(params: SystemParams, omega_tc: float) -> FluxValue:
    """Smallest non-negative flux that tunes the coupler to omega_tc.

    Restricted to the principal branch Phi/Phi_0 in [0, 1/2]; outside
    0 <= omega_tc <= omega_tc_max there is no solution.
    """
    if not 0.0 <= omega_tc <= params.omega_tc_max:
        raise ValueError(
            f"omega_tc={omega_tc:.6g} rad/ns outside [0, {params.omega_tc_max:.6g}]"
        )
    ratio_sq = (omega_tc / params.omega_tc_max) ** 2
    return FluxValue(phi_over_phi0=float(np.arccos(ratio_sq) / np.pi))


# ================================================================
# drift spectrum
# ================================================================

@dataclass
class DriftSpectrum:
    """Eigendecomposition with bare-state labels attached.

    eigenvalues     ascending (rad/ns)
    eigenvectors    orthonormal columns, gauge-fixed so each vector's
                    largest-magnitude component is real and positive
    bare_labels     bare label assigned to each eigenvector; always a
                    permutation of the product labels
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    bare_labels: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]

    def index_of_label(self, label: str) -> int:
        try:
            return self.bare_labels.index(label)
        except ValueError:
            raise UnknownLabelError(
                f"label {label!r} not present in spectrum"
            ) from None

    def state(self, label: str) -> np.ndarray:
        """Eigenvector assigned to `label` (copy)."""
        return self.eigenvectors[:, self.index_of_label(label)].copy()


def _gauge_fix(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-|.| component is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        pivot = col[np.argmax(np.abs(col))]
        mag = abs(pivot)
        if mag > 0:
            out[:, j] = col * (np.conj(pivot) / mag)
    if np.iscomplexobj(out) and np.abs(out.imag).max() == 0.0:
        out = out.real
    return out


def _assign_labels(vectors: np.ndarray) -> list:
    """Greedy injective bare-label assignment by squared overlap.

    Candidate (basis index, eigenvector) pairs are visited in order of
    decreasing overlap; ties fall to the lowest product-basis index.
    """
    dim = vectors.shape[0]
    n_qubits = int(np.log2(dim)) - 1
    labels = product_labels(n_qubits)
    overlap = np.abs(vectors) ** 2  # [basis, vec]
    order = sorted(
        ((i, j) for i in range(dim) for j in range(dim)),
        key=lambda ij: (-overlap[ij[0], ij[1]], ij[0], ij[1]),
    )
    assigned = [None] * dim
    used_basis = set()
    for i, j in order:
        if assigned[j] is None and i not in used_basis:
            assigned[j] = labels[i]
            used_basis.add(i)
    return assigned


def eigendecompose(h: HermitianOperator) -> DriftSpectrum:
    """Ascending eigendecomposition with gauge fixing and label assignment."""
    vals, vecs = np.linalg.eigh(h.matrix)
    vecs = _gauge_fix(vecs)
    return DriftSpectrum(
        eigenvalues=vals, eigenvectors=vecs, bare_labels=_assign_labels(vecs)
    )


def nonadiabatic_coupling(
    params: SystemParams, j: int, k: int, delta_omega_tc: float
) -> float:
    """Hellmann-Feynman coupling <j| dH/d delta |k> / (eps_j - eps_k).

    Indices j, k address the full ascending spectrum at the given coupler
    shift.  Raises DegenerateLevelsError when the pair is closer than
    1e-9 rad/ns, where the expression is singular.
    """
    if j == k:
        raise ValueError("coupling defined only between distinct levels")
    spec = eigendecompose(build_drift_hamiltonian(params, delta_omega_tc))
    gap = spec.eigenvalues[j] - spec.eigenvalues[k]
    if abs(gap) < _DEGENERACY_FLOOR:
        raise DegenerateLevelsError(
            f"levels {j},{k} degenerate to {gap:.3e} rad/ns at "
            f"delta_omega_tc={delta_omega_tc:.6g}"
        )
    gen = build_control_generator(params).matrix
    vj = spec.eigenvectors[:, j]
    vk = spec.eigenvectors[:, k]
    return float(np.real(np.vdot(vj, gen @ vk)) / gap)


# ================================================================
# sweeps
# ================================================================

def sweep_eigenvalues(params: SystemParams, deltas: np.ndarray) -> np.ndarray:
    """Eigenvalues (ascending, rad/ns) at each coupler shift; shape (m, dim)."""
    deltas = np.asarray(deltas, dtype=float)
    out = np.empty((deltas.size, params.dim))
    for i, d in enumerate(deltas):
        out[i] = np.linalg.eigvalsh(build_drift_hamiltonian(params, d).matrix)
    return out


def _single_excitation_positions(spec: DriftSpectrum) -> np.ndarray:
    """Indices (ascending) of eigenstates whose bare label has one excitation."""
    return np.array(
        [i for i, lab in enumerate(spec.bare_labels) if lab.count("1") == 1]
    )


@dataclass(frozen=True)
class GapMinimum:
    """Location of an avoided crossing within the single-excitation sector."""

    delta_omega_tc: float      # rad/ns at the gap minimum
    gap: float                 # rad/ns
    branch_pair: tuple         # indices within the sorted single-exc levels


def single_excitation_gap_minima(params: SystemParams, deltas: np.ndarray) -> list:
    """Interior minima of adjacent single-excitation gaps along a sweep.

    Exchange coupling conserves excitation number, so the single-excitation
    levels are identified per point by their bare label and tracked as the
    sorted trio; adjacent-gap minima mark the avoided crossings.
    """
    deltas = np.asarray(deltas, dtype=float)
    n_single = params.n_qubits + 1
    gaps = np.empty((deltas.size, n_single - 1))
    for i, d in enumerate(deltas):
        spec = eigendecompose(build_drift_hamiltonian(params, d))
        levels = spec.eigenvalues[_single_excitation_positions(spec)]
        gaps[i] = np.diff(levels)
    minima = []
    for pair in range(n_single - 1):
        g = gaps[:, pair]
        i_min = int(np.argmin(g))
        if 0 < i_min < deltas.size - 1:  # interior minimum only
            minima.append(
                GapMinimum(
                    delta_omega_tc=float(deltas[i_min]),
                    gap=float(g[i_min]),
                    branch_pair=(pair, pair + 1),
                )
            )
    minima.sort(key=lambda m: -m.delta_omega_tc)
    return minima


def sweep_nonadiabatic_couplings(
    params: SystemParams, deltas: np.ndarray, pairs: list
) -> np.ndarray:
    """|d_jk| is not taken; raw signed couplings, shape (m, len(pairs))."""
    deltas = np.asarray(deltas, dtype=float)
    out = np.empty((deltas.size, len(pairs)))
    for i, d in enumerate(deltas):
        for c, (j, k) in enumerate(pairs):
            out[i, c] = nonadiabatic_coupling(params, j, k, d)
    return out
