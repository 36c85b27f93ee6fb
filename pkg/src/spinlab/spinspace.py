"""Symmetric collective-spin Hilbert space: Dicke basis, collective operators,
rotations, and moment evaluation.

The space of N spin-1/2 particles restricted to the fully symmetric sector has
dimension N+1 and is spanned by the joint eigenstates |m> of J^2 and J_z with
m = -N/2 ... N/2.  All operators here are dense complex matrices in that basis,
ordered by ascending m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpinSpace",
    "HermitianOperator",
    "KetState",
    "MixedState",
    "MomentData",
    "make_space",
    "collective_operator",
    "jx",
    "jy",
    "jz",
    "jplus",
    "jminus",
    "rotation",
    "rotate_state",
    "apply_unitary",
    "expectation",
    "variance",
    "moments",
    "n_effective",
]

_HERM_TOL = 1e-12
_NORM_TOL = 1e-10


@dataclass(frozen=True)
class SpinSpace:
    """Symmetric subspace of N qubits with the canonical ascending-m Dicke basis."""

    n_particles: int
    dim: int
    m_labels: np.ndarray = field(repr=False)

    @property
    def total_spin(self) -> float:
        return self.n_particles / 2.0


def make_space(n_particles: int) -> SpinSpace:
    """Construct the collective-spin space for ``n_particles`` >= 1 qubits."""
    if not isinstance(n_particles, (int, np.integer)) or n_particles < 1:
        raise ValueError(f"n_particles must be a positive integer, got {n_particles!r}")
    n = int(n_particles)
    labels = np.arange(n + 1, dtype=float) - n / 2.0
    labels.setflags(write=False)
    return SpinSpace(n_particles=n, dim=n + 1, m_labels=labels)


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix tagged with its space.

    Hermiticity is enforced by symmetrization (A + A^dag)/2 at construction to
    contain floating-point drift; inputs further than 1e-12 of the largest
    element from Hermitian are rejected.
    """

    space: SpinSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=complex)
        if a.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {a.shape} does not match dim {self.space.dim}")
        scale = np.max(np.abs(a)) if a.size else 0.0
        defect = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        if scale > 0 and defect > _HERM_TOL * max(scale, 1.0):
            raise ValueError(f"matrix is not Hermitian (defect {defect:.3e}, scale {scale:.3e})")
        sym = (a + a.conj().T) / 2.0
        sym.setflags(write=False)
        object.__setattr__(self, "matrix", sym)


@dataclass(frozen=True)
class KetState:
    """Pure state: complex amplitude vector over the basis of its space."""

    space: SpinSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if a.shape != (self.space.dim,):
            raise ValueError(f"amplitude shape {a.shape} does not match dim {self.space.dim}")
        norm2 = float(np.real(np.vdot(a, a)))
        if abs(norm2 - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    def density_matrix(self) -> MixedState:
        return MixedState(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class MixedState:
    """Density operator: Hermitian, unit trace, positive semidefinite."""

    space: SpinSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=complex)
        if a.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {a.shape} does not match dim {self.space.dim}")
        a = (a + a.conj().T) / 2.0
        tr = float(np.real(np.trace(a)))
        if abs(tr - 1.0) > _NORM_TOL:
            raise ValueError(f"trace must be 1, got {tr!r}")
        w = np.linalg.eigvalsh(a)
        if w[0] < -_NORM_TOL:
            raise ValueError(f"negative eigenvalue {w[0]:.3e}")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)


def _ladder_coeffs(space: SpinSpace) -> np.ndarray:
    # <m+1| J_+ |m> = sqrt(j(j+1) - m(m+1)) for the lower N bonds, j = N/2
    j = space.total_spin
    m = space.m_labels[:-1]
    return np.sqrt(j * (j + 1.0) - m * (m + 1.0))


def jz(space: SpinSpace) -> HermitianOperator:
    return HermitianOperator(space, np.diag(space.m_labels).astype(complex))


def jplus(space: SpinSpace) -> np.ndarray:
    """Raising operator J_+ (not Hermitian, returned as a plain matrix)."""
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    c = _ladder_coeffs(space)
    idx = np.arange(space.dim - 1)
    mat[idx + 1, idx] = c
    return mat

def jminus(space: SpinSpace) -> np.ndarray:
    """Lowering operator J_- = (J_+)^dag."""
    return jplus(space).conj().T


def jx(space: SpinSpace) -> HermitianOperator:
    jp = jplus(space)
    return HermitianOperator(space, (jp + jp.conj().T) / 2.0)


def jy(space: SpinSpace) -> HermitianOperator:
    jp = jplus(space)
    return HermitianOperator(space, (jp - jp.conj().T) / 2.0j)


def collective_operator(space: SpinSpace, axis) -> HermitianOperator:
    """J_n = n_x J_x + n_y J_y + n_z J_z for a unit 3-vector n."""
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,):
        raise ValueError("axis must be a 3-vector")
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        raise ValueError("axis has zero length")
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"axis must be a unit vector, |n| = {norm!r}")
    jp = jplus(space)
    mat = np.diag(space.m_labels.astype(complex)) * n[2]
    mat += (n[0] / 2.0) * (jp + jp.conj().T)
    mat += (n[1] / 2.0j) * (jp - jp.conj().T)
    return HermitianOperator(space, mat)


def rotation(space: SpinSpace, axis, angle: float) -> np.ndarray:
    """Unitary exp(-i angle J_n) via spectral decomposition of J_n.

    One code path for arbitrary generators; no Wigner-d closed forms.
    """
    if not np.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle!r}")
    jn = collective_operator(space, axis)
    w, v = np.linalg.eigh(jn.matrix)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def apply_unitary(state: KetState, u: np.ndarray) -> KetState:
    return KetState(state.space, u @ state.amplitudes)


def rotate_state(state: KetState, axis, angle: float) -> KetState:
    return apply_unitary(state, rotation(state.space, axis, angle))


def _require_same_space(state, op: HermitianOperator):
    if op.space is not state.space and op.space.dim != state.space.dim:
        raise ValueError("operator space does not match state space")


def expectation(state, op: HermitianOperator) -> float:
    """<A> for a ket or density matrix; real by Hermiticity."""
    _require_same_space(state, op)
    if isinstance(state, KetState):
        return float(np.real(np.vdot(state.amplitudes, op.matrix @ state.amplitudes)))
    return float(np.real(np.trace(state.matrix @ op.matrix)))


def variance(state, op: HermitianOperator) -> float:
    _require_same_space(state, op)
    if isinstance(state, KetState):
        apsi = op.matrix @ state.amplitudes
        m2 = float(np.real(np.vdot(apsi, apsi)))
        m1 = float(np.real(np.vdot(state.amplitudes, apsi)))
    else:
        m1 = expectation(state, op)
        m2 = float(np.real(np.trace(state.matrix @ op.matrix @ op.matrix)))
    return max(m2 - m1 * m1, 0.0)


@dataclass(frozen=True)
class MomentData:
    """First moments and symmetrized covariances of a list of observables."""

    means: np.ndarray
    covariance: np.ndarray


def moments(state, ops) -> MomentData:
    """Means <A_i> and symmetrized covariances <{A_i,A_j}>/2 - <A_i><A_j>.

    The covariance matrix is real symmetric and positive semidefinite up to
    rounding for any valid quantum state.
    """
    ops = list(ops)
    for op in ops:
        _require_same_space(state, op)
    k = len(ops)
    means = np.zeros(k)
    cov = np.zeros((k, k))
    if isinstance(state, KetState):
        applied = [op.matrix @ state.amplitudes for op in ops]
        for i in range(k):
            means[i] = float(np.real(np.vdot(state.amplitudes, applied[i])))
        for i in range(k):
            for j in range(i, k):
                # Re<A_i psi|A_j psi> = <{A_i,A_j}>/2 for Hermitian A
                cov[i, j] = cov[j, i] = float(np.real(np.vdot(applied[i], applied[j])))
    else:
        rho = state.matrix
        mats = [op.matrix for op in ops]
        for i in range(k):
            means[i] = float(np.real(np.trace(rho @ mats[i])))
        for i in range(k):
            rai = rho @ mats[i]
            for j in range(i, k):
                cov[i, j] = cov[j, i] = float(np.real(np.trace(rai @ mats[j])))
    cov -= np.outer(means, means)
    return MomentData(means=means, covariance=cov)


def n_effective(couplings) -> float:
    """Effective atom number (sum g_i)^2 / (sum g_i^2) for inhomogeneous coupling."""
    g = np.asarray(couplings, dtype=float)
    if g.size == 0:
        raise ValueError("couplings must be non-empty")
    denom = float(np.sum(g * g))
    if denom == 0.0:
        raise ValueError("all couplings vanish")
    return float(np.sum(g)) ** 2 / denom
