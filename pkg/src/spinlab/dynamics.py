"""Exact time evolution under the entangling Hamiltonians.

All propagators go through full Hermitian eigendecomposition (dimensions
stay in the low thousands), so states can be pushed to arbitrary times
without accumulating stepping error.  The one-axis twisting evolution is
special-cased as a diagonal phase in the Dicke basis.  hbar = 1, times are
quoted in units of the relevant coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .spinspace import HermitianOperator, KetState
from .states import ThreeModeState, bjj_hamiltonian_bands, pair_hamiltonian_bands

__all__ = [
    "EvolutionSpec",
    "SpectralPropagator",
    "oat_evolve",
    "evolve",
    "su11_scan",
]

_KINDS = ("oat", "bjj", "spin_mixing", "custom")


@dataclass(frozen=True)
class EvolutionSpec:
    """Parameter bundle selecting one of the supported Hamiltonians.

    kind = "oat":         chi_t (dimensionless twisting angle chi*t)
    kind = "bjj":         lam, t, optional omega (Rabi coupling, default 1)
                          and delta_e (energy imbalance, default 0);
                          H = omega * (-J_x + (lam/N) J_z^2 + delta_e J_z)
    kind = "spin_mixing": q, lam_sign, t on the zero-magnetization pair
                          basis, |lam| = 1 fixing the units
    kind = "custom":      hamiltonian (HermitianOperator), t
    """

    kind: str
    chi_t: float | None = None
    omega: float = 1.0
    lam: float | None = None
    delta_e: float = 0.0
    q: float | None = None
    lam_sign: int = -1
    t: float | None = None
    hamiltonian: HermitianOperator | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown evolution kind {self.kind!r}")
        need = {
            "oat": ("chi_t",),
            "bjj": ("lam", "t", "omega", "delta_e"),
            "spin_mixing": ("q", "t"),
            "custom": ("t",),
        }[self.kind]
        for name in need:
            val = getattr(self, name)
            if val is None or not math.isfinite(val):
                raise ValueError(f"{self.kind} evolution needs finite {name}")
        if self.kind == "spin_mixing" and self.lam_sign not in (-1, 1):
            raise ValueError("lam_sign must be +1 or -1")
        if self.kind == "custom" and self.hamiltonian is None:
            raise ValueError("custom evolution needs a hamiltonian")


class SpectralPropagator:
    """exp(-i H t) applied through the eigenbasis of H."""

    def __init__(self, energies: np.ndarray, vectors: np.ndarray):
        self.energies = np.asarray(energies, dtype=float)
        self.vectors = np.asarray(vectors)

    @classmethod
    def from_tridiagonal(cls, diag: np.ndarray, off: np.ndarray) -> "SpectralPropagator":
        try:
            w, v = eigh_tridiagonal(diag, off)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - solver failure
            raise RuntimeError("tridiagonal eigensolve failed") from exc
        return cls(w, v)

    @classmethod
    def from_dense(cls, matrix: np.ndarray) -> "SpectralPropagator":
        w, v = np.linalg.eigh(matrix)
        return cls(w, v)

    def apply(self, amplitudes: np.ndarray, t: float) -> np.ndarray:
        coeff = self.vectors.conj().T @ amplitudes
        coeff = coeff * np.exp(-1j * self.energies * t)
        return self.vectors @ coeff


def oat_evolve(state: KetState, chi_t: float) -> KetState:
    """One-axis twisting exp(-i chi_t J_z^2): amplitude of |m> gains e^{-i chi_t m^2}."""
    if not math.isfinite(chi_t):
        raise ValueError("chi_t must be finite")
    phase = np.exp(-1j * chi_t * state.space.m_labels**2)
    return KetState(state.space, phase * state.amplitudes)


def evolve(state, spec: EvolutionSpec):
    """Propagate a state by exp(-i H t) for the Hamiltonian named in spec.

    KetState inputs pair with "oat", "bjj" and "custom"; ThreeModeState
    inputs pair with "spin_mixing".  Mismatches raise ValueError.
    """
    if spec.kind == "spin_mixing":
        if not isinstance(state, ThreeModeState):
            raise ValueError("spin-mixing evolution acts on a ThreeModeState")
        diag, off = pair_hamiltonian_bands(state.n_particles, spec.q, float(spec.lam_sign))
        prop = SpectralPropagator.from_tridiagonal(diag, off)
        return ThreeModeState(state.n_particles, prop.apply(state.amplitudes, spec.t))
    if not isinstance(state, KetState):
        raise ValueError(f"{spec.kind} evolution acts on a KetState")
    if spec.kind == "oat":
        return oat_evolve(state, spec.chi_t)
    if spec.kind == "bjj":
        diag, off = bjj_hamiltonian_bands(state.space, spec.lam, spec.delta_e)
        prop = SpectralPropagator.from_tridiagonal(diag, off)
        return KetState(state.space, prop.apply(state.amplitudes, spec.omega * spec.t))
    # custom
    if spec.hamiltonian.space.dim != state.space.dim:
        raise ValueError("hamiltonian space does not match state space")
    prop = SpectralPropagator.from_dense(spec.hamiltonian.matrix)
    return KetState(state.space, prop.apply(state.amplitudes, spec.t))


def su11_scan(
    n_particles: int,
    lam_sign: int,
    q: float,
    t_mix: float,
    theta_grid,
) -> np.ndarray:
    """Pair-population fringe of the mix / phase / mix interferometer.

    Starting from all atoms in m_F = 0, evolve under spin mixing for t_mix,
    imprint the pair-relative phase theta = 2 phi_0 - phi_{+1} - phi_{-1}
    (diagonal exp(-i theta k) on the pair basis, so theta is the phase a
    created pair accumulates against the condensate; the fringe is even and
    2 pi periodic in theta, dark near theta = pi), then mix again for t_mix.
    Returns an (n, 3) array with columns (theta, mean pair population,
    variance of the pair population); the variance column feeds the
    method-of-moments sensitivity.
    """
    if n_particles <= 0 or n_particles % 2:
        raise ValueError("pair basis requires a positive even particle number")
    if not (math.isfinite(t_mix) and t_mix > 0.0):
        raise ValueError("t_mix must be positive")
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    diag, off = pair_hamiltonian_bands(n_particles, q, float(lam_sign))
    prop = SpectralPropagator.from_tridiagonal(diag, off)
    amp0 = np.zeros(n_particles // 2 + 1, dtype=complex)
    amp0[0] = 1.0
    opened = prop.apply(amp0, t_mix)
    k = np.arange(n_particles // 2 + 1)
    npair = 2.0 * k
    out = np.empty((theta.size, 3))
    for i, th in enumerate(theta):
        closed = prop.apply(np.exp(-1j * th * k) * opened, t_mix)
        p = np.abs(closed) ** 2
        mean = float(p @ npair)
        out[i] = (th, mean, max(float(p @ npair**2) - mean**2, 0.0))
    return out
