"""Multipole decomposition and quasi-probability maps on the sphere.

A collective-spin density matrix is expanded in the orthonormal spherical
tensor basis T_kq; weighting the multipoles rho_kq with rank-dependent
coefficients f_k and contracting with spherical harmonics yields the P, W
and Q distributions on the Bloch sphere.  Also provides rotate-and-measure
spin-noise moment curves with their trigonometric fits, plus CSV/JSON map
export.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .spinspace import KetState, MixedState

__all__ = [
    "TensorDecomposition",
    "QuasiProbMap",
    "SpinNoiseMoments",
    "clebsch_gordan",
    "decompose",
    "reconstruct",
    "render_map",
    "quasiprobability",
    "spin_noise_moments",
    "export_map",
]

_KINDS = ("p", "w", "q")


def _logfact(n):
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def _cg_strip(j: float, k: int, q: int, m_lo: float, count: int) -> np.ndarray:
    """<j m; k q | j m+q> for m = m_lo, m_lo+1, ... (count values).

    Racah series with log-factorial accumulation and explicit sign
    tracking; stable without big integers up to a few hundred particles.
    """
    m = m_lo + np.arange(count)
    mq = m + q
    # factorial arguments of the t-independent prefactor
    pref = (
        _logfact(j + m) + _logfact(j - m) + _logfact(k + q) + _logfact(k - q)
        + _logfact(j + mq) + _logfact(j - mq)
    )
    delta = _logfact(k) + _logfact(k) + _logfact(2 * j - k) - _logfact(2 * j + k + 1)
    base = 0.5 * (math.log(2 * j + 1) + delta + pref)
    # Racah series with j1 = j3 = j, j2 = k, m1 = m, m2 = q
    t = np.arange(0, k + 1, dtype=float)[None, :]
    a1 = k - t                           # j1 + j2 - j3 - t
    a2 = j - m[:, None] - t              # j1 - m1 - t
    a3 = k + q - t                       # j2 + m2 - t
    a4 = j - k + m[:, None] + t          # j3 - j2 + m1 + t
    a5 = np.broadcast_to(t - q, a4.shape)  # j3 - j1 - m2 + t
    ok = (a1 >= -0.5) & (a2 >= -0.5) & (a3 >= -0.5) & (a4 >= -0.5) & (a5 >= -0.5)
    logs = np.where(
        ok,
        _logfact(np.clip(t, 0, None)) + _logfact(np.clip(a1, 0, None))
        + _logfact(np.clip(a2, 0, None)) + _logfact(np.clip(a3, 0, None))
        + _logfact(np.clip(a4, 0, None)) + _logfact(np.clip(a5, 0, None)),
        np.inf,
    )
    signs = np.where(np.round(t).astype(int) % 2 == 0, 1.0, -1.0)
    terms = np.where(ok, signs * np.exp(base[:, None] - logs), 0.0)
    return terms.sum(axis=1)


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, j3: float, m3: float) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j3 m3>.

    General Racah closed form in log space.  Angular momenta may be
    half-integral; violated selection rules return 0.
    """
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(2 * j - round(2 * j)) > 1e-9 or abs(2 * m - round(2 * m)) > 1e-9:
            raise ValueError("angular momenta must be integer or half-integer")
        if abs(m) > j + 1e-9 or abs((j - m) - round(j - m)) > 1e-9:
            return 0.0
    if abs(m1 + m2 - m3) > 1e-9:
        return 0.0
    if j3 < abs(j1 - j2) - 1e-9 or j3 > j1 + j2 + 1e-9:
        return 0.0
    pref = (
        _logfact(j1 + m1) + _logfact(j1 - m1) + _logfact(j2 + m2) + _logfact(j2 - m2)
        + _logfact(j3 + m3) + _logfact(j3 - m3)
    )
    delta = (
        _logfact(j1 + j2 - j3) + _logfact(j1 - j2 + j3) + _logfact(-j1 + j2 + j3)
        - _logfact(j1 + j2 + j3 + 1)
    )
    base = 0.5 * (math.log(2 * j3 + 1) + float(delta) + float(pref))
    t_lo = int(round(max(0.0, j2 - j3 - m1, j1 + m2 - j3)))
    t_hi = int(round(min(j1 + j2 - j3, j1 - m1, j2 + m2)))
    total = 0.0
    for t in range(t_lo, t_hi + 1):
        logs = float(
            _logfact(t) + _logfact(j1 + j2 - j3 - t) + _logfact(j1 - m1 - t)
            + _logfact(j2 + m2 - t) + _logfact(j3 - j2 + m1 + t) + _logfact(j3 - j1 - m2 + t)
        )
        total += (-1.0) ** t * math.exp(base - logs)
    return total


@dataclass(frozen=True)
class TensorDecomposition:
    """Multipole coefficients rho_kq = tr[rho T_kq^dag].

    coefficients[k, q + n_particles] holds rho_kq for k = 0..N and
    |q| <= k; entries outside that triangle are zero.
    """

    n_particles: int
    coefficients: np.ndarray

    def __post_init__(self):
        n = self.n_particles
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (n + 1, 2 * n + 1):
            raise ValueError("coefficient array must have shape (N+1, 2N+1)")
        object.__setattr__(self, "coefficients", c)

    def coefficient(self, k: int, q: int) -> complex:
        if not (0 <= k <= self.n_particles and abs(q) <= k):
            raise ValueError("multipole indices out of range")
        return complex(self.coefficients[k, q + self.n_particles])


def _density(state) -> np.ndarray:
    if isinstance(state, KetState):
        return state.density_matrix().matrix
    if isinstance(state, MixedState):
        return state.matrix
    raise ValueError("state must be a KetState or MixedState")


def decompose(state) -> TensorDecomposition:
    """Expand a state in the orthonormal spherical tensor basis.

    T_kq = sqrt((2k+1)/(N+1)) sum_m <j m; k q | j m+q> |m+q><m|, so each
    rho_kq is a weighted sum along one diagonal strip of the density
    matrix.  Negative q is computed directly (not filled in by symmetry),
    which keeps the Hermiticity relation an honest consistency check.
    """
    rho = _density(state)
    n = state.space.n_particles
    j = 0.5 * n
    out = np.zeros((n + 1, 2 * n + 1), dtype=complex)
    for k in range(n + 1):
        scale = math.sqrt((2 * k + 1) / (n + 1))
        for q in range(-k, k + 1):
            count = n + 1 - abs(q)
            m_lo = -j if q >= 0 else -j - q
            cg = _cg_strip(j, k, q, m_lo, count)
            strip = np.diagonal(rho, -q)  # rho[m+q, m] along the q-th subdiagonal
            out[k, q + n] = scale * np.sum(cg * strip)
    return TensorDecomposition(n_particles=n, coefficients=out)


def reconstruct(decomposition: TensorDecomposition) -> MixedState:
    """Rebuild the density matrix sum_kq rho_kq T_kq."""
    n = decomposition.n_particles
    j = 0.5 * n
    rho = np.zeros((n + 1, n + 1), dtype=complex)
    idx = np.arange(n + 1)
    for k in range(n + 1):
        scale = math.sqrt((2 * k + 1) / (n + 1))
        for q in range(-k, k + 1):
            coeff = decomposition.coefficients[k, q + n]
            if coeff == 0.0:
                continue
            count = n + 1 - abs(q)
            m_lo = -j if q >= 0 else -j - q
            cg = _cg_strip(j, k, q, m_lo, count)
            cols = idx[:count] if q >= 0 else idx[abs(q):]
            rho[cols + q, cols] += coeff * scale * cg
    from .spinspace import make_space

    return MixedState(make_space(n), rho)


def _f_coefficients(n: int, kind: str) -> np.ndarray:
    """Rank weights f_k: 1 for W; the coherent-overlap weights for Q; 1/Q for P."""
    k = np.arange(n + 1, dtype=float)
    if kind == "w":
        return np.ones(n + 1)
    log_g = 0.5 * (
        _logfact(n) + _logfact(n + 1.0) - _logfact(n - k) - _logfact(n + k + 1.0)
    )
    return np.exp(log_g) if kind == "q" else np.exp(-log_g)


def _legendre_table(n_max: int, x: np.ndarray) -> np.ndarray:
    """Fully normalized associated Legendre values N_kq(x), unit L2 norm on [-1, 1].

    tab[k, q, i] for 0 <= q <= k <= n_max; includes the Condon-Shortley
    sign.  Y_kq(theta, phi) = tab[k, q] * exp(i q phi) / sqrt(2 pi).
    """
    npts = x.size
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    tab = np.zeros((n_max + 1, n_max + 1, npts))
    cur = np.full(npts, 1.0 / math.sqrt(2.0))
    for q in range(n_max + 1):
        if q > 0:
            cur = -math.sqrt((2 * q + 1) / (2.0 * q)) * s * cur
        tab[q, q] = cur
        if q + 1 <= n_max:
            tab[q + 1, q] = math.sqrt(2 * q + 3) * x * cur
        for k in range(q + 2, n_max + 1):
            a = math.sqrt((2 * k + 1) * (2 * k - 1) / ((k - q) * (k + q)))
            b = math.sqrt(
                (2 * k + 1) * (k - 1 - q) * (k - 1 + q) / ((2 * k - 3) * (k - q) * (k + q))
            )
            tab[k, q] = a * x * tab[k - 1, q] - b * tab[k - 2, q]
    return tab


@dataclass(frozen=True)
class QuasiProbMap:
    """One quasi-probability distribution sampled on a product grid.

    theta runs over Gauss-Legendre nodes in cos(theta) (ascending theta),
    phi over a uniform grid; values[i, j] = f(theta_i, phi_j).  weights
    are the Gauss-Legendre weights for the cos(theta) integral.
    """

    kind: str
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def sphere_integral(self) -> float:
        """Quadrature of the map over the full sphere."""
        dphi = 2.0 * math.pi / self.phi.size
        return float(self.weights @ self.values.sum(axis=1) * dphi)


def render_map(
    decomposition: TensorDecomposition,
    kind: str,
    n_theta: int | None = None,
    n_phi: int | None = None,
    threads: int = 1,
) -> QuasiProbMap:
    """Synthesize a P/W/Q map from multipole coefficients.

    f(theta, phi) = sqrt((N+1)/4pi) sum_k f_k sum_q rho_kq Y_kq; the P
    weights diverge fastest, so all kinds share the k <= N truncation.
    Requires n_theta >= 2N+2 and n_phi >= N+1 so no surviving harmonic
    aliases through the quadrature.
    """
    kind = kind.lower()
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    n = decomposition.n_particles
    if n_theta is None:
        n_theta = 2 * n + 2
    if n_phi is None:
        n_phi = 2 * n + 2
    if n_theta < 2 * n + 2:
        raise ValueError("n_theta must be at least 2N+2 to resolve rank-N harmonics")
    if n_phi < n + 1:
        raise ValueError("n_phi must be at least N+1 to resolve order-N harmonics")
    x, w = np.polynomial.legendre.leggauss(n_theta)
    x, w = x[::-1].copy(), w[::-1].copy()  # ascending theta
    theta = np.arccos(x)
    phi = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)

    fk = _f_coefficients(n, kind)
    tab = _legendre_table(n, x)
    rho = decomposition.coefficients
    # A[q, i] = sum_k f_k rho_kq N_kq(x_i); the phase factor e^{i q phi_j} restores phi
    amp = np.einsum("kq,kqi->qi", fk[:, None] * rho[:, n:], tab)
    pref = math.sqrt((n + 1) / (4.0 * math.pi)) / math.sqrt(2.0 * math.pi)
    qs = np.arange(1, n + 1)
    phase = np.exp(1j * qs[:, None] * phi[None, :])

    def _rows(block: slice) -> np.ndarray:
        real0 = np.real(amp[0, block])[:, None]
        cross = 2.0 * np.real(amp[1:, block].T @ phase)
        return pref * (real0 + cross)

    if threads <= 1 or n_theta < 4:
        values = _rows(slice(0, n_theta))
    else:
        bounds = np.linspace(0, n_theta, min(threads, n_theta) + 1).astype(int)
        blocks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        values = np.empty((n_theta, n_phi))
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            for blk, res in zip(blocks, pool.map(_rows, blocks)):
                values[blk] = res
    return QuasiProbMap(kind=kind, theta=theta, phi=phi, weights=w, values=values)


def quasiprobability(
    state, kind: str, n_theta: int | None = None, n_phi: int | None = None, threads: int = 1
) -> QuasiProbMap:
    """P, W or Q distribution of a state on the Bloch sphere."""
    return render_map(decompose(state), kind, n_theta, n_phi, threads)


@dataclass(frozen=True)
class SpinNoiseMoments:
    """<J_z^k> after rotation about x, with its trigonometric fit.

    The fit expands the curve over cos(n theta), sin(n theta) for
    n = k, k-2, ..., the harmonic content any k-th moment can carry.
    """

    order: int
    theta: np.ndarray
    moments: np.ndarray
    harmonics: np.ndarray
    cos_coefficients: np.ndarray
    sin_coefficients: np.ndarray

    def fitted(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        out = np.zeros_like(th)
        for n, c, s in zip(self.harmonics, self.cos_coefficients, self.sin_coefficients):
            out = out + c * np.cos(n * th) + s * np.sin(n * th)
        return out


def spin_noise_moments(state, theta_grid, order: int) -> SpinNoiseMoments:
    """Rotate by exp(-i theta J_x), then take the k-th moment of J_z.

    Returns the moment curve on the grid together with least-squares
    trigonometric fit coefficients.
    """
    if order < 1:
        raise ValueError("moment order must be at least 1")
    theta = np.asarray(theta_grid, dtype=float)
    if theta.ndim != 1 or theta.size < 2:
        raise ValueError("theta_grid must hold at least two angles")
    space = state.space
    from .spinspace import jx

    e_vals, e_vecs = np.linalg.eigh(jx(space).matrix)
    mz = space.m_labels.astype(float) ** order
    moments = np.empty(theta.size)
    if isinstance(state, KetState):
        c = e_vecs.conj().T @ state.amplitudes
        for i, th in enumerate(theta):
            rot = e_vecs @ (np.exp(-1j * th * e_vals) * c)
            moments[i] = float(mz @ np.abs(rot) ** 2)
    else:
        rho_e = e_vecs.conj().T @ _density(state) @ e_vecs
        for i, th in enumerate(theta):
            ph = np.exp(-1j * th * e_vals)
            rho_rot = e_vecs @ (ph[:, None] * rho_e * ph.conj()[None, :]) @ e_vecs.conj().T
            moments[i] = float(np.real(mz @ np.diagonal(rho_rot)))
    harmonics = np.arange(order, -1, -2)[::-1]
    cols = [np.cos(n * theta) for n in harmonics]
    cols += [np.sin(n * theta) for n in harmonics if n > 0]
    design = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(design, moments, rcond=None)
    n_h = harmonics.size
    cos_c = coef[:n_h]
    sin_c = np.zeros(n_h)
    sin_c[harmonics > 0] = coef[n_h:]
    return SpinNoiseMoments(
        order=order,
        theta=theta,
        moments=moments,
        harmonics=harmonics,
        cos_coefficients=cos_c,
        sin_coefficients=sin_c,
    )


def export_map(qmap: QuasiProbMap, csv_path, json_path=None) -> None:
    """Write a map as dense CSV rows (theta, phi, value) plus a JSON sidecar.

    The sidecar carries only grid metadata, never binary payloads.
    """
    with open(csv_path, "w") as fh:
        fh.write("theta,phi,value\n")
        for i, th in enumerate(qmap.theta):
            for j, ph in enumerate(qmap.phi):
                fh.write(f"{th:.17g},{ph:.17g},{qmap.values[i, j]:.17g}\n")
    if json_path is not None:
        meta = {
            "kind": qmap.kind,
            "n_theta": int(qmap.theta.size),
            "n_phi": int(qmap.phi.size),
            "theta": [float(t) for t in qmap.theta],
            "phi": [float(p) for p in qmap.phi],
            "quadrature_weights": [float(w) for w in qmap.weights],
        }
        with open(json_path, "w") as fh:
            json.dump(meta, fh, indent=1)
            fh.write("\n")
