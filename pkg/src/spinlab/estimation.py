"""Measurement models, classical Fisher information, and phase estimators.

A MeasurementModel bundles probe state, phase generator, analysis
rotations and measurement basis into the outcome distribution P(mu|theta).
On top of it live the classical Fisher information (finite differences),
the Hellinger and Bures distances, inverse-CDF Monte-Carlo sampling, and
the maximum-likelihood / method-of-moments / Bayesian estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spinspace import KetState, MixedState, collective_operator, rotation

__all__ = [
    "MeasurementModel",
    "OutcomeDistribution",
    "SampleSet",
    "EstimateResult",
    "DegenerateEstimateError",
    "outcome_distribution",
    "fisher_information",
    "hellinger",
    "fisher_from_hellinger",
    "quantum_fidelity",
    "bures",
    "sample",
    "estimate",
]

_P_FLOOR = 1e-14  # outcomes below this probability are dropped from Fisher sums


class DegenerateEstimateError(RuntimeError):
    """The observed sample has zero likelihood everywhere on the window."""


@dataclass(frozen=True)
class MeasurementModel:
    """Interferometer model P(mu|theta) = |<mu| R_pipeline e^{-i theta J_g} |psi>|^2.

    The pipeline rotations are applied in listed order after the phase
    imprint; outcomes label the eigenbasis of the collective spin along
    measurement_axis.  A positive detection_sigma convolves the ideal
    distribution with a discretized Gaussian of that rms width (and gain
    detection_eta), extending the outcome lattice by ceil(5 sigma) steps
    on each side.
    """

    probe: KetState | MixedState
    generator_axis: tuple[float, float, float]
    pipeline: tuple[tuple[tuple[float, float, float], float], ...]
    measurement_axis: tuple[float, float, float]
    theta_grid: np.ndarray
    detection_sigma: float = 0.0
    detection_eta: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.theta_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("theta_grid must hold at least two points")
        if not np.all(np.diff(grid) > 0.0):
            raise ValueError("theta_grid must be strictly ascending")
        grid.flags.writeable = False
        object.__setattr__(self, "theta_grid", grid)
        if not (math.isfinite(self.detection_sigma) and self.detection_sigma >= 0.0):
            raise ValueError("detection_sigma must be finite and nonnegative")
        if not (math.isfinite(self.detection_eta) and self.detection_eta > 0.0):
            raise ValueError("detection_eta must be positive")

    @cached_property
    def _window_cache(self) -> dict:
        # estimator grids are reused across repetitions; cache their tables
        return {}

    @cached_property
    def _machinery(self):
        space = self.probe.space
        gen = collective_operator(space, self.generator_axis)
        g_vals, g_vecs = np.linalg.eigh(gen.matrix)
        u_pipe = np.eye(space.dim, dtype=complex)
        for axis, angle in self.pipeline:
            u_pipe = rotation(space, axis, angle) @ u_pipe
        meas = collective_operator(space, self.measurement_axis)
        m_vals, m_vecs = np.linalg.eigh(meas.matrix)
        # final amplitudes = W (phases * c) with c the probe in the generator basis
        w = m_vecs.conj().T @ u_pipe @ g_vecs
        if isinstance(self.probe, KetState):
            coeff = g_vecs.conj().T @ self.probe.amplitudes
            rho_g = None
        else:
            coeff = None
            rho_g = g_vecs.conj().T @ self.probe.matrix @ g_vecs
        values = m_vals
        kernel = None
        if self.detection_sigma > 0.0:
            ext = math.ceil(5.0 * self.detection_sigma)
            lattice = np.concatenate(
                [values[0] - np.arange(ext, 0, -1), values, values[-1] + np.arange(1, ext + 1)]
            )
            diff = lattice[:, None] - self.detection_eta * values[None, :]
            kernel = np.exp(-0.5 * (diff / self.detection_sigma) ** 2)
            kernel /= kernel.sum(axis=0, keepdims=True)
            values = lattice
        return g_vals, w, coeff, rho_g, values, kernel

    @property
    def outcome_values(self) -> np.ndarray:
        """Measured labels: spin projections, extended when detection noise is on."""
        return self._machinery[4]

    def probabilities(self, thetas) -> np.ndarray:
        """Row-stochastic matrix P[i, mu] for each requested phase."""
        g_vals, w, coeff, rho_g, _, kernel = self._machinery
        th = np.atleast_1d(np.asarray(thetas, dtype=float))
        phases = np.exp(-1j * th[:, None] * g_vals[None, :])
        if coeff is not None:
            amps = (phases * coeff[None, :]) @ w.T
            probs = np.abs(amps) ** 2
        else:
            a = w[None, :, :] * phases[:, None, :]
            probs = np.real(np.einsum("tmk,kl,tml->tm", a, rho_g, a.conj()))
            probs = np.clip(probs, 0.0, None)
        if kernel is not None:
            probs = probs @ kernel.T
        return probs


@dataclass(frozen=True)
class OutcomeDistribution:
    """P(mu|theta) at one phase, with the outcome labels."""

    theta: float
    values: np.ndarray
    probabilities: np.ndarray


@dataclass(frozen=True)
class SampleSet:
    """Outcome indices (into the model's outcome_values) from one run."""

    theta_true: float
    seed: int
    outcomes: np.ndarray = field(repr=False)

    @property
    def nu(self) -> int:
        return int(self.outcomes.size)


def outcome_distribution(model: MeasurementModel, theta: float) -> OutcomeDistribution:
    """Exact outcome distribution at one phase."""
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    probs = model.probabilities(theta)[0]
    return OutcomeDistribution(float(theta), model.outcome_values, probs)


def fisher_information(model: MeasurementModel, theta: float, dtheta: float | None = None) -> float:
    """Classical Fisher information by central differences.

    F = sum over outcomes of (dP/dtheta)^2 / P, dropping outcomes with
    P < 1e-14; the default step is 1e-4/sqrt(N).
    """
    grid = model.theta_grid
    if not (grid[0] - 1e-12 <= theta <= grid[-1] + 1e-12):
        raise ValueError("theta must lie inside the model's grid span")
    if dtheta is None:
        dtheta = 1e-4 / math.sqrt(model.probe.space.n_particles)
    p0, pp, pm = model.probabilities([theta, theta + dtheta, theta - dtheta])
    mask = p0 >= _P_FLOOR
    deriv = (pp[mask] - pm[mask]) / (2.0 * dtheta)
    return float(np.sum(deriv**2 / p0[mask]))


def hellinger(model: MeasurementModel, theta0: float, theta: float) -> float:
    """Squared Hellinger distance 1 - sum sqrt(P(mu|theta0) P(mu|theta))."""
    p, q = model.probabilities([theta0, theta])
    return float(max(0.0, 1.0 - np.sum(np.sqrt(p * q))))


def fisher_from_hellinger(
    model: MeasurementModel, theta0: float, window: float, fit_degree: int = 4
) -> float:
    """Fisher information as a statistical speed: 8x the quadratic growth
    of the squared Hellinger distance around theta0.

    Uses the model grid points within +-window of theta0; at least 7 of
    them, symmetric about theta0, are required.
    """
    if window <= 0.0:
        raise ValueError("window must be positive")
    if fit_degree < 2:
        raise ValueError("fit_degree must be at least 2")
    grid = model.theta_grid
    sel = grid[np.abs(grid - theta0) <= window * (1.0 + 1e-12)]
    if sel.size < 7:
        raise ValueError("window must contain at least 7 grid points")
    delta = sel - theta0
    if np.max(np.abs(np.sort(delta) + np.sort(delta)[::-1])) > 1e-9 * max(window, 1.0):
        raise ValueError("window grid points must be symmetric about theta0")
    d2 = np.array([hellinger(model, theta0, t) for t in sel])
    coeffs = np.polynomial.polynomial.polyfit(delta, d2, deg=fit_degree)
    return float(8.0 * coeffs[2])


def quantum_fidelity(state_a, state_b) -> float:
    """Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)); |<psi|phi>| on kets."""
    if state_a.space.dim != state_b.space.dim:
        raise ValueError("states live on different spaces")
    if isinstance(state_a, KetState) and isinstance(state_b, KetState):
        return float(abs(np.vdot(state_a.amplitudes, state_b.amplitudes)))
    if isinstance(state_a, KetState):
        state_a, state_b = state_b, state_a
    if isinstance(state_b, KetState):
        val = np.real(np.vdot(state_b.amplitudes, state_a.matrix @ state_b.amplitudes))
        return float(math.sqrt(max(0.0, val)))
    q, v = np.linalg.eigh(state_a.matrix)
    root = (v * np.sqrt(np.clip(q, 0.0, None))) @ v.conj().T
    inner = root @ state_b.matrix @ root
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def bures(state_a, state_b) -> float:
    """Squared Bures distance 1 - fidelity."""
    return max(0.0, 1.0 - quantum_fidelity(state_a, state_b))


def sample(model: MeasurementModel, theta_true: float, nu: int, seed: int) -> SampleSet:
    """nu independent inverse-CDF draws from P(mu|theta_true)."""
    if nu < 1:
        raise ValueError("nu must be at least 1")
    probs = model.probabilities(theta_true)[0]
    cdf = np.cumsum(probs)
    rng = np.random.default_rng(seed)
    draws = rng.random(int(nu)) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, draws, side="right"), probs.size - 1)
    return SampleSet(theta_true=float(theta_true), seed=int(seed), outcomes=idx.astype(np.int64))


@dataclass(frozen=True)
class EstimateResult:
    """Point estimate with its reported one-sigma uncertainty."""

    theta_hat: float
    uncertainty: float
    method: str
    nu: int
    interval: tuple[float, float] | None = None


def _window_table(model: MeasurementModel, lo: float, hi: float, count: int):
    """Grid, probability matrix and log-probability matrix for one window."""
    key = (lo, hi, count)
    table = model._window_cache.get(key)
    if table is None:
        grid = np.linspace(lo, hi, count)
        probs = model.probabilities(grid)
        with np.errstate(divide="ignore"):
            logp = np.log(probs)
        logp[probs == 0.0] = -np.inf
        table = (grid, probs, logp)
        model._window_cache[key] = table
    return table


def _log_likelihood(logp: np.ndarray, model: MeasurementModel, samples: SampleSet) -> np.ndarray:
    counts = np.bincount(samples.outcomes, minlength=model.outcome_values.size).astype(float)
    used = counts > 0
    return logp[:, used] @ counts[used]


def estimate(
    samples: SampleSet,
    model: MeasurementModel,
    method: str,
    window: tuple[float, float] | None = None,
    grid_points: int = 2001,
    circular: bool = False,
) -> EstimateResult:
    """Phase estimate from a sample set.

    method = "mle":     grid argmax of the log likelihood over the window
                        (2001 points by default) with quadratic refinement
                        through the best three points, ties toward smaller
                        theta; the uncertainty is the Cramer-Rao value
                        1/sqrt(nu F(theta_hat)).
    method = "moments": inverts the monotonic mean-outcome curve at the
                        sample mean; uncertainty by error propagation,
                        Delta mu / (sqrt(nu) |d<mu>/dtheta|).
    method = "bayes":   flat prior on the window; returns the posterior
                        mean and the central 68.27% credible interval
                        (equal tails); circular=True averages e^{i theta}
                        instead when forming the point estimate.
    """
    if method not in ("mle", "moments", "bayes"):
        raise ValueError(f"unknown estimation method {method!r}")
    if window is None:
        window = (float(model.theta_grid[0]), float(model.theta_grid[-1]))
    lo, hi = float(window[0]), float(window[1])
    if not (lo < hi and math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("window must be a finite ascending pair")
    if grid_points < 5:
        raise ValueError("grid_points must be at least 5")
    grid, probs, logp = _window_table(model, lo, hi, int(grid_points))
    nu = samples.nu

    if method == "moments":
        values = model.outcome_values
        curve = probs @ values
        dcurve = np.diff(curve)
        if not (np.all(dcurve > 0.0) or np.all(dcurve < 0.0)):
            raise ValueError("mean outcome is not monotonic on the window")
        sample_mean = float(np.mean(values[samples.outcomes]))
        if dcurve[0] > 0.0:
            theta_hat = float(np.interp(sample_mean, curve, grid))
        else:
            theta_hat = float(np.interp(sample_mean, curve[::-1], grid[::-1]))
        i = int(np.clip(np.searchsorted(grid, theta_hat), 1, grid.size - 2))
        slope = (curve[i + 1] - curve[i - 1]) / (grid[i + 1] - grid[i - 1])
        p_hat = model.probabilities(theta_hat)[0]
        var_mu = float(p_hat @ values**2 - (p_hat @ values) ** 2)
        if slope == 0.0:
            raise DegenerateEstimateError("flat mean-outcome curve at the estimate")
        unc = math.sqrt(max(var_mu, 0.0)) / (math.sqrt(nu) * abs(slope))
        return EstimateResult(theta_hat, unc, "moments", nu)

    loglik = _log_likelihood(logp, model, samples)
    peak = float(np.max(loglik))
    if not math.isfinite(peak):
        raise DegenerateEstimateError("sample has zero likelihood on the whole window")

    if method == "mle":
        i = int(np.argmax(loglik))  # first maximum: ties go to smaller theta
        theta_hat = float(grid[i])
        if 0 < i < grid.size - 1:
            lm, l0, lp = loglik[i - 1], loglik[i], loglik[i + 1]
            if math.isfinite(lm) and math.isfinite(lp):
                denom = lm - 2.0 * l0 + lp
                if denom < 0.0:
                    step = 0.5 * (lm - lp) / denom
                    theta_hat = float(grid[i] + step * (grid[1] - grid[0]))
                    theta_hat = min(max(theta_hat, float(grid[i - 1])), float(grid[i + 1]))
        span = model.theta_grid
        t_f = min(max(theta_hat, float(span[0])), float(span[-1]))
        fisher = fisher_information(model, t_f)
        unc = 1.0 / math.sqrt(nu * fisher) if fisher > 0.0 else math.inf
        return EstimateResult(theta_hat, unc, "mle", nu)

    # bayes
    post = np.exp(loglik - peak)
    total = float(np.sum(post))
    if total <= 0.0:
        raise DegenerateEstimateError("posterior vanishes on the whole window")
    post /= total
    if circular:
        mean_phase = complex(np.sum(post * np.exp(1j * grid)))
        theta_hat = float(np.angle(mean_phase))
    else:
        theta_hat = float(np.sum(post * grid))
    cdf = np.cumsum(post)
    cdf /= cdf[-1]
    lo_q = float(np.interp(0.5 - 0.682689 / 2.0, cdf, grid))
    hi_q = float(np.interp(0.5 + 0.682689 / 2.0, cdf, grid))
    return EstimateResult(theta_hat, 0.5 * (hi_q - lo_q), "bayes", nu, interval=(lo_q, hi_q))
