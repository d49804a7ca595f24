"""Monte-Carlo simulation of homodyne verification of the triple bound.

Quadrature outcomes at local-oscillator phases (0, pi/2, 5*pi/4) estimate
Var(q), Var(p) and Var(r) = 2 Var(x(5*pi/4)); the triple product is then
compared with the tight bound at finite sample size.  Gaussian states are
sampled from their exact normal marginals; number-basis states are sampled
by inverse-CDF over a tabulated marginal.  All randomness flows through
counter-based streams derived from the configured seed, so results are
reproducible and independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats
from numpy.random import Generator, Philox, SeedSequence
from scipy.integrate import trapezoid

from . import fock, gaussian
from ._parallel import worker_map
from .extremal import rotated_family_state

__all__ = [
    "DEFAULT_PHASES",
    "HomodyneConfig",
    "QuadratureSample",
    "PhaseEstimate",
    "HomodyneEstimate",
    "SweepRow",
    "sample_quadrature",
    "estimate_triple",
    "rotation_sweep",
    "variance_ci_chi2",
]

DEFAULT_PHASES = (0.0, math.pi / 2.0, 5.0 * math.pi / 4.0)

_MIN_SAMPLES = 100
_BOOTSTRAP_RESAMPLES = 1000
_BOOTSTRAP_CHUNK = 100
_CONFIDENCE = 0.95
_MASS_TOL = 1e-6


def _rng(seed) -> Generator:
    sequence = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
    return Generator(Philox(sequence))


@dataclass(frozen=True)
class HomodyneConfig:
    """State to probe, local-oscillator phases, per-phase sample count, seed.

    ``seed`` may be an integer or an already-derived SeedSequence (used by
    sweeps that hand each grid point its own child stream).
    """

    state: object
    samples_per_phase: int
    seed: int | SeedSequence
    phases: tuple[float, ...] = DEFAULT_PHASES
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if self.samples_per_phase < _MIN_SAMPLES:
            raise ValueError(f"samples_per_phase must be >= {_MIN_SAMPLES}")
        if not all(math.isfinite(p) for p in self.phases):
            raise ValueError("phases must be finite")
        if isinstance(self.state, gaussian.GaussianState):
            object.__setattr__(self, "hbar", self.state.hbar)


@dataclass(frozen=True)
class QuadratureSample:
    theta: float
    count: int
    mean: float
    variance: float


@dataclass(frozen=True)
class PhaseEstimate:
    theta: float
    count: int
    variance: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class HomodyneEstimate:
    """Per-phase variances with confidence intervals and the derived triple."""

    per_phase: tuple[PhaseEstimate, ...]
    var_q: float
    var_p: float
    var_r: float
    var_q_ci: tuple[float, float]
    var_p_ci: tuple[float, float]
    var_r_ci: tuple[float, float]
    triple: float
    triple_ci_lo: float
    triple_ci_hi: float
    method: str
    seed: int
    samples_per_phase: int


@dataclass(frozen=True)
class SweepRow:
    phi: float
    sampled_triple: float
    ci_lo: float
    ci_hi: float
    exact_triple: float


def _tabulated_marginal(state: np.ndarray, theta: float, hbar: float):
    scale = math.sqrt(hbar)
    step = 1e-3 * scale
    grid = np.arange(-8.0 * scale, 8.0 * scale + step / 2.0, step)
    density = np.abs(fock.quadrature_wavefunction(state, grid, theta, hbar)) ** 2
    mass = float(trapezoid(density, grid))
    if abs(mass - 1.0) > _MASS_TOL:
        raise ValueError(
            f"state leaks outside the tabulation window: grid mass {mass!r}"
        )
    return grid, density


def _draw(state, theta: float, count: int, rng: Generator, hbar: float) -> np.ndarray:
    if isinstance(state, gaussian.GaussianState):
        axis = gaussian.quadrature_axis(theta)
        mean = float(axis.as_array() @ state.mean)
        sigma = math.sqrt(gaussian.variance_along(state, axis))
        return rng.normal(mean, sigma, count)
    grid, density = _tabulated_marginal(np.asarray(state, dtype=complex), theta, hbar)
    # Inverse-CDF sampling with linear interpolation between grid nodes.
    widths = np.diff(grid)
    masses = 0.5 * (density[1:] + density[:-1]) * widths
    cdf = np.concatenate([[0.0], np.cumsum(masses)])
    cdf /= cdf[-1]
    return np.interp(rng.random(count), cdf, grid)


def sample_quadrature(state, theta: float, count: int, seed, hbar: float = 1.0) -> QuadratureSample:
    """Sample the quadrature at angle theta; deterministic for a fixed seed."""
    if count < _MIN_SAMPLES:
        raise ValueError(f"count must be >= {_MIN_SAMPLES}, got {count}")
    if isinstance(state, gaussian.GaussianState):
        hbar = state.hbar
    draws = _draw(state, theta, count, _rng(seed), hbar)
    return QuadratureSample(
        theta=theta,
        count=count,
        mean=float(np.mean(draws)),
        variance=float(np.var(draws, ddof=1)),
    )


def variance_ci_chi2(variance: float, count: int, confidence: float = _CONFIDENCE):
    """Exact chi-square interval for the variance of normal draws."""
    tail = (1.0 - confidence) / 2.0
    dof = count - 1
    lo = dof * variance / scipy.stats.chi2.ppf(1.0 - tail, dof)
    hi = dof * variance / scipy.stats.chi2.ppf(tail, dof)
    return lo, hi


def _bootstrap_variances(draws: np.ndarray, rng: Generator, resamples: int) -> np.ndarray:
    count = draws.size
    out = np.empty(resamples)
    done = 0
    while done < resamples:
        block = min(_BOOTSTRAP_CHUNK, resamples - done)
        idx = rng.integers(0, count, size=(block, count))
        out[done : done + block] = np.var(draws[idx], axis=1, ddof=1)
        done += block
    return out


def _phase_index(phases: tuple[float, ...], target: float) -> int:
    for index, phase in enumerate(phases):
        if math.isclose(phase, target, rel_tol=0.0, abs_tol=1e-12):
            return index
    raise ValueError(f"configured phases {phases} do not include required phase {target!r}")


def estimate_triple(config: HomodyneConfig) -> HomodyneEstimate:
    """Estimate (Var q, Var p, Var r) and the triple product with 95% CIs.

    Chi-square intervals (and a lognormal delta interval for the product)
    are used for Gaussian states, whose marginals are exactly normal;
    percentile bootstrap otherwise.
    """
    phases = config.phases
    count = config.samples_per_phase
    is_gaussian = isinstance(config.state, gaussian.GaussianState)
    children = SeedSequence(config.seed).spawn(2 * len(phases))

    def run(index: int) -> np.ndarray:
        return _draw(config.state, phases[index], count, _rng(children[index]), config.hbar)

    draws = worker_map(run, range(len(phases)))
    variances = [float(np.var(d, ddof=1)) for d in draws]

    if is_gaussian:
        intervals = [variance_ci_chi2(v, count) for v in variances]
        boots = None
        method = "chi2"
    else:
        boots = [
            _bootstrap_variances(draws[i], _rng(children[len(phases) + i]), _BOOTSTRAP_RESAMPLES)
            for i in range(len(phases))
        ]
        tail = 100.0 * (1.0 - _CONFIDENCE) / 2.0
        intervals = [
            (float(np.percentile(b, tail)), float(np.percentile(b, 100.0 - tail)))
            for b in boots
        ]
        method = "bootstrap"

    per_phase = tuple(
        PhaseEstimate(theta=phases[i], count=count, variance=variances[i],
                      ci_lo=intervals[i][0], ci_hi=intervals[i][1])
        for i in range(len(phases))
    )

    iq = _phase_index(phases, 0.0)
    ip = _phase_index(phases, math.pi / 2.0)
    ir = _phase_index(phases, 5.0 * math.pi / 4.0)
    var_q, var_p = variances[iq], variances[ip]
    var_r = 2.0 * variances[ir]
    var_r_ci = (2.0 * intervals[ir][0], 2.0 * intervals[ir][1])
    triple = math.sqrt(var_q * var_p * var_r)

    if is_gaussian:
        z = scipy.stats.norm.ppf(1.0 - (1.0 - _CONFIDENCE) / 2.0)
        se_log = 0.5 * math.sqrt(3.0 * 2.0 / (count - 1))
        triple_lo = triple * math.exp(-z * se_log)
        triple_hi = triple * math.exp(z * se_log)
    else:
        products = np.sqrt(boots[iq] * boots[ip] * 2.0 * boots[ir])
        tail = 100.0 * (1.0 - _CONFIDENCE) / 2.0
        triple_lo = float(np.percentile(products, tail))
        triple_hi = float(np.percentile(products, 100.0 - tail))

    return HomodyneEstimate(
        per_phase=per_phase,
        var_q=var_q,
        var_p=var_p,
        var_r=var_r,
        var_q_ci=intervals[iq],
        var_p_ci=intervals[ip],
        var_r_ci=var_r_ci,
        triple=triple,
        triple_ci_lo=triple_lo,
        triple_ci_hi=triple_hi,
        method=method,
        seed=config.seed,
        samples_per_phase=count,
    )


def rotation_sweep(gamma: float, phi_grid, count: int, seed: int, hbar: float = 1.0) -> list[SweepRow]:
    """Sampled vs exact triple along the rotated squeezed-vacuum family."""
    phis = [float(phi) for phi in phi_grid]
    if not phis:
        raise ValueError("phi grid must be non-empty")
    children = SeedSequence(seed).spawn(len(phis))

    def run(index: int) -> SweepRow:
        state = rotated_family_state(gamma, phis[index], hbar)
        estimate = estimate_triple(
            HomodyneConfig(
                state=state,
                samples_per_phase=count,
                seed=children[index],
                hbar=hbar,
            )
        )
        exact = gaussian.triple_report(state).triple_product
        return SweepRow(
            phi=phis[index],
            sampled_triple=estimate.triple,
            ci_lo=estimate.triple_ci_lo,
            ci_hi=estimate.triple_ci_hi,
            exact_triple=exact,
        )

    return worker_map(run, range(len(phis)))
