"""Exact covariance-matrix engine for pure Gaussian states of a single mode.

The observable triple is (q, p, r) with r = -q - p, all three pairwise
canonical.  States are kept exactly pure; a state is its mean vector and
2x2 covariance matrix.  Transforms act at the symplectic level
(cov -> S cov S^T, mean -> S mean + d), with sign conventions chosen so
that the covariance image of each unitary matches its action on the
truncated number-basis engine:

* ``squeeze(gamma)`` contracts the position variance by exp(-2*gamma),
* ``gauge(b)`` is the shear q -> q - b*p generated by p^2,
* ``rotation(phi)`` is counterclockwise in the (q, p) plane,
* ``general_squeeze(gamma, theta)`` contracts along the axis with
  inclination theta/2.

Everything here is closed form; no sampling and no truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple

import numpy as np

from .bounds import TAU, additive_bound, pair_bound, triple_bound

__all__ = [
    "Direction",
    "GaussianState",
    "SymplecticTransform",
    "TripleReport",
    "Q_AXIS",
    "P_AXIS",
    "R_AXIS",
    "quadrature_axis",
    "vacuum_state",
    "translation",
    "gauge",
    "squeeze",
    "general_squeeze",
    "rotation",
    "build_transform",
    "compose",
    "apply_transform",
    "variance_along",
    "triple_report",
    "report_from_variances",
    "xi_state",
    "xi_covariance",
    "wigner_value",
    "wigner_level_area",
    "marginal_entropy",
    "r_marginal_entropy",
    "entropy_triple_sum",
    "random_state",
]

_SYMMETRY_TOL = 1e-12
_DET_ONE_TOL = 1e-12
_ADMISSIBLE_SLACK = 1e-9


class Direction(NamedTuple):
    """Coefficients (c_q, c_p) of the observable c_q*q + c_p*p."""

    c_q: float
    c_p: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c_q, self.c_p], dtype=float)


Q_AXIS = Direction(1.0, 0.0)
P_AXIS = Direction(0.0, 1.0)
R_AXIS = Direction(-1.0, -1.0)


def quadrature_axis(theta: float) -> Direction:
    """Unit direction (cos(theta), sin(theta)) probed at local-oscillator phase theta."""
    return Direction(math.cos(theta), math.sin(theta))


def _frozen_array(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("array entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianState:
    """Pure Gaussian state: mean (q, p) in units sqrt(hbar), covariance in units hbar.

    The covariance must be symmetric positive-definite with
    det(cov) >= (hbar/2)^2; every state produced by this module is pure,
    i.e. det(cov) = (hbar/2)^2 up to roundoff.
    """

    mean: np.ndarray
    cov: np.ndarray
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.hbar) and self.hbar > 0.0):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar}")
        mean = _frozen_array(self.mean, (2,))
        cov = _frozen_array(self.cov, (2, 2))
        scale = max(1.0, float(np.max(np.abs(cov))))
        if abs(cov[0, 1] - cov[1, 0]) > _SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix must be symmetric")
        det = float(np.linalg.det(cov))
        if cov[0, 0] <= 0.0 or cov[1, 1] <= 0.0 or det <= 0.0:
            raise ValueError("covariance matrix must be positive-definite")
        floor = (self.hbar / 2.0) ** 2
        if det < floor * (1.0 - _ADMISSIBLE_SLACK):
            raise ValueError(
                f"covariance is not admissible: det = {det:.3e} < (hbar/2)^2 = {floor:.3e}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def purity_defect(self) -> float:
        """Relative deviation of det(cov) from the pure-state value (hbar/2)^2."""
        return float(np.linalg.det(self.cov)) / (self.hbar / 2.0) ** 2 - 1.0


@dataclass(frozen=True)
class SymplecticTransform:
    """Linear phase-space map: 2x2 symplectic matrix plus displacement."""

    matrix: np.ndarray
    displacement: np.ndarray

    def __post_init__(self) -> None:
        matrix = _frozen_array(self.matrix, (2, 2))
        displacement = _frozen_array(self.displacement, (2,))
        det = float(np.linalg.det(matrix))
        if abs(det - 1.0) > _DET_ONE_TOL * max(1.0, float(np.max(np.abs(matrix))) ** 2):
            raise ValueError(f"matrix must have unit determinant, got det = {det!r}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "displacement", displacement)


def _transform(matrix, displacement=(0.0, 0.0)) -> SymplecticTransform:
    return SymplecticTransform(np.asarray(matrix, dtype=float), np.asarray(displacement, dtype=float))


def _check_finite(name: str, *values: float) -> None:
    for value in values:
        if not math.isfinite(value):
            raise ValueError(f"{name} parameter must be finite, got {value!r}")


def translation(alpha: complex, hbar: float = 1.0) -> SymplecticTransform:
    """Rigid displacement by alpha = (q0 + i*p0)/sqrt(2*hbar)."""
    alpha = complex(alpha)
    _check_finite("translation", alpha.real, alpha.imag, hbar)
    shift = math.sqrt(2.0 * hbar) * np.array([alpha.real, alpha.imag])
    return _transform(np.eye(2), shift)


def gauge(b: float) -> SymplecticTransform:
    """Shear generated by p^2: q -> q - b*p, p -> p."""
    _check_finite("gauge", b)
    return _transform([[1.0, -b], [0.0, 1.0]])


def squeeze(gamma: float) -> SymplecticTransform:
    """Axis-aligned squeeze: position variance scales by exp(-2*gamma)."""
    _check_finite("squeeze", gamma)
    return _transform([[math.exp(-gamma), 0.0], [0.0, math.exp(gamma)]])


def rotation(phi: float) -> SymplecticTransform:
    """Counterclockwise rotation by phi in the (q, p) plane."""
    _check_finite("rotation", phi)
    c, s = math.cos(phi), math.sin(phi)
    return _transform([[c, -s], [s, c]])


def general_squeeze(gamma: float, theta: float) -> SymplecticTransform:
    """Squeeze of magnitude gamma contracting along the axis with inclination theta/2."""
    _check_finite("general_squeeze", gamma, theta)
    half = rotation(theta / 2.0).matrix
    core = squeeze(gamma).matrix
    return _transform(half @ core @ half.T)


_KINDS = {
    "translation": translation,
    "gauge": gauge,
    "squeeze": squeeze,
    "general_squeeze": general_squeeze,
    "rotation": rotation,
}


def build_transform(kind: str, **params) -> SymplecticTransform:
    """Dispatching constructor; ``kind`` is one of translation, gauge, squeeze, general_squeeze, rotation."""
    try:
        factory = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown transform kind {kind!r}; expected one of {sorted(_KINDS)}") from None
    return factory(**params)


def compose(*transforms: SymplecticTransform) -> SymplecticTransform:
    """Compose transforms in operator order: the rightmost acts first."""
    if not transforms:
        raise ValueError("compose requires at least one transform")

    def pair(outer: SymplecticTransform, inner: SymplecticTransform) -> SymplecticTransform:
        return _transform(
            outer.matrix @ inner.matrix,
            outer.matrix @ inner.displacement + outer.displacement,
        )

    return reduce(pair, transforms)


def vacuum_state(hbar: float = 1.0) -> GaussianState:
    """Ground state of the unit-mass, unit-frequency oscillator: cov = (hbar/2) I."""
    if not (math.isfinite(hbar) and hbar > 0.0):
        raise ValueError(f"hbar must be positive and finite, got {hbar}")
    return GaussianState(np.zeros(2), (hbar / 2.0) * np.eye(2), hbar)


def apply_transform(state: GaussianState, transform: SymplecticTransform) -> GaussianState:
    """Return the image state; purity is preserved since det S = 1."""
    s = transform.matrix
    return GaussianState(s @ state.mean + transform.displacement, s @ state.cov @ s.T, state.hbar)


def _direction_array(direction) -> np.ndarray:
    vec = np.asarray(
        direction.as_array() if isinstance(direction, Direction) else direction, dtype=float
    )
    if vec.shape != (2,):
        raise ValueError("direction must have exactly two coefficients")
    if not np.all(np.isfinite(vec)) or np.all(vec == 0.0):
        raise ValueError("direction must be a finite non-zero vector")
    return vec


def variance_along(state: GaussianState, direction) -> float:
    """Variance v^T cov v of the observable c_q*q + c_p*p."""
    vec = _direction_array(direction)
    return float(vec @ state.cov @ vec)


@dataclass(frozen=True)
class TripleReport:
    """Standard deviations of (q, p, r) with pair/triple/additive figures of merit.

    ``margin_*`` fields are signed distances to the corresponding lower
    bounds (non-negative means the bound is satisfied).
    """

    hbar: float
    dq: float
    dp: float
    dr: float
    pair_qp: float
    pair_qr: float
    pair_rp: float
    triple_product: float
    additive_sum: float
    margin_pair_qp: float
    margin_pair_qr: float
    margin_pair_rp: float
    margin_triple: float
    margin_additive: float

    def as_dict(self) -> dict:
        return {field: getattr(self, field) for field in self.__dataclass_fields__}


def report_from_variances(var_q: float, var_p: float, var_r: float, hbar: float = 1.0) -> TripleReport:
    """Assemble a TripleReport from the three variances."""
    if min(var_q, var_p, var_r) <= 0.0:
        raise ValueError("variances must be strictly positive")
    dq, dp, dr = math.sqrt(var_q), math.sqrt(var_p), math.sqrt(var_r)
    pair_qp, pair_qr, pair_rp = dq * dp, dq * dr, dr * dp
    triple = dq * dp * dr
    additive = var_q + var_p + var_r
    pair_ref = pair_bound(hbar)
    return TripleReport(
        hbar=hbar,
        dq=dq,
        dp=dp,
        dr=dr,
        pair_qp=pair_qp,
        pair_qr=pair_qr,
        pair_rp=pair_rp,
        triple_product=triple,
        additive_sum=additive,
        margin_pair_qp=pair_qp - pair_ref,
        margin_pair_qr=pair_qr - pair_ref,
        margin_pair_rp=pair_rp - pair_ref,
        margin_triple=triple - triple_bound(hbar),
        margin_additive=additive - additive_bound(hbar),
    )


def triple_report(state: GaussianState) -> TripleReport:
    return report_from_variances(
        variance_along(state, Q_AXIS),
        variance_along(state, P_AXIS),
        variance_along(state, R_AXIS),
        state.hbar,
    )


def xi_covariance(hbar: float = 1.0) -> np.ndarray:
    """Covariance of the minimal-triple-uncertainty state: diag tau*hbar/2, off-diag -tau*hbar/4."""
    return np.array(
        [[TAU * hbar / 2.0, -TAU * hbar / 4.0], [-TAU * hbar / 4.0, TAU * hbar / 2.0]]
    )


def xi_state(alpha: complex = 0j, hbar: float = 1.0) -> GaussianState:
    """Displaced minimal-uncertainty state for the triple product and the additive sum."""
    alpha = complex(alpha)
    _check_finite("xi_state", alpha.real, alpha.imag)
    mean = math.sqrt(2.0 * hbar) * np.array([alpha.real, alpha.imag])
    return GaussianState(mean, xi_covariance(hbar), hbar)


def wigner_value(state: GaussianState, q, p):
    """Wigner density at phase-space point(s) (q, p); broadcasts over arrays."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    inv = np.linalg.inv(state.cov)
    norm = 1.0 / (2.0 * math.pi * math.sqrt(float(np.linalg.det(state.cov))))
    dq = q - state.mean[0]
    dp = p - state.mean[1]
    quad = inv[0, 0] * dq * dq + 2.0 * inv[0, 1] * dq * dp + inv[1, 1] * dp * dp
    value = norm * np.exp(-0.5 * quad)
    return float(value) if value.ndim == 0 else value


def wigner_level_area(state: GaussianState, level: float | None = None, grid_points: int = 20001) -> float:
    """Area enclosed by the contour W = level, by exact per-row chord lengths.

    For each p the region is a q-interval whose endpoints solve a quadratic,
    so only the p-integration is numerical.  Default level is 1/e of the peak.
    """
    peak = 1.0 / (2.0 * math.pi * math.sqrt(float(np.linalg.det(state.cov))))
    if level is None:
        level = peak / math.e
    if not 0.0 < level < peak:
        raise ValueError("level must lie strictly between 0 and the Wigner peak")
    inv = np.linalg.inv(state.cov)
    # Contour: s00 dq^2 + 2 s01 dq dp + s11 dp^2 = 2*log(peak/level)
    height = 2.0 * math.log(peak / level)
    p_tip = math.sqrt(height * float(state.cov[1, 1]))
    dp = np.linspace(-p_tip, p_tip, grid_points)
    disc = (inv[0, 1] * dp) ** 2 - inv[0, 0] * (inv[1, 1] * dp * dp - height)
    chord = 2.0 * np.sqrt(np.clip(disc, 0.0, None)) / inv[0, 0]
    return float(np.trapz(chord, dp))


def _gaussian_entropy(variance: float, hbar: float) -> float:
    # Differential entropy of a normal marginal, variable in units of sqrt(hbar).
    return 0.5 * math.log(2.0 * math.pi * math.e * variance / hbar)


def marginal_entropy(state: GaussianState, theta: float) -> float:
    """Shannon entropy of the quadrature cos(theta) q + sin(theta) p marginal."""
    return _gaussian_entropy(variance_along(state, quadrature_axis(theta)), state.hbar)


def r_marginal_entropy(state: GaussianState) -> float:
    """Entropy of the r = -q - p marginal, taken from Var(r) directly.

    r equals sqrt(2) times the unit quadrature at angle 5*pi/4; using Var(r)
    rather than the unit quadrature shifts the entropy by log(2)/2.
    """
    return _gaussian_entropy(variance_along(state, R_AXIS), state.hbar)


def entropy_triple_sum(state: GaussianState) -> float:
    """S_q + S_p + S_r for the three marginals of the triple."""
    return marginal_entropy(state, 0.0) + marginal_entropy(state, math.pi / 2.0) + r_marginal_entropy(state)


def random_state(
    rng: np.random.Generator,
    hbar: float = 1.0,
    gamma_range: tuple[float, float] = (0.0, 3.0),
    alpha_scale: float = 1.0,
) -> GaussianState:
    """Random pure Gaussian state: squeeze along a random axis, rotate, displace."""
    gamma = rng.uniform(*gamma_range)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    alpha = alpha_scale * (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2.0)
    chain = compose(translation(alpha, hbar), rotation(phi), general_squeeze(gamma, theta))
    return apply_transform(vacuum_state(hbar), chain)
