"""Truncated number-basis operator engine for the (q, p, r) triple.

Operators are dense complex matrices at truncation ``dim``.  All unitaries
are built as exponentials of Hermitian generators via eigendecomposition,
so they are unitary to roundoff by construction.  Truncation artifacts are
quarantined by interior projections (states/columns with n well below the
boundary); comparisons between operators or states are made after optimal
global-phase alignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
import scipy.linalg

from .bounds import TAU

__all__ = [
    "OperatorSet",
    "ExtremalState",
    "ModularReport",
    "ResolutionReport",
    "build_operators",
    "unitary_from_generator",
    "translation_op",
    "gauge_op",
    "squeeze_op",
    "general_squeeze_op",
    "rotation_op",
    "extremal_unitary",
    "build_extremal_state",
    "moments",
    "stationarity_residual",
    "cycle_operator",
    "cycle_operator_combined",
    "modular_check",
    "verify_bch_identity",
    "resolution_check",
    "hermite_functions",
    "position_wavefunction",
    "quadrature_wavefunction",
    "interior_size",
    "phase_align",
    "is_unitary",
]

_HERMITIAN_TOL = 1e-10
_NORM_TOL = 1e-12
_MIN_DIM = 8


@dataclass(frozen=True)
class OperatorSet:
    """Ladder and quadrature matrices at truncation ``dim``.

    q, p, r and number are Hermitian; r = -q - p holds exactly by
    construction, and [q, p] = i*hbar*I holds on all rows/columns except
    the last (the usual truncation artifact).
    """

    dim: int
    hbar: float
    a: np.ndarray
    adag: np.ndarray
    q: np.ndarray
    p: np.ndarray
    r: np.ndarray
    number: np.ndarray


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=32)
def _build_operators(dim: int, hbar: float) -> OperatorSet:
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    adag = a.conj().T.copy()
    scale = math.sqrt(hbar / 2.0)
    q = scale * (a + adag)
    p = 1j * scale * (adag - a)
    r = -q - p
    number = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return OperatorSet(
        dim=dim,
        hbar=hbar,
        a=_freeze(a),
        adag=_freeze(adag),
        q=_freeze(q),
        p=_freeze(p),
        r=_freeze(r),
        number=_freeze(number),
    )


def build_operators(dim: int, hbar: float = 1.0) -> OperatorSet:
    """Construct (and cache) the operator set at truncation ``dim`` >= 8."""
    if int(dim) != dim or dim < _MIN_DIM:
        raise ValueError(f"truncation must be an integer >= {_MIN_DIM}, got {dim}")
    if not (math.isfinite(hbar) and hbar > 0.0):
        raise ValueError(f"hbar must be positive and finite, got {hbar}")
    return _build_operators(int(dim), float(hbar))


def interior_size(dim: int, fraction: int = 4) -> int:
    """Number of basis states with n <= dim/fraction (inclusive)."""
    return dim // fraction + 1


def _expm_i(eigvals: np.ndarray, eigvecs: np.ndarray, scale: float) -> np.ndarray:
    return (eigvecs * np.exp(1j * scale * eigvals)) @ eigvecs.conj().T


def unitary_from_generator(generator: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(1j * scale * H) for Hermitian H, via eigendecomposition."""
    h = np.asarray(generator, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("generator must be a square matrix")
    defect = float(np.max(np.abs(h - h.conj().T)))
    if defect > _HERMITIAN_TOL * max(1.0, float(np.max(np.abs(h)))):
        raise ValueError(f"generator is not Hermitian (max deviation {defect:.3e})")
    if not math.isfinite(scale):
        raise ValueError(f"scale must be finite, got {scale}")
    eigvals, eigvecs = scipy.linalg.eigh((h + h.conj().T) / 2.0)
    return _expm_i(eigvals, eigvecs, scale)


@lru_cache(maxsize=64)
def _generator_eigh(kind: str, dim: int, hbar: float):
    # Shared eigendecompositions for the fixed-shape generators, so that
    # re-exponentiating at many scales costs two matmuls instead of an eigh.
    ops = _build_operators(dim, hbar)
    generators = {
        "gauge": ops.p @ ops.p / (2.0 * hbar),
        "squeeze": (ops.q @ ops.p + ops.p @ ops.q) / (2.0 * hbar),
        "number": ops.number,
        "shear_q": ops.q @ ops.q / (2.0 * hbar),
        "quarter": (ops.p @ ops.p + ops.q @ ops.q) / (4.0 * hbar),
        "casimir": (ops.p @ ops.p + ops.q @ ops.q + ops.r @ ops.r) / hbar,
    }
    h = generators[kind]
    eigvals, eigvecs = scipy.linalg.eigh((h + h.conj().T) / 2.0)
    return _freeze(eigvals), _freeze(eigvecs)


def is_unitary(matrix: np.ndarray, tol: float = 1e-9) -> bool:
    m = np.asarray(matrix)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))) <= tol


def translation_op(ops: OperatorSet, alpha: complex) -> np.ndarray:
    """Displacement by alpha = (q0 + i*p0)/sqrt(2*hbar)."""
    alpha = complex(alpha)
    q0 = math.sqrt(2.0 * ops.hbar) * alpha.real
    p0 = math.sqrt(2.0 * ops.hbar) * alpha.imag
    generator = (p0 * ops.q - q0 * ops.p) / ops.hbar
    return unitary_from_generator(generator, 1.0)


def gauge_op(ops: OperatorSet, b: float) -> np.ndarray:
    """Shear exp(1j * b * p^2 / (2*hbar))."""
    return unitary_from_generator(ops.p @ ops.p / (2.0 * ops.hbar), b)


def squeeze_op(ops: OperatorSet, gamma: float) -> np.ndarray:
    """Axis-aligned squeeze exp(1j * gamma * (qp + pq) / (2*hbar)); contracts q."""
    generator = (ops.q @ ops.p + ops.p @ ops.q) / (2.0 * ops.hbar)
    return unitary_from_generator(generator, gamma)


def general_squeeze_op(ops: OperatorSet, gamma: float, theta: float) -> np.ndarray:
    """Squeeze exp((conj(xi) a^2 - xi adag^2)/2), xi = gamma * exp(1j*theta)."""
    xi = gamma * np.exp(1j * theta)
    skew = (np.conj(xi) * ops.a @ ops.a - xi * ops.adag @ ops.adag) / 2.0
    return unitary_from_generator(-1j * skew, 1.0)


def rotation_op(ops: OperatorSet, phi: float) -> np.ndarray:
    """Counterclockwise phase-space rotation exp(1j * phi * n)."""
    return unitary_from_generator(ops.number, phi)


def extremal_unitary(ops: OperatorSet, alpha: complex = 0j) -> np.ndarray:
    """Unitary mapping number states to the triple-uncertainty extremal family."""
    chain = [gauge_op(ops, 0.5), squeeze_op(ops, 0.5 * math.log(TAU))]
    if alpha != 0:
        chain.insert(0, translation_op(ops, alpha))
    return reduce(np.matmul, chain)


@dataclass(frozen=True)
class ExtremalState:
    """Truncated extremal state with its truncation diagnostics."""

    vector: np.ndarray
    deficit: float
    level: int
    alpha: complex
    dim: int
    hbar: float


def build_extremal_state(
    level: int, alpha: complex, dim: int, hbar: float = 1.0, pad_factor: int = 2
) -> ExtremalState:
    """Normalized truncated image of the extremal unitary applied to |level>.

    The image is computed at ``pad_factor * dim`` and truncated to ``dim``;
    ``deficit`` is the squared norm lost in that truncation, i.e. the
    renormalization applied to the returned vector.
    """
    if level < 0 or level > dim // 4:
        raise ValueError(f"level must satisfy 0 <= level <= dim/4, got {level} at dim {dim}")
    padded = build_operators(pad_factor * dim, hbar)
    column = extremal_unitary(padded, alpha)[:, level]
    head = column[:dim]
    norm_sq = float(np.real(np.vdot(head, head)))
    vector = head / math.sqrt(norm_sq)
    return ExtremalState(
        vector=_freeze(vector),
        deficit=1.0 - norm_sq,
        level=level,
        alpha=complex(alpha),
        dim=dim,
        hbar=hbar,
    )


def _check_state(state: np.ndarray) -> np.ndarray:
    vec = np.asarray(state, dtype=complex)
    if vec.ndim != 1:
        raise ValueError("state must be a vector")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"state must be normalized, got norm {norm!r}")
    return vec


def moments(state: np.ndarray, op: np.ndarray) -> tuple[float, float]:
    """Mean and variance of a Hermitian operator in the given state."""
    vec = _check_state(state)
    op = np.asarray(op, dtype=complex)
    defect = float(np.max(np.abs(op - op.conj().T)))
    if defect > _HERMITIAN_TOL * max(1.0, float(np.max(np.abs(op)))):
        raise ValueError(f"operator is not Hermitian (max deviation {defect:.3e})")
    image = op @ vec
    mean_c = complex(np.vdot(vec, image))
    if abs(mean_c.imag) > 1e-10 * max(1.0, abs(mean_c.real)):
        raise ValueError(f"expectation value has large imaginary part {mean_c.imag:.3e}")
    mean = mean_c.real
    second = float(np.real(np.vdot(image, image)))
    return mean, second - mean * mean


def stationarity_residual(state: np.ndarray, ops: OperatorSet) -> float:
    """Norm of (F - 1)|state> with F the variance-normalized quadratic form.

    F = (1/3) * sum over x in (q, p, r) of (x - <x>)^2 / Var(x), with the
    expectation values taken self-consistently from ``state``; minimizers
    of the triple product satisfy F|state> = |state>.
    """
    vec = _check_state(state)
    accum = -vec.astype(complex)
    for op in (ops.q, ops.p, ops.r):
        mean, var = moments(vec, op)
        if var <= 1e-14:
            raise ValueError("degenerate variance in stationarity residual")
        shifted = op @ vec - mean * vec
        accum = accum + (op @ shifted - mean * shifted) / (3.0 * var)
    return float(np.linalg.norm(accum))


def _cycle_factors(ops: OperatorSet) -> tuple[np.ndarray, np.ndarray]:
    shear = unitary_from_generator(ops.q @ ops.q / (2.0 * ops.hbar), -1.0)
    quarter_turn = unitary_from_generator(
        (ops.p @ ops.p + ops.q @ ops.q) / (4.0 * ops.hbar), -math.pi
    )
    return shear, quarter_turn


def cycle_operator(ops: OperatorSet) -> np.ndarray:
    """Unitary cycling p -> q -> r -> p, as shear times clockwise quarter turn."""
    shear, quarter_turn = _cycle_factors(ops)
    return shear @ quarter_turn


def cycle_operator_combined(ops: OperatorSet) -> np.ndarray:
    """Same cycle as a single exponential of p^2 + q^2 + r^2."""
    generator = (ops.p @ ops.p + ops.q @ ops.q + ops.r @ ops.r) / ops.hbar
    return unitary_from_generator(generator, -math.pi / (3.0 * math.sqrt(3.0)))


def phase_align(candidate: np.ndarray, reference: np.ndarray) -> tuple[np.ndarray, complex]:
    """Scale ``candidate`` by the unit phase bringing it closest to ``reference``."""
    overlap = complex(np.vdot(candidate, reference))
    phase = 1.0 + 0j if abs(overlap) < 1e-300 else overlap / abs(overlap)
    return candidate * phase, phase


def _phase_search_to_target(block: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    # Minimize max-abs(exp(1j*angle)*block - target) over the unit circle,
    # coarse grid then ternary refinement to 1e-8 in the angle.
    def residual(angle: float) -> float:
        return float(np.max(np.abs(np.exp(1j * angle) * block - target)))

    angles = np.linspace(0.0, 2.0 * math.pi, 3600, endpoint=False)
    values = [residual(a) for a in angles]
    best = int(np.argmin(values))
    step = angles[1] - angles[0]
    lo, hi = angles[best] - step, angles[best] + step
    while hi - lo > 1e-8:
        third = (hi - lo) / 3.0
        left, right = lo + third, hi - third
        if residual(left) <= residual(right):
            hi = right
        else:
            lo = left
    angle = (lo + hi) / 2.0
    return residual(angle), angle % (2.0 * math.pi)


@dataclass(frozen=True)
class ModularReport:
    """Residuals of the modular-group relations on the interior subspace.

    ``b_squared_residual`` is the distance of the squared quarter-turn
    factor to the identity after the optimal scalar phase.  The squared
    quarter turn equals a phase times the parity operator, so this residual
    cannot be small on a parity-mixed subspace; the distance to the nearest
    phase times parity is reported alongside as the sharp statement.
    """

    dim: int
    hbar: float
    b_squared_residual: float
    b_squared_phase: float
    ab_cubed_residual: float
    ab_cubed_phase: float
    b_squared_parity_residual: float
    b_squared_eigenvalue_spread: float


def modular_check(dim: int = 128, hbar: float = 1.0) -> ModularReport:
    """Search scalar phases bringing B^2 and (A B)^3 closest to the identity."""
    if dim < 64:
        raise ValueError(f"modular check requires dim >= 64, got {dim}")
    ops = build_operators(dim, hbar)
    shear, quarter_turn = _cycle_factors(ops)
    k = interior_size(dim)
    eye = np.eye(k, dtype=complex)

    b_squared = (quarter_turn @ quarter_turn)[:k, :k]
    cycle = shear @ quarter_turn
    ab_cubed = (cycle @ cycle @ cycle)[:k, :k]

    b_res, b_phase = _phase_search_to_target(b_squared, eye)
    ab_res, ab_phase = _phase_search_to_target(ab_cubed, eye)

    parity = np.diag((-1.0 + 0j) ** np.arange(k))
    parity_res, _ = _phase_search_to_target(b_squared, parity)

    diag = np.diagonal(b_squared)
    spread = float(np.max(np.abs(diag[:, None] - diag[None, :])))

    return ModularReport(
        dim=dim,
        hbar=hbar,
        b_squared_residual=b_res,
        b_squared_phase=b_phase,
        ab_cubed_residual=ab_res,
        ab_cubed_phase=ab_phase,
        b_squared_parity_residual=parity_res,
        b_squared_eigenvalue_spread=spread,
    )


def verify_bch_identity(dim: int = 128, hbar: float = 1.0) -> float:
    """Max-abs residual of the gauge-squeeze vs general-squeeze-rotation factorization.

    Compares gauge(1/2) . squeeze(ln(tau)/2) against
    general_squeeze(ln(3)/4, pi/2) . rotation(-pi/12) on interior columns,
    after global-phase alignment.
    """
    if dim < 64:
        raise ValueError(f"identity check requires dim >= 64, got {dim}")
    ops = build_operators(dim, hbar)
    lhs = gauge_op(ops, 0.5) @ squeeze_op(ops, 0.5 * math.log(TAU))
    rhs = general_squeeze_op(ops, 0.25 * math.log(3.0), math.pi / 2.0) @ rotation_op(
        ops, -math.pi / 12.0
    )
    k = interior_size(dim)
    aligned, _ = phase_align(rhs[:, :k], lhs[:, :k])
    return float(np.max(np.abs(lhs[:, :k] - aligned)))


@dataclass(frozen=True)
class ResolutionReport:
    """How well the first ``count`` extremal states resolve the low number states."""

    deficit: float
    orthonormality_residual: float
    count: int
    dim: int


def resolution_check(alpha: complex, dim: int, count: int, hbar: float = 1.0) -> ResolutionReport:
    """Projector deficit and pairwise orthonormality of the extremal family.

    The deficit is the spectral norm of (P - sum_n |n;alpha><n;alpha|) P
    with P the projector onto the first ``count`` number states, i.e. the
    part of that subspace the truncated extremal family fails to resolve.
    """
    if count < 1 or count > dim // 4:
        raise ValueError(f"count must satisfy 1 <= count <= dim/4, got {count}")
    vectors = np.column_stack(
        [build_extremal_state(n, alpha, dim, hbar).vector for n in range(count)]
    )
    gram = vectors.conj().T @ vectors
    ortho = float(np.max(np.abs(gram - np.eye(count))))
    basis = np.eye(dim, count, dtype=complex)
    remainder = basis - vectors @ (vectors.conj().T @ basis)
    deficit = float(np.linalg.norm(remainder, 2))
    return ResolutionReport(deficit=deficit, orthonormality_residual=ortho, count=count, dim=dim)


def hermite_functions(count: int, x: np.ndarray) -> np.ndarray:
    """Matrix of the first ``count`` oscillator eigenfunctions on grid ``x``.

    Uses the normalized three-term recurrence, which keeps every column at
    unit L2 norm and is stable for the truncations used here.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((x.size, count))
    out[:, 0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if count > 1:
        out[:, 1] = math.sqrt(2.0) * x * out[:, 0]
    for n in range(1, count - 1):
        out[:, n + 1] = (
            math.sqrt(2.0 / (n + 1.0)) * x * out[:, n]
            - math.sqrt(n / (n + 1.0)) * out[:, n - 1]
        )
    return out


def position_wavefunction(state: np.ndarray, grid: np.ndarray, hbar: float = 1.0) -> np.ndarray:
    """Synthesize <x|state> on ``grid`` from number-basis amplitudes."""
    vec = np.asarray(state, dtype=complex)
    scaled = np.asarray(grid, dtype=float) / math.sqrt(hbar)
    basis = hermite_functions(vec.size, scaled)
    return (basis @ vec) * hbar ** -0.25


def quadrature_wavefunction(
    state: np.ndarray, grid: np.ndarray, theta: float, hbar: float = 1.0
) -> np.ndarray:
    """Wavefunction in the eigenbasis of the quadrature at angle ``theta``."""
    vec = np.asarray(state, dtype=complex)
    rotated = vec * np.exp(-1j * theta * np.arange(vec.size))
    return position_wavefunction(rotated, grid, hbar)
