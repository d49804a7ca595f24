"""Analytic bound constants for the (q, p, r) observable triple, r = -q - p.

All bounds are exposed as functions of hbar so that dimensional scaling is
in one place.  ``TAU`` is the triple constant csc(2*pi/3) = sqrt(4/3).
"""

from __future__ import annotations

import math

TAU = 1.0 / math.sin(2.0 * math.pi / 3.0)


def pair_bound(hbar: float = 1.0) -> float:
    """Lower bound hbar/2 on each pairwise product of standard deviations."""
    return 0.5 * hbar


def triple_bound(hbar: float = 1.0) -> float:
    """Tight lower bound (tau*hbar/2)^(3/2) on dq*dp*dr."""
    return (TAU * hbar / 2.0) ** 1.5


def pairwise_triple_bound(hbar: float = 1.0) -> float:
    """The weaker (hbar/2)^(3/2) bound implied by the three pair bounds."""
    return (hbar / 2.0) ** 1.5


def vacuum_triple(hbar: float = 1.0) -> float:
    """Value sqrt(2)*(hbar/2)^(3/2) of dq*dp*dr in the vacuum."""
    return math.sqrt(2.0) * (hbar / 2.0) ** 1.5


def additive_bound(hbar: float = 1.0) -> float:
    """Tight lower bound 3*tau*hbar/2 on dq^2 + dp^2 + dr^2."""
    return 1.5 * TAU * hbar


def entropy_triple_bound() -> float:
    """Conjectured lower bound (3/2)*ln(tau*e*pi) on S_q + S_p + S_r.

    Entropies are differential Shannon entropies of the marginals with the
    variable expressed in units where hbar = 1.
    """
    return 1.5 * math.log(TAU * math.e * math.pi)


def entropy_pairwise_bound() -> float:
    """The weaker (3/2)*ln(e*pi) bound implied by pairwise entropic bounds."""
    return 1.5 * math.log(math.e * math.pi)
