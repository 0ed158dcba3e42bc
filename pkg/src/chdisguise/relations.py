"""Derived relations between channels and their mixing probabilities.

Containment (one channel as part of a mixture of another), propagation of
trade-off points through a shared middle channel, composition of mixing
probabilities, the diamond-norm bracket implied by the minimal equal
mixing probability, and the key-rate bound it induces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matkit
from .channels import ChoiRep, KrausChannel, choi_from_kraus
from .disguise import TradeoffPoint, upper_hull
from .errors import ValidationError

# PSD test tolerance for the containment bisection.
CONTAIN_PSD_TOL = 1e-10
CONTAIN_BISECT_ITERS = 60
# Relative eigenvalue floor below which the Choi matrix counts as singular
# and the inverse-square-root formula is abandoned for bisection.
CONTAIN_SINGULAR_RTOL = 1e-8


@dataclass(frozen=True)
class ContainmentResult:
    """Minimal q with C_E - (1-q)*C_F PSD; harmonizer present for 0 < q < 1."""

    q_min: float
    harmonizer: ChoiRep | None


@dataclass(frozen=True)
class DiamondBracket:
    lower: float
    upper: float


def _choi_matrix(ch) -> np.ndarray:
    if isinstance(ch, ChoiRep):
        return ch.matrix
    if isinstance(ch, KrausChannel):
        return choi_from_kraus(ch).matrix
    return ChoiRep.from_matrix(ch).matrix


def containment_min_q(e, f) -> ContainmentResult:
    """Smallest q such that E equals (1-q)*F plus q times some channel.

    With an invertible C_F the answer is one minus the smallest eigenvalue
    of C_F^{-1/2} C_E C_F^{-1/2} (clamped to [0, 1]); a singular or
    near-singular C_F falls back to bisection on q with a PSD test.  The
    harmonizer (C_E - (1-q)*C_F)/q is trace-preserving automatically.
    """
    ce = _choi_matrix(e)
    cf = _choi_matrix(f)
    if ce.shape != cf.shape:
        raise ValidationError(
            f"channel dimensions differ: {ce.shape} vs {cf.shape}"
        )

    es_f = matkit.hermitian_eig(cf)
    w = es_f.eigenvalues
    if w[-1] >= CONTAIN_SINGULAR_RTOL * max(w[0], 0.0) and w[-1] > 0.0:
        inv_root = (es_f.eigenvectors / np.sqrt(w)) @ es_f.eigenvectors.conj().T
        pencil = matkit.hermitize(inv_root @ ce @ inv_root)
        lam_min = float(matkit.hermitian_eig(pencil).eigenvalues[-1])
        q_min = 1.0 - min(max(lam_min, 0.0), 1.0)
    else:
        def smallest_eig(q: float):
            rest = matkit.hermitize(ce - (1.0 - q) * cf)
            es = matkit.hermitian_eig(rest)
            return float(es.eigenvalues[-1]), es.eigenvectors[:, -1]

        if smallest_eig(0.0)[0] >= -CONTAIN_PSD_TOL:
            q_min = 0.0
        else:
            lo, hi = 0.0, 1.0
            for _ in range(CONTAIN_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                if smallest_eig(mid)[0] >= -CONTAIN_PSD_TOL:
                    hi = mid
                else:
                    lo = mid
            q_min = hi
            # The tolerance in the bisection test lands just below the true
            # boundary; Newton steps on the smallest eigenvalue (its slope
            # in q is v' C_F v) remove the undershoot so the harmonizer is
            # PSD to working precision.
            scale = matkit.spectral_norm(ce)
            for _ in range(8):
                lam, v = smallest_eig(q_min)
                if lam >= -1e-13 * scale or q_min >= 1.0:
                    break
                slope = float((v.conj() @ cf @ v).real)
                if slope <= 1e-12 * scale:
                    break
                q_min = min(q_min - lam / slope, 1.0)
        if q_min > 1.0 - 1e-9:
            q_min = 1.0

    harmonizer = None
    if 0.0 < q_min < 1.0:
        harmonizer = ChoiRep.from_matrix(
            matkit.hermitize(ce - (1.0 - q_min) * cf) / q_min
        )
    return ContainmentResult(q_min=q_min, harmonizer=harmonizer)


def _check_point(pt, name: str) -> TradeoffPoint:
    p, q = pt
    if not 0.0 <= p <= 1.0 or not 0.0 <= q <= 1.0:
        raise ValidationError(f"{name} must lie in the unit square, got ({p}, {q})")
    return TradeoffPoint(float(p), float(q))


def triangle_combine(pq_ef, pq_fg) -> TradeoffPoint:
    """Achievable pair for (E, G) from pairs for (E, F) and (F, G).

    Undefined when both middle-channel weights q and q' equal one.
    """
    p, q = _check_point(pq_ef, "pq_ef")
    pp, qq = _check_point(pq_fg, "pq_fg")
    denom = 1.0 - q * qq
    if denom <= 1e-15:
        raise ValidationError(
            "combination undefined: both q values equal 1"
        )
    p2 = (p * (1.0 - qq) + (1.0 - q) * qq) / denom
    q2 = (pp * (1.0 - q) + (1.0 - qq) * q) / denom
    return TradeoffPoint(min(max(p2, 0.0), 1.0), min(max(q2, 0.0), 1.0))


def _points_of(profile) -> list[TradeoffPoint]:
    pts = profile.upper_points if hasattr(profile, "upper_points") else profile
    return [TradeoffPoint(float(p), float(q)) for p, q in pts]


def _prune_dominated(points) -> tuple[TradeoffPoint, ...]:
    out = []
    for x in points:
        dominated = any(
            y.p <= x.p and y.q <= x.q and (y.p < x.p or y.q < x.q) for y in points
        )
        if not dominated:
            out.append(x)
    return tuple(sorted(set(out)))


def triangle_region(profile_ef, profile_fg, stride: int = 5) -> tuple[TradeoffPoint, ...]:
    """Boundary of the achievable (E, G) region from two achievable profiles.

    Combines every ``stride``-th point of one profile with every
    ``stride``-th point of the other and returns the lower-left convex
    boundary of the results with dominated vertices removed.  The boundary
    is achievable but possibly suboptimal.
    """
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    pts_ef = _points_of(profile_ef)
    pts_fg = _points_of(profile_fg)
    if not pts_ef or not pts_fg:
        raise ValidationError("profiles must be non-empty")

    def subsample(pts):
        sub = pts[::stride]
        if pts[-1] not in sub:
            sub.append(pts[-1])
        return sub

    combos = []
    for a in subsample(pts_ef):
        for b in subsample(pts_fg):
            if a.q == 1.0 and b.q == 1.0:
                continue
            combos.append(triangle_combine(a, b))
    if not combos:
        raise ValidationError("no combinable point pairs (all q values are 1)")
    return _prune_dominated(upper_hull(combos))


def compose_mixing(pq1, pq2, mode: str = "product") -> TradeoffPoint:
    """Mixing probabilities compatible with the composition of two disguised pairs.

    ``product`` mode gives p = p1 + p2 - p1*p2 (independent selections);
    ``sum`` mode gives p = min(p1 + p2, 1).
    """
    p1, q1 = _check_point(pq1, "pq1")
    p2, q2 = _check_point(pq2, "pq2")
    if mode == "product":
        return TradeoffPoint(p1 + p2 - p1 * p2, q1 + q2 - q1 * q2)
    if mode == "sum":
        return TradeoffPoint(min(p1 + p2, 1.0), min(q1 + q2, 1.0))
    raise ValidationError(f"mode must be 'product' or 'sum', got {mode!r}")


def diamond_bracket(p_eq: float, n: int) -> DiamondBracket:
    """Two-sided diamond-norm bracket from the minimal equal mixing probability.

    lower = p/(n^2 (1-p)) and upper = min(4p, 2); valid for the beta = 1
    solve where p = q, which never exceeds 1/2.
    """
    if n < 2:
        raise ValidationError(f"dimension must be >= 2, got {n}")
    if not 0.0 <= p_eq <= 0.5:
        raise ValidationError(
            f"equal mixing probability must lie in [0, 0.5], got {p_eq}"
        )
    lower = p_eq / (n * n * (1.0 - p_eq))
    upper = min(4.0 * p_eq, 2.0)
    return DiamondBracket(lower=lower, upper=upper)


def qkd_rate_bound(p: float, n: int) -> float:
    """Key-rate upper bound p * log2(n) in bits per signal."""
    if n < 2:
        raise ValidationError(f"dimension must be >= 2, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"mixing probability must lie in [0, 1], got {p}")
    return p * math.log2(n)
