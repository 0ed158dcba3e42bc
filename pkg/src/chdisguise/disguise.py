"""Trade-off profile engine.

For a channel pair (E, F) and a ratio beta = (1-q)/(1-p), the difference
of Choi matrices C_E - beta*C_F splits into PSD parts (delta_plus,
delta_minus) with orthogonal supports.  The achievable scaled objective
alpha = q/(1-p) is bracketed by

    trace(channel_sum(delta_plus)) / n  <=  alpha  <=  min(||channel_sum(delta_plus)||, 1)

and each alpha maps to a mixing-probability pair through
p = 1 - 1/(alpha+beta), q = alpha/(alpha+beta).  Sweeping beta over a grid
produces lower/upper trade-off curves in the (p, q) square; the upper
curve is refined by its lower convex hull merged with the q = 1 - p chord.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import NamedTuple, Sequence

import numpy as np

from . import matkit
from .channels import ChoiRep, KrausChannel, channel_sum, choi_from_kraus
from .errors import NumericalError, ValidationError

# Two bounds within this distance of each other count as an exact solve.
TIGHT_TOL = 1e-8
# Eigenvalue sign changes across the beta grid count as cusps only when
# |lambda| clears this fraction of ||C_E - beta*C_F|| on both sides.
CUSP_EIG_RTOL = 1e-10

DEFAULT_BETA_LO = 1e-2
DEFAULT_BETA_HI = 1e2
DEFAULT_BETA_COUNT = 400


class TradeoffPoint(NamedTuple):
    p: float
    q: float


class AlphaBounds(NamedTuple):
    lower: float
    upper: float
    tight: bool


@dataclass(frozen=True)
class BetaSample:
    """Bounds on the scaled objective at one grid ratio."""

    beta: float
    alpha_lower: float
    alpha_upper: float
    tight: bool


@dataclass(frozen=True)
class ProfileCurve:
    """Assembled lower/upper trade-off curves over a beta grid."""

    samples: tuple[BetaSample, ...]
    lower_points: tuple[TradeoffPoint, ...]
    upper_points: tuple[TradeoffPoint, ...]
    upper_hull_points: tuple[TradeoffPoint, ...]
    cusp_count: int


def default_beta_grid(
    lo: float = DEFAULT_BETA_LO,
    hi: float = DEFAULT_BETA_HI,
    count: int = DEFAULT_BETA_COUNT,
) -> np.ndarray:
    """Log-spaced beta grid; the endpoints beta=0 and beta=inf are excluded."""
    if lo <= 0 or hi <= lo:
        raise ValidationError(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
    if count < 2:
        raise ValidationError(f"grid needs at least 2 points, got {count}")
    return np.geomspace(lo, hi, count)


def _as_choi(c) -> ChoiRep:
    if isinstance(c, ChoiRep):
        return c
    if isinstance(c, KrausChannel):
        return choi_from_kraus(c)
    return ChoiRep.from_matrix(c)


def delta_split(
    c_e, c_f, beta: float, zero_tol: float = matkit.DEFAULT_ZERO_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """PSD decomposition C_E - beta*C_F = delta_plus - delta_minus.

    The parts have orthogonal supports, and their channel sums obey
    channel_sum(delta_plus) = channel_sum(delta_minus) + (1-beta)*I for
    trace-preserving inputs.
    """
    ce, cf = _as_choi(c_e), _as_choi(c_f)
    if ce.dim != cf.dim:
        raise ValidationError(
            f"channel dimensions differ: {ce.dim} vs {cf.dim}"
        )
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    return matkit.split_pos_neg(ce.matrix - beta * cf.matrix, zero_tol)


def alpha_bounds(delta_plus, n: int) -> AlphaBounds:
    """Bracket the scaled objective from the positive part alone.

    lower = trace(channel_sum(delta_plus)) / n,
    upper = min(||channel_sum(delta_plus)||, 1); the two coincide (tight)
    exactly when channel_sum(delta_plus) is proportional to the identity.
    """
    dp = matkit.as_matrix(delta_plus)
    if dp.shape != (n * n, n * n):
        raise ValidationError(
            f"delta_plus of shape {dp.shape} does not match dimension {n}"
        )
    t = channel_sum(dp)
    lower = max(float(np.trace(t).real) / n, 0.0)
    upper = min(matkit.spectral_norm(t), 1.0)
    tight = matkit.spectral_norm(t - (float(np.trace(t).real) / n) * np.eye(n)) <= TIGHT_TOL
    return AlphaBounds(lower, upper, tight)


def alpha_to_pq(alpha: float, beta: float) -> TradeoffPoint:
    """Map the scaled objective to mixing probabilities for a fixed beta.

    p = 1 - 1/(alpha+beta) and q = alpha/(alpha+beta).  Combinations with
    alpha + beta < 1 would give p < 0; they are clamped to the feasible
    boundary p = 0, q = 1 - beta (pure containment regime).
    """
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if alpha < -1e-12:
        raise ValidationError(f"alpha must be non-negative, got {alpha}")
    alpha = max(alpha, 0.0)
    s = alpha + beta
    if s < 1.0:
        return TradeoffPoint(0.0, 1.0 - beta)
    return TradeoffPoint(max(1.0 - 1.0 / s, 0.0), alpha / s)


def _beta_samples(
    ce_mat: np.ndarray, cf_mat: np.ndarray, betas, zero_tol: float
) -> list[tuple[float, float, float, bool, np.ndarray]]:
    """Per-beta bound computation; returns (beta, lo, hi, tight, eigenvalues)."""
    n = math.isqrt(ce_mat.shape[0])
    out = []
    for beta in betas:
        try:
            es = matkit.hermitian_eig(ce_mat - beta * cf_mat)
            dplus, _ = matkit.split_from_eigensystem(es, zero_tol)
            lo, hi, tight = alpha_bounds(dplus, n)
        except NumericalError as exc:
            raise NumericalError(
                f"bound computation failed at beta={beta:.9g}: {exc}",
                residual=exc.residual,
            ) from exc
        out.append((float(beta), lo, hi, tight, es.eigenvalues))
    return out


def _count_cusps(eigenvalue_rows: list[np.ndarray]) -> int:
    """Eigenvalue sign changes between adjacent grid points.

    Counted through the spectrum signature (how many eigenvalues clear the
    threshold on each side) rather than per sorted index, which would miss
    crossings that swap sort positions with other eigenvalues.  A change
    registers only when an eigenvalue leaves one side and one arrives on
    the other within the same grid step.
    """
    def signature(row: np.ndarray) -> tuple[int, int]:
        tol = CUSP_EIG_RTOL * float(np.abs(row).max())
        return int(np.sum(row > tol)), int(np.sum(row < -tol))

    count = 0
    sigs = [signature(row) for row in eigenvalue_rows]
    for (pos0, neg0), (pos1, neg1) in zip(sigs, sigs[1:]):
        count += min(max(pos0 - pos1, 0), max(neg1 - neg0, 0))
        count += min(max(neg0 - neg1, 0), max(pos1 - pos0, 0))
    return count


def _assemble(points: list[TradeoffPoint]) -> tuple[TradeoffPoint, ...]:
    """Sort by p; among duplicate p values keep the minimum q."""
    pts = sorted(points)
    out: list[TradeoffPoint] = []
    for pt in pts:
        if out and out[-1].p == pt.p:
            continue
        out.append(pt)
    return tuple(out)


def trace_profile(
    e,
    f,
    beta_grid=None,
    zero_tol: float = matkit.DEFAULT_ZERO_TOL,
    jobs: int = 1,
) -> ProfileCurve:
    """Sweep a beta grid and assemble the lower/upper trade-off curves.

    ``jobs > 1`` fans the independent per-beta samples out to a process
    pool; results are merged in grid order either way.
    """
    ce, cf = _as_choi(e), _as_choi(f)
    if ce.dim != cf.dim:
        raise ValidationError(f"channel dimensions differ: {ce.dim} vs {cf.dim}")
    betas = np.asarray(
        default_beta_grid() if beta_grid is None else beta_grid, dtype=np.float64
    )
    if betas.ndim != 1 or betas.size == 0:
        raise ValidationError("beta grid must be a non-empty 1-d sequence")
    if (betas <= 0).any():
        raise ValidationError("all beta values must be positive")

    if jobs > 1 and betas.size > 1:
        chunks = np.array_split(betas, min(jobs, betas.size))
        work = partial(_beta_samples, ce.matrix, cf.matrix, zero_tol=zero_tol)
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            results = [row for chunk in pool.map(work, chunks) for row in chunk]
    else:
        results = _beta_samples(ce.matrix, cf.matrix, betas, zero_tol)

    samples = []
    lower_pts = []
    upper_pts = []
    eig_rows = []
    for beta, lo, hi, tight, eigvals in results:
        samples.append(BetaSample(beta, lo, hi, tight))
        lower_pts.append(alpha_to_pq(lo, beta))
        upper_pts.append(alpha_to_pq(hi, beta))
        eig_rows.append(eigvals)

    return ProfileCurve(
        samples=tuple(samples),
        lower_points=_assemble(lower_pts),
        upper_points=_assemble(upper_pts),
        upper_hull_points=upper_hull(upper_pts),
        cusp_count=_count_cusps(eig_rows),
    )


def _cross(o: TradeoffPoint, a: TradeoffPoint, b: TradeoffPoint) -> float:
    return (a.p - o.p) * (b.q - o.q) - (a.q - o.q) * (b.p - o.p)


def upper_hull(points: Sequence[TradeoffPoint]) -> tuple[TradeoffPoint, ...]:
    """Lower-left convex boundary of a point set united with (0,1) and (1,0).

    The result is convex, starts at (0, 1), ends at (1, 0), and is
    non-increasing in q as p grows; collinear interior points are dropped.
    """
    if not points:
        raise ValidationError("upper_hull needs at least one point")
    pts = {TradeoffPoint(float(p), float(q)) for p, q in points}
    pts.update({TradeoffPoint(0.0, 1.0), TradeoffPoint(1.0, 0.0)})
    hull: list[TradeoffPoint] = []
    for pt in sorted(pts):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0.0:
            hull.pop()
        hull.append(pt)
    # The x-monotone chain skips vertical edges at the two ends; restore
    # them so the boundary always runs from (0, 1) to (1, 0).
    end = hull.index(TradeoffPoint(1.0, 0.0))
    hull = hull[: end + 1]
    if hull[0] != TradeoffPoint(0.0, 1.0):
        hull.insert(0, TradeoffPoint(0.0, 1.0))
    return tuple(hull)


@dataclass(frozen=True)
class FlipTradeoff:
    """Closed-form trade-off curve between a bit-flip and a phase-flip channel.

    Two linear branches: p = b*(1 - q) while 1 - a - beta + b*beta >= 0,
    and q = a*(1 - p) otherwise.  Used as a regression oracle for computed
    profiles.
    """

    a: float
    b: float

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0 or not 0.0 <= self.b <= 1.0:
            raise ValidationError("flip probabilities must lie in [0, 1]")

    @property
    def degenerate(self) -> bool:
        return self.a in (0.0, 1.0) or self.b in (0.0, 1.0)

    @property
    def branches(self) -> tuple[str, ...]:
        """Branch equations; reduced when a or b sits at 0 or 1."""
        out = []
        if self.a < 1.0 or self.b == 1.0:
            out.append(f"p = {self.b:g}*(1 - q)")
        if self.b < 1.0:
            out.append(f"q = {self.a:g}*(1 - p)")
        return tuple(out)

    def case_one(self, beta: float) -> bool:
        return 1.0 - self.a - beta + self.b * beta >= 0.0

    def alpha_hat(self, beta: float) -> float:
        if beta <= 0:
            raise ValidationError(f"beta must be positive, got {beta}")
        return 1.0 - beta + self.b * beta if self.case_one(beta) else self.a

    def expected_point(self, beta: float) -> TradeoffPoint:
        return alpha_to_pq(self.alpha_hat(beta), beta)

    def branch_one_p(self, q: float) -> float:
        return self.b * (1.0 - q)

    def branch_two_q(self, p: float) -> float:
        return self.a * (1.0 - p)

    def branch_residual(self, p: float, q: float, beta: float) -> float:
        """Distance of (p, q) from the branch equation active at this beta."""
        if self.case_one(beta):
            return abs(p - self.branch_one_p(q))
        return abs(q - self.branch_two_q(p))

    @property
    def cusp(self) -> TradeoffPoint | None:
        """Intersection of the two branch lines; None when a = b = 1."""
        denom = 1.0 - self.a * self.b
        if denom <= 0.0:
            return None
        return TradeoffPoint(
            self.b * (1.0 - self.a) / denom, self.a * (1.0 - self.b) / denom
        )

    def q_of_p(self, p: float) -> float:
        """Minimal q on the curve at abscissa p."""
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {p}")
        if self.b == 0.0:
            return self.branch_two_q(p)
        cusp = self.cusp
        if cusp is not None and p <= cusp.p:
            return 1.0 - p / self.b
        return self.branch_two_q(p)


def analytic_flip_profile(a: float, b: float) -> FlipTradeoff:
    """Closed-form two-branch trade-off description for flip channels."""
    return FlipTradeoff(a=a, b=b)


# ---------------------------------------------------------------------------
# CSV emission (12 significant digits, deterministic byte output)
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x + 0.0:.12g}"


def profile_csv_lines(curve: ProfileCurve, exact_alphas=None) -> list[str]:
    """One row per grid point: beta, bounds, both curve points, tightness."""
    header = "beta,alpha_lo,alpha_hi,p_lo,q_lo,p_hi,q_hi,tight"
    if exact_alphas is not None:
        if len(exact_alphas) != len(curve.samples):
            raise ValidationError(
                "exact_alphas length does not match the sample count"
            )
        header += ",alpha_exact"
    lines = [header]
    for i, s in enumerate(curve.samples):
        lo_pt = alpha_to_pq(s.alpha_lower, s.beta)
        hi_pt = alpha_to_pq(s.alpha_upper, s.beta)
        row = ",".join(
            [
                _fmt(s.beta),
                _fmt(s.alpha_lower),
                _fmt(s.alpha_upper),
                _fmt(lo_pt.p),
                _fmt(lo_pt.q),
                _fmt(hi_pt.p),
                _fmt(hi_pt.q),
                "true" if s.tight else "false",
            ]
        )
        if exact_alphas is not None:
            row += "," + _fmt(exact_alphas[i])
        lines.append(row)
    return lines


def hull_csv_lines(curve: ProfileCurve) -> list[str]:
    lines = ["p,q"]
    lines += [f"{_fmt(pt.p)},{_fmt(pt.q)}" for pt in curve.upper_hull_points]
    return lines
