"""Exact minimisation of the scaled objective at fixed beta.

The reduced problem is: minimise alpha over Hermitian X subject to
delta_plus + X >= 0, delta_minus + X >= 0 and
channel_sum(delta_plus + X) = alpha * I.  Substituting Y = delta_plus + X
turns the constraint set at fixed alpha into the intersection of two PSD
cones (one shifted by delta_plus - delta_minus) and an affine slice.

Two engines share the same contract:

* ``interior`` (default): the full minimisation is assembled as a real
  semidefinite program (complex Hermitian constraints embedded as real
  symmetric blocks) and handed to cvxopt's interior-point solver.  The
  returned certificate is re-verified against the constraint residuals.
* ``projection``: bisection on alpha between the analytic bounds, each
  feasibility test decided by Dykstra-corrected alternating projections
  with closed-form projections onto the three sets.  Near the feasibility
  boundary the sets meet tangentially and the projections converge
  sublinearly, so this engine classifies such points by residual
  stagnation and may stop early with a slightly conservative alpha; it is
  the fallback when cvxopt is unavailable.

Closed-form feasible anchors exist at alpha = ||channel_sum(delta_plus)||
(a rank-one completion) and, when the Choi matrix of the first channel is
supplied, at alpha = 1 (Y = C_E); tight cases short-circuit both engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import matkit
from .channels import ChoiRep, channel_sum, vec
from .disguise import TradeoffPoint, _as_choi, alpha_bounds, alpha_to_pq, delta_split
from .errors import NumericalError, ValidationError

# Scale below which a divisor (alpha or alpha+beta-1) counts as zero when
# recovering harmonizing channels.
RECOVER_TOL = 1e-8
# Max deviation allowed in the reconstructed mixture identity.
MIXTURE_TOL = 1e-7


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and iteration limits for the exact solver.

    ``bisect_tol`` bounds the bracket width of the projection engine and
    the bound-coincidence shortcut; the interior-point engine solves to
    1e-9 regardless.  ``feas_tol`` is the residual below which a point
    counts as a feasibility certificate.
    """

    bisect_tol: float = 1e-6
    feas_tol: float = 1e-8
    max_iter: int = 20000
    warm_start: str = "auto"  # "auto" or "none"
    engine: str = "interior"  # "interior" or "projection"
    plateau_window: int = 500
    plateau_rel: float = 1e-12

    def __post_init__(self):
        if self.warm_start not in ("auto", "none"):
            raise ValidationError(
                f"warm_start must be 'auto' or 'none', got {self.warm_start!r}"
            )
        if self.engine not in ("interior", "projection"):
            raise ValidationError(
                f"engine must be 'interior' or 'projection', got {self.engine!r}"
            )
        if self.bisect_tol <= 0 or self.feas_tol <= 0:
            raise ValidationError("tolerances must be positive")
        if self.max_iter < 1 or self.plateau_window < 1:
            raise ValidationError("iteration limits must be positive")


class FeasibilityResult(NamedTuple):
    feasible: bool
    y: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class ExactSolution:
    """Optimal alpha with its certificate and recovered harmonizing channels."""

    alpha_hat: float
    x: np.ndarray
    choi_f_delta: ChoiRep | None
    choi_e_delta: ChoiRep | None
    residual: float
    iterations: int
    beta: float

    @property
    def point(self) -> TradeoffPoint:
        return alpha_to_pq(self.alpha_hat, self.beta)

    @property
    def p(self) -> float:
        return self.point.p

    @property
    def q(self) -> float:
        return self.point.q


def _affine_project(y: np.ndarray, target: np.ndarray, n: int) -> np.ndarray:
    """Orthogonal projection onto {Y : channel_sum(Y) = target}."""
    gap = target - channel_sum(y)
    return y + np.kron(gap.T, np.eye(n)) / n


def _psd(z: np.ndarray) -> np.ndarray:
    return matkit.project_psd(matkit.hermitize(z))


def _residual(y: np.ndarray, shift: np.ndarray, target: np.ndarray) -> float:
    """Max constraint violation in spectral norm."""
    w1 = np.linalg.eigvalsh(matkit.hermitize(y))
    w2 = np.linalg.eigvalsh(matkit.hermitize(y - shift))
    w3 = np.linalg.eigvalsh(matkit.hermitize(channel_sum(y) - target))
    return max(
        max(-float(w1[0]), 0.0),
        max(-float(w2[0]), 0.0),
        float(np.abs(w3).max()),
    ) + 0.0


def _validate_deltas(delta_plus, delta_minus) -> tuple[np.ndarray, np.ndarray, int]:
    dp = matkit.require_hermitian(delta_plus, "delta_plus")
    dm = matkit.require_hermitian(delta_minus, "delta_minus")
    if dp.shape != dm.shape:
        raise ValidationError(
            f"delta parts have mismatched shapes {dp.shape} vs {dm.shape}"
        )
    n = math.isqrt(dp.shape[0])
    if n * n != dp.shape[0]:
        raise ValidationError("delta matrices must have dimension n^2")
    scale = max(matkit.spectral_norm(dp), matkit.spectral_norm(dm), 1.0)
    for name, m in (("delta_plus", dp), ("delta_minus", dm)):
        w = np.linalg.eigvalsh(matkit.hermitize(m))
        if float(w[0]) < -1e-9 * scale:
            raise ValidationError(f"{name} is not positive semidefinite")
    return dp, dm, n


def feasibility(
    delta_plus,
    delta_minus,
    beta: float,
    alpha: float,
    opts: SolverOptions | None = None,
    start: np.ndarray | None = None,
) -> FeasibilityResult:
    """Decide whether a Hermitian X makes delta_plus + X a scaled channel.

    Runs Dykstra-corrected alternating projections among the PSD cone, the
    shifted cone {Y >= delta_plus - delta_minus} and the affine set
    {channel_sum(Y) = alpha*I}.  Returns the feasible point Y on success.
    Infeasibility is reported when the best residual stagnates above
    feas_tol: either it stops improving outright, or its geometric trend
    cannot reach feas_tol within the iteration budget.  Exceeding the cap
    while the trend is still viable raises NumericalError carrying the
    last residual.
    """
    opts = opts or SolverOptions()
    dp, dm, n = _validate_deltas(delta_plus, delta_minus)
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if alpha < 0:
        raise ValidationError(f"alpha must be non-negative, got {alpha}")

    shift = matkit.hermitize(dp - dm)
    target = alpha * np.eye(n)
    y = matkit.hermitize(start) if start is not None else _affine_project(dp, target, n)
    corr = [np.zeros_like(y) for _ in range(3)]
    best = np.inf
    history: list[float] = []

    for it in range(1, opts.max_iter + 1):
        z = y + corr[0]
        y = _psd(z)
        corr[0] = z - y

        z = y + corr[1]
        y = shift + _psd(z - shift)
        corr[1] = z - y

        z = y + corr[2]
        y = _affine_project(matkit.hermitize(z), target, n)
        corr[2] = z - y

        res = _residual(y, shift, target)
        if res <= opts.feas_tol:
            return FeasibilityResult(True, matkit.hermitize(y), res, it)
        best = min(best, res)
        history.append(best)
        if len(history) > opts.plateau_window:
            # Stagnation: the best residual improved by factor `rate` over
            # the last window; extrapolating that geometric trend, classify
            # the point infeasible when feas_tol is out of reach within the
            # iteration budget.  Near the feasibility boundary the sets
            # meet tangentially and convergence is sublinear, so waiting
            # for the cap would stall the caller instead of resolving it.
            old = history[-opts.plateau_window - 1]
            if old - best < opts.plateau_rel * old:
                return FeasibilityResult(False, matkit.hermitize(y), res, it)
            needed = opts.plateau_window * np.log(opts.feas_tol / best) / np.log(best / old)
            if needed > opts.max_iter - it:
                return FeasibilityResult(False, matkit.hermitize(y), res, it)

    raise NumericalError(
        f"feasibility undecided after {opts.max_iter} iterations "
        f"(alpha={alpha:.9g}, residual={best:.3e})",
        residual=best,
    )


# ---------------------------------------------------------------------------
# Interior-point engine: assemble the real SDP once per dimension.
# ---------------------------------------------------------------------------


def _embed(m: np.ndarray) -> np.ndarray:
    """Complex Hermitian -> real symmetric [[Re, -Im], [Im, Re]]."""
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


@lru_cache(maxsize=8)
def _hermitian_basis(d: int) -> tuple[np.ndarray, ...]:
    """Orthonormal real basis of d x d Hermitian matrices."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[i, i] = 1.0
        basis.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = e[j, i] = inv_sqrt2
            basis.append(e)
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = -1j * inv_sqrt2
            e[j, i] = 1j * inv_sqrt2
            basis.append(e)
    return tuple(basis)


@lru_cache(maxsize=8)
def _sdp_template(n: int):
    """Constant pieces of the SDP for dimension n: (basis, c, G, A, b)."""
    d = n * n
    basis = _hermitian_basis(d)
    nv = len(basis) + 1  # Hermitian Y coordinates plus alpha
    c = np.zeros(nv)
    c[-1] = 1.0

    g_cols = np.zeros(((2 * d) ** 2, nv))
    for k, b in enumerate(basis):
        g_cols[:, k] = -_embed(b).ravel()

    # channel_sum(Y) = alpha*I: one real equation per diagonal entry, two
    # per independent off-diagonal entry.
    a_rows = []
    for i in range(n):
        for j in range(i, n):
            row_re = np.zeros(nv)
            row_im = np.zeros(nv)
            for k, b in enumerate(basis):
                tij = channel_sum(b)[i, j]
                row_re[k] = tij.real
                row_im[k] = tij.imag
            if i == j:
                row_re[-1] = -1.0
                a_rows.append(row_re)
            else:
                a_rows.append(row_re)
                a_rows.append(row_im)
    return basis, c, g_cols, np.array(a_rows), np.zeros(len(a_rows))


def _solve_interior(
    dp: np.ndarray, dm: np.ndarray, n: int
) -> tuple[float, np.ndarray, int]:
    import cvxopt
    import cvxopt.solvers

    d = n * n
    basis, c, g_cols, a_rows, b_eq = _sdp_template(n)
    h1 = np.zeros((2 * d, 2 * d))
    h2 = -_embed(matkit.hermitize(dp - dm))

    saved = dict(cvxopt.solvers.options)
    cvxopt.solvers.options.update(
        {"show_progress": False, "abstol": 1e-8, "reltol": 1e-8, "feastol": 1e-8}
    )
    try:
        sol = None
        # The default KKT factorisation can break down on degenerate
        # instances; retry once with the slower LDL fallback.
        for kktsolver in (None, "ldl"):
            try:
                sol = cvxopt.solvers.sdp(
                    cvxopt.matrix(c),
                    Gs=[cvxopt.matrix(g_cols), cvxopt.matrix(g_cols)],
                    hs=[cvxopt.matrix(h1), cvxopt.matrix(h2)],
                    A=cvxopt.matrix(a_rows),
                    b=cvxopt.matrix(b_eq),
                    kktsolver=kktsolver,
                )
            except (ZeroDivisionError, ArithmeticError, ValueError):
                continue
            if sol["status"] == "optimal":
                break
    finally:
        cvxopt.solvers.options.clear()
        cvxopt.solvers.options.update(saved)

    if sol is None or sol["status"] != "optimal":
        status = "crashed" if sol is None else repr(sol["status"])
        raise NumericalError(f"interior-point solve failed ({status})")
    x = np.asarray(sol["x"]).ravel()
    y = sum(x[k] * basis[k] for k in range(len(basis)))
    return float(x[-1]), matkit.hermitize(y), int(sol["iterations"])


def _anchor(
    dp: np.ndarray,
    dm: np.ndarray,
    beta: float,
    n: int,
    opts: SolverOptions,
    choi_e: np.ndarray | None,
) -> tuple[float, np.ndarray, int]:
    """Certified feasible (alpha, Y) at the upper end of the bracket."""
    t_plus = channel_sum(dp)
    t_norm = matkit.spectral_norm(t_plus)
    if t_norm <= 1.0:
        # Rank-one completion: X = |vec(S)><vec(S)| with S the PSD square
        # root of t_norm*I - channel_sum(delta_plus).
        gap = matkit.hermitize(t_norm * np.eye(n) - t_plus)
        w, v = np.linalg.eigh(gap)
        root = matkit.hermitize((v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T)
        x0 = np.outer(vec(root), vec(root).conj())
        return t_norm, matkit.hermitize(dp + x0), 0
    if choi_e is not None:
        ce = matkit.require_hermitian(choi_e, "choi_e")
        if ce.shape != dp.shape:
            raise ValidationError("choi_e shape does not match the delta parts")
        return 1.0, matkit.hermitize(ce), 0
    res = feasibility(dp, dm, beta, alpha=1.0, opts=opts)
    if not res.feasible:
        raise NumericalError(
            "could not certify the always-feasible point alpha=1",
            residual=res.residual,
        )
    return 1.0, res.y, res.iterations


def _solve_projection(
    dp: np.ndarray,
    dm: np.ndarray,
    beta: float,
    n: int,
    lo: float,
    hi: float,
    y_hi: np.ndarray,
    opts: SolverOptions,
) -> tuple[float, np.ndarray, int]:
    """Bisection between the bounds with projection-based feasibility tests."""
    iters = 0

    def warm(y_from: np.ndarray, alpha_to: float) -> np.ndarray | None:
        if opts.warm_start == "none":
            return None
        return _affine_project(y_from, alpha_to * np.eye(n), n)

    # Probe the lower bound first: tight and containment cases resolve
    # without any bisection.
    res = feasibility(dp, dm, beta, lo, opts, start=warm(y_hi, lo))
    iters += res.iterations
    if res.feasible:
        return lo, res.y, iters
    while hi - lo > opts.bisect_tol:
        mid = 0.5 * (lo + hi)
        res = feasibility(dp, dm, beta, mid, opts, start=warm(y_hi, mid))
        iters += res.iterations
        if res.feasible:
            hi, y_hi = mid, res.y
        else:
            lo = mid
    return hi, y_hi, iters


def solve_alpha(
    delta_plus,
    delta_minus,
    beta: float,
    opts: SolverOptions | None = None,
    choi_e=None,
    choi_f=None,
) -> ExactSolution:
    """Minimise alpha subject to the harmonizing-channel constraints.

    The result always lies between the analytic bounds, and the returned X
    certifies feasibility at alpha_hat: the constraint residual of
    delta_plus + X is re-checked independently of the engine.  ``choi_e``
    and ``choi_f``, when given, provide the exact feasible anchor at
    alpha = 1 and enable verification of the reconstructed mixture
    identity.
    """
    opts = opts or SolverOptions()
    dp, dm, n = _validate_deltas(delta_plus, delta_minus)
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    ce_mat = matkit.as_matrix(choi_e) if choi_e is not None else None

    bounds = alpha_bounds(dp, n)
    alpha_anchor, y_anchor, iters = _anchor(dp, dm, beta, n, opts, ce_mat)
    lo, hi = bounds.lower, min(bounds.upper, alpha_anchor)
    alpha_hat, y = hi, y_anchor

    if hi - lo > opts.bisect_tol:
        if opts.engine == "interior":
            try:
                alpha_hat, y, iters_engine = _solve_interior(dp, dm, n)
                alpha_hat = max(alpha_hat, lo)
            except (ImportError, NumericalError):
                alpha_hat, y, iters_engine = _solve_projection(
                    dp, dm, beta, n, lo, hi, y_anchor, opts
                )
            iters += iters_engine
        else:
            alpha_hat, y, iters_engine = _solve_projection(
                dp, dm, beta, n, lo, hi, y_anchor, opts
            )
            iters += iters_engine

    shift = matkit.hermitize(dp - dm)
    y = _affine_project(matkit.hermitize(y), alpha_hat * np.eye(n), n)
    residual = _residual(y, shift, alpha_hat * np.eye(n))
    if residual > opts.feas_tol:
        # Closed-form repair: lifting Y by tau*I keeps both cone
        # constraints and moves the affine slice to alpha + n*tau, so any
        # small certificate defect trades for an alpha increase of the same
        # order.
        tau = 2.0 * residual
        y = y + tau * np.eye(n * n)
        alpha_hat += n * tau
        residual = _residual(y, shift, alpha_hat * np.eye(n))
        if residual > opts.feas_tol:
            raise NumericalError(
                f"could not certify alpha={alpha_hat:.9g}", residual=residual
            )

    x = matkit.hermitize(y - dp)
    f_delta, e_delta, _, _ = recover_harmonizers(
        y, dp, dm, alpha_hat, beta, choi_e=ce_mat, choi_f=choi_f
    )
    return ExactSolution(
        alpha_hat=alpha_hat,
        x=x,
        choi_f_delta=f_delta,
        choi_e_delta=e_delta,
        residual=residual,
        iterations=iters,
        beta=beta,
    )


def recover_harmonizers(
    y,
    delta_plus,
    delta_minus,
    alpha: float,
    beta: float,
    choi_e=None,
    choi_f=None,
) -> tuple[ChoiRep | None, ChoiRep | None, float, float]:
    """Scale a feasible Y into the two harmonizing Choi matrices.

    choi_f_delta = Y / alpha and choi_e_delta = (Y - delta_plus + delta_minus)
    / (alpha + beta - 1); either is absent when its divisor vanishes.  When
    the original Choi matrices are supplied, the reconstructed mixtures
    (1-p)*C_E + p*C_EDelta and (1-q)*C_F + q*C_FDelta are verified to agree.
    """
    yk = matkit.require_hermitian(y, "y")
    dp = matkit.as_matrix(delta_plus)
    dm = matkit.as_matrix(delta_minus)
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    n = math.isqrt(dp.shape[0])
    p, q = alpha_to_pq(alpha, beta)

    # Channels that are only approximately trace-preserving (e.g. Kraus
    # data quoted at limited precision) shift the channel-sum identity by a
    # measurable skew; the consistency checks below must tolerate it.
    skew = matkit.spectral_norm(
        channel_sum(dp) - channel_sum(dm) - (1.0 - beta) * np.eye(n)
    )
    slack = MIXTURE_TOL + n * skew

    f_delta = ChoiRep.from_matrix(yk / alpha) if alpha > RECOVER_TOL else None

    remainder = matkit.hermitize(yk - dp + dm)
    denom = alpha + beta - 1.0
    if denom > RECOVER_TOL:
        e_delta = ChoiRep.from_matrix(remainder / denom)
    else:
        if matkit.spectral_norm(remainder) > slack:
            raise NumericalError(
                "alpha + beta - 1 vanishes but delta_minus + X does not",
                residual=matkit.spectral_norm(remainder),
            )
        e_delta = None

    if choi_e is not None and choi_f is not None:
        ce = matkit.as_matrix(choi_e)
        cf = matkit.as_matrix(choi_f)
        lhs = (1.0 - p) * ce
        if e_delta is not None:
            lhs = lhs + p * e_delta.matrix
        rhs = (1.0 - q) * cf
        if f_delta is not None:
            rhs = rhs + q * f_delta.matrix
        dev = matkit.spectral_norm(lhs - rhs)
        if dev > slack:
            raise NumericalError(
                f"mixture identity violated by {dev:.3e}", residual=dev
            )
    return f_delta, e_delta, p, q


def solve_pair(
    e,
    f,
    beta: float,
    opts: SolverOptions | None = None,
    zero_tol: float = matkit.DEFAULT_ZERO_TOL,
) -> ExactSolution:
    """Convenience wrapper: split a channel pair at beta and solve exactly."""
    ce, cf = _as_choi(e), _as_choi(f)
    dp, dm = delta_split(ce, cf, beta, zero_tol)
    return solve_alpha(dp, dm, beta, opts=opts, choi_e=ce.matrix, choi_f=cf.matrix)
