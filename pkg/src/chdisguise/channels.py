"""Channel representations and fixtures.

A channel acting on n-dimensional states is held either as a list of n x n
Kraus operators (:class:`KrausChannel`) or as its n^2 x n^2 Choi matrix
(:class:`ChoiRep`).  The Choi block layout puts the input index on the
first tensor factor: block (i, j) of the Choi matrix is the channel output
on |i><j|.  Vectorisation stacks matrix columns, so the Choi matrix of a
Kraus set {K_m} is the sum of outer products of the column-stacked K_m.

The channel-sum map ``channel_sum`` sends a Choi matrix C to the n x n
matrix Tr_2(C)^t; it equals the identity exactly when the underlying map
is trace-preserving, and it is linear and trace-preserving itself
(trace(C) == trace(channel_sum(C))).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import matkit
from .errors import NumericalError, ValidationError

# Per-entry tolerance for the trace-preservation identity sum K†K = I.
TP_ATOL = 1e-9
# PSD tolerance on Choi eigenvalues for the complete-positivity flag.
CP_ATOL = 1e-10
# Default trace-preservation tolerance when loading channel JSON.
JSON_TP_TOL = 1e-6

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation of a matrix."""
    return np.asarray(m, dtype=np.complex128).flatten(order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`vec` for an n x n matrix."""
    return np.asarray(v, dtype=np.complex128).reshape((n, n), order="F")


@dataclass(frozen=True)
class KrausChannel:
    """A channel given by a list of square Kraus operators of equal dimension."""

    dim: int
    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.dim < 2:
            raise ValidationError(f"channel dimension must be >= 2, got {self.dim}")
        if not self.kraus_ops:
            raise ValidationError("a channel needs at least one Kraus operator")
        ops = []
        for k in self.kraus_ops:
            a = matkit.as_matrix(k).copy()
            if a.shape != (self.dim, self.dim):
                raise ValidationError(
                    f"Kraus operator of shape {a.shape} does not match dim {self.dim}"
                )
            a.setflags(write=False)
            ops.append(a)
        object.__setattr__(self, "kraus_ops", tuple(ops))

    @classmethod
    def from_ops(cls, ops) -> "KrausChannel":
        ops = [matkit.as_matrix(k) for k in ops]
        if not ops:
            raise ValidationError("a channel needs at least one Kraus operator")
        return cls(dim=ops[0].shape[0], kraus_ops=tuple(ops))

    def kraus_sum(self) -> np.ndarray:
        """Sum of K†K over all Kraus operators (identity for TP channels)."""
        return sum(k.conj().T @ k for k in self.kraus_ops)

    def is_trace_preserving(self, atol: float = TP_ATOL) -> bool:
        dev = np.abs(self.kraus_sum() - np.eye(self.dim)).max()
        return float(dev) <= atol


@dataclass(frozen=True)
class ChoiRep:
    """Choi matrix of a linear map together with its CP/TP status flags."""

    dim: int
    matrix: np.ndarray
    cp: bool
    tp: bool

    @classmethod
    def from_matrix(cls, m) -> "ChoiRep":
        a = matkit.as_matrix(m)
        n2 = a.shape[0]
        n = math.isqrt(n2)
        if a.shape[0] != a.shape[1] or n * n != n2 or n < 1:
            raise ValidationError(
                f"Choi matrix must be square of dimension n^2, got shape {a.shape}"
            )
        if not matkit.is_hermitian(a):
            raise ValidationError("Choi matrix must be Hermitian")
        w = np.linalg.eigvalsh(matkit.hermitize(a))
        cp = bool(w[0] >= -CP_ATOL)
        tp = bool(np.abs(channel_sum(a) - np.eye(n)).max() <= TP_ATOL)
        a = a.copy()
        a.setflags(write=False)
        return cls(dim=n, matrix=a, cp=cp, tp=tp)


def choi_from_kraus(ch: KrausChannel) -> ChoiRep:
    """Choi matrix of a Kraus channel (sum of vec outer products)."""
    if not isinstance(ch, KrausChannel):
        ch = KrausChannel.from_ops(ch)
    n = ch.dim
    c = np.zeros((n * n, n * n), dtype=np.complex128)
    for k in ch.kraus_ops:
        kv = vec(k)
        c += np.outer(kv, kv.conj())
    return ChoiRep.from_matrix(matkit.hermitize(c))


def kraus_from_choi(c, zero_tol: float = matkit.DEFAULT_ZERO_TOL) -> KrausChannel:
    """Recover a Kraus set from a CP Choi matrix.

    One operator per eigenvalue above zero_tol * ||C||; each is
    sqrt(lambda) times the unvectorised eigenvector, so the count equals
    the numerical rank of the Choi matrix.
    """
    if isinstance(c, ChoiRep):
        if not c.cp:
            raise ValidationError("Choi matrix is not completely positive")
        mat, n = c.matrix, c.dim
    else:
        mat = matkit.require_hermitian(c, "Choi matrix")
        n = math.isqrt(mat.shape[0])
        if n * n != mat.shape[0]:
            raise ValidationError("Choi matrix dimension is not a perfect square")
    es = matkit.hermitian_eig(mat)
    scale = float(np.abs(es.eigenvalues).max()) if es.eigenvalues.size else 0.0
    if es.eigenvalues.size and float(es.eigenvalues[-1]) < -max(CP_ATOL, CP_ATOL * scale):
        raise ValidationError("Choi matrix is not positive semidefinite")
    ops = []
    for lam, v in zip(es.eigenvalues, es.eigenvectors.T):
        if lam > zero_tol * scale and lam > 0.0:
            ops.append(np.sqrt(lam) * unvec(v, n))
    if not ops:
        # Rank-0 map; represent as the zero operator so the channel object is valid.
        ops.append(np.zeros((n, n), dtype=np.complex128))
    return KrausChannel(dim=n, kraus_ops=tuple(ops))


def channel_sum(c) -> np.ndarray:
    """Transposed partial trace over the output system of a Choi-like matrix.

    Accepts a ChoiRep or any square matrix of dimension n^2; linear in its
    argument.
    """
    if isinstance(c, ChoiRep):
        mat = c.matrix
    else:
        mat = matkit.as_matrix(c)
    n2 = mat.shape[0]
    if mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {mat.shape}")
    n = math.isqrt(n2)
    if n * n != n2 or n < 1:
        raise ValidationError(f"matrix dimension {n2} is not a perfect square")
    return np.trace(mat.reshape(n, n, n, n), axis1=1, axis2=3).T.copy()


def apply(ch: KrausChannel, rho) -> np.ndarray:
    """Channel action sum_m K_m rho K_m†."""
    rho = matkit.as_matrix(rho)
    if rho.shape != (ch.dim, ch.dim):
        raise ValidationError(
            f"state of shape {rho.shape} does not match channel dim {ch.dim}"
        )
    out = np.zeros_like(rho)
    for k in ch.kraus_ops:
        out += k @ rho @ k.conj().T
    return out


def mix(ch_a: KrausChannel, ch_b: KrausChannel, prob: float) -> KrausChannel:
    """Probabilistic mixture (1-prob)*A + prob*B as a single Kraus channel."""
    if ch_a.dim != ch_b.dim:
        raise ValidationError("cannot mix channels of different dimensions")
    if not 0.0 <= prob <= 1.0:
        raise ValidationError(f"mixing probability must lie in [0, 1], got {prob}")
    ops = [np.sqrt(1.0 - prob) * k for k in ch_a.kraus_ops]
    ops += [np.sqrt(prob) * k for k in ch_b.kraus_ops]
    return KrausChannel(dim=ch_a.dim, kraus_ops=tuple(ops))


def compose(ch2: KrausChannel, ch1: KrausChannel) -> KrausChannel:
    """Composition ch2 after ch1, with Kraus set {B_j A_i}."""
    if ch1.dim != ch2.dim:
        raise ValidationError("cannot compose channels of different dimensions")
    ops = [b @ a for b in ch2.kraus_ops for a in ch1.kraus_ops]
    return KrausChannel(dim=ch1.dim, kraus_ops=tuple(ops))


def random_channel(dim: int, num_kraus: int, seed: int) -> KrausChannel:
    """Seeded random trace-preserving channel.

    Draws a (num_kraus*dim) x dim complex Gaussian matrix from a seeded
    PCG64 generator, orthonormalises its columns by modified Gram-Schmidt
    (producing an exact isometry), and slices the isometry into stacked
    Kraus blocks.  Trace preservation holds by construction and the output
    is bitwise reproducible for a fixed (dim, num_kraus, seed).
    """
    if dim < 2:
        raise ValidationError(f"channel dimension must be >= 2, got {dim}")
    if not 1 <= num_kraus <= dim * dim:
        raise ValidationError(
            f"number of Kraus operators must lie in [1, dim^2], got {num_kraus}"
        )
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((num_kraus * dim, dim)) + 1j * rng.standard_normal(
        (num_kraus * dim, dim)
    )
    for j in range(dim):
        col = g[:, j]
        for i in range(j):
            col = col - (g[:, i].conj() @ col) * g[:, i]
        nrm = np.linalg.norm(col)
        if nrm < 1e-12:
            raise NumericalError("degenerate Gaussian draw during orthonormalisation")
        g[:, j] = col / nrm
    ops = tuple(g[i * dim : (i + 1) * dim, :].copy() for i in range(num_kraus))
    return KrausChannel(dim=dim, kraus_ops=ops)


def _flip_channel(param: float, flip_op: np.ndarray, name: str) -> KrausChannel:
    if not 0.0 <= param <= 1.0:
        raise ValidationError(f"{name} probability must lie in [0, 1], got {param}")
    ops = (np.sqrt(1.0 - param) * PAULI_I, np.sqrt(param) * flip_op)
    return KrausChannel(dim=2, kraus_ops=ops)


def bit_flip(a: float) -> KrausChannel:
    """Qubit bit-flip channel: applies X with probability a."""
    return _flip_channel(a, PAULI_X, "bit-flip")


def phase_flip(b: float) -> KrausChannel:
    """Qubit phase-flip channel: applies Z with probability b."""
    return _flip_channel(b, PAULI_Z, "phase-flip")


def xz_flip(c: float) -> KrausChannel:
    """Qubit channel applying XZ with probability c."""
    return _flip_channel(c, PAULI_X @ PAULI_Z, "xz-flip")


# Fixed regression pair: two published random qubit channels with four
# Kraus operators each, quoted verbatim at six significant figures.
_APPENDIX_B_E = (
    [[-0.504828, -0.331944], [-0.0133105, 0.295026]],
    [[0.419485, 0.158018], [0.330761, 0.0616354]],
    [[0.464696, 0.251826], [-0.312786, 0.165248]],
    [[0.160149, -0.346665], [-0.346665, 0.750403]],
)
_APPENDIX_B_F = (
    [[-0.20917, -0.248828], [0.382771, -0.451866]],
    [[-0.62412, -0.425856], [0.286902, -0.0613943]],
    [[0.216184, -0.422341], [-0.403389, 0.451605]],
    [[0.236514, 0.269256], [0.269256, 0.306531]],
)


def appendix_b_pair() -> tuple[KrausChannel, KrausChannel]:
    """The fixed random qubit channel pair used as a regression fixture."""
    e = KrausChannel.from_ops([np.array(m, dtype=np.complex128) for m in _APPENDIX_B_E])
    f = KrausChannel.from_ops([np.array(m, dtype=np.complex128) for m in _APPENDIX_B_F])
    return e, f


# ---------------------------------------------------------------------------
# JSON wire format
#
# {"dim": 2, "kraus": [{"re": [[..], [..]], "im": [[..], [..]]}, ...]}
# Matrices are row-major lists of decimal floats.  Serialisation is
# canonical: sorted keys, floats printed with 17 significant digits so the
# output is byte-stable and round-trip exact.
# ---------------------------------------------------------------------------


def channel_to_dict(ch: KrausChannel) -> dict:
    return {
        "dim": ch.dim,
        "kraus": [
            {"re": k.real.tolist(), "im": k.imag.tolist()} for k in ch.kraus_ops
        ],
    }


def channel_from_dict(data, tp_tol: float = JSON_TP_TOL) -> KrausChannel:
    """Build a channel from its JSON dict; enforces trace preservation on load."""
    if not isinstance(data, dict):
        raise ValidationError("channel JSON must be an object")
    try:
        dim = int(data["dim"])
        kraus = data["kraus"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed channel JSON: {exc}") from exc
    if not isinstance(kraus, list) or not kraus:
        raise ValidationError("channel JSON needs a non-empty 'kraus' list")
    ops = []
    for entry in kraus:
        try:
            re = np.asarray(entry["re"], dtype=np.float64)
            im = np.asarray(entry["im"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed Kraus entry: {exc}") from exc
        if re.shape != (dim, dim) or im.shape != (dim, dim):
            raise ValidationError(
                f"Kraus entry shapes {re.shape}/{im.shape} do not match dim {dim}"
            )
        ops.append(re + 1j * im)
    ch = KrausChannel(dim=dim, kraus_ops=tuple(ops))
    if tp_tol is not None and not ch.is_trace_preserving(atol=tp_tol):
        dev = float(np.abs(ch.kraus_sum() - np.eye(dim)).max())
        raise ValidationError(
            f"channel is not trace-preserving within {tp_tol:g} (deviation {dev:.3e})"
        )
    return ch


def _canonical(obj):
    if isinstance(obj, float):
        # adding 0.0 folds negative zero, which would not survive a round trip
        return f"{obj + 0.0:.17g}"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return repr(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canonical(x) for x in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_canonical(v)}" for k, v in items) + "}"
    if obj is None:
        return "null"
    raise ValidationError(f"cannot serialise object of type {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON with sorted keys and round-trip-safe floats."""
    return _canonical(obj)


def dumps_channel(ch: KrausChannel) -> str:
    return canonical_json(channel_to_dict(ch)) + "\n"


def loads_channel(text: str, tp_tol: float = JSON_TP_TOL) -> KrausChannel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc
    return channel_from_dict(data, tp_tol=tp_tol)
