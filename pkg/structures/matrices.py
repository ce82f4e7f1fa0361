"""
Structured matrix storage and algebra.

Indices are 0-based in code. The docstrings quote the 1-based formulas where
that reads more naturally (i + j ranges over 2..2n for the Hankel part).

Dense matrices are plain complex numpy arrays. ``BandMatrix`` stores its
diagonals in the layout ``scipy.linalg.solve_banded`` expects, i.e.
``data[d + i - j, j] == A[i, j]``, so the same storage feeds the banded solver.
"""

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray

from common.errors import InvalidArgumentError, NumericOverflowError


logger = logging.getLogger(__name__)

DenseMatrix = NDArray[np.complex128]


def _as_complex(value, name: str) -> complex:
    try:
        z = complex(value)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"{name} is not a number: {value!r}") from e
    if not np.isfinite(z):
        raise InvalidArgumentError(f"{name} must be finite, got {z}")
    return z


def _as_dimension(n, name: str = "n") -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class TridiagSpec:
    """tridiag(a, b, c) of order n: a on the subdiagonal, b on the diagonal, c above."""

    a: complex
    b: complex
    c: complex
    n: int

    def __post_init__(self):
        object.__setattr__(self, "a", _as_complex(self.a, "a"))
        object.__setattr__(self, "b", _as_complex(self.b, "b"))
        object.__setattr__(self, "c", _as_complex(self.c, "c"))
        object.__setattr__(self, "n", _as_dimension(self.n))

    def symmetric(self) -> bool:
        return self.a == self.c

    def scaled(self, factor) -> "TridiagSpec":
        factor = complex(factor)
        return TridiagSpec(factor * self.a, factor * self.b, factor * self.c, self.n)

    def to_dense(self) -> DenseMatrix:
        m = np.zeros((self.n, self.n), dtype=np.complex128)
        idx = np.arange(self.n)
        m[idx, idx] = self.b
        m[idx[1:], idx[:-1]] = self.a
        m[idx[:-1], idx[1:]] = self.c
        return m


@dataclass(frozen=True)
class BandMatrix:
    """n x n matrix with half-bandwidth d; entries with |i - j| > d are zero."""

    n: int
    d: int
    data: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self):
        n = _as_dimension(self.n)
        if isinstance(self.d, bool) or not isinstance(self.d, (int, np.integer)) or not 0 <= self.d <= n - 1:
            raise InvalidArgumentError(f"half-bandwidth d must lie in [0, {n - 1}], got {self.d!r}")
        data = np.array(self.data, dtype=np.complex128)
        if data.shape != (2 * self.d + 1, n):
            raise InvalidArgumentError(
                f"band storage must have shape {(2 * self.d + 1, n)}, got {data.shape}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "data", data)

    @classmethod
    def from_dense(cls, m: DenseMatrix, d: int) -> "BandMatrix":
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"band storage needs a square matrix, got shape {m.shape}")
        n = m.shape[0]
        if not 0 <= d <= n - 1:
            raise InvalidArgumentError(f"half-bandwidth d must lie in [0, {n - 1}], got {d}")
        data = np.zeros((2 * d + 1, n), dtype=np.complex128)
        for offset in range(-d, d + 1):
            i, j = _offset_indices(n, offset)
            data[d + offset, j] = m[i, j]
        return cls(n=n, d=d, data=data)

    @classmethod
    def from_tridiag(cls, spec: TridiagSpec) -> "BandMatrix":
        """Band storage of tridiag(a, b, c) without a dense intermediate."""
        if spec.n == 1:
            return cls(n=1, d=0, data=[[spec.b]])
        data = np.zeros((3, spec.n), dtype=np.complex128)
        data[0, 1:] = spec.c
        data[1] = spec.b
        data[2, :-1] = spec.a
        return cls(n=spec.n, d=1, data=data)

    def entry(self, i: int, j: int) -> complex:
        if abs(i - j) > self.d:
            return 0j
        return complex(self.data[self.d + i - j, j])

    def to_dense(self) -> DenseMatrix:
        m = np.zeros((self.n, self.n), dtype=np.complex128)
        for offset in range(-self.d, self.d + 1):
            i, j = _offset_indices(self.n, offset)
            m[i, j] = self.data[self.d + offset, j]
        return m

    def truncate(self, d: int) -> "BandMatrix":
        if not 0 <= d <= self.d:
            raise InvalidArgumentError(f"cannot truncate a band of width {self.d} to {d}")
        return BandMatrix(n=self.n, d=d, data=self.data[self.d - d:self.d + d + 1])

    def matmat(self, x: NDArray) -> NDArray[np.complex128]:
        """Product with a vector (n,) or a matrix (n, m) in O(n d m)."""
        x = np.asarray(x)
        if x.shape[0] != self.n:
            raise InvalidArgumentError(f"operand has {x.shape[0]} rows, band matrix has {self.n}")
        y = np.zeros(x.shape, dtype=np.result_type(x.dtype, np.complex128))
        column = (slice(None),) + (None,) * (x.ndim - 1)
        for offset in range(-self.d, self.d + 1):
            diagonal = self.data[self.d + offset]
            if offset >= 0:
                # i = j + offset for j = 0..n-1-offset
                y[offset:] += diagonal[:self.n - offset][column] * x[:self.n - offset]
            else:
                y[:self.n + offset] += diagonal[-offset:][column] * x[-offset:]
        return y

    def __matmul__(self, x):
        return self.matmat(x)

    def inf_norm(self) -> float:
        magnitudes = BandMatrix(n=self.n, d=self.d, data=np.abs(self.data))
        return float(np.max(magnitudes.matmat(np.ones(self.n)).real))


def _offset_indices(n: int, offset: int):
    """Row and column indices of the diagonal i - j = offset."""
    if offset >= 0:
        j = np.arange(n - offset)
    else:
        j = np.arange(-offset, n)
    return j + offset, j


@dataclass(frozen=True)
class ToeHankExp:
    """
    Compact form of the Bessel approximation of exp(tridiag(a, b, c)).

    Entry (i, j), 1-based, equals
    ``diag_factor * ratio**(i - j) * (u[|i - j|] - h(i + j))`` where
    ``u[k] = I_k(2z)`` and ``h(s) = I_s(2z)`` for s <= n + 1, reflected to
    ``I_{2n+2-s}(2z)`` beyond. ``v`` holds I_{n+1}(2z), ..., I_2(2z).
    """

    u: NDArray[np.complex128] = field(repr=False)
    v: NDArray[np.complex128] = field(repr=False)
    diag_factor: complex
    ratio: complex
    n: int

    def __post_init__(self):
        n = _as_dimension(self.n)
        u = np.array(self.u, dtype=np.complex128)
        v = np.array(self.v, dtype=np.complex128)
        if u.shape != (n,) or v.shape != (n,):
            raise InvalidArgumentError(
                f"generators must both have length {n}, got {u.shape} and {v.shape}"
            )
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "diag_factor", complex(self.diag_factor))
        object.__setattr__(self, "ratio", complex(self.ratio))

    def hankel_table(self) -> NDArray[np.complex128]:
        """h(s) for 1-based index sums s = 0..2n (entries 0 and 1 unused)."""
        n = self.n
        ascending = self.v[::-1]  # I_2 .. I_{n+1}
        table = np.zeros(2 * n + 1, dtype=np.complex128)
        table[2:n + 2] = ascending
        table[n + 2:] = ascending[::-1][1:]
        return table

    def entries(self, i: NDArray[np.int_], j: NDArray[np.int_]) -> NDArray[np.complex128]:
        """Vectorised entries at 0-based positions (i, j)."""
        i = np.asarray(i)
        j = np.asarray(j)
        w = self.u[np.abs(i - j)] - self.hankel_table()[i + j + 2]
        if self.ratio != 1:
            scaled = np.zeros_like(w)
            nonzero = w != 0
            with np.errstate(over='ignore', under='ignore', invalid='ignore'):
                scaled[nonzero] = np.exp(
                    (i - j)[nonzero] * np.log(self.ratio) + np.log(w[nonzero])
                )
            w = scaled
        with np.errstate(over='ignore', under='ignore', invalid='ignore'):
            out = self.diag_factor * w
        if not np.all(np.isfinite(out)):
            raise NumericOverflowError(
                f"materialised entries overflow (diag_factor={self.diag_factor:.3e}, "
                f"ratio={self.ratio}, n={self.n})"
            )
        return out

    def entry(self, i: int, j: int) -> complex:
        return complex(self.entries(np.array([i]), np.array([j]))[0])


def materialize(rep: ToeHankExp, mode: str = "dense", d: int = None) -> Union[DenseMatrix, BandMatrix]:
    """
    Expand a ToeHankExp to a dense matrix (O(n^2)) or a band matrix (O(n d)).

    Args:
        rep: Compact exponential.
        mode: ``"dense"`` or ``"band"``.
        d: Half-bandwidth for band mode, 0 <= d <= n - 1.
    """
    n = rep.n
    if mode == "dense":
        i, j = np.indices((n, n))
        return rep.entries(i, j)
    if mode != "band":
        raise InvalidArgumentError(f"materialisation mode must be 'dense' or 'band', got {mode!r}")
    if d is None or isinstance(d, bool) or not isinstance(d, (int, np.integer)) or not 0 <= d <= n - 1:
        raise InvalidArgumentError(f"band mode needs 0 <= d <= {n - 1}, got {d!r}")

    data = np.zeros((2 * d + 1, n), dtype=np.complex128)
    for offset in range(-d, d + 1):
        i, j = _offset_indices(n, offset)
        data[d + offset, j] = rep.entries(i, j)
    return BandMatrix(n=n, d=int(d), data=data)


def identity(n: int) -> DenseMatrix:
    return np.eye(_as_dimension(n), dtype=np.complex128)


def anti_identity(n: int) -> DenseMatrix:
    """The backward identity J with ones on the anti-diagonal."""
    return identity(n)[::-1].copy()


def backward_identity_apply(side: str, m: DenseMatrix) -> DenseMatrix:
    """J @ m (``side="left"``, rows reversed) or m @ J (``"right"``, columns reversed)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"backward identity needs a square matrix, got shape {m.shape}")
    if side == "left":
        return m[::-1, :].copy()
    if side == "right":
        return m[:, ::-1].copy()
    raise InvalidArgumentError(f"side must be 'left' or 'right', got {side!r}")


Operator = Union[DenseMatrix, BandMatrix]


def _order(op: Operator, name: str) -> int:
    if isinstance(op, BandMatrix):
        return op.n
    shape = np.shape(op)
    if len(shape) != 2 or shape[0] != shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got shape {shape}")
    return shape[0]


def _apply(op: Operator, x: NDArray) -> NDArray:
    if isinstance(op, BandMatrix):
        return op.matmat(x)
    return np.asarray(op) @ x


def kron_matvec(k: Operator, g: Operator, u: NDArray) -> NDArray[np.complex128]:
    """
    (K kron G) u without forming the Kronecker product.

    u is read as p contiguous blocks of length q (the fast index belongs to G):
    block i of the result is sum_j K[i, j] G u_j. Cost O(p q (p + q)) for dense
    factors, O(p q (d_K + d_G)) for band factors.
    """
    p = _order(k, "K")
    q = _order(g, "G")
    u = np.asarray(u)
    if u.ndim != 1 or u.shape[0] != p * q:
        raise InvalidArgumentError(f"vector length must be {p}*{q}={p * q}, got {u.shape}")
    blocks = u.reshape(p, q)
    mixed = _apply(g, blocks.T).T
    return _apply(k, mixed).reshape(p * q)
