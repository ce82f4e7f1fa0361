"""
Exponentials of block tridiagonal Toeplitz matrices.

Q = H_n kron N + I_n kron M, with H_n = tridiag(z, 0, z), is block diagonalised
by the same sine basis as the scalar case, so block (i, j) of exp(Q) is
approximated by Phi_{|i-j|} - Phi_{i+j} where

    Phi_k = (1/pi) int_0^pi exp(M + 2 z N cos t) cos(k t) dt

is a matrix-valued analogue of I_k(2z). All Phi_k share one trapezoidal grid:
each node costs one small dense exponential and every order is a weighted
sum of the node values.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from common.errors import InvalidArgumentError, ToeplitzExpmError
from exponentials.spectral_oracle import expm_dense_small, similarity_scale
from exponentials.toeplitz_bessel import expm_tridiag
from structures.matrices import (BandMatrix, DenseMatrix, TridiagSpec, _as_complex,
                                 _as_dimension, kron_matvec)


logger = logging.getLogger(__name__)

DEFAULT_T1_START = 16
DEFAULT_T1_MAX = 512
DEFAULT_PHI_TOL = 1e-12
DEFAULT_T2_TOL = 1e-12


@dataclass(frozen=True)
class BlockToeHankExp:
    """
    Compact exponential of a block tridiagonal Toeplitz matrix.

    ``phis[k]`` holds Phi_k for k = 0..n+1, with orders above ``t2`` already
    replaced by Phi_{k-2}. ``stabilization_residual`` is ||Phi_t2 - Phi_{t2-2}||_inf
    as computed before the replacement.
    """

    m: int
    n: int
    phis: NDArray[np.complex128] = field(repr=False)
    t1: int
    t2: int
    ratio: complex = 1.0
    stabilization_residual: float = 0.0

    def __post_init__(self):
        phis = np.array(self.phis, dtype=np.complex128)
        if phis.shape != (self.n + 2, self.m, self.m):
            raise InvalidArgumentError(
                f"expected {self.n + 2} blocks of size {self.m}, got shape {phis.shape}"
            )
        if not np.all(np.isfinite(phis)):
            raise InvalidArgumentError("block generators have non-finite entries")
        phis.setflags(write=False)
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "ratio", complex(self.ratio))

    def _hankel_order(self, i: int, j: int) -> int:
        s = i + j + 2
        return s if s <= self.n + 1 else 2 * self.n + 2 - s

    def block(self, i: int, j: int) -> DenseMatrix:
        """Block (i, j), 0-based."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise InvalidArgumentError(f"block index ({i}, {j}) outside a {self.n}x{self.n} grid")
        value = self.phis[abs(i - j)] - self.phis[self._hankel_order(i, j)]
        if self.ratio != 1:
            value = value * np.exp((i - j) * np.log(self.ratio))
        return value

    def materialize(self, d: Optional[int] = None) -> DenseMatrix:
        """Dense (n m) x (n m) matrix; blocks with |i - j| > d are zero when d is given."""
        if d is not None and not 0 <= d <= self.n - 1:
            raise InvalidArgumentError(f"block half-bandwidth must lie in [0, {self.n - 1}], got {d}")
        m = self.m
        out = np.zeros((self.n * m, self.n * m), dtype=np.complex128)
        scale = similarity_scale(self.ratio, self.n) if self.ratio != 1 else None
        for i in range(self.n):
            for j in range(self.n):
                if d is not None and abs(i - j) > d:
                    continue
                value = self.phis[abs(i - j)] - self.phis[self._hankel_order(i, j)]
                if scale is not None:
                    value = scale[i, j] * value
                out[i * m:(i + 1) * m, j * m:(j + 1) * m] = value
        return out


def _validated_blocks(m_block, n_block) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    m_block = np.asarray(m_block)
    n_block = np.asarray(n_block)
    for name, block in (("M", m_block), ("N", n_block)):
        if block.ndim != 2 or block.shape[0] != block.shape[1]:
            raise InvalidArgumentError(f"{name} must be square, got shape {block.shape}")
        if not np.all(np.isfinite(block)):
            raise InvalidArgumentError(f"{name} has non-finite entries")
    if m_block.shape != n_block.shape:
        raise InvalidArgumentError(f"M and N must have equal size, got {m_block.shape} and {n_block.shape}")
    return m_block.astype(np.complex128), n_block.astype(np.complex128)


def _as_points(t1, name: str = "t1") -> int:
    if isinstance(t1, bool) or not isinstance(t1, (int, np.integer)) or t1 < 4:
        raise InvalidArgumentError(f"{name} must be an integer >= 4, got {t1!r}")
    return int(t1)


def _node_values(m_block, n_block, z: complex, t1: int, odd_only: bool = False) -> NDArray[np.complex128]:
    """exp(M + 2 z N cos(pi j / t1)) for j = 0..t1 (or the odd j only)."""
    nodes = range(1, t1, 2) if odd_only else range(t1 + 1)
    return np.array([expm_dense_small(m_block + 2.0 * z * math.cos(math.pi * j / t1) * n_block)
                     for j in nodes])


def _refine(coarse: NDArray[np.complex128], m_block, n_block, z: complex, t1: int) -> NDArray[np.complex128]:
    """Node values on 2 t1 intervals, reusing the t1-interval values at even nodes."""
    fine = np.empty((2 * t1 + 1,) + coarse.shape[1:], dtype=np.complex128)
    fine[0::2] = coarse
    fine[1::2] = _node_values(m_block, n_block, z, 2 * t1, odd_only=True)
    return fine


def _project(nodes: NDArray[np.complex128], kmax: int) -> NDArray[np.complex128]:
    """Trapezoidal Phi_0..Phi_kmax from node values at t_j = pi j / t1, j = 0..t1."""
    t1 = nodes.shape[0] - 1
    theta = np.pi * np.arange(t1 + 1) / t1
    weights = np.full(t1 + 1, 2.0)
    weights[[0, -1]] = 1.0
    table = weights * np.cos(np.outer(np.arange(kmax + 1), theta)) / (2 * t1)
    return np.einsum('kj,jab->kab', table, nodes)


def _block_norms(blocks: NDArray[np.complex128]) -> NDArray[np.float64]:
    return np.max(np.sum(np.abs(blocks), axis=-1), axis=-1)


def phi_sequence(m_block, n_block, z, kmax: int, t1: Optional[int] = None, *,
                 t1_start: int = DEFAULT_T1_START, t1_max: int = DEFAULT_T1_MAX,
                 tol: float = DEFAULT_PHI_TOL) -> Tuple[NDArray[np.complex128], int]:
    """
    Phi_0..Phi_kmax on one shared grid.

    With ``t1`` given the grid is fixed. Otherwise the interval count doubles
    from ``t1_start`` until successive tables differ by at most
    ``tol * max(1, max_k ||Phi_k||_inf)``.

    Returns:
        (blocks of shape (kmax + 1, m, m), interval count used)
    """
    m_block, n_block = _validated_blocks(m_block, n_block)
    z = _as_complex(z, "z")
    if isinstance(kmax, bool) or not isinstance(kmax, (int, np.integer)) or kmax < 0:
        raise InvalidArgumentError(f"kmax must be a nonnegative integer, got {kmax!r}")

    if t1 is not None:
        t1 = _as_points(t1)
        return _project(_node_values(m_block, n_block, z, t1), kmax), t1

    points = _as_points(t1_start, "t1_start")
    nodes = _node_values(m_block, n_block, z, points)
    previous = _project(nodes, kmax)
    while 2 * points <= t1_max:
        nodes = _refine(nodes, m_block, n_block, z, points)
        points *= 2
        current = _project(nodes, kmax)
        # orders beyond the coarse grid's resolution are aliased there
        compared = min(kmax, points // 2)
        change = float(np.max(_block_norms(current[:compared + 1] - previous[:compared + 1])))
        scale = max(1.0, float(np.max(_block_norms(current))))
        if change <= tol * scale:
            logger.debug(f"Phi quadrature settled at t1={points} (change {change:.3e})")
            return current, points
        previous = current
    raise ToeplitzExpmError(
        f"Phi_k quadrature did not settle within t1_max={t1_max} "
        f"(||M||_inf + 2|z| ||N||_inf = "
        f"{float(_block_norms(m_block[None])[0] + 2 * abs(z) * _block_norms(n_block[None])[0]):.3f})"
    )


def phi_k(m_block, n_block, z, k: int, t1: int) -> DenseMatrix:
    """Phi_k(M, 2 z N) with a fixed grid of t1 intervals on [0, pi]."""
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
        raise InvalidArgumentError(f"order k must be a nonnegative integer, got {k!r}")
    return phi_sequence(m_block, n_block, z, int(k), t1=t1)[0][k]


def _select_t2(phis: NDArray[np.complex128], tol: float) -> Tuple[int, float]:
    kmax = phis.shape[0] - 1
    scale = max(1.0, float(np.max(_block_norms(phis))))
    residuals = _block_norms(phis[2:] - phis[:-2]) if kmax >= 2 else np.zeros(0)
    hits = np.nonzero(residuals < tol * scale)[0]
    if hits.size:
        t2 = int(hits[0]) + 2
    else:
        t2 = kmax
        logger.debug(f"Phi_k never stabilised below {tol:.1e}; t2 = {t2}")
    return t2, float(residuals[t2 - 2]) if t2 >= 2 else 0.0


def expm_block_tridiag(m_block, n_block, z, n: int, t1: Optional[int] = None,
                       t2: Optional[int] = None, *, t1_start: int = DEFAULT_T1_START,
                       t1_max: int = DEFAULT_T1_MAX, phi_tol: float = DEFAULT_PHI_TOL,
                       t2_tol: float = DEFAULT_T2_TOL) -> BlockToeHankExp:
    """
    Approximate exp(H_n kron N + I_n kron M), H_n = tridiag(z, 0, z).

    Args:
        m_block, n_block: Square blocks of equal size m.
        z: Off-diagonal value of H_n.
        n: Number of block rows.
        t1: Fixed quadrature interval count; adaptive when omitted.
        t2: Last order computed by quadrature, 2 <= t2 <= n + 1; above it
            Phi_k = Phi_{k-2}. Chosen from ``t2_tol`` when omitted.
    """
    m_block, n_block = _validated_blocks(m_block, n_block)
    z = _as_complex(z, "z")
    n = _as_dimension(n)
    kmax = n + 1
    if t2 is not None and (isinstance(t2, bool) or not isinstance(t2, (int, np.integer))
                           or not 2 <= t2 <= kmax):
        raise InvalidArgumentError(f"t2 must lie in [2, {kmax}], got {t2!r}")

    quad_order = kmax if t2 is None else int(t2)
    computed, t1 = phi_sequence(m_block, n_block, z, quad_order, t1=t1, t1_start=t1_start,
                                t1_max=t1_max, tol=phi_tol)

    if t2 is None:
        # orders past t1 are aliased on the grid
        computed = computed[:min(kmax, t1) + 1]
        t2, residual = _select_t2(computed, t2_tol)
    else:
        t2 = int(t2)
        residual = float(_block_norms((computed[t2] - computed[t2 - 2])[None])[0])

    phis = np.empty((kmax + 1,) + m_block.shape, dtype=np.complex128)
    phis[:t2 + 1] = computed[:t2 + 1]
    for k in range(t2 + 1, kmax + 1):
        phis[k] = phis[k - 2]
    logger.debug(f"Block exponential: m={m_block.shape[0]}, n={n}, t1={t1}, t2={t2}, "
                 f"stabilisation residual {residual:.3e}")
    return BlockToeHankExp(m=m_block.shape[0], n=n, phis=phis, t1=t1, t2=t2,
                           stabilization_residual=residual)


def expm_block_nonsym(m_block, n_block, a, c, n: int, t1: Optional[int] = None,
                      t2: Optional[int] = None, **options) -> BlockToeHankExp:
    """exp(I_n kron M + tridiag(a, 0, c) kron N) through the blockwise similarity scale."""
    a = _as_complex(a, "a")
    c = _as_complex(c, "c")
    if a * c == 0:
        raise InvalidArgumentError(f"block similarity needs a c != 0, got a={a}, c={c}")
    ratio = complex(np.sqrt(a / c))
    rep = expm_block_tridiag(m_block, n_block, c * ratio, n, t1=t1, t2=t2, **options)
    return BlockToeHankExp(m=rep.m, n=rep.n, phis=rep.phis, t1=rep.t1, t2=rep.t2,
                           ratio=ratio, stabilization_residual=rep.stabilization_residual)


@dataclass(frozen=True)
class KroneckerExp:
    """exp(H_n kron I_m + I_n kron A_m) = left kron right, kept factored."""

    left: Union[DenseMatrix, BandMatrix]
    right: Union[DenseMatrix, BandMatrix]

    def matvec(self, u) -> NDArray[np.complex128]:
        return kron_matvec(self.left, self.right, u)

    def to_dense(self) -> DenseMatrix:
        left = self.left.to_dense() if isinstance(self.left, BandMatrix) else self.left
        right = self.right.to_dense() if isinstance(self.right, BandMatrix) else self.right
        return np.kron(left, right)


def expm_kronecker_sum(z, n: int, spec: TridiagSpec, mode: str = "bessel",
                       d: Optional[Tuple[Optional[int], Optional[int]]] = None,
                       **bessel_options) -> KroneckerExp:
    """
    Factors of exp(H_n (+) A_m) for H_n = tridiag(z, 0, z) and A_m given by ``spec``.

    ``d`` optionally truncates (left, right) to band form.
    """
    left_d, right_d = d if d is not None else (None, None)
    left = expm_tridiag(TridiagSpec(z, 0, z, n), mode=mode, d=left_d, **bessel_options)
    right = expm_tridiag(spec, mode=mode, d=right_d, **bessel_options)
    return KroneckerExp(left=left, right=right)
