"""
Exact reference exponentials.

The eigenpairs of tridiag(z, b, z) are known in closed form, so its
exponential can be written down as a finite sine sum. Nonsymmetric
tridiag(a, b, c) is diagonally similar to a symmetric one, and the one-sided
cases (a = 0 or c = 0) are shifted nilpotent matrices with a terminating
series. ``expm_dense_small`` is a general scaling-and-squaring Padé
exponential used as the dense oracle everywhere else.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from common.errors import InvalidArgumentError, NumericOverflowError
from structures.matrices import DenseMatrix, TridiagSpec, _as_complex, _as_dimension


logger = logging.getLogger(__name__)

# exp overflows past this exponent in double precision
LOG_MAX = math.log(np.finfo(float).max)

# [6/6] Padé coefficients of exp: (12-k)! 6! / (12! k! (6-k)!)
PADE6 = (1.0, 1.0 / 2, 5.0 / 44, 1.0 / 66, 1.0 / 792, 1.0 / 15840, 1.0 / 665280)
PADE_SCALING_THETA = 0.5


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues and orthonormal eigenvectors of tridiag(z, b, z)."""

    z: complex
    b: complex
    n: int
    lambdas: NDArray[np.complex128] = field(repr=False)

    def eigenvector_entry(self, j: int, k: int) -> float:
        """omega_j^(k) = sqrt(2/(n+1)) sin(j k pi/(n+1)), 1-based j and k."""
        return math.sqrt(2.0 / (self.n + 1)) * math.sin(j * k * math.pi / (self.n + 1))

    def eigenvectors(self) -> NDArray[np.float64]:
        """P with P[:, k-1] the normalised eigenvector of lambda_k; P^T P = I."""
        idx = np.arange(1, self.n + 1)
        return math.sqrt(2.0 / (self.n + 1)) * np.sin(np.outer(idx, idx) * np.pi / (self.n + 1))


def eigen_sym_tridiag(z, b, n: int) -> SpectralDecomposition:
    """lambda_k = b + 2z cos(k pi/(n+1)), k = 1..n."""
    z = _as_complex(z, "z")
    b = _as_complex(b, "b")
    n = _as_dimension(n)
    k = np.arange(1, n + 1)
    lambdas = b + 2.0 * z * np.cos(k * np.pi / (n + 1))
    lambdas.setflags(write=False)
    return SpectralDecomposition(z=z, b=b, n=n, lambdas=lambdas)


def expm_sym_tridiag_exact(z, b, n: int) -> DenseMatrix:
    """
    exp(tridiag(z, b, z)) from the eigendecomposition, entry by entry
    exp(b) (2/(n+1)) sum_k exp(2z cos(k pi/(n+1))) sin(k pi i/(n+1)) sin(k pi j/(n+1)).
    O(n^3); reference only.
    """
    spectral = eigen_sym_tridiag(z, b, n)
    growth = spectral.b.real + 2.0 * abs(spectral.z.real)
    if growth > LOG_MAX:
        raise NumericOverflowError(
            f"exp(tridiag({spectral.z}, {spectral.b}, {spectral.z})) overflows: "
            f"Re(b) + 2|Re z| = {growth:.1f} exceeds {LOG_MAX:.1f}"
        )
    p = spectral.eigenvectors()
    with np.errstate(over='ignore', invalid='ignore'):
        weights = np.exp(spectral.lambdas)
        result = (p * weights) @ p.T
    if not np.all(np.isfinite(result)):
        raise NumericOverflowError(f"exp(tridiag({spectral.z}, {spectral.b}, {spectral.z})) overflows")
    return result


def _validated_square(m, name: str = "M") -> NDArray[np.complex128]:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return m.astype(np.complex128)


def expm_dense_small(m: DenseMatrix) -> DenseMatrix:
    """
    Dense exponential: [6/6] diagonal Padé after scaling by 2^-s so that
    ||M||_inf / 2^s <= 0.5, followed by s squarings.
    """
    m = _validated_square(m)
    size = m.shape[0]
    if size == 0:
        return m.copy()

    norm = float(np.max(np.sum(np.abs(m), axis=1)))
    squarings = 0
    if norm > PADE_SCALING_THETA:
        squarings = int(math.ceil(math.log2(norm / PADE_SCALING_THETA)))
    x = m / (2.0 ** squarings)

    eye = np.eye(size, dtype=np.complex128)
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    even = PADE6[0] * eye + PADE6[2] * x2 + PADE6[4] * x4 + PADE6[6] * x6
    odd = x @ (PADE6[1] * eye + PADE6[3] * x2 + PADE6[5] * x4)
    result = linalg.solve(even - odd, even + odd)

    for _ in range(squarings):
        result = result @ result
    if not np.all(np.isfinite(result)):
        raise NumericOverflowError(f"dense exponential overflows (||M||_inf = {norm:.3e})")
    return result


def _one_sided_exponential(spec: TridiagSpec) -> DenseMatrix:
    """exp(bI + xN) with N the shift; the series terminates after n terms."""
    n = spec.n
    x = spec.c if spec.c != 0 else spec.a
    coefficients = np.empty(n, dtype=np.complex128)
    coefficients[0] = 1.0
    with np.errstate(under='ignore'):
        for k in range(1, n):
            coefficients[k] = coefficients[k - 1] * x / k
    zeros = np.zeros(n, dtype=np.complex128)
    if spec.c != 0:
        # superdiagonal: entry (i, j) = x^{j-i}/(j-i)!
        result = linalg.toeplitz(zeros, coefficients).astype(np.complex128)
        result[np.diag_indices(n)] = 1.0
    else:
        result = linalg.toeplitz(coefficients, zeros).astype(np.complex128)
        result[np.diag_indices(n)] = 1.0
    return np.exp(spec.b) * result


def similarity_scale(ratio: complex, n: int) -> NDArray[np.complex128]:
    """ratio**(i - j) for 0-based i, j, formed through the logarithm."""
    i, j = np.indices((n, n))
    exponent = (i - j) * np.log(complex(ratio))
    if np.max(exponent.real) > LOG_MAX:
        raise NumericOverflowError(
            f"similarity factor ratio^(n-1) overflows for ratio={ratio}, n={n}; "
            f"|log ratio|*(n-1) = {abs(np.log(complex(ratio)).real) * (n - 1):.1f}"
        )
    return np.exp(exponent)


def expm_tridiag_exact(spec: TridiagSpec, root_sign: int = 1) -> DenseMatrix:
    """
    Exact exponential of tridiag(a, b, c), total over all (a, b, c).

    For a c != 0 the matrix equals D T D^{-1} with T = tridiag(z, b, z),
    z = c sqrt(a/c) and D = diag(rho^{k-1}), rho = sqrt(a/c). ``root_sign``
    selects the square-root branch; both give the same exponential.
    """
    if root_sign not in (1, -1):
        raise InvalidArgumentError(f"root_sign must be +1 or -1, got {root_sign!r}")
    if spec.a == 0 and spec.c == 0:
        return np.exp(spec.b) * np.eye(spec.n, dtype=np.complex128)
    if spec.a == 0 or spec.c == 0:
        return _one_sided_exponential(spec)

    rho = root_sign * np.sqrt(spec.a / spec.c)
    z = spec.c * rho
    symmetric = expm_sym_tridiag_exact(z, spec.b, spec.n)
    if rho == 1:
        return symmetric
    return similarity_scale(rho, spec.n) * symmetric
