"""
Near-linear exponential of tridiagonal Toeplitz matrices.

exp(tridiag(z, b, z)) is approximated by exp(b) (Toeplitz(u, u) - Hankel(v, v))
with u and v made of I_k(2z). A nonsymmetric tridiag(a, b, c), a c != 0, is
diagonally similar to tridiag(z, b, z) with z = c sqrt(a/c); the similarity
becomes the entrywise factor sqrt(a/c)^(i-j). Nothing here multiplies matrices.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import gammaln

from common.errors import InvalidArgumentError, NumericOverflowError
from exponentials.spectral_oracle import LOG_MAX, expm_dense_small, expm_tridiag_exact
from kernels.bessel import bessel_sequence
from structures.matrices import (BandMatrix, DenseMatrix, TridiagSpec, ToeHankExp,
                                 _as_complex, _as_dimension, backward_identity_apply,
                                 materialize)


logger = logging.getLogger(__name__)

MODES = ("bessel", "exact", "dense-oracle")


@dataclass(frozen=True)
class ErrorBudget:
    approx_bound: float
    band_bound: float
    requested_tol: float
    selected_d: int
    satisfiable: bool


def similarity_parameters(spec: TridiagSpec) -> Tuple[complex, complex]:
    """(z, ratio) with ratio = sqrt(a/c) on the principal branch and z = c ratio."""
    if spec.a * spec.c == 0:
        raise InvalidArgumentError(
            f"tridiag({spec.a}, {spec.b}, {spec.c}) has a zero off-diagonal; "
            "use expm_tridiag_exact for the closed form"
        )
    ratio = complex(np.sqrt(spec.a / spec.c))
    return spec.c * ratio, ratio


def _diag_factor(b: complex) -> complex:
    if b.real > LOG_MAX:
        raise NumericOverflowError(f"exp(b) overflows for b={b}")
    return complex(np.exp(b))


def expm_toeplitz_bessel(spec: TridiagSpec, **bessel_options) -> ToeHankExp:
    """
    Compact Bessel approximation of exp(tridiag(a, b, c)).

    One sequence I_0(2z), ..., I_{n+1}(2z) is evaluated; u takes the first n
    values, v the orders n+1 down to 2.

    Args:
        spec: Matrix with a c != 0.
        **bessel_options: Passed to ``bessel_sequence`` (start_points, max_points, rel_tol).
    """
    z, ratio = similarity_parameters(spec)
    n = spec.n
    values = bessel_sequence(n + 1, 2.0 * z, **bessel_options).values
    return ToeHankExp(
        u=values[:n],
        v=values[2:n + 2][::-1],
        diag_factor=_diag_factor(spec.b),
        ratio=ratio,
        n=n,
    )


def approx_error_bound(b, z, n: int) -> float:
    """(1/2) exp(Re b) (exp(2 Re z)/(2n+2))^(n+1); +inf when not representable."""
    b = _as_complex(b, "b")
    z = _as_complex(z, "z")
    n = _as_dimension(n)
    log_bound = math.log(0.5) + b.real + (n + 1) * (2.0 * z.real - math.log(2 * n + 2))
    if log_bound > LOG_MAX:
        return math.inf
    return math.exp(log_bound)


def _band_log_bounds(spec: TridiagSpec, d: np.ndarray) -> np.ndarray:
    if spec.a == 0 and spec.c == 0:
        z_abs, delta = 0.0, 1.0
    elif spec.a * spec.c == 0:
        # one-sided: entries exp(b) x^k / k! with x the nonzero off-diagonal
        z_abs, delta = abs(spec.a if spec.a != 0 else spec.c), 1.0
    else:
        z, ratio = similarity_parameters(spec)
        z_abs = abs(z)
        delta = max(abs(ratio), 1.0 / abs(ratio))
    d = np.asarray(d, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        # |z|^0 = 1 including z = 0
        power = np.where(d == 0, 0.0, d * np.log(z_abs) if z_abs > 0 else -np.inf)
    return (math.log(2.0) + power + spec.n * math.log(delta) - gammaln(d + 1)
            + spec.b.real + 3.0 * z_abs)


def band_error_bound(spec: TridiagSpec, d: int) -> float:
    """2 |z|^d delta^n / d! exp(Re b + 3|z|), delta = max(|sqrt(a/c)|, |sqrt(a/c)|^-1)."""
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or not 0 <= d <= spec.n - 1:
        raise InvalidArgumentError(f"half-bandwidth d must lie in [0, {spec.n - 1}], got {d!r}")
    log_bound = float(_band_log_bounds(spec, np.array([d]))[0])
    if log_bound > LOG_MAX:
        return math.inf
    return math.exp(log_bound)


def select_bandwidth(spec: TridiagSpec, tol: float) -> ErrorBudget:
    """Smallest d whose band bound is at most tol, or d = n-1 flagged unsatisfiable."""
    if not tol > 0 or not math.isfinite(tol):
        raise InvalidArgumentError(f"tolerance must be positive and finite, got {tol!r}")
    n = spec.n
    log_bounds = _band_log_bounds(spec, np.arange(n))
    hits = np.nonzero(log_bounds <= math.log(tol))[0]
    satisfiable = hits.size > 0
    d = int(hits[0]) if satisfiable else n - 1
    bound = band_error_bound(spec, d)

    if spec.a * spec.c == 0:
        approx = 0.0
    else:
        z, _ = similarity_parameters(spec)
        approx = approx_error_bound(spec.b, z, n)

    if satisfiable:
        logger.debug(f"Selected half-bandwidth d={d} (bound {bound:.3e} <= {tol:.3e}) for n={n}")
    else:
        logger.warning(
            f"No half-bandwidth meets tol={tol:.3e} for tridiag({spec.a}, {spec.b}, {spec.c}), "
            f"n={n}; using d={d} with bound {bound:.3e}"
        )
    return ErrorBudget(approx_bound=approx, band_bound=bound, requested_tol=float(tol),
                       selected_d=d, satisfiable=satisfiable)


def _negated(rep: ToeHankExp, b: complex) -> ToeHankExp:
    """exp(-T) from the generators of exp(T), using I_k(-x) = (-1)^k I_k(x)."""
    n = rep.n
    u_sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    v_sign = np.where(np.arange(n + 1, 1, -1) % 2 == 0, 1.0, -1.0)
    return ToeHankExp(u=rep.u * u_sign, v=rep.v * v_sign, diag_factor=_diag_factor(-b),
                      ratio=rep.ratio, n=n)


def coshm_sinhm_tridiag(spec: TridiagSpec, **bessel_options) -> Tuple[DenseMatrix, DenseMatrix]:
    """cosh and sinh of tridiag(a, b, c) from a single Bessel sequence."""
    if spec.a * spec.c == 0 or spec.n == 1:
        plus = expm_tridiag_exact(spec)
        minus = expm_tridiag_exact(spec.scaled(-1))
    else:
        rep = expm_toeplitz_bessel(spec, **bessel_options)
        plus = materialize(rep)
        minus = materialize(_negated(rep, spec.b))
    return 0.5 * (plus + minus), 0.5 * (plus - minus)


def anti_tridiag_dense(a, b, n: int) -> DenseMatrix:
    """Z = J tridiag(a, b, a): b on the anti-diagonal, a on its two neighbours."""
    return backward_identity_apply("left", TridiagSpec(a, b, a, n).to_dense())


def expm_anti_tridiag(a, b, n: int, **bessel_options) -> DenseMatrix:
    """exp(Z) = J sinh(T) + cosh(T) for Z = J T, T = tridiag(a, b, a)."""
    cosh, sinh = coshm_sinhm_tridiag(TridiagSpec(a, b, a, n), **bessel_options)
    return backward_identity_apply("left", sinh) + cosh


def expm_tridiag(spec: TridiagSpec, mode: str = "bessel", d: Optional[int] = None,
                 **bessel_options) -> Union[DenseMatrix, BandMatrix]:
    """
    exp(tridiag(a, b, c)) by the chosen method, dense or truncated to band d.

    Bessel mode falls back to the closed forms when a c = 0 or n = 1 (no
    off-diagonal coupling). Exact and oracle results are truncated after the fact.
    """
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    if d is not None and (isinstance(d, bool) or not isinstance(d, (int, np.integer))
                          or not 0 <= d <= spec.n - 1):
        raise InvalidArgumentError(f"half-bandwidth d must lie in [0, {spec.n - 1}], got {d!r}")

    if mode == "bessel" and spec.a * spec.c != 0 and spec.n > 1:
        rep = expm_toeplitz_bessel(spec, **bessel_options)
        if d is None:
            return materialize(rep)
        return materialize(rep, mode="band", d=int(d))

    if mode == "dense-oracle":
        result = expm_dense_small(spec.to_dense())
    else:
        result = expm_tridiag_exact(spec)
    if d is None:
        return result
    return BandMatrix.from_dense(result, int(d))
