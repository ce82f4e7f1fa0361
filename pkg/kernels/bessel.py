"""
Modified Bessel functions of the first kind for complex argument.

Every structured exponential in this repository is assembled from the
sequence I_0(x), ..., I_kmax(x). The sequence is produced in two pieces:

* the integral form I_k(x) = (1/pi) int_0^pi exp(x cos t) cos(k t) dt is
  evaluated with the trapezoidal rule on the periodic integrand. One FFT of the
  node values yields every cosine coefficient at once, and the node count is
  doubled until two successive levels agree;
* beyond the order of largest magnitude the values decay super-geometrically
  and fall below the quadrature's roundoff floor, so they are continued from
  the quadrature pivot with the ratios I_{k+1}/I_k obtained by backward
  recurrence (a continued fraction, stable for the minimal solution), carried
  in long double precision.

The power series is kept as an independent implementation for tests.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.typing import NDArray

from common.errors import InvalidArgumentError, NumericOverflowError, ToeplitzExpmError


logger = logging.getLogger(__name__)

# Above this |Re x| the integrand is evaluated as exp(x cos t - |Re x|).
SCALING_THRESHOLD = 200.0

DEFAULT_START_POINTS = 64
DEFAULT_MAX_POINTS = 1 << 20
DEFAULT_REL_TOL = 1e-14


@dataclass(frozen=True)
class BesselSequence:
    """I_0(argument), ..., I_kmax(argument)."""

    argument: complex
    values: NDArray[np.complex128]

    @property
    def kmax(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int) -> complex:
        return complex(self.values[k])


def _as_finite_complex(x) -> complex:
    try:
        z = complex(x)
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError(f"Bessel argument is not a number: {x!r}") from e
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidArgumentError(f"Bessel argument must be finite, got {z}")
    return z


def _as_order(k, name: str = "order") -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 0:
        raise InvalidArgumentError(f"{name} must be a nonnegative integer, got {k!r}")
    return int(k)


def _trapezoid_coefficients(x: complex, shift: float, n_points: int) -> NDArray[np.complex128]:
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    samples = np.exp(x * np.cos(theta) - shift)
    # the integrand is even in theta, so the DFT holds the cosine sums
    return np.fft.fft(samples) / n_points


def _quadrature(x: complex, shift: float, kq: int, start_points: int,
                max_points: int, rel_tol: float) -> Tuple[NDArray[np.complex128], int]:
    n_points = max(start_points, 8)
    while n_points < 4 * (kq + 1):
        n_points *= 2

    previous = _trapezoid_coefficients(x, shift, n_points)[:kq + 1]
    floor = 64.0 * np.finfo(float).eps * math.exp(abs(x.real) - shift)
    while True:
        if 2 * n_points > max_points:
            raise ToeplitzExpmError(
                f"Trapezoidal quadrature for I_k({x}) did not settle within {max_points} points"
            )
        n_points *= 2
        current = _trapezoid_coefficients(x, shift, n_points)[:kq + 1]
        change = np.max(np.abs(current - previous))
        if change <= rel_tol * np.max(np.abs(current)) + floor:
            logger.debug(f"Bessel quadrature for x={x} settled at {n_points} points")
            return current, n_points
        previous = current


def _ratio_tail(x: complex, k0: int, kmax: int) -> NDArray[np.clongdouble]:
    """Ratios I_{k+1}(x)/I_k(x) for k = k0, ..., kmax-1, in extended precision."""
    ratios = np.empty(kmax - k0, dtype=np.clongdouble)
    start = kmax + int(abs(x)) + 32
    x_ext = np.clongdouble(x)
    r = np.clongdouble(0)
    for k in range(start, k0, -1):
        # I_{k-1} - I_{k+1} = (2k/x) I_k
        r = 1 / (2 * k / x_ext + r)
        if k <= kmax:
            ratios[k - 1 - k0] = r
    return ratios


def _rescale(scaled: NDArray[np.complex128], shift: float, x: complex) -> NDArray[np.complex128]:
    if shift == 0.0:
        return scaled
    values = np.zeros_like(scaled)
    nonzero = scaled != 0
    with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
        values[nonzero] = np.exp(np.log(scaled[nonzero]) + shift)
    if not np.all(np.isfinite(values)):
        first = int(np.argmax(~np.isfinite(values)))
        raise NumericOverflowError(
            f"I_{first}({x}) exceeds the double precision range (scaled value "
            f"{complex(scaled[first]):.3e} times exp({shift:.1f}))"
        )
    return values


def bessel_sequence(kmax: int, x, *, start_points: int = DEFAULT_START_POINTS,
                    max_points: int = DEFAULT_MAX_POINTS,
                    rel_tol: float = DEFAULT_REL_TOL) -> BesselSequence:
    """
    Evaluate I_0(x), ..., I_kmax(x).

    Args:
        kmax: Largest order, nonnegative.
        x: Finite complex argument.
        start_points: Initial trapezoidal node count before doubling.
        max_points: Upper limit on the node count.
        rel_tol: Relative change between doubling levels accepted as converged.

    Returns:
        BesselSequence holding kmax + 1 values.
    """
    kmax = _as_order(kmax, "kmax")
    x = _as_finite_complex(x)

    if x == 0:
        values = np.zeros(kmax + 1, dtype=np.complex128)
        values[0] = 1.0
        return BesselSequence(argument=x, values=values)

    shift = abs(x.real) if abs(x.real) > SCALING_THRESHOLD else 0.0

    # |I_k| peaks near k = |x|; past the peak the ratio recurrence takes over
    kq = min(kmax, int(math.ceil(abs(x))) + 1)
    coefficients, _ = _quadrature(x, shift, kq, start_points, max_points, rel_tol)
    pivot = int(np.argmax(np.abs(coefficients)))

    scaled = np.empty(kmax + 1, dtype=np.complex128)
    scaled[:pivot + 1] = coefficients[:pivot + 1]
    if kmax > pivot:
        with np.errstate(under='ignore'):
            # long double product, rounded once
            tail = np.clongdouble(coefficients[pivot]) * np.cumprod(_ratio_tail(x, pivot, kmax))
            scaled[pivot + 1:] = tail.astype(np.complex128)

    return BesselSequence(argument=x, values=_rescale(scaled, shift, x))


def bessel_i(order: int, x) -> complex:
    """I_order(x) for a nonnegative integer order and finite complex x."""
    order = _as_order(order)
    return bessel_sequence(order, x)[order]


def bessel_i_series(order: int, x, max_terms: int = 1000) -> complex:
    """Power-series evaluation of I_order(x); reference implementation for tests."""
    order = _as_order(order)
    x = _as_finite_complex(x)
    half = x / 2.0

    term = 1.0 + 0j
    for k in range(1, order + 1):
        term *= half / k
    total = term
    q = half * half
    for s in range(1, max_terms):
        term *= q / (s * (order + s))
        total += term
        if s > abs(half) and abs(term) <= 1e-18 * abs(total):
            break
    return complex(total)
