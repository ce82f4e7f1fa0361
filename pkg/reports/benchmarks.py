"""
Timing and accuracy sweeps behind the ``bench`` and ``sweep`` commands.

The structured method is timed end to end (Bessel generators, bandwidth
selection, band materialisation); the oracle is the dense Padé exponential of
the materialised matrix.
"""

import csv
import logging
import math
import timeit
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from common.errors import InvalidArgumentError
from exponentials.block_toeplitz import expm_block_tridiag
from exponentials.spectral_oracle import expm_dense_small, expm_tridiag_exact
from exponentials.toeplitz_bessel import (approx_error_bound, band_error_bound,
                                          expm_toeplitz_bessel, select_bandwidth,
                                          similarity_parameters)
from structures.matrices import TridiagSpec, materialize


logger = logging.getLogger(__name__)

BENCH_FIELDS = ["n", "t_method", "t_oracle", "ratio"]
ORDER_FIELDS = ["n", "error", "bound"]
BAND_FIELDS = ["d", "error", "bound"]

# dense Padé keeps about this many n x n complex work arrays alive
PADE_WORKSPACE = 8

EXAMPLE_M = np.array([[1, -2, 3], [0, -4, 3], [-1, 0, 5]], dtype=float)
EXAMPLE_N = np.array([[-1, -1, 2], [-1, -1, 1], [1, -1, -2]], dtype=float)


def time_call(fn: Callable[[], Any], trials: int) -> float:
    """Mean wall-clock seconds of ``trials`` calls."""
    return float(np.mean(timeit.repeat(fn, number=1, repeat=trials)))


def oracle_megabytes(order: int) -> float:
    return PADE_WORKSPACE * 16.0 * order ** 2 / 2 ** 20


def _check_sizes(sizes: Sequence[int]) -> List[int]:
    sizes = [int(n) for n in sizes]
    if any(n < 1 for n in sizes):
        raise InvalidArgumentError(f"sizes must be positive, got {sizes}")
    if sizes != sorted(sizes):
        raise InvalidArgumentError(f"sizes must be sorted ascending, got {sizes}")
    return sizes


def _row(n: int, t_method: float, t_oracle: float) -> Dict[str, Any]:
    ratio = t_oracle / t_method if t_method > 0 and math.isfinite(t_oracle) else math.nan
    return {"n": n, "t_method": t_method, "t_oracle": t_oracle, "ratio": ratio}


def bench_tridiag(a, b, c, sizes: Sequence[int], trials: int = 3, tol: float = 1e-12,
                  dense_cap_mb: float = 2048.0) -> List[Dict[str, Any]]:
    """Rows (n, t_method, t_oracle, ratio) for tridiag(a, b, c); ratio = t_oracle / t_method."""
    sizes = _check_sizes(sizes)
    rows = []
    if trials <= 0:
        return rows
    for n in sizes:
        spec = TridiagSpec(a, b, c, n)
        d = select_bandwidth(spec, tol).selected_d

        def method():
            materialize(expm_toeplitz_bessel(spec), mode="band", d=d)

        t_method = time_call(method, trials)
        if oracle_megabytes(n) > dense_cap_mb:
            logger.warning(f"Skipping dense oracle at n={n}: needs ~{oracle_megabytes(n):.0f} MB "
                           f"(cap {dense_cap_mb:.0f} MB)")
            t_oracle = math.nan
        else:
            dense = spec.to_dense()
            t_oracle = time_call(lambda: expm_dense_small(dense), trials)
        logger.info(f"bench n={n}: method {t_method:.4f}s, oracle {t_oracle:.4f}s (d={d})")
        rows.append(_row(n, t_method, t_oracle))
    return rows


def random_blocks(m: int, seed: int):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, m)), rng.standard_normal((m, m)) / m


def bench_block(m_block, n_block, z, sizes: Sequence[int], trials: int = 3, t1: int = 30,
                t2: int = 30, dense_cap_mb: float = 2048.0) -> List[Dict[str, Any]]:
    """Block family: structured exponential materialised densely vs the dense oracle of Q."""
    sizes = _check_sizes(sizes)
    rows = []
    if trials <= 0:
        return rows
    m_block = np.asarray(m_block, dtype=np.complex128)
    n_block = np.asarray(n_block, dtype=np.complex128)
    m = m_block.shape[0]
    for n in sizes:
        t2_n = min(t2, n + 1)

        def method():
            expm_block_tridiag(m_block, n_block, z, n, t1=t1, t2=t2_n).materialize()

        t_method = time_call(method, trials)
        if oracle_megabytes(n * m) > dense_cap_mb:
            logger.warning(f"Skipping dense oracle at n={n}, m={m}: needs ~{oracle_megabytes(n * m):.0f} MB")
            t_oracle = math.nan
        else:
            q = block_dense(m_block, n_block, z, n)
            t_oracle = time_call(lambda: expm_dense_small(q), trials)
        rows.append(_row(n, t_method, t_oracle))
    return rows


def block_dense(m_block, n_block, z, n: int) -> np.ndarray:
    """Q = H_n kron N + I_n kron M with H_n = tridiag(z, 0, z)."""
    h = TridiagSpec(z, 0, z, n).to_dense()
    return np.kron(h, n_block) + np.kron(np.eye(n), m_block)


def _inf_norm(m: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(m), axis=1)))


def _map_rows(fn: Callable[[int], Dict[str, Any]], items: Sequence[int], parallel: bool) -> List[Dict[str, Any]]:
    if not parallel:
        return [fn(item) for item in items]
    # untimed rows only; executor.map keeps the input order
    with ThreadPoolExecutor() as executor:
        return list(executor.map(fn, items))


def order_sweep(a, b, c, sizes: Sequence[int], parallel: bool = False) -> List[Dict[str, Any]]:
    """||Bessel - exact||_inf next to the approximation bound for each n."""

    def row(n: int) -> Dict[str, Any]:
        spec = TridiagSpec(a, b, c, n)
        z, _ = similarity_parameters(spec)
        error = _inf_norm(materialize(expm_toeplitz_bessel(spec)) - expm_tridiag_exact(spec))
        return {"n": n, "error": error, "bound": approx_error_bound(spec.b, z, n)}

    return _map_rows(row, _check_sizes(sizes), parallel)


def band_sweep(a, b, c, n: int, d_values: Sequence[int], parallel: bool = False) -> List[Dict[str, Any]]:
    """Measured ||E - E_d||_inf next to the band bound for each d."""
    spec = TridiagSpec(a, b, c, n)
    rep = expm_toeplitz_bessel(spec)
    dense = materialize(rep)

    def row(d: int) -> Dict[str, Any]:
        band = materialize(rep, mode="band", d=d)
        return {"d": d, "error": _inf_norm(dense - band.to_dense()), "bound": band_error_bound(spec, d)}

    return _map_rows(row, [int(d) for d in d_values], parallel)


def negative_fraction(m) -> float:
    """Share of entries whose real part is negative."""
    m = np.asarray(m)
    return float(np.count_nonzero(m.real < 0)) / m.size


def write_rows_csv(path, rows: List[Dict[str, Any]], field_names: List[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode='w', newline='', encoding='utf-8') as csv_file:
        writer = csv.DictWriter(csv_file, fieldnames=field_names)
        writer.writeheader()
        for entry in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in entry.items()})
    return path


def read_rows_csv(path) -> List[Dict[str, float]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")
    with open(path, 'r', newline='', encoding='utf-8') as csv_file:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(csv_file)]


def trend_holds(rows: List[Dict[str, Any]], max_ratio: Optional[float] = None) -> bool:
    """True when the oracle/method ratio grows with n (and stays above ``max_ratio`` if given)."""
    ratios = [r["ratio"] for r in rows]
    if any(not math.isfinite(x) for x in ratios):
        return False
    growing = all(later > earlier for earlier, later in zip(ratios, ratios[1:]))
    return growing and (max_ratio is None or min(ratios) > max_ratio)
