"""
Heat equation u_t = a u_xx (or a (u_xx + u_yy)) with homogeneous Dirichlet data.

The second-difference semi-discretisation is integrated exactly in time: one
step multiplies by G = exp(tridiag(mu, -2 mu, mu)) truncated to a band, and in
two dimensions by K kron G, applied factor by factor. A Crank-Nicolson
stepper is kept alongside for comparison.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_banded

from common.errors import InvalidArgumentError, StabilityError
from exponentials.toeplitz_bessel import expm_tridiag, select_bandwidth
from structures.matrices import BandMatrix, ToeHankExp, TridiagSpec, kron_matvec, materialize


logger = logging.getLogger(__name__)

PROFILES = ("sine", "spike")
PROPAGATORS = ("bessel", "oracle")
STABILITY_SLACK = 1e-12

Band = Union[int, Tuple[int, int], None]


@dataclass(frozen=True)
class HeatConfig:
    """
    Discretisation of a 1D or 2D heat problem.

    ``J`` divides each side into equal cells; the unknowns are the J - 1
    interior nodes per direction, x varying fastest in 2D. ``band`` of None
    selects the half-bandwidth from ``band_tol`` (Delta x^2 when unset).
    """

    dims: int = 1
    domain: Optional[Tuple[float, ...]] = None
    diffusivity: float = 1.0
    J: Union[int, Tuple[int, int]] = 20
    dt: float = 0.0025
    steps: int = 40
    band: Band = None
    band_tol: Optional[float] = None
    initial: Union[str, Sequence[float]] = "sine"
    propagator: str = "bessel"

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise InvalidArgumentError(f"dims must be 1 or 2, got {self.dims!r}")
        # unit interval per direction
        domain = tuple(float(v) for v in (self.domain if self.domain is not None else (0.0, 1.0) * self.dims))
        if len(domain) != 2 * self.dims:
            raise InvalidArgumentError(f"a {self.dims}D domain needs {2 * self.dims} bounds, got {domain}")
        if any(hi <= lo for lo, hi in zip(domain[::2], domain[1::2])):
            raise InvalidArgumentError(f"domain bounds must increase, got {domain}")
        object.__setattr__(self, "domain", domain)

        divisors = self.J if isinstance(self.J, (tuple, list)) else (self.J,) * self.dims
        if len(divisors) != self.dims or any(
                isinstance(j, bool) or not isinstance(j, (int, np.integer)) or j < 2 for j in divisors):
            raise InvalidArgumentError(f"J must give {self.dims} integer(s) >= 2, got {self.J!r}")
        object.__setattr__(self, "J", int(divisors[0]) if self.dims == 1 else tuple(int(j) for j in divisors))

        if not (self.diffusivity > 0 and math.isfinite(self.diffusivity)):
            raise InvalidArgumentError(f"diffusivity must be positive, got {self.diffusivity!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidArgumentError(f"time step must be positive, got {self.dt!r}")
        if isinstance(self.steps, bool) or not isinstance(self.steps, (int, np.integer)) or self.steps < 0:
            raise InvalidArgumentError(f"steps must be a nonnegative integer, got {self.steps!r}")
        if self.propagator not in PROPAGATORS:
            raise InvalidArgumentError(f"propagator must be one of {PROPAGATORS}, got {self.propagator!r}")
        if self.band_tol is not None and not self.band_tol > 0:
            raise InvalidArgumentError(f"band_tol must be positive, got {self.band_tol!r}")

        if self.band is not None:
            bands = self.band if isinstance(self.band, (tuple, list)) else (self.band,) * self.dims
            if len(bands) != self.dims or any(
                    isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 0 for d in bands):
                raise InvalidArgumentError(f"band must give {self.dims} nonnegative integer(s), got {self.band!r}")
            object.__setattr__(self, "band", int(bands[0]) if self.dims == 1 else tuple(int(d) for d in bands))

        if isinstance(self.initial, str):
            if self.initial not in PROFILES:
                raise InvalidArgumentError(f"initial profile must be one of {PROFILES} or samples, got {self.initial!r}")
        else:
            samples = np.asarray(self.initial, dtype=float)
            if samples.shape != (self.size,) or not np.all(np.isfinite(samples)):
                raise InvalidArgumentError(f"initial samples must be {self.size} finite values, got shape {samples.shape}")
            object.__setattr__(self, "initial", tuple(samples.tolist()))

    @property
    def divisors(self) -> Tuple[int, ...]:
        return (self.J,) if self.dims == 1 else self.J

    @property
    def spacings(self) -> Tuple[float, ...]:
        return tuple((hi - lo) / j for lo, hi, j in zip(self.domain[::2], self.domain[1::2], self.divisors))

    @property
    def dx(self) -> float:
        return self.spacings[0]

    @property
    def mus(self) -> Tuple[float, ...]:
        """Mesh ratios a dt / h^2 per direction."""
        return tuple(self.diffusivity * self.dt / h ** 2 for h in self.spacings)

    @property
    def mu(self) -> float:
        return self.mus[0]

    @property
    def size(self) -> int:
        return int(np.prod([j - 1 for j in self.divisors]))

    def axes(self) -> List[NDArray[np.float64]]:
        """Interior node coordinates per direction."""
        return [lo + h * np.arange(1, j)
                for lo, h, j in zip(self.domain[::2], self.spacings, self.divisors)]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HeatConfig":
        """
        Build from a mapping. Besides the field names it accepts ``dx`` (or
        ``dx``/``dy`` in 2D) in place of ``J`` and ``mu`` in place of ``dt``.
        """
        data = dict(data)
        known = {f.name for f in fields(cls)} | {"dx", "dy", "mu"}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown heat configuration keys: {sorted(unknown)}")

        dims = int(data.get("dims", 1))
        domain = tuple(data["domain"]) if data.get("domain") is not None else (0.0, 1.0) * dims
        if "mu" in data and "dt" in data:
            raise InvalidArgumentError("give either mu or dt, not both")
        if "dx" in data and "J" not in data:
            steps = [data["dx"]] if dims == 1 else [data["dx"], data.get("dy", data["dx"])]
            if any(not float(h) > 0 for h in steps):
                raise InvalidArgumentError(f"grid spacing must be positive, got {steps}")
            divisors = [int(round((hi - lo) / float(h)))
                        for lo, hi, h in zip(domain[::2], domain[1::2], steps)]
            data["J"] = divisors[0] if dims == 1 else tuple(divisors)
        if isinstance(data.get("J"), list):
            data["J"] = tuple(data["J"])
        if isinstance(data.get("band"), list):
            data["band"] = tuple(data["band"])
        data.pop("dx", None)
        data.pop("dy", None)
        mu = data.pop("mu", None)

        cfg = cls(**{**data, "dims": dims, "domain": domain})
        if mu is not None:
            if not float(mu) > 0:
                raise InvalidArgumentError(f"mu must be positive, got {mu!r}")
            cfg = replace(cfg, dt=float(mu) * cfg.dx ** 2 / cfg.diffusivity)
        return cfg

    @classmethod
    def from_file(cls, path) -> "HeatConfig":
        """Read a JSON document or ``key = value`` lines (values parsed as JSON when possible)."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Heat configuration not found: {path}")
        text = path.read_text(encoding='utf-8')
        if path.suffix.lower() == ".json":
            try:
                return cls.from_dict(json.loads(text))
            except json.JSONDecodeError as e:
                raise InvalidArgumentError(f"Malformed heat configuration {path}: {e}") from e

        data = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise InvalidArgumentError(f"{path}:{number}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            try:
                data[key] = json.loads(raw)
            except json.JSONDecodeError:
                data[key] = raw.strip("'\"")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        for key in ("domain", "J", "band", "initial"):
            if isinstance(out[key], tuple):
                out[key] = list(out[key])
        return out


# a later layer that sets one of these drops the others from earlier layers
ALTERNATE_KEYS = {"mu": ("dt",), "dt": ("mu",), "dx": ("J",), "dy": ("J",), "J": ("dx", "dy")}


def merge_heat_settings(*layers: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Merge preset, file and flag mappings in order. None values are skipped."""
    merged: Dict[str, Any] = {}
    for layer in layers:
        layer = {k: v for k, v in (layer or {}).items() if v is not None}
        for key in layer:
            for other in ALTERNATE_KEYS.get(key, ()):
                if other not in layer:
                    merged.pop(other, None)
        merged.update(layer)
    return merged


@dataclass
class Trajectory:
    """States U^0..U^steps on the interior grid plus per-step diagnostics."""

    times: NDArray[np.float64]
    states: NDArray[np.float64]
    axes: List[NDArray[np.float64]]
    method: str = "bessel"
    diagnostics: Dict[str, NDArray[np.float64]] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise InvalidArgumentError(
                f"{self.times.shape[0]} times but states of shape {self.states.shape}"
            )
        if self.states.shape[1] != int(np.prod([len(a) for a in self.axes])):
            raise InvalidArgumentError("state length does not match the grid")

    @property
    def final(self) -> NDArray[np.float64]:
        return self.states[-1]


def _sample_initial(cfg: HeatConfig) -> NDArray[np.float64]:
    if not isinstance(cfg.initial, str):
        return np.array(cfg.initial, dtype=float)
    axes = cfg.axes()
    if cfg.initial == "sine":
        profiles = [np.sin(np.pi * (x - lo) / (hi - lo))
                    for x, lo, hi in zip(axes, cfg.domain[::2], cfg.domain[1::2])]
    else:
        profiles = []
        for x, lo, hi in zip(axes, cfg.domain[::2], cfg.domain[1::2]):
            p = np.zeros_like(x)
            p[int(np.argmin(np.abs(x - 0.5 * (lo + hi))))] = 1.0
            profiles.append(p)
    if cfg.dims == 1:
        return profiles[0]
    # x fastest
    return np.outer(profiles[1], profiles[0]).ravel()


def exact_solution(cfg: HeatConfig, t: float) -> Optional[NDArray[np.float64]]:
    """Sine profiles decay as exp(-a pi^2 sum 1/L^2 t); None for other initial data."""
    if cfg.initial != "sine":
        return None
    rate = sum(cfg.diffusivity * np.pi ** 2 / (hi - lo) ** 2
               for lo, hi in zip(cfg.domain[::2], cfg.domain[1::2]))
    return math.exp(-rate * t) * _sample_initial(cfg)


def _bands(cfg: HeatConfig) -> Tuple[Optional[int], ...]:
    if cfg.band is None:
        return (None,) * cfg.dims
    return (cfg.band,) if cfg.dims == 1 else cfg.band


def _propagator(cfg: HeatConfig, spec: TridiagSpec, d: Optional[int]) -> BandMatrix:
    if d is None:
        tol = cfg.band_tol if cfg.band_tol is not None else cfg.dx ** 2
        d = select_bandwidth(spec, tol).selected_d
    d = min(d, spec.n - 1)
    mode = "bessel" if cfg.propagator == "bessel" else "dense-oracle"
    logger.debug(f"Building {mode} propagator for tridiag({spec.a}, {spec.b}, {spec.c}), n={spec.n}, d={d}")
    return expm_tridiag(spec, mode=mode, d=d)


def propagator_norm(rep: Union[ToeHankExp, BandMatrix, NDArray]) -> float:
    """Infinity norm of a (band-)materialised propagator."""
    if isinstance(rep, ToeHankExp):
        rep = materialize(rep)
    if isinstance(rep, BandMatrix):
        return rep.inf_norm()
    return float(np.max(np.sum(np.abs(np.asarray(rep)), axis=1)))


def _check_stability(norm: float, label: str) -> None:
    if norm > 1.0 + STABILITY_SLACK:
        raise StabilityError(f"{label} propagator has infinity norm {norm!r} > 1")


def _diagnose(cfg: HeatConfig, times, states) -> Dict[str, NDArray[np.float64]]:
    diagnostics = {
        "norm_inf": np.max(np.abs(states), axis=1),
        "min_entry": np.min(states, axis=1),
    }
    if cfg.initial == "sine":
        exact = np.array([exact_solution(cfg, t) for t in times])
        diagnostics["error_inf"] = np.max(np.abs(states - exact), axis=1)
    return diagnostics


def _run(cfg: HeatConfig, step, method: str) -> Trajectory:
    states = np.empty((cfg.steps + 1, cfg.size))
    states[0] = _sample_initial(cfg)
    for n in range(1, cfg.steps + 1):
        states[n] = step(states[n - 1])
    times = cfg.dt * np.arange(cfg.steps + 1)
    return Trajectory(times=times, states=states, axes=cfg.axes(), method=method,
                      diagnostics=_diagnose(cfg, times, states), params=cfg.to_dict())


def heat1d_solve(cfg: HeatConfig) -> Trajectory:
    """U^n = G_d U^{n-1} with G = exp(tridiag(mu, -2 mu, mu)) built once."""
    if cfg.dims != 1:
        raise InvalidArgumentError(f"heat1d_solve needs a 1D configuration, got dims={cfg.dims}")
    mu = cfg.mu
    g = _propagator(cfg, TridiagSpec(mu, -2 * mu, mu, cfg.J - 1), _bands(cfg)[0])
    _check_stability(g.inf_norm(), "1D")
    logger.info(f"1D heat: J={cfg.J}, mu={mu:.4g}, d={g.d}, steps={cfg.steps}, propagator={cfg.propagator}")
    return _run(cfg, lambda u: g.matmat(u).real, cfg.propagator)


def heat2d_solve(cfg: HeatConfig) -> Trajectory:
    """U^{n+1} = (K_d2 kron G_d1) U^n applied without forming the product."""
    if cfg.dims != 2:
        raise InvalidArgumentError(f"heat2d_solve needs a 2D configuration, got dims={cfg.dims}")
    mu_x, mu_y = cfg.mus
    jx, jy = cfg.J
    d1, d2 = _bands(cfg)
    g = _propagator(cfg, TridiagSpec(mu_x, -2 * mu_x - 2 * mu_y, mu_x, jx - 1), d1)
    k = _propagator(cfg, TridiagSpec(mu_y, 0, mu_y, jy - 1), d2)
    # ||K kron G||_inf = ||K||_inf ||G||_inf
    _check_stability(k.inf_norm() * g.inf_norm(), "2D")
    logger.info(f"2D heat: J=({jx}, {jy}), mu=({mu_x:.4g}, {mu_y:.4g}), d=({g.d}, {k.d}), "
                f"steps={cfg.steps}, propagator={cfg.propagator}")
    return _run(cfg, lambda u: kron_matvec(k, g, u).real, cfg.propagator)


def crank_nicolson_1d(cfg: HeatConfig) -> Trajectory:
    """(I - mu/2 D2) U^{n+1} = (I + mu/2 D2) U^n with banded solves."""
    if cfg.dims != 1:
        raise InvalidArgumentError(f"crank_nicolson_1d needs a 1D configuration, got dims={cfg.dims}")
    mu = cfg.mu
    n = cfg.J - 1
    lhs = BandMatrix.from_tridiag(TridiagSpec(-mu / 2, 1 + mu, -mu / 2, n))
    rhs = BandMatrix.from_tridiag(TridiagSpec(mu / 2, 1 - mu, mu / 2, n))
    ab = lhs.data.real.copy()
    bandwidth = (lhs.d, lhs.d)
    logger.info(f"Crank-Nicolson: J={cfg.J}, mu={mu:.4g}, steps={cfg.steps}")
    return _run(cfg, lambda u: solve_banded(bandwidth, ab, rhs.matmat(u).real), "crank-nicolson")


def solve(cfg: HeatConfig) -> Trajectory:
    return heat1d_solve(cfg) if cfg.dims == 1 else heat2d_solve(cfg)


def observed_order(errors: Sequence[float], spacings: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(spacing)."""
    errors = np.asarray(errors, dtype=float)
    spacings = np.asarray(spacings, dtype=float)
    if errors.shape != spacings.shape or errors.size < 2:
        raise InvalidArgumentError("need at least two (error, spacing) pairs of equal count")
    if np.any(errors <= 0) or np.any(spacings <= 0):
        raise InvalidArgumentError("errors and spacings must be positive")
    slope, _ = np.polyfit(np.log(spacings), np.log(errors), 1)
    return float(slope)


# Trajectory files

AXIS_NAMES = ("x", "y")


def write_trajectory_csv(path, trajectory: Trajectory) -> Path:
    """Long format: one row per (t, node) with columns t, x[, y], u."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    axis_names = list(AXIS_NAMES[:len(trajectory.axes)])
    # x fastest
    grids = np.meshgrid(*trajectory.axes[::-1], indexing='ij')[::-1]
    coords = [g.ravel() for g in grids]
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=["t"] + axis_names + ["u"])
        writer.writeheader()
        for t, state in zip(trajectory.times, trajectory.states):
            for idx, u in enumerate(state):
                row = {"t": repr(float(t)), "u": repr(float(u))}
                row.update({name: repr(float(c[idx])) for name, c in zip(axis_names, coords)})
                writer.writerow(row)
    return path


def read_trajectory_csv(path, method: str = "bessel") -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trajectory file not found: {path}")
    with open(path, 'r', newline='', encoding='utf-8') as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise InvalidArgumentError(f"empty trajectory file: {path}")
    axis_names = [name for name in AXIS_NAMES if name in rows[0]]
    times = list(dict.fromkeys(float(r["t"]) for r in rows))
    per_step = len(rows) // len(times)
    if per_step * len(times) != len(rows):
        raise InvalidArgumentError(f"ragged trajectory file: {path}")
    first = rows[:per_step]
    axes = [np.array(list(dict.fromkeys(float(r[name]) for r in first))) for name in axis_names]
    states = np.array([float(r["u"]) for r in rows]).reshape(len(times), per_step)
    return Trajectory(times=np.array(times), states=states, axes=axes, method=method)


def trajectory_to_json(trajectory: Trajectory) -> Dict[str, Any]:
    return {
        "method": trajectory.method,
        "params": trajectory.params,
        "times": trajectory.times.tolist(),
        "axes": [a.tolist() for a in trajectory.axes],
        "states": trajectory.states.tolist(),
        "diagnostics": {k: v.tolist() for k, v in trajectory.diagnostics.items()},
    }


def write_trajectory_json(path, trajectory: Trajectory) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(trajectory_to_json(trajectory), f, indent=2)
    return path


def read_trajectory_json(path) -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trajectory file not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"Malformed trajectory file {path}: {e}") from e
    return Trajectory(
        times=np.array(doc["times"]),
        states=np.array(doc["states"]),
        axes=[np.array(a) for a in doc["axes"]],
        method=doc.get("method", "bessel"),
        diagnostics={k: np.array(v) for k, v in doc.get("diagnostics", {}).items()},
        params=doc.get("params", {}),
    )


def write_diagnostics_csv(path, trajectories: Dict[str, Trajectory]) -> Path:
    """One row per step 1..steps with columns step, t and <label>_<diagnostic> for each run."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    labels = list(trajectories)
    reference = trajectories[labels[0]]
    columns = ["step", "t"] + [f"{label}_{key}" for label in labels
                               for key in trajectories[label].diagnostics]
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for step in range(1, len(reference.times)):
            row = {"step": step, "t": repr(float(reference.times[step]))}
            for label in labels:
                for key, values in trajectories[label].diagnostics.items():
                    row[f"{label}_{key}"] = repr(float(values[step]))
            writer.writerow(row)
    return path


def read_diagnostics_csv(path) -> Dict[str, NDArray[np.float64]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Diagnostics file not found: {path}")
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        rows = list(reader)
        columns = reader.fieldnames or []
    return {name: np.array([float(r[name]) for r in rows]) for name in columns}
