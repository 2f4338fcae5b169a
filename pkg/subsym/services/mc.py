"""Monte Carlo simulation of subordinators and subordinated Brownian paths.

Streams: paths are grouped in blocks of ``PATH_BLOCK_SIZE`` consecutive path
indices; block j draws from ``Generator(PCG64(SeedSequence(seed, spawn_key=(j,))))``.
The block size is a module constant, so the paths depend only on (model,
horizon, n_steps, n_paths, seed) and are bitwise identical for any worker
count or configuration.

Clock increments are exact: the stable clock by Kanter's representation of
the positive stable law, the tempered clock by exponential-tilting rejection
from the stable clock with the same C and alpha.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import structlog

from subsym.core.config import settings
from subsym.core.errors import DataIOError, OffGridError, PreconditionError, SimulationError
from subsym.schemas.models import Stable, TcbmModel, TemperedStable
from subsym.schemas.reports import EmpiricalCF
from subsym.services.models import validate

logger = structlog.get_logger(__name__)

SubordinatorLike = Union[Stable, TemperedStable]
RngLike = Union[np.random.Generator, int, None]

# Cap on candidates drawn per rejection round.
_MAX_CANDIDATES = 1 << 22

PATH_BLOCK_SIZE = 1024
PATH_COLUMNS = ["path_id", "t", "clock", "y"]


@dataclass(frozen=True, eq=False)
class PathSample:
    """One simulated path on the time grid: clock T(t_i) and Y(t_i)."""

    times: np.ndarray
    clock: np.ndarray
    y: np.ndarray


@dataclass(frozen=True, eq=False)
class PathSet(Sequence[PathSample]):
    """A batch of paths sharing one time grid.

    ``clock`` and ``y`` have shape (n_paths, n_steps + 1). Indexing yields
    ``PathSample`` views, so a PathSet can be used as a list of paths.
    """

    times: np.ndarray
    clock: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return self.y.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return PathSample(times=self.times, clock=self.clock[i], y=self.y[i])

    def __iter__(self) -> Iterator[PathSample]:
        return (self[i] for i in range(len(self)))

    @property
    def n_paths(self) -> int:
        return len(self)

    def time_index(self, t: float) -> int:
        """Index of ``t`` on the time grid.

        Raises:
            OffGridError: t is not a grid time.
        """
        hits = np.nonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12 * max(1.0, abs(t))))[0]
        if hits.size == 0:
            raise OffGridError(
                f"t = {t} is not on the simulation grid (step {self.times[1] - self.times[0]:.6g})",
                details={"t": t, "grid_start": float(self.times[0]), "grid_end": float(self.times[-1])},
            )
        return int(hits[0])


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ═══════════════════════════════════════════════════════════════════════
# CLOCK INCREMENTS
# ═══════════════════════════════════════════════════════════════════════

def _positive_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Kanter: S with E exp(-s S) = exp(-s^alpha)."""
    u = math.pi * (1.0 - rng.random(size))
    e = rng.standard_exponential(size)
    zolotarev = (
        np.sin(alpha * u) ** alpha * np.sin((1.0 - alpha) * u) ** (1.0 - alpha) / np.sin(u)
    ) ** (1.0 / (1.0 - alpha))
    return (zolotarev / e) ** ((1.0 - alpha) / alpha)


def _stable_increments(sub: Stable, dt: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # E exp(-s T_dt) = exp(-dt c s^alpha), c = A Gamma(1-alpha)/alpha
    return (dt * sub.exponent_scale) ** (1.0 / sub.alpha) * _positive_stable(sub.alpha, size, rng)


def _tempered_increments(sub: TemperedStable, dt: float, size: int, rng: np.random.Generator) -> np.ndarray:
    base = sub.untempered()
    acceptance = math.exp(-dt * base.exponent_scale * sub.lam**sub.alpha)
    out = np.empty(size)
    filled = 0
    for _ in range(settings.MC_MAX_REJECTION_ROUNDS):
        need = size - filled
        if need == 0:
            return out
        n_draw = min(_MAX_CANDIDATES, int(math.ceil(1.2 * need / max(acceptance, 1e-300))) + 16)
        candidates = _stable_increments(base, dt, n_draw, rng)
        keep = candidates[rng.random(n_draw) < np.exp(-sub.lam * candidates)][:need]
        out[filled:filled + keep.size] = keep
        filled += keep.size
    if filled == size:
        return out
    raise SimulationError(
        f"tempered-stable rejection sampler hit {settings.MC_MAX_REJECTION_ROUNDS} rounds "
        f"(acceptance probability {acceptance:.3e})",
        details={"acceptance": acceptance, "accepted": filled, "requested": size, "dt": dt},
    )


def sample_subordinator_increments(spec: SubordinatorLike, dt: float, size: int, rng: RngLike = None) -> np.ndarray:
    """``size`` independent increments of the clock over ``dt``, all > 0."""
    if not dt > 0:
        raise PreconditionError(f"dt must be > 0, got {dt}", details={"dt": dt})
    rng = _as_generator(rng)
    if isinstance(spec, Stable):
        draws = _stable_increments(spec, dt, size, rng)
    elif isinstance(spec, TemperedStable):
        draws = _tempered_increments(spec, dt, size, rng)
    else:
        raise TypeError(f"unsupported subordinator {type(spec).__name__}")
    return np.maximum(draws, np.finfo(float).tiny)


def sample_subordinator_increment(spec: SubordinatorLike, dt: float, rng: RngLike = None) -> float:
    return float(sample_subordinator_increments(spec, dt, 1, rng)[0])


# ═══════════════════════════════════════════════════════════════════════
# PATHS
# ═══════════════════════════════════════════════════════════════════════

def _block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(model: TcbmModel, dt: float, n_steps: int, size: int, rng: np.random.Generator):
    clock = np.zeros((size, n_steps + 1))
    y = np.zeros((size, n_steps + 1))
    mu, sigma, gamma = model.bm.mu, model.bm.sigma, model.gamma
    for step in range(1, n_steps + 1):
        d_clock = sample_subordinator_increments(model.subordinator, dt, size, rng)
        normals = rng.standard_normal(size)
        clock[:, step] = clock[:, step - 1] + d_clock
        y[:, step] = y[:, step - 1] + gamma * dt + mu * d_clock + sigma * np.sqrt(d_clock) * normals
    return clock, y


def simulate_paths(
    model: TcbmModel,
    horizon: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    *,
    workers: Optional[int] = None,
) -> PathSet:
    """Simulate Y_t = gamma t + mu T_t + sigma W(T_t) on a uniform grid of ``n_steps`` steps."""
    model = validate(model)
    if not (horizon > 0 and n_steps >= 1 and n_paths >= 1):
        raise PreconditionError(
            "simulate_paths requires horizon > 0, n_steps >= 1, n_paths >= 1",
            details={"horizon": horizon, "n_steps": n_steps, "n_paths": n_paths},
        )
    workers = settings.MC_WORKERS if workers is None else workers
    dt = horizon / n_steps

    starts = list(range(0, n_paths, PATH_BLOCK_SIZE))

    def run(block: int):
        size = min(PATH_BLOCK_SIZE, n_paths - starts[block])
        return _simulate_block(model, dt, n_steps, size, _block_generator(seed, block))

    if workers <= 1:
        results = [run(b) for b in range(len(starts))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(starts))))

    clock = np.concatenate([c for c, _ in results], axis=0)
    y = np.concatenate([v for _, v in results], axis=0)
    times = horizon * np.arange(n_steps + 1) / n_steps
    logger.info("paths_simulated", n_paths=n_paths, n_steps=n_steps, horizon=horizon, blocks=len(starts))
    return PathSet(times=times, clock=clock, y=y)


def simulate_terminal(model: TcbmModel, horizon: float, n_paths: int, seed: int, *, workers: Optional[int] = None) -> np.ndarray:
    """Exact draws of Y at ``horizon`` (one clock step)."""
    return simulate_paths(model, horizon, 1, n_paths, seed, workers=workers).y[:, -1]


# ═══════════════════════════════════════════════════════════════════════
# EMPIRICAL CHARACTERISTIC FUNCTION
# ═══════════════════════════════════════════════════════════════════════

MIN_ECF_PATHS = 100


def _fsum_mean_stderr(values: np.ndarray):
    n = values.size
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def empirical_cf(paths: PathSet, z: float, t: float) -> EmpiricalCF:
    """Sample mean of exp(i z Y_t) with componentwise standard errors.

    Raises:
        OffGridError: t is not a grid time.
        PreconditionError: fewer than 100 paths.
    """
    if len(paths) < MIN_ECF_PATHS:
        raise PreconditionError(
            f"empirical_cf needs at least {MIN_ECF_PATHS} paths, got {len(paths)}",
            details={"n_paths": len(paths)},
        )
    column = paths.y[:, paths.time_index(t)]
    phase = z * column
    re, stderr_re = _fsum_mean_stderr(np.cos(phase))
    im, stderr_im = _fsum_mean_stderr(np.sin(phase))
    return EmpiricalCF(
        z=z,
        t=t,
        n_paths=len(paths),
        estimate_re=re,
        estimate_im=im,
        stderr_re=stderr_re,
        stderr_im=stderr_im,
    )


# ═══════════════════════════════════════════════════════════════════════
# CSV
# ═══════════════════════════════════════════════════════════════════════

def paths_frame(paths: PathSet) -> pd.DataFrame:
    n_paths, n_times = paths.y.shape
    return pd.DataFrame(
        {
            "path_id": np.repeat(np.arange(n_paths), n_times),
            "t": np.tile(paths.times, n_paths),
            "clock": paths.clock.ravel(),
            "y": paths.y.ravel(),
        },
        columns=PATH_COLUMNS,
    )


def write_paths_csv(paths: PathSet, target) -> None:
    """Long-format CSV (path_id, t, clock, y) with 17 significant digits."""
    try:
        paths_frame(paths).to_csv(target, index=False, float_format="%.17g")
    except OSError as exc:
        raise DataIOError(f"cannot write paths CSV: {exc}", details={"target": str(target)}) from exc


def read_paths_csv(source: Union[str, Path]) -> PathSet:
    try:
        frame = pd.read_csv(source)
    except FileNotFoundError as exc:
        raise DataIOError(f"file not found: {source}", details={"path": str(source)}) from exc
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataIOError(f"cannot read paths CSV {source}: {exc}", details={"path": str(source)}) from exc

    missing: List[str] = [c for c in PATH_COLUMNS if c not in frame.columns]
    if missing:
        raise DataIOError(f"paths CSV {source} lacks columns {missing}", details={"missing": missing})

    frame = frame.sort_values(["path_id", "t"], kind="stable")
    n_paths = frame["path_id"].nunique()
    if n_paths == 0 or len(frame) % n_paths:
        raise DataIOError(f"paths CSV {source} has ragged paths", details={"rows": len(frame)})
    n_times = len(frame) // n_paths
    times = frame["t"].to_numpy()[:n_times]
    return PathSet(
        times=times,
        clock=frame["clock"].to_numpy().reshape(n_paths, n_times),
        y=frame["y"].to_numpy().reshape(n_paths, n_times),
    )
