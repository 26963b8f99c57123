"""Convergence experiments: configuration, refinement sweeps and report files."""

import contextlib
import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

from .dg_stepper import graded_mesh, run
from .error_norms import Level, discrete_max_error, rate_table
from .errors import FvSubdiffError, InvalidParameterError, ResourceLimitError
from .fv_assembly import build_operators
from .linalg import DEFAULT_TOL
from .mesh import build_uniform_mesh
from .problems import paper_problem

log = logging.getLogger(__name__)

MODES = ("spatial", "temporal", "single")


@dataclass
class ExperimentConfig:
    """One experiment; every field can be set from a JSON file or a CLI flag.

    ``gamma=None`` means ``2 / alpha``, except in temporal mode where it means 1.  ``fine_factor`` sets the
    evaluation node set to the vertices of the ``fine_factor * max(M)`` mesh.
    """

    mode: str = "spatial"
    alpha: float = 0.4
    gamma: Optional[float] = None
    T: float = 1.0
    M: Tuple[int, ...] = (10, 20, 40)
    N: Tuple[int, ...] = (10, 20, 40)
    ratio: float = 0.5
    m: int = 10
    fine_factor: int = 2
    out_dir: Optional[str] = None
    deterministic: bool = False
    tol: float = DEFAULT_TOL
    initial: str = "projection"
    max_memory_bytes: float = 2e9
    max_work: float = 5e11

    def __post_init__(self):
        self.M = tuple(int(v) for v in _as_tuple(self.M))
        self.N = tuple(int(v) for v in _as_tuple(self.N))
        self.validate()

    @property
    def grading(self):
        if self.gamma is not None:
            return float(self.gamma)
        return 1.0 if self.mode == "temporal" else 2.0 / self.alpha

    def validate(self):
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.grading >= 1.0:
            raise InvalidParameterError(f"grading parameter must be >= 1, got {self.grading}")
        if not self.T > 0:
            raise InvalidParameterError(f"final time must be positive, got {self.T}")
        for name in ("M", "N"):
            ladder = getattr(self, name)
            if not ladder:
                raise InvalidParameterError(f"{name} ladder is empty")
            if any(b <= a for a, b in zip(ladder[:-1], ladder[1:])):
                raise InvalidParameterError(f"{name} ladder must increase strictly: {ladder}")
        if min(self.M) < 2 or min(self.N) < 1:
            raise InvalidParameterError("need M >= 2 and N >= 1")
        if self.mode == "spatial" and not 0.0 < self.ratio < 1.0:
            raise InvalidParameterError(f"coupling ratio must lie in (0, 1), got {self.ratio}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidParameterError(f"m must be a positive integer, got {self.m}")
        if int(self.fine_factor) != self.fine_factor or self.fine_factor < 1:
            raise InvalidParameterError(f"fine_factor must be a positive integer, got {self.fine_factor}")
        if not self.tol > 0:
            raise InvalidParameterError(f"tolerance must be positive, got {self.tol}")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise FvSubdiffError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        out = asdict(self)
        out["M"], out["N"] = list(self.M), list(self.N)
        return out


def _as_tuple(v):
    if isinstance(v, (int, float)):
        return (v,)
    return tuple(v)


def max_step(N, gamma, T=1.0):
    """Largest step of the graded mesh, which is the last one."""
    return T * (1.0 - ((N - 1) / N) ** gamma)


def choose_N(alpha, M, gamma, ratio, T=1.0):
    """Smallest N with ``k_max**(1+alpha) / h**2 <= ratio`` for ``h = sqrt(2)/M``."""
    h2 = 2.0 / M**2
    ok = lambda N: max_step(N, gamma, T) ** (1.0 + alpha) / h2 <= ratio
    # k_max ~ gamma T / N bounds the search from above
    hi = max(1, int(math.ceil(gamma * T / (ratio * h2) ** (1.0 / (1.0 + alpha)))) + 1)
    while not ok(hi):
        hi *= 2
    lo = 1
    if ok(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def estimate_cost(M, N):
    """(history memory in bytes, history work in flops) of one run."""
    ndof = (M - 1) ** 2
    return 2.0 * N * ndof * 8.0, float(N) ** 2 * ndof


def check_resources(config, pairs):
    for M, N in pairs:
        mem, work = estimate_cost(M, N)
        if mem > config.max_memory_bytes or work > config.max_work:
            raise ResourceLimitError(
                f"run M={M}, N={N} needs about {mem / 1e9:.2f} GB of history and {work:.2e} flops; "
                f"ceilings are {config.max_memory_bytes / 1e9:.2f} GB and {config.max_work:.2e} "
                "(raise max_memory_bytes / max_work to allow it)"
            )


@contextlib.contextmanager
def determinism(enabled):
    """Pin BLAS/LAPACK to one thread so reductions are ordered identically."""
    if not enabled:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        yield


def _evaluate(config, problem, M, N, points):
    t0 = time.perf_counter()
    ops = build_operators(build_uniform_mesh(M))
    sol = run(problem, M, N, config.grading, config.T, config.tol, config.initial, ops=ops)
    err = discrete_max_error(sol, problem, points, config.m, ops.mesh)
    wall = time.perf_counter() - t0
    log.info("M=%d N=%d gamma=%g error=%.4e (%.1fs)", M, N, config.grading, err, wall)
    return Level(M, N, config.grading, err, wall_time=wall)


def _metadata(config, **extra):
    meta = config.to_dict()
    meta.pop("out_dir", None)
    meta["gamma"] = config.grading
    meta["problem"] = "u = t^alpha sin(pi x) sin(pi y)"
    meta.update(extra)
    return meta


def run_spatial_experiment(config):
    """Refine M with N tied to M through the coupling ratio."""
    if config.mode != "spatial":
        raise InvalidParameterError("spatial experiment needs mode='spatial'")
    problem = paper_problem(config.alpha, config.T)
    pairs = [(M, choose_N(config.alpha, M, config.grading, config.ratio, config.T)) for M in config.M]
    check_resources(config, pairs)
    points = build_uniform_mesh(config.fine_factor * max(config.M)).vertices
    with determinism(config.deterministic):
        levels = [_evaluate(config, problem, M, N, points) for M, N in pairs]
    meta = _metadata(config, N_chosen=[N for _, N in pairs], fine_mesh=config.fine_factor * max(config.M))
    return rate_table(levels, "spatial", config.alpha, meta)


def run_temporal_experiment(config):
    """Refine N at the single spatial mesh ``max(M)``."""
    if config.mode != "temporal":
        raise InvalidParameterError("temporal experiment needs mode='temporal'")
    problem = paper_problem(config.alpha, config.T)
    M = max(config.M)
    check_resources(config, [(M, N) for N in config.N])
    points = build_uniform_mesh(config.fine_factor * M).vertices
    with determinism(config.deterministic):
        levels = [_evaluate(config, problem, M, N, points) for N in config.N]
    meta = _metadata(config, fine_mesh=config.fine_factor * M)
    return rate_table(levels, "temporal", config.alpha, meta)


def run_single(config):
    """One solve at ``(max(M), max(N))``; returns a one-level report."""
    problem = paper_problem(config.alpha, config.T)
    M, N = max(config.M), max(config.N)
    check_resources(config, [(M, N)])
    points = build_uniform_mesh(config.fine_factor * M).vertices
    with determinism(config.deterministic):
        level = _evaluate(config, problem, M, N, points)
    return rate_table([level], "single", config.alpha, _metadata(config, fine_mesh=config.fine_factor * M))


def run_experiment(config):
    return {"spatial": run_spatial_experiment, "temporal": run_temporal_experiment, "single": run_single}[
        config.mode
    ](config)


# ---------------------------------------------------------------------------
# report files


def _fmt(v):
    return "" if v is None else repr(float(v))


def report_rows(report):
    key = report.refined
    return [(getattr(lv, key), lv.error, lv.rate) for lv in report.levels]


def write_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([report.refined, "error", "rate"])
        for ref, err, rate in report_rows(report):
            w.writerow([ref, _fmt(err), _fmt(rate)])


def markdown_table(report):
    key = report.refined
    lines = [
        f"alpha = {report.alpha:g}, gamma = {report.levels[0].gamma:g}",
        "",
        f"| {key} | N | error | rate | time (s) |" if key == "M" else f"| {key} | M | error | rate | time (s) |",
        "|---:|---:|---:|---:|---:|",
    ]
    for lv in report.levels:
        other = lv.N if key == "M" else lv.M
        rate = "" if lv.rate is None else f"{lv.rate:.4f}"
        lines.append(f"| {getattr(lv, key)} | {other} | {lv.error:.4e} | {rate} | {lv.wall_time:.1f} |")
    return "\n".join(lines) + "\n"


def plot_points(report):
    """(x, error) with x = h for spatial sweeps and x = max step otherwise."""
    out = []
    for lv in report.levels:
        if report.kind == "spatial":
            x = math.sqrt(2.0) / lv.M
        else:
            x = graded_mesh(lv.N, lv.gamma, report.metadata.get("T", 1.0)).k
        out.append((x, lv.error))
    return out


def emit_reports(report, out_dir, stem):
    """Write ``stem.csv``, ``stem.md``, ``stem.plotdat`` and ``stem.json`` into ``out_dir``."""
    if not report.levels:
        raise InvalidParameterError("cannot emit an empty report")
    out = Path(out_dir)
    paths = {ext: out / f"{stem}.{ext}" for ext in ("csv", "md", "plotdat", "json")}
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_csv(report, paths["csv"])
        paths["md"].write_text(markdown_table(report))
        paths["plotdat"].write_text("".join(f"{x!r} {y!r}\n" for x, y in plot_points(report)))
        paths["json"].write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise FvSubdiffError(f"cannot write report to {exc.filename or out}: {exc.strerror or exc}") from exc
    return paths
