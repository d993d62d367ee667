"""Experiment driver: data synthesis, noise, and CSV tables.

Clean data are produced by the fine-grid midpoint rule
``g(s_i) = sum_j dt H(s_i, t_j) f(t_j)`` so that ``max g`` (and therefore
the noise scale) is exactly reproducible.  Noise is drawn from numpy's
``default_rng(seed)`` (PCG64) as standard normals.
"""

from __future__ import annotations

import csv
import io
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError
from .galerkin import Assembly, build_matrix, delta_sq, make_grid
from .multiscale import MultiscaleSolver, relative_error
from .problem import KernelSpec, SourceSpec, source_eval
from .regparam import Method, SearchConfig, default_lambda_grid, functional_value, objective_value
from .spectral import numerical_rank, picard_table

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "ExperimentError",
    "load_config",
    "synthesize_data",
    "gen_noise",
    "run_experiment",
    "TABLES",
]

TABLES = ("delta", "spectrum", "functionals", "picard", "errors", "maxg")
DIAGNOSTIC_TABLES = ("delta", "spectrum", "picard")


class ExperimentError(RuntimeError):
    """A component failed; the message names the offending configuration cell."""


@dataclass(frozen=True)
class ExperimentConfig:
    d: float = 0.25
    source: SourceSpec = field(default_factory=SourceSpec.smooth_sine)
    N: int = 3000
    resolutions: Tuple[int, ...] = (1000,)
    methods: Tuple[Method, ...] = (Method.UPRE, Method.GCV)
    epsilon_list: Tuple[float, ...] = (1e-5,)
    nu: float = 0.001
    seeds: Tuple[int, ...] = (0,)
    output_dir: Path = Path("results")
    assembly: Assembly = Assembly.MIDPOINT
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        object.__setattr__(self, "resolutions", tuple(int(n) for n in self.resolutions))
        object.__setattr__(self, "methods", tuple(Method.parse(m) for m in self.methods))
        object.__setattr__(self, "epsilon_list", tuple(float(e) for e in self.epsilon_list))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        object.__setattr__(self, "assembly", Assembly.parse(self.assembly))
        if not self.nu >= 0:
            raise InputError(f"noise level nu must be nonnegative, got {self.nu!r}")
        if self.N < 2:
            raise InputError("fine size N must be at least 2")
        for n in self.resolutions:
            if n < 2 or self.N % n:
                raise InputError(f"resolutions: n={n} must be at least 2 and divide N={self.N}")
        if not self.seeds:
            raise InputError("need at least one seed")
        if any(not e > 0 for e in self.epsilon_list):
            raise InputError("epsilon values must be positive")

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec.gravity(self.d)


def _get(mapping: Mapping, key: str, default):
    return mapping[key] if key in mapping else default


def _source_from(table: Mapping) -> SourceSpec:
    family = str(_get(table, "family", "smooth_sine")).lower()
    if family == "smooth_sine":
        return SourceSpec.smooth_sine()
    if family == "piecewise_constant":
        return SourceSpec.piecewise_constant(
            _get(table, "breakpoints", (1.0 / 3.0, 2.0 / 3.0)),
            _get(table, "levels", (0.5, 1.5, 0.75)),
        )
    raise InputError(f"source.family: unknown family {family!r}")


def config_from_mapping(data: Mapping) -> ExperimentConfig:
    known = {"kernel", "source", "N", "resolutions", "methods", "epsilon_list", "noise",
             "output_dir", "assembly", "search"}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    base = ExperimentConfig()
    kernel = _get(data, "kernel", {})
    family = str(_get(kernel, "family", "gravity")).lower()
    if family != "gravity":
        raise InputError(f"kernel.family: only 'gravity' is supported by the driver, got {family!r}")
    noise = _get(data, "noise", {})
    search = _get(data, "search", {})
    return ExperimentConfig(
        d=float(_get(kernel, "d", base.d)),
        source=_source_from(_get(data, "source", {})),
        N=int(_get(data, "N", base.N)),
        resolutions=_get(data, "resolutions", base.resolutions),
        methods=_get(data, "methods", base.methods),
        epsilon_list=_get(data, "epsilon_list", base.epsilon_list),
        nu=float(_get(noise, "nu", base.nu)),
        seeds=_get(noise, "seeds", base.seeds),
        output_dir=_get(data, "output_dir", base.output_dir),
        assembly=_get(data, "assembly", base.assembly),
        search=SearchConfig(**search),
    )


def load_config(path) -> ExperimentConfig:
    """Read a TOML experiment file; relative ``output_dir`` is kept as written."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"malformed config {path}: {exc}") from exc
    return config_from_mapping(data)


def synthesize_data(spec: KernelSpec, source: SourceSpec, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """Clean samples ``g(s_i)`` and the true ``f(t_j)`` on the fine midpoint grid."""
    grid = make_grid(N)
    f = np.asarray(source_eval(source, grid.midpoints), dtype=float)
    A = build_matrix(spec, grid, grid, Assembly.MIDPOINT)
    # A = sqrt(ds dt) H and ds == dt, so A f = sum_j dt H(s_i, t_j) f(t_j)
    g = A @ f
    return g, f


def gen_noise(g_clean, nu: float, seed: int) -> Tuple[np.ndarray, float]:
    """Add ``nu * max(g) * e`` with ``e`` standard normal; returns data and ``zeta_e``."""
    g_clean = np.asarray(g_clean, dtype=float)
    if not nu >= 0:
        raise InputError(f"noise level nu must be nonnegative, got {nu!r}")
    if nu == 0:
        return g_clean.copy(), 0.0
    zeta_e = nu * float(np.max(g_clean))
    e = np.random.default_rng(seed).standard_normal(g_clean.shape[0])
    return g_clean + zeta_e * e, zeta_e


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise ExperimentError(f"cannot write {path}: {exc}") from exc
    return path


class _Context:
    def __init__(self, label: str):
        self.label = label

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, ExperimentError):
            raise ExperimentError(f"[{self.label}] {type(exc).__name__}: {exc}") from exc
        return False


class Experiment:
    """Lazily computed pieces of one configured experiment."""

    def __init__(self, cfg: ExperimentConfig, solver: Optional[MultiscaleSolver] = None):
        self.cfg = cfg
        self.spec = cfg.kernel
        self.solver = solver or MultiscaleSolver(self.spec, cfg.N, cfg.assembly)
        self.g_clean, self.truth = synthesize_data(self.spec, cfg.source, cfg.N)
        self._data: Dict[int, Tuple[np.ndarray, float]] = {}

    def data(self, seed: int) -> Tuple[np.ndarray, float]:
        if seed not in self._data:
            self._data[seed] = gen_noise(self.g_clean, self.cfg.nu, seed)
        return self._data[seed]

    def zeta(self, seed: int) -> Optional[float]:
        z = self.data(seed)[1]
        return z if z > 0 else None

    def ell(self, n: int) -> int:
        return self.cfg.N // n

    def delta_rows(self):
        cfg = self.cfg
        for n in sorted(set(cfg.resolutions) | {cfg.N}):
            grid = make_grid(n)
            for assembly in (Assembly.MIDPOINT, Assembly.EXACT):
                with _Context(f"delta n={n} assembly={assembly.value}"):
                    A = build_matrix(self.spec, grid, grid, assembly)
                    yield (n, assembly.value, delta_sq(self.spec, A))

    def spectrum_rows(self):
        cfg = self.cfg
        for n in sorted(set(cfg.resolutions)):
            with _Context(f"spectrum n={n}"):
                sigma = self.solver.coarse_factors(self.ell(n)).sigma
                ranks = [numerical_rank(sigma, e) for e in cfg.epsilon_list]
                for i, s in enumerate(sigma, start=1):
                    yield (n, i, s, *ranks)

    def picard_rows(self):
        cfg = self.cfg
        for n in sorted(set(cfg.resolutions)):
            for seed in cfg.seeds:
                with _Context(f"picard n={n} seed={seed}"):
                    g, _ = self.data(seed)
                    sys_n = self.solver.coarse_system(g, self.ell(n))
                    for row in picard_table(sys_n):
                        yield (n, seed, *row)

    def functional_rows(self):
        cfg = self.cfg
        seed = cfg.seeds[0]
        g, _ = self.data(seed)
        zeta_e = self.zeta(seed)
        for n in sorted(set(cfg.resolutions)):
            ell, ds = self.ell(n), 1.0 / n
            for method in cfg.methods:
                for eps in cfg.epsilon_list:
                    with _Context(f"functionals n={n} method={method.value} epsilon={eps}"):
                        p = self.solver.rank(ell, eps)
                        if p < 1:
                            raise InputError(f"no singular value exceeds epsilon={eps}")
                        sys_n = self.solver.coarse_system(g, ell, zeta_e)
                        search = cfg.search.with_zeta_sq(1.0 if zeta_e is None else ds)
                        grid = default_lambda_grid(sys_n.sigma, p, search)
                        vals = functional_value(method, grid, sys_n, p, search, n)
                        objs = objective_value(method, grid, sys_n, p, search, n)
                        for lam, v, o in zip(grid, vals, objs):
                            yield (n, method.value, eps, seed, lam, v, o)

    def error_rows(self):
        cfg = self.cfg
        for n in sorted(set(cfg.resolutions)):
            for method in cfg.methods:
                for eps in cfg.epsilon_list:
                    for seed in cfg.seeds:
                        label = f"errors n={n} method={method.value} epsilon={eps} seed={seed}"
                        with _Context(label):
                            sol = self.solve(n, method, eps, seed)
                            est = sol.estimate
                            yield (
                                n, method.value, eps, seed,
                                relative_error(sol, self.truth),
                                est.lambda_tilde, est.lambda_, sol.lambda_tilde_used,
                                sol.p_used, est.grid_hit_boundary, sol.max_abs,
                            )

    def solve(self, n: int, method, eps: float, seed: int):
        g, _ = self.data(seed)
        return self.solver.solve(g, self.ell(n), eps, method, self.cfg.search, self.zeta(seed))

    def solution_rows(self):
        cfg = self.cfg
        t = self.solver.grid.midpoints
        for n in sorted(set(cfg.resolutions)):
            for method in cfg.methods:
                for eps in cfg.epsilon_list:
                    for seed in cfg.seeds:
                        label = f"solve n={n} method={method.value} epsilon={eps} seed={seed}"
                        with _Context(label):
                            sol = self.solve(n, method, eps, seed)
                        for k, (tk, fk, ft) in enumerate(zip(t, sol.values, self.truth), start=1):
                            yield (n, method.value, eps, seed, k, tk, fk, ft)


def _headers(cfg: ExperimentConfig) -> Dict[str, List[str]]:
    return {
        "delta": ["n", "assembly", "delta_sq"],
        "spectrum": ["n", "i", "sigma"] + [f"p[eps={_fmt(e)}]" for e in cfg.epsilon_list],
        "functionals": ["n", "method", "epsilon", "seed", "lambda_grid_point", "value", "objective"],
        "picard": ["n", "seed", "i", "sigma", "abs_beta", "ratio"],
        "errors": [
            "n", "method", "epsilon", "seed", "relative_error", "lambda_tilde",
            "lambda", "lambda_used", "p", "boundary", "max_abs_f",
        ],
        "maxg": ["N", "max_g"],
        "solution": ["n", "method", "epsilon", "seed", "k", "t", "f", "f_true"],
    }


def run_experiment(cfg: ExperimentConfig, tables: Optional[Sequence[str]] = None,
                   experiment: Optional[Experiment] = None) -> Dict[str, Path]:
    """Write the requested tables (all of them by default) into ``cfg.output_dir``.

    With an empty method list the method-dependent tables are skipped and
    only the diagnostic ones are written.
    """
    if tables is None:
        tables = TABLES
    unknown = set(tables) - set(TABLES) - {"solution"}
    if unknown:
        raise InputError(f"unknown tables: {', '.join(sorted(unknown))}")
    if not cfg.methods:
        tables = [t for t in tables if t in DIAGNOSTIC_TABLES]
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExperimentError(f"cannot create output directory {out}: {exc}") from exc
    exp = experiment or Experiment(cfg)
    headers = _headers(cfg)
    producers = {
        "delta": exp.delta_rows,
        "spectrum": exp.spectrum_rows,
        "functionals": exp.functional_rows,
        "picard": exp.picard_rows,
        "errors": exp.error_rows,
        "maxg": lambda: [(cfg.N, float(np.max(exp.g_clean)))],
        "solution": exp.solution_rows,
    }
    written = {}
    for name in tables:
        rows = list(producers[name]())
        written[name] = _write_csv(out / f"{name}.csv", headers[name], rows)
    return written


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Replace config fields with non-None overrides."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg


def describe(cfg: ExperimentConfig) -> str:
    return (
        f"d={cfg.d} N={cfg.N} resolutions={list(cfg.resolutions)} "
        f"methods={[m.value for m in cfg.methods]} epsilon={list(cfg.epsilon_list)} "
        f"nu={cfg.nu} seeds={list(cfg.seeds)} assembly={cfg.assembly.value}"
    )
