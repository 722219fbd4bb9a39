"""
Suite orchestration: turn an experiment config into verification jobs, run
them on a bounded thread pool and write the result files once at the end.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ...core.config import Config
from ...core.exceptions import ConfigError
from ...core.rng import derive_seed
from ...models.diffusion import DiffusionModel, GalerkinModel, Model
from ...models.presets import PresetRegistry, get_registry
from ...models.results import VerificationReport
from ...models.test_functions import TestFunction
from ..data.config_loader import ExperimentConfig, VerificationSpec
from ..data.exports import export_grid_function, export_matrix, export_plan
from ..data.persistence import ReportStore
from ..oracle.grid import Grid1D, build_kernel, solve_backward, verify_dd_convergence, verify_dd_identity
from ..simulation.engine import SimConfig
from . import verify

logger = logging.getLogger(__name__)

GRID_KINDS = {'sharpness', 'gradient_estimate', 'feller_modulus', 'heat_kernel_entropy', 'entropy_cost',
              'dd_identity'}
GALERKIN_KINDS = {'galerkin_convergence', 'galerkin_tail', 'galerkin_log_harnack', 'galerkin_dissipativity'}


@dataclass
class JobResult:
    """Reports of one job plus CSV exports (file name -> (kind, payload))"""
    reports: List[VerificationReport]
    exports: Dict[str, Tuple[str, Any]] = field(default_factory=dict)


@dataclass
class Job:
    name: str
    run: Callable[[int], JobResult]  # takes the job's derived seed


@dataclass
class SuiteResult:
    reports: List[VerificationReport]
    paths: List[Path]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def failures(self) -> List[VerificationReport]:
        return [r for r in self.reports if not r.passed]


def _fmt(value) -> str:
    if isinstance(value, (list, tuple)):
        return '(' + ','.join(f"{float(v):g}" for v in value) + ')'
    return f"{float(value):g}"


def _renamed(report: VerificationReport, name: str) -> VerificationReport:
    return VerificationReport(name, report.lhs, report.rhs, report.tolerance, report.metadata)


class SuiteBuilder:
    """Builds the jobs of one experiment"""

    def __init__(self, config: ExperimentConfig, model: Model):
        self.config = config
        self.model = model
        self.functions = {key: spec.build() for key, spec in config.test_functions.items()}
        g = config.grid
        self.grid = Grid1D(g.lo, g.hi, g.m)
        self.dt_pde = g.dt_pde

    # helpers

    def _sim(self, spec: VerificationSpec, seed: int, scheme: Optional[str] = None) -> SimConfig:
        dt = spec.dt or self.config.simulation.dt
        return SimConfig(t_final=dt, dt=dt, seed=seed, scheme=scheme or self.config.simulation.scheme)

    def _n(self, spec: VerificationSpec) -> int:
        return spec.n_samples or self.config.simulation.n_samples

    def _functions(self, spec: VerificationSpec) -> List[Tuple[str, TestFunction]]:
        if not spec.f:
            raise ConfigError(f"verification '{spec.label}' needs at least one test function")
        return [(key, self.functions[key]) for key in spec.f]

    def _pairs(self, spec: VerificationSpec, seed: int) -> List[Tuple[str, Any, Any]]:
        pairs = [(f"{_fmt(x)}->{_fmt(y)}", x, y) for x, y in spec.pairs]
        if spec.random_pairs:
            rng = np.random.default_rng(derive_seed(seed, 'pairs'))
            w = spec.pair_half_width
            for i in range(spec.random_pairs):
                x, y = rng.uniform(-w, w, size=(2, self.model.dim))
                pairs.append((f"pair{i:02d}", x.tolist(), y.tolist()))
        if not pairs:
            raise ConfigError(f"verification '{spec.label}' needs pairs or random_pairs")
        return pairs

    def _check_model(self, spec: VerificationSpec) -> None:
        if spec.kind in GRID_KINDS or (spec.kind == 'log_harnack' and spec.route == 'oracle'):
            if not isinstance(self.model, DiffusionModel) or self.model.dim != 1:
                raise ConfigError(f"verification '{spec.label}' ({spec.kind}) needs a one-dimensional model")
        if spec.kind in GALERKIN_KINDS and not isinstance(self.model, GalerkinModel):
            raise ConfigError(f"verification '{spec.label}' ({spec.kind}) needs a Galerkin preset")

    # job bodies

    def _log_harnack(self, spec: VerificationSpec, seed: int) -> JobResult:
        reports = []
        pairs = self._pairs(spec, seed)
        galerkin = spec.kind == 'galerkin_log_harnack'
        for key, f in self._functions(spec):
            for t in spec.times:
                sides = None
                if spec.route == 'oracle' and not galerkin:
                    sides = verify.oracle_sides(self.model, f, t, self.grid, self.dt_pde)
                for index, (label, x, y) in enumerate(pairs):
                    name = f"{spec.label}/{key}/t={t:g}/{label}"
                    if sides is not None:
                        report = verify.verify_log_harnack_oracle(self.model, float(np.ravel(x)[0]),
                                                                  float(np.ravel(y)[0]), t, f, self.grid,
                                                                  self.dt_pde, sides=sides)
                    else:
                        cell_seed = derive_seed(seed, name)
                        check = verify.verify_galerkin_log_harnack if galerkin else verify.verify_log_harnack
                        report = check(self.model, x, y, t, f, self._n(spec), self._sim(spec, cell_seed))
                    reports.append(_renamed(report, name))
        return JobResult(reports)

    def _coupling(self, spec: VerificationSpec, seed: int) -> JobResult:
        reports = []
        for t in spec.times:
            for label, x, y in self._pairs(spec, seed):
                name = f"{spec.label}/t={t:g}/{label}"
                report = verify.verify_coupling_contraction(self.model, x, y, t, self._n(spec),
                                                            self._sim(spec, derive_seed(seed, name)))
                reports.append(_renamed(report, name))
        return JobResult(reports)

    def _sharpness(self, spec: VerificationSpec, seed: int) -> JobResult:
        reports, exports = [], {}
        for key, f in self._functions(spec):
            for t in spec.times:
                name = f"{spec.label}/{key}/t={t:g}"
                report = verify.verify_log_harnack_sharpness(self.model, f, t, spec.y, self.grid, self.dt_pde,
                                                             tuple(spec.d_bounds))
                reports.append(_renamed(report, name))
                if spec.export:
                    u = solve_backward(self.model, f(self.grid.nodes), t, self.grid, self.dt_pde)
                    exports[f"{spec.label}_{key}_t{t:g}_ptf.csv"] = ('grid', (self.grid.nodes, u))
        return JobResult(reports, exports)

    def _gradient(self, spec: VerificationSpec, seed: int) -> JobResult:
        return JobResult([
            _renamed(verify.verify_gradient_estimate(self.model, f, t, self.grid, self.dt_pde, spec.window),
                     f"{spec.label}/{key}/t={t:g}")
            for key, f in self._functions(spec) for t in spec.times
        ])

    def _feller(self, spec: VerificationSpec, seed: int) -> JobResult:
        if not spec.y_list:
            raise ConfigError(f"verification '{spec.label}' needs y_list")
        return JobResult([
            _renamed(verify.verify_feller_modulus(self.model, f, t, spec.x, spec.y_list, self.grid, self.dt_pde),
                     f"{spec.label}/{key}/t={t:g}")
            for key, f in self._functions(spec) for t in spec.times
        ])

    def _heat_kernel(self, spec: VerificationSpec, seed: int) -> JobResult:
        reports, exports = [], {}
        for t in spec.times:
            kernel = build_kernel(self.model, t, self.grid, self.dt_pde)
            for offset in spec.x_offsets:
                index = self.grid.index_of(self.grid.center + offset)
                report = verify.verify_heat_kernel_entropy(kernel, self.model.K, t, index, name=self.model.name)
                reports.append(_renamed(report, f"{spec.label}/t={t:g}/offset={offset:g}"))
            if spec.export:
                exports[f"{spec.label}_t{t:g}_kernel.csv"] = ('matrix', kernel.kernel)
                exports[f"{spec.label}_t{t:g}_mu.csv"] = ('grid', (self.grid.nodes, kernel.mu))
        return JobResult(reports, exports)

    def _entropy_cost(self, spec: VerificationSpec, seed: int) -> JobResult:
        if not spec.densities:
            raise ConfigError(f"verification '{spec.label}' needs densities")
        reports, exports = [], {}
        for t in spec.times:
            kernel = build_kernel(self.model, t, self.grid, self.dt_pde)
            for density in spec.densities:
                f = verify.grid_density(kernel, density)
                report = verify.verify_entropy_cost(kernel, self.model.K, t, f, name=self.model.name, label=density)
                reports.append(_renamed(report, f"{spec.label}/t={t:g}/{density}"))
                if spec.export:
                    _, plan = verify.density_transport(kernel, f)
                    exports[f"{spec.label}_t{t:g}_{density}_plan.csv"] = ('plan', plan.plan)
        return JobResult(reports, exports)

    def _dd(self, spec: VerificationSpec, seed: int) -> JobResult:
        reports = []
        for key, f in self._functions(spec):
            for t in spec.times:
                s_list = spec.s_list or [t / 2.0, t]
                name = f"{spec.label}/{key}/t={t:g}"
                reports.append(_renamed(
                    verify_dd_identity(self.model, f, t, s_list, self.grid, self.dt_pde, window=spec.window), name))
                if spec.convergence:
                    reports.append(_renamed(
                        verify_dd_convergence(self.model, f, t, s_list, self.grid, self.dt_pde, window=spec.window),
                        f"{name}/convergence"))
        return JobResult(reports)

    def _dissipativity(self, spec: VerificationSpec, seed: int) -> JobResult:
        if spec.kind == 'galerkin_dissipativity':
            report = verify.verify_galerkin_dissipativity(self.model, spec.half_width, spec.budget, seed)
        else:
            report = verify.verify_dissipativity(self.model, spec.half_width, spec.budget, seed)
        return JobResult([_renamed(report, spec.label)])

    def _interpolation(self, spec: VerificationSpec, seed: int) -> JobResult:
        return JobResult([_renamed(verify.verify_interpolation_path(self.model.K, t), f"{spec.label}/t={t:g}")
                          for t in spec.times])

    def _galerkin(self, spec: VerificationSpec, seed: int) -> JobResult:
        if len(spec.levels) < 2:
            raise ConfigError(f"verification '{spec.label}' needs at least two levels")
        reports = []
        for t in spec.times:
            cfg = self._sim(spec, derive_seed(seed, f"t={t:g}"), scheme='exponential_euler')
            if spec.kind == 'galerkin_tail':
                report = verify.verify_galerkin_tail(self.model, spec.levels, spec.x0, t, self._n(spec), cfg)
            else:
                report = verify.verify_galerkin_convergence(self.model, spec.levels, spec.x0, t, self._n(spec), cfg,
                                                            threshold=spec.threshold, max_ratio=spec.max_ratio)
            reports.append(_renamed(report, f"{spec.label}/t={t:g}"))
        return JobResult(reports)

    def job(self, spec: VerificationSpec) -> Job:
        self._check_model(spec)
        bodies = {
            'log_harnack': self._log_harnack,
            'galerkin_log_harnack': self._log_harnack,
            'coupling_contraction': self._coupling,
            'sharpness': self._sharpness,
            'gradient_estimate': self._gradient,
            'feller_modulus': self._feller,
            'heat_kernel_entropy': self._heat_kernel,
            'entropy_cost': self._entropy_cost,
            'dd_identity': self._dd,
            'dissipativity': self._dissipativity,
            'galerkin_dissipativity': self._dissipativity,
            'interpolation_path': self._interpolation,
            'galerkin_convergence': self._galerkin,
            'galerkin_tail': self._galerkin,
        }
        body = bodies[spec.kind]
        return Job(name=spec.label, run=lambda seed: body(spec, seed))

    def jobs(self) -> List[Job]:
        return [self.job(spec) for spec in self.config.verifications]


def build_model(config: ExperimentConfig, registry: Optional[PresetRegistry] = None) -> Model:
    registry = registry or get_registry()
    spec = config.model
    return registry.build(spec.preset, dict(spec.params), K=spec.K, K_offset=spec.K_offset)


def run_suite_jobs(jobs: Sequence[Job], seed: int, workers: int = 1) -> List[JobResult]:
    """Run jobs with per-job seeds derived from (seed, job name); results in job order"""
    def run(job: Job) -> JobResult:
        result = job.run(derive_seed(seed, job.name))
        logger.info(f"Job {job.name}: {sum(r.passed for r in result.reports)}/{len(result.reports)} passed")
        return result

    if workers <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run, job) for job in jobs]
        return [future.result() for future in futures]


def _write_exports(out_dir: Path, exports: Dict[str, Tuple[str, Any]]) -> List[Path]:
    paths = []
    for filename in sorted(exports):
        kind, payload = exports[filename]
        target = out_dir / 'exports' / filename
        if kind == 'grid':
            paths.append(export_grid_function(target, *payload))
        elif kind == 'matrix':
            paths.append(export_matrix(target, payload))
        else:
            paths.append(export_plan(target, payload))
    return paths


def run_suite(config: ExperimentConfig, out_dir: Optional[str] = None, workers: Optional[int] = None,
              seed: Optional[int] = None, tolerance_scale: float = 1.0,
              registry: Optional[PresetRegistry] = None) -> SuiteResult:
    """Execute every verification of ``config`` and write the result files"""
    if not tolerance_scale > 0:
        raise ConfigError(f"tolerance scale must be positive, got {tolerance_scale}")
    seed = config.seed if seed is None else int(seed)
    workers = Config.WORKERS if workers is None else int(workers)
    if workers < 1:
        raise ConfigError(f"workers must be at least 1, got {workers}")
    target = Path(out_dir or config.output_dir or Config.OUTPUT_DIR)

    model = build_model(config, registry)
    jobs = SuiteBuilder(config, model).jobs()
    logger.info(f"Running '{config.name}': {len(jobs)} job(s) on {model.name} with {workers} worker(s), seed {seed}")
    results = run_suite_jobs(jobs, seed, workers)

    reports = [r for result in results for r in result.reports]
    if tolerance_scale != 1.0:
        reports = [r.rescaled(tolerance_scale) for r in reports]
    reports.sort(key=lambda r: r.name)
    exports = {k: v for result in results for k, v in result.exports.items()}

    store = ReportStore(str(target))
    paths = store.write_all(reports) + _write_exports(target, exports)
    passed = sum(r.passed for r in reports)
    logger.info(f"'{config.name}': {passed}/{len(reports)} verifications passed; results in {target}")
    return SuiteResult(reports=reports, paths=paths)
