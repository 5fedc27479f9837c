"""Monte Carlo studies: miscoverage and width, power, and positivity sweeps.

Every run ``j`` draws its own paired dataset from a seed derived from
``(base_seed, j)``, cross-fits both arms on a shared fold split and records,
for each requested estimator, the difference interval and whether it covers
the true difference or rejects ``delta = 0``. Runs may execute in worker
processes; results are always reduced in run-index order, so a study is
bitwise reproducible regardless of the worker count.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from ._seeding import derive_seed
from .crossfit import crossfit_nuisances
from .errors import StudyRunError
from .estimators import METHODS, estimate_difference
from .folds import make_folds
from .nuisance import PROFILES, ClipBounds, nuisance_profile
from .simulation import DEFAULT_MC_N, SimConfig, simulate_paired, true_delta

KINDS = ("miscoverage", "power", "positivity")


@dataclass(frozen=True)
class StudyConfig:
    """Settings shared by all study kinds.

    ``clip_hi=None`` caps propensities at ``1 - sim.epsilon``. ``sim.n`` is
    overridden by ``n`` (or by the sweep's sample sizes).
    """

    m: int = 200
    n: int = 2000
    estimators: tuple = ("plugin", "ipw", "dr")
    profiles: tuple = ("super_learner",)
    K: int = 2
    alpha: float = 0.05
    sim: SimConfig = field(default_factory=lambda: SimConfig(n=2000))
    base_seed: int = 0
    mc_n: int = DEFAULT_MC_N
    clip_lo: float = 0.01
    clip_hi: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("a study needs m >= 2 runs")
        if not self.estimators:
            raise ValueError("the estimator set must be nonempty")
        bad = [e for e in self.estimators if e not in METHODS]
        if bad:
            raise ValueError(f"unknown estimators {bad}; expected a subset of {METHODS}")
        bad = [p for p in self.profiles if p not in PROFILES]
        if bad or not self.profiles:
            raise ValueError(f"profiles must be a nonempty subset of {PROFILES}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    def clip_for(self, sim):
        hi = 1.0 - sim.epsilon if self.clip_hi is None else self.clip_hi
        return ClipBounds(self.clip_lo, hi)

    def replace(self, **changes):
        return StudyConfig(**{**{f.name: getattr(self, f.name) for f in fields(self)}, **changes})

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["estimators"] = list(self.estimators)
        out["profiles"] = list(self.profiles)
        out["sim"] = self.sim.to_dict()
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown study config keys: {unknown}")
        if "sim" in d:
            sim = dict(d["sim"])
            sim.setdefault("n", d.get("n", 2000))
            sim_known = {f.name for f in fields(SimConfig)}
            extra = sorted(set(sim) - sim_known)
            if extra:
                raise ValueError(f"unknown sim config keys: {extra}")
            d["sim"] = SimConfig(**sim)
        for key in ("estimators", "profiles"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one estimator on one run."""

    run_index: int
    profile: str
    estimator: str
    delta_hat: float
    lo: float
    hi: float
    covered: bool
    reject: bool

    @property
    def width(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class CellSummary:
    """Aggregate over ``m`` runs for one (sweep point, profile, estimator)."""

    profile: str
    estimator: str
    m: int
    delta_true: float
    miscoverage: float
    miscoverage_se: float
    mean_width: float
    width_se: float
    rejection_rate: float
    rejection_se: float
    point: dict = field(default_factory=dict)

    def row(self):
        out = dict(self.point)
        out.update({k: v for k, v in asdict(self).items() if k != "point"})
        return out


@dataclass
class StudyResult:
    kind: str
    config: StudyConfig
    cells: list
    records: dict  # sweep point key -> list of RunRecord in run order
    extra: dict = field(default_factory=dict)

    def cell(self, profile="super_learner", estimator="dr", **point):
        for c in self.cells:
            if c.profile == profile and c.estimator == estimator and \
                    all(c.point.get(k) == v for k, v in point.items()):
                return c
        raise KeyError((profile, estimator, point))

    def to_csv(self):
        rows = [c.row() for c in self.cells]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def manifest(self):
        return {"kind": self.kind, "config": self.config.to_dict(), "version": __version__,
                "seed": self.config.base_seed, **self.extra}

    def write(self, out_dir, stem=None):
        os.makedirs(out_dir, exist_ok=True)
        stem = stem or self.kind
        csv_path = os.path.join(out_dir, f"{stem}.csv")
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        man_path = os.path.join(out_dir, f"{stem}.manifest.json")
        with open(man_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, man_path


def run_seed(base_seed, j):
    return derive_seed(base_seed, j)


def binomial_se(p, m):
    return math.sqrt(p * (1.0 - p) / m)


def _single_run(task):
    """Execute run ``j``; returns a list of RunRecord. Top-level for pickling."""
    cfg, sim, truth, j = task
    seed = run_seed(cfg.base_seed, j)
    try:
        pds, _ = simulate_paired(sim.replace(seed=seed), truth=truth)
        fit_seed = derive_seed(seed, 1)
        folds = make_folds(pds.n, cfg.K, fit_seed)
        clip = cfg.clip_for(sim)
        out = []
        for profile in cfg.profiles:
            pi_spec, mu_spec = nuisance_profile(profile, fit_seed)
            na = crossfit_nuisances(pds.a, pi_spec, mu_spec, clip=clip, seed=fit_seed, folds=folds)
            nb = crossfit_nuisances(pds.b, pi_spec, mu_spec, clip=clip, seed=fit_seed, folds=folds)
            for est in cfg.estimators:
                cr = estimate_difference(pds, na, nb, cfg.alpha, method=est)
                lo, hi = cr.ci
                out.append(RunRecord(j, profile, est, cr.delta_hat, lo, hi,
                                     bool(lo <= truth.delta <= hi), cr.reject_null))
        return out
    except Exception as exc:  # noqa: BLE001 - re-raised with the run index
        raise StudyRunError(j, exc) from exc


def execute_runs(cfg, sim, truth, progress=None):
    """All ``m`` runs for one sweep point, in run-index order."""
    tasks = [(cfg, sim, truth, j) for j in range(cfg.m)]
    if cfg.workers == 1:
        results = []
        for t in tasks:
            results.append(_single_run(t))
            if progress:
                progress(len(results), cfg.m)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_single_run, tasks, chunksize=max(1, cfg.m // (4 * cfg.workers))))
    return [rec for recs in results for rec in recs]


def summarize_records(records, profile, estimator, delta_true, point=None):
    sel = [r for r in records if r.profile == profile and r.estimator == estimator]
    m = len(sel)
    miss = sum(not r.covered for r in sel) / m
    rej = sum(r.reject for r in sel) / m
    widths = np.array([r.width for r in sel])
    return CellSummary(profile=profile, estimator=estimator, m=m, delta_true=delta_true,
                       miscoverage=miss, miscoverage_se=binomial_se(miss, m),
                       mean_width=math.fsum(widths) / m,
                       width_se=float(np.std(widths, ddof=1) / math.sqrt(m)),
                       rejection_rate=rej, rejection_se=binomial_se(rej, m),
                       point=dict(point or {}))


def _cells(cfg, records, delta_true, point):
    return [summarize_records(records, p, e, delta_true, point)
            for p in cfg.profiles for e in cfg.estimators]


def run_miscoverage_study(cfg: StudyConfig, truth=None, progress=None) -> StudyResult:
    """Miscoverage rate and mean width of each estimator's difference interval."""
    sim = cfg.sim.replace(n=cfg.n)
    truth = truth or true_delta(sim, cfg.mc_n)
    records = execute_runs(cfg, sim, truth, progress)
    return StudyResult("miscoverage", cfg, _cells(cfg, records, truth.delta, {"n": cfg.n}),
                       {cfg.n: records}, {"truth": truth.to_dict()})


def run_power_study(cfg: StudyConfig, mu_grid, n_grid, progress=None) -> StudyResult:
    """Rejection rate of ``delta = 0`` over a grid of boundary shifts and sizes."""
    cells, records, truths = [], {}, {}
    base = cfg.sim.replace(scenario="power_linear")
    for mu in mu_grid:
        truth = true_delta(base.replace(mu_shift=mu), cfg.mc_n)
        truths[repr(float(mu))] = truth.to_dict()
        for n in n_grid:
            sim = base.replace(mu_shift=mu, n=n)
            recs = execute_runs(cfg, sim, truth, progress)
            records[(mu, n)] = recs
            cells += _cells(cfg, recs, truth.delta, {"mu": float(mu), "n": int(n)})
    return StudyResult("power", cfg, cells, records, {"truth": truths,
                                                      "mu_grid": list(mu_grid), "n_grid": list(n_grid)})


def run_positivity_study(cfg: StudyConfig, epsilon_grid, progress=None) -> StudyResult:
    """Miscoverage of each estimator as the positivity floor ``epsilon`` varies.

    The truth is computed once: abstention never enters it, which is checked
    by recomputing it at every grid point.
    """
    if any(not 0 < e <= 0.5 for e in epsilon_grid):
        raise ValueError("epsilon grid must lie in (0, 0.5]")
    base = cfg.sim.replace(n=cfg.n)
    truth = true_delta(base, cfg.mc_n)
    cells, records = [], {}
    for eps in epsilon_grid:
        sim = base.replace(epsilon=eps)
        assert true_delta(sim, cfg.mc_n) == truth, "truth must not depend on epsilon"
        recs = execute_runs(cfg, sim, truth, progress)
        records[eps] = recs
        cells += _cells(cfg, recs, truth.delta, {"epsilon": float(eps)})
    return StudyResult("positivity", cfg, cells, records,
                       {"truth": truth.to_dict(), "epsilon_grid": list(epsilon_grid)})


def run_study(kind, cfg, progress=None, **grids):
    if kind == "miscoverage":
        return run_miscoverage_study(cfg, progress=progress)
    if kind == "power":
        return run_power_study(cfg, grids["mu_grid"], grids["n_grid"], progress)
    if kind == "positivity":
        return run_positivity_study(cfg, grids["epsilon_grid"], progress)
    raise ValueError(f"unknown study kind {kind!r}; expected one of {KINDS}")
