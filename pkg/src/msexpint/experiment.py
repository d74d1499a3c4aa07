"""Experiment pipeline: basis construction, coarse integration and comparison with a reference."""

from __future__ import annotations

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import assemble_mass, assemble_stiffness
from .cem import MultiscaleBasis, build_basis, cache_header, load_basis, save_basis
from .config import ExperimentConfig
from .expint import integrate_system
from .fdtime import ThetaConfig, coarse_theta_integrate, reference_solution
from .grid import CoarseGrid, FineGrid, build_grids, default_layers
from .metrics import ErrorReport, attach_rates, error_norms
from .problems import catalogue, read_raster, write_field_dump
from .reduced import ReducedSystem, reduce
from .spectral import AuxiliarySpace, build_auxiliary

log = logging.getLogger(__name__)


@dataclass
class Multiscale:
    coarse: CoarseGrid
    aux: AuxiliarySpace
    basis: MultiscaleBasis
    system: ReducedSystem


class Experiment:
    """Shared state of one configuration: fine operators, reference, basis cache."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.fine = FineGrid(cfg.n_fine)
        kappa = read_raster(cfg.kappa_file, self.fine) if cfg.kappa_file else None
        self.problem = catalogue(cfg.example, self.fine, cfg.contrast, cfg.epsilon, cfg.seed, kappa,
                                 cfg.v_kappa, cfg.final_time)
        self.M = assemble_mass(self.fine)
        self.As = [assemble_stiffness(self.fine, k) for k in self.problem.kappas]
        self.u0 = [self.fine.interpolate(g) for g in self.problem.initial]
        self._reference = None
        self._ms: dict = {}
        self._locks: dict = {}
        self._lock = threading.Lock()

    @property
    def reaction(self):
        return self.problem.reaction

    def theta_config(self, scheme: str = "FDBE") -> ThetaConfig:
        return ThetaConfig.from_scheme(scheme, strategy=self.cfg.nonlinear, tol=self.cfg.picard_tol,
                                       max_iter=self.cfg.picard_max_iter)

    def layers_for(self, N: int) -> list[int]:
        if self.cfg.layers != "auto":
            return list(self.cfg.layers)
        kmax = max(float(np.max(k)) for k in self.problem.kappas)
        return [default_layers(1.0 / N, kmax, self.cfg.layer_constant, self.cfg.layer_rounding)]

    def reference(self) -> list[np.ndarray]:
        with self._lock:
            if self._reference is None:
                log.info("fine reference: backward Euler, %d steps", self.cfg.nt_ref)
                self._reference = reference_solution(
                    [self.M] * len(self.As), self.As, self.reaction, self.u0, self.cfg.nt_ref, self.problem.T,
                    self.theta_config("FDBE"),
                )
            return self._reference

    def multiscale(self, N: int, m: int) -> list[Multiscale]:
        key = (N, m)
        with self._lock:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._ms:
                self._ms[key] = [self._build(N, m, k) for k in range(len(self.As))]
            return self._ms[key]

    def _build(self, N: int, m: int, k: int) -> Multiscale:
        fine, coarse, pou = build_grids(self.cfg.n_fine, N)
        kappa = self.problem.kappas[k]
        L = self.cfg.basis_per_element
        aux = build_auxiliary(fine, coarse, pou, kappa, L)
        basis = None
        path = None
        if self.cfg.cache_dir:
            header = cache_header(fine, coarse, m, L, kappa)
            path = Path(self.cfg.cache_dir) / f"basis_n{fine.n}_N{N}_m{m}_L{L}_{header['kappa_sha256'][:12]}.npz"
            basis = load_basis(path, header)
        if basis is None:
            log.info("building basis H=1/%d m=%d species %d", N, m, k)
            basis = build_basis(fine, coarse, aux, kappa, m)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                save_basis(path, basis, header)
        return Multiscale(coarse, aux, basis, reduce(basis.R0, self.M, self.As[k]))

    def coarse_solution(self, N: int, m: int, scheme: str, Nt: int) -> list[np.ndarray]:
        """Lifted fine representation of the coarse solution at t = T."""
        ms = self.multiscale(N, m)
        systems = [x.system for x in ms]
        c0 = [s.project(u) for s, u in zip(systems, self.u0)]
        if scheme in ("EIRK1", "EIRK22"):
            cT, _ = integrate_system(systems, scheme, self.reaction, c0, Nt, self.problem.T)
        else:
            cT = coarse_theta_integrate(systems, self.theta_config(scheme), self.reaction, c0, Nt, self.problem.T)
        return [s.lift(c) for s, c in zip(systems, cT)]

    def reference_for(self, N: int, m: int) -> list[np.ndarray]:
        if self.cfg.reference == "fine":
            return self.reference()
        scheme, nt = self.cfg.reference.split(":")
        return self.coarse_solution(N, m, scheme, int(nt))

    def run_row(self, N: int, m: int, scheme: str, Nt: int) -> list[ErrorReport]:
        species = self.problem.species
        tag = (lambda s: s) if len(species) > 1 else (lambda s: "")
        base = dict(scheme=scheme, H=1.0 / N, m=m, Nt=Nt, basis=self.cfg.basis_per_element)
        try:
            ref = self.reference_for(N, m)
            sol = self.coarse_solution(N, m, scheme, Nt)
        except Exception as exc:  # a failing row is recorded, the sweep goes on
            log.error("row %s failed: %s", base, exc)
            return [ErrorReport(**base, status=f"failed: {exc}", species=tag(s)) for s in species]
        rows = []
        for s, A, r, u in zip(species, self.As, ref, sol):
            e0, ea, einf = error_norms(r, u, self.M, A)
            rows.append(ErrorReport(**base, eps_a=ea, eps_0=e0, eps_inf=einf, species=tag(s)))
        if self.cfg.dump_fields:
            out = Path(self.cfg.output)
            out.mkdir(parents=True, exist_ok=True)
            for s, u in zip(species, sol):
                write_field_dump(out / f"field_{scheme}_N{N}_m{m}_Nt{Nt}_{s}.txt", self.fine, u)
        return rows


def combos(exp: Experiment) -> list[tuple[int, int, str, int]]:
    cfg = exp.cfg
    return [(N, m, s, nt) for N in cfg.coarse for m in exp.layers_for(N) for s in cfg.scheme for nt in cfg.nt]


def run(cfg: ExperimentConfig, threads: int = 1, exp: Experiment | None = None) -> list[ErrorReport]:
    """All rows of a configuration, with convergence rates attached along the swept axis."""
    exp = exp or Experiment(cfg)
    jobs = combos(exp)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda j: exp.run_row(*j), jobs))
    else:
        parts = [exp.run_row(*j) for j in jobs]
    rows = [r for p in parts for r in p]
    if len(cfg.nt) > 1:
        attach_rates(rows, "Nt")
    elif len(cfg.coarse) > 1:
        attach_rates(rows, "H")
    return rows
