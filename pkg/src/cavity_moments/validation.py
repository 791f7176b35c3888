"""Cross-engine agreement suites behind ``cavity-moments validate``."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .closed_forms import closed_form_g2, closed_form_intensity
from .moments import solve_moments
from .oracle import converge_truncation
from .params import SystemParams
from .sweep import default_start_cutoff

__all__ = [
    "SuiteResult",
    "random_params",
    "oracle_grid",
    "QUICK_ORACLE_GRID",
    "FULL_ORACLE_GRID",
    "SUITES",
    "run_suites",
]

FIG2 = SystemParams(n_emitters=20, g=10.0, epsilon=20.0, kappa=1.0)

FULL_ORACLE_GRID = {
    "n_emitters": (1, 2, 3),
    "epsilon": (0.0, 0.2, 0.5),
    "g": (0.5, 2.0),
    "kappa": (0.3, 1.0, 3.0),
    "delta": (-2.0, 0.0, 2.0),
    "phi": (0.0, math.pi / 4, math.pi / 2),
}
QUICK_ORACLE_GRID = {
    "n_emitters": (1, 2),
    "epsilon": (0.0, 0.5),
    "g": (0.5, 2.0),
    "kappa": (1.0, 3.0),
    "delta": (-2.0, 2.0),
    "phi": (0.0, math.pi / 4),
}


@dataclass(frozen=True)
class SuiteResult:
    name: str
    max_deviation: float
    tolerance: float
    cases: int
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag} {self.name:<22} cases={self.cases:<4d} max_dev={self.max_deviation:.3e} "
                f"tol={self.tolerance:.1e} time={self.seconds:.2f}s")


def rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def random_params(rng: np.random.Generator, n_max: int = 30) -> SystemParams:
    """A random full parameter set in units of Gamma."""
    return SystemParams(
        n_emitters=int(rng.integers(1, n_max + 1)),
        g=float(rng.uniform(0.0, 10.0)),
        epsilon=float(rng.uniform(0.0, 20.0)),
        delta=float(rng.uniform(-10.0, 10.0)),
        kappa=float(10 ** rng.uniform(-2, 1)),
        phi=float(rng.uniform(0.0, 2 * math.pi)),
    )


def oracle_grid(grid: dict):
    keys = list(grid)
    for values in itertools.product(*(grid[k] for k in keys)):
        yield SystemParams(**dict(zip(keys, values)))


def suite_closed_form_g2(cases: int = 200, seed: int = 1) -> tuple[float, int]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        p = SystemParams(n_emitters=int(rng.integers(1, 51)), g=float(rng.uniform(0.1, 10)),
                         kappa=float(10 ** rng.uniform(-3, 3)))
        worst = max(worst, rel(solve_moments(p).g2, closed_form_g2(p)))
    return worst, cases


def suite_closed_form_intensity(cases: int = 200, seed: int = 2) -> tuple[float, int]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        p = random_params(rng, n_max=50)
        worst = max(worst, rel(solve_moments(p).intensity, closed_form_intensity(p)))
    return worst, cases


def suite_oracle(grid: dict, growth: float = 1.25) -> tuple[float, int]:
    worst, n = 0.0, 0
    for p in oracle_grid(grid):
        obs, _ = converge_truncation(p, start_n_max=default_start_cutoff(p), growth=growth)
        ref = solve_moments(p)
        worst = max(worst, rel(obs.intensity, ref.intensity), rel(obs.g2, ref.g2))
        n += 1
    return worst, n


def suite_conjugation(cases: int = 100, seed: int = 3) -> tuple[float, int]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        p = random_params(rng)
        mirrored = p.replace(delta=-p.delta, phi=-p.phi)
        worst = max(worst, rel(solve_moments(mirrored).g2, solve_moments(p).g2))
    return worst, cases


def suite_phase_invariance() -> tuple[float, int]:
    phases = (0.0, math.pi / 4, math.pi / 2, math.pi, 3 * math.pi / 2)
    values = [solve_moments(FIG2.replace(phi=phi)).intensity for phi in phases]
    return (max(values) - min(values)) / values[0], len(phases)


def suite_decoupling() -> tuple[float, int]:
    base = SystemParams(n_emitters=5, epsilon=0.0, delta=1.0, kappa=2.0)
    values = [solve_moments(base.replace(g=g, phi=phi)).g2 for g in (0.1, 1.0, 10.0) for phi in (0.0, 1.0, 2.0)]
    return (max(values) - min(values)) / values[0], len(values)


def suite_scaling() -> tuple[float, int]:
    """Worst ratio deviation, each normalized by its own tolerance band (pass <= 1)."""
    base = SystemParams(epsilon=0.0, delta=0.0, kappa=1.0)
    small = solve_moments(base.replace(n_emitters=20))
    large = solve_moments(base.replace(n_emitters=40))
    two_photon_dev = abs(large.two_photon / small.two_photon / 16 - 1) / 0.15
    intensity_dev = abs(large.intensity / small.intensity / 4 - 1) / 0.05
    return max(two_photon_dev, intensity_dev), 2


SUITES = {
    "closed_form_g2": (suite_closed_form_g2, 1e-10),
    "closed_form_intensity": (suite_closed_form_intensity, 1e-10),
    "oracle_grid": (None, 1e-6),
    "conjugation_symmetry": (suite_conjugation, 1e-10),
    "phase_invariance": (suite_phase_invariance, 1e-10),
    "epsilon0_decoupling": (suite_decoupling, 1e-10),
    "collectivity_scaling": (suite_scaling, 1.0),
}


def run_suites(full_oracle: bool = False, names=None, report=None) -> list[SuiteResult]:
    """Run the named suites (default: all); ``report`` is called with each line."""
    results = []
    for name, (func, tol) in SUITES.items():
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        if name == "oracle_grid":
            dev, n = suite_oracle(FULL_ORACLE_GRID if full_oracle else QUICK_ORACLE_GRID)
        else:
            dev, n = func()
        res = SuiteResult(name, dev, tol, n, time.perf_counter() - t0)
        results.append(res)
        if report is not None:
            report(res.line())
    return results
