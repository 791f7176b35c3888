"""Closed steady-state moment hierarchy for the cavity field.

A correlator ``<R_z^k a^{dag p} a^q>`` is keyed by the triple ``(k, p, q)``.
Pure spin keys ``(k, 0, 0)`` are not unknowns: in the steady state they are
the constants returned by :func:`~cavity_moments.params.spin_moments`, which
is what closes the hierarchy into a finite 22x22 linear system.

Only thirteen equations are transcribed (:func:`printed_equations`); the
other nine are generated by Hermitian conjugation, see :func:`conjugate_equation`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import (
    ConvergenceError,
    NearZeroIntensityError,
    NumericalError,
    SingularMatrixError,
    SingularRegimeError,
)
from .params import SpinMoments, SystemParams, spin_moments

__all__ = [
    "MomentIndex",
    "MomentVector",
    "MomentSystem",
    "Observables",
    "printed_equations",
    "conjugate_key",
    "conjugate_equation",
    "moment_equations",
    "build_moment_system",
    "solve_steady_state",
    "solve_by_tiers",
    "observables",
    "evolve_moments",
    "solve_moments",
]


class MomentIndex(enum.IntEnum):
    """The 22 unknowns, in dependency-tier order."""

    A = 0
    AD = 1
    RZ_A = 2
    RZ_AD = 3
    RZ2_A = 4
    RZ2_AD = 5
    RZ3_A = 6
    RZ3_AD = 7
    A2 = 8
    AD2 = 9
    RZ_A2 = 10
    RZ_AD2 = 11
    RZ2_A2 = 12
    RZ2_AD2 = 13
    AD_A = 14
    RZ_AD_A = 15
    RZ2_AD_A = 16
    AD_A2 = 17
    AD2_A = 18
    RZ_AD_A2 = 19
    RZ_AD2_A = 20
    AD2_A2 = 21

    @property
    def key(self) -> tuple[int, int, int]:
        return _KEYS[self]

    @property
    def conj(self) -> "MomentIndex":
        return KEY_TO_INDEX[conjugate_key(self.key)]

    @property
    def tier(self) -> int:
        # total field degree p + q
        k, p, q = self.key
        return p + q

    @property
    def label(self) -> str:
        k, p, q = self.key
        parts = []
        if k:
            parts.append("Rz" if k == 1 else f"Rz^{k}")
        if p:
            parts.append("a+" if p == 1 else f"a+^{p}")
        if q:
            parts.append("a" if q == 1 else f"a^{q}")
        return "<" + " ".join(parts) + ">"

    @classmethod
    def from_key(cls, key) -> "MomentIndex":
        return KEY_TO_INDEX[tuple(key)]


_KEYS = {
    MomentIndex.A: (0, 0, 1),
    MomentIndex.AD: (0, 1, 0),
    MomentIndex.RZ_A: (1, 0, 1),
    MomentIndex.RZ_AD: (1, 1, 0),
    MomentIndex.RZ2_A: (2, 0, 1),
    MomentIndex.RZ2_AD: (2, 1, 0),
    MomentIndex.RZ3_A: (3, 0, 1),
    MomentIndex.RZ3_AD: (3, 1, 0),
    MomentIndex.A2: (0, 0, 2),
    MomentIndex.AD2: (0, 2, 0),
    MomentIndex.RZ_A2: (1, 0, 2),
    MomentIndex.RZ_AD2: (1, 2, 0),
    MomentIndex.RZ2_A2: (2, 0, 2),
    MomentIndex.RZ2_AD2: (2, 2, 0),
    MomentIndex.AD_A: (0, 1, 1),
    MomentIndex.RZ_AD_A: (1, 1, 1),
    MomentIndex.RZ2_AD_A: (2, 1, 1),
    MomentIndex.AD_A2: (0, 1, 2),
    MomentIndex.AD2_A: (0, 2, 1),
    MomentIndex.RZ_AD_A2: (1, 1, 2),
    MomentIndex.RZ_AD2_A: (1, 2, 1),
    MomentIndex.AD2_A2: (0, 2, 2),
}
KEY_TO_INDEX = {key: idx for idx, key in _KEYS.items()}

N_MOMENTS = len(MomentIndex)


def conjugate_key(key):
    k, p, q = key
    return (k, q, p)


def is_spin_key(key) -> bool:
    return key[1] == 0 and key[2] == 0


def printed_equations(p: SystemParams) -> dict:
    """The thirteen transcribed equations of motion.

    Maps target key -> list of (coefficient, key); d<target>/dt is the sum of
    coefficient * <key>. Written out term for term as transcribed; do not
    simplify here.
    """
    i = 1j
    eps, D, k, G = p.epsilon, p.delta, p.kappa, p.Gamma
    g0 = p.g0
    g0c = g0.conjugate()
    C = p.casimir
    return {
        (0, 1, 1): [(i * eps, (0, 0, 1)), (-i * eps, (0, 1, 0)), (i * g0, (1, 0, 1)),
                    (-i * g0c, (1, 1, 0)), (-2 * k, (0, 1, 1))],
        (0, 1, 0): [(i * eps, (0, 0, 0)), (i * g0, (1, 0, 0)), (-(k - i * D), (0, 1, 0))],
        (1, 0, 1): [(-i * eps, (1, 0, 0)), (-i * g0c, (2, 0, 0)), (-(4 * G + k + i * D), (1, 0, 1))],
        (0, 2, 2): [(2 * i * eps, (0, 1, 2)), (-2 * i * eps, (0, 2, 1)), (2 * i * g0, (1, 1, 2)),
                    (-2 * i * g0c, (1, 2, 1)), (-4 * k, (0, 2, 2))],
        (1, 1, 2): [(i * eps, (1, 0, 2)), (-2 * i * eps, (1, 1, 1)), (i * g0, (2, 0, 2)),
                    (-2 * i * g0c, (2, 1, 1)), (-(3 * k + 4 * G + i * D), (1, 1, 2))],
        (0, 1, 2): [(i * eps, (0, 0, 2)), (-2 * i * eps, (0, 1, 1)), (i * g0, (1, 0, 2)),
                    (-2 * i * g0c, (1, 1, 1)), (-(3 * k + i * D), (0, 1, 2))],
        (2, 0, 2): [(-2 * i * eps, (2, 0, 1)), (-2 * i * g0c, (3, 0, 1)), (16 * G * C, (0, 0, 2)),
                    (-(2 * k + 12 * G + 2 * i * D), (2, 0, 2))],
        (2, 1, 1): [(i * eps, (2, 0, 1)), (-i * eps, (2, 1, 0)), (i * g0, (3, 0, 1)),
                    (-i * g0c, (3, 1, 0)), (16 * G * C, (0, 1, 1)), (-(2 * k + 12 * G), (2, 1, 1))],
        (3, 0, 1): [(-i * eps, (3, 0, 0)), (-i * g0c, (4, 0, 0)), (-(24 * G + k + i * D), (3, 0, 1)),
                    (16 * G * (3 * C - 1), (1, 0, 1))],
        (0, 0, 2): [(-2 * i * eps, (0, 0, 1)), (-2 * i * g0c, (1, 0, 1)), (-(2 * k + 2 * i * D), (0, 0, 2))],
        (1, 0, 2): [(-2 * i * eps, (1, 0, 1)), (-2 * i * g0c, (2, 0, 1)),
                    (-(2 * k + 4 * G + 2 * i * D), (1, 0, 2))],
        (1, 1, 1): [(i * eps, (1, 0, 1)), (-i * eps, (1, 1, 0)), (i * g0, (2, 0, 1)),
                    (-i * g0c, (2, 1, 0)), (-(2 * k + 4 * G), (1, 1, 1))],
        (2, 0, 1): [(-i * eps, (2, 0, 0)), (-i * g0c, (3, 0, 0)), (-(12 * G + k + i * D), (2, 0, 1)),
                    (16 * G * C, (0, 0, 1))],
    }


def conjugate_equation(target, terms):
    """Hermitian conjugate of one equation of motion.

    d<O^dag>/dt = conj(d<O>/dt): every coefficient is conjugated and every
    correlator is replaced by its conjugate partner. With real rates this
    sends g0 <-> g0*, i*Delta -> -i*Delta and i*eps -> -i*eps.
    """
    return conjugate_key(target), [(complex(c).conjugate(), conjugate_key(key)) for c, key in terms]


def moment_equations(params: SystemParams) -> dict:
    """All 22 equations: the printed ones plus generated conjugates."""
    equations = dict(printed_equations(params))
    for target, terms in list(equations.items()):
        ctarget, cterms = conjugate_equation(target, terms)
        if ctarget not in equations:
            equations[ctarget] = cterms
    return equations


@dataclass(frozen=True)
class MomentSystem:
    """Steady state ``matrix @ x = rhs``; the dynamics are ``dx/dt = matrix @ x - rhs``."""

    matrix: np.ndarray
    rhs: np.ndarray
    params: SystemParams
    spin: SpinMoments


@dataclass(frozen=True)
class MomentVector:
    values: np.ndarray
    # max |x[i] - conj(x[partner(i)])| before symmetrization
    hermiticity_defect: float = 0.0

    def __getitem__(self, idx):
        if isinstance(idx, tuple):
            idx = KEY_TO_INDEX[idx]
        return self.values[int(idx)]

    def as_dict(self) -> dict:
        return {idx.label: complex(self.values[idx]) for idx in MomentIndex}


@dataclass(frozen=True)
class Observables:
    intensity: float
    two_photon: float
    g2: float
    mean_field: complex


def _check_rates(params: SystemParams):
    if not params.kappa > 0:
        raise SingularRegimeError(f"kappa must be > 0, got {params.kappa!r}")
    if not params.Gamma > 0:
        raise SingularRegimeError(f"Gamma = (gamma + gamma_d)/4 must be > 0, got {params.Gamma!r}")


def build_moment_system(params: SystemParams, spin: SpinMoments | None = None) -> MomentSystem:
    _check_rates(params)
    if spin is None:
        spin = spin_moments(params.n_emitters)
    A = np.zeros((N_MOMENTS, N_MOMENTS), dtype=complex)
    b = np.zeros(N_MOMENTS, dtype=complex)
    for target, terms in moment_equations(params).items():
        row = KEY_TO_INDEX[target]
        for coef, key in terms:
            if is_spin_key(key):
                b[row] -= coef * spin[key[0]]
            else:
                A[row, KEY_TO_INDEX[key]] += coef
    return MomentSystem(A, b, params, spin)


def _symmetrize(x: np.ndarray) -> MomentVector:
    partner = np.array([idx.conj for idx in MomentIndex])
    defect = float(np.max(np.abs(x - np.conj(x[partner])))) if x.size else 0.0
    return MomentVector(0.5 * (x + np.conj(x[partner])), defect)


def _residual_ok(A, x, b, rtol=1e-12):
    r = np.linalg.norm(A @ x - b)
    return r <= rtol * (np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(b)), r


def solve_steady_state(system: MomentSystem) -> MomentVector:
    """Dense LU with partial pivoting on the row/column equilibrated system.

    Moments of different field degree can differ by many orders of
    magnitude (strong drive, small kappa), so the system is scaled with
    LAPACK ``zgeequ`` before factorizing and refined once afterwards.
    """
    A, b = system.matrix, system.rhs
    r, c, _, _, _, info = scipy.linalg.lapack.zgeequ(A)
    if info != 0:
        raise SingularMatrixError(f"moment system has an empty row or column (zgeequ info={info})", 0.0)
    As = (r[:, None] * A) * c[None, :]
    lu, piv = scipy.linalg.lu_factor(As, check_finite=True)
    smallest = float(np.abs(np.diag(lu)).min())
    if smallest <= 1e-14 * float(np.abs(As).max()):
        raise SingularMatrixError(f"moment system is singular (smallest pivot {smallest:.3e})", smallest)
    y = scipy.linalg.lu_solve((lu, piv), r * b)
    x = c * y
    x = x + c * scipy.linalg.lu_solve((lu, piv), r * (b - A @ x))
    ok, res = _residual_ok(A, x, b)
    if not ok:
        raise SingularMatrixError(f"moment solve residual {res:.3e} too large (smallest pivot {smallest:.3e})",
                                  smallest)
    return _symmetrize(x)


def tier_blocks():
    """Index arrays of the four dependency tiers, in order."""
    return [np.array([idx for idx in MomentIndex if idx.tier == t]) for t in (1, 2, 3, 4)]


def solve_by_tiers(system: MomentSystem) -> MomentVector:
    """Forward block substitution over the tiers.

    Valid because coupling only flows from lower tiers to higher ones.
    """
    A, b = system.matrix, system.rhs
    x = np.zeros(N_MOMENTS, dtype=complex)
    done = np.zeros(0, dtype=int)
    for block in tier_blocks():
        rhs = b[block] - A[np.ix_(block, done)] @ x[done] if done.size else b[block]
        x[block] = np.linalg.solve(A[np.ix_(block, block)], rhs)
        done = np.concatenate([done, block])
    return _symmetrize(x)


def observables(x: MomentVector) -> Observables:
    intensity = complex(x[MomentIndex.AD_A])
    two_photon = complex(x[MomentIndex.AD2_A2])
    for name, value in (("intensity", intensity), ("two_photon", two_photon)):
        if abs(value.imag) > 1e-9 * max(abs(value), 1e-300) and abs(value.imag) > 1e-300:
            raise NumericalError(f"{name} has imaginary part {value.imag:.3e} (value {value})")
    n1, n2 = intensity.real, two_photon.real
    if n1 < 1e-14:
        raise NearZeroIntensityError(f"intensity {n1:.3e} is below 1e-14; g2 is undefined")
    return Observables(n1, n2, n2 / n1**2, complex(x[MomentIndex.A]))


def solve_moments(params: SystemParams) -> Observables:
    return observables(solve_steady_state(build_moment_system(params)))


def evolve_moments(system: MomentSystem, x0, t_final: float, dt: float | None = None,
                   rtol: float = 1e-10, atol: float = 1e-14) -> MomentVector:
    """Integrate ``dx/dt = A x - b`` from ``x0`` with adaptive DOP853.

    Test utility: gives an independent route to the fixed point. ``dt`` only
    caps the initial step. Raises :class:`ConvergenceError` if ``|dx/dt|`` has
    grown over the last decade of time.
    """
    A, b = system.matrix, system.rhs
    x0 = np.asarray(getattr(x0, "values", x0), dtype=complex)
    if x0.shape != (N_MOMENTS,):
        raise ValueError(f"x0 must have {N_MOMENTS} entries")
    scale = max(float(np.abs(b).max()), float(np.abs(x0).max()), 1.0)

    def rhs(_t, x):
        return A @ x - b

    kwargs = {} if dt is None else {"first_step": dt}
    t_mid = t_final / 10
    sol = solve_ivp(rhs, (0.0, t_final), x0, method="DOP853", rtol=rtol, atol=atol * scale,
                    t_eval=[t_mid, t_final], **kwargs)
    if not sol.success:
        raise ConvergenceError(f"integration failed: {sol.message}")
    x_mid, x_end = sol.y[:, 0], sol.y[:, 1]
    r_mid = np.linalg.norm(A @ x_mid - b)
    r_end = np.linalg.norm(A @ x_end - b)
    if r_end > r_mid and r_end > 1e-12 * scale * np.linalg.norm(A, 2):
        raise ConvergenceError(
            f"|dx/dt| grew from {r_mid:.3e} to {r_end:.3e} over the final decade", residual=r_end,
            trend=(r_mid, r_end),
        )
    return _symmetrize(x_end)
