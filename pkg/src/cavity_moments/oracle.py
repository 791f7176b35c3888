"""Brute-force Lindblad ground truth on collective-spin x truncated-Fock space.

Conventions
-----------
* Product basis index ``n * (n_max + 1) + m`` for dressed Dicke level ``n``
  (``R_z = 2n - N``) and Fock level ``m``.
* Row-major vectorization: ``vec(rho)[i * d + j] = rho[i, j]``, so
  ``vec(A @ rho @ B) = kron(A, B.T) @ vec(rho)``.
* The field operator may be represented as ``a = b + alpha`` with ``b`` the
  truncated annihilator. This is the same master equation in a displaced
  Fock basis; with ``alpha`` near the coherent mean field it needs far fewer
  levels. ``alpha = 0`` is the plain Fock basis.

The generator conserves the spin coherence order ``n - n'``, and the
stationary state lives in the ``n = n'`` sector. By default the null vector is
computed inside that sector and the residual is then checked against the full
generator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BudgetExceededError,
    ConvergenceError,
    LeakageError,
    NearZeroIntensityError,
    ParameterError,
)
from .moments import Observables
from .params import SystemParams

__all__ = [
    "DressedBasis",
    "Liouvillian",
    "OracleState",
    "OracleObservables",
    "DEFAULT_BUDGET",
    "mean_field_displacement",
    "build_liouvillian",
    "apply_liouvillian",
    "oracle_steady_state",
    "oracle_observables",
    "spin_marginal",
    "min_eigenvalue",
    "converge_truncation",
    "write_fock_populations",
]

# maximum number of rows of the vectorized generator (dimension**2)
DEFAULT_BUDGET = 2_000_000


@dataclass(frozen=True)
class DressedBasis:
    n_emitters: int
    fock_cutoff: int
    displacement: complex = 0j

    @property
    def n_spin(self) -> int:
        return self.n_emitters + 1

    @property
    def n_fock(self) -> int:
        return self.fock_cutoff + 1

    @property
    def dimension(self) -> int:
        return self.n_spin * self.n_fock

    def spin_ops(self):
        """(R+, R-, R_z) on the N+1 symmetric dressed states."""
        N = self.n_emitters
        n = np.arange(N + 1)
        # R+|n> = sqrt((N-n)(n+1)) |n+1>
        up = np.sqrt((N - n[:-1]) * (n[:-1] + 1.0))
        rp = sp.diags(up, -1, shape=(N + 1, N + 1), format="csr", dtype=complex)
        rz = sp.diags((2 * n - N).astype(float), 0, format="csr", dtype=complex)
        return rp, rp.T.tocsr(), rz

    def field_op(self):
        """Truncated ``b + alpha``."""
        b = sp.diags(np.sqrt(np.arange(1, self.n_fock, dtype=float)), 1,
                     shape=(self.n_fock, self.n_fock), format="csr", dtype=complex)
        if self.displacement:
            b = (b + self.displacement * sp.identity(self.n_fock, dtype=complex, format="csr")).tocsr()
        return b

    def operators(self) -> dict:
        rp, rm, rz = self.spin_ops()
        a = self.field_op()
        Is = sp.identity(self.n_spin, dtype=complex, format="csr")
        If = sp.identity(self.n_fock, dtype=complex, format="csr")
        ops = {
            "Rp": sp.kron(rp, If, format="csr"),
            "Rm": sp.kron(rm, If, format="csr"),
            "Rz": sp.kron(rz, If, format="csr"),
            "a": sp.kron(Is, a, format="csr"),
        }
        ops["ad"] = ops["a"].conj().T.tocsr()
        return ops


@dataclass(frozen=True, eq=False)
class Liouvillian:
    matrix: sp.csr_matrix
    params: SystemParams
    basis: DressedBasis
    ops: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.basis.dimension


@dataclass(frozen=True, eq=False)
class OracleState:
    rho: np.ndarray
    residual: float
    leakage: float
    liouvillian: Liouvillian = field(repr=False)
    method: str = "direct"

    @property
    def basis(self) -> DressedBasis:
        return self.liouvillian.basis


@dataclass(frozen=True)
class OracleObservables(Observables):
    # <R_z^k>, k = 1..4, on the joint steady state
    rz_moments: tuple = ()


def mean_field_displacement(params: SystemParams) -> complex:
    """Coherent amplitude the cavity drive alone would produce."""
    return -1j * params.epsilon / (params.kappa + 1j * params.delta)


def _hamiltonian(params: SystemParams, ops: dict):
    g0 = params.g0
    a, ad, Rz = ops["a"], ops["ad"], ops["Rz"]
    H = params.delta * (ad @ a) + Rz @ (g0.conjugate() * ad + g0 * a) + params.epsilon * (ad + a)
    return H.tocsr()


def _left(A, d):
    return sp.kron(A, sp.identity(d, format="csr"), format="csr")


def _right(B, d):
    return sp.kron(sp.identity(d, format="csr"), B.T, format="csr")


def _damping(c, rate, d):
    """Superoperator of -rate * ([c^dag, c rho] + h.c.)."""
    cd = c.conj().T.tocsr()
    cdc = (cd @ c).tocsr()
    return rate * (2 * sp.kron(c, c.conj(), format="csr") - _left(cdc, d) - _right(cdc, d))


def build_liouvillian(params: SystemParams, n_max: int, displacement: complex = 0j,
                      budget: int = DEFAULT_BUDGET) -> Liouvillian:
    n_max = int(n_max)
    if n_max < 1:
        raise ParameterError(f"n_max must be >= 1, got {n_max}")
    basis = DressedBasis(params.n_emitters, n_max, complex(displacement))
    d = basis.dimension
    if d * d > budget:
        raise BudgetExceededError(f"generator dimension {d}^2 = {d * d} exceeds budget {budget}", dimension=d)
    ops = basis.operators()
    H = _hamiltonian(params, ops)
    L = -1j * (_left(H, d) - _right(H, d))
    terms = (
        (ops["Rz"], params.Gamma0),
        (ops["Rm"], params.Gamma),
        (ops["Rp"], params.Gamma),
        (ops["a"], params.kappa),
    )
    for c, rate in terms:
        if rate:
            L = L + _damping(c, rate, d)
    L = L.tocsr()
    L.eliminate_zeros()
    return Liouvillian(L, params, basis, ops)


def apply_liouvillian(liouvillian: Liouvillian, rho: np.ndarray) -> np.ndarray:
    d = liouvillian.dimension
    return (liouvillian.matrix @ np.asarray(rho, dtype=complex).reshape(d * d)).reshape(d, d)


def _sector_indices(basis: DressedBasis) -> np.ndarray:
    """Vectorized positions of all (n, m; n, m') entries, grouped by spin n."""
    d, nf = basis.dimension, basis.n_fock
    m = np.arange(nf)
    local = (m[:, None] * d + m[None, :]).ravel()
    return np.concatenate([local + s * nf * (d + 1) for s in range(basis.n_spin)])


def _solve_direct(A: sp.csr_matrix, trace_pos: np.ndarray) -> np.ndarray:
    """Null vector of A with unit trace; the first diagonal row is replaced."""
    n = A.shape[0]
    A = A.tolil(copy=True)
    r0 = int(trace_pos[0])
    A.rows[r0] = list(int(k) for k in trace_pos)
    A.data[r0] = [1.0] * len(trace_pos)
    A = A.tocsc()
    rhs = np.zeros(n, dtype=complex)
    rhs[r0] = 1.0
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.1,
                       options={"SymmetricMode": True})
        x = lu.solve(rhs)
        if np.all(np.isfinite(x)) and np.linalg.norm(A @ x - rhs) < 1e-10:
            return x
    except RuntimeError:
        pass
    return spla.splu(A, permc_spec="COLAMD").solve(rhs)


def _solve_inverse_power(A: sp.csr_matrix, trace_pos: np.ndarray, tolerance: float,
                         maxiter: int = 60) -> np.ndarray:
    """Shifted inverse iteration towards the eigenvalue closest to zero."""
    n = A.shape[0]
    scale = spla.norm(A, 1)
    shift = 1e-9 * scale
    lu = spla.splu((A - shift * sp.identity(n, format="csc")).tocsc(), permc_spec="COLAMD")
    x = np.zeros(n, dtype=complex)
    x[trace_pos] = 1.0
    residual = math.inf
    for _ in range(maxiter):
        x = lu.solve(x)
        x /= x[trace_pos].sum()
        residual = np.linalg.norm(A @ x) / scale
        if residual < tolerance:
            return x
    raise ConvergenceError(f"inverse power iteration did not converge (residual {residual:.3e})",
                           residual=residual)


def oracle_steady_state(liouvillian: Liouvillian, tolerance: float = 1e-10, method: str = "direct",
                        sector: bool = True, leakage_tol: float = 1e-8) -> OracleState:
    """Stationary density matrix of the generator.

    ``method`` is ``'direct'`` (sparse LU with the trace condition replacing
    one equation) or ``'inverse_power'``. ``sector=False`` solves in the full
    vectorized space; only sensible for small cutoffs.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    basis = liouvillian.basis
    d = basis.dimension
    L = liouvillian.matrix
    if sector:
        idx = _sector_indices(basis)
    else:
        idx = np.arange(d * d)
    A = L[idx][:, idx].tocsr() if sector else L
    trace_pos = np.nonzero(idx // d == idx % d)[0]
    if method == "direct":
        x = _solve_direct(A, trace_pos)
    elif method == "inverse_power":
        x = _solve_inverse_power(A, trace_pos, tolerance)
    else:
        raise ValueError(f"unknown method {method!r}")
    vec = np.zeros(d * d, dtype=complex)
    vec[idx] = x
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    scale = spla.norm(L, 1)
    residual = float(np.linalg.norm(L @ rho.reshape(d * d)) / scale)
    if not residual <= tolerance:
        raise ConvergenceError(f"steady-state residual {residual:.3e} exceeds tolerance {tolerance:.1e}",
                               residual=residual)
    nf = basis.n_fock
    top = np.arange(basis.n_spin) * nf + (nf - 1)
    leakage = float(np.real(rho[top, top]).sum())
    if leakage > leakage_tol:
        raise LeakageError(f"top Fock level population {leakage:.3e} > {leakage_tol:.1e}; "
                           f"n_max={basis.fock_cutoff} too small", leakage=leakage, n_max=basis.fock_cutoff)
    return OracleState(rho, residual, leakage, liouvillian, method)


def _expect(op, rho) -> complex:
    return complex(op.multiply(rho.T).sum())


def min_eigenvalue(state: OracleState) -> float:
    """Smallest eigenvalue of rho, using the spin block structure when it holds."""
    rho = state.rho
    basis = state.basis
    nf = basis.n_fock
    blocks = [slice(s * nf, (s + 1) * nf) for s in range(basis.n_spin)]
    off = rho.copy()
    for blk in blocks:
        off[blk, blk] = 0
    if not np.any(off):
        return float(min(np.linalg.eigvalsh(rho[blk, blk]).min() for blk in blocks))
    return float(np.linalg.eigvalsh(rho).min())


def spin_marginal(state: OracleState) -> np.ndarray:
    """Partial trace of rho over the field."""
    b = state.basis
    r = state.rho.reshape(b.n_spin, b.n_fock, b.n_spin, b.n_fock)
    return np.einsum("imjm->ij", r)


def oracle_observables(state: OracleState) -> OracleObservables:
    ops = state.liouvillian.ops
    rho = state.rho
    a, ad, Rz = ops["a"], ops["ad"], ops["Rz"]
    intensity = _expect(ad @ a, rho).real
    two_photon = _expect(ad @ ad @ a @ a, rho).real
    mean_field = _expect(a, rho)
    rz = []
    power = Rz
    for _ in range(4):
        rz.append(_expect(power, rho).real)
        power = power @ Rz
    if intensity < 1e-14:
        raise NearZeroIntensityError(f"oracle intensity {intensity:.3e} is below 1e-14; g2 is undefined")
    return OracleObservables(intensity, two_photon, two_photon / intensity**2, mean_field, tuple(rz))


def converge_truncation(params: SystemParams, start_n_max: int = 8, growth: float = 2.0,
                        rtol: float = 1e-7, budget: int = DEFAULT_BUDGET, displacement="auto",
                        method: str = "direct", tolerance: float = 1e-10, leakage_tol: float = 1e-8,
                        sector: bool = True, return_state: bool = False):
    """Grow the Fock cutoff until intensity and g2 settle.

    The cutoff is multiplied by ``growth`` each round (at least +1) until two
    consecutive converged levels agree to ``rtol`` in both intensity and g2.
    Levels that fail the leakage check just trigger another round.
    ``displacement='auto'`` uses :func:`mean_field_displacement`.

    Returns ``(OracleObservables, n_max_used)``, plus the final
    :class:`OracleState` when ``return_state`` is true.
    """
    if start_n_max < 1:
        raise ParameterError("start_n_max must be >= 1")
    if growth <= 1:
        raise ParameterError("growth must be > 1")
    alpha = mean_field_displacement(params) if displacement == "auto" else complex(displacement)
    n_max = int(start_n_max)
    previous = None
    trend = []
    while True:
        d = (params.n_emitters + 1) * (n_max + 1)
        if d * d > budget:
            raise BudgetExceededError(
                f"Fock cutoff {n_max} exceeds budget {budget} before convergence; trend {trend}",
                dimension=d, trend=trend,
            )
        L = build_liouvillian(params, n_max, alpha, budget)
        try:
            state = oracle_steady_state(L, tolerance, method=method, sector=sector, leakage_tol=leakage_tol)
        except LeakageError as exc:
            trend.append((n_max, "leakage", exc.leakage))
            previous = None
        else:
            obs = oracle_observables(state)
            trend.append((n_max, obs.intensity, obs.g2))
            if previous is not None:
                d_int = abs(obs.intensity - previous.intensity) / abs(obs.intensity)
                d_g2 = abs(obs.g2 - previous.g2) / abs(obs.g2)
                if d_int < rtol and d_g2 < rtol:
                    return (obs, n_max, state) if return_state else (obs, n_max)
            previous = obs
        n_max = max(n_max + 1, int(math.ceil(n_max * growth)))


def write_fock_populations(state: OracleState, destination) -> None:
    """Diagnostic CSV of the Fock-level populations (summed over spin)."""
    b = state.basis
    pops = np.real(np.diagonal(state.rho)).reshape(b.n_spin, b.n_fock).sum(axis=0)
    path = Path(destination)
    try:
        with path.open("w", newline="") as fh:
            fh.write(f"# fock populations n_max={b.fock_cutoff} displacement={b.displacement!r}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["level", "population"])
            for m, p in enumerate(pops):
                writer.writerow([m, format(float(p), ".12g")])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
