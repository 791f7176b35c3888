"""Closed-form steady-state results used as independent validators.

Both functions share no code with the moment solver beyond the parameter
model, so agreement between the two is a real cross-check.
"""

from __future__ import annotations

from .errors import PreconditionError, SingularRegimeError
from .params import SpinMoments, SystemParams, spin_moments

__all__ = ["closed_form_g2", "closed_form_intensity"]


def closed_form_g2(params: SystemParams, spin: SpinMoments | None = None) -> float:
    """g2(0) for an undriven cavity on resonance (epsilon = delta = 0).

    Independent of the coupling g. Denominators are kept in the mixed
    Gamma/kappa and kappa/Gamma form they are usually quoted in.
    """
    if params.epsilon != 0 or params.delta != 0:
        raise PreconditionError(
            f"closed-form g2 requires epsilon = 0 and delta = 0 "
            f"(got epsilon={params.epsilon!r}, delta={params.delta!r})"
        )
    if params.n_emitters < 1:
        raise PreconditionError("closed-form g2 requires at least one emitter")
    G, kappa = params.Gamma, params.kappa
    if not (kappa > 0 and G > 0):
        raise SingularRegimeError("closed-form g2 requires kappa > 0 and Gamma > 0")
    if spin is None:
        spin = spin_moments(params.n_emitters)
    m2, m4 = spin.m2, spin.m4
    jj = params.casimir
    x = kappa / G

    prefactor = 3 * (4 + x) ** 2 / ((4 + 3 * x) * (6 + x) * m2**2)
    bracket = (
        m4 / (1 + 24 * G / kappa)
        + 8 * jj * m2 / (4 + x)
        + 16 * (3 * jj - 1) * m2 / ((1 + 4 * G / kappa) * (24 + x))
    )
    return prefactor * bracket


def closed_form_intensity(params: SystemParams, spin: SpinMoments | None = None) -> float:
    """Steady-state <a^dag a>; exact for any epsilon, delta and phi."""
    if spin is None:
        spin = spin_moments(params.n_emitters)
    eps, delta, kappa, G = params.epsilon, params.delta, params.kappa, params.Gamma
    g0_sq = abs(params.g0) ** 2
    coherent = eps**2 / (kappa**2 + delta**2)
    if g0_sq == 0 or spin.m2 == 0:
        return coherent
    damping = kappa + 4 * G
    incoherent = damping * g0_sq * spin.m2 / ((damping**2 + delta**2) * kappa)
    return coherent + incoherent
