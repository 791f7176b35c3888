"""Physical parameter model and the exact dressed-spin moments.

All rates are stored unnormalized. The default ``gamma=4, gamma_d=0`` gives
``Gamma = (gamma + gamma_d)/4 = 1``, so a ``SystemParams`` built with default
decay rates is already expressed in units of Gamma, which is how every
figure-facing quantity is quoted.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import ParameterError

__all__ = [
    "SystemParams",
    "SpinMoments",
    "spin_moments",
    "validate_regime",
    "parse_scenario",
    "load_scenario",
    "PARAM_KEYS",
]

PARAM_KEYS = ("n_emitters", "g", "epsilon", "delta", "kappa", "gamma", "gamma_d", "phi", "omega")

# gamma + gamma_d when Gamma is the unit of rate
GAMMA_UNIT_SUM = 4.0


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".12g")


@dataclass(frozen=True)
class SystemParams:
    """One scenario: N emitters in a driven lossy cavity.

    ``phi`` is the phase difference between the cavity drive and the emitter
    drive; only the difference enters the dynamics. ``omega`` (Rabi
    frequency) is optional and only used by :func:`validate_regime`.
    """

    n_emitters: int = 1
    g: float = 1.0
    epsilon: float = 0.0
    delta: float = 0.0
    kappa: float = 1.0
    gamma: float = 4.0
    gamma_d: float = 0.0
    phi: float = 0.0
    omega: float | None = None

    def __post_init__(self):
        n = self.n_emitters
        if isinstance(n, bool) or not isinstance(n, int):
            if isinstance(n, float) and n.is_integer():
                object.__setattr__(self, "n_emitters", int(n))
            else:
                raise ParameterError(f"n_emitters must be a nonnegative integer, got {n!r}")
        if self.n_emitters < 0:
            raise ParameterError(f"n_emitters must be >= 0, got {self.n_emitters}")
        for name in ("g", "epsilon", "delta", "kappa", "gamma", "gamma_d", "phi"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        for name in ("g", "epsilon", "gamma", "gamma_d"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be > 0 (intensity is singular at kappa=0), got {self.kappa!r}")
        if self.omega is not None and not (math.isfinite(self.omega) and self.omega > 0):
            raise ParameterError(f"omega must be > 0 when given, got {self.omega!r}")

    @property
    def Gamma(self) -> float:
        """Collective dressed-state relaxation rate (gamma + gamma_d)/4."""
        return (self.gamma + self.gamma_d) / 4.0

    @property
    def Gamma0(self) -> float:
        """Dressed dephasing rate gamma/4."""
        return self.gamma / 4.0

    @property
    def g0(self) -> complex:
        """Phase-carrying coupling g e^{i phi} / 2."""
        return 0.5 * self.g * complex(math.cos(self.phi), math.sin(self.phi))

    @property
    def j(self) -> Fraction:
        return Fraction(self.n_emitters, 2)

    @property
    def casimir(self) -> float:
        """j(j+1) with j = N/2."""
        j = self.j
        return float(j * (j + 1))

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def in_units_of_gamma(self) -> dict:
        """Rates divided by Gamma (phi and N untouched)."""
        G = self.Gamma
        if G <= 0:
            raise ParameterError("Gamma = 0: rates cannot be expressed in units of Gamma")
        out = {"n_emitters": self.n_emitters, "phi": self.phi}
        for name in ("g", "epsilon", "delta", "kappa", "gamma", "gamma_d"):
            out[name] = getattr(self, name) / G
        out["omega"] = None if self.omega is None else self.omega / G
        return out

    def canonical(self) -> str:
        """Stable one-token description, e.g. for file headers."""
        return ";".join(f"{k}={_fmt(getattr(self, k))}" for k in PARAM_KEYS)


@dataclass(frozen=True)
class SpinMoments:
    """<R_z^k> for k = 0..4 in the maximally mixed symmetric state."""

    m0: float
    m1: float
    m2: float
    m3: float
    m4: float

    def __getitem__(self, k: int) -> float:
        return (self.m0, self.m1, self.m2, self.m3, self.m4)[k]

    def as_tuple(self):
        return (self.m0, self.m1, self.m2, self.m3, self.m4)


def spin_moments(n_emitters: int) -> SpinMoments:
    """Moments of the collective dressed inversion for ``rho_q = I/(N+1)``.

    Odd moments vanish by the symmetry ``n -> N - n`` of the spectrum
    ``2n - N``; the even ones are given in closed form, evaluated exactly.
    """
    N = int(n_emitters)
    if N < 0:
        raise ParameterError(f"n_emitters must be >= 0, got {n_emitters!r}")
    m2 = Fraction(N * (N + 2), 3)
    m4 = Fraction(N * (N + 2) * (3 * N * N + 6 * N - 4), 15)
    return SpinMoments(1.0, 0.0, float(m2), 0.0, float(m4))


def validate_regime(params: SystemParams) -> list[str]:
    """Warnings for parameters outside the strong-drive regime.

    Never raises. Requires ``omega`` to say anything beyond a note.
    """
    omega = params.omega
    if omega is None:
        return ["note: omega not given, strong-drive regime cannot be checked"]
    warnings = []
    for name in ("g", "gamma", "kappa"):
        value = getattr(params, name)
        if not omega > 10 * value:
            warnings.append(f"warning: omega={_fmt(omega)} is not > 10*{name}={_fmt(10 * value)}")
    if abs(params.delta) >= omega / 10:
        warnings.append(f"warning: |delta|={_fmt(abs(params.delta))} is not << omega (>= omega/10)")
    return warnings


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "n_emitters":
        try:
            value = float(raw)
        except ValueError:
            raise ParameterError(f"cannot parse {key}={raw!r}") from None
        if not value.is_integer():
            raise ParameterError(f"n_emitters must be an integer, got {raw!r}")
        return int(value)
    if key == "omega" and raw.lower() in ("", "none"):
        return None
    try:
        return float(raw)
    except ValueError:
        raise ParameterError(f"cannot parse {key}={raw!r}") from None


def params_from_mapping(values: dict, units: str = "gamma_big", base: SystemParams | None = None) -> SystemParams:
    """Build params from string or numeric values keyed by :data:`PARAM_KEYS`.

    With ``units='gamma_big'`` Gamma is pinned to 1: if only one of
    ``gamma``/``gamma_d`` is given the other makes up ``gamma + gamma_d = 4``;
    giving both requires them to sum to 4. With ``units='raw'`` values are
    taken literally.
    """
    unknown = set(values) - set(PARAM_KEYS)
    if unknown:
        raise ParameterError(f"unknown parameter key(s): {', '.join(sorted(unknown))}")
    if units not in ("gamma_big", "raw"):
        raise ParameterError(f"units must be 'gamma_big' or 'raw', got {units!r}")
    parsed = {k: (_parse_value(k, v) if isinstance(v, str) else v) for k, v in values.items()}
    fields = {} if base is None else {k: getattr(base, k) for k in PARAM_KEYS}
    fields.update(parsed)
    if units == "gamma_big":
        has_gamma, has_gamma_d = "gamma" in parsed, "gamma_d" in parsed
        if has_gamma and has_gamma_d:
            total = parsed["gamma"] + parsed["gamma_d"]
            if abs(total - GAMMA_UNIT_SUM) > 1e-12 * GAMMA_UNIT_SUM:
                raise ParameterError(
                    f"in units of Gamma, gamma + gamma_d must equal 4 (got {_fmt(total)})"
                )
        elif has_gamma:
            fields["gamma_d"] = GAMMA_UNIT_SUM - parsed["gamma"]
        elif has_gamma_d:
            fields["gamma"] = GAMMA_UNIT_SUM - parsed["gamma_d"]
        elif base is None:
            fields["gamma"], fields["gamma_d"] = GAMMA_UNIT_SUM, 0.0
    return SystemParams(**fields)


def parse_scenario(text: str, source: str = "<string>") -> tuple[dict, str]:
    """Parse ``key = value`` lines into ``(values, units)``.

    Blank lines and ``#`` comments are ignored. Values stay strings.
    """
    values: dict[str, str] = {}
    units = "gamma_big"
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "units":
            units = value
            continue
        if key not in PARAM_KEYS:
            raise ParameterError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ParameterError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values, units


def load_scenario(path, overrides: dict | None = None) -> SystemParams:
    """Read a scenario file; ``overrides`` (string values) win over the file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read scenario {path}: {exc}") from exc
    values, units = parse_scenario(text, source=str(path))
    values.update(overrides or {})
    return params_from_mapping(values, units=units)
