"""Parameter sweeps, figure presets and CSV output."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .closed_forms import closed_form_g2, closed_form_intensity
from .errors import CavityError, ParameterError, PreconditionError
from .moments import solve_moments
from .oracle import converge_truncation
from .params import SystemParams

__all__ = [
    "AXES",
    "ENGINES",
    "ORACLE_MAX_PHOTONS",
    "NOT_APPLICABLE",
    "SweepSpec",
    "EngineResult",
    "SweepRow",
    "apply_axis",
    "evaluate_point",
    "run_sweep",
    "figure_presets",
    "write_csv",
    "read_csv",
    "format_number",
    "write_plot_script",
]

AXES = ("kappa_over_Gamma", "delta_over_Gamma", "phi", "n_emitters", "epsilon_over_Gamma", "g_over_Gamma")
ENGINES = ("moment", "closed_form", "oracle")
METRICS = ("intensity", "two_photon", "g2")
ORACLE_MAX_PHOTONS = 10.0
NOT_APPLICABLE = "n/a: "

_AXIS_FIELD = {
    "kappa_over_Gamma": "kappa",
    "delta_over_Gamma": "delta",
    "epsilon_over_Gamma": "epsilon",
    "g_over_Gamma": "g",
}


def format_number(x) -> str:
    """At most 12 significant digits, shortest round-trip spelling (``1.0``, ``2.5e-07``)."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return repr(float(format(x, ".12g")))


def apply_axis(params: SystemParams, axis: str, value) -> SystemParams:
    if axis == "phi":
        return params.replace(phi=float(value))
    if axis == "n_emitters":
        if float(value) != int(value):
            raise ParameterError(f"n_emitters axis values must be integers, got {value!r}")
        return params.replace(n_emitters=int(value))
    if axis in _AXIS_FIELD:
        return params.replace(**{_AXIS_FIELD[axis]: float(value) * params.Gamma})
    raise ParameterError(f"unknown axis {axis!r}; expected one of {', '.join(AXES)}")


@dataclass(frozen=True)
class SweepSpec:
    """One or more curves over a single axis.

    ``series_key``/``series_values`` optionally repeat the sweep for several
    values of a second axis (e.g. one curve per detuning).
    """

    base: SystemParams
    axis: str
    points: tuple
    engines: tuple = ("moment",)
    series_key: str | None = None
    series_values: tuple = ()
    oracle_options: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        object.__setattr__(self, "engines", tuple(self.engines))
        object.__setattr__(self, "series_values", tuple(float(v) for v in self.series_values))
        if self.axis not in AXES:
            raise ParameterError(f"unknown axis {self.axis!r}; expected one of {', '.join(AXES)}")
        if not self.points:
            raise ParameterError("sweep needs at least one point")
        if not all(math.isfinite(p) for p in self.points + self.series_values):
            raise ParameterError("sweep points must be finite")
        if not self.engines:
            raise ParameterError("sweep needs at least one engine")
        bad = [e for e in self.engines if e not in ENGINES]
        if bad or len(set(self.engines)) != len(self.engines):
            raise ParameterError(f"engines must be distinct members of {ENGINES}, got {self.engines}")
        if self.series_key is not None:
            if self.series_key not in AXES or self.series_key == self.axis:
                raise ParameterError(f"invalid series key {self.series_key!r}")
            if not self.series_values:
                raise ParameterError("series_key given without series_values")
        # validates every axis value against the parameter model
        points = list(self.all_params())
        if "oracle" in self.engines:
            worst = max(closed_form_intensity(p) for _, _, p in points)
            if worst > ORACLE_MAX_PHOTONS:
                raise PreconditionError(
                    f"oracle engine needs mean photon number <= {ORACLE_MAX_PHOTONS:g}; "
                    f"this sweep reaches {worst:.3g}"
                )

    def all_params(self):
        """Yield ``(series_value, axis_value, params)`` in output order."""
        series = self.series_values if self.series_key is not None else (None,)
        for s in series:
            base = self.base if s is None else apply_axis(self.base, self.series_key, s)
            for v in self.points:
                yield s, v, apply_axis(base, self.axis, v)


@dataclass(frozen=True)
class EngineResult:
    intensity: float = math.nan
    two_photon: float = math.nan
    g2: float = math.nan
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def failed(self) -> bool:
        """True for engine errors; ``n/a`` (engine not applicable here) is not a failure."""
        return not self.ok and not self.status.startswith(NOT_APPLICABLE)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    series_value: float | None
    results: dict


def _status(exc: Exception) -> str:
    msg = str(exc).replace(";", ",").replace("\n", " ")
    return f"{type(exc).__name__}: {msg}"


def evaluate_point(params: SystemParams, engine: str, oracle_options: dict | None = None) -> EngineResult:
    """Run one engine at one parameter point; errors become a status string."""
    try:
        if engine == "moment":
            obs = solve_moments(params)
            return EngineResult(obs.intensity, obs.two_photon, obs.g2)
        if engine == "closed_form":
            intensity = closed_form_intensity(params)
            try:
                g2 = closed_form_g2(params)
            except PreconditionError as exc:
                return EngineResult(intensity, status=NOT_APPLICABLE + _status(exc))
            return EngineResult(intensity, g2 * intensity**2, g2)
        if engine == "oracle":
            options = dict(oracle_options or {})
            options.setdefault("start_n_max", default_start_cutoff(params))
            obs, _ = converge_truncation(params, **options)
            return EngineResult(obs.intensity, obs.two_photon, obs.g2)
    except CavityError as exc:
        return EngineResult(status=_status(exc))
    raise ParameterError(f"unknown engine {engine!r}")


def default_start_cutoff(params: SystemParams) -> int:
    """Starting Fock cutoff for the displaced-basis oracle.

    Only the emitter-driven (incoherent) photons count: the coherent part is
    absorbed by the displacement.
    """
    incoherent = closed_form_intensity(params.replace(epsilon=0.0))
    return int(math.ceil(6 + 20 * incoherent))


def _evaluate_all(args):
    params, engines, oracle_options = args
    return {e: evaluate_point(params, e, oracle_options) for e in engines}


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Evaluate every point; rows come back in output order regardless of ``jobs``."""
    points = list(spec.all_params())
    tasks = [(p, spec.engines, spec.oracle_options) for _, _, p in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_all, tasks))
    else:
        results = [_evaluate_all(t) for t in tasks]
    return [SweepRow(v, s, r) for (s, v, _), r in zip(points, results)]


def figure_presets() -> dict[str, SweepSpec]:
    """The four named preset sweeps.

    Axis ranges are a choice: log kappa/Gamma in [1e-2, 1e2] (200 points)
    and linear delta/Gamma in [-10, 10] (401 points).
    """
    kappa_axis = tuple(np.logspace(-2, 2, 200))
    delta_axis = tuple(np.linspace(-10, 10, 401))
    detunings = (0.0, 0.01, 1.0, 4.0)
    phases = (0.0, math.pi / 4, math.pi / 2)
    fig2_base = SystemParams(n_emitters=20, g=10.0, epsilon=20.0, kappa=1.0)
    return {
        "fig1a": SweepSpec(SystemParams(n_emitters=1, g=1.0, epsilon=0.0), "kappa_over_Gamma", kappa_axis,
                           ("moment", "closed_form"), "delta_over_Gamma", detunings),
        "fig1b": SweepSpec(SystemParams(n_emitters=20, g=1.0, epsilon=0.0), "kappa_over_Gamma", kappa_axis,
                           ("moment", "closed_form"), "delta_over_Gamma", detunings),
        "fig2a": SweepSpec(fig2_base, "delta_over_Gamma", delta_axis, ("moment",), "phi", phases),
        "fig2b": SweepSpec(fig2_base.replace(delta=0.01), "kappa_over_Gamma", kappa_axis, ("moment",),
                           "phi", phases),
    }


def csv_header(spec: SweepSpec) -> list[str]:
    cols = [] if spec.series_key is None else [spec.series_key]
    cols.append(spec.axis)
    for engine in spec.engines:
        cols.extend(f"{engine}.{m}" for m in METRICS)
    cols.append("status")
    return cols


def write_csv(rows: list[SweepRow], destination, spec: SweepSpec) -> None:
    """Write rows as CSV: a ``# cavity-moments v...`` comment line, header, data.

    ``destination`` may be a path or an open text stream.
    """
    if not rows:
        raise PreconditionError("refusing to write an empty sweep")
    buf = io.StringIO()
    buf.write(f"# cavity-moments v{__version__} params={spec.base.canonical()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(spec))
    for row in rows:
        line = [] if spec.series_key is None else [format_number(row.series_value)]
        line.append(format_number(row.axis_value))
        statuses = []
        for engine in spec.engines:
            res = row.results[engine]
            line.extend(format_number(getattr(res, m)) for m in METRICS)
            statuses.append(f"{engine}={res.status}")
        line.append(";".join(statuses))
        writer.writerow(line)
    text = buf.getvalue()
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        with path.open("w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(source) -> tuple[str, list[str], list[dict]]:
    """Parse a file written by :func:`write_csv` into ``(comment, header, rows)``.

    Numeric columns come back as floats, ``status`` stays a string.
    """
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParameterError("missing '# cavity-moments' comment line")
    reader = csv.reader(lines[1:])
    header = next(reader)
    rows = []
    for record in reader:
        row = {}
        for key, value in zip(header, record):
            row[key] = value if key == "status" else float(value)
        rows.append(row)
    return lines[0], header, rows


_PLOT_TEMPLATE = '''\
# Convenience plot for {csv_name}; generated, edit freely.
import csv
import matplotlib.pyplot as plt

with open({csv_path!r}) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))

series = {{}}
for r in rows:
    series.setdefault(r.get({series_key!r}, ""), []).append(r)

fig, ax = plt.subplots()
for label, pts in series.items():
    ax.plot([float(p[{axis!r}]) for p in pts], [float(p[{column!r}]) for p in pts],
            label="{series_key}=" + label if label else None)
ax.set_xlabel({axis!r})
ax.set_ylabel("g2(0)")
{xscale}if len(series) > 1:
    ax.legend()
fig.savefig({png!r}, dpi=150)
'''


def write_plot_script(spec: SweepSpec, csv_path, script_path, log_axis: bool = False) -> None:
    """Optional companion script that plots the first engine's g2 column."""
    csv_path = str(csv_path)
    text = _PLOT_TEMPLATE.format(
        csv_name=Path(csv_path).name,
        csv_path=csv_path,
        series_key=spec.series_key or "",
        axis=spec.axis,
        column=f"{spec.engines[0]}.g2",
        xscale='ax.set_xscale("log")\n' if log_axis else "",
        png=str(Path(csv_path).with_suffix(".png")),
    )
    Path(script_path).write_text(text)
