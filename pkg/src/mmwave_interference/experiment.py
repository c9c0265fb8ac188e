"""Experiment specs, presets and result files.

A spec is a TOML document::

    name = "fig2"

    [network]
    lambda_sf = 1e-4
    rho = 1e-4
    radius_d = 5.641895835477563
    beamwidth = "20 deg"          # full beamwidth; or half_beamwidth_rad = 0.1745...
    pathloss_exp = 2.5
    nakagami_m = 3.0

    [spectral]
    psd = "rect"                  # or "raised_cosine" with psd_rolloff
    filter = "rect"

    [snr]
    start = 0.0                   # or values = [...]
    stop = 80.0
    step = 5.0

    [sweep]                       # optional
    parameter = "lambda_sf"       # lambda_sf | rho | blockage_toggle
    values = [1e-5, 1e-4, 1e-3]

    [run]
    engines = ["analytic", "montecarlo"]
    trials = 1000000
    seed = 2017
    blockage_mode = "thinning"    # or "explicit"
    distance_law = "thinned"      # analytic engine; or "uniform"
    workers = 1
    output_dir = "results/fig2"
    plot_script = true

Omitted network keys take the defaults of :class:`NetworkConfig`.
"""

from __future__ import annotations

import csv
import io
import math
import re
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analytic import THINNED, UNIFORM, BerCurve, MgfEvaluator, ber_curve
from .exceptions import ConfigError
from .model import NetworkConfig, active_count_rate
from .montecarlo import MODES, THINNING, estimate_ber_curve
from .spectral import RAISED_COSINE, RECT, SpectralModel, SpectralShape

ANALYTIC = "analytic"
MONTECARLO = "montecarlo"
ENGINES = (ANALYTIC, MONTECARLO)
SWEEP_PARAMETERS = ("lambda_sf", "rho", "blockage_toggle")
CSV_HEADER = ("snr_db", "ber_analytic", "ber_mc", "mc_stderr", "trials")
DEFAULT_SNR_GRID = tuple(float(x) for x in range(0, 85, 5))
DEFAULT_SEED = 2017

_NETWORK_KEYS = {f.name for f in fields(NetworkConfig)} - {"half_beamwidth", "noise_power"}


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"sweep.parameter must be one of {', '.join(SWEEP_PARAMETERS)}, got {self.parameter!r}"
            )
        if not self.values:
            raise ConfigError("sweep.values is empty")
        if self.parameter == "blockage_toggle":
            if any(not isinstance(v, bool) for v in self.values):
                raise ConfigError("sweep.values must be booleans for blockage_toggle")
        elif any(isinstance(v, bool) or not float(v) > 0 for v in self.values):
            raise ConfigError(f"sweep.values for {self.parameter} must be positive numbers")

    def label(self, value) -> str:
        if self.parameter == "blockage_toggle":
            return "blockage_on" if value else "blockage_off"
        return f"{self.parameter}_{float(value)!r}"

    def apply(self, cfg: NetworkConfig, value) -> NetworkConfig:
        if self.parameter == "blockage_toggle":
            return cfg if value else cfg.replace(rho=0.0)
        return cfg.replace(**{self.parameter: float(value)})


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one set of BER curves."""

    name: str
    base: NetworkConfig
    spectral: SpectralModel
    snr_grid_db: tuple
    sweep: Sweep | None = None
    engines: tuple = ENGINES
    trials: int = 1_000_000
    seed: int = DEFAULT_SEED
    blockage_mode: str = THINNING
    workers: int = 1
    output_dir: str = "results"
    plot_script: bool = True
    distance_law: str = THINNED

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", self.name):
            raise ConfigError(f"name must be a plain file stem, got {self.name!r}")
        if not self.snr_grid_db:
            raise ConfigError("snr: SNR grid is empty")
        if not all(math.isfinite(x) for x in self.snr_grid_db):
            raise ConfigError("snr: SNR grid has non-finite values")
        if not self.engines or any(e not in ENGINES for e in self.engines):
            raise ConfigError(f"run.engines must be a non-empty subset of {list(ENGINES)}")
        if self.trials < 1:
            raise ConfigError("run.trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("run.seed must be a 64-bit unsigned integer")
        if self.blockage_mode not in MODES:
            raise ConfigError(f"run.blockage_mode must be one of {list(MODES)}")
        if self.workers < 1:
            raise ConfigError("run.workers must be >= 1")
        if self.distance_law not in (THINNED, UNIFORM):
            raise ConfigError(f"run.distance_law must be one of {[THINNED, UNIFORM]}")
        if not math.isclose(self.base.bandwidth_w, self.spectral.bandwidth_w):
            raise ConfigError("network.bandwidth_w and the spectral bandwidth disagree")

    def cases(self) -> list[tuple[str, NetworkConfig]]:
        """(file label, config) for each curve, in sweep order."""
        if self.sweep is None:
            return [(self.name, self.base)]
        return [
            (f"{self.name}_{self.sweep.label(v)}", self.sweep.apply(self.base, v))
            for v in self.sweep.values
        ]

    def replace(self, **changes) -> ExperimentSpec:
        import dataclasses

        return dataclasses.replace(self, **changes)


# -- parsing --------------------------------------------------------------


def _parse_beamwidth(value) -> float:
    """Full beamwidth to half-beamwidth in radians; bare numbers are degrees."""
    if isinstance(value, bool):
        raise ConfigError("network.beamwidth must be a number or a string with unit")
    if isinstance(value, (int, float)):
        return math.radians(float(value)) / 2.0
    match = re.fullmatch(r"\s*([-+0-9.eE]+)\s*(deg|degrees|rad|radians)?\s*", str(value))
    if not match:
        raise ConfigError(f"network.beamwidth: cannot parse {value!r}")
    number = float(match.group(1))
    unit = match.group(2) or "deg"
    return (math.radians(number) if unit.startswith("deg") else number) / 2.0


def _shape(section: dict, key: str) -> SpectralShape:
    kind = section.get(key, RECT)
    rolloff = float(section.get(f"{key}_rolloff", 0.0))
    try:
        if kind == RECT:
            if rolloff != 0.0:
                raise ConfigError(f"spectral.{key}_rolloff must be 0 for rect")
            return SpectralShape.rect()
        if kind == RAISED_COSINE:
            return SpectralShape.raised_cosine(rolloff)
    except ValueError as exc:
        raise ConfigError(f"spectral.{key}: {exc}") from exc
    raise ConfigError(f"spectral.{key} must be 'rect' or 'raised_cosine', got {kind!r}")


def _snr_grid(section: dict) -> tuple:
    if "values" in section:
        values = section["values"]
        if not isinstance(values, list):
            raise ConfigError("snr.values must be a list")
        return tuple(float(v) for v in values)
    start = float(section.get("start", 0.0))
    stop = float(section.get("stop", 80.0))
    step = float(section.get("step", 5.0))
    if step <= 0:
        raise ConfigError("snr.step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + i * step for i in range(max(n, 0)))


def spec_from_dict(doc: dict[str, Any]) -> ExperimentSpec:
    """Build and validate a spec from a parsed TOML document."""
    try:
        network = dict(doc.get("network", {}))
        unknown = set(network) - _NETWORK_KEYS - {"beamwidth", "half_beamwidth_rad"}
        if unknown:
            raise ConfigError(f"network: unknown keys {sorted(unknown)}")
        if "beamwidth" in network and "half_beamwidth_rad" in network:
            raise ConfigError("network: give either beamwidth or half_beamwidth_rad, not both")
        kwargs = {k: float(v) for k, v in network.items() if k in _NETWORK_KEYS}
        if "beamwidth" in network:
            kwargs["half_beamwidth"] = _parse_beamwidth(network["beamwidth"])
        elif "half_beamwidth_rad" in network:
            kwargs["half_beamwidth"] = float(network["half_beamwidth_rad"])
        base = NetworkConfig(**kwargs)

        spectral_doc = doc.get("spectral", {})
        spectral = SpectralModel(
            _shape(spectral_doc, "psd"), _shape(spectral_doc, "filter"), base.bandwidth_w
        )
        snr = _snr_grid(doc.get("snr", {}))

        sweep = None
        if "sweep" in doc:
            sw = doc["sweep"]
            sweep = Sweep(str(sw.get("parameter", "")), tuple(sw.get("values", ())))

        run = doc.get("run", {})
        engines = run.get("engines", list(ENGINES))
        if isinstance(engines, str):
            engines = [e.strip() for e in engines.split(",") if e.strip()]
        return ExperimentSpec(
            name=str(doc.get("name", "experiment")),
            base=base,
            spectral=spectral,
            snr_grid_db=snr,
            sweep=sweep,
            engines=tuple(engines),
            trials=int(run.get("trials", 1_000_000)),
            seed=int(run.get("seed", DEFAULT_SEED)),
            blockage_mode=str(run.get("blockage_mode", THINNING)),
            workers=int(run.get("workers", 1)),
            output_dir=str(run.get("output_dir", "results")),
            plot_script=bool(run.get("plot_script", True)),
            distance_law=str(run.get("distance_law", THINNED)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_spec(path: str | Path) -> ExperimentSpec:
    """Read a TOML spec (or a manifest written by :func:`run_experiment`)."""
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return spec_from_dict(doc)


def spec_to_dict(spec: ExperimentSpec) -> dict[str, Any]:
    """Fully resolved document; floats are written exactly, so it reloads bit-for-bit."""
    network = {k: getattr(spec.base, k) for k in sorted(_NETWORK_KEYS)}
    network["half_beamwidth_rad"] = spec.base.half_beamwidth
    spectral = {
        "psd": spec.spectral.psd_shape.kind,
        "psd_rolloff": spec.spectral.psd_shape.rolloff,
        "filter": spec.spectral.filter_shape.kind,
        "filter_rolloff": spec.spectral.filter_shape.rolloff,
    }
    doc: dict[str, Any] = {
        "name": spec.name,
        "network": network,
        "spectral": spectral,
        "snr": {"values": list(spec.snr_grid_db)},
        "run": {
            "engines": list(spec.engines),
            "trials": spec.trials,
            "seed": spec.seed,
            "blockage_mode": spec.blockage_mode,
            "workers": spec.workers,
            "output_dir": spec.output_dir,
            "plot_script": spec.plot_script,
            "distance_law": spec.distance_law,
        },
    }
    if spec.sweep is not None:
        doc["sweep"] = {"parameter": spec.sweep.parameter, "values": list(spec.sweep.values)}
    return doc


def dump_spec(spec: ExperimentSpec) -> str:
    return tomli_w.dumps(spec_to_dict(spec))


# -- presets --------------------------------------------------------------

# Reference scenario: 100 m^2 region, unit link distance, alpha 2.5, m 3,
# equal 0 dB powers, 20 degree beams, zero roll-off. Sweep values other
# than the caption anchors are decade steps chosen here.
BASELINE_NETWORK = NetworkConfig(
    radius_d=math.sqrt(100.0 / math.pi),
    half_beamwidth=math.radians(20.0) / 2.0,
    pathloss_exp=2.5,
    nakagami_m=3.0,
    bandwidth_w=1.0,
    q_interferer=1.0,
    q_desired=1.0,
    ell_desired=1.0,
    mod_constant=1.0,
)

PRESETS = {
    "fig2": dict(lambda_sf=1e-4, rho=1e-4, sweep=Sweep("lambda_sf", (1e-5, 1e-4, 1e-3))),
    "fig3": dict(lambda_sf=1e-4, rho=1e-4, sweep=Sweep("rho", (1e-4, 1e-3, 1e-2, 1e-1))),
    "fig4": dict(lambda_sf=1e-4, rho=1e-2, sweep=Sweep("blockage_toggle", (True, False))),
}


def preset(name: str, **overrides) -> ExperimentSpec:
    """Spec reproducing one of the BER-vs-SNR studies (``fig2``, ``fig3``, ``fig4``)."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[name]
    base = BASELINE_NETWORK.replace(lambda_sf=p["lambda_sf"], rho=p["rho"])
    kwargs = dict(
        name=name,
        base=base,
        spectral=SpectralModel(bandwidth_w=base.bandwidth_w),
        snr_grid_db=DEFAULT_SNR_GRID,
        sweep=p["sweep"],
        output_dir=f"results/{name}",
    )
    kwargs.update(overrides)
    return ExperimentSpec(**kwargs)


# -- running --------------------------------------------------------------


def compute_curve(spec: ExperimentSpec, cfg: NetworkConfig) -> BerCurve:
    grid = spec.snr_grid_db
    curve = BerCurve(snr_db=np.asarray(grid, dtype=float), cfg=cfg, spectral=spec.spectral)
    if ANALYTIC in spec.engines:
        res = ber_curve(MgfEvaluator(cfg, spec.spectral, distance_law=spec.distance_law), grid)
        curve.ber_analytic = res.ber_analytic
        curve.abserr = res.abserr
    if MONTECARLO in spec.engines:
        est = estimate_ber_curve(
            cfg, spec.spectral, grid, spec.trials, spec.seed, spec.blockage_mode, spec.workers
        )
        curve.ber_mc = np.array([e.ber_mean for e in est])
        curve.mc_stderr = np.array([e.std_error for e in est])
        curve.trials = spec.trials
    return curve


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def curve_csv(curve: BerCurve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, snr in enumerate(curve.snr_db):
        writer.writerow([
            _fmt(snr),
            _fmt(None if curve.ber_analytic is None else curve.ber_analytic[i]),
            _fmt(None if curve.ber_mc is None else curve.ber_mc[i]),
            _fmt(None if curve.mc_stderr is None else curve.mc_stderr[i]),
            "" if curve.trials is None else str(curve.trials),
        ])
    return buf.getvalue()


def read_curve_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Columns of a result CSV; empty fields become NaN."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        key: np.array([float(r[key]) if r[key] != "" else math.nan for r in rows])
        for key in CSV_HEADER
    }


_PLOT_TEMPLATE = '''"""Plot BER curves written by mmwave-interference. Requires matplotlib."""
import csv

import matplotlib.pyplot as plt

FILES = {files!r}

fig, ax = plt.subplots()
for label, path in FILES.items():
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    snr = [float(r["snr_db"]) for r in rows]
    if rows and rows[0]["ber_analytic"]:
        line, = ax.semilogy(snr, [float(r["ber_analytic"]) for r in rows], label=label + " (analytic)")
        color = line.get_color()
    else:
        color = None
    if rows and rows[0]["ber_mc"]:
        ax.semilogy(snr, [float(r["ber_mc"]) for r in rows], "o", mfc="none", color=color,
                    label=label + " (simulation)")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("BER")
ax.grid(True, which="both")
ax.legend()
fig.savefig({png!r}, dpi=150)
'''


@dataclass
class RunResult:
    spec: ExperimentSpec
    curves: dict[str, BerCurve] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)
    wall_time: float = 0.0


def run_experiment(spec: ExperimentSpec) -> RunResult:
    """Compute every curve, then write CSVs, the manifest and the plot script.

    All curves are computed before any file is written; the writes happen
    in sweep order from this single process.
    """
    start = time.perf_counter()
    result = RunResult(spec)
    for label, cfg in spec.cases():
        result.curves[label] = compute_curve(spec, cfg)
    result.wall_time = time.perf_counter() - start

    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for label, curve in result.curves.items():
        path = out / f"{label}.csv"
        path.write_text(curve_csv(curve))
        result.files.append(path)

    if spec.plot_script:
        script = out / f"plot_{spec.name}.py"
        files = {label: f"{label}.csv" for label in result.curves}
        script.write_text(_PLOT_TEMPLATE.format(files=files, png=f"{spec.name}.png"))
        result.files.append(script)

    manifest = spec_to_dict(spec)
    manifest["manifest"] = {
        "tool_version": __version__,
        "wall_time_s": round(result.wall_time, 3),
        "curves": {
            label: {
                "file": f"{label}.csv",
                "active_count_rate": active_count_rate(curve.cfg),
                "analytic_abserr": curve.abserr if curve.abserr is not None else -1.0,
            }
            for label, curve in result.curves.items()
        },
    }
    path = out / "manifest.toml"
    path.write_text(tomli_w.dumps(manifest))
    result.files.append(path)
    return result


def validation_report(spec: ExperimentSpec) -> str:
    """Resolved parameters, active-interferer rates and the SNR-to-noise mapping."""
    lines = [f"experiment {spec.name}: valid"]
    b = spec.base
    lines.append(
        f"  network: lambda_sf={b.lambda_sf!r} rho={b.rho!r} D={b.radius_d!r} m "
        f"theta={b.half_beamwidth!r} rad ({math.degrees(2 * b.half_beamwidth):.6g} deg beamwidth) "
        f"alpha={b.pathloss_exp!r} m={b.nakagami_m!r} W={b.bandwidth_w!r}"
    )
    lines.append(
        f"  powers: q={b.q_interferer!r} q0={b.q_desired!r} ell0={b.ell_desired!r} c={b.mod_constant!r}"
    )
    s = spec.spectral
    lines.append(
        f"  spectral: psd={s.psd_shape.kind}(rolloff={s.psd_shape.rolloff!r}) "
        f"filter={s.filter_shape.kind}(rolloff={s.filter_shape.rolloff!r})"
    )
    lines.append(
        f"  run: engines={','.join(spec.engines)} trials={spec.trials} seed={spec.seed} "
        f"mode={spec.blockage_mode} distance_law={spec.distance_law} workers={spec.workers} "
        f"output_dir={spec.output_dir}"
    )
    for label, cfg in spec.cases():
        lines.append(f"  curve {label}: mu_K={active_count_rate(cfg)!r}")
    lines.append("  snr_db -> noise_power (mean SNR = q0 ell0^-alpha / noise_power)")
    for snr in spec.snr_grid_db:
        lines.append(f"    {snr:8.3f} -> {b.with_snr_db(snr).noise_power!r}")
    return "\n".join(lines)
