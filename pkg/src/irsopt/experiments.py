"""Experiment configs, figure presets and the validate / sweep / optimize / overhead runs.

dB quantities only exist here (fields ending in ``_db``); everything handed to
the library is linear.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import gamma as gamma_dist

from .channel import ConfigError, LinkGeometry, SystemConfig, iter_channel_blocks
from .metrics import ergodic_rate, outage_probability
from .moments import DegenerateVarianceError, PhaseVector, fit_snr
from .montecarlo import (
    SnrSampleSet,
    empirical_cdf_distance,
    greedy_phases,
    outage_stderr,
    simulate_snr,
    snr_of_batch,
)
from .optimizers import (
    OptimizerSettings,
    build_op_objective,
    build_rate_objective,
    mpso_optimize,
    pso_optimize,
)

log = logging.getLogger(__name__)

CSV_VERSION = 1
SWEEP_AXES = ("snr_db", "N", "M", "gamma_th_db", "bits")
METRICS = ("op", "rate")
# |analytic - MC| allowance for OP on top of 3 standard errors: the gamma law is
# an approximation, and its accepted CDF error is the KS tolerance of the fit check.
GATE_OP_CDF_ALLOWANCE = 0.03
GATE_RATE_BITS = 0.03


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass
class Scenario:
    bs: tuple[float, float] = (0.0, 0.0)
    irs: tuple[float, float] = (0.0, 10.0)
    user: tuple[float, float] = (90.0, 0.0)
    pathloss: dict = field(default_factory=lambda: {"sd": 4.0, "sr": 4.0, "rd": 4.0})
    rice: dict = field(default_factory=lambda: {"sd": 5.0, "sr": 10.0, "rd": 20.0})
    alpha: float = 1.0
    M: int = 4
    N: int = 40
    bits: int = 5
    snr_db: float = 73.0
    gamma_th_db: float = 0.0

    def geometry(self, link: str) -> LinkGeometry:
        ends = {"sd": (self.bs, self.user), "sr": (self.bs, self.irs), "rd": (self.irs, self.user)}
        a, b = ends[link]
        distance = math.dist(a, b)
        return LinkGeometry(distance, float(self.pathloss[link]), float(self.rice[link]))

    def system(self) -> SystemConfig:
        return SystemConfig.from_geometry(
            int(self.M),
            int(self.N),
            int(self.bits),
            float(self.alpha),
            db_to_linear(self.snr_db),
            self.geometry("sd"),
            self.geometry("sr"),
            self.geometry("rd"),
        )

    @property
    def gamma_th(self) -> float:
        return db_to_linear(self.gamma_th_db)


@dataclass
class Sweep:
    axis: str = "snr_db"
    values: list = field(default_factory=lambda: [73.0])


@dataclass
class MonteCarloSettings:
    samples: int = 100_000
    seed: int = 1
    baseline_samples: int | None = None


@dataclass
class ExperimentConfig:
    name: str = "custom"
    scenario: Scenario = field(default_factory=Scenario)
    sweep: Sweep = field(default_factory=Sweep)
    metric: str = "op"
    methods: list = field(default_factory=lambda: ["mpso-b1", "mpso-b2", "mpso-b5", "pso"])
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    mc: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    phases_file: str | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.sweep.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {self.sweep.axis!r}")
        if not self.sweep.values:
            raise ConfigError("sweep needs at least one value")
        for link in ("sd", "sr", "rd"):
            if link not in self.scenario.pathloss or link not in self.scenario.rice:
                raise ConfigError(f"missing path-loss or Rice factor for link {link!r}")
        for method in self.methods:
            parse_method(method)
        if "fixed-phase" in self.methods and not self.phases_file:
            raise ConfigError("method 'fixed-phase' needs phases_file")

    # -- (de)serialization --------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenario"]["bs"] = list(self.scenario.bs)
        d["scenario"]["irs"] = list(self.scenario.irs)
        d["scenario"]["user"] = list(self.scenario.user)
        for key in ("mpso_inertia", "pso_inertia", "accel"):
            d["optimizer"][key] = list(d["optimizer"][key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d or {})
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            scen = dict(d.get("scenario") or {})
            for key in ("bs", "irs", "user"):
                if key in scen:
                    scen[key] = tuple(float(v) for v in scen[key])
            opt = dict(d.get("optimizer") or {})
            for key in ("mpso_inertia", "pso_inertia", "accel"):
                if key in opt:
                    opt[key] = tuple(float(v) for v in opt[key])
            return cls(
                name=d.get("name", "custom"),
                scenario=Scenario(**scen),
                sweep=Sweep(**(d.get("sweep") or {})),
                metric=d.get("metric", "op"),
                methods=list(d.get("methods", cls().methods)),
                optimizer=OptimizerSettings(**opt),
                mc=MonteCarloSettings(**(d.get("mc") or {})),
                phases_file=d.get("phases_file"),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
        return cls.from_dict(data or {})

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def cell(self, value) -> Scenario:
        """Scenario with the sweep axis set to ``value``."""
        axis = self.sweep.axis
        cast = int if axis in ("N", "M", "bits") else float
        return replace(self.scenario, **{axis: cast(value)})


# --- presets ------------------------------------------------------------------

DESIGNED = ["mpso-b1", "mpso-b2", "mpso-b5", "pso", "zero-phase", "instantaneous-greedy"]
# random phases are redrawn per cell, so they only make sense where N is fixed
ALL_METHODS = DESIGNED[:4] + ["random"] + DESIGNED[4:]
def _sweep_mc() -> MonteCarloSettings:
    return MonteCarloSettings(samples=100_000, seed=1, baseline_samples=20_000)


def preset(name: str) -> ExperimentConfig:
    base = Scenario()
    if name == "fig1":
        return ExperimentConfig(
            name, replace(base, M=4, snr_db=73.0), Sweep("N", [20, 40]), "op", ["random"],
            mc=MonteCarloSettings(samples=1_000_000),
        )
    if name == "fig2a":
        return ExperimentConfig(
            name, replace(base, M=4, N=40, gamma_th_db=0.0),
            Sweep("snr_db", [69.0, 70.0, 71.0, 72.0, 73.0, 74.0]), "op", list(ALL_METHODS), mc=_sweep_mc(),
        )
    if name == "fig2b":
        return ExperimentConfig(
            name, replace(base, M=4, snr_db=73.0, gamma_th_db=0.0),
            Sweep("N", [10, 20, 30, 40, 50]), "op", list(DESIGNED), mc=_sweep_mc(),
        )
    if name == "fig3a":
        return ExperimentConfig(
            name, replace(base, N=20, snr_db=73.0, gamma_th_db=5.0),
            Sweep("M", [4, 6, 8, 10, 12]), "op", list(DESIGNED), mc=_sweep_mc(),
        )
    if name == "fig3b":
        return ExperimentConfig(
            name, replace(base, M=2, N=20, snr_db=73.0),
            Sweep("gamma_th_db", [-10.0, -8.0, -6.0, -4.0, -2.0, 0.0, 2.0]), "op", list(DESIGNED), mc=_sweep_mc(),
        )
    if name == "fig4a":
        return ExperimentConfig(
            name, replace(base, N=20, snr_db=73.0), Sweep("M", [1, 2, 4, 8, 16]), "rate",
            list(DESIGNED), mc=_sweep_mc(),
        )
    if name == "fig4b":
        return ExperimentConfig(
            name, replace(base, M=4, N=40), Sweep("snr_db", [60.0, 65.0, 70.0, 75.0, 80.0]), "rate",
            list(DESIGNED), mc=_sweep_mc(),
        )
    if name == "table2":
        return ExperimentConfig(name, base, Sweep("bits", [5]), "op", [])
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")


PRESETS = ("fig1", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "table2")


# --- methods ------------------------------------------------------------------


def parse_method(method: str) -> tuple[str, int | None]:
    """Split a method name into (kind, bits)."""
    if method in ("pso", "random", "zero-phase", "fixed-phase", "mpso"):
        return method, None
    if method == "instantaneous-greedy":
        return "greedy", None
    for prefix, kind in (("mpso-b", "mpso"), ("instantaneous-greedy-b", "greedy")):
        if method.startswith(prefix):
            try:
                bits = int(method[len(prefix):])
            except ValueError:
                break
            if bits < 1:
                break
            return kind, bits
    raise ConfigError(f"unknown method {method!r}")


def load_phases(path: str | Path) -> PhaseVector:
    data = json.loads(Path(path).read_text())
    if data.get("levels") is not None:
        return PhaseVector.quantized(data["levels"], int(data["bits"]), float(data["alpha"]))
    return PhaseVector.continuous(data["angles"], float(data["alpha"]))


def save_phases(path: str | Path, phases: PhaseVector) -> None:
    data = {
        "N": phases.N,
        "alpha": phases.alpha,
        "bits": phases.bits,
        "levels": None if phases.levels is None else [int(v) for v in phases.levels],
        "angles": [float(a) for a in phases.angles],
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def _objective(cfg: ExperimentConfig, system: SystemConfig, scen: Scenario):
    if cfg.metric == "op":
        return build_op_objective(system, scen.gamma_th)
    return build_rate_objective(system)


def design_phases(cfg: ExperimentConfig, method: str, system: SystemConfig, scen: Scenario):
    """Statistical-CSI phases for ``method`` (None for the instantaneous baseline)."""
    kind, bits = parse_method(method)
    N = system.N
    if kind == "greedy":
        return None, None
    if kind == "zero-phase":
        return PhaseVector.zeros(N, system.alpha), None
    if kind == "random":
        rng = np.random.default_rng([cfg.optimizer.seed, N])
        return PhaseVector.continuous(rng.uniform(0.0, 2 * np.pi, N), system.alpha), None
    if kind == "fixed-phase":
        phases = load_phases(cfg.phases_file)
        if phases.N != N:
            raise ConfigError(f"phase file has N={phases.N}, scenario has N={N}")
        return phases, None
    objective = _objective(cfg, system, scen)
    if kind == "pso":
        result = pso_optimize(objective, N, cfg.optimizer)
    else:
        result = mpso_optimize(objective, N, bits or system.bits, cfg.optimizer)
    return result.phases, result


def analytic_metric(metric: str, system: SystemConfig, phases: PhaseVector, gamma_th: float) -> float:
    fit = fit_snr(system, phases)
    return outage_probability(fit, gamma_th) if metric == "op" else ergodic_rate(fit)


def mc_metric(metric: str, samples: np.ndarray, gamma_th: float) -> tuple[float, float]:
    n = samples.shape[0]
    if metric == "op":
        p = float(np.count_nonzero(samples <= gamma_th)) / n
        return p, outage_stderr(p, n)
    r = np.log2(1.0 + samples)
    return math.fsum(r) / n, float(r.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf


def gate_ok(metric: str, analytic: float, mc: float, stderr: float) -> bool:
    if not np.isfinite(analytic):
        return True
    if metric == "op":
        return abs(analytic - mc) <= 3 * stderr + GATE_OP_CDF_ALLOWANCE
    return abs(analytic - mc) <= GATE_RATE_BITS


# --- sweep --------------------------------------------------------------------


def _sweep_cell(cfg: ExperimentConfig, value) -> list[dict]:
    scen = cfg.cell(value)
    system = scen.system()
    gamma_th = scen.gamma_th
    designs = {}
    rows = {}
    for method in cfg.methods:
        try:
            phases, _ = design_phases(cfg, method, system, scen)
            designs[method] = phases
            analytic = math.nan if phases is None else analytic_metric(cfg.metric, system, phases, gamma_th)
            rows[method] = {"analytic": analytic, "error": ""}
        except (DegenerateVarianceError, ValueError, RuntimeError) as exc:
            log.warning("cell %s=%s method %s failed: %s", cfg.sweep.axis, value, method, exc)
            rows[method] = {"analytic": math.nan, "error": str(exc)}

    n = cfg.mc.samples
    n_base = min(cfg.mc.baseline_samples or n, n)
    seen = 0
    chunks = {m: [] for m in cfg.methods}
    for batch in iter_channel_blocks(system, n, cfg.mc.seed):
        for method in cfg.methods:
            if rows[method]["error"]:
                continue
            kind, bits = parse_method(method)
            if kind == "greedy":
                if seen >= n_base:
                    continue
                take = min(len(batch), n_base - seen)
                sub = type(batch)(batch.h_sd[:take], batch.H_sr[:take], batch.h_rd[:take])
                _, power = greedy_phases(sub, bits, system.alpha)
                chunks[method].append(system.snr * power)
            else:
                chunks[method].append(snr_of_batch(batch, designs[method], system.snr))
        seen += len(batch)

    out = []
    for method in cfg.methods:
        row = {"axis_value": value, "method": method, "analytic_metric": rows[method]["analytic"]}
        if rows[method]["error"]:
            row.update(mc_metric=math.nan, mc_stderr=math.nan, status="error: " + rows[method]["error"])
        else:
            samples = np.concatenate(chunks[method])
            mc, se = mc_metric(cfg.metric, samples, gamma_th)
            ok = gate_ok(cfg.metric, row["analytic_metric"], mc, se)
            row.update(mc_metric=mc, mc_stderr=se, status="ok" if ok else "gate-fail")
        out.append(row)
    return out


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """One row per (sweep value, method), in axis order regardless of completion order."""
    values = list(cfg.sweep.values)
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_sweep_cell, [cfg] * len(values), values))
    else:
        cells = [_sweep_cell(cfg, v) for v in values]
    return [row for cell in cells for row in cell]


SWEEP_COLUMNS = ("axis_value", "method", "analytic_metric", "mc_metric", "mc_stderr", "status")


def _header(kind: str, cfg: ExperimentConfig, extra: str = "") -> str:
    return (
        f"# irsopt-{kind} v{CSV_VERSION} config={cfg.name} fingerprint={cfg.fingerprint()} "
        f"seed={cfg.mc.seed}{extra}\n"
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: str, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(header)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def write_sweep(out_dir: str | Path, cfg: ExperimentConfig, rows: list[dict]) -> Path:
    path = Path(out_dir) / f"{cfg.name}_sweep.csv"
    extra = f" axis={cfg.sweep.axis} metric={cfg.metric}"
    if any(parse_method(m)[0] == "greedy" for m in cfg.methods):
        extra += " note=instantaneous-greedy=instantaneous-CSI-greedy-baseline"
    write_csv(path, _header("sweep", cfg, extra), SWEEP_COLUMNS, rows)
    return path


# --- validate -----------------------------------------------------------------


@dataclass
class ValidationResult:
    N: int
    ks: float
    n: int
    warning: str
    rows: list


def run_validate(cfg: ExperimentConfig, grid_points: int = 200) -> list[ValidationResult]:
    """Empirical vs gamma-approximated SNR CDF for every N in the sweep (or the scenario N)."""
    Ns = [int(v) for v in cfg.sweep.values] if cfg.sweep.axis == "N" else [cfg.scenario.N]
    method = cfg.methods[0] if cfg.methods else "random"
    results = []
    for N in Ns:
        scen = replace(cfg.scenario, N=N)
        system = scen.system()
        phases, _ = design_phases(cfg, method, system, scen)
        if phases is None:
            raise ConfigError("validation needs a statistical phase design, not the greedy baseline")
        fit = fit_snr(system, phases)
        samples: SnrSampleSet = simulate_snr(system, phases, cfg.mc.samples, cfg.mc.seed)

        def cdf(x):
            return gamma_dist.cdf(x, fit.shape, scale=fit.scale)

        ks = empirical_cdf_distance(samples, cdf)
        ordered = np.sort(samples.samples)
        lo, hi = np.quantile(ordered, [0.001, 0.999]) if samples.n > 1 else (ordered[0], ordered[0] * 2)
        grid = np.geomspace(max(lo, 1e-300), max(hi, lo * (1 + 1e-9)), grid_points)
        ecdf = np.searchsorted(ordered, grid, side="right") / samples.n
        rows = [
            {"N": N, "snr_db": float(linear_to_db(x)), "empirical_cdf": float(e), "gamma_cdf": float(cdf(x))}
            for x, e in zip(grid, ecdf)
        ]
        warning = "low-sample" if samples.n < 1000 else ""
        results.append(ValidationResult(N, ks, samples.n, warning, rows))
        log.info("validate N=%d KS=%.4f n=%d %s", N, ks, samples.n, warning)
    return results


def write_validate(out_dir: str | Path, cfg: ExperimentConfig, results: list[ValidationResult]) -> Path:
    path = Path(out_dir) / f"{cfg.name}_cdf.csv"
    rows = [r for res in results for r in res.rows]
    write_csv(path, _header("validate", cfg), ("N", "snr_db", "empirical_cdf", "gamma_cdf"), rows)
    summary = [
        {"N": r.N, "ks": r.ks, "samples": r.n, "warning": r.warning} for r in results
    ]
    (Path(out_dir) / f"{cfg.name}_ks.json").write_text(json.dumps(summary, indent=2) + "\n")
    return path


# --- overhead -----------------------------------------------------------------


def run_overhead(x_list, bits: int, continuous_bits: int = 32, N: int | None = None) -> list[dict]:
    """BS-to-IRS-controller signalling per large-scale interval.

    Instantaneous design sends ``continuous_bits * N`` bits every small-scale
    interval (x of them); the statistical design sends ``bits * N`` once.
    Bit counts are per IRS element unless ``N`` is given.
    """
    if bits < 1:
        raise ConfigError("bits must be >= 1")
    per = 1 if N is None else int(N)
    rows = []
    for x in x_list:
        if x < 1:
            raise ConfigError(f"x must be >= 1, got {x}")
        inst = continuous_bits * x * per
        stat = bits * per
        rows.append(
            {
                "x": x,
                "bits_instantaneous": inst,
                "bits_statistical": stat,
                "reduction_pct": round((1.0 - stat / inst) * 100.0, 2),
            }
        )
    return rows


# --- optimize -----------------------------------------------------------------


@dataclass
class OptimizeReport:
    method: str
    phases: PhaseVector
    value: float
    trace: np.ndarray
    mc_metric: float
    mc_stderr: float
    phase_independent: bool
    gate: bool

    def summary(self) -> dict:
        return {
            "method": self.method,
            "objective_value": self.value,
            "mc_metric": self.mc_metric,
            "mc_stderr": self.mc_stderr,
            "phase_independent": self.phase_independent,
            "trace_flat": bool(np.all(self.trace == self.trace[0])),
            "gate_ok": self.gate,
            "levels": None if self.phases.levels is None else [int(v) for v in self.phases.levels],
            "angles": [float(a) for a in self.phases.angles],
        }


def is_phase_independent(objective, N: int, probes: int = 10, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    values = objective.batch(rng.uniform(0, 2 * np.pi, (probes, N)))
    ref = values[0]
    return bool(np.all(np.abs(values - ref) <= 1e-12 * max(abs(ref), 1e-300)))


def run_optimize(cfg: ExperimentConfig) -> OptimizeReport:
    """Optimize the first optimizer method in ``cfg.methods`` at the scenario point."""
    scen = cfg.scenario
    system = scen.system()
    candidates = [m for m in cfg.methods if parse_method(m)[0] in ("mpso", "pso")]
    if not candidates:
        raise ConfigError("optimize needs an mpso-bK or pso method")
    method = candidates[0]
    phases, result = design_phases(cfg, method, system, scen)
    samples = simulate_snr(system, phases, cfg.mc.samples, cfg.mc.seed).samples
    mc, se = mc_metric(cfg.metric, samples, scen.gamma_th)
    objective = _objective(cfg, system, scen)
    return OptimizeReport(
        method=method,
        phases=phases,
        value=result.value,
        trace=result.trace,
        mc_metric=mc,
        mc_stderr=se,
        phase_independent=is_phase_independent(objective, system.N),
        gate=gate_ok(cfg.metric, result.value, mc, se),
    )


def write_optimize(out_dir: str | Path, cfg: ExperimentConfig, report: OptimizeReport) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_phases(out / f"{cfg.name}_phases.json", report.phases)
    rows = [{"iteration": i + 1, "best_value": float(v)} for i, v in enumerate(report.trace)]
    write_csv(out / f"{cfg.name}_trace.csv", _header("trace", cfg), ("iteration", "best_value"), rows)
    path = out / f"{cfg.name}_report.json"
    path.write_text(json.dumps(report.summary(), indent=2) + "\n")
    return path
