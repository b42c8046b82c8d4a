"""Experiment runner: config ingestion, seeded Monte Carlo sweeps, metrics,
and report emission."""

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import baselines, channel, protocol
from .signal_math import steering_2d

SCENARIOS = (
    "proposed",
    "no_irs",
    "no_cpa",
    "fd",
    "ccce",
    "roadside_single",
    "roadside_multi",
    "perfect_phase",
)

SWEEPABLE = ("tau1", "rician_k_db", "speed_mps", "m", "p_t_dbm", "n_trials", "q_symbols")


class ConfigError(ValueError):
    """A configuration field is missing, unknown, or violates a constraint."""


@dataclass
class SimConfig:
    """Full scenario description; defaults reproduce the nominal desk-scale setup."""

    scenario: str = "proposed"
    n_trials: int = 500
    master_seed: int = 0
    # frame / pilot structure
    n_blocks: int = 40
    q_symbols: int = 100
    tau1: int = 30
    tau_d: int = 1
    tau2: int = 2
    gamma_gap_db: float = 9.0
    eta: float = 1.0
    a_x: int = 20
    a_y: int = 20
    training: str = "random"
    l_x: int | None = None
    # radio / mobility
    carrier_hz: float = 5.9e9
    bandwidth_hz: float = 5e5
    speed_mps: float = 50.0
    t_b: float = 2e-4
    p_t_dbm: float = 26.0
    noise_dbm: float = -110.0
    rician_k_db: float = 10.0
    # geometry and link budgets
    m_x: int = 5
    m_y: int = 10
    bs_irs_distance: float = 100.0
    bs_user_distance: float = 100.0
    irs_user_distance: float = 2.0
    eps0_db: float = -30.0
    exp_bs_user: float = 3.0
    exp_bs_irs: float = 2.2
    exp_irs_user: float = 2.2
    # roadside deployment
    rician_k_rs_db: float = 10.0
    total_blocks: int = 400
    inter_irs_distance: float = 2.0
    n_roadside_irs: int = 2
    # sweep descriptor
    sweep_name: str | None = None
    sweep_values: list = field(default_factory=list)

    @property
    def sigma2(self) -> float:
        return channel.db_to_linear(self.noise_dbm - self.p_t_dbm)

    @property
    def rician_k(self) -> float:
        return channel.db_to_linear(self.rician_k_db)

    @property
    def m(self) -> int:
        return self.m_x * self.m_y

    def frame_config(self) -> protocol.FrameConfig:
        return protocol.FrameConfig(
            n_blocks=self.n_blocks, q_symbols=self.q_symbols,
            tau1=self.tau1, tau_d=self.tau_d, tau2=self.tau2,
            gamma_gap_db=self.gamma_gap_db, sigma2=self.sigma2, eta=self.eta,
            a_x=self.a_x, a_y=self.a_y, training=self.training, l_x=self.l_x,
        )

    def vehicle_params(self) -> channel.VehicleLinkParams:
        return channel.VehicleLinkParams(
            m_x=self.m_x, m_y=self.m_y, rician_k=self.rician_k,
            speed=self.speed_mps, carrier_hz=self.carrier_hz,
            t_b=self.t_b, n_blocks=self.n_blocks,
            bs_irs_distance=self.bs_irs_distance,
            bs_user_distance=self.bs_user_distance,
            irs_user_distance=self.irs_user_distance,
            eps0_db=self.eps0_db, exp_bs_user=self.exp_bs_user,
            exp_bs_irs=self.exp_bs_irs, exp_irs_user=self.exp_irs_user,
        )

    def roadside_scenario(self) -> baselines.RoadsideScenario:
        return baselines.RoadsideScenario(
            m_x=self.m_x, m_y=self.m_y, rician_k=self.rician_k,
            rician_k_rs=channel.db_to_linear(self.rician_k_rs_db),
            velocity=self.speed_mps, carrier_hz=self.carrier_hz, t_b=self.t_b,
            total_blocks=self.total_blocks,
            inter_irs_distance=self.inter_irs_distance,
            n_roadside_irs=self.n_roadside_irs,
            frame_blocks_single=self.n_blocks,
            eps0_db=self.eps0_db, exp_bs_user=self.exp_bs_user,
            exp_bs_irs=self.exp_bs_irs, exp_irs_user=self.exp_irs_user,
        )


def validate_config(cfg: SimConfig) -> SimConfig:
    """Check every field against downstream preconditions; raise ConfigError."""
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {cfg.scenario!r}; valid tags: {', '.join(SCENARIOS)}"
        )
    if cfg.n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    if cfg.m_x < 1 or cfg.m_y < 1:
        raise ConfigError("m_x and m_y must be positive")
    if cfg.q_symbols <= cfg.tau1 + cfg.tau_d:
        raise ConfigError(
            f"q_symbols ({cfg.q_symbols}) must exceed tau1 + tau_d "
            f"({cfg.tau1 + cfg.tau_d}): Stage I needs data symbols"
        )
    if cfg.q_symbols <= cfg.tau2:
        raise ConfigError("q_symbols must exceed tau2")
    if cfg.tau1 < 4:
        raise ConfigError("tau1 must be >= 4 (four unknowns in Stage I)")
    if cfg.tau2 < 2:
        raise ConfigError("tau2 must be >= 2 (rank-2 Stage-II fit)")
    if not 0.0 <= cfg.eta <= 1.0:
        raise ConfigError("eta must lie in [0, 1]")
    if cfg.n_blocks < 2:
        raise ConfigError("n_blocks must be >= 2")
    for name in ("bs_irs_distance", "bs_user_distance", "irs_user_distance", "t_b", "carrier_hz"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.sweep_name is not None:
        if cfg.sweep_name not in SWEEPABLE:
            raise ConfigError(
                f"cannot sweep {cfg.sweep_name!r}; supported: {', '.join(SWEEPABLE)}"
            )
        if not cfg.sweep_values:
            raise ConfigError("sweep_values must be nonempty when sweep_name is set")
    try:
        cfg.frame_config()
    except ValueError as exc:  # belt and braces: surface FrameConfig messages
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str) -> SimConfig:
    """Read a JSON or TOML config whose keys match SimConfig field names."""
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib

        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    else:
        with open(path) as fh:
            raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table/object")
    known = {f.name for f in fields(SimConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    return validate_config(SimConfig(**raw))


def nmse(true_psi, estimates, m_x: int, m_y: int) -> float:
    """Mean normalized steering-vector error over a list of phase estimates."""
    estimates = list(estimates)
    if not estimates:
        raise ValueError("estimates must be nonempty")
    u_true = steering_2d(true_psi[0], true_psi[1], m_x, m_y)
    m = m_x * m_y
    errs = [
        np.linalg.norm(u_true - steering_2d(e[0], e[1], m_x, m_y)) ** 2 / m
        for e in estimates
    ]
    return float(np.mean(errs))


def empirical_cdf(samples) -> tuple[np.ndarray, np.ndarray]:
    """Sorted step CDF: (values, cumulative probabilities i/n)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    values = np.sort(samples)
    probs = np.arange(1, samples.size + 1) / samples.size
    return values, probs


def cdf_quantile(samples, p: float) -> float:
    """Linear-interpolated quantile, e.g. p=0.1 for the 10% outage point."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("samples must be nonempty")
    return float(np.quantile(samples, p))


def trial_rng(master_seed: int, sweep_index: int, trial_index: int) -> np.random.Generator:
    """Independent stream per (sweep point, trial); reproducible under any scheduling."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(sweep_index, trial_index))
    )


def _apply_sweep(cfg: SimConfig, name: str, value) -> SimConfig:
    d = asdict(cfg)
    d["sweep_name"], d["sweep_values"] = None, []
    if name == "m":
        if value % cfg.m_y:
            raise ConfigError(f"swept m={value} not divisible by m_y={cfg.m_y}")
        d["m_x"] = int(value) // cfg.m_y
    else:
        d[name] = value
    return SimConfig(**d)


def run_trial(cfg: SimConfig, rng: np.random.Generator) -> dict:
    """One independent Monte Carlo trial of the configured scenario."""
    tag = cfg.scenario
    if tag in ("roadside_single", "roadside_multi"):
        scn = cfg.roadside_scenario()
        mode = "single" if tag == "roadside_single" else "multi"
        results = baselines.run_roadside_trial(scn, mode, cfg.frame_config(), rng)
        rates = [r.rate_overall for r in results]
        snr2 = np.concatenate([r.snr_per_block[1:] for r in results])
        return {"rate": float(np.mean(rates)), "nmse": None, "snr_stage2": snr2,
                "snr_trace": results[0].snr_per_block}

    channels = channel.sample_frame(cfg.vehicle_params(), rng)
    fc = cfg.frame_config()
    if tag == "no_irs":
        res = baselines.run_no_irs_frame(fc, channels)
    elif tag == "ccce":
        res = baselines.run_ccce_frame(fc, channels, rng)
    elif tag == "no_cpa":
        res = baselines.run_no_cpa_frame(fc, channels, rng)
    elif tag == "fd":
        res = baselines.run_feedback_delay_frame(fc, channels, rng)
    elif tag == "perfect_phase":
        res = protocol.run_frame(fc, channels, rng, psi_true=(channels.psi_x, channels.psi_y))
    else:
        res = protocol.run_frame(fc, channels, rng)

    est = res.stage1_estimates
    err = None
    if est is not None:
        err = nmse(
            (channels.psi_x, channels.psi_y),
            [(est.psi_x_hat, est.psi_y_hat)],
            cfg.m_x, cfg.m_y,
        )
    return {"rate": res.rate_overall, "nmse": err,
            "snr_stage2": res.snr_per_block[1:], "snr_trace": res.snr_per_block}


@dataclass
class ExperimentReport:
    """Aggregates per sweep point plus provenance for reproduction."""

    sweep_name: str | None
    rows: list
    cdfs: dict
    traces: dict
    config: dict
    config_hash: str
    master_seed: int


def config_hash(cfg: SimConfig) -> str:
    payload = json.dumps(asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def run_experiment(cfg: SimConfig) -> ExperimentReport:
    """Run n_trials per sweep point and aggregate rates, NMSE, and SNR CDFs."""
    validate_config(cfg)
    sweep_values = cfg.sweep_values if cfg.sweep_name else [None]
    rows, cdfs, traces = [], {}, {}
    for sweep_idx, value in enumerate(sweep_values):
        point_cfg = cfg if value is None else _apply_sweep(cfg, cfg.sweep_name, value)
        validate_config(point_cfg)
        rates, errs, snr_pool, trace = [], [], [], None
        for trial_idx in range(cfg.n_trials):
            rng = trial_rng(cfg.master_seed, sweep_idx, trial_idx)
            out = run_trial(point_cfg, rng)
            rates.append(out["rate"])
            if out["nmse"] is not None:
                errs.append(out["nmse"])
            snr_pool.append(out["snr_stage2"])
            if trace is None:
                trace = out["snr_trace"]
        rates = np.asarray(rates)
        snr_pool = np.concatenate(snr_pool)
        with np.errstate(divide="ignore"):
            snr_db = channel.linear_to_db(np.maximum(snr_pool, 1e-300))
        values, probs = empirical_cdf(snr_db)
        key = "all" if value is None else value
        cdfs[key] = (values, probs)
        traces[key] = np.asarray(trace)
        rows.append({
            "sweep_value": key,
            "mean_rate": float(rates.mean()),
            "stderr": float(rates.std(ddof=1) / np.sqrt(len(rates))) if len(rates) > 1 else 0.0,
            "nmse": float(np.mean(errs)) if errs else float("nan"),
            "n_trials": int(len(rates)),
        })
    return ExperimentReport(
        sweep_name=cfg.sweep_name, rows=rows, cdfs=cdfs, traces=traces,
        config=asdict(cfg), config_hash=config_hash(cfg), master_seed=cfg.master_seed,
    )


def emit_report(report: ExperimentReport, out_dir) -> list:
    """Write summary.json, per-metric CSVs, and provenance.txt; return paths."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    summary_path = out / "summary.json"
    payload = {
        "sweep_name": report.sweep_name,
        "rows": report.rows,
        "config": report.config,
        "config_hash": report.config_hash,
        "master_seed": report.master_seed,
    }
    summary_path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    written.append(summary_path)

    rates_path = out / "rates.csv"
    with open(rates_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sweep_value", "mean_rate", "stderr", "nmse", "n_trials"])
        for row in report.rows:
            writer.writerow([row["sweep_value"], repr(row["mean_rate"]),
                             repr(row["stderr"]), repr(row["nmse"]), row["n_trials"]])
    written.append(rates_path)

    for key, (values, probs) in report.cdfs.items():
        path = out / f"cdf_{key}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["snr_db", "prob"])
            for v, p in zip(values, probs):
                writer.writerow([repr(float(v)), repr(float(p))])
        written.append(path)

    for key, trace in report.traces.items():
        path = out / f"snr_trace_{key}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["block", "snr_linear"])
            for i, v in enumerate(trace, start=1):
                writer.writerow([i, repr(float(v))])
        written.append(path)

    prov_path = out / "provenance.txt"
    prov_path.write_text(
        f"config_hash: {report.config_hash}\nmaster_seed: {report.master_seed}\n"
    )
    written.append(prov_path)
    return written
