"""Monte-Carlo sweeps of the allocation schemes over bit budgets.

Realization ``j`` of a sweep draws its channel from
``numpy.random.SeedSequence([master_seed, j])``, so extending a sweep with more
realizations leaves the earlier ones untouched. Realizations may run in
worker processes; results are always reduced in index order.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .allocation import (
    SCHEMES,
    AllocationProblem,
    SolverSettings,
    brute_force_alloc,
    oracle_guard,
    water_fill,
)
from .channel import RicianConfig, db_to_linear, generate_rician, scale_to_snr, svd_streams
from .quantizer import default_model
from .rate_model import ideal_rate

ALL_SCHEMES = ("Ideal", "JBP", "UB", "Greedy", "UnawareWF", "Oracle")
CSV_HEADER = ["scheme", "b_tot", "kappa_db", "snr_db", "mean_sum_rate", "std_sum_rate", "mean_active_streams", "mean_ms"]


def realization_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(index)])


@dataclass(frozen=True)
class SweepConfig:
    m: int = 128
    k: int = 16
    kappa_db: float = 0.0
    snr_db: float = 10.0
    power: float = 1.0
    noise_var: float = 1.0
    # a reconstructed default grid; pass bit_budgets explicitly for other grids
    bit_budgets: tuple = tuple(range(16, 161, 16))
    realizations: int = 100
    master_seed: int = 0
    schemes: tuple = ("Ideal", "JBP", "UB", "Greedy", "UnawareWF")
    nlos_paths: int = 200
    antenna_spacing: float = 0.5
    workers: int = 1
    timing: bool = True
    grid_resolution: int = 20

    def __post_init__(self):
        object.__setattr__(self, "bit_budgets", tuple(int(b) for b in self.bit_budgets))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        b = self.bit_budgets
        if not b:
            raise ValueError("bit_budgets: at least one budget is required")
        if any(x < 0 for x in b) or any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("bit_budgets: must be nonnegative and strictly ascending")
        if self.realizations < 1:
            raise ValueError("realizations: must be at least 1")
        if self.m < 1 or self.k < 1:
            raise ValueError("m, k: antenna counts must be positive")
        if self.power <= 0:
            raise ValueError("power: must be positive")
        if self.noise_var <= 0:
            raise ValueError("noise_var: must be positive")
        if self.master_seed < 0:
            raise ValueError("master_seed: must be nonnegative")
        if self.workers < 1:
            raise ValueError("workers: must be at least 1")
        if not self.schemes:
            raise ValueError("schemes: at least one scheme is required")
        unknown = [s for s in self.schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ValueError(f"schemes: unknown scheme(s) {', '.join(unknown)}")
        if "Oracle" in self.schemes and not oracle_guard(min(self.m, self.k), max(b)):
            raise ValueError(
                "schemes: Oracle requires min(m, k) <= 4 and max bit budget <= 16"
            )


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    b_tot: int
    kappa_db: float
    snr_db: float
    mean_sum_rate: float
    std_sum_rate: float
    mean_active_streams: float
    mean_ms: float


@dataclass
class SweepResult:
    rows: list
    per_realization: dict = field(default_factory=dict)

    def row(self, scheme: str, b_tot: int) -> SweepRow:
        for r in self.rows:
            if r.scheme == scheme and r.b_tot == b_tot:
                return r
        raise KeyError((scheme, b_tot))

    def mean_rates(self, scheme: str) -> np.ndarray:
        return np.array([r.mean_sum_rate for r in self.rows if r.scheme == scheme])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(
                [r.scheme, r.b_tot] + [format(float(getattr(r, f)), ".12g") for f in CSV_HEADER[2:]]
            )
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path) -> "SweepResult":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_HEADER:
                raise ValueError(f"unexpected CSV header {header!r}")
            rows = [
                SweepRow(rec[0], int(rec[1]), *(float(v) for v in rec[2:]))
                for rec in reader
            ]
        return cls(rows)


def _realization(config: SweepConfig, index: int) -> dict:
    """Rates, active stream counts and timings of every scheme for one channel."""
    chan = generate_rician(
        RicianConfig(config.m, config.k, db_to_linear(config.kappa_db), config.nlos_paths, config.antenna_spacing),
        realization_seed(config.master_seed, index),
    )
    s = scale_to_snr(chan.singulars, config.power, config.noise_var, db_to_linear(config.snr_db), config.m, config.k)
    nb = len(config.bit_budgets)
    out = {}
    model = default_model()
    for scheme in config.schemes:
        rates, active, ms = np.zeros(nb), np.zeros(nb), np.zeros(nb)
        if scheme == "Ideal":
            t0 = time.perf_counter()
            p = water_fill(s, config.power, config.noise_var)
            rate = ideal_rate(p, s, config.noise_var)
            dt = (time.perf_counter() - t0) * 1e3
            rates[:], active[:], ms[:] = rate, np.count_nonzero(p > 0), dt
        else:
            for j, b_tot in enumerate(config.bit_budgets):
                problem = AllocationProblem(s, config.power, config.noise_var, b_tot, model)
                t0 = time.perf_counter()
                if scheme == "Oracle":
                    alloc = brute_force_alloc(problem, config.grid_resolution)
                else:
                    alloc = SCHEMES[scheme](problem)
                ms[j] = (time.perf_counter() - t0) * 1e3
                rates[j], active[j] = alloc.sum_rate, alloc.active_count
        if not config.timing:
            ms[:] = 0.0
        out[scheme] = (rates, active, ms)
    return out


def _worker(args):
    config, index = args
    return _realization(config, index)


def run_sweep(config: SweepConfig) -> SweepResult:
    jobs = [(config, j) for j in range(config.realizations)]
    if config.workers > 1 and config.realizations > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [_worker(job) for job in jobs]

    rows = []
    per_realization = {}
    for scheme in config.schemes:
        rates = np.stack([res[scheme][0] for res in results])
        active = np.stack([res[scheme][1] for res in results])
        ms = np.stack([res[scheme][2] for res in results])
        per_realization[scheme] = rates
        std = rates.std(axis=0, ddof=1) if rates.shape[0] > 1 else np.zeros(rates.shape[1])
        for j, b_tot in enumerate(config.bit_budgets):
            rows.append(
                SweepRow(
                    scheme, b_tot, float(config.kappa_db), float(config.snr_db),
                    float(rates[:, j].mean()), float(std[j]),
                    float(active[:, j].mean()), float(ms[:, j].mean()),
                )
            )
    return SweepResult(rows, per_realization)


def summarize(result: SweepResult) -> str:
    """Fixed-width table sorted by (b_tot, scheme) with each rate as a fraction of Ideal."""
    if not result.rows:
        raise ValueError("empty sweep result")
    ideal = {r.b_tot: r.mean_sum_rate for r in result.rows if r.scheme == "Ideal"}
    header = f"{'b_tot':>6} {'scheme':<10} {'mean_rate':>12} {'std':>10} {'active':>8} {'ms':>10} {'of_ideal':>9}"
    lines = [header]
    for r in sorted(result.rows, key=lambda r: (r.b_tot, r.scheme)):
        ref = ideal.get(r.b_tot)
        frac = f"{r.mean_sum_rate / ref:9.4f}" if ref else f"{'-':>9}"
        lines.append(
            f"{r.b_tot:>6d} {r.scheme:<10} {r.mean_sum_rate:12.4f} {r.std_sum_rate:10.4f} "
            f"{r.mean_active_streams:8.2f} {r.mean_ms:10.3f} {frac}"
        )
    return "\n".join(lines)


def ideal_fraction(result: SweepResult, scheme: str, b_tot: int) -> float:
    return result.row(scheme, b_tot).mean_sum_rate / result.row("Ideal", b_tot).mean_sum_rate


# -- small-instance comparison against the exhaustive oracle ---------------------------


@dataclass(frozen=True)
class OracleCheckConfig:
    streams: int = 3
    instances: int = 50
    bit_budgets: tuple = (6, 9, 12)
    snr_db: tuple = (0.0, 10.0, 20.0)
    master_seed: int = 0
    grid_resolution: int = 20
    schemes: tuple = ("JBP", "Greedy", "UB", "UnawareWF")

    def __post_init__(self):
        object.__setattr__(self, "bit_budgets", tuple(int(b) for b in self.bit_budgets))
        object.__setattr__(self, "snr_db", tuple(float(x) for x in self.snr_db))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.instances < 1:
            raise ValueError("instances: must be at least 1")
        if self.master_seed < 0:
            raise ValueError("master_seed: must be nonnegative")
        if not self.bit_budgets or not oracle_guard(self.streams, max(self.bit_budgets)):
            raise ValueError("streams, bit_budgets: oracle requires streams <= 4 and bit budgets <= 16")
        if self.streams < 1:
            raise ValueError("streams: must be positive")
        unknown = [s for s in self.schemes if s not in SCHEMES or s == "Oracle"]
        if unknown:
            raise ValueError(f"schemes: unknown scheme(s) {', '.join(unknown)}")


@dataclass
class OracleCheckResult:
    config: OracleCheckConfig
    oracle_rates: np.ndarray  # (instances, snr, b_tot)
    scheme_rates: dict  # scheme -> array shaped like oracle_rates

    def ratios(self, scheme: str) -> np.ndarray:
        return self.scheme_rates[scheme] / self.oracle_rates

    def dominance_violations(self, slack: float = 1e-9) -> dict:
        return {
            s: int(np.count_nonzero(r > self.oracle_rates + slack))
            for s, r in self.scheme_rates.items()
        }

    def summary(self) -> str:
        lines = [f"{'scheme':<10} {'snr_db':>7} {'b_tot':>6} {'mean_ratio':>11} {'min_ratio':>10}"]
        for scheme in self.config.schemes:
            ratio = self.ratios(scheme)
            for a, snr_db in enumerate(self.config.snr_db):
                for b, b_tot in enumerate(self.config.bit_budgets):
                    col = ratio[:, a, b]
                    lines.append(
                        f"{scheme:<10} {snr_db:7.1f} {b_tot:6d} {col.mean():11.6f} {col.min():10.6f}"
                    )
        return "\n".join(lines)


def small_instance(streams: int, snr_db: float, seed) -> np.ndarray:
    """Singular values of an i.i.d. Rayleigh ``streams x streams`` channel at the given SNR."""
    rng = np.random.default_rng(seed)
    H = (rng.standard_normal((streams, streams)) + 1j * rng.standard_normal((streams, streams))) / math.sqrt(2)
    return scale_to_snr(svd_streams(H), 1.0, 1.0, db_to_linear(snr_db), streams, streams)


def run_oracle_check(config: OracleCheckConfig) -> OracleCheckResult:
    shape = (config.instances, len(config.snr_db), len(config.bit_budgets))
    oracle = np.zeros(shape)
    rates = {s: np.zeros(shape) for s in config.schemes}
    model = default_model()
    for i in range(config.instances):
        seed = realization_seed(config.master_seed, i)
        for a, snr_db in enumerate(config.snr_db):
            s = small_instance(config.streams, snr_db, seed)
            for b, b_tot in enumerate(config.bit_budgets):
                problem = AllocationProblem(s, 1.0, 1.0, b_tot, model)
                oracle[i, a, b] = brute_force_alloc(problem, config.grid_resolution).sum_rate
                for scheme in config.schemes:
                    rates[scheme][i, a, b] = SCHEMES[scheme](problem).sum_rate
    return OracleCheckResult(config, oracle, rates)


def config_field_names(cls) -> list:
    return [f.name for f in fields(cls)]
