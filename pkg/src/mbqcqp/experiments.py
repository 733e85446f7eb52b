"""Monte-Carlo harness: many random instances, relax, round, compare to the bound.

Realization ``r`` (1-based) draws its instance from substream
``(seed, INSTANCE, r)`` and its rounding trials from
``(seed, ROUNDING, r, trial)``, so a run is a pure function of the config
and independent of how realizations are spread over worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, relaxation, rounding, streams
from .instance import Field, Instance, InstanceError, Sense, check, generate_gaussian_instance

CSV_HEADER = ["realization", "seed", "v_sdp", "v_ubqp", "ratio", "mu", "certified", "iters", "resamples"]
HIST_BINS = 30
MAX_EXCLUDED_FRACTION = 0.01


class ExperimentAborted(RuntimeError):
    """Too many realizations failed to solve."""


@dataclass(frozen=True)
class ExperimentConfig:
    M: int
    N: int
    Q: int
    epsilon: float = 0.0
    field: Field = Field.REAL
    sense: Sense = Sense.MINIMIZE
    realizations: int = 100
    trials: int = rounding.DEFAULT_TRIALS
    seed: int = 0
    out_dir: str | None = None
    oracle_grid: int | None = None  # None: no oracle
    rank_reduce: bool = True
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.realizations < 1 or self.trials < 1:
            raise InstanceError("realizations and trials must be >= 1")
        if self.workers < 1:
            raise InstanceError("workers must be >= 1")
        if self.oracle_grid is not None and self.N != 2:
            raise InstanceError("the oracle needs N = 2")
        # borrow the instance checks on a representative draw
        check(generate_gaussian_instance(self.M, self.N, self.field, self.seed, Q=self.Q,
                                         epsilon=self.epsilon, sense=self.sense, realization=1))
        return self


@dataclass(frozen=True)
class Record:
    realization: int
    seed: int
    v_sdp: float
    v_ubqp: float
    ratio: float
    mu: float
    certified: bool
    iters: int
    resamples: int
    oracle: float | None = None


@dataclass(frozen=True)
class Exclusion:
    realization: int
    reason: str


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list
    exclusions: list
    aggregates: dict = field(default_factory=dict)
    histogram: dict = field(default_factory=dict)


def _realization(config: ExperimentConfig, r: int):
    inst = generate_gaussian_instance(config.M, config.N, config.field, config.seed, Q=config.Q,
                                      epsilon=config.epsilon, sense=config.sense, realization=r)
    try:
        relax = relaxation.solve_relaxation(inst)
        out = rounding.round_relaxation(inst, relax, config.trials, config.seed, r,
                                        reduce_rank=config.rank_reduce)
    except (relaxation.RelaxationError, rounding.RoundingError, np.linalg.LinAlgError) as exc:
        return Exclusion(r, f"{type(exc).__name__}: {exc}")
    if out.unbounded:
        return Exclusion(r, "rounding found an unbounded direction")
    try:
        rep = bounds.bound_for(inst)
    except bounds.NoGuaranteeError:
        rep = None
    ratio = out.v_ubqp / relax.value
    if rep is None:
        mu, ok = math.nan, False
    else:
        cert = bounds.certify(rep, out.v_ubqp, relax.value)
        mu, ok = cert.mu, bool(cert.certified)
    orc = None
    if config.oracle_grid is not None:
        from . import oracle
        orc = oracle.oracle_value(inst, config.oracle_grid).value
    return Record(r, config.seed, relax.value, out.v_ubqp, ratio, mu, ok,
                  relax.raw.iterations if relax.raw is not None else 0, out.trials_resampled, orc)


def _job(args):
    return _realization(*args)


def aggregate(ratios: np.ndarray) -> dict:
    """max / mean / std of the ratios; ``std`` uses ``R - 1`` and is 0 (flagged) for ``R = 1``."""
    n = ratios.size
    if n == 0:
        return {"count": 0, "max": None, "min": None, "mean": None, "std": None, "std_defined": False}
    return {
        "count": int(n),
        "max": float(np.max(ratios)),
        "min": float(np.min(ratios)),
        "mean": float(np.mean(ratios)),
        "std": float(np.std(ratios, ddof=1)) if n > 1 else 0.0,
        "std_defined": n > 1,
    }


def histogram(ratios: np.ndarray, sense: Sense, bins: int = HIST_BINS) -> dict:
    """Equal-width bins over ``[1, max ratio]`` (min model) or ``[min ratio, 1]`` (max model)."""
    if ratios.size == 0:
        return {"bin_edges": [], "counts": []}
    if sense is Sense.MINIMIZE:
        lo, hi = 1.0, max(1.0, float(np.max(ratios)))
        lo = min(lo, float(np.min(ratios)))
    else:
        lo, hi = min(1.0, float(np.min(ratios))), 1.0
        hi = max(hi, float(np.max(ratios)))
    if hi <= lo:
        hi = lo + 1e-12
    counts, edges = np.histogram(ratios, bins=bins, range=(lo, hi))
    return {"bin_edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every realization and aggregate.

    Failed realizations are listed in ``exclusions``; more than 1% of ``R``
    raises :class:`ExperimentAborted`.
    """
    config.validate()
    jobs = [(config, r) for r in range(1, config.realizations + 1)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            results = list(ex.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        results = [_job(j) for j in jobs]
    records = [x for x in results if isinstance(x, Record)]
    exclusions = [x for x in results if isinstance(x, Exclusion)]
    if len(exclusions) > MAX_EXCLUDED_FRACTION * config.realizations:
        raise ExperimentAborted(
            f"{len(exclusions)} of {config.realizations} realizations failed; first: {exclusions[0].reason}")
    ratios = np.array([x.ratio for x in records])
    return ExperimentReport(config=config, records=records, exclusions=exclusions,
                            aggregates=aggregate(ratios), histogram=histogram(ratios, config.sense))


# -- output -------------------------------------------------------------------

def records_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for x in report.records:
        # repr keeps every float round-trippable
        w.writerow([x.realization, x.seed, repr(x.v_sdp), repr(x.v_ubqp), repr(x.ratio), repr(x.mu),
                    "true" if x.certified else "false", x.iters, x.resamples])
    return buf.getvalue()


def read_records_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k in ("v_sdp", "v_ubqp", "ratio", "mu"):
            row[k] = float(row[k])
        for k in ("realization", "seed", "iters", "resamples"):
            row[k] = int(row[k])
        row["certified"] = row["certified"] == "true"
    return rows


def summary_dict(report: ExperimentReport) -> dict:
    cfg = asdict(report.config)
    cfg["field"] = report.config.field.value
    cfg["sense"] = report.config.sense.value
    cfg.pop("out_dir")
    cfg.pop("workers")
    recs = report.records
    out = {
        "config": cfg,
        "stream_version": streams.STREAM_VERSION,
        "records": len(recs),
        "excluded": len(report.exclusions),
        "exclusions": [asdict(e) for e in report.exclusions],
        "ratio": report.aggregates,
        "certified_all": bool(recs) and all(x.certified for x in recs),
        "uncertified": [x.realization for x in recs if not x.certified],
    }
    if report.config.sense is Sense.MAXIMIZE and report.config.epsilon == 0.0:
        out["bound"] = "none: epsilon = 0 admits no positive guarantee"
    if report.config.oracle_grid is not None:
        out["oracle"] = [x.oracle for x in recs]
    return out


def emit_report(report: ExperimentReport, out_dir=None, formats=("csv", "summary", "histogram")) -> dict:
    """Write ``records.csv``, ``summary.json`` and ``histogram.json``; return their paths."""
    out = Path(out_dir or report.config.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    if "csv" in formats:
        p = out / "records.csv"
        p.write_text(records_csv(report), encoding="utf-8")
        paths["csv"] = p
    if "summary" in formats:
        p = out / "summary.json"
        p.write_text(json.dumps(summary_dict(report), indent=1, allow_nan=True) + "\n", encoding="utf-8")
        paths["summary"] = p
    if "histogram" in formats:
        p = out / "histogram.json"
        p.write_text(json.dumps(report.histogram, indent=1) + "\n", encoding="utf-8")
        paths["histogram"] = p
    return paths


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
