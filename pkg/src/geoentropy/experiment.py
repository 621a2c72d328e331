"""Sweep orchestration over edge counts, knee detection on the resulting
entropy curves, and the self-describing CSV output format."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .graphs import (
    ConstantWeights,
    ThetaCoupledWeights,
    WeightModel,
    gibbs_entropy,
    largest_component_size,
    sample_gnk,
)
from .volume import (
    DEFAULT_SWEEP_DET_TOL,
    EstimationFailureError,
    ParameterBox,
    aggregate_entropy,
    normalized_entropy_sample,
)

__all__ = [
    "SweepConfig",
    "CurveRow",
    "EntropyCurve",
    "KneeResult",
    "default_k_values",
    "run_sweep",
    "knee_location",
    "emit_csv",
    "read_csv",
]

log = logging.getLogger(__name__)


def default_k_values(n: int, k_max: Optional[int] = None, k_step: Optional[int] = None) -> list:
    """Edge-count grid: unit step through k = 3n, geometric (x1.25) beyond.

    The transition lives at k ~ n/2, so the dense head covers it at the finest
    possible resolution while the tail stays cheap.
    """
    total = n * (n - 1) // 2
    if k_max is None:
        k_max = total
    if not 0 <= k_max <= total:
        raise ValueError(f"k_max={k_max} outside [0, {total}] for n={n}")
    if k_step is not None:
        if k_step < 1:
            raise ValueError(f"k_step must be >= 1, got {k_step}")
        return list(range(0, k_max + 1, k_step))
    ks = list(range(0, min(3 * n, k_max) + 1))
    k = ks[-1]
    while k < k_max:
        k = min(max(int(k * 1.25), k + 1), k_max)
        ks.append(k)
    return ks


@dataclass
class SweepConfig:
    """Full description of a sweep; serializable so any output is reproducible
    from its own config echo."""

    n: int
    k_values: list
    weight_model: WeightModel
    box: ParameterBox
    n_samples: int = 10_000
    n_realizations: int = 100
    master_seed: int = 0
    log10_cap: float = 308.0
    det_tol: float = DEFAULT_SWEEP_DET_TOL
    regularizer: str = "hypercube"
    out_path: Optional[str] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        total = self.n * (self.n - 1) // 2
        ks = sorted(set(int(k) for k in self.k_values))
        if not ks:
            raise ValueError("k_values must be nonempty")
        if ks[0] < 0 or ks[-1] > total:
            raise ValueError(f"k_values must lie in [0, {total}] for n={self.n}")
        self.k_values = ks
        if not isinstance(self.weight_model, (ConstantWeights, ThetaCoupledWeights)):
            raise TypeError(f"unsupported weight model {type(self.weight_model).__name__}")
        if self.box.n != self.n:
            raise ValueError(f"box dimension {self.box.n} does not match n={self.n}")
        if self.n_samples < 100:
            raise ValueError(f"n_samples must be >= 100, got {self.n_samples}")
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if not self.det_tol > 0:
            raise ValueError(f"det_tol must be positive, got {self.det_tol}")
        if self.regularizer not in ("hypercube", "upsilon"):
            raise ValueError(f"regularizer must be 'hypercube' or 'upsilon', got {self.regularizer!r}")

    def to_dict(self) -> dict:
        if isinstance(self.weight_model, ConstantWeights):
            kind, r = "constant", self.weight_model.r
        else:
            kind = "theta_coupled"
            r = self.weight_model.r if np.isscalar(self.weight_model.r) else self.weight_model.r.tolist()
        return {
            "n": self.n,
            "k_values": list(self.k_values),
            "weight_model": kind,
            "weight_r": r,
            "theta_min": self.box.theta_min,
            "theta_max": self.box.theta_max,
            "n_samples": self.n_samples,
            "n_realizations": self.n_realizations,
            "master_seed": self.master_seed,
            "log10_cap": self.log10_cap,
            "det_tol": self.det_tol,
            "regularizer": self.regularizer,
            "out_path": self.out_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        kind = d["weight_model"]
        r = d["weight_r"]
        if kind == "constant":
            w = ConstantWeights(r)
        elif kind == "theta_coupled":
            w = ThetaCoupledWeights(r if np.isscalar(r) else np.asarray(r))
        else:
            raise ValueError(f"unknown weight model kind {kind!r}")
        return cls(
            n=int(d["n"]),
            k_values=[int(k) for k in d["k_values"]],
            weight_model=w,
            box=ParameterBox(float(d["theta_min"]), float(d["theta_max"]), int(d["n"])),
            n_samples=int(d["n_samples"]),
            n_realizations=int(d["n_realizations"]),
            master_seed=int(d["master_seed"]),
            log10_cap=float(d["log10_cap"]),
            det_tol=float(d.get("det_tol", DEFAULT_SWEEP_DET_TOL)),
            regularizer=str(d["regularizer"]),
            out_path=d.get("out_path"),
        )


@dataclass(frozen=True)
class CurveRow:
    k: int
    k_over_n: float
    s_tilde_mean: float
    s_tilde_stderr: float
    excluded_fraction: float
    gibbs_entropy: float
    giant_fraction: float


@dataclass
class EntropyCurve:
    rows: list

    def __post_init__(self):
        ks = [r.k for r in self.rows]
        if ks != sorted(ks):
            raise ValueError("curve rows must be sorted by k")
        for r in self.rows:
            if not math.isnan(r.s_tilde_stderr) and r.s_tilde_stderr < 0:
                raise ValueError(f"negative stderr at k={r.k}")
            if not 0 <= r.excluded_fraction <= 1:
                raise ValueError(f"excluded fraction out of [0,1] at k={r.k}")
            if not 0 <= r.giant_fraction <= 1:
                raise ValueError(f"giant fraction out of [0,1] at k={r.k}")

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _realization(cfg: SweepConfig, k: int, rep: int):
    """One (k, realization) task; streams derive from (master_seed, k, rep)."""
    graph_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(cfg.master_seed, spawn_key=(k, rep, 0)))
    )
    g = sample_gnk(cfg.n, k, graph_rng)
    giant = largest_component_size(g) / cfg.n
    mc_seed = np.random.SeedSequence(cfg.master_seed, spawn_key=(k, rep, 1))
    try:
        sample = normalized_entropy_sample(
            g,
            cfg.weight_model,
            cfg.box,
            cfg.n_samples,
            seed=mc_seed,
            log10_cap=cfg.log10_cap,
            det_tol=cfg.det_tol,
            scheme=cfg.regularizer,
        )
        excl = sample.estimate.excluded_fraction if sample.estimate is not None else 0.0
        return giant, sample, excl
    except EstimationFailureError as err:
        excl = (err.n_excluded_overflow + err.n_excluded_degenerate) / max(err.n_samples, 1)
        return giant, None, excl


def run_sweep(cfg: SweepConfig, threads: int = 1, progress: bool = False) -> EntropyCurve:
    """Run the full sweep; deterministic for a fixed master seed.

    Work parallelizes over (k, realization) pairs; aggregation is an ordered
    reduction by realization index, so the result does not depend on the
    thread count.  Estimation failures are logged per realization and a row
    with zero surviving realizations gets NaN statistics.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    tasks = [(k, rep) for k in cfg.k_values for rep in range(cfg.n_realizations)]
    results = {}
    if threads == 1:
        for k, rep in tasks:
            results[(k, rep)] = _realization(cfg, k, rep)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {(k, rep): pool.submit(_realization, cfg, k, rep) for k, rep in tasks}
        for key, fut in futures.items():
            results[key] = fut.result()

    rows = []
    for k in cfg.k_values:
        per_rep = [results[(k, rep)] for rep in range(cfg.n_realizations)]
        giants = [g for g, _, _ in per_rep]
        samples = [s for _, s, _ in per_rep if s is not None]
        excls = [e for _, _, e in per_rep]
        n_failed = cfg.n_realizations - len(samples)
        if n_failed:
            log.warning("k=%d: %d of %d realizations failed estimation", k, n_failed, cfg.n_realizations)
        if samples:
            mean, stderr, _ = aggregate_entropy(samples)
        else:
            mean, stderr = math.nan, math.nan
        rows.append(
            CurveRow(
                k=k,
                k_over_n=k / cfg.n,
                s_tilde_mean=mean,
                s_tilde_stderr=stderr,
                excluded_fraction=float(np.mean(excls)),
                gibbs_entropy=gibbs_entropy(cfg.n, k),
                giant_fraction=float(np.mean(giants)),
            )
        )
        if progress:
            print(f"k={k} ({k / cfg.n:.2f} per vertex): s_tilde = {mean:.5g} +- {stderr:.2g}", flush=True)
    return EntropyCurve(rows)


class KneeResult(NamedTuple):
    """Location of the steepest smoothed rise; x_star is None when the curve
    carries no knee (flat within noise, or constant slope)."""

    x_star: Optional[float]
    max_slope: float


def knee_location(curve: EntropyCurve, smoothing_window: int = 5) -> KneeResult:
    """Find the knee as the maximum discrete slope of the smoothed curve.

    Smoothing is a centered moving average (window shrinks at the ends).
    Ties break toward smaller k/n.  A curve whose maximal slope is not
    distinguishable (below 10x the median stderr, non-positive, or equal to
    every other slope) reports no knee.
    """
    if len(curve) < 5:
        raise ValueError(f"need at least 5 rows, got {len(curve)}")
    if smoothing_window < 1 or smoothing_window % 2 == 0:
        raise ValueError(f"smoothing window must be odd and >= 1, got {smoothing_window}")
    x = curve.column("k_over_n")
    y = curve.column("s_tilde_mean")
    se = curve.column("s_tilde_stderr")
    if not np.isfinite(y).all():
        raise ValueError("curve contains non-finite entropy values")
    h = smoothing_window // 2
    smooth = np.array([y[max(0, i - h): i + h + 1].mean() for i in range(len(y))])
    dx = np.diff(x)
    if (dx <= 0).any():
        raise ValueError("k/n grid must be strictly increasing")
    slopes = np.diff(smooth) / dx
    mids = 0.5 * (x[:-1] + x[1:])
    i = int(np.argmax(slopes))
    max_slope = float(slopes[i])
    flat_noise = max_slope <= 10.0 * float(np.median(se))
    constant = (slopes.max() - slopes.min()) <= 1e-9 * max(1.0, abs(max_slope))
    if max_slope <= 0 or flat_noise or constant:
        return KneeResult(x_star=None, max_slope=max_slope)
    return KneeResult(x_star=float(mids[i]), max_slope=max_slope)


_CSV_HEADER = "k,k_over_n,s_tilde_mean,s_tilde_stderr,excluded_fraction,gibbs_entropy,giant_fraction"


def _echo_value(v) -> str:
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(curve: EntropyCurve, cfg: SweepConfig, path) -> None:
    """Write the curve with a full config echo; byte-deterministic."""
    lines = []
    for key, value in cfg.to_dict().items():
        if key == "weight_r" and isinstance(value, list):
            lines.append(f"# {key}={json.dumps(value)}\n")
        else:
            lines.append(f"# {key}={_echo_value(value)}\n")
    lines.append(_CSV_HEADER + "\n")
    for r in curve.rows:
        lines.append(
            f"{r.k:d},{r.k_over_n:.17g},{r.s_tilde_mean:.17g},{r.s_tilde_stderr:.17g},"
            f"{r.excluded_fraction:.17g},{r.gibbs_entropy:.17g},{r.giant_fraction:.17g}\n"
        )
    try:
        with open(path, "w", newline="") as fh:
            fh.write("".join(lines))
    except OSError as err:
        raise OSError(f"cannot write curve to {path}: {err}") from err


def read_csv(path) -> tuple:
    """Parse a file written by :func:`emit_csv` back into (curve, config echo)."""
    echo = {}
    rows = []
    seen_header = False
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise OSError(f"cannot read curve from {path}: {err}") from err
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            echo[key.strip()] = value
            continue
        if not seen_header:
            if line != _CSV_HEADER:
                raise ValueError(f"{path}: unexpected CSV header {line!r}")
            seen_header = True
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ValueError(f"{path}: expected 7 columns, got {len(parts)}")
        rows.append(
            CurveRow(
                k=int(parts[0]),
                k_over_n=float(parts[1]),
                s_tilde_mean=float(parts[2]),
                s_tilde_stderr=float(parts[3]),
                excluded_fraction=float(parts[4]),
                gibbs_entropy=float(parts[5]),
                giant_fraction=float(parts[6]),
            )
        )
    if not seen_header:
        raise ValueError(f"{path}: missing CSV header")
    return EntropyCurve(rows), echo
