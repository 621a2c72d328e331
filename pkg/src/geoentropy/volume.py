"""Monte Carlo estimation of the deformed-manifold volume and the normalized
geometric entropy, with hypercube truncation plus overflow cutoff as the
default regularization and the trace-damped weight as the alternative."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
import torch

from .geometry import DEFAULT_DET_TOL
from .graphs import ConstantWeights, Graph, ThetaCoupledWeights, WeightModel, materialize_adjacency

__all__ = [
    "ParameterBox",
    "VolumeEstimate",
    "EntropySample",
    "EstimationFailureError",
    "baseline_log_volume",
    "mc_log_volume",
    "upsilon_log_volume",
    "normalized_entropy_sample",
    "aggregate_entropy",
]

_LN2 = math.log(2.0)
_LN10 = math.log(10.0)

# Default integration hypercube.  theta_min sits above the r = 0.2 weight
# scale so isolated edges cannot reach the singular variety inside the box;
# only the larger structures that proliferate at the giant-component
# transition can, which is what makes the entropy knee visible at the
# paper-scale sample counts.
DEFAULT_BOX_THETA_MIN = 0.3
DEFAULT_BOX_THETA_MAX = 3.0

# Sweeps expose the degeneracy tolerance as config; the default matches the
# strict membership test.
DEFAULT_SWEEP_DET_TOL = DEFAULT_DET_TOL

# Cache-resident stacks: block size is a pure function of the dimension so the
# block partition (and therefore every stream) never depends on scheduling.
_BLOCK_FLOAT_BUDGET = 131072
_BLOCK_CAP = 4096

_torch_configured = False


def _ensure_torch_single_thread():
    # Parallelism belongs to the caller (one worker per estimate); intra-op
    # threading on 50x50 batches only causes contention.
    global _torch_configured
    if not _torch_configured:
        torch.set_num_threads(1)
        _torch_configured = True


def _block_size(n: int) -> int:
    return max(16, min(_BLOCK_CAP, _BLOCK_FLOAT_BUDGET // (n * n)))


@dataclass(frozen=True)
class ParameterBox:
    """Integration hypercube [theta_min, theta_max]^n."""

    theta_min: float
    theta_max: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        lo, hi = float(self.theta_min), float(self.theta_max)
        if not (np.isfinite(lo) and np.isfinite(hi) and 0 < lo < hi):
            raise ValueError(
                f"box bounds must satisfy 0 < theta_min < theta_max < inf, "
                f"got [{self.theta_min}, {self.theta_max}]"
            )
        object.__setattr__(self, "theta_min", lo)
        object.__setattr__(self, "theta_max", hi)

    @property
    def log_volume(self) -> float:
        return self.n * math.log(self.theta_max - self.theta_min)


@dataclass(frozen=True)
class VolumeEstimate:
    """Log-domain Monte Carlo integral with delta-method standard error."""

    log_integral: float
    log_mean_stderr: float
    n_samples: int
    n_excluded_overflow: int
    n_excluded_degenerate: int

    @property
    def excluded_fraction(self) -> float:
        return (self.n_excluded_overflow + self.n_excluded_degenerate) / self.n_samples


@dataclass(frozen=True)
class EntropySample:
    """Per-realization normalized entropy value at a given edge count."""

    k: int
    s_tilde: float
    estimate: Optional[VolumeEstimate] = None


class EstimationFailureError(RuntimeError):
    """Every sample was excluded (or the retained integrand vanished)."""

    def __init__(self, message, n_samples=0, n_excluded_overflow=0, n_excluded_degenerate=0):
        super().__init__(message)
        self.n_samples = n_samples
        self.n_excluded_overflow = n_excluded_overflow
        self.n_excluded_degenerate = n_excluded_degenerate


def baseline_log_volume(box: ParameterBox) -> float:
    """Closed-form log of the bare-metric volume over the box.

    The bare density factorizes as 2^{-n/2} prod(1/theta_i), so the integral
    is (ln(theta_max/theta_min))^n / 2^{n/2}.
    """
    per_axis = math.log(box.theta_max / box.theta_min)
    return box.n * math.log(per_axis) - 0.5 * box.n * _LN2


Target = Union[np.ndarray, tuple]


def _normalize_target(target) -> tuple:
    """Resolve the integration target to ('fixed', A) or ('coupled', coeff, n)."""
    if isinstance(target, tuple) and len(target) == 2 and isinstance(target[0], Graph):
        g, w = target
        if isinstance(w, ConstantWeights):
            A = materialize_adjacency(g, w, np.ones(g.n))
            return ("fixed", A, g.n)
        if isinstance(w, ThetaCoupledWeights):
            coeff = np.zeros((g.n, g.n))
            if g.edges:
                ii, jj = g.edge_arrays()
                if np.isscalar(w.r):
                    vals = np.full(len(ii), w.r)
                else:
                    if w.r.shape != (g.n, g.n):
                        raise ValueError(
                            f"coefficient matrix shape {w.r.shape} does not match n={g.n}"
                        )
                    vals = w.r[ii, jj]
                coeff[ii, jj] = vals
                coeff[jj, ii] = vals
            return ("coupled", coeff, g.n)
        raise TypeError(f"unsupported weight model {type(w).__name__}")
    A = np.asarray(target, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError("adjacency entries must be finite")
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency must be symmetric")
    if np.diagonal(A).any():
        raise ValueError("adjacency must have zero diagonal")
    return ("fixed", A, A.shape[0])


def _is_zero_target(kind, mat) -> bool:
    return not mat.any()


def _block_generator(base_key: np.ndarray, block_index: int) -> np.random.Generator:
    counter = np.zeros(4, dtype=np.uint64)
    counter[2] = block_index
    return np.random.Generator(np.random.Philox(key=base_key, counter=counter))


def _seed_key(seed) -> np.ndarray:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.generate_state(2, np.uint64)


def _integrand_block(theta: np.ndarray, kind: str, mat: np.ndarray, log_det_tol: float):
    """Per-sample log sqrt|det g~|, trace and signed logdet of psi.

    Returns (log_sqrt, sign, logdet, degenerate_mask).  log_sqrt is NaN on
    degenerate samples, +inf where the metric entries left the double range.
    """
    b, n = theta.shape
    th_t = torch.from_numpy(theta)
    if kind == "fixed":
        psi = torch.from_numpy(mat).expand(b, n, n).clone()
    else:
        ab = mat[None, :, :] * theta[:, :, None] * theta[:, None, :]
        psi = torch.from_numpy(ab)
    psi.diagonal(dim1=1, dim2=2).add_(th_t)

    L, info = torch.linalg.cholesky_ex(psi)
    pd = (info == 0).numpy()

    sign = np.zeros(b)
    logdet = np.full(b, -np.inf)
    if pd.any():
        idx = torch.from_numpy(pd)
        ld = 2.0 * torch.log(torch.diagonal(L[idx], dim1=-2, dim2=-1)).sum(-1)
        logdet[pd] = ld.numpy()
        sign[pd] = 1.0
    if not pd.all():
        rest = psi[torch.from_numpy(~pd)].numpy()
        s_np, ld_np = np.linalg.slogdet(rest)
        sign[~pd] = s_np
        logdet[~pd] = ld_np

    degenerate = (sign == 0) | (logdet <= log_det_tol)
    log_sqrt = np.full(b, np.nan)

    # fast path: psi positive definite => g~ = (1/2) (psi^-1)∘(psi^-1) is
    # positive definite too (Schur product theorem), so Cholesky applies
    keep_pd = pd & ~degenerate
    if keep_pd.any():
        idx = torch.from_numpy(keep_pd)
        M = torch.cholesky_inverse(L[idx])
        finite = torch.isfinite(M).flatten(1).all(1)
        G = M.mul_(math.sqrt(0.5)).square_()
        L2, info2 = torch.linalg.cholesky_ex(G)
        vals = torch.log(torch.diagonal(L2, dim1=-2, dim2=-1)).sum(-1)
        ok = finite & (info2 == 0)
        out = vals.numpy()
        bad = (~ok).numpy()
        if bad.any():
            # conditioning pushed the fast path off PD; redo those exactly
            sub = psi[idx][torch.from_numpy(bad)].numpy()
            out[bad] = _log_sqrt_np(sub, n)
        log_sqrt[keep_pd] = out

    keep_np = ~pd & ~degenerate
    if keep_np.any():
        sub = psi[torch.from_numpy(keep_np)].numpy()
        log_sqrt[keep_np] = _log_sqrt_np(sub, n)

    return log_sqrt, sign, logdet, degenerate


def _log_sqrt_np(psi: np.ndarray, n: int) -> np.ndarray:
    """Indefinite-path log sqrt|det g~| with exact power-of-two prescaling."""
    M = np.linalg.inv(psi)
    out = np.full(len(M), np.inf)
    amax = np.abs(M).max(axis=(1, 2))
    finite = np.isfinite(amax)
    if finite.any():
        Mf = M[finite]
        e = np.frexp(amax[finite])[1]
        Ms = Mf * np.exp2(-e)[:, None, None]
        s, ld = np.linalg.slogdet(0.5 * Ms * Ms)
        vals = 0.5 * ld + n * e * _LN2
        vals[s == 0] = -np.inf
        out[finite] = vals
    return out


def _log_upsilon_terms(trace: np.ndarray, logdet: np.ndarray, n: int) -> np.ndarray:
    """Vectorized ln[exp(-tr) ln(1 + |det|^n)] from trace and log|det|."""
    L = n * logdet
    out = np.empty_like(L)
    hi = L > 36.0
    lo = L < -36.0
    mid = ~hi & ~lo
    out[hi] = np.log(L[hi])
    out[lo] = L[lo]
    out[mid] = np.log(np.log1p(np.exp(L[mid])))
    return out - trace


def _pair_logsumexp(values: np.ndarray) -> tuple[float, float]:
    """(logsumexp(v), logsumexp(2v)) over finite-or--inf values."""
    if values.size == 0:
        return -math.inf, -math.inf
    mx = float(values.max())
    if mx == -math.inf:
        return -math.inf, -math.inf
    shifted = values - mx
    l1 = mx + math.log(float(np.exp(shifted).sum()))
    l2 = 2.0 * mx + math.log(float(np.exp(2.0 * shifted).sum()))
    return l1, l2


def _run_estimator(target, box, n_samples, seed, det_tol, scheme, log10_cap) -> VolumeEstimate:
    _ensure_torch_single_thread()
    kind, mat, n = _normalize_target(target)
    if box.n != n:
        raise ValueError(f"box dimension {box.n} does not match adjacency dimension {n}")
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    if not det_tol > 0:
        raise ValueError(f"det_tol must be positive, got {det_tol}")
    cap_ln = float(log10_cap) * _LN10 if scheme == "hypercube" else math.inf
    log_det_tol = math.log(det_tol)

    base_key = _seed_key(seed)
    block = _block_size(n)
    lse1 = -math.inf
    lse2 = -math.inf
    n_deg = 0
    n_ovf = 0
    done = 0
    block_index = 0
    while done < n_samples:
        b = min(block, n_samples - done)
        rng = _block_generator(base_key, block_index)
        theta = rng.uniform(box.theta_min, box.theta_max, (b, n))
        log_sqrt, sign, logdet, degenerate = _integrand_block(theta, kind, mat, log_det_tol)
        n_deg += int(degenerate.sum())
        keep = ~degenerate
        if scheme == "hypercube":
            vals = log_sqrt[keep]
            ovf = vals > cap_ln
            n_ovf += int(ovf.sum())
            vals = vals[~ovf]
        else:
            lu = _log_upsilon_terms(theta[keep].sum(axis=1), logdet[keep], n)
            vals = lu + log_sqrt[keep]
            bad = ~(np.isfinite(vals) | (vals == -math.inf))
            n_ovf += int(bad.sum())
            vals = vals[~bad]
        b1, b2 = _pair_logsumexp(vals)
        lse1 = np.logaddexp(lse1, b1)
        lse2 = np.logaddexp(lse2, b2)
        done += b
        block_index += 1

    n_retained = n_samples - n_deg - n_ovf
    if n_retained == 0 or lse1 == -math.inf:
        raise EstimationFailureError(
            f"no usable samples out of {n_samples} "
            f"({n_deg} degenerate, {n_ovf} over the cutoff)",
            n_samples=n_samples,
            n_excluded_overflow=n_ovf,
            n_excluded_degenerate=n_deg,
        )
    log_mean = lse1 - math.log(n_samples)
    # SE of the log of the mean: sqrt((E[f^2]/E[f]^2 - 1)/(N-1)), all in logs
    ratio = math.exp(lse2 - 2.0 * lse1 + math.log(n_samples))
    stderr = math.sqrt(max(ratio - 1.0, 0.0) / (n_samples - 1))
    return VolumeEstimate(
        log_integral=box.log_volume + log_mean,
        log_mean_stderr=stderr,
        n_samples=n_samples,
        n_excluded_overflow=n_ovf,
        n_excluded_degenerate=n_deg,
    )


def mc_log_volume(
    target: Target,
    box: ParameterBox,
    n_samples: int,
    seed,
    log10_cap: float = 308.0,
    det_tol: float = DEFAULT_DET_TOL,
) -> VolumeEstimate:
    """Monte Carlo estimate of ln of the truncated volume integral.

    Draws theta uniformly over the box in reproducible counter-based blocks,
    evaluates log sqrt|det g~| per sample, and excludes degenerate points and
    points whose integrand exceeds 10**log10_cap.  Excluded samples still
    count in the divisor (they contribute zero).

    ``target`` is a fixed adjacency matrix or a (Graph, WeightModel) pair; the
    theta-coupled model rebuilds the adjacency at every sample.
    ``seed`` may be an int or a ``numpy.random.SeedSequence``.
    """
    return _run_estimator(target, box, n_samples, seed, det_tol, "hypercube", log10_cap)


def upsilon_log_volume(
    target: Target,
    box: ParameterBox,
    n_samples: int,
    seed,
    det_tol: float = DEFAULT_DET_TOL,
) -> VolumeEstimate:
    """Same estimator with the trace-damped weight as integrand.

    No overflow cutoff is needed: the weight is evaluated in the log domain
    and tames the determinant divergence.  Singular-psi samples contribute
    exactly zero and are reported through the degenerate counter.
    """
    return _run_estimator(target, box, n_samples, seed, det_tol, "upsilon", math.inf)


def normalized_entropy_sample(
    g: Graph,
    w: WeightModel,
    box: ParameterBox,
    n_samples: int,
    seed,
    log10_cap: float = 308.0,
    det_tol: float = DEFAULT_DET_TOL,
    scheme: str = "hypercube",
) -> EntropySample:
    """One realization of the per-vertex log volume ratio against the bare box.

    For the hypercube scheme the denominator is the closed-form baseline; for
    the trace-damped scheme it is a second run over the zero adjacency with
    the same sample stream.  A graph whose adjacency vanishes identically
    yields exactly 0: numerator and denominator integrands coincide pointwise.
    """
    if scheme not in ("hypercube", "upsilon"):
        raise ValueError(f"unknown scheme {scheme!r}")
    kind, mat, n = _normalize_target((g, w))
    if _is_zero_target(kind, mat):
        return EntropySample(k=g.k, s_tilde=0.0)
    if scheme == "hypercube":
        est = mc_log_volume((g, w), box, n_samples, seed, log10_cap=log10_cap, det_tol=det_tol)
        base = baseline_log_volume(box)
    else:
        est = upsilon_log_volume((g, w), box, n_samples, seed, det_tol=det_tol)
        base = upsilon_log_volume(np.zeros((n, n)), box, n_samples, seed, det_tol=det_tol).log_integral
    return EntropySample(k=g.k, s_tilde=(est.log_integral - base) / n, estimate=est)


class EntropyStats(NamedTuple):
    mean: float
    stderr: float
    count: int


def aggregate_entropy(samples) -> EntropyStats:
    """Sample mean and standard error of s_tilde over realizations at fixed k.

    A single sample has undefined variance; its stderr is reported as 0 and
    the count field flags the situation.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("cannot aggregate an empty sample sequence")
    ks = {s.k for s in samples}
    if len(ks) != 1:
        raise ValueError(f"samples mix different edge counts: {sorted(ks)}")
    vals = np.array([s.s_tilde for s in samples])
    count = len(vals)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    return EntropyStats(mean=mean, stderr=stderr, count=count)
