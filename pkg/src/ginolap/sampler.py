"""Monte Carlo side of the artifact: sampling, overlaps, density estimation.

A draw from the ensemble is ``X = X0 + sqrt(tau/N) G`` with G an i.i.d.
standard complex Gaussian matrix.  The complex Gaussian convention is pinned
here once: ``E|G_ij|^2 = 1`` with independent N(0, 1/2) real and imaginary
parts.  This is the unique Gaussian law matching the ensemble density
``exp(-(N/tau) sum |X_ij - (X0)_ij|^2)``; the factor-of-two variants are the
classic failure mode, so :func:`sample_matrix` is the only place the
convention appears.

Diagonal overlaps come from the right-eigenvector matrix S and its inverse:
left eigenvectors are the rows of S^{-1}, which enforces biorthonormality by
construction.  ``overlap_via_schur`` recomputes single overlaps through the
rank-one partial Schur reduction ``1 + w* Sigma(z)^{-1} w`` as an independent
identity check.

Trial k draws from the substream spawned off (seed, k), so results are
independent of execution order and worker count; per-trial statistics land in
index-ordered arrays and every reduction runs in trial order.  BLAS pools are
pinned to one thread inside the trial loop so eigensolver output (and hence
every byte of the results) cannot depend on threading configuration.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from ginolap.asymptotics import EvaluationPoint, Scaling, microscopic_scale, physical_point
from ginolap.model import ModelParams, build_x0

__all__ = [
    "ResampleSignal",
    "EigensolverError",
    "OverlapSample",
    "SchurWitness",
    "EstimatorConfig",
    "DensityEstimate",
    "RunStats",
    "trial_rng",
    "sample_matrix",
    "overlaps",
    "overlap_matrix",
    "overlap_via_schur",
    "estimate_density",
    "estimate_densities",
    "run_trials",
]

_COND_RESAMPLE = 1e12
_RESIDUAL_RTOL = 1e-8


class ResampleSignal(RuntimeError):
    """The draw is unusable (near-degenerate spectrum or ill-conditioned S);
    the caller should redraw from the same stream."""


class EigensolverError(RuntimeError):
    """Hard eigensolver failure: non-convergence or residual above tolerance."""


@dataclass(frozen=True)
class OverlapSample:
    """One (eigenvalue, diagonal overlap) pair from one trial."""

    z: complex
    o: float
    trial: int


@dataclass(frozen=True)
class SchurWitness:
    """Partial Schur data for one eigenvalue: remainder row and deflated block."""

    omega: np.ndarray
    x_sub: np.ndarray
    zn: complex


@dataclass(frozen=True)
class EstimatorConfig:
    """Monte Carlo settings.  ``dedup_tol=None`` means 1e-10 sqrt(tau/N)."""

    trials: int
    seed: int
    eps_hat: float = 0.2
    dedup_tol: float | None = None
    threads: int | None = None
    max_redraws: int = 100

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not 0 < self.eps_hat <= 0.5:
            raise ValueError("eps_hat must lie in (0, 0.5] to stay microscopic")

    def resolved_dedup_tol(self, params: ModelParams) -> float:
        if self.dedup_tol is not None:
            return self.dedup_tol
        return 1e-10 * math.sqrt(params.tau / params.N)


@dataclass(frozen=True)
class DensityEstimate:
    """Binned estimate of the (theorem-normalized) overlap density at zhat."""

    zhat: complex
    value: float
    stderr: float
    count: int

    def __post_init__(self) -> None:
        if self.stderr < 0 or self.count < 0 or self.value < 0:
            raise ValueError("estimate fields must be nonnegative")

    @property
    def starved(self) -> bool:
        """No eigenvalue ever landed in the bin."""
        return self.count == 0


@dataclass
class RunStats:
    """Bookkeeping surfaced in reports: how many draws were rejected."""

    trials: int = 0
    resampled_spacing: int = 0
    resampled_condition: int = 0

    def merge(self, other: "RunStats") -> None:
        self.trials += other.trials
        self.resampled_spacing += other.resampled_spacing
        self.resampled_condition += other.resampled_condition


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """The deterministic substream for one trial, independent of run order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def sample_matrix(params: ModelParams, rng: np.random.Generator, x0: np.ndarray | None = None) -> np.ndarray:
    """One draw X = X0 + sqrt(tau/N) G with E|G_ij|^2 = 1."""
    N = params.N
    if x0 is None:
        x0 = build_x0(params.spec, N)
    g = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return x0 + math.sqrt(0.5 * params.tau / N) * g


def _eig_overlaps(X: np.ndarray, dedup_tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and diagonal overlaps of X; raises ResampleSignal on
    near-degenerate spectra or condition estimate beyond 1e12."""
    try:
        w, S = np.linalg.eig(X)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
    resid = np.linalg.norm(X @ S - S * w[None, :], axis=0)
    if np.any(resid > _RESIDUAL_RTOL * np.linalg.norm(X)):
        raise EigensolverError("eigenvector residual above 1e-8 * ||X||")
    if X.shape[0] > 1:
        dist = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= dedup_tol:
            raise ResampleSignal("eigenvalue spacing below dedup tolerance")
    try:
        Y = np.linalg.inv(S)
    except np.linalg.LinAlgError as exc:
        raise ResampleSignal(f"eigenvector matrix numerically singular: {exc}") from exc
    cond_est = np.linalg.norm(S, 1) * np.linalg.norm(Y, 1)
    if cond_est > _COND_RESAMPLE:
        raise ResampleSignal("eigenvector matrix condition estimate above 1e12")
    o = np.einsum("ij,ij->i", Y, Y.conj()).real * np.einsum("ji,ji->i", S, S.conj()).real
    return w, o


def overlaps(X: np.ndarray, dedup_tol: float, trial: int = 0) -> list[OverlapSample]:
    """All (z_i, O_ii) pairs of X via eigendecomposition plus inversion."""
    w, o = _eig_overlaps(np.asarray(X, dtype=complex), dedup_tol)
    return [OverlapSample(z=complex(z), o=float(v), trial=trial) for z, v in zip(w, o)]


def overlap_matrix(X: np.ndarray, dedup_tol: float = 0.0) -> np.ndarray:
    """The full overlap matrix O_ij = (l_i* l_j)(r_j* r_i); rows sum to 1."""
    X = np.asarray(X, dtype=complex)
    w, S = np.linalg.eig(X)
    if X.shape[0] > 1 and dedup_tol > 0:
        dist = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= dedup_tol:
            raise ResampleSignal("eigenvalue spacing below dedup tolerance")
    Y = np.linalg.inv(S)
    return (Y @ Y.conj().T) * (S.conj().T @ S).T


def schur_witness(X: np.ndarray, eigen_index: int) -> SchurWitness:
    """Partial Schur form isolating eigenvalue ``eigen_index`` in the corner.

    The conjugating unitary is a Householder reflection whose first column is
    the normalized right eigenvector (up to phase, which drops out of every
    derived quantity).
    """
    X = np.asarray(X, dtype=complex)
    N = X.shape[0]
    w, S = np.linalg.eig(X)
    zn = w[eigen_index]
    u = S[:, eigen_index]
    u = u / np.linalg.norm(u)
    alpha = 1.0 if u[0] == 0 else -u[0] / abs(u[0])
    v = u - alpha * np.eye(N, dtype=complex)[:, 0]
    H = np.eye(N, dtype=complex)
    nv2 = np.vdot(v, v).real
    if nv2 > 0:
        H -= (2.0 / nv2) * np.outer(v, v.conj())
    # H is Hermitian unitary with H e1 = u / alpha
    Xt = H.conj().T @ X @ H
    col_resid = np.linalg.norm(Xt[1:, 0])
    if col_resid > 1e-8 * np.linalg.norm(X):
        raise EigensolverError("partial Schur deflation failed (residual column)")
    return SchurWitness(omega=Xt[0, 1:].conj().copy(), x_sub=Xt[1:, 1:].copy(), zn=complex(zn))


def overlap_via_schur(X: np.ndarray, eigen_index: int) -> float:
    """O_nn through the Schur identity 1 + w* Sigma(z_n)^{-1} w.

    Sigma(z) = (zI - X_{N-1})* (zI - X_{N-1}), so the quadratic form is the
    squared norm of (zI - X_{N-1})^{-*} w.  Near-degenerate targets make
    Sigma nearly singular and raise ResampleSignal.
    """
    wit = schur_witness(X, eigen_index)
    A = wit.zn * np.eye(wit.x_sub.shape[0], dtype=complex) - wit.x_sub
    if np.linalg.cond(A) > _COND_RESAMPLE:
        raise ResampleSignal("deflated resolvent ill-conditioned at this eigenvalue")
    t = np.linalg.solve(A.conj().T, wit.omega)
    return 1.0 + float(np.vdot(t, t).real)


def _norm_factor(scaling: Scaling, N: int) -> float:
    """Theorem normalization applied to the raw density estimate."""
    if scaling is Scaling.EDGE_MULTIPLICATIVE:
        return N ** -0.5
    return 1.0


def _one_trial(
    k: int,
    params: ModelParams,
    cfg: EstimatorConfig,
    x0: np.ndarray,
    centers: np.ndarray,
    radii: np.ndarray,
    collect: bool,
) -> tuple[np.ndarray, np.ndarray, RunStats, list[OverlapSample]]:
    rng = trial_rng(cfg.seed, k)
    dedup = cfg.resolved_dedup_tol(params)
    stats = RunStats(trials=1)
    for _ in range(cfg.max_redraws):
        X = sample_matrix(params, rng, x0)
        try:
            w, o = _eig_overlaps(X, dedup)
            break
        except ResampleSignal as sig:
            if "spacing" in str(sig):
                stats.resampled_spacing += 1
            else:
                stats.resampled_condition += 1
    else:
        raise EigensolverError(f"trial {k}: redraw budget exhausted")
    inside = np.abs(w[None, :] - centers[:, None]) <= radii[:, None]
    weights = inside @ o
    counts = inside.sum(axis=1)
    kept = [OverlapSample(complex(z), float(v), k) for z, v in zip(w, o)] if collect else []
    return weights, counts, stats, kept


def run_trials(
    params: ModelParams,
    points: list[EvaluationPoint],
    cfg: EstimatorConfig,
    collect_samples: bool = False,
) -> tuple[np.ndarray, np.ndarray, RunStats, list[OverlapSample]]:
    """Per-trial bin weights/counts for all points, in trial order.

    Returns (weights[M, P], counts[M, P], stats, samples).  The same seed
    yields the same trial matrices no matter how many points are binned or
    how many workers run, so single-point and batched runs agree exactly.
    """
    centers = np.array([physical_point(p, params.N, params.tau) for p in points])
    radii = np.array(
        [cfg.eps_hat * microscopic_scale(p, params.N, params.tau) for p in points]
    )
    x0 = build_x0(params.spec, params.N)
    M = cfg.trials
    weights = np.empty((M, len(points)))
    counts = np.empty((M, len(points)), dtype=np.int64)
    samples: dict[int, list[OverlapSample]] = {}
    stats = RunStats()
    workers = cfg.threads if cfg.threads is not None else (os.cpu_count() or 1)

    def handle(k: int) -> tuple[int, np.ndarray, np.ndarray, RunStats, list[OverlapSample]]:
        wrow, crow, st, kept = _one_trial(k, params, cfg, x0, centers, radii, collect_samples)
        return k, wrow, crow, st, kept

    # BLAS pinned to one thread: trial results must not depend on worker count
    with threadpool_limits(limits=1):
        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=int(workers)) as ex:
                for k, wrow, crow, st, kept in ex.map(handle, range(M)):
                    weights[k] = wrow
                    counts[k] = crow
                    stats.merge(st)
                    if collect_samples:
                        samples[k] = kept
        else:
            for k in range(M):
                _, wrow, crow, st, kept = handle(k)
                weights[k] = wrow
                counts[k] = crow
                stats.merge(st)
                if collect_samples:
                    samples[k] = kept
    flat = [s for k in sorted(samples) for s in samples[k]] if collect_samples else []
    return weights, counts, stats, flat


def estimate_densities(
    params: ModelParams,
    points: list[EvaluationPoint],
    cfg: EstimatorConfig,
    collect_samples: bool = False,
) -> tuple[list[DensityEstimate], RunStats, list[OverlapSample]]:
    """Disk-binned Monte Carlo estimates at several zhat points at once."""
    for p in points:
        _validate_regime(p, params)
    weights, counts, stats, samples = run_trials(params, points, cfg, collect_samples)
    radii = np.array(
        [cfg.eps_hat * microscopic_scale(p, params.N, params.tau) for p in points]
    )
    out: list[DensityEstimate] = []
    M = cfg.trials
    for j, p in enumerate(points):
        scale = _norm_factor(p.scaling, params.N) / (params.N * math.pi * radii[j] ** 2)
        vals = weights[:, j] * scale
        mean = float(vals.mean())
        err = float(vals.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0
        total = int(counts[:, j].sum())
        if total == 0:
            out.append(DensityEstimate(zhat=p.zhat, value=0.0, stderr=0.0, count=0))
        else:
            out.append(DensityEstimate(zhat=p.zhat, value=mean, stderr=err, count=total))
    return out, stats, samples


def estimate_density(
    params: ModelParams, point: EvaluationPoint, cfg: EstimatorConfig
) -> DensityEstimate:
    """Single-point convenience wrapper around :func:`estimate_densities`."""
    ests, _, _ = estimate_densities(params, [point], cfg)
    return ests[0]


def _validate_regime(point: EvaluationPoint, params: ModelParams) -> None:
    mod = abs(point.z0)
    root = math.sqrt(params.tau)
    if point.scaling is Scaling.EDGE_MULTIPLICATIVE:
        if abs(mod - root) > 1e-12 * max(1.0, root):
            raise ValueError(f"edge scaling needs |z0| = sqrt(tau); got |z0|={mod}, sqrt(tau)={root}")
    else:
        if mod <= root:
            raise ValueError(f"outlier scaling needs |z0| > sqrt(tau); got |z0|={mod}, sqrt(tau)={root}")
