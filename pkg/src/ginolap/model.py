"""Jordan-form description of the deterministic deformation.

The mean matrix of the deformed ensemble is ``X0 = diag(A0, 0)`` with ``A0``
an ``r x r`` matrix given through its Jordan data: an ordered list of
(eigenvalue, block size, multiplicity) groups and an optional similarity
matrix ``P`` so that ``A0 = P J P^{-1}``.  Downstream code consumes the
Jordan data directly, so block structure, geometric multiplicities and the
first/last-column index sets are exact by construction instead of being
recovered numerically from a dense ``A0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidSpecError",
    "JordanBlockGroup",
    "JordanSpec",
    "ModelParams",
    "jordan_block",
    "jordan_matrix",
    "build_x0",
    "geometric_multiplicity",
    "index_sets",
    "kernel_multiplicity",
    "spec_to_json",
    "spec_from_json",
]


class InvalidSpecError(ValueError):
    """Jordan data is structurally unusable (e.g. a singular similarity)."""


def jordan_block(theta: complex, p: int) -> np.ndarray:
    """The p x p upper bidiagonal block: ``theta`` on the diagonal, 1 above."""
    if p < 1:
        raise ValueError("block size must be >= 1")
    return theta * np.eye(p, dtype=complex) + np.eye(p, p, 1, dtype=complex)


@dataclass(frozen=True)
class JordanBlockGroup:
    """``n`` identical Jordan blocks of size ``p`` at eigenvalue ``theta``."""

    theta: complex
    p: int
    n: int

    def __post_init__(self) -> None:
        if self.p < 1 or self.n < 1:
            raise InvalidSpecError("block size p and count n must be >= 1")
        object.__setattr__(self, "theta", complex(self.theta))

    @property
    def width(self) -> int:
        return self.p * self.n


@dataclass(frozen=True)
class JordanSpec:
    """Complete description of ``A0``: block groups plus optional similarity.

    Group order is preserved and fixes the column layout of ``J``; the
    index-set queries below are defined relative to that layout.  When
    ``similarity`` is omitted, ``P = I`` and ``U = P*P = I``, the convention
    the limit formulas assume in their simplest form.
    """

    groups: tuple[JordanBlockGroup, ...]
    similarity: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(self.groups))
        P = self.similarity
        if P is not None:
            P = np.asarray(P, dtype=complex)
            if P.ndim != 2 or P.shape[0] != P.shape[1]:
                raise InvalidSpecError("similarity P must be square")
            if P.shape[0] != self.r:
                raise InvalidSpecError(
                    f"similarity is {P.shape[0]}x{P.shape[0]} but the blocks span r={self.r}"
                )
            if not np.all(np.isfinite(P)):
                raise InvalidSpecError("similarity P has non-finite entries")
            # invertibility via condition estimate; also guarantees U = P*P > 0
            if P.size and (not np.isfinite(np.linalg.cond(P)) or np.linalg.cond(P) > 1e14):
                raise InvalidSpecError("similarity P is singular or numerically singular")
            object.__setattr__(self, "similarity", P)

    @property
    def r(self) -> int:
        """Total dimension spanned by the blocks."""
        return sum(g.width for g in self.groups)

    def similarity_or_identity(self) -> np.ndarray:
        if self.similarity is not None:
            return self.similarity
        return np.eye(self.r, dtype=complex)

    def gram(self) -> np.ndarray:
        """U = P*P, the Hermitian positive definite Gram matrix of P."""
        P = self.similarity_or_identity()
        return P.conj().T @ P

    def eigenvalues(self) -> tuple[complex, ...]:
        """Distinct block eigenvalues, in group order of first appearance."""
        seen: list[complex] = []
        for g in self.groups:
            if g.theta not in seen:
                seen.append(g.theta)
        return tuple(seen)


@dataclass(frozen=True)
class ModelParams:
    """Ensemble parameters: dimension N, time parameter tau, deformation spec."""

    N: int
    tau: float
    spec: JordanSpec = field(default_factory=lambda: JordanSpec(()))

    def __post_init__(self) -> None:
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.spec.r > self.N - 1:
            raise ValueError(
                f"rank r={self.spec.r} must satisfy r <= N-1 = {self.N - 1}"
            )

    @property
    def r(self) -> int:
        return self.spec.r

    @property
    def edge_radius(self) -> float:
        """Radius sqrt(tau) of the limiting spectral disk."""
        return math.sqrt(self.tau)


def jordan_matrix(spec: JordanSpec) -> np.ndarray:
    """Assemble the block-diagonal J in group order."""
    r = spec.r
    J = np.zeros((r, r), dtype=complex)
    col = 0
    for g in spec.groups:
        for _ in range(g.n):
            J[col : col + g.p, col : col + g.p] = jordan_block(g.theta, g.p)
            col += g.p
    return J


def build_x0(spec: JordanSpec, N: int) -> np.ndarray:
    """The N x N mean matrix diag(P J P^{-1}, 0)."""
    r = spec.r
    if r > N:
        raise ValueError(f"rank r={r} exceeds matrix dimension N={N}")
    X0 = np.zeros((N, N), dtype=complex)
    if r:
        J = jordan_matrix(spec)
        P = spec.similarity_or_identity()
        try:
            A0 = P @ np.linalg.solve(P.T, J.T).T  # P J P^{-1}
        except np.linalg.LinAlgError as exc:
            raise InvalidSpecError("similarity P is singular") from exc
        X0[:r, :r] = A0
    return X0


def geometric_multiplicity(spec: JordanSpec, z0: complex) -> int:
    """Number of Jordan blocks at exactly z0; 0 when z0 is not an eigenvalue.

    Matching uses exact complex equality: specs are symbolic inputs, not
    measured data.  Use :func:`kernel_multiplicity` for a tolerance-based
    numeric cross-check.
    """
    z0 = complex(z0)
    return sum(g.n for g in spec.groups if g.theta == z0)


def index_sets(spec: JordanSpec, z0: complex) -> tuple[list[int], list[int]]:
    """1-based first (I1) and last (I2) column indices of the blocks at z0.

    Both lists have length ``geometric_multiplicity(spec, z0)``; for size-1
    blocks the same index appears in both.
    """
    z0 = complex(z0)
    first: list[int] = []
    last: list[int] = []
    col = 1
    for g in spec.groups:
        for _ in range(g.n):
            if g.theta == z0:
                first.append(col)
                last.append(col + g.p - 1)
            col += g.p
    return first, last


def kernel_multiplicity(spec: JordanSpec, z0: complex, rtol: float = 1e-9) -> int:
    """dim ker(A0 - z0 I) from a rank-revealing SVD, for numeric cross-checks."""
    r = spec.r
    if r == 0:
        return 0
    A0 = build_x0(spec, r)
    s = np.linalg.svd(A0 - complex(z0) * np.eye(r), compute_uv=False)
    cutoff = rtol * max(s[0], 1.0)
    return int(np.sum(s < cutoff))


def _complex_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def spec_to_json(spec: JordanSpec) -> dict:
    """JSON form: complex numbers as [re, im] pairs, P as a nested list."""
    obj: dict = {
        "groups": [
            {"theta": _complex_pair(g.theta), "p": g.p, "n": g.n} for g in spec.groups
        ]
    }
    if spec.similarity is not None:
        obj["P"] = [[_complex_pair(v) for v in row] for row in spec.similarity]
    return obj


def spec_from_json(obj: dict) -> JordanSpec:
    """Inverse of :func:`spec_to_json`; validates shapes and invertibility."""
    try:
        groups = tuple(
            JordanBlockGroup(
                theta=complex(g["theta"][0], g["theta"][1]), p=int(g["p"]), n=int(g["n"])
            )
            for g in obj["groups"]
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise InvalidSpecError(f"malformed Jordan spec JSON: {exc}") from exc
    P = None
    if obj.get("P") is not None:
        try:
            P = np.array(
                [[complex(v[0], v[1]) for v in row] for row in obj["P"]], dtype=complex
            )
        except (TypeError, IndexError) as exc:
            raise InvalidSpecError(f"malformed similarity in JSON: {exc}") from exc
    return JordanSpec(groups=groups, similarity=P)
