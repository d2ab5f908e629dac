"""Closed-form large-N limits of the mean self-overlap density.

Four limit laws are implemented:

* the edge law at |z0| = sqrt(tau), parametrised by the geometric
  multiplicity t of z0 and built from iterative-erfc products;
* its t = 0 specialisation in classical closed form (Gaussian + erfc), used
  as an independent identity check on the IE-product route;
* the two outlier laws at |z0| > sqrt(tau): a single Jordan block of size r
  under the N^{-1/(2r)} window, and z0 * identity under the normalised
  N^{-1/2} window;
* the outlier one-point (eigenvalue density, no overlap weight) law at
  tau = 1.

Every formula is evaluated exactly as printed, with all exp(2 (Re zh)^2)-type
prefactors routed through the overflow-safe scaled IE so the factors never
appear alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ginolap.model import JordanSpec
from ginolap.specfun import e_trunc, ie, ie_scaled

__all__ = [
    "Scaling",
    "EvaluationPoint",
    "TheoryCurve",
    "edge_density",
    "edge_density_classical",
    "outlier_jordan_density",
    "outlier_identity_density",
    "outlier_one_point_density",
    "theory_curve",
]


class Scaling(Enum):
    """Microscopic window convention tying zhat to a physical point z."""

    EDGE_MULTIPLICATIVE = "edge-multiplicative"  # z = z0 (1 + N^{-1/2} zhat)
    OUTLIER_ADDITIVE = "outlier-additive"  # z = z0 + N^{-rho} zhat, rho = 1/(2r)
    OUTLIER_ADDITIVE_NORMALIZED = (
        "outlier-additive-normalized"  # z = z0 + (N (1/tau - 1/|z0|^2))^{-1/2} zhat
    )


@dataclass(frozen=True)
class EvaluationPoint:
    """A rescaled observation point: base z0, microscopic coordinate zhat."""

    z0: complex
    zhat: complex
    rho: float
    scaling: Scaling

    def __post_init__(self) -> None:
        object.__setattr__(self, "z0", complex(self.z0))
        object.__setattr__(self, "zhat", complex(self.zhat))
        if not 0 < self.rho <= 1:
            raise ValueError("scaling exponent rho must lie in (0, 1]")

    @classmethod
    def at_physical(cls, z: complex) -> "EvaluationPoint":
        """A point given directly in physical coordinates (zhat = 0)."""
        return cls(z0=complex(z), zhat=0j, rho=0.5, scaling=Scaling.OUTLIER_ADDITIVE)


def microscopic_scale(point: EvaluationPoint, N: int, tau: float) -> float:
    """Physical length of one unit of zhat under the point's scaling."""
    if point.scaling is Scaling.EDGE_MULTIPLICATIVE:
        return abs(point.z0) * N ** -0.5
    if point.scaling is Scaling.OUTLIER_ADDITIVE:
        return N ** -point.rho
    c = 1.0 / tau - 1.0 / abs(point.z0) ** 2
    if c <= 0:
        raise ValueError("normalized outlier scaling needs |z0| > sqrt(tau)")
    return (N * c) ** -0.5


def physical_point(point: EvaluationPoint, N: int, tau: float) -> complex:
    """The physical z implied by (z0, zhat, scaling, N)."""
    if point.scaling is Scaling.EDGE_MULTIPLICATIVE:
        return point.z0 * (1.0 + N ** -0.5 * point.zhat)
    return point.z0 + microscopic_scale(point, N, tau) * point.zhat


@dataclass(frozen=True)
class TheoryCurve:
    """A limit law sampled on a zhat grid, with provenance metadata."""

    points: tuple[tuple[complex, float], ...]
    meta: dict

    def __post_init__(self) -> None:
        for zh, v in self.points:
            if not (np.isfinite(v) and v >= 0.0):
                raise ValueError(f"curve value at zhat={zh} is not finite nonnegative: {v}")


def _edge_kernel(t: int, u: float) -> float:
    """exp(2u^2) [ (t+1) IE_{t+1}(2u) IE_{t-1}(-2u) + t IE_t(2u) IE_t(-2u) ].

    The scaled IE absorbs the exponential on whichever side has nonnegative
    argument, so no exp(+2u^2)-sized intermediate is ever formed.
    """
    x = 2.0 * u
    if x >= 0.0:
        return (t + 1.0) * ie_scaled(t + 1, x) * ie(t - 1, -x) + t * ie_scaled(t, x) * ie(
            t, -x
        )
    return (t + 1.0) * ie(t + 1, x) * ie_scaled(t - 1, -x) + t * ie(t, x) * ie_scaled(
        t, -x
    )


def edge_density(t: int, tau: float, zhat: complex) -> float:
    """Rescaled mean self-overlap at an edge point of multiplicity t.

    Only Re(zhat) enters; the law is constant along the tangential direction.
    """
    t = int(t)
    if t < 0:
        raise ValueError("geometric multiplicity t must be >= 0")
    if not tau > 0:
        raise ValueError("tau must be positive")
    u = complex(zhat).real
    return math.sqrt(2.0 / math.pi) * math.gamma(t + 1.0) / tau * _edge_kernel(t, u)


def edge_density_classical(tau: float, zhat: complex) -> float:
    """The t = 0 edge law in its classical Gaussian-plus-erfc form."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    u = complex(zhat).real
    sqrt2pi = math.sqrt(2.0 * math.pi)
    return (math.exp(-2.0 * u * u) / sqrt2pi - u * math.erfc(math.sqrt(2.0) * u)) / (
        math.pi * tau
    )


def _single_block(spec: JordanSpec) -> tuple[complex, int]:
    if len(spec.groups) != 1 or spec.groups[0].n != 1:
        raise ValueError("this law needs a spec with exactly one Jordan block (n = 1)")
    g = spec.groups[0]
    return g.theta, g.p


def _basis_quadratic_forms(P: np.ndarray) -> tuple[float, float]:
    """(e1* P*P e1, er* P^{-1} P^{-*} er) for the outlier prefactors."""
    r = P.shape[0]
    kappa_first = float(np.linalg.norm(P[:, 0]) ** 2)
    er = np.zeros(r, dtype=complex)
    er[-1] = 1.0
    x = np.linalg.solve(P.conj().T, er)  # (P*)^{-1} e_r
    kappa_last = float(np.linalg.norm(x) ** 2)
    return kappa_first, kappa_last


def outlier_jordan_density(spec: JordanSpec, tau: float, zhat: complex) -> float:
    """Outlier law for A0 = P R_r(z0) P^{-1} with |z0| > sqrt(tau).

    The zhat window is N^{-1/(2r)}; the value is invariant under P -> cP.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    z0, r = _single_block(spec)
    a = 1.0 - tau / abs(z0) ** 2
    if a <= 0:
        raise ValueError("outlier regime needs |z0|^2 > tau")
    kappa1, kappar = _basis_quadratic_forms(spec.similarity_or_identity())
    s = abs(complex(zhat)) ** (2 * r)
    return math.exp(-a * s / (tau * kappa1 * kappar)) / (math.pi * tau * a)


def outlier_identity_density(r: int, tau: float, z0: complex, zhat: complex) -> float:
    """Outlier law for A0 = z0 I_r under the normalized window."""
    r = int(r)
    if r < 1:
        raise ValueError("rank r must be >= 1")
    if not tau > 0:
        raise ValueError("tau must be positive")
    a = 1.0 - tau / abs(complex(z0)) ** 2
    if a <= 0:
        raise ValueError("outlier regime needs |z0|^2 > tau")
    s = abs(complex(zhat)) ** 2
    return (
        (r * e_trunc(r, s) - s * e_trunc(r - 1, s))
        * math.exp(-s)
        / (math.pi * tau * a)
    )


def outlier_one_point_density(spec: JordanSpec, z0: complex, zhat: complex) -> float:
    """Scaled eigenvalue density near the outlier, tau = 1 only.

    Integrates to r over the zhat plane: the deformation sends exactly r
    eigenvalues to the vicinity of z0.
    """
    theta, r = _single_block(spec)
    z0 = complex(z0)
    if theta != z0:
        raise ValueError("z0 must equal the block eigenvalue of the spec")
    b = 1.0 - 1.0 / abs(z0) ** 2
    if b <= 0:
        raise ValueError("the tau = 1 outlier regime needs |z0|^2 > 1")
    kappa1, kappar = _basis_quadratic_forms(spec.similarity_or_identity())
    s = abs(complex(zhat))
    c = b / (kappa1 * kappar)
    return (r * r * s ** (2 * r - 2) / math.pi) * c * math.exp(-c * s ** (2 * r))


_CURVE_TAGS = ("edge", "outlier-jordan", "outlier-identity", "one-point")


def theory_curve(
    tag: str,
    zhats: list[complex],
    *,
    tau: float,
    t: int | None = None,
    r: int | None = None,
    z0: complex | None = None,
    spec: JordanSpec | None = None,
) -> TheoryCurve:
    """Sample one of the limit laws on a zhat grid.

    ``edge`` needs t; ``outlier-identity`` needs r and z0; the other two need
    a single-block spec (and ``one-point`` additionally fixes tau = 1).
    """
    if tag not in _CURVE_TAGS:
        raise ValueError(f"unknown theorem tag {tag!r}; expected one of {_CURVE_TAGS}")
    meta: dict = {"theorem": tag, "tau": tau}
    if tag == "edge":
        if t is None:
            raise ValueError("edge curve needs the multiplicity t")
        values = [edge_density(t, tau, zh) for zh in zhats]
        meta.update({"t": int(t), "scaling": Scaling.EDGE_MULTIPLICATIVE.value})
    elif tag == "outlier-jordan":
        if spec is None:
            raise ValueError("outlier-jordan curve needs the Jordan spec")
        values = [outlier_jordan_density(spec, tau, zh) for zh in zhats]
        z0b, rb = _single_block(spec)
        meta.update(
            {"r": rb, "z0": [z0b.real, z0b.imag], "scaling": Scaling.OUTLIER_ADDITIVE.value}
        )
    elif tag == "outlier-identity":
        if r is None or z0 is None:
            raise ValueError("outlier-identity curve needs r and z0")
        values = [outlier_identity_density(r, tau, z0, zh) for zh in zhats]
        meta.update(
            {
                "r": int(r),
                "z0": [complex(z0).real, complex(z0).imag],
                "scaling": Scaling.OUTLIER_ADDITIVE_NORMALIZED.value,
            }
        )
    else:  # one-point
        if spec is None:
            raise ValueError("one-point curve needs the Jordan spec")
        if tau != 1:
            raise ValueError("the one-point law is stated for tau = 1 only")
        z0b, rb = _single_block(spec)
        values = [outlier_one_point_density(spec, z0b, zh) for zh in zhats]
        meta.update(
            {"r": rb, "z0": [z0b.real, z0b.imag], "scaling": Scaling.OUTLIER_ADDITIVE.value}
        )
    pts = tuple((complex(zh), float(v)) for zh, v in zip(zhats, values))
    return TheoryCurve(points=pts, meta=meta)
