"""Flat weighted model geometries over the complex plane.

A model is the plane with the Euclidean metric and a Hermitian weight
``e^{-phi}`` on the trivial line bundle: sections at tensor power n are
entire functions f with pointwise norm ``|f(z)| e^{-n phi(z)/2}``.  The
curvature of the weight, its induced distances and the test forms paired
against zero sets all live here.

All densities follow one fixed normalization: for a function g on the
plane, ``dd^c g`` has density ``laplacian(g) / (4 pi)`` against Lebesgue
measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ModelValidationError

_DISK_SLACK = 1e-12


class WeightKind(Enum):
    BARGMANN_FOCK = "bargmann_fock"
    RADIAL_POLYNOMIAL = "radial_polynomial"
    CUSTOM = "custom"


@dataclass(frozen=True)
class WeightModel:
    """An admissible weight on the plane, restricted to a closed disk.

    ``weight`` and ``laplacian_weight`` must accept complex scalars or
    ndarrays and evaluate vectorized.  ``curvature_floor`` is the verified
    minimum of the curvature eigenvalue ``laplacian_weight/2`` over the
    truncation disk; construction rejects non-positive floors.
    """

    kind: WeightKind
    weight: Callable[[np.ndarray], np.ndarray]
    laplacian_weight: Callable[[np.ndarray], np.ndarray]
    curvature_floor: float
    truncation_radius: float
    radial: bool
    # for radial kinds: phi(z) = sum_k coefficients[k] * |z|^(2(k+1))
    coefficients: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.truncation_radius <= 0:
            raise ModelValidationError("truncation radius must be positive")
        if not np.isfinite(self.curvature_floor) or self.curvature_floor <= 0:
            raise ModelValidationError(
                f"curvature floor must be positive, got {self.curvature_floor}"
            )

    def check_in_disk(self, *points: complex | np.ndarray) -> None:
        r = self.truncation_radius * (1.0 + _DISK_SLACK) + _DISK_SLACK
        for p in points:
            if np.any(np.abs(p) > r):
                raise DomainError(
                    f"point with |z| = {np.max(np.abs(p)):.6g} outside the "
                    f"truncation disk of radius {self.truncation_radius:.6g}"
                )


def _radial_poly_weight(coeffs: Sequence[float]):
    c = np.asarray(coeffs, dtype=float)

    def weight(z):
        rho = np.abs(np.asarray(z)) ** 2
        acc = np.zeros_like(rho)
        for ck in c[::-1]:
            acc = (acc + ck) * rho
        return acc

    def laplacian(z):
        rho = np.abs(np.asarray(z)) ** 2
        acc = np.zeros_like(rho)
        # laplacian of sum c_k rho^k is 4 sum k^2 c_k rho^(k-1)
        for k in range(len(c), 0, -1):
            acc = acc * rho + 4.0 * k * k * c[k - 1]
        return acc

    return weight, laplacian


def _radial_poly_curvature_range(coeffs: Sequence[float], radius: float):
    """Exact min/max of the curvature eigenvalue over the disk.

    The eigenvalue is a polynomial in rho = |z|^2; extrema sit at the
    endpoints of [0, radius^2] or at real critical points in between.
    """
    c = np.asarray(coeffs, dtype=float)
    # kappa(rho) = 2 sum k^2 c_k rho^(k-1), ascending in rho
    kappa = np.array([2.0 * k * k * c[k - 1] for k in range(1, len(c) + 1)])
    rho_max = radius * radius
    candidates = [0.0, rho_max]
    if len(kappa) > 1:
        dk = np.polynomial.polynomial.polyder(kappa)
        roots = np.polynomial.polynomial.polyroots(dk)
        for r in roots:
            if abs(r.imag) < 1e-12 and 0.0 < r.real < rho_max:
                candidates.append(float(r.real))
    vals = [float(np.polynomial.polynomial.polyval(r, kappa)) for r in candidates]
    return min(vals), max(vals)


def bargmann_fock(truncation_radius: float = 1.0) -> WeightModel:
    """The Gaussian weight ``phi(z) = |z|^2`` (constant curvature 2)."""
    weight, laplacian = _radial_poly_weight([1.0])
    return WeightModel(
        kind=WeightKind.BARGMANN_FOCK,
        weight=weight,
        laplacian_weight=laplacian,
        curvature_floor=2.0,
        truncation_radius=truncation_radius,
        radial=True,
        coefficients=(1.0,),
    )


def radial_polynomial(
    coefficients: Sequence[float], truncation_radius: float = 1.0
) -> WeightModel:
    """Weight ``phi(z) = sum_k c_k |z|^(2k)`` with coefficients ``c_1..c_K``.

    Rejects weights whose curvature eigenvalue is not strictly positive
    somewhere on the truncation disk.
    """
    coeffs = tuple(float(c) for c in coefficients)
    if not coeffs:
        raise ModelValidationError("radial polynomial weight needs coefficients")
    floor, _ = _radial_poly_curvature_range(coeffs, truncation_radius)
    if floor <= 0:
        raise ModelValidationError(
            f"curvature eigenvalue reaches {floor:.6g} <= 0 on the disk; "
            "weight is not admissible"
        )
    weight, laplacian = _radial_poly_weight(coeffs)
    return WeightModel(
        kind=WeightKind.RADIAL_POLYNOMIAL,
        weight=weight,
        laplacian_weight=laplacian,
        curvature_floor=floor,
        truncation_radius=truncation_radius,
        radial=True,
        coefficients=coeffs,
    )


def custom_model(
    weight: Callable,
    laplacian_weight: Callable,
    truncation_radius: float,
    radial: bool = False,
    grid: int = 201,
) -> WeightModel:
    """Wrap user-supplied weight callables, estimating the curvature floor
    on a grid over the truncation disk."""
    if radial:
        r = np.linspace(0.0, truncation_radius, grid)
        kappa = np.asarray(laplacian_weight(r.astype(complex))) / 2.0
    else:
        x = np.linspace(-truncation_radius, truncation_radius, grid)
        zz = x[:, None] + 1j * x[None, :]
        pts = zz[np.abs(zz) <= truncation_radius]
        kappa = np.asarray(laplacian_weight(pts)) / 2.0
    floor = float(np.min(kappa))
    if floor <= 0:
        raise ModelValidationError(
            f"curvature eigenvalue reaches {floor:.6g} <= 0 on the disk; "
            "weight is not admissible"
        )
    return WeightModel(
        kind=WeightKind.CUSTOM,
        weight=weight,
        laplacian_weight=laplacian_weight,
        curvature_floor=floor,
        truncation_radius=truncation_radius,
        radial=radial,
    )


def curvature_eigenvalue(model: WeightModel, x: complex) -> float:
    """Curvature eigenvalue ``laplacian(phi)(x) / 2`` at a point of the disk."""
    model.check_in_disk(x)
    return float(np.real(model.laplacian_weight(x))) / 2.0


def weighted_distance_sq(
    model: WeightModel, x: complex, u: complex, u2: complex
) -> float:
    """Curvature-weighted squared displacement distance at base point x."""
    model.check_in_disk(x, u, u2)
    return curvature_eigenvalue(model, x) * abs(u - u2) ** 2


def distance_comparison_constant(model: WeightModel) -> float:
    """Constant D1 with ``D1*|u-u2| >= Psi_x(u,u2) >= |u-u2|/D1`` on the disk."""
    if model.radial and model.coefficients:
        lo, hi = _radial_poly_curvature_range(
            model.coefficients, model.truncation_radius
        )
    else:
        x = np.linspace(-model.truncation_radius, model.truncation_radius, 201)
        zz = x[:, None] + 1j * x[None, :]
        pts = zz[np.abs(zz) <= model.truncation_radius]
        kappa = np.real(model.laplacian_weight(pts)) / 2.0
        lo, hi = float(np.min(kappa)), float(np.max(kappa))
    return max(np.sqrt(hi), 1.0 / np.sqrt(lo))


def chern_density(model: WeightModel, x) -> np.ndarray | float:
    """Density of the curvature form against Lebesgue: ``laplacian(phi)/(4 pi)``."""
    val = np.real(model.laplacian_weight(x)) / (4.0 * np.pi)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(val)
    return val


@dataclass(frozen=True)
class TestForm:
    """Compactly supported real test function with analytic Laplacian.

    ``value`` must be three times continuously differentiable, vanish with
    its first derivatives at the support boundary, and ``laplacian`` must
    be its exact Laplacian (C^1).  Both evaluate vectorized.
    """

    value: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    radial: bool = False

    def __post_init__(self):
        if self.support_radius <= 0:
            raise ModelValidationError("support radius must be positive")

    def __call__(self, x):
        out = np.where(
            np.abs(x) <= self.support_radius, self.value(np.asarray(x)), 0.0
        )
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out)
        return out


def testform_density(form: TestForm, x) -> np.ndarray | float:
    """Laplacian density ``psi = laplacian(value)/(4 pi)``, zero off support."""
    out = np.where(
        np.abs(x) <= form.support_radius,
        np.asarray(form.laplacian(np.asarray(x))) / (4.0 * np.pi),
        0.0,
    )
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def quartic_bump(support_radius: float = 1.0, amplitude: float = 1.0) -> TestForm:
    """Bump ``A (1 - |z|^2/r^2)^4`` inside radius r, zero outside.

    Exactly C^3 across the boundary (the first three derivatives vanish
    there), with Laplacian ``(16 A / r^2) (1-u)^2 (4u - 1)`` for
    ``u = |z|^2 / r^2``.
    """
    r2 = support_radius * support_radius
    a = amplitude

    def value(z):
        u = np.abs(np.asarray(z)) ** 2 / r2
        return np.where(u <= 1.0, a * (1.0 - np.minimum(u, 1.0)) ** 4, 0.0)

    def laplacian(z):
        u = np.abs(np.asarray(z)) ** 2 / r2
        w = np.minimum(u, 1.0)
        return np.where(u <= 1.0, (16.0 * a / r2) * (1.0 - w) ** 2 * (4.0 * w - 1.0), 0.0)

    return TestForm(
        value=value, laplacian=laplacian, support_radius=support_radius, radial=True
    )


# Analytic integrals of the quartic bump, used as frozen oracle values:
#   integral of value    = pi * A * r^2 / 5
#   integral of psi      = 0
#   integral of psi^2    = 48 A^2 / (35 pi)
def quartic_bump_value_integral(support_radius: float = 1.0, amplitude: float = 1.0) -> float:
    return np.pi * amplitude * support_radius**2 / 5.0


def quartic_bump_density_sq_integral(amplitude: float = 1.0) -> float:
    return 48.0 * amplitude**2 / (35.0 * np.pi)


def plateau_bump(support_radius: float = 1.0, amplitude: float = 1.0) -> TestForm:
    """Bump that is exactly constant on the inner half of its support.

    The ramp is the degree-7 smoothstep, so the function is C^3 and its
    first three derivatives vanish at both the plateau edge and the outer
    boundary.
    """
    r2 = support_radius * support_radius
    a = amplitude

    def _ramp(t):
        # s(t) = 35 t^4 - 84 t^5 + 70 t^6 - 20 t^7 on [0, 1]
        return t**4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))

    def _ramp_d1(t):
        return t**3 * (140.0 + t * (-420.0 + t * (420.0 - 140.0 * t)))

    def _ramp_d2(t):
        return t**2 * (420.0 + t * (-1680.0 + t * (2100.0 - 840.0 * t)))

    def value(z):
        u = np.abs(np.asarray(z)) ** 2 / r2
        t = np.clip(2.0 * u - 1.0, 0.0, 1.0)
        return np.where(u <= 1.0, a * (1.0 - _ramp(t)), 0.0)

    def laplacian(z):
        # with g(rho) = value, Laplacian = 4 (g'(rho) + rho g''(rho))
        u = np.abs(np.asarray(z)) ** 2 / r2
        t = np.clip(2.0 * u - 1.0, 0.0, 1.0)
        inside = (u > 0.5) & (u <= 1.0)
        g1 = -a * _ramp_d1(t) * (2.0 / r2)
        g2 = -a * _ramp_d2(t) * (4.0 / r2**2)
        rho = u * r2
        return np.where(inside, 4.0 * (g1 + rho * g2), 0.0)

    return TestForm(
        value=value, laplacian=laplacian, support_radius=support_radius, radial=True
    )
