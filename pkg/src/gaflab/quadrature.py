"""Quadrature rules for weighted integrals over the plane.

Two families: polar tensor rules (Gauss-Legendre radially, uniform
trapezoid in angle, exact for trigonometric polynomials below the node
count) for smooth weighted integrands, and an adaptive cell rule on a
square for integrands with integrable logarithmic singularities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import QuadratureError


@dataclass(frozen=True)
class PolarRule:
    """Tensor quadrature on a disk, nodes as complex points with Lebesgue
    weights (the ``r dr dtheta`` factor is folded into ``weights``)."""

    nodes: np.ndarray
    weights: np.ndarray
    radius: float
    radial_count: int
    angular_count: int

    def integrate(self, values: np.ndarray) -> float | complex:
        return np.sum(self.weights * values)


def radial_gauss_legendre(radius: float, count: int):
    """Gauss-Legendre nodes/weights on [0, radius]."""
    x, w = np.polynomial.legendre.leggauss(count)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * w
    return r, wr


def polar_rule(radius: float, radial_count: int, angular_count: int) -> PolarRule:
    r, wr = radial_gauss_legendre(radius, radial_count)
    theta = 2.0 * np.pi * np.arange(angular_count) / angular_count
    wt = 2.0 * np.pi / angular_count
    nodes = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.repeat(wr * r * wt, angular_count)
    return PolarRule(
        nodes=nodes,
        weights=weights,
        radius=radius,
        radial_count=radial_count,
        angular_count=angular_count,
    )


def weighted_quad_radius(model, n: int, degree: int, log_drop: float = 45.0) -> float:
    """Radius beyond which the mass of ``r^(2*degree+1) e^(-n phi(r))`` is
    negligible (integrand down by e^-log_drop from its peak).

    Valid for admissible radial weights: the log-integrand is concave in r
    past its single peak, so a bisection to the right of the peak finds the
    cutoff.
    """

    def h(r):
        r = np.asarray(r, dtype=float)
        return (2 * degree + 1) * np.log(np.maximum(r, 1e-300)) - n * np.real(
            model.weight(r.astype(complex))
        )

    r_hi = max(1.0, model.truncation_radius)
    grid = np.linspace(1e-9, r_hi, 513)
    hv = h(grid)
    peak = float(np.max(hv))
    # extend until the integrand has dropped well below the peak
    for _ in range(200):
        grid = np.linspace(1e-9, r_hi, 513)
        hv = h(grid)
        peak = float(np.max(hv))
        if hv[-1] < peak - (log_drop + 5.0):
            break
        r_hi *= 1.5
    else:
        raise QuadratureError("could not bracket the weighted integrand tail")
    r_peak = float(grid[np.argmax(hv)])
    lo, hi = r_peak, r_hi
    target = peak - log_drop
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if h(mid) > target:
            lo = mid
        else:
            hi = mid
    return 1.02 * hi


def default_radial_count(n: int, degree: int, radius: float) -> int:
    return int(max(96, degree + 2 * np.ceil(np.sqrt(max(n, 1)) * radius) + 32))


def log_monomial_norms(
    model,
    n: int,
    degree: int,
    radial_count: int | None = None,
    check: bool = True,
    rtol: float = 1e-10,
) -> np.ndarray:
    """Logs of the squared weighted norms of monomials z^0..z^degree for a
    radial weight: ``log( 2 pi * int r^(2j+1) e^(-n phi(r)) dr )``.

    Computed in log space so that extreme tensor powers cannot overflow.
    A refined rule cross-checks the result when ``check`` is set.
    """
    if not model.radial:
        raise QuadratureError("log_monomial_norms requires a radial weight")
    radius = weighted_quad_radius(model, n, degree)
    nr = radial_count or default_radial_count(n, degree, radius)

    def compute(count):
        r, wr = radial_gauss_legendre(radius, count)
        logr = np.log(r)
        expo = (2.0 * np.arange(degree + 1) + 1.0)[:, None] * logr[None, :]
        expo -= n * np.real(model.weight(r.astype(complex)))[None, :]
        return np.log(2.0 * np.pi) + logsumexp(expo, axis=1, b=wr[None, :])

    vals = compute(nr)
    if check:
        ref = compute(int(np.ceil(1.5 * nr)) + 8)
        err = np.max(np.abs(np.expm1(vals - ref)))
        if err > rtol:
            raise QuadratureError(
                f"radial quadrature failed to converge: relative drift "
                f"{err:.3e} > {rtol:.1e} between refinements"
            )
        vals = ref
    return vals


def tensor_rule_for_degree(model, n: int, degree: int, radial_count: int = 0,
                           angular_count: int = 0) -> PolarRule:
    """Polar rule adequate for inner products of polynomials up to ``degree``
    against the weight at tensor power n."""
    radius = weighted_quad_radius(model, n, degree)
    nr = radial_count or default_radial_count(n, degree, radius)
    na = angular_count or (4 * degree + 8)
    return polar_rule(radius, nr, na)


def _gl_cell_points(points: int):
    x, w = np.polynomial.legendre.leggauss(points)
    gx, gy = np.meshgrid(x, x, indexing="ij")
    gw = np.outer(w, w).ravel()
    return (gx.ravel() + 1j * gy.ravel()), gw


def adaptive_square_quadrature(
    integrand,
    half_width: float,
    base_cells: int = 24,
    gl_points: int = 6,
    tol: float = 5e-4,
    max_levels: int = 4,
    skip_cell=None,
) -> float:
    """Integrate over the square [-hw, hw]^2 with per-cell dyadic refinement.

    ``integrand`` maps a complex ndarray of points to real values and may
    contain integrable log singularities; cells whose coarse/fine values
    disagree beyond their area-proportional share of ``tol`` are split, up
    to ``max_levels`` beyond the base grid.  ``skip_cell(centers, half)``
    may mark cells where the integrand vanishes identically.

    Nodes that evaluate non-finite (quadrature node exactly on a zero) are
    nudged and retried a bounded number of times.
    """
    unit_pts, unit_w = _gl_cell_points(gl_points)
    sub_shift = np.array([-0.5 - 0.5j, -0.5 + 0.5j, 0.5 - 0.5j, 0.5 + 0.5j])
    total_area = (2.0 * half_width) ** 2

    def evaluate(points):
        vals = np.asarray(integrand(points), dtype=float)
        bad = ~np.isfinite(vals)
        scale = max(half_width, 1.0)
        for attempt in range(3):
            if not np.any(bad):
                return vals
            nudged = points[bad] + (1e-9 * scale) * (1.0 + 1j) * (attempt + 1)
            vals[bad] = np.asarray(integrand(nudged), dtype=float)
            bad = ~np.isfinite(vals)
        if np.any(bad):
            raise QuadratureError(
                "integrand not finite at quadrature nodes after perturbation retries"
            )
        return vals

    def cell_values(centers, half):
        # (ncells, npts) evaluation; returns per-cell integrals
        pts = centers[:, None] + half * unit_pts[None, :]
        vals = evaluate(pts.ravel()).reshape(pts.shape)
        return half * half * (vals @ unit_w)

    # base grid
    edges = np.linspace(-half_width, half_width, base_cells + 1)
    cx = 0.5 * (edges[:-1] + edges[1:])
    centers = (cx[:, None] + 1j * cx[None, :]).ravel()
    half = half_width / base_cells

    if skip_cell is not None:
        centers = centers[~skip_cell(centers, half)]

    total = 0.0
    level = 0
    coarse = cell_values(centers, half) if centers.size else None
    while centers.size:
        sub_centers = (centers[:, None] + half * sub_shift[None, :]).ravel()
        fine_parts = cell_values(sub_centers, half / 2.0).reshape(-1, 4)
        fine = fine_parts.sum(axis=1)
        cell_tol = tol * ((2.0 * half) ** 2 / total_area)
        done = (np.abs(coarse - fine) <= cell_tol) | (level >= max_levels)
        total += float(np.sum(fine[done]))
        centers = (centers[~done][:, None] + half * sub_shift[None, :]).ravel()
        coarse = fine_parts[~done].ravel()
        half /= 2.0
        level += 1
    return total
