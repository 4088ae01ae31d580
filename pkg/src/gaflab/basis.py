"""Orthonormal bases of weighted polynomial spaces at a tensor power.

Basis elements are polynomials ``f_j(z) = sum_k C[j,k] z^k`` orthonormal
for the inner product ``<f, g> = int f conj(g) e^{-n phi} dLeb``.  For the
Gaussian weight the coefficients are known in closed form; general radial
weights are orthonormalized from log-space monomial norms; non-radial
weights go through the full monomial Gram matrix and its Cholesky factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammainc, gammaln, logsumexp

from .errors import IllConditionedGramError, QuadratureError, ResourceLimitError
from .geometry import WeightKind, WeightModel
from .quadrature import (
    default_radial_count,
    log_monomial_norms,
    tensor_rule_for_degree,
    weighted_quad_radius,
)

_GENERIC_DEGREE_CAP = 512


@dataclass
class SectionBasis:
    """Orthonormal basis up to monomial degree ``degree`` at tensor power
    ``tensor_power``.

    ``coeffs`` is triangular with row j supported on columns 0..j; when
    ``diagonal`` is set, only the diagonal is nonzero (radial weights) and
    ``log_diag`` holds its logs for overflow-free evaluation.
    """

    tensor_power: int
    degree: int
    coeffs: np.ndarray
    gram_residual: float
    model: WeightModel
    diagonal: bool
    log_diag: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.diagonal and self.log_diag is None:
            self.log_diag = np.log(np.real(np.diag(self.coeffs)))

    def weighted_frame(self, points: np.ndarray) -> np.ndarray:
        """Matrix of ``f_j(z) e^{-n phi(z)/2}`` with shape (npoints, degree+1).

        Every entry is of order one for admissible weights, so the frame is
        safe to form even when raw coefficients span hundreds of orders of
        magnitude.
        """
        z = np.asarray(points, dtype=complex).ravel()
        n = self.tensor_power
        halfw = 0.5 * n * np.real(self.model.weight(z))
        j = np.arange(self.degree + 1)
        if self.diagonal:
            out = np.zeros((z.size, self.degree + 1), dtype=complex)
            nz = z != 0
            logz = np.log(z[nz])
            expo = (
                self.log_diag[None, :]
                + j[None, :] * logz[:, None]
                - halfw[nz][:, None]
            )
            out[nz] = np.exp(expo)
            if np.any(~nz):
                out[~nz, 0] = np.exp(self.log_diag[0] - halfw[~nz])
            return out
        vals = np.empty((z.size, self.degree + 1), dtype=complex)
        for row in range(self.degree + 1):
            vals[:, row] = np.polynomial.polynomial.polyval(
                z, self.coeffs[row, : row + 1]
            )
        return vals * np.exp(-halfw)[:, None]

    def section_coefficients(self, xi: np.ndarray) -> np.ndarray:
        """Monomial coefficients of ``sum_j xi_j f_j``."""
        xi = np.asarray(xi, dtype=complex)
        if self.diagonal:
            return xi * np.diag(self.coeffs)
        return xi @ self.coeffs

    def section_values_weighted(self, xi: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Complex values ``(sum_j xi_j f_j)(z) e^{-n phi(z)/2}``."""
        z = np.asarray(points, dtype=complex)
        q = self.section_coefficients(xi)
        vals = np.polynomial.polynomial.polyval(z, q)
        halfw = 0.5 * self.tensor_power * np.real(self.model.weight(z))
        return vals * np.exp(-halfw)


def weighted_inner_product(
    f: np.ndarray,
    g: np.ndarray,
    model: WeightModel,
    n: int,
    rtol: float = 1e-10,
    radial_count: int = 0,
    angular_count: int = 0,
) -> complex:
    """Weighted inner product of two coefficient vectors by polar tensor
    quadrature, with a refinement self-check.

    The rule uses enough angular nodes to integrate the angular dependence
    exactly, so the check only guards the radial direction.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    deg = max(f.size, g.size) - 1

    def compute(rule):
        pf = np.polynomial.polynomial.polyval(rule.nodes, f)
        pg = np.polynomial.polynomial.polyval(rule.nodes, g)
        wt = np.exp(-n * np.real(model.weight(rule.nodes)))
        return complex(np.sum(rule.weights * wt * pf * np.conj(pg)))

    base = tensor_rule_for_degree(
        model, n, deg, radial_count=radial_count, angular_count=angular_count
    )
    refined = tensor_rule_for_degree(
        model,
        n,
        deg,
        radial_count=int(np.ceil(1.5 * base.radial_count)) + 8,
        angular_count=angular_count,
    )
    coarse = compute(base)
    fine = compute(refined)
    scale = max(abs(coarse), abs(fine))
    if scale > 0 and abs(coarse - fine) > rtol * scale:
        raise QuadratureError(
            f"inner product refinement drift {abs(coarse - fine) / scale:.3e} "
            f"exceeds {rtol:.1e}"
        )
    return fine


def _closed_form_log_diag(n: int, degree: int) -> np.ndarray:
    # |z^j|^2 norm is pi * j! / n^(j+1) for the Gaussian weight
    j = np.arange(degree + 1, dtype=float)
    return 0.5 * ((j + 1.0) * np.log(n) - np.log(np.pi) - gammaln(j + 1.0))


def build_basis_closed_form(model: WeightModel, n: int, degree: int) -> SectionBasis:
    """Closed-form orthonormal basis for the Gaussian weight:
    ``f_j = sqrt(n^(j+1) / (pi j!)) z^j``."""
    if model.kind is not WeightKind.BARGMANN_FOCK:
        raise ValueError("closed form is only available for the Gaussian weight")
    log_diag = _closed_form_log_diag(n, degree)
    diag = np.exp(log_diag)
    if not np.all(np.isfinite(diag)):
        raise ResourceLimitError(
            "closed-form coefficients overflow double precision at this degree"
        )
    coeffs = np.diag(diag.astype(complex))
    # independent verification pass: quadrature norms of every element
    log_norms = log_monomial_norms(model, n, degree)
    residual = float(np.max(np.abs(np.expm1(2.0 * log_diag + log_norms))))
    return SectionBasis(
        tensor_power=n,
        degree=degree,
        coeffs=coeffs,
        gram_residual=residual,
        model=model,
        diagonal=True,
        log_diag=log_diag,
    )


def _build_numeric_radial(model: WeightModel, n: int, degree: int) -> SectionBasis:
    log_norms = log_monomial_norms(model, n, degree)
    log_diag = -0.5 * log_norms
    diag = np.exp(log_diag)
    if not np.all(np.isfinite(diag)):
        raise ResourceLimitError(
            "orthonormalization coefficients overflow double precision"
        )
    # residual re-measured against a deliberately different radial rule
    radius = weighted_quad_radius(model, n, degree)
    nr = default_radial_count(n, degree, radius)
    log_ref = log_monomial_norms(
        model, n, degree, radial_count=2 * nr + 13, check=False
    )
    residual = float(np.max(np.abs(np.expm1(log_ref - log_norms))))
    coeffs = np.diag(diag.astype(complex))
    return SectionBasis(
        tensor_power=n,
        degree=degree,
        coeffs=coeffs,
        gram_residual=residual,
        model=model,
        diagonal=True,
        log_diag=log_diag,
    )


def _monomial_gram(model: WeightModel, n: int, degree: int,
                   radial_count: int = 0, angular_count: int = 0) -> np.ndarray:
    rule = tensor_rule_for_degree(
        model, n, degree, radial_count=radial_count, angular_count=angular_count
    )
    if rule.nodes.size * (degree + 1) > 6e7:
        raise ResourceLimitError(
            "monomial Gram matrix would need too many quadrature evaluations; "
            "use a radial weight or lower the degree"
        )
    powers = np.arange(degree + 1)
    v = rule.nodes[:, None] ** powers[None, :]
    w = rule.weights * np.exp(-n * np.real(model.weight(rule.nodes)))
    return v.conj().T @ (w[:, None] * v)


def _failing_leading_minor(g: np.ndarray) -> int:
    lo, hi = 1, g.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        try:
            np.linalg.cholesky(g[:mid, :mid])
            lo = mid + 1
        except np.linalg.LinAlgError:
            hi = mid
    return lo


def build_basis_numeric(model: WeightModel, n: int, degree: int) -> SectionBasis:
    """Orthonormalize monomials numerically.

    Radial weights keep a diagonal Gram (the uniform angular rule kills the
    off-diagonal frequencies exactly), so only radial integrals are needed.
    Non-radial weights build the dense Gram matrix and invert its Cholesky
    factor.
    """
    if model.radial:
        return _build_numeric_radial(model, n, degree)
    if degree > _GENERIC_DEGREE_CAP:
        raise ResourceLimitError(
            f"dense orthonormalization capped at degree {_GENERIC_DEGREE_CAP}"
        )
    g = _monomial_gram(model, n, degree)
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        minor = _failing_leading_minor(g)
        raise IllConditionedGramError(
            f"monomial Gram matrix not positive definite at working precision "
            f"(leading minor of order {minor})"
        ) from exc
    coeffs = solve_triangular(chol, np.eye(degree + 1, dtype=complex), lower=True)
    residual = float(np.max(np.abs(coeffs @ g @ coeffs.conj().T - np.eye(degree + 1))))
    return SectionBasis(
        tensor_power=n,
        degree=degree,
        coeffs=coeffs,
        gram_residual=residual,
        model=model,
        diagonal=False,
    )


def build_basis(model: WeightModel, n: int, degree: int) -> SectionBasis:
    if model.kind is WeightKind.BARGMANN_FOCK:
        return build_basis_closed_form(model, n, degree)
    return build_basis_numeric(model, n, degree)


def truncation_degree(
    model: WeightModel,
    n: int,
    radius: float,
    tol: float,
    cap: int = 4096,
) -> int:
    """Smallest degree D such that the degree-D diagonal kernel matches the
    untruncated one to relative ``tol`` on the disk of the given radius.

    For the Gaussian weight the relative tail is the Poisson upper tail
    ``P(Poisson(n r^2) > D)``, worst at r = radius.  Other radial weights
    are handled by doubling the degree until the diagonal kernel stops
    moving on a radial grid, then shrinking back to the smallest degree
    that stays within ``tol`` of the converged reference.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    if model.kind is WeightKind.BARGMANN_FOCK:
        lam = n * radius * radius
        guess = int(lam + 12.0 * np.sqrt(lam + 1.0) + 60.0)
        hi = min(max(guess, 8), cap)
        dd = np.arange(hi + 1, dtype=float)
        tails = gammainc(dd + 1.0, lam)
        ok = np.nonzero(tails <= tol)[0]
        if ok.size == 0:
            raise ResourceLimitError(
                f"truncation degree exceeds the cap of {cap} "
                f"(tail at cap: {tails[-1]:.3e})"
            )
        return int(ok[0])

    r_grid = np.linspace(radius / 16.0, radius, 25).astype(complex)

    def log_diag_kernel(deg):
        logs = -log_monomial_norms(model, n, deg, check=False)
        j = np.arange(deg + 1, dtype=float)
        lr = np.log(np.abs(r_grid))
        expo = logs[None, :] + 2.0 * j[None, :] * lr[:, None]
        return logsumexp(expo, axis=1) - n * np.real(model.weight(r_grid))

    deg = 16
    prev = log_diag_kernel(deg)
    while True:
        if 2 * deg > cap:
            raise ResourceLimitError(f"truncation degree exceeds the cap of {cap}")
        cur = log_diag_kernel(2 * deg)
        if np.max(np.abs(np.expm1(prev - cur))) <= tol / 4.0:
            break
        deg *= 2
        prev = cur
    reference = log_diag_kernel(4 * deg if 4 * deg <= cap else 2 * deg)

    def within(d):
        return np.max(np.abs(np.expm1(log_diag_kernel(d) - reference))) <= tol

    lo, hi = 1, 2 * deg
    while lo < hi:
        mid = (lo + hi) // 2
        if within(mid):
            hi = mid
        else:
            lo = mid + 1
    return int(lo)
