"""Zero divisors of sampled sections: root extraction and pairing.

The holomorphic part of a section is a polynomial, so its divisor is the
full root set with multiplicities.  Roots come from Ehrlich-Aberth
simultaneous iteration started on perturbed circles whose radii follow the
Newton polygon of the coefficients, then Newton polishing; multiple roots
(deterministic inputs only, almost surely absent for random sections) are
recovered by clustering.

Points far outside the unit scale are evaluated through the reversed
polynomial at w = 1/z: direct Horner would overflow there, while
``p(z) = z^d rev(w)`` keeps every accumulator bounded, and the Newton
ratio has the closed form ``z rev(w) / (d rev(w) - w rev'(w))``.

The iteration itself runs as a compiled kernel (sequential sweeps with
per-root freezing); a pure-numpy twin of the same mathematics is kept for
cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import DegenerateSectionError, RootFindingError
from .geometry import TestForm
from .sampling import RandomSection

_TRIM_REL = 1e-14
_EPS = np.finfo(float).eps
_FAR_RADIUS = 2.0


@dataclass(frozen=True)
class Divisor:
    """Zero set with multiplicities: list of (location, multiplicity)."""

    points: tuple[tuple[complex, int], ...]

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.points)

    def locations(self) -> np.ndarray:
        return np.array([z for z, _ in self.points], dtype=complex)

    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.points], dtype=int)


def polynomial_part(sec: RandomSection) -> np.ndarray:
    """Monomial coefficients of the section's holomorphic part."""
    return sec.basis.section_coefficients(sec.coeffs)


def _horner_pair(coeffs: np.ndarray, z: np.ndarray):
    """Polynomial and derivative values in one pass (coeffs ascending)."""
    p = np.full_like(z, coeffs[-1])
    dp = np.zeros_like(z)
    for c in coeffs[-2::-1]:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _abs_polyval(abs_coeffs: np.ndarray, r: np.ndarray) -> np.ndarray:
    acc = np.full_like(r, abs_coeffs[-1])
    for c in abs_coeffs[-2::-1]:
        acc = acc * r + c
    return acc


class _Evaluator:
    """Overflow-safe Newton ratios, residual logs and noise floors for a
    fixed coefficient vector, switching to the reversed polynomial far out.

    Reference implementation of the compiled kernel's arithmetic; used for
    polishing diagnostics and in tests.
    """

    def __init__(self, coeffs: np.ndarray):
        self.coeffs = coeffs
        self.rev = coeffs[::-1].copy()
        self.abs_coeffs = np.abs(coeffs)
        self.abs_rev = self.abs_coeffs[::-1].copy()
        self.degree = coeffs.size - 1
        self.norm = float(np.max(self.abs_coeffs))

    def newton_ratio_and_settled(self, z: np.ndarray):
        d = self.degree
        ratio = np.zeros_like(z)
        settled = np.zeros(z.shape, dtype=bool)
        far = np.abs(z) > _FAR_RADIUS
        near = ~far
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if np.any(near):
                zn = z[near]
                p, dp = _horner_pair(self.coeffs, zn)
                noise = 4.0 * d * _EPS * _abs_polyval(self.abs_coeffs, np.abs(zn))
                settled[near] = np.abs(p) <= noise
                ratio[near] = p / dp
            if np.any(far):
                zf = z[far]
                w = 1.0 / zf
                pv, dpv = _horner_pair(self.rev, w)
                noise = 4.0 * d * _EPS * _abs_polyval(self.abs_rev, np.abs(w))
                settled[far] = np.abs(pv) <= noise
                ratio[far] = zf * pv / (d * pv - w * dpv)
        return ratio, settled

    def log_scaled_residual(self, z: np.ndarray) -> np.ndarray:
        """``log( |p(z)| / (max|coeff| (1+|z|)^degree) )`` without overflow."""
        d = self.degree
        out = np.empty(z.shape, dtype=float)
        far = np.abs(z) > _FAR_RADIUS
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if np.any(~far):
                zn = z[~far]
                p, _ = _horner_pair(self.coeffs, zn)
                out[~far] = np.log(np.abs(p))
            if np.any(far):
                zf = z[far]
                pv, _ = _horner_pair(self.rev, 1.0 / zf)
                out[far] = d * np.log(np.abs(zf)) + np.log(np.abs(pv))
        return out - np.log(self.norm) - d * np.log1p(np.abs(z))


def _newton_polygon_radii(coeffs: np.ndarray) -> np.ndarray:
    """Initial root moduli from the upper convex hull of (k, log|c_k|)."""
    d = coeffs.size - 1
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(coeffs))
    ks = np.nonzero(np.isfinite(logs))[0]
    hull = [ks[0]]
    for k in ks[1:]:
        while len(hull) >= 2:
            k1, k2 = hull[-2], hull[-1]
            # keep the hull upper-convex: slopes must strictly decrease
            if (logs[k2] - logs[k1]) * (k - k2) <= (logs[k] - logs[k2]) * (k2 - k1):
                hull.pop()
            else:
                break
        hull.append(k)
    radii = np.empty(d, dtype=float)
    pos = 0
    for k1, k2 in zip(hull[:-1], hull[1:]):
        r = np.exp((logs[k1] - logs[k2]) / (k2 - k1))
        radii[pos : pos + (k2 - k1)] = r
        pos += k2 - k1
    return radii


def _initial_guesses(coeffs: np.ndarray) -> np.ndarray:
    d = coeffs.size - 1
    radii = _newton_polygon_radii(coeffs)
    angles = 2.0 * np.pi * (np.arange(d) + 0.37) / d + 0.5 / d
    return radii * np.exp(1j * angles)


@nb.njit(cache=True)
def _aberth_kernel(coeffs, rev, abs_coeffs, abs_rev, z, far_radius,
                   max_iterations):  # pragma: no cover - compiled
    d = z.shape[0]
    eps = 2.220446049250313e-16
    settled = np.zeros(d, np.bool_)
    n_settled = 0
    for it in range(max_iterations):
        max_step = 0.0
        for j in range(d):
            if settled[j]:
                continue
            zj = z[j]
            azj = abs(zj)
            kick = 0.1 * (1.0 + 1j) * (azj + 0.1)
            if azj <= far_radius:
                p = coeffs[d]
                dp = 0.0 + 0.0j
                err = abs_coeffs[d]
                for k in range(d - 1, -1, -1):
                    dp = dp * zj + p
                    p = p * zj + coeffs[k]
                    err = err * azj + abs_coeffs[k]
                if abs(p) <= 4.0 * d * eps * err:
                    settled[j] = True
                    n_settled += 1
                    continue
                ratio = p / dp if dp != 0 else kick
            else:
                w = 1.0 / zj
                aw = abs(w)
                pv = rev[d]
                dpv = 0.0 + 0.0j
                err = abs_rev[d]
                for k in range(d - 1, -1, -1):
                    dpv = dpv * w + pv
                    pv = pv * w + rev[k]
                    err = err * aw + abs_rev[k]
                if abs(pv) <= 4.0 * d * eps * err:
                    settled[j] = True
                    n_settled += 1
                    continue
                den = d * pv - w * dpv
                ratio = zj * pv / den if den != 0 else kick
            s = 0.0 + 0.0j
            for k in range(d):
                if k != j:
                    dz = zj - z[k]
                    if dz != 0:
                        s += 1.0 / dz
            den = 1.0 - ratio * s
            delta = ratio / den if den != 0 else ratio
            if not (
                np.isfinite(delta.real) and np.isfinite(delta.imag)
            ):
                delta = kick
            z[j] = zj - delta
            rel = abs(delta) / (1.0 + abs(z[j]))
            if rel > max_step:
                max_step = rel
        if n_settled == d or max_step < 100.0 * eps:
            return it
    return -1


def _aberth_iterate(evaluator: _Evaluator, max_iterations: int = 600):
    z = _initial_guesses(evaluator.coeffs)
    status = _aberth_kernel(
        evaluator.coeffs,
        evaluator.rev,
        evaluator.abs_coeffs,
        evaluator.abs_rev,
        z,
        _FAR_RADIUS,
        max_iterations,
    )
    if status < 0:
        worst = float(np.exp(np.max(evaluator.log_scaled_residual(z))))
        raise RootFindingError(
            f"Ehrlich-Aberth did not settle in {max_iterations} iterations "
            f"(degree {evaluator.degree}, worst scaled residual {worst:.3e})"
        )
    return z, status


def _aberth_iterate_reference(evaluator: _Evaluator, max_iterations: int = 600):
    """Pure-numpy Jacobi-style twin of the compiled kernel (tests only)."""
    d = evaluator.degree
    z = _initial_guesses(evaluator.coeffs)
    for iteration in range(max_iterations):
        ratio, settled = evaluator.newton_ratio_and_settled(z)
        if np.all(settled):
            return z, iteration
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.sum(1.0 / diff, axis=1)
            delta = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(delta)
        if np.any(bad):
            delta = np.where(bad, 0.1 * (1.0 + 1j) * (np.abs(z) + 0.1), delta)
        delta = np.where(settled, 0.0, delta)
        z = z - delta
        if np.max(np.abs(delta) / (1.0 + np.abs(z))) < 100.0 * _EPS:
            return z, iteration
    raise RootFindingError(
        f"Ehrlich-Aberth (reference) did not settle in {max_iterations} "
        f"iterations (degree {d})"
    )


def _newton_polish(evaluator: _Evaluator, z: np.ndarray, steps: int = 6) -> np.ndarray:
    for _ in range(steps):
        ratio, settled = evaluator.newton_ratio_and_settled(z)
        if np.all(settled):
            break
        step = np.where(settled | ~np.isfinite(ratio), 0.0, ratio)
        z = z - step
    return z


def _cluster_roots(roots: np.ndarray, radius: float) -> list[tuple[complex, int]]:
    """Single-linkage clustering within ``radius`` via a sweep on the real
    part; pairs within the cluster radius always sit within it in re too."""
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    n = roots.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        j = i + 1
        while j < n and roots[j].real - roots[i].real <= radius:
            if abs(roots[j] - roots[i]) <= radius:
                parent[find(j)] = find(i)
            j += 1
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        pts = roots[members]
        out.append((complex(np.mean(pts)), len(members)))
    out.sort(key=lambda zm: (zm[0].real, zm[0].imag))
    return out


def find_zeros(p, polish_tol: float = 1e-12, use_kernel: bool = True) -> Divisor:
    """All complex roots of a coefficient vector, with multiplicities.

    Residuals are judged in the backward-stable sense: a polished root z
    satisfies ``|p(z)| <= polish_tol * max|coeff| * (1 + |z|)^degree``.
    Multiplicities come from clustering within ``10 sqrt(polish_tol)``.
    """
    coeffs = np.asarray(p, dtype=complex).ravel()
    norm = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    if coeffs.size == 0 or norm == 0.0:
        raise DegenerateSectionError("identically-zero polynomial has no divisor")
    # drop numerically-zero leading coefficients
    keep = np.nonzero(np.abs(coeffs) > _TRIM_REL * norm)[0]
    coeffs = coeffs[: keep[-1] + 1]
    # factor out exact roots at the origin
    zero_mult = 0
    while coeffs.size and coeffs[0] == 0.0:
        zero_mult += 1
        coeffs = coeffs[1:]
    d = coeffs.size - 1
    points: list[tuple[complex, int]] = []
    if d >= 1:
        evaluator = _Evaluator(coeffs)
        if use_kernel:
            roots, _ = _aberth_iterate(evaluator)
        else:
            roots, _ = _aberth_iterate_reference(evaluator)
        roots = _newton_polish(evaluator, roots)
        worst = float(np.exp(np.max(evaluator.log_scaled_residual(roots))))
        if worst > polish_tol:
            raise RootFindingError(
                f"polished residual {worst:.3e} exceeds tolerance {polish_tol:.1e}"
            )
        points = _cluster_roots(roots, 10.0 * np.sqrt(polish_tol))
    if zero_mult:
        points.insert(0, (0.0 + 0.0j, zero_mult))
    return Divisor(points=tuple(points))


def find_zeros_batch(coeff_rows: np.ndarray, polish_tol: float = 1e-12) -> list[Divisor]:
    """Divisors for many coefficient vectors of equal length."""
    coeff_rows = np.asarray(coeff_rows, dtype=complex)
    return [find_zeros(row, polish_tol) for row in coeff_rows]


def divisor_pairing(div: Divisor, form: TestForm) -> float:
    """Pairing of the divisor with a test function:
    ``sum multiplicity * value(location)``."""
    if not div.points:
        return 0.0
    locs = div.locations()
    mults = div.multiplicities()
    return float(np.sum(mults * form(locs)))
