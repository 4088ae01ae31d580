"""Reproducing kernel of the weighted space and its normalized form.

The evaluator is either backed by a finite orthonormal basis or, for the
Gaussian weight, by the exact closed form ``(n/pi) e^{n z conj(w)}`` whose
weighted magnitude is ``(n/pi) e^{-n|z-w|^2/2}``.  The normalized kernel
compares pairs of points on a fixed [0, 1] scale and doubles as the
modulus of the covariance of the normalized Gaussian field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import SectionBasis
from .errors import ConfigError, KernelInvariantError
from .geometry import WeightKind, WeightModel

_CLAMP_SLACK = 1e-9


@dataclass
class KernelEvaluator:
    model: WeightModel
    tensor_power: int
    basis: Optional[SectionBasis] = None

    @classmethod
    def from_basis(cls, basis: SectionBasis) -> "KernelEvaluator":
        return cls(model=basis.model, tensor_power=basis.tensor_power, basis=basis)

    @classmethod
    def closed_form(cls, model: WeightModel, n: int) -> "KernelEvaluator":
        if model.kind is not WeightKind.BARGMANN_FOCK:
            raise ValueError("closed-form kernel requires the Gaussian weight")
        return cls(model=model, tensor_power=n, basis=None)

    @property
    def is_closed_form(self) -> bool:
        return self.basis is None

    def frame(self, points) -> np.ndarray:
        """Weighted basis values, shape (npoints, dim)."""
        if self.basis is None:
            raise ValueError("closed-form evaluator has no finite frame")
        return self.basis.weighted_frame(points)

    def weighted_magnitude(self, x, y) -> np.ndarray | float:
        """``|K_n(x, y)|`` in the weighted pointwise norm; broadcasts."""
        xa = np.asarray(x, dtype=complex)
        ya = np.asarray(y, dtype=complex)
        self.model.check_in_disk(xa, ya)
        n = self.tensor_power
        if self.basis is None:
            out = (n / np.pi) * np.exp(-0.5 * n * np.abs(xa - ya) ** 2)
        else:
            xb, yb = np.broadcast_arrays(xa, ya)
            fx = self.frame(xb.ravel())
            fy = self.frame(yb.ravel())
            out = np.abs(np.sum(fx * np.conj(fy), axis=1)).reshape(xb.shape)
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(out)
        return out

    def diagonal(self, x) -> np.ndarray | float:
        """Bergman kernel function ``K_n(x, x)`` in the weighted norm."""
        xa = np.asarray(x, dtype=complex)
        self.model.check_in_disk(xa)
        n = self.tensor_power
        if self.basis is None:
            out = np.full(np.shape(xa), n / np.pi)
        else:
            f = self.frame(xa.ravel())
            out = np.sum(np.abs(f) ** 2, axis=1).reshape(np.shape(xa))
        if np.ndim(x) == 0:
            return float(out)
        return out

    def normalized_kernel(self, x, y) -> np.ndarray | float:
        """``Gamma_n(x, y)`` in [0, 1]; values above 1 beyond a tiny slack
        signal a broken basis."""
        mag = np.asarray(self.weighted_magnitude(x, y), dtype=float)
        dx = np.asarray(self.diagonal(x), dtype=float)
        dy = np.asarray(self.diagonal(y), dtype=float)
        gamma = mag / np.sqrt(dx * dy)
        over = np.max(gamma) if gamma.size else 0.0
        if over > 1.0 + _CLAMP_SLACK:
            raise KernelInvariantError(
                f"normalized kernel reached {over!r} > 1 + {_CLAMP_SLACK}; "
                "basis is not orthonormal"
            )
        gamma = np.minimum(gamma, 1.0)
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(gamma)
        return gamma

    def covariance(self, x, y) -> complex:
        """Covariance ``beta_n(x, y)`` of the normalized Gaussian field."""
        xa = np.asarray(x, dtype=complex)
        ya = np.asarray(y, dtype=complex)
        self.model.check_in_disk(xa, ya)
        n = self.tensor_power
        if self.basis is None:
            val = np.exp(
                n * (xa * np.conj(ya))
                - 0.5 * n * (np.abs(xa) ** 2 + np.abs(ya) ** 2)
            )
        else:
            xb, yb = np.broadcast_arrays(xa, ya)
            fx = self.frame(xb.ravel())
            fy = self.frame(yb.ravel())
            dx = np.sum(np.abs(fx) ** 2, axis=1)
            dy = np.sum(np.abs(fy) ** 2, axis=1)
            val = (np.sum(fx * np.conj(fy), axis=1) / np.sqrt(dx * dy)).reshape(
                xb.shape
            )
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return complex(val)
        return val


def normalized_kernel_grid(ev: KernelEvaluator, xs, ys) -> np.ndarray:
    """Matrix of ``Gamma_n(x, y)`` over all pairs from two point sets.

    Frames are computed once per point set, so large pair grids stay cheap.
    """
    xs = np.asarray(xs, dtype=complex).ravel()
    ys = np.asarray(ys, dtype=complex).ravel()
    ev.model.check_in_disk(xs, ys)
    if ev.basis is None:
        n = ev.tensor_power
        gamma = np.exp(-0.5 * n * np.abs(xs[:, None] - ys[None, :]) ** 2)
    else:
        fx = ev.frame(xs)
        fy = ev.frame(ys)
        mag = np.abs(fx @ fy.conj().T)
        dx = np.sum(np.abs(fx) ** 2, axis=1)
        dy = np.sum(np.abs(fy) ** 2, axis=1)
        gamma = mag / np.sqrt(dx[:, None] * dy[None, :])
    over = float(np.max(gamma)) if gamma.size else 0.0
    if over > 1.0 + _CLAMP_SLACK:
        raise KernelInvariantError(
            f"normalized kernel reached {over!r} > 1 + {_CLAMP_SLACK}; "
            "basis is not orthonormal"
        )
    return np.minimum(gamma, 1.0)


def _polar_grid(radius: float, rings: int, spokes: int) -> np.ndarray:
    pts = [0.0 + 0.0j]
    for r in np.linspace(radius / rings, radius, rings):
        for t in range(spokes):
            pts.append(r * np.exp(2j * np.pi * (t + 0.31) / spokes))
    return np.asarray(pts)


def asymptotics_band(n: int, b0: float) -> float:
    return b0 * np.sqrt(np.log(n) / n)


def minimal_power_for_band(b0: float, limit: float, n_cap: int = 2**40) -> int:
    """Smallest tensor power with ``b0 sqrt(log n / n) <= limit``."""
    n = 2
    while n <= n_cap:
        if asymptotics_band(n, b0) <= limit:
            # the band is eventually decreasing; find the first hit by scan
            lo, hi = max(2, n // 2), n
            while lo < hi:
                mid = (lo + hi) // 2
                if asymptotics_band(mid, b0) <= limit:
                    hi = mid
                else:
                    lo = mid + 1
            return lo
        n *= 2
    raise ConfigError("no tensor power satisfies the asymptotics precondition")


def check_asymptotics_preconditions(
    ev: KernelEvaluator, k: int, b0: float, base_radius: float
) -> float:
    """Validate the band constraints; returns the band radius."""
    eps = ev.model.curvature_floor
    b0_min = np.sqrt(16.0 * k / eps)
    if b0 <= b0_min:
        raise ConfigError(
            f"b0 = {b0:.4g} must exceed sqrt(16 k / eps) = {b0_min:.4g}"
        )
    radius = ev.model.truncation_radius
    limit = min(radius / 2.0, radius - base_radius)
    if limit <= 0:
        raise ConfigError(
            "base grid radius leaves no room inside the truncation disk"
        )
    band = asymptotics_band(ev.tensor_power, b0)
    if band > limit:
        n_min = minimal_power_for_band(b0, limit)
        raise ConfigError(
            f"tensor power {ev.tensor_power} too small for the asymptotics "
            f"band: need n >= {n_min} so that b0 sqrt(log n / n) <= {limit:.4g}"
        )
    return float(band)


def asymptotics_report(
    ev: KernelEvaluator,
    k: int,
    b0: float,
    base_radius: float,
    gamma_floor: float = 1e-9,
    directions: int = 8,
    magnitudes: int = 9,
    offdiag_grid: int = 40,
) -> dict:
    """Near-diagonal Gaussian-decay fit and off-diagonal smallness check.

    Near the diagonal, ``-4 log Gamma_n / n`` is regressed against the
    curvature-weighted squared displacement over the band
    ``|u| <= b0 sqrt(log n / n)``; the expected slope is 1.  Off the band,
    ``Gamma_n n^k`` must stay bounded.  Pairs whose normalized kernel falls
    below ``gamma_floor`` are excluded from the fit: below that level the
    truncated basis no longer resolves the kernel.
    """
    n = ev.tensor_power
    band = check_asymptotics_preconditions(ev, k, b0, base_radius)

    base_pts = _polar_grid(base_radius, rings=3, spokes=6)
    kappas = np.real(ev.model.laplacian_weight(base_pts)) / 2.0

    psi_sq = []
    response = []
    mags = np.linspace(0.0, 1.0, magnitudes) * band
    dirs = np.exp(2j * np.pi * (np.arange(directions) + 0.17) / directions)
    for x, kap in zip(base_pts, kappas):
        u = (mags[:, None] * dirs[None, :]).ravel()
        u = np.concatenate(([0.0 + 0.0j], u[np.abs(u) > 0]))
        gam = np.asarray(ev.normalized_kernel(np.full(u.shape, x), x + u))
        keep = gam >= gamma_floor
        psi_sq.append(kap * np.abs(u[keep]) ** 2)
        response.append(-4.0 * np.log(gam[keep]) / n)
    psi_sq = np.concatenate(psi_sq)
    response = np.concatenate(response)

    design = np.column_stack([psi_sq, np.ones_like(psi_sq)])
    (slope, intercept), *_ = np.linalg.lstsq(design, response, rcond=None)
    fitted = design @ np.array([slope, intercept])
    ss_res = float(np.sum((response - fitted) ** 2))
    ss_tot = float(np.sum((response - np.mean(response)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    # off-diagonal sweep over pairs inside the base region
    xs = _polar_grid(base_radius, rings=4, spokes=8)
    grid_1d = np.linspace(-base_radius, base_radius, offdiag_grid)
    yy = (grid_1d[:, None] + 1j * grid_1d[None, :]).ravel()
    yy = yy[np.abs(yy) <= base_radius]
    gam = normalized_kernel_grid(ev, xs, yy)
    dist = np.abs(xs[:, None] - yy[None, :])
    far = dist >= band
    offdiag_max_scaled = float(np.max(gam[far]) * n**k) if np.any(far) else 0.0

    return {
        "n": int(n),
        "slope": float(slope),
        "intercept": float(intercept),
        "r2": float(r2),
        "offdiag_max_scaled": offdiag_max_scaled,
        "b0": float(b0),
        "k": int(k),
        "metadata": {
            "band_radius": band,
            "base_radius": float(base_radius),
            "gamma_floor": float(gamma_floor),
            "near_pairs": int(psi_sq.size),
            "far_pairs": int(np.count_nonzero(far)),
        },
    }
