"""Seeded complex Gaussian coefficients and random sections.

Streams are counter-based (Philox keyed by master seed and stream index),
so any (seed, index) pair reproduces bit-identically regardless of how
work is scheduled across workers.  Complex normals come from the exact
polar transform: exponential modulus-squared, uniform phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SectionBasis


@dataclass(frozen=True)
class GaussianStream:
    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = [self.master_seed & 0xFFFFFFFFFFFFFFFF,
               self.stream_index & 0xFFFFFFFFFFFFFFFF]
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream_index: int) -> "GaussianStream":
        return GaussianStream(self.master_seed, stream_index)


def sample_std_complex_gaussians(stream: GaussianStream, count: int) -> np.ndarray:
    """Standard complex Gaussians: ``E W = 0``, ``E |W|^2 = 1`` (each real
    component has variance 1/2)."""
    g = stream.generator()
    u1 = g.random(count)
    u2 = g.random(count)
    modulus = np.sqrt(-np.log1p(-u1))  # |W|^2 ~ Exp(1), exact transform
    return modulus * np.exp(2j * np.pi * u2)


@dataclass
class RandomSection:
    """Coefficient vector over an orthonormal basis; the section itself is
    ``sum_j coeffs[j] f_j`` times the unit frame."""

    coeffs: np.ndarray
    basis: SectionBasis

    def __post_init__(self):
        if self.coeffs.shape != (self.basis.degree + 1,):
            raise ValueError(
                f"coefficient count {self.coeffs.shape} does not match "
                f"basis dimension {self.basis.degree + 1}"
            )


def draw_section(basis: SectionBasis, stream: GaussianStream) -> RandomSection:
    coeffs = sample_std_complex_gaussians(stream, basis.degree + 1)
    return RandomSection(coeffs=coeffs, basis=basis)


def evaluate_section_weighted(sec: RandomSection, x) -> np.ndarray | float:
    """Pointwise weighted magnitude ``|s(x)| e^{-n phi(x)/2}``."""
    sec.basis.model.check_in_disk(x)
    out = np.abs(sec.basis.section_values_weighted(sec.coeffs, x))
    if np.ndim(x) == 0:
        return float(out)
    return out


def normalized_process_abs(sec: RandomSection, x) -> np.ndarray | float:
    """``|alpha(x)|``: the weighted magnitude divided by the square root of
    the diagonal kernel, so its second moment is one at every point."""
    vals = evaluate_section_weighted(sec, x)
    frame = sec.basis.weighted_frame(np.atleast_1d(np.asarray(x, dtype=complex)))
    diag = np.sum(np.abs(frame) ** 2, axis=1).reshape(np.shape(x))
    out = vals / np.sqrt(diag)
    if np.ndim(x) == 0:
        return float(out)
    return out
