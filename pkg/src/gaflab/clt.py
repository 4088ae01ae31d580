"""Smooth linear statistics of zero divisors and the normality experiment.

The statistic of one sampled section is the pairing of its zero set with a
fixed test function.  Two routes compute it: direct summation over roots,
and the Poincare-Lelong route (an integral of the log of the weighted
section against the Laplacian density of the test function plus a
curvature term).  The experiment draws many sections per tensor power,
standardizes the statistics, tests them against the standard normal, and
evaluates the two covariance-integral conditions (Sodin-Tsirelson) that
drive asymptotic normality.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import stats as sp_stats
from scipy.special import ndtr

from . import geometry
from .basis import SectionBasis, build_basis, truncation_degree
from .errors import ConfigError, ExperimentError, InsufficientDataError
from .geometry import TestForm, WeightModel, chern_density, testform_density
from .kernel import KernelEvaluator
from .quadrature import adaptive_square_quadrature, polar_rule, radial_gauss_legendre
from .sampling import GaussianStream, draw_section
from .zeros import Divisor, divisor_pairing, find_zeros, polynomial_part

KS_CRITICAL_1PCT_SCALE = 1.628  # asymptotic one-sample KS quantile at 1%


@dataclass(frozen=True)
class NormalityMetrics:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    ks_statistic: float


def ks_statistic(standardized: np.ndarray, cdf=ndtr) -> float:
    """One-sample Kolmogorov-Smirnov statistic against a continuous CDF."""
    x = np.sort(np.asarray(standardized, dtype=float))
    n = x.size
    c = cdf(x)
    d_plus = np.max(np.arange(1, n + 1) / n - c)
    d_minus = np.max(c - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))


def normality_metrics(samples: Iterable[float]) -> NormalityMetrics:
    """Unbiased moment estimators plus the KS distance of the sample,
    standardized by its own mean and variance, from the standard normal."""
    x = np.asarray(list(samples), dtype=float)
    if x.size < 100:
        raise InsufficientDataError(
            f"need at least 100 samples, got {x.size}"
        )
    mean = float(np.mean(x))
    variance = float(np.var(x, ddof=1))
    if variance == 0.0:
        raise ExperimentError("sample variance is zero; statistic degenerate")
    skew = float(sp_stats.skew(x, bias=False))
    kurt = float(sp_stats.kurtosis(x, bias=False))
    standardized = (x - mean) / np.sqrt(variance)
    return NormalityMetrics(
        mean=mean,
        variance=variance,
        skewness=skew,
        excess_kurtosis=kurt,
        ks_statistic=ks_statistic(standardized),
    )


def linear_statistic_zeros(sec, form: TestForm, polish_tol: float = 1e-12) -> float:
    """Divisor pairing via explicit roots."""
    return divisor_pairing(find_zeros(polynomial_part(sec), polish_tol), form)


def chern_pairing(model: WeightModel, form: TestForm, n: int,
                  radial_count: int = 256) -> float:
    """``n * int chern_density * form`` over the support disk."""
    rule = polar_rule(form.support_radius, radial_count, 128)
    vals = chern_density(model, rule.nodes) * form(rule.nodes)
    return float(n * np.sum(rule.weights * vals))


def log_diag_pairing(ev: KernelEvaluator, form: TestForm,
                     radial_count: int = 256) -> float:
    """``int log K_n(x,x) psi(x)`` over the support disk (smooth integrand)."""
    rule = polar_rule(form.support_radius, radial_count, 128)
    diag = np.asarray(ev.diagonal(rule.nodes), dtype=float)
    psi = testform_density(form, rule.nodes)
    return float(np.sum(rule.weights * np.log(diag) * psi))


def linear_statistic_pl(
    sec,
    form: TestForm,
    chern_term: Optional[float] = None,
    tol: float = 5e-4,
    base_cells: int = 24,
    gl_points: int = 6,
) -> float:
    """Divisor pairing via the Poincare-Lelong identity:
    ``int log|s|^2_w psi + n int chern_density * form``.

    The log factor has integrable singularities at the zeros; the adaptive
    rule refines cells around them without knowing where they are.
    """
    basis = sec.basis
    if chern_term is None:
        chern_term = chern_pairing(basis.model, form, basis.tensor_power)

    def integrand(points):
        psi = testform_density(form, points)
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = 2.0 * np.log(
                np.abs(basis.section_values_weighted(sec.coeffs, points))
            )
        return np.where(psi != 0.0, psi * logv, 0.0)

    r = form.support_radius

    def skip(centers, half):
        return np.abs(centers) > r + half * 1.4143

    log_part = adaptive_square_quadrature(
        integrand,
        half_width=r,
        base_cells=base_cells,
        gl_points=gl_points,
        tol=tol,
        max_levels=4,
        skip_cell=skip,
    )
    return float(log_part + chern_term)


def expectation_kernel_route(ev: KernelEvaluator, form: TestForm) -> float:
    """Expected statistic from the kernel: ``int log K_n(x,x) psi`` plus the
    curvature term.

    Valid because the omitted Gaussian constant multiplies ``int psi = 0``;
    test functions whose density does not integrate to zero are rejected.
    """
    rule = polar_rule(form.support_radius, 256, 128)
    psi = testform_density(form, rule.nodes)
    mass = abs(float(np.sum(rule.weights * psi)))
    scale = float(np.sum(rule.weights * np.abs(psi)))
    if mass > 1e-6 * max(scale, 1e-300):
        raise ExperimentError(
            "test form density does not integrate to zero; the kernel route "
            "does not apply"
        )
    return log_diag_pairing(ev, form) + chern_pairing(
        ev.model, form, ev.tensor_power
    )


def _condition_rule(ev: KernelEvaluator, region_radius: float) -> tuple:
    n = ev.tensor_power
    kappa_max = float(
        np.max(np.real(ev.model.laplacian_weight(
            region_radius * np.exp(1j * np.linspace(0, 2 * np.pi, 64))
        ))) / 2.0
    )
    nr = int(max(128, 4 * np.ceil(region_radius * np.sqrt(n * kappa_max)) + 16))
    na = max(256, 2 * nr)
    return polar_rule(region_radius, nr, na)


def _sup_grid(region_radius: float) -> np.ndarray:
    pts = [0.0 + 0.0j]
    for rr in (0.25, 0.5, 0.75, 0.95):
        for t in range(8):
            pts.append(rr * region_radius * np.exp(2j * np.pi * (t + 0.23) / 8))
    return np.asarray(pts)


def st_condition_ii(
    ev: KernelEvaluator,
    region_radius: float,
    split_radius: float = 0.0,
    chunk: int = 4096,
) -> dict:
    """Sup over base points of the integral of the normalized kernel over
    the region, with the near/far split at ``split_radius``."""
    rule = _condition_rule(ev, region_radius)
    xs = _sup_grid(region_radius)
    fx = ev.frame(xs)
    dx = np.sum(np.abs(fx) ** 2, axis=1)
    totals = np.zeros(xs.size)
    nears = np.zeros(xs.size)
    for start in range(0, rule.nodes.size, chunk):
        ys = rule.nodes[start : start + chunk]
        w = rule.weights[start : start + chunk]
        fy = ev.frame(ys)
        dy = np.sum(np.abs(fy) ** 2, axis=1)
        gamma = np.abs(fx @ fy.conj().T) / np.sqrt(dx[:, None] * dy[None, :])
        totals += gamma @ w
        if split_radius > 0.0:
            near = np.abs(xs[:, None] - ys[None, :]) <= split_radius
            nears += (gamma * near) @ w
    ix = int(np.argmax(totals))
    return {
        "value": float(totals[ix]),
        "near_part": float(nears[ix]) if split_radius > 0 else float("nan"),
        "far_part": float(totals[ix] - nears[ix]) if split_radius > 0 else float("nan"),
        "argmax": complex(xs[ix]),
        "split_radius": float(split_radius),
    }


def st_condition_i_ratio(ev: KernelEvaluator, form: TestForm) -> float:
    """Ratio of the squared-kernel double integral against the test density
    to the sup single integral, both over the support region."""
    region_radius = form.support_radius
    denom = st_condition_ii(ev, region_radius)["value"]
    if ev.model.radial and form.radial:
        # angular orthogonality reduces the double integral to the diagonal
        r, wr = radial_gauss_legendre(region_radius, 512)
        f = ev.frame(r.astype(complex))
        diag = np.sum(np.abs(f) ** 2, axis=1)
        psi = testform_density(form, r)
        b_diag = 2.0 * np.pi * (
            (np.abs(f) ** 2 / diag[:, None]).T @ (wr * r * psi)
        )
        numer = float(np.sum(b_diag**2))
    else:
        rule = _condition_rule(ev, region_radius)
        psi = testform_density(form, rule.nodes)
        chunk = 4096
        dim = ev.frame(np.zeros(1, dtype=complex)).shape[1]
        bmat = np.zeros((dim, dim), dtype=complex)
        for start in range(0, rule.nodes.size, chunk):
            ys = rule.nodes[start : start + chunk]
            w = rule.weights[start : start + chunk] * psi[start : start + chunk]
            fy = ev.frame(ys)
            dy = np.sqrt(np.sum(np.abs(fy) ** 2, axis=1))
            fhat = fy / dy[:, None]
            bmat += fhat.conj().T @ (w[:, None] * fhat)
        numer = float(np.sum(np.abs(bmat) ** 2))
    return numer / denom


# ---------------------------------------------------------------------------
# Experiment harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    model: WeightModel
    form: TestForm
    n_ladder: tuple[int, ...]
    samples_per_n: int
    master_seed: int
    audit_samples: int = 100
    tail_tol: float = 1e-9
    degree_cap: int = 4096
    polish_tol: float = 1e-12
    b0: float = 3.0
    k: int = 1
    pl_tol: float = 5e-4
    pl_base_cells: int = 24
    pl_gl_points: int = 6
    conditions_ratio_floor: float = 0.05
    spec: Optional[dict] = None  # primitive echo (needed for worker pools)

    def __post_init__(self):
        if self.form.support_radius > self.model.truncation_radius + 1e-12:
            raise ConfigError(
                "test form support must sit inside the truncation disk"
            )
        if self.samples_per_n < 100:
            raise ConfigError("need at least 100 samples per tensor power")
        if not self.n_ladder:
            raise ConfigError("empty tensor power ladder")


@dataclass
class CltReport:
    n: int
    empirical_mean: float
    empirical_variance: float
    skewness: float
    excess_kurtosis: float
    ks_statistic: float
    ks_critical_1pct: float
    condition_ii_value: float
    condition_i_ratio: float
    pl_vs_zeros_max_rel_diff: float
    sample_count: int
    seed: int
    metadata: dict = field(default_factory=dict)


@dataclass
class SampleTable:
    n: int
    stats_zero: np.ndarray
    stats_pl: np.ndarray  # NaN outside the audited prefix
    zero_counts: np.ndarray
    divisors: Optional[list[Divisor]] = None


@dataclass
class ExperimentResult:
    reports: list[CltReport]
    tables: list[SampleTable]


def _rebuild_from_primitives(spec: dict):
    from .config import build_model_from_primitives, build_form_from_primitives

    return (
        build_model_from_primitives(spec),
        build_form_from_primitives(spec),
    )


def _sample_batch(
    basis: SectionBasis,
    form: TestForm,
    indices: np.ndarray,
    master_seed: int,
    polish_tol: float,
    audit_count: int,
    chern_term: float,
    pl_tol: float,
    pl_base_cells: int,
    pl_gl_points: int,
    keep_divisors: bool,
):
    stats_zero = np.empty(indices.size)
    stats_pl = np.full(indices.size, np.nan)
    counts = np.empty(indices.size, dtype=int)
    divisors = [] if keep_divisors else None
    support = form.support_radius
    for pos, i in enumerate(indices):
        sec = draw_section(basis, GaussianStream(master_seed, int(i)))
        div = find_zeros(polynomial_part(sec), polish_tol)
        stats_zero[pos] = divisor_pairing(div, form)
        locs = div.locations()
        mults = div.multiplicities()
        counts[pos] = int(np.sum(mults[np.abs(locs) <= support]))
        if keep_divisors:
            divisors.append(div)
        if i < audit_count:
            stats_pl[pos] = linear_statistic_pl(
                sec,
                form,
                chern_term=chern_term,
                tol=pl_tol,
                base_cells=pl_base_cells,
                gl_points=pl_gl_points,
            )
    return stats_zero, stats_pl, counts, divisors


def _pool_worker(payload: dict, indices: np.ndarray):
    model, form = _rebuild_from_primitives(payload["spec"])
    basis = build_basis(model, payload["n"], payload["degree"])
    out = _sample_batch(
        basis,
        form,
        indices,
        payload["master_seed"],
        payload["polish_tol"],
        payload["audit_count"],
        payload["chern_term"],
        payload["pl_tol"],
        payload["pl_base_cells"],
        payload["pl_gl_points"],
        keep_divisors=False,
    )
    return indices, out


def sorted_sample_checksum(values: np.ndarray) -> str:
    """Worker-count-independent digest of a per-sample statistic vector."""
    return hashlib.sha256(np.sort(np.asarray(values)).tobytes()).hexdigest()[:16]


def run_clt_experiment(
    cfg: ExperimentConfig,
    workers: int = 1,
    keep_divisors: bool = False,
) -> ExperimentResult:
    """Full normality experiment over the tensor-power ladder.

    Per power: draw sections from per-sample substreams, extract divisors,
    compute the zero-route statistic (all samples) and the Poincare-Lelong
    audit (first ``audit_samples`` indices), standardize, test normality,
    and attach the covariance-condition values.  Deterministic for a fixed
    master seed and independent of the worker count.
    """
    if workers > 1 and cfg.spec is None:
        raise ConfigError(
            "parallel runs need an experiment built from primitive "
            "configuration (to rebuild state inside workers)"
        )
    reports: list[CltReport] = []
    tables: list[SampleTable] = []
    n_samples = cfg.samples_per_n
    audit_count = min(cfg.audit_samples, n_samples)
    for n in cfg.n_ladder:
        degree = truncation_degree(
            cfg.model, n, cfg.model.truncation_radius, cfg.tail_tol, cfg.degree_cap
        )
        basis = build_basis(cfg.model, n, degree)
        ev = KernelEvaluator.from_basis(basis)
        chern_term = chern_pairing(cfg.model, cfg.form, n)
        log_diag_term = log_diag_pairing(ev, cfg.form)

        indices = np.arange(n_samples)
        if workers > 1:
            payload = {
                "spec": cfg.spec,
                "n": n,
                "degree": degree,
                "master_seed": cfg.master_seed,
                "polish_tol": cfg.polish_tol,
                "audit_count": audit_count,
                "chern_term": chern_term,
                "pl_tol": cfg.pl_tol,
                "pl_base_cells": cfg.pl_base_cells,
                "pl_gl_points": cfg.pl_gl_points,
            }
            stats_zero = np.empty(n_samples)
            stats_pl = np.full(n_samples, np.nan)
            counts = np.empty(n_samples, dtype=int)
            divisors = None
            chunks = np.array_split(indices, workers * 4)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for got, out in pool.map(
                    _pool_worker,
                    [payload] * len(chunks),
                    chunks,
                ):
                    stats_zero[got] = out[0]
                    stats_pl[got] = out[1]
                    counts[got] = out[2]
        else:
            stats_zero, stats_pl, counts, divisors = _sample_batch(
                basis,
                cfg.form,
                indices,
                cfg.master_seed,
                cfg.polish_tol,
                audit_count,
                chern_term,
                cfg.pl_tol,
                cfg.pl_base_cells,
                cfg.pl_gl_points,
                keep_divisors,
            )

        metrics = normality_metrics(stats_zero)
        if metrics.variance < 1e-12 * metrics.mean**2:
            raise ExperimentError(
                "statistic variance is degenerate relative to its mean; "
                "the test form is likely trivial"
            )

        audited = ~np.isnan(stats_pl)
        rel_diff = np.abs(stats_pl[audited] - stats_zero[audited]) / (
            1.0 + np.abs(stats_zero[audited])
        )
        pl_max_rel = float(np.max(rel_diff)) if rel_diff.size else float("nan")

        # the log-field route equals the divisor route plus the deterministic
        # shift -(chern term) - int log K psi, so the spread of the per-sample
        # route difference measures how constant that shift really is
        zeta_shift = -chern_term - log_diag_term
        zeta_constancy = float(
            np.std(stats_pl[audited] - stats_zero[audited])
            / np.sqrt(metrics.variance)
        )

        band = cfg.b0 * np.sqrt(np.log(n) / n)
        cond_ii = st_condition_ii(ev, cfg.form.support_radius, split_radius=band)
        cond_i = st_condition_i_ratio(ev, cfg.form)
        expectation = expectation_kernel_route(ev, cfg.form)

        report = CltReport(
            n=int(n),
            empirical_mean=metrics.mean,
            empirical_variance=metrics.variance,
            skewness=metrics.skewness,
            excess_kurtosis=metrics.excess_kurtosis,
            ks_statistic=metrics.ks_statistic,
            ks_critical_1pct=KS_CRITICAL_1PCT_SCALE / np.sqrt(n_samples),
            condition_ii_value=cond_ii["value"],
            condition_i_ratio=cond_i,
            pl_vs_zeros_max_rel_diff=pl_max_rel,
            sample_count=int(n_samples),
            seed=int(cfg.master_seed),
            metadata={
                "degree": int(degree),
                "gram_residual": basis.gram_residual,
                "tail_tol": cfg.tail_tol,
                "condition_ii_near_part": cond_ii["near_part"],
                "condition_ii_far_part": cond_ii["far_part"],
                "condition_region_radius": float(cfg.form.support_radius),
                "condition_region_note": (
                    "conditions evaluated over the support region"
                ),
                "expectation_kernel_route": expectation,
                "mean_zero_count": float(np.mean(counts)),
                "zero_count_std_error": float(
                    np.std(counts, ddof=1) / np.sqrt(n_samples)
                ),
                "zeta_shift": float(zeta_shift),
                "zeta_constancy_ratio": zeta_constancy,
                "audit_count": int(audit_count),
                "checksum_sorted_stats": sorted_sample_checksum(stats_zero),
            },
        )
        reports.append(report)
        tables.append(
            SampleTable(
                n=int(n),
                stats_zero=stats_zero,
                stats_pl=stats_pl,
                zero_counts=counts,
                divisors=divisors,
            )
        )
    return ExperimentResult(reports=reports, tables=tables)
