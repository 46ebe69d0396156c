"""Residual operations and their aggregation into certification verdicts.

Every check is a residual evaluated at sampled points and normalized by a
per-point scale ``1 + max(|x|, |f(x)|, ...)``; tolerances are relative to
that scale.  A PASS verdict means "no counterexample found at these
tolerances", never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (DomainError, IntegrabilityStructure, SamplingRegion,
                   ScalarField, SmoothMap, VectorField, sample)
from .numerics import (IntegrationError, IntegratorConfig, integrate_flow,
                       numerical_rank)

__all__ = [
    "CAVEAT",
    "Tolerances",
    "ResidualStats",
    "CertificationReport",
    "lie_bracket_residual",
    "first_integral_residual",
    "map_invariance_residual",
    "infinitesimal_commutation_residual",
    "flow_commutation_residual",
    "independence_rank_stats",
    "poisson_bracket",
    "symplecticity_residual",
    "certify_structure",
    "certify_involution",
]

CAVEAT = "numerical evidence, not proof"


@dataclass(frozen=True)
class Tolerances:
    algebraic_tol: float = 1e-9
    flow_tol: float = 1e-7
    rank_threshold: float = 1e-8
    ae_fraction: float = 0.99

    def __post_init__(self):
        if min(self.algebraic_tol, self.flow_tol, self.rank_threshold) <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.5 < self.ae_fraction <= 1.0:
            raise ValueError("ae_fraction must lie in (0.5, 1]")


@dataclass(frozen=True)
class ResidualStats:
    condition_name: str
    count: int
    max_abs: float
    mean_abs: float
    p99_abs: float
    worst_point: tuple[float, ...] | None
    scale: float
    passed: bool
    kind: str = "residual"  # "residual" | "rank" | "empty"
    tolerance: float | None = None
    full_rank_fraction: float | None = None
    skipped: int = 0

    def to_dict(self) -> dict:
        d = {
            "name": self.condition_name,
            "kind": self.kind,
            "count": self.count,
            "max_abs": self.max_abs,
            "mean_abs": self.mean_abs,
            "p99_abs": self.p99_abs,
            "worst_point": list(self.worst_point) if self.worst_point else None,
            "scale": self.scale,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.kind == "rank":
            d["full_rank_fraction"] = self.full_rank_fraction
        if self.skipped:
            d["skipped"] = self.skipped
        return d


@dataclass(frozen=True)
class CertificationReport:
    map_name: str
    parameters: dict
    dim: int
    m: int
    n_integrals: int
    complete: bool
    conditions: tuple[ResidualStats, ...]
    verdict: str  # PASS | FAIL | UNVERIFIED
    seed: int
    tolerances: Tolerances
    guard_failures: int = 0
    caveat: str = CAVEAT

    @property
    def failing_conditions(self) -> list[ResidualStats]:
        return [c for c in self.conditions if not c.passed]

    def to_dict(self) -> dict:
        return {
            "map": self.map_name,
            "parameters": dict(sorted(self.parameters.items())),
            "dim": self.dim,
            "structure": {"fields": self.m, "integrals": self.n_integrals,
                          "complete": self.complete},
            "seed": self.seed,
            "tolerances": {
                "algebraic_tol": self.tolerances.algebraic_tol,
                "flow_tol": self.tolerances.flow_tol,
                "rank_threshold": self.tolerances.rank_threshold,
                "ae_fraction": self.tolerances.ae_fraction,
            },
            "guard_failures": self.guard_failures,
            "conditions": [c.to_dict() for c in self.conditions],
            "verdict": self.verdict,
            "caveat": self.caveat,
        }


# -- pointwise residuals -------------------------------------------------


def lie_bracket_residual(xj: VectorField, xk: VectorField, x) -> np.ndarray:
    """[Xj, Xk](x) = DXk(x) Xj(x) - DXj(x) Xk(x)."""
    if xj.dim != xk.dim:
        raise ValueError("field dimension mismatch")
    vj = np.asarray(xj(x), dtype=float)
    vk = np.asarray(xk(x), dtype=float)
    dj = np.asarray(xj.jacobian_at(x), dtype=float)
    dk = np.asarray(xk.jacobian_at(x), dtype=float)
    return dk @ vj - dj @ vk


def first_integral_residual(f_int: ScalarField, x_field: VectorField, x) -> float:
    """Directional derivative DF(x) . X(x)."""
    if f_int.dim != x_field.dim:
        raise ValueError("dimension mismatch")
    g = np.asarray(f_int.gradient_at(x), dtype=float)
    v = np.asarray(x_field(x), dtype=float)
    return float(g @ v)


def map_invariance_residual(f_int: ScalarField, f: SmoothMap, x) -> float:
    """F(f(x)) - F(x)."""
    return float(f_int(f.apply(x)) - f_int(x))


def infinitesimal_commutation_residual(f: SmoothMap, x_field: VectorField,
                                       x) -> np.ndarray:
    """Df(x) X(x) - X(f(x)); zero iff the flow of X commutes with f."""
    fx = f.apply(x)
    df = np.asarray(f.jacobian_at(x), dtype=float)
    v = np.asarray(x_field(x), dtype=float)
    return df @ v - np.asarray(x_field(fx), dtype=float)


def flow_commutation_residual(f: SmoothMap, x_field: VectorField, x, t: float,
                              cfg: IntegratorConfig | None = None,
                              safe_region=None) -> np.ndarray:
    """f(phi^t(x)) - phi^t(f(x)), wrapped on circle coordinates."""
    cfg = cfg or IntegratorConfig()
    try:
        phi_x = integrate_flow(x_field, x, t, cfg, safe_region)
    except IntegrationError as err:
        raise IntegrationError(f"flow branch phi^t(x) failed: {err}") from err
    left = f.apply(list(phi_x))
    fx = f.apply(x)
    try:
        right = integrate_flow(x_field, fx, t, cfg, safe_region)
    except IntegrationError as err:
        raise IntegrationError(f"flow branch phi^t(f(x)) failed: {err}") from err
    return f.displacement(left, list(right))


def independence_rank_stats(columns, points, threshold: float = 1e-8):
    """Fraction of points where the given columns have full rank.

    ``columns`` is a list of vector fields (values as columns) or scalar
    fields (gradients as columns).  Returns (fraction, deficient_points).
    """
    if not columns:
        raise ValueError("at least one column is required")
    deficient = []
    full = 0
    want = len(columns)
    for x in points:
        cols = []
        for c in columns:
            if isinstance(c, ScalarField):
                cols.append(c.gradient_at(x))
            else:
                cols.append(c(x))
        m = np.asarray(cols, dtype=float).T
        if numerical_rank(m, threshold).rank == want:
            full += 1
        else:
            deficient.append(tuple(x))
    frac = full / len(points) if points else 0.0
    return frac, deficient


def poisson_bracket(f_int: ScalarField, g_int: ScalarField, z) -> float:
    """Canonical {F, G} at z = (q_1..q_n, p_1..p_n)."""
    if f_int.dim % 2 != 0 or f_int.dim != g_int.dim:
        raise ValueError("Poisson bracket needs matching even dimensions")
    n = f_int.dim // 2
    gf = np.asarray(f_int.gradient_at(z), dtype=float)
    gg = np.asarray(g_int.gradient_at(z), dtype=float)
    return float(gf[:n] @ gg[n:] - gf[n:] @ gg[:n])


def symplecticity_residual(f: SmoothMap, z) -> float:
    """max |M^T J M - J| with M = Df(z) and J the canonical form matrix."""
    if f.dim % 2 != 0:
        raise ValueError("symplecticity needs an even-dimensional map")
    n = f.dim // 2
    m = np.asarray(f.jacobian_at(z), dtype=float)
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return float(np.max(np.abs(m.T @ j @ m - j)))


# -- aggregation ----------------------------------------------------------


def _norm(v) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(v, dtype=float))))


def _stats(name: str, values: list[float], points: list, tol: float,
           skipped: int = 0, skip_fail: bool = False) -> ResidualStats:
    if not values:
        return ResidualStats(name, 0, 0.0, 0.0, 0.0, None, 1.0,
                             passed=not skip_fail, kind="empty",
                             tolerance=tol, skipped=skipped)
    arr = np.asarray(values)
    worst = int(np.argmax(arr))
    mean = float(np.mean(arr))
    p99 = float(np.percentile(arr, 99))
    p99 = min(max(p99, mean), float(arr.max()))
    return ResidualStats(
        condition_name=name,
        count=len(values),
        max_abs=float(arr.max()),
        mean_abs=mean,
        p99_abs=p99,
        worst_point=tuple(points[worst]),
        scale=1.0,
        passed=(float(arr.max()) <= tol) and not skip_fail,
        tolerance=tol,
        skipped=skipped,
    )


def _rank_stats(name: str, columns, points, tol: Tolerances) -> ResidualStats:
    frac, deficient = independence_rank_stats(columns, points,
                                              tol.rank_threshold)
    worst = deficient[0] if deficient else None
    return ResidualStats(
        condition_name=name,
        count=len(points),
        max_abs=1.0 - frac,
        mean_abs=1.0 - frac,
        p99_abs=1.0 - frac,
        worst_point=worst,
        scale=1.0,
        passed=frac >= tol.ae_fraction,
        kind="rank",
        tolerance=1.0 - tol.ae_fraction,
        full_rank_fraction=frac,
    )


def certify_structure(f: SmoothMap, s: IntegrabilityStructure,
                      region: SamplingRegion,
                      tol: Tolerances | None = None,
                      flow_times=(-1.0, 0.5, 1.0),
                      samples: int | None = None,
                      seed: int | None = None,
                      flow_cfg: IntegratorConfig | None = None,
                      flow_point_cap: int = 50,
                      map_name: str = "",
                      parameters: dict | None = None) -> CertificationReport:
    """Run every applicable integrability condition over sampled points.

    Pointwise guard failures are excluded from statistics and counted.
    Flow commutation is spot-checked at ``flow_times`` on up to
    ``flow_point_cap`` of the sampled points; a condition whose trajectories
    exit the guard at more than half of the attempted points fails.
    """
    tol = tol or Tolerances()
    flow_cfg = flow_cfg or IntegratorConfig()
    seed = region.rng_seed if seed is None else seed
    raw_points = sample(region, samples, seed)

    points = []
    guard_failures = 0
    for x in raw_points:
        try:
            f.apply(x)
        except DomainError:
            guard_failures += 1
            continue
        points.append(x)

    conditions: list[ResidualStats] = []
    fields = s.fields
    integrals = s.integrals
    mname = map_name or f.name or "map"

    def scale_at(x, extra=0.0):
        fx = f.apply(x)
        return 1.0 + max(_norm(x), _norm(fx), extra)

    # condition (i): pairwise Lie brackets, reported per unordered pair
    for j in range(len(fields)):
        for k in range(j + 1, len(fields)):
            vals = []
            for x in points:
                sc = 1.0 + max(_norm(x), _norm(fields[j](x)),
                               _norm(fields[k](x)))
                vals.append(_norm(lie_bracket_residual(fields[j], fields[k],
                                                       x)) / sc)
            conditions.append(_stats(f"lie_bracket[X{j + 1},X{k + 1}]", vals,
                                     points, tol.algebraic_tol))
    if fields:
        conditions.append(_rank_stats("field_independence", list(fields),
                                      points, tol))

    # condition (ii): first integrals of the fields + gradient independence
    for k, f_int in enumerate(integrals):
        for j, x_fld in enumerate(fields):
            vals = []
            for x in points:
                sc = 1.0 + max(_norm(x), abs(float(f_int(x))),
                               _norm(x_fld(x)))
                vals.append(abs(first_integral_residual(f_int, x_fld, x)) / sc)
            conditions.append(_stats(f"first_integral[F{k + 1},X{j + 1}]",
                                     vals, points, tol.algebraic_tol))
    if integrals:
        conditions.append(_rank_stats("gradient_independence", list(integrals),
                                      points, tol))

    # condition (iii): infinitesimal commutation and map invariance
    commuting = []
    for j, x_fld in enumerate(fields):
        vals = []
        for x in points:
            sc = scale_at(x, _norm(x_fld(x)))
            vals.append(_norm(infinitesimal_commutation_residual(f, x_fld, x))
                        / sc)
        stats = _stats(f"infinitesimal_commutation[X{j + 1}]", vals,
                       points, tol.algebraic_tol)
        commuting.append(stats.passed)
        conditions.append(stats)
    for k, f_int in enumerate(integrals):
        vals = []
        for x in points:
            sc = scale_at(x, abs(float(f_int(x))))
            vals.append(abs(map_invariance_residual(f_int, f, x)) / sc)
        conditions.append(_stats(f"map_invariance[F{k + 1}]", vals, points,
                                 tol.algebraic_tol))

    # condition (iii), flow level: spot-check f . phi^t = phi^t . f.
    # Fields that already failed the pointwise check are not integrated:
    # the flow check is implied by the infinitesimal one and trajectories
    # of a non-commuting candidate routinely exhaust the step budget.
    flow_points = points[:flow_point_cap]
    for j, x_fld in enumerate(fields):
        if not commuting[j]:
            continue
        for t in flow_times:
            vals, used, skipped = [], [], 0
            for x in flow_points:
                try:
                    r = flow_commutation_residual(f, x_fld, x, t, flow_cfg)
                except (IntegrationError, DomainError):
                    skipped += 1
                    continue
                sc = scale_at(x, _norm(x_fld(x)))
                vals.append(_norm(r) / sc)
                used.append(x)
            skip_fail = bool(flow_points) and skipped > len(flow_points) / 2
            conditions.append(_stats(f"flow_commutation[X{j + 1},t={t:g}]",
                                     vals, used, tol.flow_tol,
                                     skipped=skipped, skip_fail=skip_fail))

    verdict = "PASS" if all(c.passed for c in conditions) else "FAIL"
    if not conditions:
        verdict = "UNVERIFIED"
    return CertificationReport(
        map_name=mname,
        parameters=parameters or {},
        dim=f.dim,
        m=s.m,
        n_integrals=len(integrals),
        complete=s.complete,
        conditions=tuple(conditions),
        verdict=verdict,
        seed=seed,
        tolerances=tol,
        guard_failures=guard_failures,
    )


def certify_involution(f: SmoothMap, integrals, region: SamplingRegion,
                       tol: Tolerances | None = None,
                       samples: int | None = None,
                       seed: int | None = None,
                       map_name: str = "",
                       parameters: dict | None = None) -> CertificationReport:
    """Liouville-style certification of a symplectic map with integrals.

    Checks symplecticity of the map, invariance of every integral, pairwise
    Poisson brackets (involution) and gradient independence over sampled
    points.  Intended for cotangent lifts and other even-dimensional maps.
    """
    tol = tol or Tolerances()
    seed = region.rng_seed if seed is None else seed
    raw_points = sample(region, samples, seed)
    points = []
    guard_failures = 0
    for x in raw_points:
        try:
            f.apply(x)
        except DomainError:
            guard_failures += 1
            continue
        points.append(x)
    integrals = tuple(integrals)
    conditions: list[ResidualStats] = []

    vals = []
    for z in points:
        sc = 1.0 + _norm(z)
        vals.append(symplecticity_residual(f, z) / sc)
    conditions.append(_stats("symplecticity", vals, points,
                             tol.algebraic_tol))

    for k, g in enumerate(integrals):
        vals = []
        for z in points:
            sc = 1.0 + max(_norm(z), _norm(f.apply(z)), abs(float(g(z))))
            vals.append(abs(map_invariance_residual(g, f, z)) / sc)
        conditions.append(_stats(f"map_invariance[G{k + 1}]", vals, points,
                                 tol.algebraic_tol))

    for j in range(len(integrals)):
        for k in range(j + 1, len(integrals)):
            vals = []
            for z in points:
                sc = 1.0 + max(_norm(z), abs(float(integrals[j](z))),
                               abs(float(integrals[k](z))))
                vals.append(abs(poisson_bracket(integrals[j], integrals[k], z))
                            / sc)
            conditions.append(_stats(f"poisson_bracket[G{j + 1},G{k + 1}]",
                                     vals, points, tol.algebraic_tol))

    if integrals:
        conditions.append(_rank_stats("gradient_independence", list(integrals),
                                      points, tol))

    verdict = "PASS" if all(c.passed for c in conditions) else "FAIL"
    return CertificationReport(
        map_name=map_name or f.name or "lifted map",
        parameters=parameters or {},
        dim=f.dim,
        m=0,
        n_integrals=len(integrals),
        complete=len(integrals) == f.dim // 2,
        conditions=tuple(conditions),
        verdict=verdict,
        seed=seed,
        tolerances=tol,
        guard_failures=guard_failures,
    )
