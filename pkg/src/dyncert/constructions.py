"""Explicit constructions: commuting families for linear maps, affine
symmetries, cotangent lifts and lifted first integrals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IntegrabilityStructure, ScalarField, SmoothMap, VectorField
from .jets import float_of, solve_linear, transpose

__all__ = [
    "JordanBlockSpec",
    "LiftedMap",
    "linear_map",
    "linear_commutative_family",
    "affine1d_symmetry",
    "cotangent_lift",
    "lift_integral",
    "lift_structure",
]


@dataclass(frozen=True)
class JordanBlockSpec:
    """Real block-form matrix: eigenvalue on the diagonal, ones on the
    subdiagonal of each block.  Callers supply the block form directly;
    no numerical Jordan decomposition is attempted."""

    blocks: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("at least one block is required")
        for lam, size in self.blocks:
            if size < 1:
                raise ValueError("block sizes must be >= 1")
            if lam == 0.0:
                raise ValueError("zero eigenvalue: not a diffeomorphism")

    @property
    def dim(self) -> int:
        return sum(size for _, size in self.blocks)

    def matrix(self) -> np.ndarray:
        n = self.dim
        a = np.zeros((n, n))
        offset = 0
        for lam, size in self.blocks:
            for i in range(size):
                a[offset + i, offset + i] = lam
                if i > 0:
                    a[offset + i, offset + i - 1] = 1.0
            offset += size
        return a


def _linear_field(m: np.ndarray, name: str) -> VectorField:
    mat = np.asarray(m, dtype=float)
    rows = [list(r) for r in mat]

    def ev(x):
        return [sum(rij * xj for rij, xj in zip(row, x) if rij != 0.0)
                for row in rows]

    return VectorField(dim=mat.shape[0], func=ev,
                       analytic_jacobian=lambda x: [list(r) for r in mat],
                       name=name)


def linear_map(spec: JordanBlockSpec, name: str = "linear") -> SmoothMap:
    a = spec.matrix()
    ainv = np.linalg.inv(a)
    rows = [list(r) for r in a]
    inv_rows = [list(r) for r in ainv]

    def fwd(x):
        return [sum(rij * xj for rij, xj in zip(row, x) if rij != 0.0)
                for row in rows]

    def bwd(x):
        return [sum(rij * xj for rij, xj in zip(row, x)) for row in inv_rows]

    return SmoothMap(dim=spec.dim, forward=fwd, inverse=bwd,
                     analytic_jacobian=lambda x: [list(r) for r in a],
                     name=name)


def linear_commutative_family(spec: JordanBlockSpec) -> IntegrabilityStructure:
    """n commuting linear fields for f(x) = Ax in block form.

    Per block with eigenvalue L and size s: the block's own linear field
    A_b x plus the nilpotent shift fields N^j x for j = 1..s-1 (N is the
    subdiagonal shift inside the block).  A size-1 block contributes the
    coordinate scaling field x_i e_i.  All powers of N commute with
    A_b = L I + N, blocks have disjoint support, and the family has rank n
    wherever the leading coordinate of every block is nonzero.
    """
    n = spec.dim
    fields = []
    offset = 0
    for bi, (lam, size) in enumerate(spec.blocks):
        if size == 1:
            m = np.zeros((n, n))
            m[offset, offset] = 1.0
            fields.append(_linear_field(m, f"scale[{bi + 1}]"))
        else:
            ab = np.zeros((n, n))
            for i in range(size):
                ab[offset + i, offset + i] = lam
                if i > 0:
                    ab[offset + i, offset + i - 1] = 1.0
            fields.append(_linear_field(ab, f"block_linear[{bi + 1}]"))
            nil = np.zeros((n, n))
            for i in range(1, size):
                nil[offset + i, offset + i - 1] = 1.0
            power = np.eye(n)
            for j in range(1, size):
                power = power @ nil
                fields.append(_linear_field(power, f"shift[{bi + 1},{j}]"))
        offset += size
    return IntegrabilityStructure(dim=n, fields=tuple(fields), integrals=())


def affine1d_symmetry(a: float, b: float) -> VectorField:
    """Symmetry field of f(x) = ax + b: constant 1 when a = 1, else
    x + b/(a-1) (unit exponential rate)."""
    if a == 0.0:
        raise ValueError("a = 0 is not a diffeomorphism")
    if a == 1.0:
        return VectorField(dim=1, func=lambda x: [1.0],
                           analytic_jacobian=lambda x: [[0.0]],
                           name="translation")
    beta = b / (a - 1.0)

    def ev(x):
        return [x[0] + beta]

    return VectorField(dim=1, func=ev,
                       analytic_jacobian=lambda x: [[1.0]],
                       name="affine_symmetry")


@dataclass(frozen=True)
class LiftedMap:
    base: SmoothMap
    lifted: SmoothMap


def cotangent_lift(f: SmoothMap) -> LiftedMap:
    """Symplectic extension (x, p) -> (f(x), Df(x)^{-T} p).

    The momentum update solves Df(x)^T q = p with jet-generic elimination,
    so the lifted map stays differentiable (Jacobians of the lift pick up
    the exact second derivatives of the base map).
    """
    n = f.dim

    def fwd(z):
        x, p = list(z[:n]), list(z[n:])
        y = f.apply(x, check_guard=False)
        jac = f.jacobian_at(x)
        q = solve_linear(transpose(jac), p)
        return y + q

    bwd = None
    if f.inverse is not None:
        def bwd(z):
            x, p = list(z[:n]), list(z[n:])
            y = f.apply_inverse(x, check_guard=False)
            jac = f.jacobian_at(y)
            jt = transpose(jac)
            q = [sum(jt[i][k] * p[k] for k in range(n)) for i in range(n)]
            return y + q

    guard = None
    if f.domain_guard is not None:
        guard = lambda z: f.domain_guard(list(z[:n]))

    topo = None
    if f.phase_topology is not None:
        topo = tuple(f.phase_topology) + (None,) * n

    lifted = SmoothMap(dim=2 * n, forward=fwd, inverse=bwd,
                       domain_guard=guard, phase_topology=topo,
                       name=(f.name or "map") + "_lift")
    return LiftedMap(base=f, lifted=lifted)


def lift_integral(v: VectorField, name: str = "") -> ScalarField:
    """G(x, p) = p . v(x) on the doubled phase space."""
    n = v.dim

    def ev(z):
        x, p = list(z[:n]), list(z[n:])
        vx = v(x)
        acc = p[0] * vx[0]
        for i in range(1, n):
            acc = acc + p[i] * vx[i]
        return acc

    return ScalarField(dim=2 * n, func=ev,
                       name=name or f"lifted[{v.name or '?'}]")


def lift_structure(f: SmoothMap, s: IntegrabilityStructure):
    """Lifted map plus the full integral set on 2n coordinates.

    Base integrals F_k(x) extend as p-independent functions; every symmetry
    field contributes a momentum integral p . v_j(x).
    """
    if s.dim != f.dim:
        raise ValueError("structure dimension does not match the map")
    lifted = cotangent_lift(f)
    n = f.dim
    integrals = []
    for k, base_int in enumerate(s.integrals):
        def ev(z, _g=base_int):
            return _g(list(z[:n]))

        def grad(z, _g=base_int):
            return list(_g.gradient_at(list(z[:n]))) + [0.0] * n

        integrals.append(ScalarField(
            dim=2 * n, func=ev, analytic_gradient=grad,
            name=base_int.name or f"F{k + 1}"))
    for j, fld in enumerate(s.fields):
        integrals.append(lift_integral(fld, name=f"G{j + 1}"))
    return lifted, tuple(integrals)
