"""The four running Hamiltonians and their cone-constrained minimization.

For a solution point carrying the branch weights (P1, P2) and the (here
zero, but fully supported) martingale slots (Lambda, Gamma), the four
objectives are convex piecewise quadratics in the control argument:

    H11(v) = v'(R1 + P1 D'D)v + 2(P1(B1 + D'C) + D'Lam1)'v
    H12(v) = v'R2 v + sum_k (P1+Gam1k)[((1+Ek+Fk v)^+)^2 - 1]
             - 2 P1 sum_k (Ek + Fk v) + 2 P1 B2'v
             + sum_k (P2+Gam2k)((1+Ek+Fk v)^-)^2
    H21(v) = v'(R1 + P2 D'D)v - 2(P2(B1 + D'C) + D'Lam2)'v
    H22(v) = v'R2 v + sum_k (P2+Gam2k)[((-1-Ek+Fk v)^-)^2 - 1]
             - 2 P2 sum_k (Ek - Fk v) - 2 P2 B2'v
             + sum_k (P1+Gam1k)((-1-Ek+Fk v)^+)^2

The square of a hinge is C^1, so every objective is differentiable; the
minimizer is projected gradient descent with backtracking, started at the
origin (which is also the canonical tie-break among minimizers), with a
closed-form shortcut for the smooth quadratics H11/H21 on the full space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NegativeWeight, NoConvergence
from .model import ConeSpec, RegimeModel

#: Stop when the projected-gradient step moves less than this.
PGD_TOL = 1e-10
PGD_MAX_ITER = 10_000

#: Hinge weights (P + Gamma) this far below zero are clamped; lower raises.
WEIGHT_CLAMP = 1e-10

#: Iterates beyond this magnitude mean the objective is unbounded below.
DIVERGENCE_GUARD = 1e12


@dataclass(frozen=True)
class RiccatiPoint:
    """Branch weights and martingale slots at one (regime, time) point.

    ``gamma1``/``gamma2`` have shape (n_atoms, n2); ``lambda1``/``lambda2``
    shape (n1,).  All four default to zero, the only case arising from
    deterministic coefficients, but the formulas use them in full.
    """

    p1: float
    p2: float
    lambda1: np.ndarray | None = None
    lambda2: np.ndarray | None = None
    gamma1: np.ndarray | None = None
    gamma2: np.ndarray | None = None

    def lam(self, which: int, n1: int) -> np.ndarray:
        lam = self.lambda1 if which == 1 else self.lambda2
        return np.zeros(n1) if lam is None else np.asarray(lam, dtype=float)

    def gam(self, which: int, atom: int, n2: int) -> np.ndarray:
        gam = self.gamma1 if which == 1 else self.gamma2
        if gam is None:
            return np.zeros(n2)
        return np.asarray(gam, dtype=float)[atom]


@dataclass
class HamiltonianResult:
    value: float
    argmin: np.ndarray
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# Objective container
# ---------------------------------------------------------------------------


class PiecewiseQuadratic:
    """Convex objective  v'Q v + c'v + k + sum_j wp_j (h_j^+)^2 + wn_j (h_j^-)^2
    with h = off + mat v.  Q symmetric PSD, wp, wn >= 0."""

    __slots__ = ("quad", "lin", "const", "wp", "wn", "off", "mat", "_lip")

    def __init__(self, quad, lin, const, wp=None, wn=None, off=None, mat=None):
        self.quad = quad
        self.lin = lin
        self.const = const
        m = lin.shape[0]
        self.wp = wp if wp is not None else np.zeros(0)
        self.wn = wn if wn is not None else np.zeros(0)
        self.off = off if off is not None else np.zeros(0)
        self.mat = mat if mat is not None else np.zeros((0, m))
        self._lip = None

    def value(self, v: np.ndarray) -> float:
        out = float(v @ (self.quad @ v) + self.lin @ v) + self.const
        if self.off.shape[0]:
            h = self.off + self.mat @ v
            hp = np.maximum(h, 0.0)
            hn = np.maximum(-h, 0.0)
            out += float(self.wp @ (hp * hp) + self.wn @ (hn * hn))
        return out

    def grad(self, v: np.ndarray) -> np.ndarray:
        g = 2.0 * (self.quad @ v) + self.lin
        if self.off.shape[0]:
            h = self.off + self.mat @ v
            hp = np.maximum(h, 0.0)
            hn = np.maximum(-h, 0.0)
            g = g + self.mat.T @ (2.0 * self.wp * hp - 2.0 * self.wn * hn)
        return g

    def lipschitz_bound(self) -> float:
        if self._lip is None:
            lip = 2.0 * float(np.linalg.norm(self.quad))
            if self.off.shape[0]:
                rows = np.sum(self.mat * self.mat, axis=1)
                lip += 2.0 * float(np.maximum(self.wp, self.wn) @ rows)
            self._lip = lip
        return self._lip

    @property
    def smooth_quadratic(self) -> bool:
        return self.off.shape[0] == 0


def _clamped_weight(w: float, *, regime=None, t=None, atom=None) -> float:
    if w >= 0.0:
        return w
    if w >= -WEIGHT_CLAMP:
        return 0.0
    raise NegativeWeight(
        f"hinge weight {w:.3g} below clamp threshold", regime=regime, t=t, atom=atom
    )


# -- objective builders (raw coefficient slices, reusable by the solver) ----


def build_h11(r1, dtd, bvec, dlam, p1) -> PiecewiseQuadratic:
    """H11 with quadratic weight R1 + P1 D'D and linear 2(P1 bvec + dlam)."""
    quad = r1 + p1 * dtd
    lin = 2.0 * (p1 * bvec + dlam)
    return PiecewiseQuadratic(quad, lin, 0.0)


def build_h21(r1, dtd, bvec, dlam, p2) -> PiecewiseQuadratic:
    quad = r1 + p2 * dtd
    lin = -2.0 * (p2 * bvec + dlam)
    return PiecewiseQuadratic(quad, lin, 0.0)


def build_h12(r2, b2, e, f, p1, p2, g1, g2, *, ctx=()) -> PiecewiseQuadratic:
    """H12 at one atom; e is (n2,), f is (n2, m2), g1/g2 are (n2,)."""
    wp = np.array([_clamped_weight(p1 + gk, **dict(ctx)) for gk in g1])
    wn = np.array([_clamped_weight(p2 + gk, **dict(ctx)) for gk in g2])
    off = 1.0 + e
    lin = 2.0 * p1 * b2 - 2.0 * p1 * f.sum(axis=0)
    const = float(-np.sum(wp) - 2.0 * p1 * np.sum(e))
    return PiecewiseQuadratic(r2, lin, const, wp, wn, off, f)


def build_h22(r2, b2, e, f, p1, p2, g1, g2, *, ctx=()) -> PiecewiseQuadratic:
    """H22 at one atom.  Hinge argument is -1 - e + f v, so the positive
    part carries the (P1+Gamma1) weights and the negative part (P2+Gamma2)."""
    wp = np.array([_clamped_weight(p1 + gk, **dict(ctx)) for gk in g1])
    wn = np.array([_clamped_weight(p2 + gk, **dict(ctx)) for gk in g2])
    off = -1.0 - e
    lin = -2.0 * p2 * b2 + 2.0 * p2 * f.sum(axis=0)
    const = float(-np.sum(wn) - 2.0 * p2 * np.sum(e))
    return PiecewiseQuadratic(r2, lin, const, wn, wp, off, f)


def _objective(h_id, model: RegimeModel, i, t, pt: RiccatiPoint, atom):
    reg = model.regimes[i]
    k = reg.index_at(t)
    if h_id in (11, 21):
        r1 = reg.R1[k]
        d = reg.D[k]
        dtd = d.T @ d
        bvec = reg.B1[k] + d.T @ reg.C[k]
        if h_id == 11:
            return build_h11(r1, dtd, bvec, d.T @ pt.lam(1, model.n1), pt.p1)
        return build_h21(r1, dtd, bvec, d.T @ pt.lam(2, model.n1), pt.p2)
    if atom is None:
        raise DimensionMismatch("H12/H22 require an atom index")
    ctx = (("regime", i), ("t", t), ("atom", atom))
    args = (
        reg.R2[k, atom],
        reg.B2[k, atom],
        reg.E[k, atom],
        reg.F[k, atom],
        pt.p1,
        pt.p2,
        pt.gam(1, atom, model.n2),
        pt.gam(2, atom, model.n2),
    )
    if h_id == 12:
        return build_h12(*args, ctx=ctx)
    return build_h22(*args, ctx=ctx)


# ---------------------------------------------------------------------------
# Evaluation (spec operation surface)
# ---------------------------------------------------------------------------


def eval_H11(model, i, t, v, pt: RiccatiPoint) -> float:
    return _objective(11, model, i, t, pt, None).value(np.asarray(v, float).reshape(-1))


def eval_H12(model, i, t, atom, v, pt: RiccatiPoint) -> float:
    return _objective(12, model, i, t, pt, atom).value(np.asarray(v, float).reshape(-1))


def eval_H21(model, i, t, v, pt: RiccatiPoint) -> float:
    return _objective(21, model, i, t, pt, None).value(np.asarray(v, float).reshape(-1))


def eval_H22(model, i, t, atom, v, pt: RiccatiPoint) -> float:
    return _objective(22, model, i, t, pt, atom).value(np.asarray(v, float).reshape(-1))


# ---------------------------------------------------------------------------
# Minimization
# ---------------------------------------------------------------------------


def _project_feasible(cone: ConeSpec, v: np.ndarray, radius: float | None) -> np.ndarray:
    """Project onto cone intersected with the centered ball of the given
    radius.  For a convex cone this is the radial clamp of the cone
    projection."""
    w = cone.project(v)
    if radius is not None:
        norm = float(np.linalg.norm(w))
        if norm > radius:
            w = w * (radius / norm)
    return w


def _pgd(obj: PiecewiseQuadratic, cone: ConeSpec, radius, v0, tol, max_iter):
    v = _project_feasible(cone, v0, radius)
    lip0 = max(obj.lipschitz_bound(), 1e-8)
    lip = lip0
    fv = obj.value(v)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        g = obj.grad(v)
        while True:
            w = _project_feasible(cone, v - g / lip, radius)
            d = w - v
            fw = obj.value(w)
            if fw <= fv + float(g @ d) + 0.5 * lip * float(d @ d) + 1e-15 * (1.0 + abs(fv)):
                break
            lip *= 2.0
            if lip > 1e30:
                break
        step = float(np.linalg.norm(w - v))
        v, fv = w, fw
        if step <= tol:
            converged = True
            break
        if float(np.linalg.norm(v)) > DIVERGENCE_GUARD:
            break
        lip = max(lip * 0.9, lip0 * 1e-6, 1e-8)
    return v, iterations, converged


def _closed_form_full_space(obj: PiecewiseQuadratic):
    """Exact solve of the smooth quadratic v'Qv + c'v on R^m.

    Returns None when Q is singular at tolerance (fall back to iteration).
    """
    quad, lin = obj.quad, obj.lin
    m = lin.shape[0]
    if m == 1:
        a = float(quad[0, 0])
        if a <= 1e-12 * (1.0 + abs(a)):
            return None
        return np.array([-0.5 * lin[0] / a])
    evals = np.linalg.eigvalsh(quad)
    if evals[0] <= 1e-12 * max(1.0, float(evals[-1])):
        return None
    return np.linalg.solve(quad, -0.5 * lin)


def minimize_objective(
    obj: PiecewiseQuadratic,
    cone: ConeSpec,
    radius: float | None = None,
    v0: np.ndarray | None = None,
    tol: float = PGD_TOL,
    max_iter: int = PGD_MAX_ITER,
    *,
    ctx=(),
) -> HamiltonianResult:
    if v0 is None:
        v0 = np.zeros(cone.dim)
    if cone.kind == "zero":
        z = np.zeros(cone.dim)
        return HamiltonianResult(obj.value(z), z, 0, True)
    if cone.kind == "full_space" and radius is None and obj.smooth_quadratic:
        v = _closed_form_full_space(obj)
        if v is not None:
            return HamiltonianResult(obj.value(v), v, 0, True)
    v, iterations, converged = _pgd(obj, cone, radius, v0, tol, max_iter)
    if not converged:
        raise NoConvergence(
            f"projected gradient hit {iterations} iterations "
            f"(|v|={float(np.linalg.norm(v)):.3g})",
            **dict(ctx),
        )
    return HamiltonianResult(obj.value(v), v, iterations, converged)


def minimize(
    h_id: int,
    model: RegimeModel,
    i: int,
    t: float,
    pt: RiccatiPoint,
    cone: ConeSpec | None = None,
    atom: int | None = None,
    radius: float | None = None,
    v0: np.ndarray | None = None,
    tol: float = PGD_TOL,
    max_iter: int = PGD_MAX_ITER,
) -> HamiltonianResult:
    """Infimum (and argmin) of one Hamiltonian over its cone.

    ``h_id`` is one of 11, 12, 21, 22.  H11/H21 minimize over the first
    cone, H12/H22 over the second (per jump atom).  ``radius`` restricts
    the feasible set to the centered ball |v| <= radius.
    """
    if h_id not in (11, 12, 21, 22):
        raise ValueError(f"h_id must be 11, 12, 21 or 22, got {h_id}")
    if cone is None:
        cone = model.cone1 if h_id in (11, 21) else model.cone2
    obj = _objective(h_id, model, i, t, pt, atom)
    ctx = (("regime", i), ("t", t)) + ((("atom", atom),) if atom is not None else ())
    return minimize_objective(obj, cone, radius, v0, tol, max_iter, ctx=ctx)
