"""Backward integration of the coupled two-branch Riccati ODE system.

With deterministic coefficients the martingale slots vanish and the
equation system for the 2*ell nonnegative weights (P1^i, P2^i) becomes a
terminal-value ODE system integrated backward from t = T:

    -dP1^i/dt = (2A + |C|^2) P1^i + Q + H11*(P1^i)
                + sum_atoms w_a H12*(z_a, P1^i, P2^i) + sum_j q_ij P1^j
    -dP2^i/dt = (2A + |C|^2) P2^i + Q + H21*(P2^i)
                + sum_atoms w_a H22*(z_a, P1^i, P2^i) + sum_j q_ij P2^j
    P1^i(T) = P2^i(T) = G^i

Variants share the integrator: ``full`` minimizes the Hamiltonians over
the cones, ``truncated`` restricts to |v| <= k, ``upper_bound`` evaluates
the jump Hamiltonians at v = 0 with no optimization (a linear system that
dominates the full solution), and ``lower_bound`` drops the state cost and
Hamiltonians entirely (identically zero from terminal zero).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import exp
from pathlib import Path

import numpy as np

from . import hamiltonians as ham
from .errors import DefinitenessLost, NegativeP, NoConvergence, NotSingular
from .model import CaseFlags, RegimeModel, left_index

VARIANTS = ("full", "truncated", "upper_bound", "lower_bound")

#: Undershoot within this of zero is round-off and clamps; lower raises.
UNDERSHOOT_CLAMP = 1e-10


@dataclass(frozen=True)
class SolverGrid:
    """Uniform time grid on [0, horizon] with ``steps`` intervals."""

    horizon: float
    steps: int

    def __post_init__(self):
        if self.horizon <= 0.0 or self.steps < 1:
            raise ValueError("grid needs positive horizon and at least one step")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps


@dataclass
class MinimizerStats:
    calls: int = 0
    iterations: int = 0
    max_iterations: int = 0

    def record(self, result: ham.HamiltonianResult):
        self.calls += 1
        self.iterations += result.iterations
        if result.iterations > self.max_iterations:
            self.max_iterations = result.iterations


@dataclass
class RiccatiSolution:
    """Node values of both branch weights for every regime.

    ``p1`` and ``p2`` have shape (ell, N+1); slice [:, -1] is the terminal
    weight G exactly.  ``value_at`` interpolates linearly in time.
    """

    grid: SolverGrid
    p1: np.ndarray
    p2: np.ndarray
    variant: str
    truncation_radius: float | None = None
    stats: MinimizerStats = field(default_factory=MinimizerStats)

    def value_at(self, t: float, regime: int, which: int = 1) -> float:
        arr = self.p1 if which == 1 else self.p2
        return float(np.interp(t, self.grid.nodes, arr[regime]))

    def initial_value(self, x: float, i0: int) -> float:
        """Predicted optimal cost  P1(0)(x+)^2 + P2(0)(x-)^2."""
        xp = max(x, 0.0)
        xm = max(-x, 0.0)
        return float(self.p1[i0, 0] * xp * xp + self.p2[i0, 0] * xm * xm)

    def sup_diff(self, other: "RiccatiSolution") -> float:
        return float(
            max(
                np.max(np.abs(self.p1 - other.p1)),
                np.max(np.abs(self.p2 - other.p2)),
            )
        )

    def metadata(self) -> dict:
        return {
            "variant": self.variant,
            "truncation_radius": self.truncation_radius,
            "grid": {"horizon": self.grid.horizon, "steps": self.grid.steps},
            "minimizer_stats": {
                "calls": self.stats.calls,
                "iterations": self.stats.iterations,
                "max_iterations": self.stats.max_iterations,
            },
        }

    def to_csv(self, path) -> None:
        """Rows (t, regime, P1, P2); regime is 1-based, floats 17 digits."""
        nodes = self.grid.nodes
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "regime", "P1", "P2"])
            for n, t in enumerate(nodes.tolist()):
                for i in range(self.p1.shape[0]):
                    writer.writerow(
                        [
                            format(t, ".17g"),
                            i + 1,
                            format(self.p1[i, n], ".17g"),
                            format(self.p2[i, n], ".17g"),
                        ]
                    )

    def save_metadata(self, path) -> None:
        Path(path).write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Drift evaluation
# ---------------------------------------------------------------------------


class _Warm:
    """Warm-start argmins for the stage minimizations, per regime/atom."""

    def __init__(self, model: RegimeModel):
        n_atoms = model.nu.n_atoms
        self.v11 = [np.zeros(model.m1) for _ in range(model.ell)]
        self.v21 = [np.zeros(model.m1) for _ in range(model.ell)]
        self.v12 = [[np.zeros(model.m2) for _ in range(n_atoms)] for _ in range(model.ell)]
        self.v22 = [[np.zeros(model.m2) for _ in range(n_atoms)] for _ in range(model.ell)]


class _Engine:
    def __init__(self, model: RegimeModel, variant: str, radius: float | None):
        self.model = model
        self.variant = variant
        self.radius = radius if variant == "truncated" else None
        self.stats = MinimizerStats()
        self.warm = _Warm(model)
        self.zeros_m1 = np.zeros(model.m1)
        self.zeros_m2 = np.zeros(model.m2)
        self.zeros_n2 = np.zeros(model.n2)
        # Per-regime derived tables on the regime's own knots.
        self.a2c, self.bvec, self.dtd = [], [], []
        for reg in model.regimes:
            c2 = np.sum(reg.C * reg.C, axis=1)
            self.a2c.append(2.0 * reg.A + c2)
            dt_c = np.einsum("knm,kn->km", reg.D, reg.C)
            self.bvec.append(reg.B1 + dt_c)
            self.dtd.append(np.einsum("knm,knp->kmp", reg.D, reg.D))

    def drift(self, t: float, p1: np.ndarray, p2: np.ndarray):
        model = self.model
        optimize = self.variant in ("full", "truncated")
        coup1 = model.generator @ p1
        coup2 = model.generator @ p2
        f1 = np.empty(model.ell)
        f2 = np.empty(model.ell)
        weights = model.nu.weights
        for i, reg in enumerate(model.regimes):
            k = left_index(reg.knots, t)
            if self.variant == "lower_bound":
                f1[i] = self.a2c[i][k] * p1[i] + coup1[i]
                f2[i] = self.a2c[i][k] * p2[i] + coup2[i]
                continue
            q = float(reg.Q[k])
            h11 = h21 = 0.0
            if optimize:
                obj11 = ham.build_h11(
                    reg.R1[k], self.dtd[i][k], self.bvec[i][k], self.zeros_m1, p1[i]
                )
                res = ham.minimize_objective(
                    obj11, model.cone1, self.radius, self.warm.v11[i],
                    ctx=(("regime", i), ("t", t)),
                )
                self.warm.v11[i] = res.argmin
                self.stats.record(res)
                h11 = res.value
                obj21 = ham.build_h21(
                    reg.R1[k], self.dtd[i][k], self.bvec[i][k], self.zeros_m1, p2[i]
                )
                res = ham.minimize_objective(
                    obj21, model.cone1, self.radius, self.warm.v21[i],
                    ctx=(("regime", i), ("t", t)),
                )
                self.warm.v21[i] = res.argmin
                self.stats.record(res)
                h21 = res.value
            jump1 = jump2 = 0.0
            for a in range(model.nu.n_atoms):
                ctx = (("regime", i), ("t", t), ("atom", a))
                obj12 = ham.build_h12(
                    reg.R2[k, a], reg.B2[k, a], reg.E[k, a], reg.F[k, a],
                    p1[i], p2[i], self.zeros_n2, self.zeros_n2, ctx=ctx,
                )
                obj22 = ham.build_h22(
                    reg.R2[k, a], reg.B2[k, a], reg.E[k, a], reg.F[k, a],
                    p1[i], p2[i], self.zeros_n2, self.zeros_n2, ctx=ctx,
                )
                if optimize:
                    res = ham.minimize_objective(
                        obj12, model.cone2, self.radius, self.warm.v12[i][a], ctx=ctx
                    )
                    self.warm.v12[i][a] = res.argmin
                    self.stats.record(res)
                    h12 = res.value
                    res = ham.minimize_objective(
                        obj22, model.cone2, self.radius, self.warm.v22[i][a], ctx=ctx
                    )
                    self.warm.v22[i][a] = res.argmin
                    self.stats.record(res)
                    h22 = res.value
                else:  # upper bound: evaluate at v = 0, no infimum
                    h12 = obj12.value(self.zeros_m2)
                    h22 = obj22.value(self.zeros_m2)
                jump1 += weights[a] * h12
                jump2 += weights[a] * h22
            f1[i] = self.a2c[i][k] * p1[i] + q + h11 + jump1 + coup1[i]
            f2[i] = self.a2c[i][k] * p2[i] + q + h21 + jump2 + coup2[i]
        return f1, f2


def _check_definiteness(model: RegimeModel, t: float, p1: np.ndarray, p2: np.ndarray):
    for i, reg in enumerate(model.regimes):
        k = left_index(reg.knots, t)
        d = reg.D[k]
        dtd = d.T @ d
        for p in (p1[i], p2[i]):
            mat = reg.R1[k] + p * dtd
            if model.m1 == 1:
                low = float(mat[0, 0])
            else:
                low = float(np.linalg.eigvalsh(mat)[0])
            if low <= 0.0:
                raise DefinitenessLost(
                    f"R1 + P D'D lost positive definiteness (min eig {low:.3g})",
                    regime=i,
                    t=t,
                )


def _apply_floor(y: np.ndarray, t: float):
    low = float(np.min(y))
    if low >= 0.0:
        return y
    if low < -UNDERSHOOT_CLAMP:
        raise NegativeP(
            f"solution dipped to {low:.3g}; grid too coarse", t=t
        )
    return np.maximum(y, 0.0)


def solve(
    model: RegimeModel,
    flags: CaseFlags | None,
    grid: SolverGrid,
    variant: str = "full",
    truncation_radius: float | None = None,
    method: str = "rk4",
) -> RiccatiSolution:
    """Integrate the system backward on the grid.

    ``method`` is ``rk4`` (classical fourth order, the default) or
    ``backward_euler`` (first-order implicit fallback for stiff setups).
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if variant == "truncated" and (truncation_radius is None or truncation_radius <= 0):
        raise ValueError("truncated variant requires a positive truncation_radius")
    if method not in ("rk4", "backward_euler"):
        raise ValueError("method must be 'rk4' or 'backward_euler'")
    engine = _Engine(model, variant, truncation_radius)
    ell = model.ell
    n = grid.steps
    h = grid.dt
    nodes = grid.nodes
    p1 = np.empty((ell, n + 1))
    p2 = np.empty((ell, n + 1))
    g = np.array([reg.G for reg in model.regimes])
    y = np.concatenate([g, g]) if variant != "lower_bound" else np.zeros(2 * ell)
    p1[:, n] = y[:ell]
    p2[:, n] = y[ell:]
    check_pd = variant in ("full", "truncated")
    if check_pd:
        _check_definiteness(model, nodes[n], y[:ell], y[ell:])

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        f1, f2 = engine.drift(t, state[:ell], state[ell:])
        return np.concatenate([f1, f2])

    for step in range(n):
        t_right = nodes[n - step]
        t_left = nodes[n - step - 1]
        t_mid = 0.5 * (t_left + t_right)
        if method == "rk4":
            k1 = rhs(t_right, y)
            k2 = rhs(t_mid, y + (0.5 * h) * k1)
            k3 = rhs(t_mid, y + (0.5 * h) * k2)
            k4 = rhs(t_left, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            y_prev = y
            y_new = y_prev.copy()
            for _ in range(500):
                y_next = y_prev + h * rhs(t_left, y_new)
                if float(np.max(np.abs(y_next - y_new))) <= 1e-13 * (
                    1.0 + float(np.max(np.abs(y_next)))
                ):
                    y_new = y_next
                    break
                y_new = y_next
            else:
                raise NoConvergence("implicit step fixed point stalled", t=t_left)
            y = y_new
        y = _apply_floor(y, t_left)
        if check_pd:
            _check_definiteness(model, t_left, y[:ell], y[ell:])
        p1[:, n - step - 1] = y[:ell]
        p2[:, n - step - 1] = y[ell:]

    return RiccatiSolution(
        grid, p1, p2, variant, truncation_radius if variant == "truncated" else None,
        engine.stats,
    )


def solve_upper_bound(model: RegimeModel, grid: SolverGrid) -> RiccatiSolution:
    """Dominating linear system: jump Hamiltonians frozen at v = 0."""
    return solve(model, None, grid, variant="upper_bound")


# ---------------------------------------------------------------------------
# Singular-case analytic lower bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularLowerBound:
    """Explicit curve below the solution in the declared singular case.

    Cases I and III use  1 / ((1/delta + 1) e^{rate (T-t)} - 1); case II
    uses  delta e^{-rate (T-t)}.  Call the object like a function of t.
    """

    case: str
    delta: float
    rate: float
    horizon: float

    def __call__(self, t: float) -> float:
        tau = self.horizon - t
        if self.case == "II":
            return self.delta * exp(-self.rate * tau)
        return 1.0 / ((1.0 / self.delta + 1.0) * exp(self.rate * tau) - 1.0)


def lower_bound_singular(flags: CaseFlags, model: RegimeModel) -> SingularLowerBound:
    """Compute the bound constant from worst-case coefficient norms.

    The linear and quadratic inequality rates are taken as suprema over
    the regimes and knot times (jump integrals use the atom weights), so
    the comparison with the integrated solution holds at every node.
    """
    if flags.singular_case is None:
        raise NotSingular("declared flags have no singular case")
    case = flags.singular_case
    inv_delta = 1.0 / flags.delta
    w = model.nu.weights
    lin_worst = np.inf
    quad_worst = 0.0
    for reg in model.regimes:
        for k in range(reg.knots.size):
            a2c = 2.0 * float(reg.A[k]) + float(reg.C[k] @ reg.C[k])
            bdc = reg.B1[k] + reg.D[k].T @ reg.C[k]
            bdc2 = float(bdc @ bdc)
            jump2 = 0.0
            b22 = 0.0
            for a in range(model.nu.n_atoms):
                fe_b = reg.F[k, a].T @ reg.E[k, a] + reg.B2[k, a]
                jump2 += float(w[a]) * float(fe_b @ fe_b)
                b22 += float(w[a]) * float(reg.B2[k, a] @ reg.B2[k, a])
            if case == "I":
                lin = a2c - inv_delta * bdc2
                quad = inv_delta * b22
            elif case == "II":
                lin = a2c - inv_delta * bdc2 - inv_delta * jump2
                quad = 0.0
            else:  # case III mirrors case I with the roles of the two
                # control channels exchanged
                lin = a2c - inv_delta * jump2
                quad = inv_delta * bdc2
            lin_worst = min(lin_worst, lin)
            quad_worst = max(quad_worst, quad)
    rate = max(0.0, -lin_worst, quad_worst)
    return SingularLowerBound(case, flags.delta, rate, model.horizon)
