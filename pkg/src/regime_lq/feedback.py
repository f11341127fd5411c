"""Optimal state-feedback law assembled from a solved Riccati system.

The law caches, on the solver grid, the four argmin tables

    v11(i, t), v21(i, t) in Pi1       (diffusion control, per sign branch)
    v12(i, t, atom), v22(i, t, atom) in Pi2   (jump control)

and applies them positively homogeneously in the pre-event state:

    u1 = v11 x+  +  v21 x-          u2(z_a) = v12 x+  +  v22 x-

Between grid nodes the tables extend left-constant, which keeps the
control predictable; at x = 0 both controls are exactly zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import hamiltonians as ham
from .errors import NoConvergence, TimeOutOfRange
from .model import RegimeModel, left_index
from .riccati import RiccatiSolution

TIME_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class FeedbackLaw:
    model: RegimeModel
    solution: RiccatiSolution
    nodes: np.ndarray          # (N+1,)
    v11: np.ndarray            # (ell, N+1, m1)
    v21: np.ndarray            # (ell, N+1, m1)
    v12: np.ndarray            # (ell, N+1, n_atoms, m2)
    v22: np.ndarray            # (ell, N+1, n_atoms, m2)

    def node_index(self, t: float) -> int:
        horizon = float(self.nodes[-1])
        if t < -TIME_EDGE_TOL or t > horizon + TIME_EDGE_TOL:
            raise TimeOutOfRange(f"t={t:.6g} outside [0, {horizon:.6g}]", t=t)
        t = min(max(t, 0.0), horizon)
        return left_index(self.nodes, t)

    def control_at(self, t: float, x_left: float, regime: int, atom: int | None = None):
        """(u1, u2) at left-limit state ``x_left`` and regime.

        ``u2`` is the (m2,) vector for the given atom, or the full
        (n_atoms, m2) table when ``atom`` is None.
        """
        j = self.node_index(t)
        xp = max(x_left, 0.0)
        xm = max(-x_left, 0.0)
        u1 = self.v11[regime, j] * xp + self.v21[regime, j] * xm
        if atom is None:
            u2 = self.v12[regime, j] * xp + self.v22[regime, j] * xm
        else:
            u2 = self.v12[regime, j, atom] * xp + self.v22[regime, j, atom] * xm
        return u1, u2

    def to_csv(self, path) -> None:
        """Long-format dump: (t, regime, table, atom, component, value)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "regime", "table", "atom", "component", "value"])
            for n, t in enumerate(self.nodes.tolist()):
                for i in range(self.model.ell):
                    for name, arr in (("v11", self.v11), ("v21", self.v21)):
                        for c in range(self.model.m1):
                            writer.writerow(
                                [format(t, ".17g"), i + 1, name, "", c,
                                 format(arr[i, n, c], ".17g")]
                            )
                    for name, arr in (("v12", self.v12), ("v22", self.v22)):
                        for a in range(self.model.nu.n_atoms):
                            for c in range(self.model.m2):
                                writer.writerow(
                                    [format(t, ".17g"), i + 1, name, a, c,
                                     format(arr[i, n, a, c], ".17g")]
                                )


def build_law(model: RegimeModel, solution: RiccatiSolution) -> FeedbackLaw:
    """Minimize all four Hamiltonians at every (regime, node, atom).

    Deterministic given the solution: minimizations start from the
    previous node's argmin (the first from the origin), so repeated calls
    produce identical tables.
    """
    nodes = solution.grid.nodes
    n_nodes = nodes.size
    n_atoms = model.nu.n_atoms
    v11 = np.zeros((model.ell, n_nodes, model.m1))
    v21 = np.zeros((model.ell, n_nodes, model.m1))
    v12 = np.zeros((model.ell, n_nodes, n_atoms, model.m2))
    v22 = np.zeros((model.ell, n_nodes, n_atoms, model.m2))
    for i in range(model.ell):
        warm11 = np.zeros(model.m1)
        warm21 = np.zeros(model.m1)
        warm12 = [np.zeros(model.m2) for _ in range(n_atoms)]
        warm22 = [np.zeros(model.m2) for _ in range(n_atoms)]
        for n, t in enumerate(nodes.tolist()):
            pt = ham.RiccatiPoint(p1=float(solution.p1[i, n]), p2=float(solution.p2[i, n]))
            try:
                res = ham.minimize(11, model, i, t, pt, v0=warm11)
                v11[i, n] = warm11 = res.argmin
                res = ham.minimize(21, model, i, t, pt, v0=warm21)
                v21[i, n] = warm21 = res.argmin
                for a in range(n_atoms):
                    res = ham.minimize(12, model, i, t, pt, atom=a, v0=warm12[a])
                    v12[i, n, a] = warm12[a] = res.argmin
                    res = ham.minimize(22, model, i, t, pt, atom=a, v0=warm22[a])
                    v22[i, n, a] = warm22[a] = res.argmin
            except NoConvergence as exc:
                raise NoConvergence(
                    f"feedback table build failed: {exc}", regime=i, t=t
                ) from exc
    return FeedbackLaw(model, solution, nodes, v11, v21, v12, v22)
