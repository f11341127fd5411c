"""Domain types for the cone-constrained switching LQ control problem.

A :class:`RegimeModel` bundles, for each regime of a continuous-time Markov
chain, the coefficient functions of a scalar controlled jump diffusion

    dX = [A X + B1' u1 + int B2(z)' u2(z) nu(dz)] dt
         + [C X + D u1]' dW
         + int [E(z) X + F(z) u2(z)]' dN~(dt, dz),

together with the quadratic cost weights (R1, R2, Q, G), the chain
generator, a finite jump measure given by weighted atoms, and the two
closed convex cones constraining the controls.

Coefficients are piecewise constant in time: each one is a table of values
on knot times, extended left-constant (the value at the latest knot <= t),
which keeps controls built from them predictable.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import nnls

from .errors import (
    ConfigError,
    DefinitenessFailure,
    DimensionMismatch,
    NegativeWeight,
    NonConservativeGenerator,
)

#: Absolute tolerance for all assumption checks (eigenvalues, row sums).
CHECK_TOL = 1e-12

#: Snap tolerance: a projection within this relative distance of its input
#: returns the input unchanged, making projections exactly idempotent.
PROJECT_SNAP_TOL = 1e-12

#: Configuration cap on the number of generators of a finitely generated cone.
MAX_GENERATORS = 16

CONE_KINDS = ("full_space", "zero", "nonnegative_orthant", "half_line", "generated")


# ---------------------------------------------------------------------------
# Cones
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeSpec:
    """A closed convex cone in R^m with an exact Euclidean projection.

    Supported kinds: ``full_space``, ``zero``, ``nonnegative_orthant``,
    ``half_line`` (nonnegative multiples of a direction), and ``generated``
    (nonnegative combinations of finitely many generators, projected via
    active-set nonnegative least squares).
    """

    kind: str
    dim: int
    direction: np.ndarray | None = None
    generators: np.ndarray | None = None  # (dim, n_gen) columns

    def __post_init__(self):
        if self.kind not in CONE_KINDS:
            raise ConfigError(f"unknown cone kind {self.kind!r}")
        if self.dim < 1:
            raise ConfigError("cone dimension must be positive")
        if self.kind == "half_line":
            d = np.asarray(self.direction, dtype=float).reshape(-1)
            if d.shape != (self.dim,):
                raise DimensionMismatch(
                    f"half-line direction has dim {d.shape}, cone dim {self.dim}"
                )
            norm = float(np.linalg.norm(d))
            if norm <= 0.0:
                raise ConfigError("half-line direction must be nonzero")
            object.__setattr__(self, "direction", d / norm)
        elif self.kind == "generated":
            g = np.asarray(self.generators, dtype=float)
            if g.ndim != 2 or g.shape[0] != self.dim:
                raise DimensionMismatch(
                    f"generators must be ({self.dim}, n_gen), got {g.shape}"
                )
            if g.shape[1] > MAX_GENERATORS:
                raise ConfigError(
                    f"at most {MAX_GENERATORS} cone generators supported, got {g.shape[1]}"
                )
            object.__setattr__(self, "generators", g)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def full_space(dim: int) -> "ConeSpec":
        return ConeSpec("full_space", dim)

    @staticmethod
    def zero(dim: int) -> "ConeSpec":
        return ConeSpec("zero", dim)

    @staticmethod
    def nonnegative_orthant(dim: int) -> "ConeSpec":
        return ConeSpec("nonnegative_orthant", dim)

    @staticmethod
    def half_line(direction) -> "ConeSpec":
        d = np.asarray(direction, dtype=float).reshape(-1)
        return ConeSpec("half_line", d.size, direction=d)

    @staticmethod
    def generated(generators) -> "ConeSpec":
        g = np.asarray(generators, dtype=float)
        if g.ndim != 2:
            raise ConfigError("generators must be a 2-d array (rows = generators)")
        return ConeSpec("generated", g.shape[1], generators=g.T.copy())

    # -- operations ---------------------------------------------------------

    def project(self, v) -> np.ndarray:
        """Euclidean-nearest point of the cone to ``v``.

        Idempotent by construction: a result within ``PROJECT_SNAP_TOL``
        (relative) of the input returns the input itself.
        """
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector has dim {v.size}, cone dim {self.dim}"
            )
        if self.kind == "full_space":
            return v.copy()
        if self.kind == "zero":
            return np.zeros(self.dim)
        if self.kind == "nonnegative_orthant":
            return np.maximum(v, 0.0)
        if self.kind == "half_line":
            s = float(v @ self.direction)
            w = max(s, 0.0) * self.direction
        else:  # generated
            coeffs, _ = nnls(self.generators, v)
            w = self.generators @ coeffs
        if np.max(np.abs(w - v)) <= PROJECT_SNAP_TOL * (1.0 + np.max(np.abs(v))):
            return v.copy()
        return w

    def contains(self, v, tol: float = PROJECT_SNAP_TOL) -> bool:
        v = np.asarray(v, dtype=float).reshape(-1)
        w = self.project(v)
        return bool(np.max(np.abs(w - v), initial=0.0) <= tol * (1.0 + np.max(np.abs(v), initial=0.0)))

    @property
    def is_symmetric(self) -> bool:
        """True when the cone equals its own reflection (Pi = -Pi)."""
        return self.kind in ("full_space", "zero")

    def to_config(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "half_line":
            out["direction"] = self.direction.tolist()
        elif self.kind == "generated":
            out["generators"] = self.generators.T.tolist()
        return out


def cone_from_config(spec: dict, dim: int) -> ConeSpec:
    kind = spec.get("kind")
    if kind in ("full_space", "zero", "nonnegative_orthant"):
        return ConeSpec(kind, dim)
    if kind == "half_line":
        cone = ConeSpec.half_line(spec["direction"])
    elif kind == "generated":
        cone = ConeSpec.generated(spec["generators"])
    else:
        raise ConfigError(f"unknown cone kind {kind!r}")
    if cone.dim != dim:
        raise DimensionMismatch(f"cone dim {cone.dim} does not match control dim {dim}")
    return cone


# ---------------------------------------------------------------------------
# Jump measure
# ---------------------------------------------------------------------------


class JumpMeasure:
    """Finite jump-mark measure represented by weighted atoms.

    ``marks`` has shape (n_atoms, mark_dim) and ``weights`` shape (n_atoms,)
    with every weight nonnegative.  ``total_mass`` is the running left-to-
    right sum of the weights, so it is reproducible bit-for-bit.
    An empty measure (no atoms) models a pure-diffusion problem.
    """

    def __init__(self, marks, weights, mark_dim: int | None = None):
        marks = np.asarray(marks, dtype=float)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if marks.size == 0:
            marks = marks.reshape(0, mark_dim if mark_dim else 1)
        if marks.ndim == 1:
            marks = marks.reshape(-1, 1)
        if marks.shape[0] != weights.shape[0]:
            raise DimensionMismatch(
                f"{marks.shape[0]} marks but {weights.shape[0]} weights"
            )
        if not np.all(np.isfinite(weights)) or not np.all(np.isfinite(marks)):
            raise ValueError("jump atoms must be finite")
        if np.any(weights < 0.0):
            raise ValueError("jump atom weights must be nonnegative")
        self.marks = marks
        self.weights = weights
        total = 0.0
        for w in weights.tolist():
            total += w
        self.total_mass = total

    @property
    def n_atoms(self) -> int:
        return self.weights.shape[0]

    @staticmethod
    def empty(mark_dim: int = 1) -> "JumpMeasure":
        return JumpMeasure(np.zeros((0, mark_dim)), np.zeros(0), mark_dim=mark_dim)

    def to_rows(self) -> list[list[float]]:
        return [list(m) + [w] for m, w in zip(self.marks.tolist(), self.weights.tolist())]


# ---------------------------------------------------------------------------
# Coefficient tables
# ---------------------------------------------------------------------------


def left_index(knots: np.ndarray, t: float) -> int:
    """Index of the latest knot <= t (left-constant extension)."""
    idx = bisect_right(knots, t) - 1
    return idx if idx >= 0 else 0


def _as_table(raw, shape: tuple, name: str):
    """Normalize a config entry to (knots, values) with values (K, *shape).

    A bare constant (scalar or nested list matching ``shape``) becomes a
    single-knot table at t = 0.
    """
    if isinstance(raw, dict):
        try:
            knots = np.asarray(raw["knots"], dtype=float).reshape(-1)
            values = np.asarray(raw["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"coefficient {name}: bad table ({exc})") from None
        if knots.size == 0:
            raise ConfigError(f"coefficient {name}: empty knot list")
        if knots[0] != 0.0:
            raise ConfigError(f"coefficient {name}: first knot must be 0.0")
        if np.any(np.diff(knots) <= 0.0):
            raise ConfigError(f"coefficient {name}: knots must be strictly increasing")
        want = (knots.size,) + shape
        if values.shape != want:
            raise ConfigError(
                f"coefficient {name}: values shape {values.shape}, expected {want}"
            )
        return knots, values
    values = np.asarray(raw, dtype=float)
    if values.shape != shape:
        raise ConfigError(
            f"coefficient {name}: constant shape {values.shape}, expected {shape}"
        )
    return np.zeros(1), values[np.newaxis, ...]


class RegimeCoefficients:
    """All coefficient tables of one regime, resampled onto shared knots."""

    FIELDS = ("A", "B1", "C", "D", "R1", "Q", "B2", "E", "F", "R2")

    def __init__(self, tables: dict, G: float, dims: dict, n_atoms: int):
        n1, n2, m1, m2 = dims["n1"], dims["n2"], dims["m1"], dims["m2"]
        shapes = {
            "A": (),
            "B1": (m1,),
            "C": (n1,),
            "D": (n1, m1),
            "R1": (m1, m1),
            "Q": (),
            "B2": (n_atoms, m2),
            "E": (n_atoms, n2),
            "F": (n_atoms, n2, m2),
            "R2": (n_atoms, m2, m2),
        }
        parsed = {}
        for name in self.FIELDS:
            if name not in tables:
                raise ConfigError(f"missing coefficient {name}")
            parsed[name] = _as_table(tables[name], shapes[name], name)
        knots = np.unique(np.concatenate([k for k, _ in parsed.values()]))
        self.knots = knots
        for name, (k, vals) in parsed.items():
            idx = np.searchsorted(k, knots, side="right") - 1
            setattr(self, name, vals[idx])
        self.G = float(G)

    def index_at(self, t: float) -> int:
        return left_index(self.knots, t)


# ---------------------------------------------------------------------------
# Regime model
# ---------------------------------------------------------------------------


class RegimeModel:
    """Immutable problem description; see the module docstring.

    Construction validates shapes only.  Semantic checks (generator rows,
    nonnegative weights, definiteness bounds) live in :func:`validate`.
    """

    def __init__(self, *, horizon, dims, generator, nu, cone1, cone2,
                 regimes: list[RegimeCoefficients]):
        self.horizon = float(horizon)
        if self.horizon <= 0.0:
            raise ConfigError("horizon must be positive")
        self.n1 = int(dims["n1"])
        self.n2 = int(dims["n2"])
        self.m1 = int(dims["m1"])
        self.m2 = int(dims["m2"])
        if min(self.n1, self.n2, self.m1, self.m2) < 1:
            raise ConfigError("dimensions n1, n2, m1, m2 must be positive")
        self.ell = len(regimes)
        if self.ell < 1:
            raise ConfigError("at least one regime required")
        self.generator = np.asarray(generator, dtype=float)
        if self.generator.shape != (self.ell, self.ell):
            raise DimensionMismatch(
                f"generator shape {self.generator.shape}, expected ({self.ell}, {self.ell})"
            )
        if not isinstance(nu, JumpMeasure):
            raise ConfigError("nu must be a JumpMeasure")
        self.nu = nu
        if cone1.dim != self.m1:
            raise DimensionMismatch(f"cone1 dim {cone1.dim} != m1 {self.m1}")
        if cone2.dim != self.m2:
            raise DimensionMismatch(f"cone2 dim {cone2.dim} != m2 {self.m2}")
        self.cone1 = cone1
        self.cone2 = cone2
        self.regimes = tuple(regimes)

    @property
    def dims(self) -> dict:
        return {"n1": self.n1, "n2": self.n2, "m1": self.m1, "m2": self.m2}

    # Convenience accessors (i = regime index, 0-based; a = atom index).

    def A(self, i, t):
        r = self.regimes[i]
        return float(r.A[r.index_at(t)])

    def B1(self, i, t):
        r = self.regimes[i]
        return r.B1[r.index_at(t)]

    def C(self, i, t):
        r = self.regimes[i]
        return r.C[r.index_at(t)]

    def D(self, i, t):
        r = self.regimes[i]
        return r.D[r.index_at(t)]

    def R1(self, i, t):
        r = self.regimes[i]
        return r.R1[r.index_at(t)]

    def Q(self, i, t):
        r = self.regimes[i]
        return float(r.Q[r.index_at(t)])

    def G(self, i):
        return self.regimes[i].G

    def B2(self, i, t, a):
        r = self.regimes[i]
        return r.B2[r.index_at(t), a]

    def E(self, i, t, a):
        r = self.regimes[i]
        return r.E[r.index_at(t), a]

    def F(self, i, t, a):
        r = self.regimes[i]
        return r.F[r.index_at(t), a]

    def R2(self, i, t, a):
        r = self.regimes[i]
        return r.R2[r.index_at(t), a]

    def all_knots(self) -> np.ndarray:
        return np.unique(np.concatenate([r.knots for r in self.regimes]))


# ---------------------------------------------------------------------------
# Case flags and validation
# ---------------------------------------------------------------------------

SINGULAR_CASES = ("I", "II", "III")


@dataclass(frozen=True)
class CaseFlags:
    """Which definiteness regime the model is declared to satisfy.

    ``standard`` claims R1 >= delta I and R2 >= delta I.  ``singular_case``
    claims G >= delta plus the case-specific pair:
    I: D'D and R2, II: D'D and F'F, III: R1 and F'F (each >= delta I).
    """

    standard: bool = False
    singular_case: str | None = None
    delta: float = 1.0

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ConfigError("delta must be positive")
        if self.singular_case is not None and self.singular_case not in SINGULAR_CASES:
            raise ConfigError(f"singular case must be one of {SINGULAR_CASES}")
        if not self.standard and self.singular_case is None:
            raise ConfigError("flags must declare standard and/or a singular case")


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: tuple | None = None  # (regime, t, atom or None)
    margin: float | None = None
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        loc = ""
        if self.worst is not None:
            i, t, a = self.worst
            loc = f" worst at regime {i + 1}, t={t:.6g}" + (
                f", atom {a}" if a is not None else ""
            )
        extra = f" [{self.detail}]" if self.detail else ""
        return f"[{status}] {self.name}{loc}{extra}"


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)
    accepted: bool = False

    def to_text(self) -> str:
        body = "\n".join(c.line() for c in self.checks)
        verdict = "ACCEPTED" if self.accepted else "REJECTED"
        return f"{body}\nmodel {verdict}"

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _min_eig_over(model: RegimeModel, get, per_atom: bool):
    """Minimum eigenvalue of a coefficient matrix over regimes/knots/atoms.

    Returns (min_value, (regime, t, atom-or-None)).
    """
    best = np.inf
    where = (0, 0.0, None)
    for i, reg in enumerate(model.regimes):
        for k, t in enumerate(reg.knots.tolist()):
            atoms = range(model.nu.n_atoms) if per_atom else (None,)
            for a in atoms:
                mat = get(reg, k, a)
                if mat.shape == (1, 1):
                    low = float(mat[0, 0])
                else:
                    low = float(np.linalg.eigvalsh(mat)[0])
                if low < best:
                    best = low
                    where = (i, t, a)
    return best, where


def validate(model: RegimeModel, flags: CaseFlags) -> ValidationReport:
    """Check the standing assumptions and the declared definiteness case.

    Returns a report listing every check with its worst offending
    (regime, t, atom) location.  If the model cannot be accepted, raises
    ``NonConservativeGenerator``, ``NegativeWeight`` or
    ``DefinitenessFailure`` (the report is attached as ``exc.report``).
    """
    report = ValidationReport()
    delta = flags.delta

    # Generator: zero row sums, nonnegative off-diagonal rates.
    gen = model.generator
    row_sums = gen.sum(axis=1)
    off = gen - np.diag(np.diag(gen))
    bad_row = int(np.argmax(np.abs(row_sums)))
    gen_ok = bool(
        np.all(np.abs(row_sums) <= CHECK_TOL) and np.all(off >= -CHECK_TOL)
    )
    report.checks.append(
        CheckResult(
            "generator_conservative",
            gen_ok,
            (bad_row, 0.0, None) if not gen_ok else None,
            detail="" if gen_ok else f"row sum {row_sums[bad_row]:.3g}",
        )
    )

    # Boundedness: every table finite.
    finite = True
    where_fin = None
    for i, reg in enumerate(model.regimes):
        for name in RegimeCoefficients.FIELDS:
            arr = getattr(reg, name)
            if not np.all(np.isfinite(arr)):
                finite = False
                k = int(np.argwhere(~np.isfinite(arr))[0][0])
                where_fin = (i, float(reg.knots[k]), None)
                break
        if not np.isfinite(reg.G):
            finite = False
            where_fin = (i, model.horizon, None)
        if not finite:
            break
    report.checks.append(CheckResult("coefficients_bounded", finite, where_fin))

    # Nonnegative scalar weights Q, G.
    worst_q = np.inf
    where_q = None
    for i, reg in enumerate(model.regimes):
        k = int(np.argmin(reg.Q))
        if reg.Q[k] < worst_q:
            worst_q, where_q = float(reg.Q[k]), (i, float(reg.knots[k]), None)
        if reg.G < worst_q:
            worst_q, where_q = reg.G, (i, model.horizon, None)
    weights_ok = worst_q >= -CHECK_TOL
    report.checks.append(
        CheckResult("state_weights_nonnegative", weights_ok, None if weights_ok else where_q,
                    margin=worst_q)
    )

    # PSD control weights.
    r1_low, r1_where = _min_eig_over(model, lambda r, k, a: r.R1[k], per_atom=False)
    report.checks.append(
        CheckResult("R1_psd", r1_low >= -CHECK_TOL, None if r1_low >= -CHECK_TOL else r1_where,
                    margin=r1_low)
    )
    if model.nu.n_atoms > 0:
        r2_low, r2_where = _min_eig_over(model, lambda r, k, a: r.R2[k, a], per_atom=True)
    else:
        r2_low, r2_where = np.inf, None
    report.checks.append(
        CheckResult("R2_psd", r2_low >= -CHECK_TOL, None if r2_low >= -CHECK_TOL else r2_where,
                    margin=r2_low if np.isfinite(r2_low) else None)
    )

    assumption1_ok = gen_ok and finite and weights_ok and r1_low >= -CHECK_TOL and (
        r2_low >= -CHECK_TOL
    )

    # Declared case checks.
    standard_ok = None
    if flags.standard:
        ok1 = r1_low >= delta - CHECK_TOL
        ok2 = (model.nu.n_atoms == 0) or (r2_low >= delta - CHECK_TOL)
        standard_ok = ok1 and ok2
        worst = r1_where if not ok1 else r2_where
        report.checks.append(
            CheckResult(
                "standard_case_delta",
                standard_ok,
                None if standard_ok else worst,
                margin=min(r1_low, r2_low),
                detail=f"delta={delta:g}",
            )
        )

    singular_ok = None
    if flags.singular_case is not None:
        g_low = min(reg.G for reg in model.regimes)
        g_ok = g_low >= delta - CHECK_TOL
        dtd_low, dtd_where = _min_eig_over(
            model, lambda r, k, a: r.D[k].T @ r.D[k], per_atom=False
        )
        if model.nu.n_atoms > 0:
            ftf_low, ftf_where = _min_eig_over(
                model, lambda r, k, a: r.F[k, a].T @ r.F[k, a], per_atom=True
            )
        else:
            ftf_low, ftf_where = np.inf, None
        pair = {
            "I": (dtd_low, r2_low, dtd_where, r2_where, "D'D", "R2"),
            "II": (dtd_low, ftf_low, dtd_where, ftf_where, "D'D", "F'F"),
            "III": (r1_low, ftf_low, r1_where, ftf_where, "R1", "F'F"),
        }[flags.singular_case]
        a_low, b_low, a_where, b_where, a_name, b_name = pair
        a_ok = a_low >= delta - CHECK_TOL
        b_ok = b_low >= delta - CHECK_TOL
        singular_ok = g_ok and a_ok and b_ok
        worst = None
        detail = f"case {flags.singular_case}, delta={delta:g}"
        if not g_ok:
            worst = (int(np.argmin([r.G for r in model.regimes])), model.horizon, None)
            detail += f", G min {g_low:.3g}"
        elif not a_ok:
            worst, detail = a_where, detail + f", {a_name} min eig {a_low:.3g}"
        elif not b_ok:
            worst, detail = b_where, detail + f", {b_name} min eig {b_low:.3g}"
        report.checks.append(
            CheckResult("singular_case_delta", singular_ok, worst, detail=detail)
        )

    case_ok = bool(standard_ok) or bool(singular_ok)
    report.accepted = assumption1_ok and case_ok

    if not report.accepted:
        if not gen_ok:
            exc = NonConservativeGenerator(
                f"generator row {bad_row + 1} sums to {row_sums[bad_row]:.3g} "
                f"or has a negative off-diagonal rate",
            )
        elif not weights_ok:
            i, t, _ = where_q
            exc = NegativeWeight(
                f"Q or G negative ({worst_q:.3g})", regime=i, t=t
            )
        elif not finite:
            i, t, _ = where_fin
            exc = NegativeWeight("non-finite coefficient", regime=i, t=t)
        else:
            exc = DefinitenessFailure(
                "no declared definiteness case holds at delta="
                f"{delta:g} (see report)",
            )
        exc.report = report
        raise exc
    return report


# ---------------------------------------------------------------------------
# Cone projection as a free function (spec operation surface)
# ---------------------------------------------------------------------------


def project(cone: ConeSpec, v) -> np.ndarray:
    """Euclidean projection of ``v`` onto the cone."""
    return cone.project(v)


# ---------------------------------------------------------------------------
# JSON configuration (schema version 1)
# ---------------------------------------------------------------------------


def model_from_config(cfg: dict) -> RegimeModel:
    """Build a model from a schema-1 configuration dictionary."""
    if cfg.get("schema") != 1:
        raise ConfigError(f"unsupported schema {cfg.get('schema')!r}, expected 1")
    for key in ("horizon", "dims", "generator", "cones", "regimes"):
        if key not in cfg:
            raise ConfigError(f"missing config key {key!r}")
    dims = cfg["dims"]
    for d in ("n1", "n2", "m1", "m2"):
        if d not in dims:
            raise ConfigError(f"missing dims key {d!r}")
    rows = cfg.get("jump_atoms", [])
    if rows:
        rows = [list(map(float, r)) for r in rows]
        width = len(rows[0])
        if width < 2 or any(len(r) != width for r in rows):
            raise ConfigError("jump_atoms rows must be [mark..., weight] of equal length")
        try:
            nu = JumpMeasure([r[:-1] for r in rows], [r[-1] for r in rows])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        nu = JumpMeasure.empty()
    n_atoms = nu.n_atoms
    cones = cfg["cones"]
    cone1 = cone_from_config(cones["pi1"], int(dims["m1"]))
    cone2 = cone_from_config(cones["pi2"], int(dims["m2"]))
    regimes = []
    for idx, reg_cfg in enumerate(cfg["regimes"]):
        if "G" not in reg_cfg:
            raise ConfigError(f"regime {idx + 1}: missing terminal weight G")
        tables = {k: v for k, v in reg_cfg.items() if k != "G"}
        try:
            regimes.append(
                RegimeCoefficients(tables, float(reg_cfg["G"]), dims, n_atoms)
            )
        except ConfigError as exc:
            raise ConfigError(f"regime {idx + 1}: {exc}") from None
    return RegimeModel(
        horizon=cfg["horizon"],
        dims=dims,
        generator=cfg["generator"],
        nu=nu,
        cone1=cone1,
        cone2=cone2,
        regimes=regimes,
    )


def flags_from_config(cfg: dict) -> CaseFlags | None:
    """Read the optional ``flags`` block of a config, if present."""
    block = cfg.get("flags")
    if block is None:
        return None
    case = block.get("case", "standard")
    delta = float(block.get("delta", 1.0))
    if case == "standard":
        return CaseFlags(standard=True, delta=delta)
    if case in SINGULAR_CASES:
        return CaseFlags(singular_case=case, delta=delta)
    raise ConfigError(f"flags.case must be 'standard' or one of {SINGULAR_CASES}")


def load_model(path) -> tuple[RegimeModel, CaseFlags | None]:
    """Load (model, default flags) from a JSON configuration file."""
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return model_from_config(cfg), flags_from_config(cfg)
