"""Exact linear programming over the rationals.

Two-phase tableau simplex (Dantzig pricing with a Bland fallback). Every outcome carries a
certificate that can be re-checked by plain substitution:

* ``optimal``: primal point plus row multipliers and reduced costs whose
  dual objective equals the primal objective;
* ``infeasible``: a Farkas combination of rows and bounds reading ``0 <= c``
  with ``c < 0``;
* ``unbounded``: a feasible point and a recession direction improving the
  objective.

The public surface speaks :class:`fractions.Fraction`; the pivoting kernel
runs on ``gmpy2.mpq`` (exact, always reduced) purely for speed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from gmpy2 import mpq

LE, EQ, GE = "<=", "==", ">="
RELATIONS = (LE, EQ, GE)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpInputError(ValueError):
    """Malformed linear program (dimension mismatch, bad relation, ...)."""


class CertificateError(RuntimeError):
    """A certificate produced by the solver failed its own re-check."""


def as_rational(x) -> Fraction:
    """Convert ints, Fractions, mpq and ``"p/q"`` / decimal strings exactly.

    Floats are refused: silently importing binary rounding is exactly what
    this package exists to avoid.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not an exact rational: {x!r}") from exc
    if type(x).__name__ == "mpq":
        return Fraction(int(x.numerator), int(x.denominator))
    if isinstance(x, float):
        raise TypeError(f"floating point value {x!r} refused; pass a string or Fraction")
    raise TypeError(f"cannot interpret {x!r} as a rational")


def fmt(x: Fraction) -> str:
    """Canonical text form: ``"p/q"`` or ``"p"``."""
    x = as_rational(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _q(x) -> mpq:
    return x if type(x) is mpq else mpq(as_rational(x))


def _f(x: mpq) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple
    relation: str
    rhs: Fraction

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise LpInputError(f"unknown relation {self.relation!r}")
        object.__setattr__(self, "coeffs", tuple(as_rational(a) for a in self.coeffs))
        object.__setattr__(self, "rhs", as_rational(self.rhs))

    def lhs(self, x: Sequence[Fraction]) -> Fraction:
        return sum((a * v for a, v in zip(self.coeffs, x) if a), Fraction(0))

    def satisfied_by(self, x: Sequence[Fraction]) -> bool:
        v = self.lhs(x)
        if self.relation == LE:
            return v <= self.rhs
        if self.relation == GE:
            return v >= self.rhs
        return v == self.rhs


def le(coeffs, rhs) -> Constraint:
    return Constraint(tuple(coeffs), LE, rhs)


def ge(coeffs, rhs) -> Constraint:
    return Constraint(tuple(coeffs), GE, rhs)


def eq(coeffs, rhs) -> Constraint:
    return Constraint(tuple(coeffs), EQ, rhs)


@dataclass(frozen=True)
class LinearProgram:
    """``min``/``max`` of ``objective . x`` subject to rows and bounds.

    ``bounds`` holds one ``(lower, upper)`` pair per variable, ``None``
    meaning unbounded on that side. When omitted every variable is free.
    """

    objective: tuple
    constraints: tuple = ()
    sense: str = "min"
    bounds: Optional[tuple] = None

    def __post_init__(self):
        obj = tuple(as_rational(c) for c in self.objective)
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        n = len(obj)
        if self.sense not in ("min", "max"):
            raise LpInputError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for i, row in enumerate(self.constraints):
            if not isinstance(row, Constraint):
                raise LpInputError(f"row {i} is not a Constraint")
            if len(row.coeffs) != n:
                raise LpInputError(
                    f"row {i} has {len(row.coeffs)} coefficients, objective has {n}")
        if self.bounds is None:
            bounds = ((None, None),) * n
        else:
            if len(self.bounds) != n:
                raise LpInputError(f"{len(self.bounds)} bounds for {n} variables")
            bounds = tuple(
                (None if lo is None else as_rational(lo), None if hi is None else as_rational(hi))
                for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def objective_value(self, x: Sequence[Fraction]) -> Fraction:
        return sum((c * v for c, v in zip(self.objective, x) if c), Fraction(0))

    def is_feasible(self, x: Sequence[Fraction]) -> bool:
        if len(x) != self.num_vars:
            return False
        for v, (lo, hi) in zip(x, self.bounds):
            if lo is not None and v < lo:
                return False
            if hi is not None and v > hi:
                return False
        return all(row.satisfied_by(x) for row in self.constraints)


@dataclass(frozen=True)
class LpOutcome:
    """Result of :func:`solve`.

    For ``optimal`` outcomes ``duals`` are row multipliers in the problem's
    own sense (``objective = sum duals[i] * row_i + reduced``) and
    ``reduced`` are the bound multipliers. For ``infeasible`` outcomes
    ``farkas`` / ``farkas_bounds`` weight rows and variable bounds (lower
    bound rows read ``x_j >= l_j``, upper ``x_j <= u_j``). For ``unbounded``
    outcomes ``x`` is feasible and ``ray`` is an improving direction.
    """

    status: str
    x: Optional[tuple] = None
    value: Optional[Fraction] = None
    duals: Optional[tuple] = None
    reduced: Optional[tuple] = None
    farkas: Optional[tuple] = None
    farkas_bounds: Optional[tuple] = None
    ray: Optional[tuple] = None
    pivots: int = field(default=0, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def infeasible(self) -> bool:
        return self.status == INFEASIBLE


# --------------------------------------------------------------------------
# certificate checks (pure substitution, no solver state)
# --------------------------------------------------------------------------

def verify_optimal(lp: LinearProgram, out: LpOutcome) -> bool:
    """Primal feasibility, dual feasibility and equal objectives, exactly."""
    if out.status != OPTIMAL or out.x is None or out.duals is None or out.reduced is None:
        return False
    x = out.x
    if not lp.is_feasible(x) or lp.objective_value(x) != out.value:
        return False
    n, rows = lp.num_vars, lp.constraints
    if len(out.duals) != len(rows) or len(out.reduced) != n:
        return False
    # in min form: >= rows carry y >= 0, <= rows y <= 0; max flips the signs
    flip = 1 if lp.sense == "min" else -1
    for y, row in zip(out.duals, rows):
        if row.relation == GE and flip * y < 0:
            return False
        if row.relation == LE and flip * y > 0:
            return False
    dual_value = sum((y * row.rhs for y, row in zip(out.duals, rows)), Fraction(0))
    for j in range(n):
        combo = sum((y * row.coeffs[j] for y, row in zip(out.duals, rows) if y), Fraction(0))
        r = out.reduced[j]
        if combo + r != lp.objective[j]:
            return False
        lo, hi = lp.bounds[j]
        if flip * r > 0:
            if lo is None:
                return False
            dual_value += r * lo
        elif flip * r < 0:
            if hi is None:
                return False
            dual_value += r * hi
    return dual_value == out.value


def verify_farkas(lp_or_rows, out: LpOutcome, bounds=None) -> bool:
    """Check ``sum w_i row_i + bound terms == 0`` and ``sum w_i rhs_i < 0``."""
    if isinstance(lp_or_rows, LinearProgram):
        rows, bounds = lp_or_rows.constraints, lp_or_rows.bounds
    else:
        rows = tuple(lp_or_rows)
    if out.status != INFEASIBLE or out.farkas is None:
        return False
    w = out.farkas
    if len(w) != len(rows):
        return False
    n = len(rows[0].coeffs) if rows else len(bounds or ())
    if bounds is None:
        bounds = ((None, None),) * n
    for wi, row in zip(w, rows):
        if row.relation == LE and wi < 0:
            return False
        if row.relation == GE and wi > 0:
            return False
    total = [Fraction(0)] * n
    rhs = Fraction(0)
    for wi, row in zip(w, rows):
        if wi:
            for j, a in enumerate(row.coeffs):
                total[j] += wi * a
            rhs += wi * row.rhs
    fb = out.farkas_bounds or tuple((Fraction(0), Fraction(0)) for _ in range(n))
    if len(fb) != n:
        return False
    for j, (wl, wu) in enumerate(fb):
        lo, hi = bounds[j]
        if wl:
            if wl > 0 or lo is None:
                return False
            total[j] += wl
            rhs += wl * lo
        if wu:
            if wu < 0 or hi is None:
                return False
            total[j] += wu
            rhs += wu * hi
    return all(t == 0 for t in total) and rhs < 0


def verify_unbounded(lp: LinearProgram, out: LpOutcome) -> bool:
    if out.status != UNBOUNDED or out.ray is None or out.x is None:
        return False
    if not lp.is_feasible(out.x):
        return False
    d = out.ray
    for row in lp.constraints:
        v = row.lhs(d)
        if (row.relation == LE and v > 0) or (row.relation == GE and v < 0) or (
                row.relation == EQ and v != 0):
            return False
    for dj, (lo, hi) in zip(d, lp.bounds):
        if (lo is not None and dj < 0) or (hi is not None and dj > 0):
            return False
    gain = lp.objective_value(d)
    return gain < 0 if lp.sense == "min" else gain > 0


def verify(lp: LinearProgram, out: LpOutcome) -> bool:
    if out.status == OPTIMAL:
        return verify_optimal(lp, out)
    if out.status == INFEASIBLE:
        return verify_farkas(lp, out)
    return verify_unbounded(lp, out)


# --------------------------------------------------------------------------
# the kernel
# --------------------------------------------------------------------------

class _Tableau:
    """Dense tableau ``[A | b]`` over mpq with a reduced-cost row."""

    def __init__(self, rows, rhs, init_basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = list(init_basis)
        self.ncols = len(rows[0]) if rows else 0
        self.pivots = 0

    def pivot(self, r, c, cost_rows):
        row = self.rows[r]
        p = row[c]
        if p != 1:
            inv = 1 / p
            for j in range(self.ncols):
                if row[j]:
                    row[j] *= inv
            self.rhs[r] *= inv
        nz = [j for j in range(self.ncols) if row[j]]
        br = self.rhs[r]
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
                self.rhs[i] -= f * br
        for cr in cost_rows:
            f = cr[0][c]
            if f:
                d = cr[0]
                for j in nz:
                    d[j] -= f * row[j]
                cr[1] -= f * br
        self.basis[r] = c
        self.pivots += 1

    def run(self, cost, allowed):
        """Simplex iterations on reduced costs ``cost = [d, -z]``. Returns the
        entering column of an unbounded ray, or ``None`` at optimality."""
        d = cost[0]
        stall = 0           # consecutive degenerate pivots
        while True:
            enter = -1
            if stall < self.STALL_LIMIT:
                best = 0
                for j in range(self.ncols):
                    if allowed[j] and d[j] < best:
                        enter, best = j, d[j]
            else:
                for j in range(self.ncols):
                    if allowed[j] and d[j] < 0:
                        enter = j
                        break
            if enter < 0:
                return None
            best_r, best_ratio = -1, None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if (best_ratio is None or ratio < best_ratio
                            or (ratio == best_ratio and self.basis[i] < self.basis[best_r])):
                        best_r, best_ratio = i, ratio
            if best_r < 0:
                return enter
            stall = stall + 1 if best_ratio == 0 else 0
            self.pivot(best_r, enter, [cost] + self._extra)

    _extra: list = []
    # Dantzig pricing until this many degenerate pivots in a row, then Bland's
    # rule (which cannot cycle) for the rest of the phase.
    STALL_LIMIT = 50


def solve(lp: LinearProgram) -> LpOutcome:
    """Solve ``lp`` exactly; the returned certificate is re-verified."""
    out = _solve(lp)
    if not verify(lp, out):
        raise CertificateError(f"simplex produced an unverifiable {out.status} certificate")
    return out


def _solve(lp: LinearProgram) -> LpOutcome:
    n = lp.num_vars
    zero = mpq(0)
    # variable substitution x_j = shift_j + sum(sign * y_k)
    shift = []
    cols_of = []          # per original var: list of (std col, sign)
    ncols = 0
    extra_rows = []       # (std col, bound) for y <= u - l
    for lo, hi in lp.bounds:
        if lo is not None:
            shift.append(_q(lo))
            cols_of.append([(ncols, 1)])
            if hi is not None:
                if hi < lo:
                    return _trivial_bound_infeasible(lp)
                extra_rows.append((ncols, _q(hi) - _q(lo), len(shift) - 1))
            ncols += 1
        elif hi is not None:
            shift.append(_q(hi))
            cols_of.append([(ncols, -1)])
            ncols += 1
        else:
            shift.append(zero)
            cols_of.append([(ncols, 1), (ncols + 1, -1)])
            ncols += 2
    nstruct = ncols

    specs = []  # (dense row over structural cols, relation, rhs)
    for row in lp.constraints:
        dense = [zero] * nstruct
        rhs = _q(row.rhs)
        for j, a in enumerate(row.coeffs):
            if a:
                qa = _q(a)
                rhs -= qa * shift[j]
                for col, sgn in cols_of[j]:
                    dense[col] += qa if sgn > 0 else -qa
        specs.append((dense, row.relation, rhs))
    for col, cap, _ in extra_rows:
        dense = [zero] * nstruct
        dense[col] = mpq(1)
        specs.append((dense, LE, cap))
    m = len(specs)

    nslack = sum(1 for _, rel, _ in specs if rel != EQ)
    slack_col = []
    c = nstruct
    for _, rel, _ in specs:
        if rel == EQ:
            slack_col.append(-1)
        else:
            slack_col.append(c)
            c += 1
    art_start = nstruct + nslack
    total = art_start + m

    rows, rhs, rowsign, init_basis, is_art_basis = [], [], [], [], []
    for i, (dense, rel, b) in enumerate(specs):
        r = dense + [zero] * (total - nstruct)
        if rel == LE:
            r[slack_col[i]] = mpq(1)
        elif rel == GE:
            r[slack_col[i]] = mpq(-1)
        s = 1
        if b < 0:
            s = -1
            r = [-v for v in r]
            b = -b
        rowsign.append(s)
        # a slack with +1 after normalisation can start in the basis
        if rel != EQ and r[slack_col[i]] == 1:
            init_basis.append(slack_col[i])
            is_art_basis.append(False)
        else:
            r[art_start + i] = mpq(1)
            init_basis.append(art_start + i)
            is_art_basis.append(True)
        rows.append(r)
        rhs.append(b)

    tab = _Tableau(rows, rhs, init_basis)
    tab._extra = []
    is_art = [False] * art_start + [True] * m

    # phase 1: minimise the sum of artificials in the basis
    d1 = [zero] * total
    z1 = zero
    for i in range(m):
        if is_art_basis[i]:
            d1[art_start + i] = mpq(1)
    for i in range(m):
        if is_art_basis[i]:
            for j, v in enumerate(rows[i]):
                if v:
                    d1[j] -= v
            z1 -= rhs[i]
    cost1 = [d1, z1]
    allowed1 = [True] * art_start + [False] * m
    # artificial columns never re-enter; their reduced costs still track B^-1
    tab.run(cost1, allowed1)
    w = -cost1[1]
    if w > 0:
        return _farkas_outcome(lp, cost1, init_basis, is_art_basis, rowsign, m,
                               [j for _, _, j in extra_rows], tab.pivots)

    # drive zero-level artificials out of the basis where possible
    for i in range(m):
        if is_art[tab.basis[i]]:
            row = tab.rows[i]
            for j in range(art_start):
                if row[j]:
                    tab.pivot(i, j, [cost1])
                    break

    # phase 2
    flip = 1 if lp.sense == "min" else -1
    cstd = [zero] * total
    for j, cols in enumerate(cols_of):
        cj = _q(lp.objective[j]) * flip
        if cj:
            for col, sgn in cols:
                cstd[col] += cj if sgn > 0 else -cj
    d2 = list(cstd)
    z2 = zero
    for i in range(m):
        cb = cstd[tab.basis[i]]
        if cb:
            for j, v in enumerate(tab.rows[i]):
                if v:
                    d2[j] -= cb * v
            z2 -= cb * tab.rhs[i]
    cost2 = [d2, z2]
    allowed2 = [True] * art_start + [False] * m
    enter = tab.run(cost2, allowed2)

    ystd_point = [zero] * total
    for i in range(m):
        ystd_point[tab.basis[i]] = tab.rhs[i]
    x = []
    for j in range(n):
        v = shift[j]
        for col, sgn in cols_of[j]:
            v += ystd_point[col] if sgn > 0 else -ystd_point[col]
        x.append(_f(v))

    if enter is not None:
        dir_std = [zero] * total
        dir_std[enter] = mpq(1)
        for i in range(m):
            dir_std[tab.basis[i]] = -tab.rows[i][enter]
        ray = []
        for j in range(n):
            v = zero
            for col, sgn in cols_of[j]:
                v += dir_std[col] if sgn > 0 else -dir_std[col]
            ray.append(_f(v))
        return LpOutcome(UNBOUNDED, x=tuple(x), ray=tuple(ray), pivots=tab.pivots)

    # duals: y_i = c_{b0(i)} - d_{b0(i)} with b0 the initial basic column of row i
    ystd = [cstd[init_basis[i]] - d2[init_basis[i]] for i in range(m)]
    nrows = len(lp.constraints)
    duals = []
    for i in range(nrows):
        duals.append(_f(ystd[i] * rowsign[i] * flip))
    reduced = []
    for j in range(n):
        cj = lp.objective[j]
        combo = sum((y * row.coeffs[j] for y, row in zip(duals, lp.constraints) if y),
                    Fraction(0))
        reduced.append(cj - combo)
    value = lp.objective_value(x)
    return LpOutcome(OPTIMAL, x=tuple(x), value=value, duals=tuple(duals),
                     reduced=tuple(reduced), pivots=tab.pivots)


def _farkas_outcome(lp, cost1, init_basis, is_art_basis, rowsign, m, cap_vars, pivots):
    d1 = cost1[0]
    # phase-1 duals: c1 of the initial basic column minus its reduced cost.
    # They satisfy y.A_std <= 0 columnwise and y.b_std > 0; negating and
    # undoing the row normalisation gives multipliers reading "0 <= c < 0".
    w_std = []
    for i in range(m):
        c1 = 1 if is_art_basis[i] else 0
        w_std.append(_f(-(c1 - d1[init_basis[i]]) * rowsign[i]))
    nrows = len(lp.constraints)
    w = w_std[:nrows]
    n = lp.num_vars
    upper = [Fraction(0)] * n
    for k, j in enumerate(cap_vars):
        upper[j] += w_std[nrows + k]
    fb = []
    for j in range(n):
        r = upper[j] + sum((wi * row.coeffs[j] for wi, row in zip(w, lp.constraints) if wi),
                           Fraction(0))
        lo, hi = lp.bounds[j]
        wl, wu = Fraction(0), upper[j]
        if r > 0:
            wl = -r
        elif r < 0:
            wu -= r
        fb.append((wl, wu))
    return LpOutcome(INFEASIBLE, farkas=tuple(w), farkas_bounds=tuple(fb), pivots=pivots)


def _trivial_bound_infeasible(lp: LinearProgram) -> LpOutcome:
    n = lp.num_vars
    fb = []
    for lo, hi in lp.bounds:
        if lo is not None and hi is not None and hi < lo and not any(b != (0, 0) for b in fb):
            fb.append((Fraction(-1), Fraction(1)))
        else:
            fb.append((Fraction(0), Fraction(0)))
    return LpOutcome(INFEASIBLE, farkas=tuple(Fraction(0) for _ in lp.constraints),
                     farkas_bounds=tuple(fb))


def feasibility(constraints: Iterable[Constraint], num_vars: Optional[int] = None,
                bounds=None) -> LpOutcome:
    """Zero-objective LP over ``constraints``; optimal iff feasible."""
    rows = tuple(constraints)
    if num_vars is None:
        if not rows:
            raise LpInputError("cannot infer dimension of an empty constraint list")
        num_vars = len(rows[0].coeffs)
    return solve(LinearProgram((0,) * num_vars, rows, "min", bounds))


def feasible_point(constraints: Iterable[Constraint], num_vars: Optional[int] = None,
                   bounds=None) -> Optional[tuple]:
    """A point satisfying every row, or ``None`` when a Farkas certificate
    proves there is none (see :func:`feasibility` for the certificate)."""
    out = feasibility(constraints, num_vars, bounds)
    return out.x if out.optimal else None
