"""cvswap/modes - Heisenberg-Picture Mode Algebra

The `modes` module keeps exact bookkeeping of quadrature operators under the
linear-optics operations an entanglement-swapping network is built from:
squeezers, 50:50 beamsplitters, inefficient homodyne detections and
outcome-conditioned displacements.

Every quadrature is a `QuadExpr`, a linear combination of vacuum basis
quadratures, measurement outcome symbols, input symbols and a constant. A
homodyne detection does not collapse anything. It records the measured
operator under a fresh outcome symbol and consumes the mode. Displacements
then refer to that symbol, and `ModeRegister.resolve()` substitutes the
recorded operators back in, which yields the final operator in terms of
vacuum and input quadratures only.

Variances follow the vacuum convention Var(x) = Var(p) = 1/4.
"""

# pylint: disable=invalid-name,too-few-public-methods

import enum
import math
from dataclasses import dataclass
from typing import Dict, List, Optional


ZERO_THRESHOLD = 1e-15
TOLERANCE = 1e-12
VACUUM_VARIANCE = 0.25


class QuadKind(enum.Enum):
    """Quadrature kind of an expression or a detection"""

    X = "x"
    P = "p"

    @property
    def conjugate(self):
        return QuadKind.P if self is QuadKind.X else QuadKind.X


def _canonical(terms) -> Dict:
    return {key: float(value) for key, value in terms.items() if abs(value) > ZERO_THRESHOLD}


def _merged(left, right, factor):
    merged = dict(left)
    for key, value in right.items():
        merged[key] = merged.get(key, 0.0) + factor * value
    return merged


class QuadExpr:
    """Linear combination of vacuum, outcome and input symbols

    Vacuum terms are keyed by basis index into the ledger of the expression's
    own kind, outcome and input terms by symbol id. Coefficients with a
    magnitude at or below `ZERO_THRESHOLD` are never stored.
    """

    __slots__ = ("kind", "vacuum_terms", "outcome_terms", "input_terms", "constant")

    def __init__(
        self,
        kind: QuadKind,
        vacuum_terms: Optional[Dict[int, float]] = None,
        outcome_terms: Optional[Dict[str, float]] = None,
        input_terms: Optional[Dict[str, float]] = None,
        constant: float = 0.0,
    ):
        self.kind = kind
        self.vacuum_terms = _canonical(vacuum_terms or {})
        self.outcome_terms = _canonical(outcome_terms or {})
        self.input_terms = _canonical(input_terms or {})
        self.constant = float(constant) if abs(constant) > ZERO_THRESHOLD else 0.0

    @classmethod
    def zero(cls, kind: QuadKind):
        return cls(kind)

    def _combine(self, other, factor):
        if isinstance(other, (int, float)):
            return QuadExpr(
                self.kind,
                self.vacuum_terms,
                self.outcome_terms,
                self.input_terms,
                self.constant + factor * other,
            )
        if not isinstance(other, QuadExpr):
            return NotImplemented
        if other.kind is not self.kind:
            raise ValueError(f"Cannot combine {self.kind.value} and {other.kind.value} quadratures")
        return QuadExpr(
            self.kind,
            _merged(self.vacuum_terms, other.vacuum_terms, factor),
            _merged(self.outcome_terms, other.outcome_terms, factor),
            _merged(self.input_terms, other.input_terms, factor),
            self.constant + factor * other.constant,
        )

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self)._combine(other, 1.0)

    def scaled(self, factor: float):
        """Return this expression with every term multiplied by @factor"""
        return QuadExpr(
            self.kind,
            {k: factor * v for k, v in self.vacuum_terms.items()},
            {k: factor * v for k, v in self.outcome_terms.items()},
            {k: factor * v for k, v in self.input_terms.items()},
            factor * self.constant,
        )

    def __mul__(self, factor):
        if not isinstance(factor, (int, float)):
            return NotImplemented
        return self.scaled(factor)

    __rmul__ = __mul__

    def __truediv__(self, divisor):
        if not isinstance(divisor, (int, float)):
            return NotImplemented
        return self.scaled(1.0 / divisor)

    def __neg__(self):
        return self.scaled(-1.0)

    def __eq__(self, other):
        if not isinstance(other, QuadExpr):
            return NotImplemented
        return (
            self.kind is other.kind
            and self.vacuum_terms == other.vacuum_terms
            and self.outcome_terms == other.outcome_terms
            and self.input_terms == other.input_terms
            and self.constant == other.constant
        )

    __hash__ = None

    @property
    def is_resolved(self) -> bool:
        return not self.outcome_terms

    def approx_equal(self, other, tol: float = TOLERANCE) -> bool:
        """Term-by-term comparison with absolute tolerance @tol"""

        if self.kind is not other.kind:
            return False
        for mine, theirs in (
            (self.vacuum_terms, other.vacuum_terms),
            (self.outcome_terms, other.outcome_terms),
            (self.input_terms, other.input_terms),
        ):
            for key in set(mine) | set(theirs):
                if abs(mine.get(key, 0.0) - theirs.get(key, 0.0)) > tol:
                    return False
        return abs(self.constant - other.constant) <= tol

    def __repr__(self):
        return (
            f"QuadExpr({self.kind.name}, vacuum={self.vacuum_terms}, "
            f"outcomes={self.outcome_terms}, inputs={self.input_terms}, "
            f"constant={self.constant})"
        )


def vacuum_variance(expr: QuadExpr) -> float:
    """Variance of a resolved expression

    Outcome symbols must have been substituted already. Input symbols are
    classical unknown means and do not contribute.
    """

    if not expr.is_resolved:
        raise ValueError("Variance requires a resolved expression")
    return VACUUM_VARIANCE * math.fsum(c * c for c in expr.vacuum_terms.values())


class DeadModeError(RuntimeError):
    """Operation on a mode that was consumed by a detection"""


class Mode:
    """Optical mode as a pair of quadrature expressions"""

    def __init__(self, x: QuadExpr, p: QuadExpr, label: str):
        self.x = x
        self.p = p
        self.label = label
        self.alive = True

    def quadrature(self, kind: QuadKind) -> QuadExpr:
        return self.x if kind is QuadKind.X else self.p


@dataclass(frozen=True)
class OutcomeRecord:
    """Homodyne result: its symbol, kind and the operator that was measured"""

    id: str
    kind: QuadKind
    defining_expr: QuadExpr


class ModeRegister:
    """Live optical modes, vacuum basis ledgers and recorded outcomes

    A register is a single-owner mutable object. Parameter sweeps create one
    register per parameter point.
    """

    def __init__(self):
        self.modes: List[Mode] = []
        self.outcomes: Dict[str, OutcomeRecord] = {}
        self.inputs: List[str] = []
        self._labels: Dict[QuadKind, List[str]] = {QuadKind.X: [], QuadKind.P: []}

    def basis_count(self, kind: QuadKind) -> int:
        return len(self._labels[kind])

    def basis_label(self, kind: QuadKind, index: int) -> str:
        return self._labels[kind][index]

    def _new_basis(self, kind: QuadKind, label: str) -> int:
        if label in self._labels[kind]:
            raise ValueError(f"Duplicate {kind.value} basis label: {label}")
        self._labels[kind].append(label)
        return len(self._labels[kind]) - 1

    def _mode(self, mode: int) -> Mode:
        if not 0 <= mode < len(self.modes):
            raise ValueError(f"Unknown mode: {mode}")
        entry = self.modes[mode]
        if not entry.alive:
            raise DeadModeError(f"Mode {mode} ({entry.label}) has been measured")
        return entry

    def _assign(self, entry: Mode, kind: QuadKind, expr: QuadExpr):
        # X and P ledgers never mix.
        assert expr.kind is kind
        assert all(0 <= i < self.basis_count(kind) for i in expr.vacuum_terms)
        assert all(o in self.outcomes for o in expr.outcome_terms)
        if kind is QuadKind.X:
            entry.x = expr
        else:
            entry.p = expr

    def quadrature(self, mode: int, kind: QuadKind) -> QuadExpr:
        """Current expression of the @kind quadrature of a live mode"""
        return self._mode(mode).quadrature(kind)

    def add_vacuum_mode(self, label: Optional[str] = None) -> int:
        """Add a vacuum mode with one fresh basis entry per quadrature"""

        if label is None:
            label = f"v{len(self.modes)}"
        ix = self._new_basis(QuadKind.X, label)
        ip = self._new_basis(QuadKind.P, label)
        self.modes.append(Mode(
            QuadExpr(QuadKind.X, vacuum_terms={ix: 1.0}),
            QuadExpr(QuadKind.P, vacuum_terms={ip: 1.0}),
            label,
        ))
        return len(self.modes) - 1

    def add_input_mode(self, label: str = "in") -> int:
        """Add a coherent input mode

        Each quadrature is an input symbol, carrying the unknown coherent
        amplitude, plus a fresh vacuum entry carrying its quantum noise. The
        symbols are named `x_<label>` and `p_<label>`.
        """

        mode = self.add_vacuum_mode(label)
        entry = self.modes[mode]
        for kind in QuadKind:
            symbol = f"{kind.value}_{label}"
            self.inputs.append(symbol)
            expr = entry.quadrature(kind) + QuadExpr(kind, input_terms={symbol: 1.0})
            self._assign(entry, kind, expr)
        return mode

    def squeeze(self, mode: int, r: float):
        """x -> e^{+r} x, p -> e^{-r} p"""

        entry = self._mode(mode)
        self._assign(entry, QuadKind.X, entry.x.scaled(math.exp(r)))
        self._assign(entry, QuadKind.P, entry.p.scaled(math.exp(-r)))

    def beamsplitter_5050(self, a: int, b: int):
        """a -> (a+b)/sqrt(2), b -> (a-b)/sqrt(2) on both quadratures"""

        if a == b:
            raise ValueError(f"Beamsplitter needs two distinct modes, got {a} twice")
        first = self._mode(a)
        second = self._mode(b)
        for kind in QuadKind:
            qa = first.quadrature(kind)
            qb = second.quadrature(kind)
            self._assign(first, kind, (qa + qb) / math.sqrt(2))
            self._assign(second, kind, (qa - qb) / math.sqrt(2))

    def homodyne(self, mode: int, kind: QuadKind, eta: float = 1.0, name: Optional[str] = None) -> str:
        """Detect the @kind quadrature of @mode with amplitude efficiency @eta

        The recorded operator is the measured quadrature plus
        sqrt(eta^-2 - 1) times a fresh vacuum entry of the same kind. The whole
        mode is consumed. Returns the outcome id.
        """

        if not 0.0 < eta <= 1.0:
            raise ValueError(f"Detector efficiency must lie in (0, 1]: {eta}")
        entry = self._mode(mode)
        if name is None:
            name = f"m{len(self.outcomes)}"
        if name in self.outcomes:
            raise ValueError(f"Duplicate outcome name: {name}")

        measured = self.resolve(entry.quadrature(kind))
        noise = self._new_basis(kind, f"n({name})")
        measured = measured + QuadExpr(kind, vacuum_terms={noise: math.sqrt(eta ** -2 - 1.0)})

        self.outcomes[name] = OutcomeRecord(name, kind, measured)
        entry.alive = False
        return name

    def displace(self, mode: int, kind: QuadKind, outcome: str, gain: float):
        """Add gain * outcome to the @kind quadrature of @mode"""

        entry = self._mode(mode)
        record = self.outcomes.get(outcome)
        if record is None:
            raise ValueError(f"Unknown outcome: {outcome}")
        if record.kind is not kind:
            raise ValueError(
                f"Outcome {outcome} is a {record.kind.value} result, cannot displace {kind.value}"
            )
        shifted = entry.quadrature(kind) + QuadExpr(kind, outcome_terms={outcome: gain})
        self._assign(entry, kind, shifted)

    def resolve(self, expr: QuadExpr) -> QuadExpr:
        """Substitute every outcome symbol by its recorded operator"""

        resolved = QuadExpr(expr.kind, expr.vacuum_terms, None, expr.input_terms, expr.constant)
        for outcome, coefficient in expr.outcome_terms.items():
            record = self.outcomes.get(outcome)
            if record is None:
                raise ValueError(f"Unknown outcome: {outcome}")
            resolved = resolved + record.defining_expr.scaled(coefficient)
        return resolved

    def variance(self, expr: QuadExpr) -> float:
        return vacuum_variance(self.resolve(expr))

    def covariance(self, first: QuadExpr, second: QuadExpr) -> float:
        """Symmetrised covariance; X and P expressions never correlate"""

        if first.kind is not second.kind:
            return 0.0
        a = self.resolve(first).vacuum_terms
        b = self.resolve(second).vacuum_terms
        return VACUUM_VARIANCE * math.fsum(a[i] * b[i] for i in set(a) & set(b))

    def labelled(self, expr: QuadExpr) -> Dict[str, float]:
        """Resolved vacuum coefficients keyed by basis label"""

        resolved = self.resolve(expr)
        return {
            self.basis_label(expr.kind, index): coefficient
            for index, coefficient in resolved.vacuum_terms.items()
        }

    def symplectic_form(self, mode: int) -> float:
        """Sum over labels of x-coefficient times p-coefficient

        Equals 1 for any mode evolved only by squeezers and beamsplitters.
        """

        x = self.labelled(self.quadrature(mode, QuadKind.X))
        p = self.labelled(self.quadrature(mode, QuadKind.P))
        return math.fsum(x[label] * p[label] for label in set(x) & set(p))

    def format(self, expr: QuadExpr) -> str:
        """Deterministic rendering, terms sorted by basis index then symbol"""

        terms = [
            (expr.vacuum_terms[index], f"{expr.kind.value}0[{self.basis_label(expr.kind, index)}]")
            for index in sorted(expr.vacuum_terms)
        ]
        terms += [(expr.input_terms[s], s) for s in sorted(expr.input_terms)]
        terms += [(expr.outcome_terms[s], s) for s in sorted(expr.outcome_terms)]

        parts = [f"{coefficient:+.12g}*{symbol}" for coefficient, symbol in terms]
        if expr.constant:
            parts.append(f"{expr.constant:+.12g}")
        return " ".join(parts) if parts else "0"


def new_register() -> ModeRegister:
    return ModeRegister()


def test_new_register_counts():
    reg = new_register()
    assert len(reg.modes) == 0
    assert not reg.outcomes
    reg.add_vacuum_mode()
    reg.add_vacuum_mode()
    assert reg.basis_count(QuadKind.X) == 2
    assert reg.basis_count(QuadKind.P) == 2


def test_vacuum_mode_statistics():
    reg = ModeRegister()
    a = reg.add_vacuum_mode()
    b = reg.add_vacuum_mode()
    assert reg.variance(reg.quadrature(a, QuadKind.X)) == 0.25
    assert reg.variance(reg.quadrature(a, QuadKind.P)) == 0.25
    assert reg.covariance(reg.quadrature(a, QuadKind.X), reg.quadrature(b, QuadKind.X)) == 0.0
    assert reg.quadrature(a, QuadKind.X).vacuum_terms == {0: 1.0}


def test_squeeze():
    reg = ModeRegister()
    m = reg.add_vacuum_mode()
    x0 = reg.quadrature(m, QuadKind.X)
    p0 = reg.quadrature(m, QuadKind.P)

    reg.squeeze(m, 0.0)
    assert reg.quadrature(m, QuadKind.X) == x0

    reg.squeeze(m, 1.0)
    assert abs(reg.variance(reg.quadrature(m, QuadKind.X)) - math.exp(2) / 4) < 1e-12
    assert abs(reg.variance(reg.quadrature(m, QuadKind.P)) - math.exp(-2) / 4) < 1e-12

    reg.squeeze(m, -1.0)
    assert reg.quadrature(m, QuadKind.X).approx_equal(x0)
    assert reg.quadrature(m, QuadKind.P).approx_equal(p0)


def test_beamsplitter():
    reg = ModeRegister()
    a = reg.add_vacuum_mode("1")
    b = reg.add_vacuum_mode("2")
    xa = reg.quadrature(a, QuadKind.X)

    reg.beamsplitter_5050(a, b)
    for m in (a, b):
        for kind in QuadKind:
            assert abs(reg.variance(reg.quadrature(m, kind)) - 0.25) < 1e-12
    assert abs(reg.covariance(reg.quadrature(a, QuadKind.X), reg.quadrature(b, QuadKind.X))) < 1e-12

    reg.beamsplitter_5050(a, b)
    assert reg.quadrature(a, QuadKind.X).approx_equal(xa)

    try:
        reg.beamsplitter_5050(a, a)
        assert False, "identical ports accepted"
    except ValueError:
        pass


def test_epr_coefficients():
    r = 0.7
    reg = ModeRegister()
    a = reg.add_vacuum_mode("1")
    b = reg.add_vacuum_mode("2")
    reg.squeeze(a, r)
    reg.squeeze(b, -r)
    reg.beamsplitter_5050(a, b)
    s = math.sqrt(2)

    assert reg.quadrature(a, QuadKind.X).approx_equal(
        QuadExpr(QuadKind.X, {0: math.exp(r) / s, 1: math.exp(-r) / s}))
    assert reg.quadrature(a, QuadKind.P).approx_equal(
        QuadExpr(QuadKind.P, {0: math.exp(-r) / s, 1: math.exp(r) / s}))
    assert reg.quadrature(b, QuadKind.X).approx_equal(
        QuadExpr(QuadKind.X, {0: math.exp(r) / s, 1: -math.exp(-r) / s}))
    assert reg.quadrature(b, QuadKind.P).approx_equal(
        QuadExpr(QuadKind.P, {0: math.exp(-r) / s, 1: -math.exp(r) / s}))

    assert abs(reg.symplectic_form(a) - 1.0) < 1e-12
    assert abs(reg.symplectic_form(b) - 1.0) < 1e-12


def test_homodyne():
    reg = ModeRegister()
    m = reg.add_vacuum_mode()
    ideal = reg.homodyne(m, QuadKind.X, 1.0)
    assert reg.outcomes[ideal].defining_expr == QuadExpr(QuadKind.X, {0: 1.0})
    assert reg.outcomes[ideal].kind is QuadKind.X

    try:
        reg.squeeze(m, 0.1)
        assert False, "measured mode accepted"
    except DeadModeError:
        pass

    n = reg.add_vacuum_mode()
    lossy = reg.homodyne(n, QuadKind.X, math.sqrt(0.99))
    variance = vacuum_variance(reg.outcomes[lossy].defining_expr)
    assert abs(variance - 1 / (4 * 0.99)) < 1e-12

    k = reg.add_vacuum_mode()
    for eta in (0.0, 1.5, -0.2):
        try:
            reg.homodyne(k, QuadKind.P, eta)
            assert False, "invalid efficiency accepted"
        except ValueError:
            pass


def test_displace_and_resolve():
    reg = ModeRegister()
    src = reg.add_vacuum_mode("a")
    dst = reg.add_vacuum_mode("b")
    before = reg.quadrature(dst, QuadKind.X)
    outcome = reg.homodyne(src, QuadKind.X, name="x_a")

    reg.displace(dst, QuadKind.X, outcome, 0.0)
    assert reg.quadrature(dst, QuadKind.X) == before

    reg.displace(dst, QuadKind.X, outcome, 0.25)
    reg.displace(dst, QuadKind.X, outcome, 0.5)
    assert reg.quadrature(dst, QuadKind.X).outcome_terms == {"x_a": 0.75}

    resolved = reg.resolve(reg.quadrature(dst, QuadKind.X))
    assert resolved.is_resolved
    assert reg.labelled(resolved) == {"a": 0.75, "b": 1.0}
    assert reg.resolve(resolved) == resolved

    try:
        reg.displace(dst, QuadKind.P, outcome, 1.0)
        assert False, "kind mismatch accepted"
    except ValueError:
        pass
    try:
        reg.displace(dst, QuadKind.X, "nope", 1.0)
        assert False, "unknown outcome accepted"
    except ValueError:
        pass


def test_input_mode():
    reg = ModeRegister()
    m = reg.add_input_mode()
    x = reg.quadrature(m, QuadKind.X)
    assert x.input_terms == {"x_in": 1.0}
    assert reg.variance(x) == 0.25
    assert reg.inputs == ["x_in", "p_in"]


def test_mixing_kinds():
    x = QuadExpr(QuadKind.X, {0: 1.0})
    p = QuadExpr(QuadKind.P, {0: 1.0})
    try:
        _ = x + p
        assert False, "mixed kinds accepted"
    except ValueError:
        pass


def test_linearity():
    reg = ModeRegister()
    a = reg.add_vacuum_mode()
    b = reg.add_vacuum_mode()
    reg.squeeze(a, 0.4)
    reg.beamsplitter_5050(a, b)
    single = reg.quadrature(b, QuadKind.X)

    reg2 = ModeRegister()
    a2 = reg2.add_vacuum_mode()
    b2 = reg2.add_vacuum_mode()
    reg2._assign(reg2.modes[a2], QuadKind.X, reg2.quadrature(a2, QuadKind.X) * 2.0)
    reg2.squeeze(a2, 0.4)
    reg2.beamsplitter_5050(a2, b2)
    doubled = reg2.quadrature(b2, QuadKind.X)
    assert abs(doubled.vacuum_terms[0] - 2 * single.vacuum_terms[0]) < 1e-15
    assert abs(doubled.vacuum_terms[1] - single.vacuum_terms[1]) < 1e-15


def test_format():
    reg = ModeRegister()
    a = reg.add_vacuum_mode("1")
    b = reg.add_vacuum_mode("2")
    reg.beamsplitter_5050(a, b)
    assert reg.format(reg.quadrature(b, QuadKind.X)) == "+0.707106781187*x0[1] -0.707106781187*x0[2]"

    m = reg.add_input_mode()
    out = reg.homodyne(a, QuadKind.P, name="p_v")
    reg.displace(m, QuadKind.P, out, 2.0)
    expr = reg.quadrature(m, QuadKind.P) + 0.5
    assert reg.format(expr) == "+1*p0[in] +1*p_in +2*p_v +0.5"
    assert reg.format(QuadExpr.zero(QuadKind.X)) == "0"
