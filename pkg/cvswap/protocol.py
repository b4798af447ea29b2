"""cvswap/protocol - Entanglement Swapping Networks

The `protocol` module assembles optical networks from the mode algebra:
two-mode squeezed (EPR) pairs from squeezed vacua, Claire's Bell detection
with Bob's conditional displacement (entanglement swapping), and Alice's
coherent-state teleportation through whatever link she shares with Bob.

Modes are numbered after the participants: mode 1 is Alice's, mode 4 Bob's,
modes 2 and 3 Claire's. The five reference scenarios compare teleportation
through directly produced entanglement against teleportation through the
output of entanglement swapping, see `Scenario`.
"""

# pylint: disable=invalid-name,too-few-public-methods

import dataclasses
import enum
import logging
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import criteria
from .modes import ModeRegister, QuadExpr, QuadKind


SQRT2 = math.sqrt(2.0)
ETA_SQ_LOSSY = 0.95
OVERRIDE_KEYS = ("g_swap", "g", "eta_c", "eta_a")


@dataclasses.dataclass(frozen=True)
class SwapParams:
    """Knobs of the swapping experiment

    Squeezing parameters are dimensionless, efficiencies are amplitude
    efficiencies in (0, 1].
    """

    r1: float = 0.0
    r2: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    g_swap: float = 1.0
    g: float = 1.0
    eta_c: float = 1.0
    eta_a: float = 1.0

    def __post_init__(self):
        for name in ("r1", "r2", "s1", "s2", "g_swap", "g"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Parameter {name} must be finite: {getattr(self, name)}")
        for name in ("eta_c", "eta_a"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"Efficiency {name} must lie in (0, 1]: {getattr(self, name)}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def swapped_sources(self):
        """The same experiment with the two EPR sources exchanged"""
        return self.replace(r1=self.s1, r2=self.s2, s1=self.r1, s2=self.r2)


@dataclasses.dataclass
class EprLink:
    """Register plus the two modes Alice and Bob hold"""

    register: ModeRegister
    alice_mode: int
    bob_mode: int


@dataclasses.dataclass
class SwapOutput(EprLink):
    claire_outcomes: Tuple[str, str] = ("x_u", "p_v")


@dataclasses.dataclass
class TeleportOutput:
    register: ModeRegister
    x_tel: QuadExpr
    p_tel: QuadExpr
    inputs: Tuple[str, str]


def make_epr_pair(register: ModeRegister, ra: float, rb: float, labels=(None, None)) -> Tuple[int, int]:
    """Two-mode squeezed vacuum from two squeezed vacua on a beamsplitter

    The first vacuum is squeezed with +ra (x anti-squeezed), the second with
    -rb (x squeezed).
    """

    a = register.add_vacuum_mode(labels[0])
    b = register.add_vacuum_mode(labels[1])
    register.squeeze(a, ra)
    register.squeeze(b, -rb)
    register.beamsplitter_5050(a, b)
    return a, b


def epr_link(r1: float, r2: float) -> EprLink:
    """Direct entanglement between Alice (mode 1) and Bob (mode 2)"""

    register = ModeRegister()
    alice, bob = make_epr_pair(register, r1, r2, ("1", "2"))
    return EprLink(register, alice, bob)


def _bell_stage(register, source, sender, receiver, gain, eta, names):
    # The sender port becomes u = (source - sender)/sqrt 2, the source port
    # v = (source + sender)/sqrt 2.
    register.beamsplitter_5050(source, sender)
    x_u = register.homodyne(sender, QuadKind.X, eta, names[0])
    p_v = register.homodyne(source, QuadKind.P, eta, names[1])
    register.displace(receiver, QuadKind.X, x_u, gain * SQRT2)
    register.displace(receiver, QuadKind.P, p_v, gain * SQRT2)
    return x_u, p_v


def entanglement_swap(params: SwapParams) -> SwapOutput:
    """Claire's Bell detection on modes 2 and 3, Bob's displacement of mode 4"""

    register = ModeRegister()
    m1, m2 = make_epr_pair(register, params.r1, params.r2, ("1", "2"))
    m3, m4 = make_epr_pair(register, params.s1, params.s2, ("3", "4"))
    outcomes = _bell_stage(register, m2, m3, m4, params.g_swap, params.eta_c, ("x_u", "p_v"))
    return SwapOutput(register, m1, m4, outcomes)


def _resolved_output(register: ModeRegister, mode: int, label: str) -> TeleportOutput:
    return TeleportOutput(
        register,
        register.resolve(register.quadrature(mode, QuadKind.X)),
        register.resolve(register.quadrature(mode, QuadKind.P)),
        (f"x_{label}", f"p_{label}"),
    )


def teleport_coherent(link: EprLink, g: float = 1.0, eta_a: float = 1.0) -> TeleportOutput:
    """Teleport a coherent input from Alice to Bob through @link"""

    register = link.register
    source = register.add_input_mode("in")
    _bell_stage(register, source, link.alice_mode, link.bob_mode, g, eta_a, ("x_u'", "p_v'"))
    return _resolved_output(register, link.bob_mode, "in")


def swap_and_teleport(params: SwapParams) -> TeleportOutput:
    return teleport_coherent(entanglement_swap(params), params.g, params.eta_a)


def teleport_chain(params: SwapParams) -> TeleportOutput:
    """Alice teleports to Claire through modes 1-2, Claire on to Bob through 3-4

    Alice's stage uses gain g and efficiency eta_a, Claire's stage g_swap and
    eta_c. At g_swap = 1 the output coincides with `swap_and_teleport`.
    """

    register = ModeRegister()
    m1, m2 = make_epr_pair(register, params.r1, params.r2, ("1", "2"))
    m3, m4 = make_epr_pair(register, params.s1, params.s2, ("3", "4"))
    source = register.add_input_mode("in")
    _bell_stage(register, source, m1, m2, params.g, params.eta_a, ("x_u'", "p_v'"))
    _bell_stage(register, m2, m3, m4, params.g_swap, params.eta_c, ("x_u", "p_v"))
    return _resolved_output(register, m4, "in")


class Scenario(enum.Enum):
    """Reference configurations, parametrised by a single squeezing r

    A: direct teleportation, EPR pair from two equal squeezers
    B: swapping with four equal squeezers, g_swap = tanh 2r
    C: direct teleportation, EPR pair from one squeezer
    D: swapping with one squeezer per pair, g_swap = tanh r
    E: as D with eta_c^2 = eta_a^2 = 0.95
    """

    A = "a"
    B = "b"
    C = "c"
    D = "d"
    E = "e"

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).lower())
        except ValueError:
            raise ValueError(f"Unknown scenario: {tag}") from None

    @property
    def swapping(self) -> bool:
        return self in (Scenario.B, Scenario.D, Scenario.E)

    def params(self, r: float) -> SwapParams:
        if self is Scenario.A:
            return SwapParams(r1=r, r2=r, g_swap=0.0)
        if self is Scenario.B:
            return SwapParams(r1=r, r2=r, s1=r, s2=r, g_swap=math.tanh(2 * r))
        if self is Scenario.C:
            return SwapParams(r1=r, g_swap=0.0)
        eta = math.sqrt(ETA_SQ_LOSSY) if self is Scenario.E else 1.0
        # The unit-efficiency gain is kept for E as well.
        return SwapParams(r1=r, s1=r, g_swap=criteria.optimal_gain_single_squeezers(r), eta_c=eta, eta_a=eta)


def evaluate(
    params: SwapParams,
    *,
    swapping: bool = True,
    scenario: Optional[str] = None,
    r: Optional[float] = None,
) -> criteria.FidelityReport:
    """Build the network for @params, teleport through it and report

    With @swapping the link is the output of entanglement swapping, otherwise
    a single EPR pair built from (r1, r2). The inseparability criteria are
    evaluated on Alice's and Bob's modes before Alice's Bell detection.
    """

    link = entanglement_swap(params) if swapping else epr_link(params.r1, params.r2)
    duan = criteria.duan_sum(link.register, link.alice_mode, link.bob_mode)
    tan = criteria.tan_product(link.register, link.alice_mode, link.bob_mode)

    output = teleport_coherent(link, params.g, params.eta_a)
    sigma_x, sigma_p = criteria.q_function_variances(output.x_tel, output.p_tel, params.g)
    fidelity = criteria.fidelity_from_exprs(output.x_tel, output.p_tel, params.g)

    closed = None
    if params.g == 1.0:
        if swapping:
            closed = criteria.fidelity_closed_form(params)
        else:
            closed = criteria.fidelity_direct_closed_form(params.r1, params.r2, params.eta_a)

    return criteria.FidelityReport(
        sigma_x=sigma_x,
        sigma_p=sigma_p,
        fidelity=fidelity,
        g=params.g,
        g_swap=params.g_swap if swapping else None,
        duan_sum=duan,
        tan_product=tan,
        params=params,
        fidelity_closed_form=closed,
        scenario=scenario,
        r=r,
        db=criteria.r_to_db(r) if r is not None else None,
    )


def run_scenario(tag, r: float, overrides: Optional[Dict[str, Any]] = None) -> criteria.FidelityReport:
    """Fidelity report of scenario @tag at squeezing @r

    @overrides may pin g_swap, g, eta_c and eta_a; `None` values keep the
    scenario defaults.
    """

    scenario = Scenario.parse(tag)
    if r < 0:
        raise ValueError(f"Squeezing parameter must be non-negative: {r}")

    params = scenario.params(r)
    changes = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(changes) - set(OVERRIDE_KEYS)
    if unknown:
        raise ValueError(f"Unknown overrides: {sorted(unknown)}")
    params = params.replace(**changes)

    logging.debug(f"Scenario {scenario.value} at r={r}: {params}")
    return evaluate(params, swapping=scenario.swapping, scenario=scenario.value, r=r)


def db_grid(db_min: float, db_max: float, db_step: float) -> List[float]:
    """Ascending grid from @db_min to @db_max inclusive"""

    if db_step <= 0 or db_min > db_max:
        raise ValueError(f"Invalid dB range: {db_min}..{db_max} step {db_step}")
    count = int(np.floor((db_max - db_min) / db_step + 1e-9)) + 1
    return [float(v) for v in np.round(db_min + db_step * np.arange(count), 12)]


SWEEP_COLUMNS = (
    "scenario",
    "db",
    "r",
    "g_swap",
    "fidelity_engine",
    "fidelity_closed_form",
    "duan_sum",
    "tan_product",
)


def sweep(scenarios: Iterable, dbs: Sequence[float], overrides: Optional[Dict[str, Any]] = None) -> List[Dict[str, Any]]:
    """One row per (scenario, dB), scenario then dB ascending"""

    tags = sorted({Scenario.parse(tag) for tag in scenarios}, key=lambda s: s.value)
    rows = []
    for scenario in tags:
        logging.info(f"Sweeping scenario {scenario.value} over {len(dbs)} squeezing values")
        for db in sorted(dbs):
            r = criteria.db_to_r(db)
            report = run_scenario(scenario, r, overrides)
            rows.append({
                "scenario": scenario.value,
                "db": db,
                "r": r,
                "g_swap": report.g_swap,
                "fidelity_engine": report.fidelity,
                "fidelity_closed_form": report.fidelity_closed_form,
                "duan_sum": report.duan_sum,
                "tan_product": report.tan_product,
            })
    return rows


def _close(a: Dict[str, float], b: Dict[str, float], tol: float) -> bool:
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol for k in set(a) | set(b))


def test_make_epr_pair():
    r = 0.45
    reg = ModeRegister()
    a, b = make_epr_pair(reg, r, r, ("1", "2"))
    s = SQRT2
    assert _close(reg.labelled(reg.quadrature(a, QuadKind.X)), {"1": math.exp(r) / s, "2": math.exp(-r) / s}, 1e-12)
    assert abs(criteria.duan_sum(reg, a, b) - math.exp(-2 * r)) < 1e-12

    reg = ModeRegister()
    a, b = make_epr_pair(reg, r, 0.0)
    x = reg.quadrature(a, QuadKind.X) - reg.quadrature(b, QuadKind.X)
    p = reg.quadrature(a, QuadKind.P) + reg.quadrature(b, QuadKind.P)
    assert abs(reg.variance(x) - 0.5) < 1e-12
    assert abs(reg.variance(p) - math.exp(-2 * r) / 2) < 1e-12

    reg = ModeRegister()
    a, b = make_epr_pair(reg, 0.0, 0.0)
    for kind in QuadKind:
        assert abs(reg.covariance(reg.quadrature(a, kind), reg.quadrature(b, kind))) < 1e-15


def test_swap_bob_mode():
    p = SwapParams(r1=0.3, r2=0.5, s1=0.7, s2=0.2, g_swap=0.8)
    out = entanglement_swap(p)
    reg = out.register
    g = p.g_swap
    expected_x = {
        "1": g / SQRT2 * math.exp(p.r1),
        "2": -g / SQRT2 * math.exp(-p.r2),
        "3": -(g - 1) / SQRT2 * math.exp(p.s1),
        "4": -(g + 1) / SQRT2 * math.exp(-p.s2),
    }
    expected_p = {
        "1": g / SQRT2 * math.exp(-p.r1),
        "2": -g / SQRT2 * math.exp(p.r2),
        "3": (g + 1) / SQRT2 * math.exp(-p.s1),
        "4": (g - 1) / SQRT2 * math.exp(p.s2),
    }
    assert _close(reg.labelled(reg.quadrature(out.bob_mode, QuadKind.X)), expected_x, 1e-12)
    assert _close(reg.labelled(reg.quadrature(out.bob_mode, QuadKind.P)), expected_p, 1e-12)
    assert not reg.modes[1].alive and not reg.modes[2].alive


def test_swap_without_gain():
    p = SwapParams(r1=0.4, r2=0.4, s1=0.6, s2=0.6, g_swap=0.0)
    out = entanglement_swap(p)
    reg = out.register
    x4 = reg.resolve(reg.quadrature(out.bob_mode, QuadKind.X))
    s = SQRT2
    assert _close(reg.labelled(x4), {"3": math.exp(0.6) / s, "4": -math.exp(-0.6) / s}, 1e-12)


def test_unit_gain_swap_duan():
    for r in (0.1, 0.5, 1.0):
        out = entanglement_swap(SwapParams(r1=r, r2=r, s1=r, s2=r, g_swap=1.0))
        assert abs(criteria.duan_sum(out.register, out.alice_mode, out.bob_mode) - 2 * math.exp(-2 * r)) < 1e-12
        assert abs(criteria.tan_product(out.register, out.alice_mode, out.bob_mode) - math.exp(-4 * r) / 4) < 1e-12
        x = out.register.quadrature(out.alice_mode, QuadKind.X) - out.register.quadrature(out.bob_mode, QuadKind.X)
        assert abs(out.register.variance(x) - math.exp(-2 * r)) < 1e-12


def test_teleport_coherent():
    r = 4.0
    out = swap_and_teleport(SwapParams(r1=r, r2=r, s1=r, s2=r, g_swap=1.0))
    assert abs(out.x_tel.input_terms["x_in"] - 1.0) < 1e-12
    x = out.register.labelled(out.x_tel)
    assert abs(x["in"] - 1.0) < 1e-12
    assert abs(x.get("1", 0.0)) < 1e-9 and abs(x.get("3", 0.0)) < 1e-9
    assert abs(x["2"] + SQRT2 * math.exp(-r)) < 1e-12

    link = epr_link(0.5, 0.5)
    out = teleport_coherent(link, g=0.0)
    assert not out.x_tel.input_terms
    assert _close(out.register.labelled(out.x_tel), {"1": math.exp(0.5) / SQRT2, "2": -math.exp(-0.5) / SQRT2}, 1e-12)


def test_teleported_mode():
    p = SwapParams(r1=0.3, r2=0.5, s1=0.7, s2=0.2, g_swap=0.8, eta_c=math.sqrt(0.9), eta_a=math.sqrt(0.95))
    out = swap_and_teleport(p)
    reg = out.register
    g = p.g_swap
    expected_x = {
        "in": 1.0,
        "1": (g - 1) / SQRT2 * math.exp(p.r1),
        "2": -(g + 1) / SQRT2 * math.exp(-p.r2),
        "3": -(g - 1) / SQRT2 * math.exp(p.s1),
        "4": -(g + 1) / SQRT2 * math.exp(-p.s2),
    }
    x = reg.labelled(out.x_tel)
    noise = {k: v for k, v in x.items() if k not in expected_x}
    assert _close({k: v for k, v in x.items() if k in expected_x}, expected_x, 1e-12)
    noise_variance = sum(v * v for v in noise.values()) / 4
    expected_noise = (2 * g ** 2 * (p.eta_c ** -2 - 1) + 2 * (p.eta_a ** -2 - 1)) / 4
    assert abs(noise_variance - expected_noise) < 1e-12

    engine = criteria.fidelity_from_exprs(out.x_tel, out.p_tel)
    assert abs(engine - criteria.fidelity_closed_form(p)) < 1e-12


def test_two_stage_equivalence():
    p = SwapParams(r1=0.3, r2=0.9, s1=0.5, s2=0.1, g_swap=1.0, eta_c=0.95, eta_a=0.9)
    swapped = swap_and_teleport(p)
    chained = teleport_chain(p)
    for kind in ("x_tel", "p_tel"):
        a = swapped.register.labelled(getattr(swapped, kind))
        b = chained.register.labelled(getattr(chained, kind))
        assert _close(a, b, 1e-12)

    p = p.replace(g_swap=0.6)
    a = swap_and_teleport(p)
    b = teleport_chain(p)
    assert not _close(a.register.labelled(a.x_tel), b.register.labelled(b.x_tel), 1e-6)


def test_run_scenario():
    assert abs(run_scenario("a", 0.0).fidelity - 0.5) < 1e-12
    assert abs(run_scenario("c", 10.0).fidelity - 1 / math.sqrt(2)) < 1e-6
    assert abs(run_scenario("d", 10.0).fidelity - 1 / math.sqrt(3)) < 1e-6
    for r in (0.2, 0.8):
        report = run_scenario(Scenario.B, r)
        assert abs(report.fidelity - criteria.optimal_fidelity_four_equal(r)) < 1e-12
        assert abs(report.fidelity - report.fidelity_closed_form) < 1e-12
        assert report.scenario == "b"

    report = run_scenario("E", 0.5)
    assert abs(report.params.eta_c ** 2 - 0.95) < 1e-12

    pinned = run_scenario("d", 0.5, {"g_swap": 0.0, "eta_c": None})
    assert pinned.g_swap == 0.0
    assert pinned.fidelity <= 0.5 + 1e-12

    for bad in (lambda: run_scenario("f", 0.1), lambda: run_scenario("a", -0.1),
                lambda: run_scenario("a", 0.1, {"r1": 2.0})):
        try:
            bad()
            assert False, "invalid scenario request accepted"
        except ValueError:
            pass


def test_scenario_ordering():
    previous = 0.0
    for db in db_grid(0.0, 10.0, 0.5):
        r = criteria.db_to_r(db)
        f = {s.value: run_scenario(s, r).fidelity for s in Scenario}
        assert f["a"] >= f["b"] - 1e-12
        assert f["c"] >= f["d"] - 1e-12
        assert f["d"] >= f["e"] - 1e-12
        assert f["b"] > previous
        previous = f["b"]


def test_source_symmetry_engine():
    p = SwapParams(r1=0.2, r2=1.1, s1=0.7, s2=0.4, g_swap=0.7, eta_c=0.9, eta_a=0.97)
    a = criteria.fidelity_from_exprs(*_exprs(swap_and_teleport(p)))
    b = criteria.fidelity_from_exprs(*_exprs(swap_and_teleport(p.swapped_sources())))
    assert abs(a - b) < 1e-12


def _exprs(output):
    return output.x_tel, output.p_tel


def test_db_grid_and_sweep():
    assert db_grid(0.0, 10.0, 0.5)[-1] == 10.0
    assert len(db_grid(0.0, 10.0, 0.5)) == 21
    assert db_grid(3.0, 3.0, 1.0) == [3.0]
    rows = sweep(["d", "a"], [1.0, 0.0])
    assert [(row["scenario"], row["db"]) for row in rows] == [("a", 0.0), ("a", 1.0), ("d", 0.0), ("d", 1.0)]
    assert rows[0]["g_swap"] is None
    assert tuple(rows[0]) == SWEEP_COLUMNS


def test_classical_point_is_separable():
    report = evaluate(SwapParams(g_swap=criteria.auto_gain(SwapParams())))
    assert abs(report.duan_sum - 1.0) < 1e-12
    assert abs(report.fidelity - 0.5) < 1e-12
    assert not report.inseparable
    assert not run_scenario("a", 0.0).inseparable
    assert not run_scenario("b", 0.0).inseparable
    assert run_scenario("b", 0.05).inseparable
