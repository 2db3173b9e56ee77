"""Concrete execution of closed-loop systems.

Scheduling resolves the nondeterminism of the loop: a strategy decides
when the plant evolves and which controller fires, subject to the hard
rule that time never passes a guard `t <= tau_i + delta`. Three
strategies are provided:

* uniform-random: seeded random segment lengths and branch picks,
* lazy-controller: every controller fires at the last admissible moment
  (t = tau + delta - eps), the adversarial schedule for overshoot,
* round-robin: controllers fire cyclically near each expiry.

Integration uses an exact closed form whenever every right-hand side is
constant over a segment (none of its free variables are evolved), which
covers piecewise-constant actuation models and keeps cross-component
invariants exact to float rounding. Anything else falls back to
fixed-step RK4 with h = min(reactivity, controllability) / 100.

Guarantees and the composition invariant are monitored at every loop
boundary; violations are recorded, never fatal. Identical
(system, schedule, init) inputs give bit-identical traces.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .ast import (
    And,
    Assign,
    Box,
    Compare,
    Divide,
    Exists,
    FalseF,
    Forall,
    Formula,
    Implies,
    Loop,
    Minus,
    Neg,
    Not,
    ODE,
    Or,
    Plus,
    Program,
    Rational,
    Seq,
    Term,
    Test,
    Times,
    TrueF,
    Variable,
    Choice,
    choice_alternatives,
    conjuncts,
    print_formula,
    print_term,
)
from .components import MCCS, CLOCK
from .errors import (
    CcsError,
    DivisionByZero,
    InitViolatesAssumptions,
    StuckState,
)
from .statics import all_vars, free_vars

# Equality comparisons share the invariant-residual budget: a conjunct
# `a = b` holds when |a - b| <= 1e-9, which float drift over a 20s run of
# exact-path segments never approaches (observed residuals are ~1e-13).
EQ_TOLERANCE = 1e-9
BOUNDARY_TOLERANCE = 1e-12
BISECT_TOLERANCE = 1e-9

State = dict[str, float]


# ---------------------------------------------------------------------------
# Compiled evaluation of modality-free terms and formulas


_term_cache: dict[Term, Callable[[State], float]] = {}
_formula_cache: dict[Formula, Callable[[State], bool]] = {}


def compile_term(t: Term) -> Callable[[State], float]:
    cached = _term_cache.get(t)
    if cached is not None:
        return cached

    if isinstance(t, Variable):
        name = t.name

        def fn(s: State, _n=name) -> float:
            return s[_n]

    elif isinstance(t, Rational):
        value = float(t.value)

        def fn(s: State, _v=value) -> float:
            return _v

    elif isinstance(t, Neg):
        op = compile_term(t.operand)

        def fn(s: State, _op=op) -> float:
            return -_op(s)

    elif isinstance(t, (Plus, Minus, Times, Divide)):
        left = compile_term(t.left)
        right = compile_term(t.right)
        if isinstance(t, Plus):

            def fn(s: State, _l=left, _r=right) -> float:
                return _l(s) + _r(s)

        elif isinstance(t, Minus):

            def fn(s: State, _l=left, _r=right) -> float:
                return _l(s) - _r(s)

        elif isinstance(t, Times):

            def fn(s: State, _l=left, _r=right) -> float:
                return _l(s) * _r(s)

        else:
            text = print_term(t)

            def fn(s: State, _l=left, _r=right, _txt=text) -> float:
                d = _r(s)
                if d == 0.0:
                    raise DivisionByZero(_txt)
                return _l(s) / d

    else:
        raise TypeError(f"not a term: {t!r}")

    _term_cache[t] = fn
    return fn


def compile_formula(f: Formula) -> Callable[[State], bool]:
    cached = _formula_cache.get(f)
    if cached is not None:
        return cached

    if isinstance(f, TrueF):

        def fn(s: State) -> bool:
            return True

    elif isinstance(f, FalseF):

        def fn(s: State) -> bool:
            return False

    elif isinstance(f, Compare):
        left = compile_term(f.left)
        right = compile_term(f.right)
        op = f.op
        if op == "=":

            def fn(s: State, _l=left, _r=right) -> bool:
                return abs(_l(s) - _r(s)) <= EQ_TOLERANCE

        elif op == "!=":

            def fn(s: State, _l=left, _r=right) -> bool:
                return abs(_l(s) - _r(s)) > EQ_TOLERANCE

        elif op == "<=":

            def fn(s: State, _l=left, _r=right) -> bool:
                return _l(s) <= _r(s)

        elif op == "<":

            def fn(s: State, _l=left, _r=right) -> bool:
                return _l(s) < _r(s)

        elif op == ">=":

            def fn(s: State, _l=left, _r=right) -> bool:
                return _l(s) >= _r(s)

        else:

            def fn(s: State, _l=left, _r=right) -> bool:
                return _l(s) > _r(s)

    elif isinstance(f, Not):
        op_ = compile_formula(f.operand)

        def fn(s: State, _o=op_) -> bool:
            return not _o(s)

    elif isinstance(f, And):
        left_ = compile_formula(f.left)
        right_ = compile_formula(f.right)

        def fn(s: State, _l=left_, _r=right_) -> bool:
            return _l(s) and _r(s)

    elif isinstance(f, Or):
        left_ = compile_formula(f.left)
        right_ = compile_formula(f.right)

        def fn(s: State, _l=left_, _r=right_) -> bool:
            return _l(s) or _r(s)

    elif isinstance(f, Implies):
        left_ = compile_formula(f.left)
        right_ = compile_formula(f.right)

        def fn(s: State, _l=left_, _r=right_) -> bool:
            return (not _l(s)) or _r(s)

    elif isinstance(f, (Box, Forall, Exists)):
        raise CcsError(
            "formula is not modality/quantifier-free: " + print_formula(f)
        )
    else:
        raise TypeError(f"not a formula: {f!r}")

    _formula_cache[f] = fn
    return fn


def eval_term(t: Term, state: State) -> float:
    return compile_term(t)(state)


def eval_formula(f: Formula, state: State) -> bool:
    """Modality-free evaluation; `=` / `!=` compare within 1e-12."""
    return compile_formula(f)(state)


# ---------------------------------------------------------------------------
# Discrete program execution (scheduler-resolved nondeterminism)


def leading_test(p: Program) -> Formula | None:
    if isinstance(p, Test):
        return p.condition
    if isinstance(p, Seq):
        return leading_test(p.first)
    return None


def exec_discrete(
    p: Program, state: State, rng: random.Random, _loop_cap: int = 8
) -> State | None:
    """One concrete run of a discrete program; None when the run aborts

    (a test failed). Choices pick uniformly among alternatives whose
    leading test is enabled; there is no backtracking past that.
    """
    if isinstance(p, Test):
        return state if eval_formula(p.condition, state) else None
    if isinstance(p, Assign):
        out = dict(state)
        out[p.var] = eval_term(p.rhs, state)
        return out
    if isinstance(p, Seq):
        mid = exec_discrete(p.first, state, rng, _loop_cap)
        if mid is None:
            return None
        return exec_discrete(p.second, mid, rng, _loop_cap)
    if isinstance(p, Choice):
        alts = choice_alternatives(p)
        enabled = []
        for a in alts:
            guard = leading_test(a)
            if guard is None or eval_formula(guard, state):
                enabled.append(a)
        if not enabled:
            return None
        pick = enabled[0] if len(enabled) == 1 else rng.choice(enabled)
        return exec_discrete(pick, state, rng, _loop_cap)
    if isinstance(p, Loop):
        current = state
        for _ in range(_loop_cap):
            if rng.random() >= 0.5:
                break
            nxt = exec_discrete(p.body, current, rng, _loop_cap)
            if nxt is None:
                break
            current = nxt
        return current
    if isinstance(p, ODE):
        raise CcsError("continuous dynamics inside a discrete program")
    raise TypeError(f"not a program: {p!r}")


# ---------------------------------------------------------------------------
# Continuous flow


def _is_affine(t: Term, moving: frozenset[str]) -> bool:
    """Affine in the evolved variables (degree <= 1), so comparisons of

    such terms cross zero at most once along a constant-slope segment.
    """
    if isinstance(t, Variable):
        return True
    if isinstance(t, Rational):
        return True
    if isinstance(t, Neg):
        return _is_affine(t.operand, moving)
    if isinstance(t, (Plus, Minus)):
        return _is_affine(t.left, moving) and _is_affine(t.right, moving)
    if isinstance(t, Times):
        lmoving = bool(free_vars(t.left) & moving)
        rmoving = bool(free_vars(t.right) & moving)
        if lmoving and rmoving:
            return False
        return _is_affine(t.left, moving) and _is_affine(t.right, moving)
    if isinstance(t, Divide):
        if free_vars(t.right) & moving:
            return False
        return _is_affine(t.left, moving)
    raise TypeError(f"not a term: {t!r}")


class FlowSegment:
    """Integrates one ODE node from a start state.

    Exact linear advance when every right-hand side is constant over the
    segment; RK4 otherwise. Instances are cheap, stateless descriptions;
    all methods are pure in the start state.
    """

    def __init__(self, ode: ODE):
        self.ode = ode
        self.vars = tuple(v for v, _ in ode.equations)
        self.moving = frozenset(self.vars)
        self.rhs = tuple(compile_term(rhs) for _, rhs in ode.equations)
        self.exact = all(
            not (free_vars(rhs) & self.moving) for _, rhs in ode.equations
        )
        self.domain = compile_formula(ode.domain)
        self.domain_conjuncts = [
            (c, compile_formula(c)) for c in conjuncts(ode.domain)
        ]
        self.domain_affine = self.exact and all(
            isinstance(c, Compare)
            and _is_affine(c.left, self.moving)
            and _is_affine(c.right, self.moving)
            for c, _ in self.domain_conjuncts
        )

    def slopes(self, state: State) -> tuple[float, ...]:
        return tuple(fn(state) for fn in self.rhs)

    def at(self, state: State, slopes: tuple[float, ...], dt: float) -> State:
        out = dict(state)
        for name, slope in zip(self.vars, slopes):
            out[name] = state[name] + slope * dt
        return out

    def _rk4_step(self, state: State, h: float) -> State:
        def deriv(s: State) -> tuple[float, ...]:
            return tuple(fn(s) for fn in self.rhs)

        k1 = deriv(state)
        s2 = dict(state)
        for n, d in zip(self.vars, k1):
            s2[n] = state[n] + 0.5 * h * d
        k2 = deriv(s2)
        s3 = dict(state)
        for n, d in zip(self.vars, k2):
            s3[n] = state[n] + 0.5 * h * d
        k3 = deriv(s3)
        s4 = dict(state)
        for n, d in zip(self.vars, k3):
            s4[n] = state[n] + h * d
        k4 = deriv(s4)
        out = dict(state)
        for n, d1, d2, d3, d4 in zip(self.vars, k1, k2, k3, k4):
            out[n] = state[n] + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        return out

    def exit_time_affine(self, state: State, slopes: tuple[float, ...]) -> float:
        """Largest dt >= 0 with the whole domain true on [0, dt].

        Only valid when `domain_affine`: every conjunct is a comparison of
        terms affine in the evolved variables, hence linear in dt.
        Returns math.inf when nothing ever exits.
        """
        bound = math.inf
        for c, _fn in self.domain_conjuncts:
            assert isinstance(c, Compare)
            lf = compile_term(c.left)
            rf = compile_term(c.right)
            g0 = lf(state) - rf(state)
            probe = self.at(state, slopes, 1.0)
            g1 = (lf(probe) - rf(probe)) - g0  # slope of l - r in dt
            if c.op in ("<=", "<"):
                ok0 = g0 <= 0.0 if c.op == "<=" else g0 < 0.0
                if not ok0:
                    return 0.0 if self.domain(state) else -1.0
                if g1 > 0.0:
                    bound = min(bound, -g0 / g1)
            elif c.op in (">=", ">"):
                ok0 = g0 >= 0.0 if c.op == ">=" else g0 > 0.0
                if not ok0:
                    return 0.0 if self.domain(state) else -1.0
                if g1 < 0.0:
                    bound = min(bound, -g0 / g1)
            elif c.op == "=":
                if abs(g0) > EQ_TOLERANCE:
                    return -1.0
                if abs(g1) > EQ_TOLERANCE:
                    bound = min(bound, 0.0)
            else:  # !=
                if abs(g0) <= EQ_TOLERANCE:
                    return -1.0
                if g1 != 0.0:
                    crossing = -g0 / g1
                    if crossing > 0.0:
                        bound = min(bound, crossing)
        return bound

    def advance(
        self, state: State, dt_request: float, h: float
    ) -> tuple[State, float, bool, list[State]]:
        """Evolve for up to dt_request within the domain.

        Returns (end state, dt achieved, exited_domain, intermediate
        samples for non-exact integration). Domain exits are located to
        within 1e-9 by bisection.
        """
        if not self.domain(state):
            return state, 0.0, True, []
        if dt_request <= 0.0:
            return state, 0.0, False, []

        if self.exact:
            slopes = self.slopes(state)
            if self.domain_affine:
                exit_dt = self.exit_time_affine(state, slopes)
                if exit_dt < 0.0:
                    return state, 0.0, True, []
                dt = min(dt_request, exit_dt)
                exited = exit_dt <= dt_request
                end = self.at(state, slopes, dt)
                if exited and not self.domain(end):
                    dt = self._bisect_exact(state, slopes, dt)
                    end = self.at(state, slopes, dt)
                return end, dt, exited, []
            # Exact slopes but a non-affine domain: scan and bisect.
            return self._scan(state, dt_request, h, slopes=slopes)
        return self._scan(state, dt_request, h, slopes=None)

    def _bisect_exact(
        self, state: State, slopes: tuple[float, ...], hi: float
    ) -> float:
        lo = 0.0
        while hi - lo > BISECT_TOLERANCE:
            mid = 0.5 * (lo + hi)
            if self.domain(self.at(state, slopes, mid)):
                lo = mid
            else:
                hi = mid
        return lo

    def _scan(
        self,
        state: State,
        dt_request: float,
        h: float,
        slopes: tuple[float, ...] | None,
    ) -> tuple[State, float, bool, list[State]]:
        samples: list[State] = []
        elapsed = 0.0
        current = state
        while elapsed < dt_request - BOUNDARY_TOLERANCE:
            step = min(h, dt_request - elapsed)
            if slopes is not None:
                nxt = self.at(current, slopes, step)
            else:
                nxt = self._rk4_step(current, step)
            if not self.domain(nxt):
                lo, hi = 0.0, step
                good = current
                while hi - lo > BISECT_TOLERANCE:
                    mid = 0.5 * (lo + hi)
                    cand = (
                        self.at(current, slopes, mid)
                        if slopes is not None
                        else self._rk4_step(current, mid)
                    )
                    if self.domain(cand):
                        lo, good = mid, cand
                    else:
                        hi = mid
                samples.append(good)
                return good, elapsed + lo, True, samples
            current = nxt
            elapsed += step
            samples.append(current)
        return current, elapsed, False, samples


def flow_states(
    ode: ODE, state: State, n_samples: int = 64, max_steps: int = 20000
) -> tuple[list[State], bool]:
    """All-durations sampling of one continuous evolution: the states an

    ODE can stop in, starting from `state`, sampled at `n_samples`
    points plus the exact domain boundary. Used by bounded checking.

    Returns (samples, complete). `complete` is False when the domain
    never closed within the step budget, i.e. the reachable set was
    truncated.
    """
    seg = FlowSegment(ode)
    if not seg.domain(state):
        return [], True
    if seg.exact and seg.domain_affine:
        slopes = seg.slopes(state)
        exit_dt = seg.exit_time_affine(state, slopes)
        if exit_dt < 0.0:
            return [], True
        if math.isinf(exit_dt):
            horizon = 1e6
            times = [horizon * i / n_samples for i in range(n_samples + 1)]
            return [seg.at(state, slopes, dt) for dt in times], False
        times = [exit_dt * i / n_samples for i in range(n_samples + 1)]
        return [seg.at(state, slopes, dt) for dt in times], True
    # Step-wise scan: pick a step from any clock-style bound, else a
    # conservative default, and walk until the domain exits.
    h = 0.01
    for c in conjuncts(ode.domain):
        if (
            isinstance(c, Compare)
            and c.op in ("<=", "<")
            and isinstance(c.left, Variable)
            and c.left.name in {v for v, _ in ode.equations}
        ):
            try:
                span = eval_term(c.right, state) - state.get(c.left.name, 0.0)
            except (KeyError, DivisionByZero):
                continue
            if span > 0.0:
                h = min(h, span / 128.0)
    samples: list[State] = [state]
    current = state
    for _ in range(max_steps):
        end, dt, exited, _mid = seg.advance(current, h, h)
        if dt > 0.0:
            samples.append(end)
            current = end
        if exited:
            return samples, True
    return samples, False


# ---------------------------------------------------------------------------
# Schedules and traces

STRATEGIES = ("uniform-random", "lazy-controller", "round-robin")


@dataclass(frozen=True)
class Schedule:
    strategy: str = "uniform-random"
    seed: int = 0
    horizon: float = 20.0
    max_iterations: int = 400000

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; pick one of {STRATEGIES}"
            )


@dataclass(frozen=True)
class TracePoint:
    time: float
    event: str
    values: dict[str, float]


@dataclass(frozen=True)
class MonitorViolation:
    time: float
    monitor: str
    formula_text: str
    values: dict[str, float]


@dataclass
class Trace:
    points: list[TracePoint] = field(default_factory=list)
    violations: list[MonitorViolation] = field(default_factory=list)
    end_time: float = 0.0
    truncated: bool = False
    max_invariant_residual: float = 0.0

    @property
    def final(self) -> dict[str, float]:
        return self.points[-1].values if self.points else {}

    def variables(self) -> list[str]:
        return sorted(self.points[0].values.keys()) if self.points else []


def write_trace_csv(trace: Trace, path) -> None:
    names = trace.variables()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "event", *names])
        for p in trace.points:
            writer.writerow(
                [repr(p.time), p.event, *(repr(p.values[n]) for n in names)]
            )


# ---------------------------------------------------------------------------
# System runtime


def system_variables(system: MCCS) -> frozenset[str]:
    out = all_vars(system.to_program())
    out |= free_vars(system.env.formula)
    out |= free_vars(system.invariant)
    for rc in system.controller.choices:
        if rc.contract is not None:
            for f in (rc.contract.assume, rc.contract.guarantee, rc.contract.init):
                out |= free_vars(f)
    if system.plant.contract is not None:
        pc = system.plant.contract
        for f in (pc.assume, pc.guarantee, pc.init):
            out |= free_vars(f)
    return out


def complete_init(system: MCCS, init: dict) -> State:
    """Resolve an initial-state description into a total float state.

    Entries may be numbers or `"=other"` aliases; variables absent from
    `init` fall back to exact environment bindings (`name = q` conjuncts).
    """
    needed = system_variables(system)
    env_pins = system.env.constants()
    state: State = {}
    aliases: list[tuple[str, str]] = []
    for name, value in init.items():
        if isinstance(value, str):
            if not value.startswith("="):
                raise InitViolatesAssumptions(
                    f"initial value for {name!r} must be a number or '=var'"
                )
            aliases.append((name, value[1:]))
        else:
            state[name] = float(value)
    for name in needed:
        if name not in state and all(a != name for a, _ in aliases):
            if name in env_pins:
                state[name] = float(env_pins[name])
    for name, target in aliases:
        if target not in state:
            raise InitViolatesAssumptions(
                f"alias {name!r} = {target!r}: target has no value"
            )
        state[name] = state[target]
    missing = sorted(n for n in needed if n not in state)
    if missing:
        raise InitViolatesAssumptions(
            "no initial value for: " + ", ".join(missing)
        )
    return state


def _init_obligations(system: MCCS) -> list[tuple[str, Formula]]:
    out: list[tuple[str, Formula]] = []
    for c in conjuncts(system.env.formula):
        out.append(("environment", c))
    for rc in system.controller.choices:
        if rc.contract is not None:
            out.append((f"assume[{rc.name}]", rc.contract.assume))
            out.append((f"init[{rc.name}]", rc.contract.init))
    if system.plant.contract is not None:
        pc = system.plant.contract
        out.append((f"assume[{system.plant.name}]", pc.assume))
        out.append((f"init[{system.plant.name}]", pc.init))
    return out


def _monitors(system: MCCS) -> list[tuple[str, Formula]]:
    out: list[tuple[str, Formula]] = []
    for rc in system.controller.choices:
        if rc.contract is not None:
            out.append((f"G[{rc.name}]", rc.contract.guarantee))
    if system.plant.contract is not None:
        out.append(
            (f"G[{system.plant.name}]", system.plant.contract.guarantee)
        )
    if not isinstance(system.invariant, TrueF):
        out.append(("invariant", system.invariant))
    return out


def _residual_terms(system: MCCS) -> list[Callable[[State], float]]:
    """|lhs - rhs| for every equality conjunct of the invariant."""
    fns = []
    for c in conjuncts(system.invariant):
        if isinstance(c, Compare) and c.op == "=":
            lf, rf = compile_term(c.left), compile_term(c.right)
            fns.append(lambda s, _l=lf, _r=rf: abs(_l(s) - _r(s)))
    return fns


def run(system: MCCS, schedule: Schedule, init: dict) -> Trace:
    """Execute the closed loop under one schedule.

    Raises InitViolatesAssumptions when the start state fails the
    environment or any component's assume/init clause, and StuckState
    when a guard has expired but no controller run is enabled.
    """
    state = complete_init(system, init)
    for label, f in _init_obligations(system):
        if not eval_formula(f, state):
            raise InitViolatesAssumptions(f"{label}: {print_formula(f)}")

    delta = float(system.controller.reactivity)
    cap = float(system.plant.controllability)
    h = min(delta, cap) / 100.0
    eps = h / 10.0
    rng = random.Random(schedule.seed)
    segment = FlowSegment(system.guarded_ode())
    controllers = list(system.controller.choices)
    monitors = [(name, compile_formula(f), print_formula(f)) for name, f in _monitors(system)]
    residuals = _residual_terms(system)

    trace = Trace()

    def residual_check(s: State) -> None:
        for fn in residuals:
            r = fn(s)
            if r > trace.max_invariant_residual:
                trace.max_invariant_residual = r

    def record(event: str, s: State) -> None:
        trace.points.append(TracePoint(s[CLOCK], event, dict(s)))
        residual_check(s)

    def boundary(s: State) -> None:
        record("loop-boundary", s)
        for name, fn, text in monitors:
            if not fn(s):
                trace.violations.append(
                    MonitorViolation(s[CLOCK], name, text, dict(s))
                )

    def fire(rc, s: State) -> State | None:
        if s[CLOCK] > s[rc.timestamp] + delta + BOUNDARY_TOLERANCE:
            return None
        after = exec_discrete(rc.ctrl, s, rng)
        if after is None:
            return None
        after[rc.timestamp] = after[CLOCK]
        return after

    def try_fire_any(order: Iterable, s: State) -> tuple[State, str] | None:
        for rc in order:
            after = fire(rc, s)
            if after is not None:
                return after, rc.name
        return None

    boundary(state)
    rr_index = 0
    blocked = False  # previous evolve made no progress
    iterations = 0

    while True:
        iterations += 1
        if iterations > schedule.max_iterations:
            trace.truncated = True
            break
        to_horizon = schedule.horizon - state[CLOCK]
        if to_horizon <= BOUNDARY_TOLERANCE:
            break

        expiries = [state[rc.timestamp] + delta for rc in controllers]
        next_expiry = min(expiries)
        guard_room = next_expiry - state[CLOCK]

        if (
            to_horizon <= eps
            and guard_room >= to_horizon - BOUNDARY_TOLERANCE
        ):
            # Only a sliver left before the horizon and no guard forces a
            # firing first: run out the clock and finish.
            state, _moved = _evolve(
                segment, state, to_horizon, h, record, next_expiry
            )
            boundary(state)
            break

        # The eps backoff keeps evolution short of guard expiries (so a
        # controller can still fire) but never short of the horizon.
        evolve_room = min(guard_room - eps, to_horizon)

        fired: tuple[State, str] | None = None
        advanced = False

        if schedule.strategy == "lazy-controller":
            target = controllers[expiries.index(next_expiry)]
            ordering = [target] + [rc for rc in controllers if rc is not target]
            if evolve_room > 0.0 and not blocked:
                state, advanced = _evolve(
                    segment, state, evolve_room, h, record, next_expiry
                )
            if not advanced or state[CLOCK] >= next_expiry - 2.0 * eps:
                fired = try_fire_any(ordering, state)
        elif schedule.strategy == "round-robin":
            target = controllers[rr_index % len(controllers)]
            rr_index += 1
            ordering = [target] + [rc for rc in controllers if rc is not target]
            if evolve_room > 0.0 and not blocked:
                state, advanced = _evolve(
                    segment, state, evolve_room, h, record, next_expiry
                )
            fired = try_fire_any(ordering, state)
        else:  # uniform-random
            if evolve_room > eps and not blocked and rng.random() < 0.5:
                dt = rng.uniform(eps, evolve_room)
                state, advanced = _evolve(
                    segment, state, dt, h, record, next_expiry
                )
            if not advanced:
                order = list(controllers)
                rng.shuffle(order)
                fired = try_fire_any(order, state)

        if fired is not None:
            state, name = fired
            record(f"ctrl-fired({name})", state)
            blocked = False
        elif not advanced:
            if blocked:
                raise StuckState(state[CLOCK])
            # One grace pass: evolve right up to the guard boundary, after
            # which a controller must fire or the system is stuck.
            remaining = min(guard_room, to_horizon)
            if remaining > BOUNDARY_TOLERANCE:
                state, moved = _evolve(
                    segment, state, remaining, h, record, next_expiry
                )
                blocked = not moved
            else:
                blocked = True
            if blocked:
                fired = try_fire_any(controllers, state)
                if fired is None:
                    raise StuckState(state[CLOCK])
                state, name = fired
                record(f"ctrl-fired({name})", state)
                blocked = False
        else:
            blocked = False

        boundary(state)

    if trace.points and trace.points[-1].event != "loop-boundary":
        boundary(state)
    trace.end_time = state[CLOCK]
    return trace


def _evolve(
    segment: FlowSegment,
    state: State,
    dt_request: float,
    h: float,
    record,
    next_expiry: float,
) -> tuple[State, bool]:
    """Advance the plant, recording samples; returns (state, moved)."""
    end, dt, exited, mid_samples = segment.advance(state, dt_request, h)
    if dt <= 0.0:
        return state, False
    for s in mid_samples[:-1]:
        record("ode-step", s)
    # Snap the clock when we stopped within float wiggle of a guard expiry
    # so subsequent guard tests are exact.
    if abs(end[CLOCK] - next_expiry) <= 2.0 * BOUNDARY_TOLERANCE:
        end = dict(end)
        end[CLOCK] = next_expiry
        record("guard-expiry", end)
    else:
        record("ode-step", end)
    return end, True


# ---------------------------------------------------------------------------
# Batches


@dataclass
class BatchSummary:
    runs: int
    strategy: str
    seed: int
    horizon: float
    violations: dict[str, int]
    runs_with_violations: int
    variable_ranges: dict[str, tuple[float, float]]
    max_invariant_residual: float
    total_points: int
    stuck_runs: int = 0

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "strategy": self.strategy,
            "seed": self.seed,
            "horizon": self.horizon,
            "violations": dict(sorted(self.violations.items())),
            "runs_with_violations": self.runs_with_violations,
            "variable_ranges": {
                k: [lo, hi] for k, (lo, hi) in sorted(self.variable_ranges.items())
            },
            "max_invariant_residual": self.max_invariant_residual,
            "total_points": self.total_points,
            "stuck_runs": self.stuck_runs,
        }


def batch_schedule_seed(seed: int, index: int) -> int:
    """Per-run seed derivation; exposed so a single `run` can reproduce

    any member of a batch exactly.
    """
    return (seed * 1_000_003 + index) % (2**63)


def sample_init(init_box: dict, rng: random.Random) -> dict:
    """Draw one init description: intervals sampled uniformly, numbers

    kept, `"=var"` aliases passed through for complete_init to resolve.
    """
    out: dict = {}
    for name in sorted(init_box):
        spec = init_box[name]
        if isinstance(spec, (list, tuple)):
            lo, hi = float(spec[0]), float(spec[1])
            out[name] = lo if lo == hi else rng.uniform(lo, hi)
        else:
            out[name] = spec
    return out


def run_batch(
    system: MCCS,
    n_schedules: int,
    seed: int,
    init_box: dict,
    strategy: str = "uniform-random",
    horizon: float = 20.0,
) -> BatchSummary:
    """`n_schedules` independent seeded runs with inits drawn from

    `init_box`. Deterministic in (system, n_schedules, seed, init_box):
    run i uses schedule seed batch_schedule_seed(seed, i) and its own
    init draw.
    """
    violations: dict[str, int] = {name: 0 for name, _ in _monitors(system)}
    runs_with = 0
    ranges: dict[str, tuple[float, float]] = {}
    max_residual = 0.0
    total_points = 0
    stuck = 0
    for i in range(n_schedules):
        run_seed = batch_schedule_seed(seed, i)
        init_rng = random.Random(run_seed ^ 0x5EED)
        init = sample_init(init_box, init_rng)
        schedule = Schedule(strategy=strategy, seed=run_seed, horizon=horizon)
        try:
            trace = run(system, schedule, init)
        except StuckState:
            stuck += 1
            continue
        if trace.violations:
            runs_with += 1
            for v in trace.violations:
                violations[v.monitor] = violations.get(v.monitor, 0) + 1
        for p in trace.points:
            for name, value in p.values.items():
                lo, hi = ranges.get(name, (value, value))
                ranges[name] = (min(lo, value), max(hi, value))
        max_residual = max(max_residual, trace.max_invariant_residual)
        total_points += len(trace.points)
    return BatchSummary(
        runs=n_schedules,
        strategy=strategy,
        seed=seed,
        horizon=horizon,
        violations=violations,
        runs_with_violations=runs_with,
        variable_ranges=ranges,
        max_invariant_residual=max_residual,
        total_points=total_points,
        stuck_runs=stuck,
    )
