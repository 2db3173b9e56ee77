"""Proof decomposition for composed systems, plus a bounded falsifier.

Each composition rule unfolds into a fixed obligation list: loop
induction with the invariant `A_a & G_a & A_b & G_b & J` gives one base
case, one use case and eight induction steps (one per loop branch and
invariant conjunct), and the cross-component invariant J and the mutual
assumptions contribute their own side conditions. An obligation is a
closed dL formula plus a discharge hint naming the argument expected to
close it:

* component-proof-reuse: the clause restates a component's own contract,
* fv-bv-separation: the program writes no free variable of the clause,
* compatibility: one side's assumptions survive the other side's runs,
* composition-invariant: J is established initially and maintained by
  each component,
* differential-refinement: the goal is stated at the component's own
  time bound; inside the loop the run is shorter (reactivity <=
  controllability), so the longer-bound proof carries over.

Rule tags: thm1 (controller + plant), thm2 (controller pair), thm3
(plant pair), thm4 (controller family + plant, same shape as thm1).

`check_bounded` is not a prover. It grids the antecedent box, unrolls
loops, samples ODE flows, and reports `holds` only in the sense of
"no counterexample in this finite exploration"; the caveat field always
spells out the truncations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace as _dc_replace

from .ast import (
    And,
    Assign,
    Box,
    Choice,
    Compare,
    Exists,
    FalseF,
    Forall,
    Formula,
    Implies,
    Loop,
    Not,
    ODE,
    Or,
    Program,
    Seq,
    Test,
    TrueF,
    TRUE,
    Variable,
    choice,
    conj,
    fraction_to_text,
    mentions_name,
    print_formula,
)
from .components import (
    CLOCK,
    MCCS,
    ControllablePlant,
    Environment,
    EMPTY_ENVIRONMENT,
    MultiChoiceController,
    ReactiveController,
    as_multi_controller,
)
from .composition import (
    CostModel,
    compose_plants,
    cost,
    non_interference_controllers,
    raise_on_violations,
)
from .errors import BoundOccursInBehavior, CcsError, UnboundedVariable
from .simulator import eval_formula, eval_term, flow_states
from .statics import all_vars, bound_vars, free_vars

HINTS = frozenset(
    {
        "component-proof-reuse",
        "fv-bv-separation",
        "compatibility",
        "composition-invariant",
        "differential-refinement",
    }
)

STATUSES = ("open", "discharged", "failed")


@dataclass(frozen=True)
class ProofObligation:
    id: str
    theorem: str
    case: str
    hint: str
    goal: Formula
    status: str = "open"
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.hint not in HINTS:
            raise ValueError(f"unknown hint {self.hint!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def provenance(self) -> str:
        return f"{self.theorem}/{self.case}"

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "provenance": self.provenance,
            "hint": self.hint,
            "goal": print_formula(self.goal),
            "status": self.status,
        }
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def obligation_from_json(data: dict) -> ProofObligation:
    """Rebuild an obligation from its JSON form (goal re-parsed from

    concrete syntax; provenance split back into rule tag and case).
    """
    from .dsl import parse_formula_text

    theorem, _, case = data["provenance"].partition("/")
    return ProofObligation(
        id=data["id"],
        theorem=theorem,
        case=case,
        hint=data["hint"],
        goal=parse_formula_text(data["goal"]),
        status=data.get("status", "open"),
        notes=tuple(data.get("notes", ())),
    )


# ---------------------------------------------------------------------------
# Closed-loop systems: 15 obligations


def _timing_init(timestamps: tuple[str, ...]) -> list[Formula]:
    """Loop-entry clock facts: every controller timestamp starts equal to

    the global clock (the closed loop is assembled that way), which is
    what makes measurement-style invariants true at time zero.
    """
    return [Compare("=", Variable(ts), Variable(CLOCK)) for ts in timestamps]


def _fmt_names(names) -> str:
    return "{" + ", ".join(sorted(names)) + "}"


def obligations_ccs(system: MCCS) -> list[ProofObligation]:
    """The full decomposition for one closed loop: always exactly 15.

    Loop induction over `(plant U controllers)*` with the invariant
    `A_c & G_c & A_p & G_p & J` gives base, use and eight steps (each
    loop branch must re-establish each invariant conjunct); J brings its
    establishment/maintenance trio and the contracts their two mutual
    compatibility conditions. Rule tag thm1, or thm4 when the controller
    side is a family.
    """
    ctrl = system.controller
    plant = system.plant
    cc = ctrl.contract
    pc = plant.require_contract()
    env = system.env.formula
    J = system.invariant
    A_c, G_c, I_c = cc.assume, cc.guarantee, cc.init
    A_p, G_p, I_p = pc.assume, pc.guarantee, pc.init

    inv = conj(A_c, G_c, A_p, G_p, J)
    timing = _timing_init(ctrl.timestamps)
    ctrl_prog = ctrl.to_program()
    ctrl_bare = choice(*(rc.ctrl for rc in ctrl.choices))
    delta = ctrl.reactivity
    plant_delta: Program = plant.to_program(bound=delta)
    plant_own: Program = plant.to_program()
    delta_txt = fraction_to_text(delta)
    cap_txt = fraction_to_text(plant.controllability)
    theorem = "thm1" if len(ctrl.choices) == 1 else "thm4"

    out: list[ProofObligation] = []

    def add(case: str, hint: str, goal: Formula, *notes: str) -> None:
        out.append(
            ProofObligation(
                id=f"{theorem}.{case}".replace("-", "."),
                theorem=theorem,
                case=case,
                hint=hint,
                goal=goal,
                notes=tuple(notes),
            )
        )

    add(
        "base",
        "component-proof-reuse",
        Implies(conj(env, I_c, I_p, *timing, A_c, A_p), inv),
        "each component's contract supplies its own conjuncts; the "
        "timestamp equalities hold on loop entry and close the invariant",
    )
    add(
        "use",
        "component-proof-reuse",
        Implies(inv, conj(G_c, G_p)),
        "propositional: both guarantees are conjuncts of the loop invariant",
    )
    add(
        "step-1",
        "component-proof-reuse",
        Implies(inv, Box(ctrl_prog, conj(A_c, G_c))),
        "reuses the controller's own inductive step: "
        + print_formula(Implies(G_c, Box(ctrl_bare, G_c))),
    )
    add(
        "step-2",
        "composition-invariant",
        Implies(inv, Box(ctrl_prog, J)),
        f"reuses the maintenance condition {theorem}.jcmp.ctrl",
    )
    add(
        "step-3",
        "fv-bv-separation",
        Implies(inv, Box(ctrl_prog, G_p)),
        "controller writes "
        + _fmt_names(bound_vars(ctrl_prog))
        + " avoid the plant guarantee's free variables "
        + _fmt_names(free_vars(G_p)),
    )
    add(
        "step-4",
        "compatibility",
        Implies(inv, Box(ctrl_prog, A_p)),
        f"follows from step-1 and step-2 with {theorem}.compat.ba",
    )
    add(
        "step-5",
        "fv-bv-separation",
        Implies(inv, Box(plant_delta, G_c)),
        "evolved variables "
        + _fmt_names(plant.evolved | {CLOCK})
        + " avoid the controller guarantee's free variables "
        + _fmt_names(free_vars(G_c)),
    )
    add(
        "step-6",
        "differential-refinement",
        Implies(inv, Box(plant_own, conj(A_p, G_p))),
        "in-system runs are cut short at the reactivity: "
        + print_formula(Implies(inv, Box(plant_delta, conj(A_p, G_p)))),
        f"link: {delta_txt} <= {cap_txt} (arithmetic, auto-discharged)",
    )
    add(
        "step-7",
        "differential-refinement",
        Implies(inv, Box(plant_own, J)),
        "in-system runs are cut short at the reactivity: "
        + print_formula(Implies(inv, Box(plant_delta, J))),
        f"link: {delta_txt} <= {cap_txt} (arithmetic, auto-discharged)",
    )
    add(
        "step-8",
        "compatibility",
        Implies(inv, Box(plant_delta, A_c)),
        f"follows from step-6 and step-7 with {theorem}.compat.ab",
    )
    add(
        "jcmp-init",
        "composition-invariant",
        Implies(conj(I_c, I_p, *timing), J),
        "timestamps equal the clock on loop entry",
    )
    add("jcmp-ctrl", "composition-invariant", Implies(J, Box(ctrl_prog, J)))
    add("jcmp-plant", "composition-invariant", Implies(J, Box(plant_own, J)))
    add(
        "compat-ab",
        "compatibility",
        Implies(A_c, Box(plant_own, Implies(conj(G_p, J), A_c))),
        "the controller's assumption survives any plant run",
    )
    add(
        "compat-ba",
        "compatibility",
        Implies(A_p, Box(ctrl_prog, Implies(conj(G_c, J), A_p))),
        "the plant's assumption survives any controller run",
    )
    return out


# ---------------------------------------------------------------------------
# Controller pairs: 15 obligations


def _check_bound_is_behavior_free(
    name: str, where_program: Program | None, guarantee: Formula, invariant: Formula
) -> None:
    if where_program is not None and mentions_name(where_program, name):
        raise BoundOccursInBehavior(name, "program")
    if mentions_name(guarantee, name):
        raise BoundOccursInBehavior(name, "guarantee")
    if mentions_name(invariant, name):
        raise BoundOccursInBehavior(name, "invariant")


def obligations_controllers(
    a: ReactiveController | MultiChoiceController,
    b: ReactiveController | MultiChoiceController,
    cost_model: CostModel | None = None,
    env: Environment = EMPTY_ENVIRONMENT,
    invariant: Formula = TRUE,
) -> list[ProofObligation]:
    """Why `a` and `b` can share a loop at the joint firing bound.

    Same induction shape as the closed loop (rule tag thm2): the loop
    alternates the two controller families, each re-run at the joint
    scheduling cost of all atoms, and each branch must re-establish
    every invariant conjunct. Sound reuse of each side's standalone
    proof at the new bound requires that the numeric bound never leaks
    into behavior: the symbolic bound name must not occur in the
    programs, the guarantee, or the invariant (BoundOccursInBehavior
    otherwise).
    """
    am = as_multi_controller(a)
    bm = as_multi_controller(b)
    cm = cost_model if cost_model is not None else CostModel.uniform()
    raise_on_violations(non_interference_controllers(am, bm))
    for m in (am, bm):
        g = m.contract.guarantee
        for rc in m.choices:
            _check_bound_is_behavior_free(rc.bound_name, rc.ctrl, g, invariant)

    atoms = list(am.choices) + list(bm.choices)
    joint = cost(cm, atoms)
    prog_a = choice(*(rc.to_program(bound=joint) for rc in am.choices))
    prog_b = choice(*(rc.to_program(bound=joint) for rc in bm.choices))
    own_a = am.to_program()
    own_b = bm.to_program()
    e = env.formula
    A_a, G_a, I_a = am.contract.assume, am.contract.guarantee, am.contract.init
    A_b, G_b, I_b = bm.contract.assume, bm.contract.guarantee, bm.contract.init
    J = invariant
    inv = conj(A_a, G_a, A_b, G_b, J)
    timing = _timing_init(am.timestamps + bm.timestamps)
    joint_txt = fraction_to_text(joint)

    out: list[ProofObligation] = []

    def add(case: str, hint: str, goal: Formula, *notes: str) -> None:
        out.append(
            ProofObligation(
                id=f"thm2.{case}".replace("-", "."),
                theorem="thm2",
                case=case,
                hint=hint,
                goal=goal,
                notes=tuple(notes),
            )
        )

    reuse_note = (
        "the bound name {name} occurs in neither behavior nor guarantee, so "
        "the standalone proof transfers to the joint bound " + joint_txt + ": "
    )
    add(
        "base",
        "component-proof-reuse",
        Implies(conj(e, I_a, I_b, *timing, A_a, A_b), inv),
        "each side's contract supplies its own conjuncts; the timestamp "
        "equalities hold on loop entry and close the invariant",
    )
    add(
        "use",
        "component-proof-reuse",
        Implies(inv, conj(G_a, G_b)),
        "propositional: both guarantees are conjuncts of the loop invariant",
    )
    add(
        "step-1",
        "component-proof-reuse",
        Implies(inv, Box(prog_a, conj(A_a, G_a))),
        reuse_note.format(name=", ".join(rc.bound_name for rc in am.choices))
        + print_formula(Implies(conj(A_a, G_a), Box(own_a, conj(A_a, G_a)))),
    )
    add(
        "step-2",
        "composition-invariant",
        Implies(inv, Box(prog_a, J)),
        "the bound name does not occur in the invariant; reuses thm2.jcmp.a",
    )
    add(
        "step-3",
        "fv-bv-separation",
        Implies(inv, Box(prog_a, G_b)),
        "writes "
        + _fmt_names(bound_vars(prog_a))
        + " avoid the other guarantee's free variables "
        + _fmt_names(free_vars(G_b)),
    )
    add(
        "step-4",
        "compatibility",
        Implies(inv, Box(prog_a, A_b)),
        "follows from step-1 and step-2 with thm2.compat.ba",
    )
    add(
        "step-5",
        "fv-bv-separation",
        Implies(inv, Box(prog_b, G_a)),
        "writes "
        + _fmt_names(bound_vars(prog_b))
        + " avoid the other guarantee's free variables "
        + _fmt_names(free_vars(G_a)),
    )
    add(
        "step-6",
        "component-proof-reuse",
        Implies(inv, Box(prog_b, conj(A_b, G_b))),
        reuse_note.format(name=", ".join(rc.bound_name for rc in bm.choices))
        + print_formula(Implies(conj(A_b, G_b), Box(own_b, conj(A_b, G_b)))),
    )
    add(
        "step-7",
        "composition-invariant",
        Implies(inv, Box(prog_b, J)),
        "the bound name does not occur in the invariant; reuses thm2.jcmp.b",
    )
    add(
        "step-8",
        "compatibility",
        Implies(inv, Box(prog_b, A_a)),
        "follows from step-6 and step-7 with thm2.compat.ab",
    )
    add(
        "jcmp-init",
        "composition-invariant",
        Implies(conj(I_a, I_b, *timing), J),
        "timestamps equal the clock on loop entry",
    )
    add("jcmp-a", "composition-invariant", Implies(J, Box(own_a, J)))
    add("jcmp-b", "composition-invariant", Implies(J, Box(own_b, J)))
    add(
        "compat-ab",
        "compatibility",
        Implies(A_a, Box(own_b, Implies(conj(G_b, J), A_a))),
        "the first side's assumption survives the second side's runs",
    )
    add(
        "compat-ba",
        "compatibility",
        Implies(A_b, Box(own_a, Implies(conj(G_a, J), A_b))),
        "the second side's assumption survives the first side's runs",
    )
    return out


# ---------------------------------------------------------------------------
# Plant pairs: 10 obligations


def obligations_plants(
    a: ControllablePlant,
    b: ControllablePlant,
    env: Environment = EMPTY_ENVIRONMENT,
    invariant: Formula = TRUE,
) -> list[ProofObligation]:
    """Why the joint plant keeps both guarantees at the tighter bound.

    Rule tag thm3. The composed loop has a single branch (the joint
    ODE at bound min of the two), so the induction step splits into
    three: one reuse case per component contract and one maintenance
    case for the invariant. Reuse is sound because each side's
    equations are ghost dynamics for the other side's clauses (evolved
    variable sets are disjoint): dropping them from the joint ODE
    leaves an equivalent goal over the component's own dynamics.
    """
    joint = compose_plants(a, b)
    ca = a.require_contract()
    cb = b.require_contract()
    e = env.formula
    A_a, G_a, I_a = ca.assume, ca.guarantee, ca.init
    A_b, G_b, I_b = cb.assume, cb.guarantee, cb.init
    J = invariant
    inv = conj(A_a, G_a, A_b, G_b, J)
    bound = joint.controllability
    joint_prog = joint.to_program()
    min_txt = (
        f"min({fraction_to_text(a.controllability)}, "
        f"{fraction_to_text(b.controllability)}) = {fraction_to_text(bound)}"
    )

    out: list[ProofObligation] = []

    def add(case: str, hint: str, goal: Formula, *notes: str) -> None:
        out.append(
            ProofObligation(
                id=f"thm3.{case}".replace("-", "."),
                theorem="thm3",
                case=case,
                hint=hint,
                goal=goal,
                notes=tuple(notes),
            )
        )

    def ghosted(p: ControllablePlant, other: ControllablePlant) -> Program:
        kept = _dc_replace(p, domain=conj(p.domain, other.domain))
        return kept.to_program(bound=bound)

    add(
        "base",
        "component-proof-reuse",
        Implies(conj(e, I_a, I_b, A_a, A_b), inv),
        "each side's contract supplies its own conjuncts",
    )
    add(
        "use",
        "component-proof-reuse",
        Implies(inv, conj(G_a, G_b)),
        "propositional: both guarantees are conjuncts of the loop invariant",
    )
    add(
        "step-1",
        "component-proof-reuse",
        Implies(inv, Box(joint_prog, conj(A_a, G_a))),
        f"joint time bound {min_txt}",
        "the other side's equations are removable ghosts here; retained "
        "goal over own dynamics: "
        + print_formula(Implies(inv, Box(ghosted(a, b), conj(A_a, G_a)))),
    )
    add(
        "step-2",
        "component-proof-reuse",
        Implies(inv, Box(joint_prog, conj(A_b, G_b))),
        f"joint time bound {min_txt}",
        "the other side's equations are removable ghosts here; retained "
        "goal over own dynamics: "
        + print_formula(Implies(inv, Box(ghosted(b, a), conj(A_b, G_b)))),
    )
    add(
        "step-3",
        "composition-invariant",
        Implies(inv, Box(joint_prog, J)),
        "reuses thm3.jcmp.a and thm3.jcmp.b over the joint flow",
    )
    add("jcmp-init", "composition-invariant", Implies(conj(I_a, I_b), J))
    add("jcmp-a", "composition-invariant", Implies(J, Box(a.to_program(), J)))
    add("jcmp-b", "composition-invariant", Implies(J, Box(b.to_program(), J)))
    add(
        "compat-ab",
        "compatibility",
        Implies(A_a, Box(b.to_program(), Implies(conj(G_b, J), A_a))),
        "the first side's assumption survives the second side's runs",
    )
    add(
        "compat-ba",
        "compatibility",
        Implies(A_b, Box(a.to_program(), Implies(conj(G_a, J), A_b))),
        "the second side's assumption survives the first side's runs",
    )
    return out


# ---------------------------------------------------------------------------
# Bounded counterexample search


@dataclass(frozen=True)
class BoundedCheckResult:
    status: str  # holds | counterexample | inconclusive
    checked: int
    total: int
    counterexample: dict[str, float] | None
    initial: dict[str, float] | None
    caveat: str

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "checked": self.checked,
            "total": self.total,
            "counterexample": self.counterexample,
            "initial": self.initial,
            "caveat": self.caveat,
        }


def _axis(spec, grid: int) -> tuple[float, ...]:
    if isinstance(spec, (list, tuple)):
        lo, hi = float(spec[0]), float(spec[1])
        if hi < lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        if hi == lo or grid <= 1:
            return (lo,)
        return tuple(lo + (hi - lo) * i / (grid - 1) for i in range(grid))
    return (float(spec),)


class _Search:
    def __init__(self, domain_box: dict, grid: int, unroll: int, flow_samples: int):
        self.domain_box = domain_box
        self.grid = grid
        self.unroll = unroll
        self.flow_samples = flow_samples
        self.incomplete = False

    def reach(self, p: Program, s: dict) -> list[dict]:
        if isinstance(p, Test):
            return [s] if eval_formula(p.condition, s) else []
        if isinstance(p, Assign):
            out = dict(s)
            out[p.var] = eval_term(p.rhs, s)
            return [out]
        if isinstance(p, Seq):
            states: list[dict] = []
            for m in self.reach(p.first, s):
                states.extend(self.reach(p.second, m))
            return states
        if isinstance(p, Choice):
            return self.reach(p.left, s) + self.reach(p.right, s)
        if isinstance(p, ODE):
            samples, complete = flow_states(p, s, n_samples=self.flow_samples)
            if not complete:
                self.incomplete = True
            return samples
        if isinstance(p, Loop):
            seen: dict[tuple, dict] = {_state_key(s): s}
            frontier = [s]
            for depth in range(self.unroll):
                nxt: list[dict] = []
                for st in frontier:
                    for r in self.reach(p.body, st):
                        k = _state_key(r)
                        if k not in seen:
                            seen[k] = r
                            nxt.append(r)
                frontier = nxt
                if not frontier:
                    break
            if frontier:
                self.incomplete = True
            return list(seen.values())
        raise TypeError(f"not a program: {p!r}")

    def quantifier_axis(self, name: str) -> tuple[float, ...]:
        if name not in self.domain_box:
            raise UnboundedVariable(name)
        return _axis(self.domain_box[name], self.grid)

    def eval(self, f: Formula, s: dict) -> tuple[bool, dict | None]:
        """(verdict, failing state). The failing state is the reached

        state where a subformula went false, which for box goals is more
        useful than the initial point.
        """
        if isinstance(f, TrueF):
            return True, None
        if isinstance(f, FalseF):
            return False, s
        if isinstance(f, Compare):
            return (True, None) if eval_formula(f, s) else (False, s)
        if isinstance(f, Not):
            ok, _ = self.eval(f.operand, s)
            return (not ok, s if ok else None)
        if isinstance(f, And):
            ok, w = self.eval(f.left, s)
            if not ok:
                return False, w
            return self.eval(f.right, s)
        if isinstance(f, Or):
            ok, _ = self.eval(f.left, s)
            if ok:
                return True, None
            return self.eval(f.right, s)
        if isinstance(f, Implies):
            ok, _ = self.eval(f.left, s)
            if not ok:
                return True, None
            return self.eval(f.right, s)
        if isinstance(f, Box):
            for r in self.reach(f.program, s):
                ok, w = self.eval(f.post, r)
                if not ok:
                    return False, w if w is not None else r
            return True, None
        if isinstance(f, Forall):
            for v in self.quantifier_axis(f.var):
                ok, w = self.eval(f.body, {**s, f.var: v})
                if not ok:
                    return False, w
            self.incomplete = True
            return True, None
        if isinstance(f, Exists):
            for v in self.quantifier_axis(f.var):
                ok, _ = self.eval(f.body, {**s, f.var: v})
                if ok:
                    return True, None
            self.incomplete = True
            return False, s
        raise TypeError(f"not a formula: {f!r}")


def _state_key(s: dict) -> tuple:
    return tuple(sorted((k, round(v, 12)) for k, v in s.items()))


MAX_GRID_POINTS = 200000


def check_bounded(
    goal: Formula | ProofObligation,
    domain_box: dict,
    grid: int = 5,
    unroll: int = 2,
    flow_samples: int = 32,
) -> BoundedCheckResult:
    """Grid-and-sample falsification of one goal over a variable box.

    `domain_box` maps every free variable to a number, an [lo, hi]
    interval (gridded), or an "=other" alias. Implication goals count a
    point as checked only when the antecedent held there; zero checked
    points is reported as inconclusive, never as holds.
    """
    if isinstance(goal, ProofObligation):
        goal = goal.goal
    names = sorted(free_vars(goal))
    concrete: list[tuple[str, tuple[float, ...]]] = []
    aliases: list[tuple[str, str]] = []
    for n in names:
        if n not in domain_box:
            raise UnboundedVariable(n)
        spec = domain_box[n]
        if isinstance(spec, str):
            if not spec.startswith("="):
                raise ValueError(f"bad alias {spec!r} for {n!r}")
            aliases.append((n, spec[1:]))
        else:
            concrete.append((n, _axis(spec, grid)))

    n_points = 1
    for _, axis in concrete:
        n_points *= len(axis)
    if n_points > MAX_GRID_POINTS:
        raise CcsError(
            f"grid of {n_points} points exceeds the {MAX_GRID_POINTS} cap; "
            "pin more variables or lower the grid"
        )

    search = _Search(domain_box, grid, unroll, flow_samples)
    checked = 0
    total = 0
    axes = [axis for _, axis in concrete]
    keys = [n for n, _ in concrete]
    for combo in itertools.product(*axes) if axes else [()]:
        state = dict(zip(keys, combo))
        for n, target in aliases:
            seen = {n}
            t = target
            while True:
                if t in state:
                    state[n] = state[t]
                    break
                nxt = dict(aliases).get(t)
                if nxt is None or t in seen:
                    raise UnboundedVariable(t)
                seen.add(t)
                t = nxt
        total += 1
        if isinstance(goal, Implies):
            pre_ok, _ = search.eval(goal.left, state)
            if not pre_ok:
                continue
            checked += 1
            ok, witness = search.eval(goal.right, state)
        else:
            checked += 1
            ok, witness = search.eval(goal, state)
        if not ok:
            return BoundedCheckResult(
                status="counterexample",
                checked=checked,
                total=total,
                counterexample=dict(witness) if witness is not None else dict(state),
                initial=dict(state),
                caveat=_caveat(grid, unroll, flow_samples, search.incomplete, checked),
            )
    status = "holds" if checked > 0 else "inconclusive"
    return BoundedCheckResult(
        status=status,
        checked=checked,
        total=total,
        counterexample=None,
        initial=None,
        caveat=_caveat(grid, unroll, flow_samples, search.incomplete, checked),
    )


def _caveat(
    grid: int, unroll: int, flow_samples: int, incomplete: bool, checked: int
) -> str:
    parts = [
        f"bounded search: grid {grid} per axis, loops unrolled {unroll} deep, "
        f"flows sampled at {flow_samples} points"
    ]
    if incomplete:
        parts.append("some behavior was truncated at these bounds")
    if checked == 0:
        parts.append("no grid point satisfied the antecedent")
    return "; ".join(parts)


# ---------------------------------------------------------------------------
# Prover-file rendering


def render_kyx(ob: ProofObligation) -> str:
    """One obligation as a standalone prover problem file."""
    names = sorted(all_vars(ob.goal))
    decls = "\n".join(f"  Real {n};" for n in names)
    body = print_formula(ob.goal)
    body = body.replace(" U ", " ++ ")
    body = body.replace("forall ", "\\forall ").replace("exists ", "\\exists ")
    lines = [f"/* {ob.id} ({ob.provenance}) */", f"/* hint: {ob.hint} */"]
    for note in ob.notes:
        lines.append(f"/* note: {note} */")
    lines += [
        "",
        "ProgramVariables",
        decls,
        "End.",
        "",
        "Problem",
        f"  {body}",
        "End.",
        "",
    ]
    return "\n".join(lines)


def kyx_filename(ob: ProofObligation) -> str:
    return f"{ob.id}.kyx"
