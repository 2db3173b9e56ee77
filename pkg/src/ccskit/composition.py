"""Timed parallel composition of controllers, plants and closed loops.

The scheduling cost function is the n-ary max-plus form: controllers
sharing a resource run sequentially (their reactivities add), controllers
on independent resources run concurrently (max). Computing it over the
flat multiset of atomic controllers grouped by resource makes the
operator associative and commutative by construction, which the property
suite pins down.

Every operator is gated: it either returns a well-formed composite or
raises a named error; nothing is silently repaired.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .ast import (
    Formula,
    Loop,
    ODE,
    Program,
    Term,
    TrueF,
    choice,
    conj,
    conjuncts,
    fraction_to_text,
)
from .components import (
    MCCS,
    Contract,
    ControllablePlant,
    Environment,
    MultiChoiceController,
    ReactiveController,
    as_multi_controller,
    make_ccs,
)
from .errors import (
    InterferenceError,
    NonFreshTimestamp,
    UnmappedController,
)
from .statics import bound_vars, free_vars


# ---------------------------------------------------------------------------
# Scheduling cost


@dataclass(frozen=True)
class CostModel:
    """Maps controller names to the resource each one runs on.

    `default` (if set) is the resource for unmapped controllers; without
    it, looking up an unmapped name is an error.
    """

    mapping: dict[str, str] = field(default_factory=dict)
    default: str | None = None

    def resource(self, name: str) -> str:
        if name in self.mapping:
            return self.mapping[name]
        if self.default is not None:
            return self.default
        raise UnmappedController(name)

    @classmethod
    def uniform(cls, resource: str = "cpu") -> "CostModel":
        """Everything on one shared resource (the conservative default)."""
        return cls(mapping={}, default=resource)

    @classmethod
    def from_file(cls, path: str | Path) -> "CostModel":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in data.items()
        ):
            raise ValueError("cost model must be a JSON object of name -> resource")
        default = data.pop("*", None)
        return cls(mapping=data, default=default)

    def describe(self) -> dict:
        out = dict(self.mapping)
        if self.default is not None:
            out["*"] = self.default
        return out


def cost(cm: CostModel, controllers: Iterable[ReactiveController]) -> Fraction:
    """Worst-case time to run every controller once: reactivities add

    within a resource, the slowest resource wins across resources.
    """
    per_resource: dict[str, Fraction] = {}
    for rc in controllers:
        r = cm.resource(rc.name)
        per_resource[r] = per_resource.get(r, Fraction(0)) + rc.reactivity
    if not per_resource:
        return Fraction(0)
    return max(per_resource.values())


# ---------------------------------------------------------------------------
# Non-interference gates


@dataclass(frozen=True)
class Violation:
    gate: str
    severity: str  # "error" | "warning"
    description: str
    variables: frozenset[str]

    def describe(self) -> str:
        names = ", ".join(sorted(self.variables))
        return f"{self.gate}: {self.description} ({names})"

    def to_json(self) -> dict:
        return {
            "gate": self.gate,
            "severity": self.severity,
            "description": self.description,
            "variables": sorted(self.variables),
        }


@dataclass(frozen=True)
class NonInterferenceReport:
    gate: str
    violations: tuple[Violation, ...] = ()
    warnings: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "gate": self.gate,
            "ok": self.ok,
            "violations": [v.to_json() for v in self.violations],
            "warnings": [w.to_json() for w in self.warnings],
        }


def raise_on_violations(report: NonInterferenceReport) -> NonInterferenceReport:
    if not report.ok:
        raise InterferenceError(report)
    return report


def _check(gate: str, desc: str, overlap: frozenset[str], sink: list[Violation]):
    if overlap:
        sink.append(Violation(gate, "error", desc, overlap))


def _controller_writes(c: MultiChoiceController) -> frozenset[str]:
    """All variables the controller family writes, timestamps included."""
    out: frozenset[str] = frozenset()
    for rc in c.choices:
        out |= bound_vars(rc.to_program())
    return out


def non_interference_ctrl_plant(
    ctrl: ReactiveController | MultiChoiceController,
    plant: ControllablePlant,
) -> NonInterferenceReport:
    """Control and dynamics must not write each other's story:

    the controller guarantee may not mention evolved variables, the plant
    guarantee may not mention controller-written variables, and the two
    write sets are disjoint.
    """
    c = as_multi_controller(ctrl)
    g_ctrl = c.contract.guarantee
    g_plant = plant.require_contract().guarantee
    ctrl_writes: frozenset[str] = frozenset()
    for rc in c.choices:
        ctrl_writes |= bound_vars(rc.ctrl)
    evolved = plant.evolved

    errors: list[Violation] = []
    _check(
        "ctrl-plant",
        f"guarantee of {c.name!r} reads variables evolved by {plant.name!r}",
        free_vars(g_ctrl) & evolved,
        errors,
    )
    _check(
        "ctrl-plant",
        f"guarantee of {plant.name!r} reads variables written by {c.name!r}",
        free_vars(g_plant) & ctrl_writes,
        errors,
    )
    _check(
        "ctrl-plant",
        f"{c.name!r} and {plant.name!r} write the same variables",
        ctrl_writes & evolved,
        errors,
    )
    return NonInterferenceReport("ctrl-plant", tuple(errors))


def non_interference_controllers(
    a: ReactiveController | MultiChoiceController,
    b: ReactiveController | MultiChoiceController,
) -> NonInterferenceReport:
    """Two controller families may not write the same variables, and

    neither guarantee may read what the other side writes. A guarantee
    reading its *own* writer's variables is reported as a warning only:
    it is the normal shape of an actuation guarantee.
    """
    ma, mb = as_multi_controller(a), as_multi_controller(b)
    writes_a, writes_b = _controller_writes(ma), _controller_writes(mb)
    g_a, g_b = ma.contract.guarantee, mb.contract.guarantee

    errors: list[Violation] = []
    warnings: list[Violation] = []
    _check(
        "controllers",
        f"{ma.name!r} and {mb.name!r} write the same variables",
        writes_a & writes_b,
        errors,
    )
    _check(
        "controllers",
        f"guarantee of {ma.name!r} reads variables written by {mb.name!r}",
        free_vars(g_a) & writes_b,
        errors,
    )
    _check(
        "controllers",
        f"guarantee of {mb.name!r} reads variables written by {ma.name!r}",
        free_vars(g_b) & writes_a,
        errors,
    )
    self_a = free_vars(g_a) & writes_a
    if self_a:
        warnings.append(
            Violation(
                "controllers",
                "warning",
                f"guarantee of {ma.name!r} reads its own written variables",
                self_a,
            )
        )
    self_b = free_vars(g_b) & writes_b
    if self_b:
        warnings.append(
            Violation(
                "controllers",
                "warning",
                f"guarantee of {mb.name!r} reads its own written variables",
                self_b,
            )
        )
    return NonInterferenceReport("controllers", tuple(errors), tuple(warnings))


def non_interference_plants(
    a: ControllablePlant, b: ControllablePlant
) -> NonInterferenceReport:
    """Plant dynamics must be variable-disjoint: neither side evolves the

    other's variables, feeds them into its right-hand sides, or lets its
    guarantee depend on them.
    """
    g_a, g_b = a.require_contract().guarantee, b.require_contract().guarantee
    errors: list[Violation] = []
    _check(
        "plants",
        f"{a.name!r} and {b.name!r} evolve the same variables",
        a.evolved & b.evolved,
        errors,
    )
    _check(
        "plants",
        f"dynamics of {b.name!r} read variables evolved by {a.name!r}",
        a.evolved & b.rhs_free_vars(),
        errors,
    )
    _check(
        "plants",
        f"dynamics of {a.name!r} read variables evolved by {b.name!r}",
        b.evolved & a.rhs_free_vars(),
        errors,
    )
    _check(
        "plants",
        f"guarantee of {b.name!r} reads variables evolved by {a.name!r}",
        a.evolved & free_vars(g_b),
        errors,
    )
    _check(
        "plants",
        f"guarantee of {a.name!r} reads variables evolved by {b.name!r}",
        b.evolved & free_vars(g_a),
        errors,
    )
    return NonInterferenceReport("plants", tuple(errors))


# ---------------------------------------------------------------------------
# Composition operators


def compose_controllers(
    a: ReactiveController | MultiChoiceController,
    b: ReactiveController | MultiChoiceController,
    cm: CostModel,
) -> MultiChoiceController:
    """Union of the two controller families, every choice re-emitted at

    the combined scheduling cost over the flat multiset of atomic
    controllers.
    """
    ma, mb = as_multi_controller(a), as_multi_controller(b)
    raise_on_violations(non_interference_controllers(ma, mb))
    stamps_a = set(ma.timestamps)
    for s in mb.timestamps:
        if s in stamps_a:
            raise NonFreshTimestamp(f"timestamp {s!r} used on both sides")
    atoms = ma.choices + mb.choices
    bound = cost(cm, atoms)
    return MultiChoiceController(
        name=f"{ma.name}__{mb.name}", choices=atoms, reactivity=bound
    )


def compose_plants(a: ControllablePlant, b: ControllablePlant) -> ControllablePlant:
    """Joint dynamics: concatenated equations under the conjoined domain,

    controllable within the smaller of the two bounds. The shared clock
    equation stays unique (it is injected at program emission, not
    stored).
    """
    raise_on_violations(non_interference_plants(a, b))
    ca, cb = a.require_contract(), b.require_contract()
    return ControllablePlant(
        name=f"{a.name}__{b.name}",
        equations=a.equations + b.equations,
        domain=conj(*conjuncts(a.domain), *conjuncts(b.domain)),
        controllability=min(a.controllability, b.controllability),
        contract=Contract(
            assume=conj(ca.assume, cb.assume),
            guarantee=conj(ca.guarantee, cb.guarantee),
            init=conj(ca.init, cb.init),
        ),
        bound_name=f"Delta_{a.name}__{b.name}",
    )


def compose_mccs(a: MCCS, b: MCCS, cm: CostModel) -> MCCS:
    """Parallel composition of two closed loops: all pairwise gates, the

    union of the controller families at the combined cost, the joint
    plant, and the schedulability side condition cost <= min bound.
    """
    raise_on_violations(non_interference_controllers(a.controller, b.controller))
    raise_on_violations(non_interference_plants(a.plant, b.plant))
    raise_on_violations(non_interference_ctrl_plant(a.controller, b.plant))
    raise_on_violations(non_interference_ctrl_plant(b.controller, a.plant))

    controller = compose_controllers(a.controller, b.controller, cm)
    plant = compose_plants(a.plant, b.plant)
    env = (
        a.env
        if a.env == b.env
        else Environment(conj(a.env.formula, b.env.formula))
    )
    invariant = conj(a.invariant, b.invariant)
    # make_ccs re-checks ctrl/plant interference, environment constancy and
    # the cost <= controllability side condition.
    return make_ccs(
        controller,
        plant,
        env=env,
        invariant=invariant,
        name=f"{a.name}__{b.name}",
    )


def choice_composition(
    parts: Sequence[tuple[Program, tuple[tuple[str, Term], ...], Formula]],
) -> Program:
    """Untimed base pattern: discrete behaviours in nondeterministic

    union with the joint dynamics, all under a loop:

        ( disc_1 U ... U disc_n U {x_1' = e_1, ..., x_m' = e_m & H_1 & ... } )*

    The timed operators above are refinements of this shape.
    """
    if not parts:
        raise ValueError("nothing to compose")
    eqs: tuple[tuple[str, Term], ...] = ()
    domains: list[Formula] = []
    discs: list[Program] = []
    for disc, equations, domain in parts:
        discs.append(disc)
        eqs = eqs + tuple(equations)
        domains.extend(c for c in conjuncts(domain) if not isinstance(c, TrueF))
    joint = ODE(eqs, conj(*domains))
    return Loop(choice(*discs, joint))
