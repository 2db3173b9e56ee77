"""Random well-formed components for the composition law suites.

Each generated component owns a private variable slice (slot 0, 1 or 2)
so any pair or triple passes the non-interference gates by
construction: controllers write only their own slice, plant equations
evolve only their own slice, and guarantees mention only owned
variables. Shared read-only inputs u0/u1 exercise the free-variable
side of the gates without tripping them.
"""

from __future__ import annotations

import random
from fractions import Fraction

from ccskit.ast import (
    Assign,
    Choice,
    Compare,
    Plus,
    Rational,
    Seq,
    Test,
    Variable,
    num,
)
from ccskit.components import (
    MCCS,
    Contract,
    ControllablePlant,
    ReactiveController,
    make_ccs,
)

INPUTS = ("u0", "u1")

# Small reactivities against large controllabilities keep every pairwise
# and triple-wise composition schedulable, so the law suites never trip
# the cost gate by accident.
REACTIVITIES = [Fraction(n, 100) for n in (1, 2, 3, 5)]
CONTROLLABILITIES = [Fraction(n, 10) for n in (5, 7, 9)]


def _own_vars(slot: int) -> tuple[str, str]:
    return (f"y{slot}a", f"y{slot}b")


def _term(rng: random.Random, readable: list[str]):
    kind = rng.randrange(3)
    if kind == 0:
        return num(rng.randrange(-3, 4))
    if kind == 1:
        return Variable(rng.choice(readable))
    return Plus(Variable(rng.choice(readable)), num(rng.randrange(1, 4)))


def _discrete(rng: random.Random, own: tuple[str, str], depth: int = 2):
    readable = list(own) + list(INPUTS)
    if depth == 0 or rng.random() < 0.4:
        if rng.random() < 0.7:
            return Assign(rng.choice(own), _term(rng, readable))
        op = rng.choice(["<=", "<", ">=", ">", "="])
        return Test(Compare(op, _term(rng, readable), _term(rng, readable)))
    ctor = rng.choice([Seq, Choice])
    return ctor(_discrete(rng, own, depth - 1), _discrete(rng, own, depth - 1))


def rand_controller(rng: random.Random, slot: int) -> ReactiveController:
    own = _own_vars(slot)
    guarantee = Compare(
        rng.choice(["<=", ">="]), Variable(own[0]), num(rng.randrange(-5, 6))
    )
    return ReactiveController(
        name=f"c{slot}",
        ctrl=Seq(Assign(own[0], _term(rng, list(own) + list(INPUTS))),
                 _discrete(rng, own, depth=1)),
        reactivity=rng.choice(REACTIVITIES),
        timestamp=f"tau_{slot + 1}",
        contract=Contract(guarantee=guarantee),
    )


def rand_plant(rng: random.Random, slot: int) -> ControllablePlant:
    x = f"x{slot}"
    rhs = _term(rng, [x, *INPUTS])
    domain = Compare(">=", Variable(x), num(rng.randrange(-2, 1)))
    guarantee = Compare("<=", Variable(x), num(rng.randrange(5, 12)))
    return ControllablePlant(
        name=f"p{slot}",
        equations=((x, rhs),),
        domain=domain,
        controllability=rng.choice(CONTROLLABILITIES),
        contract=Contract(guarantee=guarantee),
    )


def rand_mccs(rng: random.Random, slot: int) -> MCCS:
    """One controller plus one plant over the same slice.

    The controller writes y-variables, the plant evolves the x-variable,
    so the closed-loop gates pass; inputs stay read-only.
    """
    ctrl = rand_controller(rng, slot)
    plant = rand_plant(rng, slot)
    return make_ccs(ctrl, plant, name=f"s{slot}")


def rand_store(rng: random.Random, names, lo: int = -4, hi: int = 4) -> dict:
    return {n: Fraction(rng.randrange(lo, hi + 1)) for n in names}
