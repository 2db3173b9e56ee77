"""Command-line front end.

Subcommands mirror the library's pipeline stages: `check` runs the
construction gates and reports variable usage, `compose` flattens a
model file into its composed closed loop, `obligations` emits the proof
decomposition, `simulate` runs seeded schedule batches, and `export-kyx`
turns an obligations JSON file into one prover problem file each.

Output is JSON by default (`--format text` where a human table exists)
so pipelines can consume results without scraping.

Exit codes: 0 clean, 1 the analysis found a problem with the model
(gate failure, monitor violation, stuck run), 2 bad input (parse
errors, missing files, wrong usage).
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click

from . import dsl
from .components import MCCS
from .composition import (
    CostModel,
    non_interference_controllers,
    non_interference_ctrl_plant,
)
from .errors import CcsError, ParseError
from .obligations import (
    ProofObligation,
    kyx_filename,
    obligation_from_json,
    obligations_ccs,
    obligations_controllers,
    obligations_plants,
    render_kyx,
)
from .ast import fraction_to_text
from .simulator import (
    STRATEGIES,
    Schedule,
    batch_schedule_seed,
    run,
    run_batch,
    sample_init,
    write_trace_csv,
)
from .statics import bound_vars, free_vars, must_bound_vars

FORMATS = ["json", "text"]


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        click.echo(f"cannot read {path}: {e}", err=True)
        sys.exit(2)


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        click.echo(f"bad {what} {path}: {e}", err=True)
        sys.exit(2)


def _cost_model(path: str | None) -> CostModel | None:
    if path is None:
        return None
    try:
        return CostModel.from_file(path)
    except (OSError, ValueError, json.JSONDecodeError) as e:
        click.echo(f"bad cost model {path}: {e}", err=True)
        sys.exit(2)


def _load(path: str, system: str | None, cost_model: CostModel | None = None) -> MCCS:
    text = _read_text(path)
    try:
        return dsl.load(text, system=system, cost_model=cost_model)
    except ParseError as e:
        click.echo(f"{path}: parse error: {e}", err=True)
        sys.exit(2)
    except CcsError as e:
        click.echo(f"{path}: rejected ({type(e).__name__}): {e}", err=True)
        sys.exit(1)


def _parts(path: str, system: str | None):
    text = _read_text(path)
    try:
        return dsl.build_components(text, system=system)
    except ParseError as e:
        click.echo(f"{path}: parse error: {e}", err=True)
        sys.exit(2)
    except CcsError as e:
        click.echo(f"{path}: rejected ({type(e).__name__}): {e}", err=True)
        sys.exit(1)


@click.group()
@click.version_option(package_name="ccskit")
def main() -> None:
    """Assemble, check, decompose and simulate timed component models."""


# ---------------------------------------------------------------------------


def _variable_report(system: MCCS) -> dict:
    def triple(program) -> dict:
        return {
            "fv": sorted(free_vars(program)),
            "bv": sorted(bound_vars(program)),
            "mbv": sorted(must_bound_vars(program)),
        }

    out = {"system": triple(system.to_program())}
    for rc in system.controller.choices:
        out[rc.name] = triple(rc.to_program())
    out[system.plant.name] = triple(system.plant.to_program())
    return out


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--system", default=None, help="system name when the file has several")
@click.option(
    "--cost-model", "cost_model_path", default=None, help="JSON name -> resource map"
)
@click.option("--vars", "show_vars", is_flag=True, help="include FV/BV/MBV tables")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="json")
def check(
    model: str,
    system: str | None,
    cost_model_path: str | None,
    show_vars: bool,
    fmt: str,
):
    """Run all construction gates on MODEL and report the result."""
    sys_ = _load(model, system, _cost_model(cost_model_path))
    warnings = []
    reports = [non_interference_ctrl_plant(sys_.controller, sys_.plant)]
    atoms = sys_.controller.choices
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            reports.append(non_interference_controllers(atoms[i], atoms[j]))
    for report in reports:
        warnings.extend(w.describe() for w in report.warnings)

    payload = {
        "system": sys_.name,
        "status": "ok",
        "controllers": [
            {"name": rc.name, "reactivity": fraction_to_text(rc.reactivity)}
            for rc in atoms
        ],
        "plant": {
            "name": sys_.plant.name,
            "controllability": fraction_to_text(sys_.plant.controllability),
        },
        "scheduling": {
            "cost": fraction_to_text(sys_.controller.reactivity),
            "bound": fraction_to_text(sys_.plant.controllability),
        },
        "warnings": warnings,
    }
    if show_vars:
        payload["variables"] = _variable_report(sys_)

    if fmt == "json":
        click.echo(json.dumps(payload, indent=2))
        return
    click.echo(f"ok {sys_.name}")
    for rc in atoms:
        click.echo(f"  controller {rc.name} (reactivity {fraction_to_text(rc.reactivity)})")
    click.echo(
        f"  plant {sys_.plant.name} "
        f"(controllability {fraction_to_text(sys_.plant.controllability)})"
    )
    click.echo(
        f"  scheduling cost {payload['scheduling']['cost']} <= "
        f"bound {payload['scheduling']['bound']}"
    )
    for w in warnings:
        click.echo(f"  warning: {w}")
    if show_vars:
        for name, triple in payload["variables"].items():
            click.echo(f"  {name}:")
            click.echo(f"    FV:  {', '.join(triple['fv']) or '-'}")
            click.echo(f"    BV:  {', '.join(triple['bv']) or '-'}")
            click.echo(f"    MBV: {', '.join(triple['mbv']) or '-'}")


# ---------------------------------------------------------------------------


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--system", default=None, help="system name when the file has several")
@click.option(
    "--cost-model", "cost_model_path", default=None, help="JSON name -> resource map"
)
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def compose(
    model: str,
    system: str | None,
    cost_model_path: str | None,
    output: str,
):
    """Compose MODEL's declared system and write the flattened file.

    Controllers merge under the cost model (reactivities on a shared
    resource add), plants merge pairwise; the output declares the same
    closed loop as one controller family and one joint plant.
    """
    sys_ = _load(model, system, _cost_model(cost_model_path))
    try:
        text = dsl.serialize_composed(sys_)
    except CcsError as e:
        click.echo(f"cannot serialize ({type(e).__name__}): {e}", err=True)
        sys.exit(1)
    Path(output).write_text(text)
    click.echo(f"wrote {output}")
    click.echo(
        f"  {sys_.name}: scheduling cost "
        f"{fraction_to_text(sys_.controller.reactivity)} <= bound "
        f"{fraction_to_text(sys_.plant.controllability)}"
    )


# ---------------------------------------------------------------------------


def _gather_obligations(
    model: str, system: str | None, theorem: str, cost_model: CostModel | None
) -> list[ProofObligation]:
    sysdecl, rcs, cps, env, invariant = _parts(model, system)
    if theorem == "auto":
        if rcs and cps:
            theorem = "ccs"
        elif len(rcs) >= 2:
            theorem = "controllers"
        elif len(cps) >= 2:
            theorem = "plants"
        else:
            click.echo(
                f"{sysdecl.name!r} has no decomposable composition", err=True
            )
            sys.exit(2)
    try:
        if theorem == "ccs":
            return obligations_ccs(_load(model, system, cost_model))
        if theorem == "controllers":
            if len(rcs) != 2:
                click.echo(
                    f"--theorem controllers needs exactly two controllers, "
                    f"{sysdecl.name!r} has {len(rcs)}",
                    err=True,
                )
                sys.exit(2)
            return obligations_controllers(
                rcs[0], rcs[1], cost_model=cost_model, env=env, invariant=invariant
            )
        if len(cps) != 2:
            click.echo(
                f"--theorem plants needs exactly two plants, "
                f"{sysdecl.name!r} has {len(cps)}",
                err=True,
            )
            sys.exit(2)
        return obligations_plants(cps[0], cps[1], env=env, invariant=invariant)
    except CcsError as e:
        click.echo(f"rejected ({type(e).__name__}): {e}", err=True)
        sys.exit(1)


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--system", default=None, help="system name when the file has several")
@click.option(
    "--theorem",
    type=click.Choice(["auto", "ccs", "controllers", "plants"]),
    default="auto",
    help="which decomposition to emit (auto picks by system shape)",
)
@click.option(
    "--cost-model", "cost_model_path", default=None, help="JSON name -> resource map"
)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="json")
@click.option("-o", "--out", default=None, type=click.Path(dir_okay=False))
def obligations(
    model: str,
    system: str | None,
    theorem: str,
    cost_model_path: str | None,
    fmt: str,
    out: str | None,
):
    """Emit the proof obligations for MODEL."""
    obs = _gather_obligations(model, system, theorem, _cost_model(cost_model_path))
    payload = json.dumps([ob.to_json() for ob in obs], indent=2)
    if out is not None:
        Path(out).write_text(payload + "\n")
        click.echo(f"wrote {len(obs)} obligations to {out}")
    elif fmt == "json":
        click.echo(payload)
    else:
        width = max(len(ob.id) for ob in obs)
        for ob in obs:
            click.echo(f"{ob.id.ljust(width)}  [{ob.hint}]  {ob.status}")
        click.echo(f"{len(obs)} obligations")


# ---------------------------------------------------------------------------


@main.command("export-kyx")
@click.argument("obligations_json", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", "out_dir", required=True, type=click.Path(file_okay=False))
def export_kyx(obligations_json: str, out_dir: str):
    """Write one prover problem file per obligation in OBLIGATIONS_JSON."""
    data = _read_json(obligations_json, "obligations file")
    if not isinstance(data, list):
        click.echo(f"{obligations_json}: expected a JSON array", err=True)
        sys.exit(2)
    try:
        obs = [obligation_from_json(d) for d in data]
    except (KeyError, TypeError, ValueError, ParseError) as e:
        click.echo(f"{obligations_json}: bad obligation entry: {e}", err=True)
        sys.exit(2)
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    for ob in obs:
        (directory / kyx_filename(ob)).write_text(render_kyx(ob))
    click.echo(f"wrote {len(obs)} problem files to {out_dir}")


# ---------------------------------------------------------------------------


def _default_init_path(model: str) -> Path:
    return Path(model).with_suffix("").with_name(Path(model).stem + ".init.json")


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--system", default=None, help="system name when the file has several")
@click.option("--schedules", default=1, show_default=True, help="number of runs")
@click.option("--seed", default=0, show_default=True, help="batch seed")
@click.option("--horizon", default=20.0, show_default=True, help="time horizon")
@click.option(
    "--strategy",
    type=click.Choice(list(STRATEGIES)),
    default="uniform-random",
    show_default=True,
)
@click.option(
    "--init",
    "init_path",
    default=None,
    type=click.Path(dir_okay=False),
    help="JSON file: variable -> number, [lo, hi] interval, or \"=var\" alias "
    "(default: <model>.init.json beside the model)",
)
@click.option(
    "--out",
    "outputs",
    multiple=True,
    type=click.Path(dir_okay=False),
    help="output path; .csv writes the trace of run 0, .json the batch summary "
    "(repeatable)",
)
@click.option(
    "--cost-model", "cost_model_path", default=None, help="JSON name -> resource map"
)
def simulate(
    model: str,
    system: str | None,
    schedules: int,
    seed: int,
    horizon: float,
    strategy: str,
    init_path: str | None,
    outputs: tuple[str, ...],
    cost_model_path: str | None,
):
    """Run seeded schedule batches and report monitor violations."""
    sys_ = _load(model, system, _cost_model(cost_model_path))
    if init_path is None:
        candidate = _default_init_path(model)
        if not candidate.exists():
            click.echo(
                f"no --init given and {candidate} does not exist", err=True
            )
            sys.exit(2)
        init_path = str(candidate)
    init_box = _read_json(init_path, "init file")

    csv_paths = [p for p in outputs if p.endswith(".csv")]
    json_paths = [p for p in outputs if p.endswith(".json")]
    odd = [p for p in outputs if not (p.endswith(".csv") or p.endswith(".json"))]
    if odd:
        click.echo(
            "cannot tell what to write to " + ", ".join(odd)
            + " (expected a .csv or .json suffix)",
            err=True,
        )
        sys.exit(2)

    try:
        summary = run_batch(
            sys_, schedules, seed, init_box, strategy=strategy, horizon=horizon
        )
        for path in csv_paths:
            run_seed = batch_schedule_seed(seed, 0)
            init0 = sample_init(init_box, random.Random(run_seed ^ 0x5EED))
            trace = run(
                sys_,
                Schedule(strategy=strategy, seed=run_seed, horizon=horizon),
                init0,
            )
            write_trace_csv(trace, path)
            click.echo(f"wrote trace of run 0 to {path}", err=True)
    except CcsError as e:
        click.echo(f"simulation failed ({type(e).__name__}): {e}", err=True)
        sys.exit(1)
    payload = json.dumps(summary.to_json(), indent=2)
    for path in json_paths:
        Path(path).write_text(payload + "\n")
        click.echo(f"wrote summary to {path}", err=True)
    if not json_paths:
        click.echo(payload)
    if summary.runs_with_violations or summary.stuck_runs:
        sys.exit(1)


if __name__ == "__main__":
    main()
