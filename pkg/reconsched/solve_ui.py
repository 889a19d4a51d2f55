import click
import sys
from reconsched.preset_ui import (EXIT_INVALID, fail, pathCompletion, presetOptions)

FORMULATIONS = ["eossp", "reossp", "rhp"]

def limitsFromPreset(preset, timeLimit=None, gap=None, backend=None, nodeLimit=None):
    from reconsched.solver import SolveLimits
    solver = preset["solver"]
    return SolveLimits(
        timeLimit=float(solver["timeLimit"]) if timeLimit is None else timeLimit,
        gapTolerance=float(solver["gap"]) if gap is None else gap,
        integralityTolerance=float(solver["integrality"]),
        nodeLimit=solver.get("nodeLimit") if nodeLimit is None else nodeLimit,
        backend=solver["backend"] if backend is None else backend)

solverOptions = [
    click.option("--time-limit", type=float, help="Wall time limit in seconds"),
    click.option("--gap", type=float, help="Relative optimality gap"),
    click.option("--backend", type=click.Choice(["bnb", "highs"]),
        help="MILP backend"),
    click.option("--node-limit", type=int, help="Branch and bound node limit"),
    click.option("--arrivals", type=click.Choice(["direct", "aggregated"]),
        help="Form of the rows coupling visibility to transfers")
]

def addOptions(options):
    def decorate(f):
        for option in reversed(options):
            f = option(f)
        return f
    return decorate


@click.command()
@click.argument("scenario", type=click.Path(dir_okay=False, exists=True),
    shell_complete=pathCompletion(".json"))
@click.argument("output", type=click.Path(dir_okay=False),
    shell_complete=pathCompletion(".json"))
@click.option("--formulation", "-f", type=click.Choice(FORMULATIONS), required=True,
    help="Fixed constellation, reconfigurable, or rolling horizon")
@click.option("--lookahead", "-L", type=int, help="Lookahead stages of the rolling horizon")
@addOptions(solverOptions)
@click.option("--schedule", type=click.Path(dir_okay=False),
    help="Also write the bare schedule into this file")
@presetOptions(["solver", "rhp"])
@click.option("--trace/--no-trace", default=False, help="Print a traceback on failure")
def solve(scenario, output, formulation, lookahead, time_limit, gap, backend,
          node_limit, arrivals, schedule, trace, preset, dump, **sections):
    """
    Solve a scenario and write the run record.
    """
    try:
        from reconsched.preset_ui import buildPreset
        from reconsched.runs import saveRun, solveFormulation
        from reconsched.schedule import saveSchedule
        from reconsched.scenario import loadConfig

        preset = buildPreset(preset, dump, **sections)
        instance = loadConfig(scenario)
        limits = limitsFromPreset(preset, time_limit, gap, backend, node_limit)
        run = solveFormulation(instance, formulation, limits,
            lookahead=preset["rhp"]["lookahead"] if lookahead is None else lookahead,
            arrivals=preset["solver"]["arrivalRows"] if arrivals is None else arrivals,
            splitTime=preset["rhp"]["splitTime"])
        saveRun(output, run)
        if schedule:
            saveSchedule(schedule, run.schedule)
        click.echo(f"{formulation}: {run.status}, z = {run.z:.0f}, Z = {run.Z:.2f} GB, "
            f"{run.wallTime:.2f} s, dv = {run.propellant.sum():.2f} m/s")
    except Exception as e:
        fail(e, trace)


@click.command()
@click.argument("schedule", type=click.Path(dir_okay=False, exists=True))
@click.argument("scenario", type=click.Path(dir_okay=False, exists=True))
@click.option("--trace/--no-trace", default=False, help="Print a traceback on failure")
def validate(schedule, scenario, trace):
    """
    Check a schedule (or a run record) against the scenario data. Exits with
    code 5 when a constraint is violated.
    """
    try:
        import json
        from reconsched.model import ProblemData
        from reconsched.runs import FormulationRun
        from reconsched.schedule import scheduleFromDict
        from reconsched.scenario import loadConfig
        from reconsched.validate import validateSchedule

        with open(schedule, encoding="utf-8") as f:
            document = json.load(f)
        if "formulation" in document:
            parsed = FormulationRun.fromDict(document).schedule
        else:
            parsed = scheduleFromDict(document)
        instance = loadConfig(scenario)
        data = ProblemData(instance.tensors, instance.constants,
            instance.costs if parsed.staged else None)
        violations = validateSchedule(parsed, data)
    except Exception as e:
        fail(e, trace)
    if violations:
        for v in violations:
            click.echo(str(v))
        click.echo(f"{len(violations)} violation(s)")
        sys.exit(EXIT_INVALID)
    click.echo("Schedule is feasible")


@click.command("export-lp")
@click.argument("scenario", type=click.Path(dir_okay=False, exists=True))
@click.argument("output", type=click.Path(dir_okay=False),
    shell_complete=pathCompletion(".lp"))
@click.option("--formulation", "-f", type=click.Choice(FORMULATIONS), required=True)
@click.option("--lookahead", "-L", type=int, help="Lookahead stages of the subproblem")
@click.option("--solution", type=click.Path(dir_okay=False),
    help="Solve the exported model and write its solution file")
@addOptions(solverOptions)
@presetOptions(["solver", "rhp"])
@click.option("--trace/--no-trace", default=False, help="Print a traceback on failure")
def exportLp(scenario, output, formulation, lookahead, solution, time_limit,
             gap, backend, node_limit, arrivals, trace, preset, dump, **sections):
    """
    Write a model as CPLEX LP text. The rolling horizon exports its first
    subproblem.
    """
    try:
        from reconsched.lpformat import exportLp as export, writeSolution
        from reconsched.model import (buildEossp, buildReossp, buildRhpSubproblem,
            initialCarry)
        from reconsched.preset_ui import buildPreset
        from reconsched.scenario import loadConfig
        from reconsched.solver import solveMilp

        preset = buildPreset(preset, dump, **sections)
        instance = loadConfig(scenario)
        arrivals = preset["solver"]["arrivalRows"] if arrivals is None else arrivals
        if formulation == "eossp":
            from reconsched.model import ProblemData
            model = buildEossp(ProblemData(instance.tensors, instance.constants))
        elif formulation == "reossp":
            model = buildReossp(instance.problemData(), arrivals)
        else:
            data = instance.problemData()
            carry = initialCarry(instance.constants, len(instance.satellites))
            model = buildRhpSubproblem(data, 1,
                preset["rhp"]["lookahead"] if lookahead is None else lookahead,
                carry, arrivals)
        with open(output, "w", encoding="utf-8") as f:
            f.write(export(model))
        click.echo(f"{model.name}: {model.numVariables} columns "
            f"({model.numBinaries} binary), {model.numRows} rows")
        if solution:
            result = solveMilp(model, limitsFromPreset(preset, time_limit, gap,
                backend, node_limit))
            writeSolution(solution, model, result)
            click.echo(f"{result.status}, objective {result.objective}")
    except Exception as e:
        fail(e, trace)
