import click
from reconsched.preset_ui import fail, presetOptions

def intList(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"'{value}' is not a comma separated list of integers")

@click.command()
@click.argument("runs", nargs=-1, required=True,
    type=click.Path(dir_okay=False, exists=True))
@click.option("--json", "jsonOutput", type=click.Path(dir_okay=False),
    help="Write the report as JSON")
@click.option("--html", type=click.Path(file_okay=False),
    help="Render an HTML page into this directory")
@click.option("--template", type=click.Path(), default="default",
    help="Path to a template directory or a name of a built-in one")
@click.option("--description", "-d", type=click.Path(dir_okay=False),
    help="Markdown file with a description for the HTML page")
@click.option("--name", type=str, help="Title of the HTML page")
@click.option("--stages/--no-stages", default=False, help="Print per-stage tables")
@click.option("--trace/--no-trace", default=False, help="Print a traceback on failure")
def report(runs, jsonOutput, html, template, description, name, stages, trace):
    """
    Compare run records: objective, downlinked data, improvement
    percentages, propellant use and per-stage activity.
    """
    try:
        from reconsched.report import ComparisonReport
        from reconsched.runs import loadRun

        comparison = ComparisonReport([loadRun(path) for path in runs])
        click.echo(comparison.toText(stages=stages))
        if jsonOutput:
            with open(jsonOutput, "w", encoding="utf-8") as f:
                f.write(comparison.toJson())
        if html:
            comparison.renderHtml(html, template, description, name)
    except Exception as e:
        fail(e, trace)

@click.command()
@click.argument("output", type=click.Path(dir_okay=False))
@click.option("--stages", "-S", callback=intList, default="8,9,12",
    help="Comma separated stage counts")
@click.option("--sats", "-K", callback=intList, default="5,6",
    help="Comma separated satellite counts")
@click.option("--slots", "-J", callback=intList, default="20,40,60,80",
    help="Comma separated slot counts")
@click.option("--seed", type=int, help="Seed of the first instance (default from preset)")
@click.option("--formulation", "-f", multiple=True,
    type=click.Choice(["eossp", "reossp", "rhp"]),
    help="Formulations to run (default all)")
@presetOptions(["grid", "constants", "propagation", "visibility", "maneuver",
    "solver", "rhp", "random"])
@click.option("--trace/--no-trace", default=False, help="Print a traceback on failure")
def experiment(output, stages, sats, slots, seed, formulation, trace, preset, dump,
               **sections):
    """
    Solve a grid of random instances with every formulation and summarize
    the results.
    """
    try:
        import json
        from reconsched.preset_ui import buildPreset
        from reconsched.report import (FORMULATION_ORDER, aggregate, experimentColumns,
            formatExperiment, runExperiment)
        from reconsched.solve_ui import limitsFromPreset

        preset = buildPreset(preset, dump, **sections)
        formulations = list(formulation) or FORMULATION_ORDER
        rows = runExperiment(stages, sats, slots,
            firstSeed=preset["random"]["seed"] if seed is None else seed,
            preset=preset, limits=limitsFromPreset(preset),
            lookahead=preset["rhp"]["lookahead"],
            arrivals=preset["solver"]["arrivalRows"],
            splitTime=preset["rhp"]["splitTime"],
            formulations=formulations,
            onRow=lambda r: click.echo(f"instance {r['instance']} "
                f"(S={r['S']}, K={r['K']}, J={r['J']}) done", err=True))
        columns = experimentColumns(formulations)
        with open(output, "w", encoding="utf-8") as f:
            json.dump({"rows": rows, "aggregate": aggregate(rows, columns)}, f, indent=2)
        click.echo(formatExperiment(rows, columns))
    except Exception as e:
        fail(e, trace)
