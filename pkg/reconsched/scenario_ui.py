import click
from reconsched.preset_ui import fail, pathCompletion, presetOptions

@click.command()
@click.argument("output", type=click.Path(dir_okay=False),
    shell_complete=pathCompletion(".json"))
@click.option("--seed", type=int, help="Seed of the instance (default from preset)")
@click.option("--stages", "-S", type=int, help="Number of stages (default from preset)")
@click.option("--sats", "-K", type=int, help="Number of satellites (default from preset)")
@click.option("--slots", "-J", type=int, help="Phase slots per stage (default from preset)")
@presetOptions(["grid", "constants", "propagation", "visibility", "maneuver", "random"])
@click.option("--trace/--no-trace", default=False, help="Print a traceback on failure")
def generate(output, seed, stages, sats, slots, trace, preset, dump, **sections):
    """
    Generate a random scenario and save its config.
    """
    try:
        from reconsched.preset_ui import buildPreset
        from reconsched.scenario import generateRandom, saveConfig

        preset = buildPreset(preset, dump, **sections)
        seed = preset["random"]["seed"] if seed is None else seed
        stages = preset["grid"]["stages"] if stages is None else stages
        sats = preset["random"]["satellites"] if sats is None else sats
        slots = preset["maneuver"]["phases"] if slots is None else slots
        instance = generateRandom(seed, stages, sats, slots, preset)
        saveConfig(output, instance)
        click.echo(f"{instance.name}: T={instance.grid.totalSteps}, S={stages}, "
            f"K={sats}, J={slots}, P={len(instance.targets)}, G={len(instance.stations)}")
    except Exception as e:
        fail(e, trace)

@click.command("case-study")
@click.argument("output", type=click.Path(dir_okay=False),
    shell_complete=pathCompletion(".json"))
@click.option("--track", type=click.Path(dir_okay=False),
    help="Storm track CSV (default from preset)")
@presetOptions(["grid", "constants", "propagation", "visibility", "maneuver", "caseStudy"])
@click.option("--trace/--no-trace", default=False, help="Print a traceback on failure")
def caseStudy(output, track, trace, preset, dump, **sections):
    """
    Build the storm-tracking scenario and save its config.
    """
    try:
        from reconsched.preset_ui import buildPreset
        from reconsched.scenario import loadCaseStudy, saveConfig

        preset = buildPreset(preset, dump, base=[":caseStudy"], **sections)
        instance = loadCaseStudy(track, preset)
        saveConfig(output, instance)
        click.echo(f"{instance.name}: T={instance.grid.totalSteps}, "
            f"S={instance.grid.stages}, K={len(instance.satellites)}, "
            f"P={len(instance.targets)}, J={len(instance.slotGrid.slots[1][0])}")
    except Exception as e:
        fail(e, trace)
