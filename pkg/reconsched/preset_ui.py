import click
import csv
import glob
import io
import os
import sys
import traceback
from reconsched.sections import SECTIONS

# Exit codes of the commands
EXIT_ERROR = 1
EXIT_INFEASIBLE = 3
EXIT_NO_SOLUTION = 4
EXIT_INVALID = 5

def splitStr(delimiter, escapeChar, s):
    """
    Splits s based on delimiter that can be escaped via escapeChar
    """
    reader = csv.reader(io.StringIO(s), delimiter=delimiter, escapechar=escapeChar)
    for x in reader:
        return x
    return []


class Section(click.ParamType):
    """
    A CLI argument type for overriding section parameters: a semicolon
    separated list of `key: value` pairs.
    """
    name = "parameter_list"

    def convert(self, value, param, ctx):
        if isinstance(value, dict):
            return value
        if len(value.strip()) == 0:
            self.fail("empty override, expected key: value pairs", param, ctx)
        values = {}
        for pair in splitStr(";", "\\", value):
            if len(pair.strip()) == 0:
                continue
            s = pair.split(":", 1)
            if len(s) != 2:
                self.fail(f"'{pair}' is not a valid key: value pair", param, ctx)
            values[s[0].strip()] = s[1].strip()
        return values


def completePath(prefix, fileSuffix=""):
    paths = []
    for p in glob.glob(prefix + "*"):
        if os.path.isdir(p):
            paths.append(p + "/")
        elif p.endswith(fileSuffix):
            paths.append(p)
    return paths

def pathCompletion(fileSuffix=""):
    def f(ctx, args, incomplete):
        return completePath(incomplete, fileSuffix)
    return f

def completePreset(ctx, args, incomplete):
    from reconsched.presets import builtinPresets
    name = incomplete if incomplete.startswith(":") else ":" + incomplete
    presets = [x for x in builtinPresets() if x.startswith(name)]
    if incomplete.startswith(":"):
        return presets
    return presets + completePath(incomplete, ".json")

def completeSection(section):
    def fun(ctx, args, incomplete):
        if incomplete.startswith("'"):
            incomplete = incomplete[1:]
        lastPair = incomplete.split(";")[-1]
        pieces = [x.strip() for x in lastPair.split(":", 1)]
        key, val = pieces[0], pieces[1] if len(pieces) == 2 else ""
        if len(val) != 0:
            return []
        trimmedIncomplete = incomplete.rsplit(";", 1)[0] + ";" if ";" in incomplete else ""
        return [trimmedIncomplete + x + ":" for x in section.keys() if x.startswith(key)]
    return fun


SECTION_FLAGS = {
    "grid": "--grid",
    "constants": "--constants",
    "propagation": "--propagation",
    "visibility": "--visibility",
    "maneuver": "--maneuver",
    "solver": "--solver",
    "rhp": "--rhp",
    "random": "--random",
    "caseStudy": "--case-study"
}

def presetOptions(sections):
    """
    Decorator adding --preset, --dump and the override option of every named
    section.
    """
    def decorate(f):
        for name in reversed(sections):
            definition, _ = SECTIONS[name]
            f = click.option(SECTION_FLAGS[name], name, type=Section(),
                help=f"Override {name} settings.",
                shell_complete=completeSection(definition))(f)
        f = click.option("--dump", type=click.Path(dir_okay=False),
            help="Dump the constructed preset into a JSON file.")(f)
        f = click.option("--preset", "-p", multiple=True,
            help="A preset file; use prefix ':' for built-in presets.",
            shell_complete=completePreset)(f)
        return f
    return decorate

def buildPreset(preset, dump, base=(), **sections):
    from reconsched.presets import obtainPreset, dumpPreset
    result = obtainPreset(list(base) + list(preset), **sections)
    if dump:
        with open(dump, "w", encoding="utf-8") as f:
            f.write(dumpPreset(result))
    return result


def exitCodeFor(e):
    from reconsched.model import InfeasibleModelError
    from reconsched.solver import INFEASIBLE, NO_SOLUTION_LIMIT, UNBOUNDED
    status = getattr(e, "status", None)
    if isinstance(e, InfeasibleModelError) or status in (INFEASIBLE, UNBOUNDED):
        return EXIT_INFEASIBLE
    if status == NO_SOLUTION_LIMIT:
        return EXIT_NO_SOLUTION
    return EXIT_ERROR

def fail(e, trace):
    sys.stderr.write("An error occurred: " + str(e) + "\n")
    if trace:
        traceback.print_exc(file=sys.stderr)
    sys.exit(exitCodeFor(e))
