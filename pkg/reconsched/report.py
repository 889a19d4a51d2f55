"""
Comparison reports over run records: scores, improvement percentages,
propellant budgets and per-stage tables, as text, JSON or an HTML page.
"""
from __future__ import annotations
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Optional, Sequence
import json
import logging
import os
import markdown2
import numpy as np
import pybars

from reconsched.common import RESOURCES, gamma

logger = logging.getLogger(__name__)

TEMPLATES = os.path.join(RESOURCES, "report")
FORMULATION_ORDER = ["eossp", "reossp", "rhp"]
GAMMA_PAIRS = [("reossp", "eossp"), ("rhp", "reossp"), ("rhp", "eossp")]
LABELS = {"eossp": "EOSSP", "reossp": "REOSSP", "rhp": "REOSSP-RHP"}

class ReportError(RuntimeError):
    pass


@dataclass
class BudgetSummary:
    perSatellite: np.ndarray
    percent: np.ndarray
    total: float
    totalPercent: float

    def toDict(self) -> dict:
        return {
            "perSatellite": [float(x) for x in self.perSatellite],
            "percent": [float(x) for x in self.percent],
            "total": self.total,
            "totalPercent": self.totalPercent
        }

def summarizeBudget(ledger, budget) -> BudgetSummary:
    """
    Δv used per satellite and in total, absolute (m/s) and as a share of the
    budget. The ledger lists the Δv of every stage, either for a single
    satellite or as a [satellite, stage] array.
    """
    ledger = np.atleast_2d(np.asarray(ledger, dtype=float))
    K = ledger.shape[0]
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (K,))
    used = ledger.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        percent = np.where(budget > 0, 100.0 * used / budget, 0.0)
    total = float(used.sum())
    totalBudget = float(budget.sum())
    return BudgetSummary(used, percent, total,
        100.0 * total / totalBudget if totalBudget > 0 else 0.0)


def stageTable(run) -> List[dict]:
    """
    One row per satellite and stage: task counts, the occupied slot and the
    Δv spent arriving in it.
    """
    rows = []
    K = len(run.budget)
    for k in range(K):
        for s in range(run.stages):
            row = {
                "satellite": k + 1,
                "stage": s + 1,
                "observations": run.counts["observations"][k][s],
                "downlinks": run.counts["downlinks"][k][s],
                "charging": run.counts["charging"][k][s],
                "deltaV": float(run.deltaV[k][s])
            }
            if run.slots is not None:
                slot = run.slots[k][s]
                row.update({"slot": slot["slot"], "inclination": slot["inclination"],
                    "raan": slot["raan"], "argLatitude": slot["argLatitude"]})
            rows.append(row)
    return rows


def _fmt(value, digits=2, suffix=""):
    if value is None:
        return "n/a"
    return f"{value:.{digits}f}{suffix}"


class ComparisonReport:
    def __init__(self, runs: Sequence):
        self.runs = {}
        for run in runs:
            if run.formulation in self.runs:
                raise ReportError(f"Two runs of formulation {run.formulation} given")
            self.runs[run.formulation] = run
        if not self.runs:
            raise ReportError("No runs to report")
        scenarios = {run.scenario for run in runs}
        if len(scenarios) > 1:
            logger.warning("Comparing runs of different scenarios: %s", ", ".join(sorted(scenarios)))

    @property
    def ordered(self) -> List:
        known = [self.runs[f] for f in FORMULATION_ORDER if f in self.runs]
        return known + [r for f, r in self.runs.items() if f not in FORMULATION_ORDER]

    def gammas(self) -> List[dict]:
        result = []
        for a, b in GAMMA_PAIRS:
            if a in self.runs and b in self.runs:
                ra, rb = self.runs[a], self.runs[b]
                result.append({"better": a, "baseline": b,
                    "z": gamma(ra.z, rb.z), "Z": gamma(ra.Z, rb.Z)})
        return result

    def budgets(self) -> Dict[str, BudgetSummary]:
        return {f: summarizeBudget(r.deltaV, r.budget) for f, r in self.runs.items()}

    def toDict(self) -> dict:
        budgets = self.budgets()
        return {
            "runs": [{
                "formulation": r.formulation,
                "scenario": r.scenario,
                "status": r.status,
                "z": r.z,
                "Z": r.Z,
                "wallTime": r.wallTime,
                "subproblems": r.subproblems,
                "budget": budgets[r.formulation].toDict(),
                "dataLeft": r.dataLeft,
                "transfers": r.transfers
            } for r in self.ordered],
            "gamma": self.gammas()
        }

    def toJson(self) -> str:
        return json.dumps(self.toDict(), indent=2)

    def toText(self, stages: bool = False) -> str:
        lines = [f"{'formulation':<12} {'status':<20} {'z':>10} {'Z [GB]':>10} "
            f"{'time [s]':>10} {'dv [m/s]':>10} {'budget':>8}"]
        budgets = self.budgets()
        for r in self.ordered:
            b = budgets[r.formulation]
            lines.append(f"{LABELS.get(r.formulation, r.formulation):<12} {r.status:<20} "
                f"{r.z:>10.0f} {r.Z:>10.2f} {r.wallTime:>10.2f} {b.total:>10.2f} "
                f"{_fmt(b.totalPercent, suffix='%'):>8}")
        for g in self.gammas():
            lines.append(f"gamma {LABELS[g['better']]} over {LABELS[g['baseline']]}: "
                f"{_fmt(g['z'], suffix='%')} (objective), {_fmt(g['Z'], suffix='%')} (downlinked data)")
        for r in self.ordered:
            if r.formulation == "eossp":
                continue
            b = budgets[r.formulation]
            perSat = ", ".join(f"{v:.2f} m/s ({p:.2f}%)" for v, p in zip(b.perSatellite, b.percent))
            lines.append(f"{LABELS.get(r.formulation, r.formulation)} propellant: {perSat}")
        if stages:
            for r in self.ordered:
                lines.append("")
                lines.append(f"{LABELS.get(r.formulation, r.formulation)} per stage")
                lines.extend(formatStageTable(stageTable(r)))
        return "\n".join(lines)

    def renderHtml(self, outdir: str, template: str = "default",
                   description: Optional[str] = None, name: Optional[str] = None) -> str:
        tmpl = readTemplate(template)
        if description is not None:
            tmpl.addDescriptionFile(description)
        return tmpl.render(outdir, self, name or self.ordered[0].scenario)


def formatStageTable(rows: List[dict]) -> List[str]:
    withSlots = any("slot" in r for r in rows)
    header = f"{'sat':>3} {'stage':>5} {'obs':>5} {'dl':>5} {'chg':>5}"
    if withSlots:
        header += f" {'slot':>5} {'inc':>8} {'raan':>8} {'u':>8} {'dv':>8}"
    lines = [header]
    for r in rows:
        line = f"{r['satellite']:>3} {r['stage']:>5} {r['observations']:>5} " \
            f"{r['downlinks']:>5} {r['charging']:>5}"
        if withSlots:
            line += f" {r['slot']:>5} {r['inclination']:>8.2f} {r['raan']:>8.2f} " \
                f"{r['argLatitude']:>8.2f} {r['deltaV']:>8.2f}"
        lines.append(line)
    return lines


def resolveTemplatePath(path: str) -> str:
    """
    A directory with template.json, or the name of a built-in template.
    """
    if os.path.exists(os.path.join(path, "template.json")):
        return path
    if os.path.exists(os.path.join(TEMPLATES, path, "template.json")):
        return os.path.join(TEMPLATES, path)
    raise ReportError(f"'{path}' is not a name or a path of a report template")

def readTemplate(path: str) -> HtmlReportTemplate:
    templateClasses = {
        "HtmlTemplate": HtmlReportTemplate
    }
    path = resolveTemplatePath(path)
    with open(os.path.join(path, "template.json"), encoding="utf-8") as f:
        parameters = json.load(f)
    try:
        return templateClasses[parameters["type"]](path)
    except KeyError:
        raise ReportError(f"Unknown or missing template type in {path}") from None

class HtmlReportTemplate:
    def __init__(self, directory: str):
        self.directory = directory
        self.description = None

    def addDescriptionFile(self, description: str) -> None:
        if not description.endswith(".md"):
            raise ReportError("Only markdown descriptions are supported")
        self.description = markdown2.markdown_path(description,
            extras=["fenced-code-blocks", "tables"])

    def context(self, report: ComparisonReport, name: str) -> dict:
        budgets = report.budgets()
        return {
            "name": name,
            "datetime": datetime.now().strftime("%d. %m. %Y %H:%M"),
            "description": self.description,
            "runs": [{
                "label": LABELS.get(r.formulation, r.formulation),
                "status": r.status,
                "z": f"{r.z:.0f}",
                "Z": f"{r.Z:.2f}",
                "wallTime": f"{r.wallTime:.2f}",
                "deltaV": f"{budgets[r.formulation].total:.2f}",
                "budget": _fmt(budgets[r.formulation].totalPercent, suffix="%"),
                "stages": [{k: (f"{v:.2f}" if isinstance(v, float) else v)
                    for k, v in row.items()} for row in stageTable(r)],
                "hasSlots": r.slots is not None
            } for r in report.ordered],
            "gammas": [{
                "better": LABELS[g["better"]],
                "baseline": LABELS[g["baseline"]],
                "z": _fmt(g["z"], suffix="%"),
                "Z": _fmt(g["Z"], suffix="%")
            } for g in report.gammas()]
        }

    def render(self, outdir: str, report: ComparisonReport, name: str) -> str:
        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(self.directory, "index.html"), encoding="utf-8") as f:
            template = pybars.Compiler().compile(f.read())
        target = os.path.join(outdir, "index.html")
        with open(target, "w", encoding="utf-8") as f:
            f.write(template(self.context(report, name)))
        return target


# Experiment campaigns --------------------------------------------------------

def aggregate(rows: List[dict], columns: Sequence[str]) -> Dict[str, Dict[str, Optional[float]]]:
    """
    Minimum, maximum, mean and standard deviation of every column over the
    rows that have a value in it.
    """
    result = {"min": {}, "max": {}, "mean": {}, "std": {}}
    for col in columns:
        values = np.array([r[col] for r in rows if r.get(col) is not None], dtype=float)
        if not len(values):
            for stat in result:
                result[stat][col] = None
            continue
        result["min"][col] = float(values.min())
        result["max"][col] = float(values.max())
        result["mean"][col] = float(values.mean())
        result["std"][col] = float(values.std())
    return result

def experimentColumns(formulations: Sequence[str]) -> List[str]:
    columns = []
    for f in formulations:
        columns += [f"{f}.z", f"{f}.Z", f"{f}.time", f"{f}.dv"]
    for a, b in GAMMA_PAIRS:
        if a in formulations and b in formulations:
            columns += [f"gamma.{a}/{b}"]
    return columns

def experimentRow(instanceId: int, instance, runs: Dict[str, Optional[object]]) -> dict:
    row = {
        "instance": instanceId,
        "seed": instance.seed,
        "S": instance.grid.stages,
        "K": len(instance.satellites),
        "J": len(instance.slotGrid.slots[1][0])
    }
    for f, run in runs.items():
        row[f"{f}.z"] = None if run is None else run.z
        row[f"{f}.Z"] = None if run is None else run.Z
        row[f"{f}.time"] = None if run is None else run.wallTime
        row[f"{f}.dv"] = None if run is None else float(run.propellant.sum()) / 1000.0
    for a, b in GAMMA_PAIRS:
        if a in runs and b in runs:
            ra, rb = runs[a], runs[b]
            row[f"gamma.{a}/{b}"] = None if ra is None or rb is None else gamma(ra.z, rb.z)
    return row

def runExperiment(stagesList: Sequence[int], satellitesList: Sequence[int],
                  slotsList: Sequence[int], firstSeed: int = 0, preset=None,
                  limits=None, lookahead: int = 1, arrivals: str = "direct",
                  splitTime: bool = True, formulations: Sequence[str] = FORMULATION_ORDER,
                  onRow=None) -> List[dict]:
    """
    Solve every formulation on the S×K×J grid of random instances. Instance
    ids count from 1; instance i uses seed firstSeed + i - 1.
    """
    from reconsched.runs import NoScheduleError, solveFormulation
    from reconsched.scenario import generateRandom

    rows = []
    instanceId = 0
    for S in stagesList:
        for K in satellitesList:
            for J in slotsList:
                instanceId += 1
                instance = generateRandom(firstSeed + instanceId - 1, S, K, J, preset)
                runs = {}
                for f in formulations:
                    try:
                        runs[f] = solveFormulation(instance, f, limits, lookahead,
                            arrivals, splitTime)
                    except NoScheduleError as e:
                        logger.warning("Instance %d, %s: %s", instanceId, f, e)
                        runs[f] = None
                row = experimentRow(instanceId, instance, runs)
                rows.append(row)
                if onRow is not None:
                    onRow(row)
    return rows

def formatExperiment(rows: List[dict], columns: Sequence[str]) -> str:
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.2f}"
        return str(v)

    head = ["instance", "S", "K", "J"] + list(columns)
    width = max(10, max(len(c) for c in head) + 1)
    lines = ["".join(f"{h:>{width}}" for h in head)]
    for r in rows:
        lines.append("".join(f"{cell(r.get(h)):>{width}}" for h in head))
    stats = aggregate(rows, columns)
    for stat in ["min", "max", "mean", "std"]:
        lines.append("".join(f"{x:>{width}}" for x in [stat, "", "", ""]) +
            "".join(f"{cell(stats[stat][c]):>{width}}" for c in columns))
    return "\n".join(lines)
