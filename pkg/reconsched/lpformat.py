"""
CPLEX-style LP text for the scheduling models and a plain solution file.

Grammar written and accepted here::

    \\ comment
    Maximize
     obj: + 1 y_k01_t0001_p01 + 2 q_k01_t0001_g01 ...
    Subject To
     excl_k01_t0001: + 1 y_k01_t0001_p01 + 1 h_k01_t0001 <= 1
    Bounds
     0 <= d_k01_t0001 <= 128000
     x free
    Binaries
     y_k01_t0001_p01 ...
    End

Every column gets an explicit bound line; long expressions continue on
indented lines. Solution files start with `# status <status>` and
`# objective <value>` followed by one `name value` line per column.
"""
from __future__ import annotations
from typing import Dict, List, Optional, Tuple
import math
import re
import numpy as np
from scipy import sparse

from reconsched.common import SchemaError
from reconsched.model import MilpModel

TERMS_PER_LINE = 6
SECTIONS = {
    "maximize": "objective", "maximum": "objective", "max": "objective",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "binaries", "binary": "binaries", "bin": "binaries",
    "end": "end"
}
SENSE_TOKENS = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}
_TOKEN = re.compile(
    r"<=|>=|=<|=>|[<>=]|[+-]|\d[\d.]*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|[^\s<>=+-]+")
_BOUND_TOKEN = re.compile(r"<=|>=|=<|=>|=|[^\s<>=]+")

def _number(value: float) -> str:
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))

def _expression(names, coefs) -> List[str]:
    terms = [f"{'-' if c < 0 else '+'} {_number(abs(c))} {n}" for n, c in zip(names, coefs)]
    return [" ".join(terms[i:i + TERMS_PER_LINE])
        for i in range(0, len(terms), TERMS_PER_LINE)] or [""]

def exportLp(model: MilpModel) -> str:
    """
    Canonical text of a model: columns and rows in model order.
    """
    names = model.varNames
    lines = [f"\\ {model.name}", "Maximize"]
    nz = np.flatnonzero(model.objective)
    expr = _expression([names[i] for i in nz], model.objective[nz])
    lines.append(f" obj: {expr[0]}".rstrip())
    lines.extend(f"   {e}" for e in expr[1:])

    lines.append("Subject To")
    A = model.matrix.tocsr()
    for r, rowName in enumerate(model.rowNames):
        cols = A.indices[A.indptr[r]:A.indptr[r + 1]]
        vals = A.data[A.indptr[r]:A.indptr[r + 1]]
        order = np.argsort(cols, kind="stable")
        cols, vals = cols[order], vals[order]
        if not len(cols) and names:
            cols, vals = np.array([0]), np.array([0.0])
        expr = _expression([names[c] for c in cols], vals)
        tail = f"{model.senses[r]} {_number(model.rhs[r])}"
        if len(expr) == 1:
            lines.append(f" {rowName}: {expr[0]} {tail}")
        else:
            lines.append(f" {rowName}: {expr[0]}")
            lines.extend(f"   {e}" for e in expr[1:-1])
            lines.append(f"   {expr[-1]} {tail}")

    lines.append("Bounds")
    for name, lo, up in zip(names, model.lower, model.upper):
        if math.isinf(lo) and lo < 0 and math.isinf(up) and up > 0:
            lines.append(f" {name} free")
        elif lo == up:
            lines.append(f" {name} = {_number(lo)}")
        else:
            lines.append(f" {_number(lo)} <= {name} <= {_number(up)}")

    lines.append("Binaries")
    binaries = [names[i] for i in np.flatnonzero(model.binary)]
    for i in range(0, len(binaries), TERMS_PER_LINE):
        lines.append(" " + " ".join(binaries[i:i + TERMS_PER_LINE]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _isNumber(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False

def _readExpression(tokens: List[str], location: str) -> List[Tuple[str, float]]:
    terms = []
    sign, coef = 1.0, None
    for token in tokens:
        if token in "+-":
            sign = -1.0 if token == "-" else 1.0
        elif _isNumber(token) and coef is None:
            coef = float(token)
        elif _isNumber(token):
            raise SchemaError(location, f"two numbers in a row near '{token}'")
        else:
            terms.append((token, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
    if coef is not None:
        raise SchemaError(location, "expression ends with a number")
    return terms

def _sections(text: str) -> Dict[str, List[str]]:
    sections = {}
    current = None
    for lineNo, raw in enumerate(text.splitlines(), 1):
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        keyword = line.lower()
        if keyword in SECTIONS:
            current = SECTIONS[keyword]
            if current in sections:
                raise SchemaError(f"line {lineNo}", f"section '{line}' repeats")
            sections[current] = []
            continue
        if keyword in ("minimize", "minimum", "min"):
            raise SchemaError(f"line {lineNo}", "only maximization models are read")
        if current is None or current == "end":
            raise SchemaError(f"line {lineNo}", f"text outside a section: '{line}'")
        sections[current].append((lineNo, line))
    if "end" not in sections:
        raise SchemaError("end", "missing End")
    return sections

def _statements(lines) -> List[Tuple[int, str]]:
    """Join continuation lines onto the statement they extend"""
    statements = []
    for lineNo, line in lines:
        startsNew = re.match(r"^[^\s:]+\s*:", line) is not None
        if startsNew or not statements:
            statements.append((lineNo, line))
        else:
            statements[-1] = (statements[-1][0], statements[-1][1] + " " + line)
    return statements

def parseLp(text: str, name: str = "lp") -> MilpModel:
    """
    Read LP text back into a model. Column order follows the Bounds
    section, then first appearance elsewhere.
    """
    sections = _sections(text)
    order: Dict[str, int] = {}
    def col(varName):
        if varName not in order:
            order[varName] = len(order)
        return order[varName]

    bounds = {}
    for lineNo, line in sections.get("bounds", []):
        location = f"line {lineNo}"
        tokens = _BOUND_TOKEN.findall(line)
        if len(tokens) == 2 and tokens[1].lower() == "free":
            bounds[tokens[0]] = (-math.inf, math.inf)
        elif len(tokens) == 3 and tokens[1] == "=":
            bounds[tokens[0]] = (float(tokens[2]), float(tokens[2]))
        elif len(tokens) == 5 and tokens[1] in ("<=", "=<") and tokens[3] in ("<=", "=<"):
            try:
                bounds[tokens[2]] = (float(tokens[0]), float(tokens[4]))
            except ValueError:
                raise SchemaError(location, f"malformed bound '{line}'") from None
        else:
            raise SchemaError(location, f"malformed bound '{line}'")
        col(tokens[0] if len(tokens) < 5 else tokens[2])

    objective = {}
    for lineNo, line in _statements(sections.get("objective", [])):
        body = line.split(":", 1)[1] if ":" in line else line
        for varName, coef in _readExpression(_TOKEN.findall(body), f"line {lineNo}"):
            objective[col(varName)] = objective.get(col(varName), 0.0) + coef

    rowNames, senses, rhs, rows, cols, vals = [], [], [], [], [], []
    for lineNo, line in _statements(sections.get("rows", [])):
        location = f"line {lineNo}"
        if ":" not in line:
            raise SchemaError(location, "row without a name")
        rowName, body = line.split(":", 1)
        tokens = _TOKEN.findall(body)
        senseAt = [i for i, t in enumerate(tokens) if t in SENSE_TOKENS]
        if len(senseAt) != 1 or senseAt[0] + 1 >= len(tokens):
            raise SchemaError(location, f"row '{rowName.strip()}' needs one sense and a right-hand side")
        i = senseAt[0]
        rest = "".join(tokens[i + 1:])
        if not _isNumber(rest):
            raise SchemaError(location, f"right-hand side '{rest}' is not a number")
        r = len(rowNames)
        rowNames.append(rowName.strip())
        senses.append(SENSE_TOKENS[tokens[i]])
        rhs.append(float(rest))
        for varName, coef in _readExpression(tokens[:i], location):
            c = col(varName)
            if coef != 0:
                rows.append(r)
                cols.append(c)
                vals.append(coef)

    binaries = set()
    for lineNo, line in sections.get("binaries", []):
        for varName in line.split():
            if varName in binaries:
                raise SchemaError(f"line {lineNo}", f"'{varName}' listed twice as binary")
            binaries.add(varName)
            col(varName)

    names = sorted(order, key=order.get)
    n = len(names)
    lower, upper = np.zeros(n), np.full(n, math.inf)
    binary = np.array([v in binaries for v in names], dtype=bool)
    upper[binary] = 1.0
    for varName, (lo, up) in bounds.items():
        lower[order[varName]], upper[order[varName]] = lo, up
    obj = np.zeros(n)
    for c, v in objective.items():
        obj[c] = v
    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(len(rowNames), n))
    matrix.sum_duplicates()
    return MilpModel(name=name, kind="lp", varNames=names,
        keys=[("lp", i) for i in range(n)], lower=lower, upper=upper,
        binary=binary, objective=obj, matrix=matrix,
        senses=np.array(senses, dtype="<U2"), rhs=np.array(rhs, dtype=float),
        rowNames=rowNames, xCost=np.zeros(n))


def writeSolution(path: str, model: MilpModel, solution) -> None:
    with open(path, "w") as f:
        f.write(f"# status {solution.status}\n")
        f.write(f"# objective {'none' if solution.objective is None else repr(solution.objective)}\n")
        if solution.values is not None:
            for name, value in zip(model.varNames, solution.values):
                f.write(f"{name} {_number(float(value))}\n")

def readSolution(path: str) -> Tuple[str, Optional[float], Dict[str, float]]:
    status, objective, values = None, None, {}
    with open(path) as f:
        for lineNo, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(" ")
                if key == "status":
                    status = value
                elif key == "objective":
                    objective = None if value == "none" else float(value)
                continue
            parts = line.split()
            if len(parts) != 2 or not _isNumber(parts[1]):
                raise SchemaError(f"{path}:{lineNo}", f"expected 'name value', got '{line}'")
            values[parts[0]] = float(parts[1])
    if status is None:
        raise SchemaError(path, "missing status header")
    return status, objective, values
