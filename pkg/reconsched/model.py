"""
Sparse MILP formulations of the fixed, the reconfigurable and the rolling
horizon scheduling problems.

Columns are keyed by tuples:

- ("x", s, k, i, j): transfer of satellite k from slot i of stage s-1 to
  slot j of stage s
- ("o", s, k, j): occupancy of slot j (aggregated arrival rows only)
- ("y", s, k, t, p), ("q", s, k, t, g), ("h", s, k, t): tasks
- ("d", s, k, t), ("b", s, k, t): data and battery storage

Stages are 1-based; the fixed formulation uses stage 0 and global steps.
Everything else is 0-based. Variable names are 1-based and zero padded.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import numpy as np
from scipy import sparse

from reconsched.common import ConfigurationError, FEASIBILITY_TOL

logger = logging.getLogger(__name__)

SENSES = ["<=", "=", ">="]
ARRIVALS = ["direct", "aggregated"]
KEY_WIDTH = {"x": 4, "o": 3, "y": 4, "q": 4, "h": 3, "d": 3, "b": 3}

class ModelError(RuntimeError):
    pass

class InfeasibleModelError(ModelError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    """
    Data in MB, energy in kJ, Δv in m/s. Per-step rates apply to a single
    time step. Storage limits and the propellant budget may be given per
    satellite.
    """
    dObs: float
    dComm: float
    dMin: Any
    dMax: Any
    bObs: float
    bComm: float
    bCharge: float
    bTime: float
    bRecon: float
    bMin: Any
    bMax: Any
    C: float
    cMax: Any
    gigabyte: float = 1000.0

    def __post_init__(self):
        for name in ["dObs", "dComm", "dMin", "dMax", "bObs", "bComm", "bCharge",
                     "bTime", "bRecon", "bMin", "bMax", "cMax"]:
            if np.any(np.asarray(getattr(self, name), dtype=float) < 0):
                raise ConfigurationError(f"Constant {name} has to be non-negative")
        if np.any(np.asarray(self.dMax, dtype=float) < np.asarray(self.dMin, dtype=float)):
            raise ConfigurationError("D_max has to be at least D_min")
        if np.any(np.asarray(self.bMax, dtype=float) < np.asarray(self.bMin, dtype=float)):
            raise ConfigurationError("B_max has to be at least B_min")
        if self.C <= 1:
            raise ConfigurationError(f"Downlink weight C has to exceed 1, got {self.C}")
        if self.gigabyte not in (1000, 1024):
            raise ConfigurationError("Gigabyte factor has to be 1000 or 1024")

    def perSatellite(self, name: str, K: int) -> np.ndarray:
        value = np.asarray(getattr(self, name), dtype=float)
        if value.ndim == 0:
            return np.full(K, float(value))
        if value.shape != (K,):
            raise ConfigurationError(f"Constant {name} lists {len(value)} values for {K} satellites")
        return value.copy()

    def at(self, name: str, k: int) -> float:
        value = np.asarray(getattr(self, name), dtype=float)
        return float(value) if value.ndim == 0 else float(value[k])

    def replace(self, **kwargs) -> PhysicalConstants:
        values = dict(self.__dict__)
        values.update(kwargs)
        return PhysicalConstants(**values)


@dataclass
class ProblemData:
    """
    Inputs of the model builders. Scenario instances expose the same
    attributes.
    """
    tensors: Any
    constants: PhysicalConstants
    costs: Any = None


@dataclass
class MilpModel:
    """
    Maximization model with rows `lhs <sense> rhs`. The builder that made it
    leaves it untouched afterwards.
    """
    name: str
    kind: str
    varNames: List[str]
    keys: List[tuple]
    lower: np.ndarray
    upper: np.ndarray
    binary: np.ndarray
    objective: np.ndarray
    matrix: sparse.csr_matrix
    senses: np.ndarray
    rhs: np.ndarray
    rowNames: List[str]
    xCost: np.ndarray
    constants: Optional[PhysicalConstants] = None
    meta: Dict[str, Any] = field(default_factory=dict)
    tensors: Any = None
    costs: Any = None
    _index: Dict[tuple, int] = field(default=None, repr=False)
    _families: Dict[str, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)

    @property
    def numVariables(self) -> int:
        return len(self.keys)

    @property
    def numRows(self) -> int:
        return len(self.rowNames)

    @property
    def numBinaries(self) -> int:
        return int(np.count_nonzero(self.binary))

    @property
    def indexMap(self) -> Dict[tuple, int]:
        if self._index is None:
            self._index = {key: i for i, key in enumerate(self.keys)}
        return self._index

    def column(self, key: tuple) -> int:
        try:
            return self.indexMap[key]
        except KeyError:
            raise ModelError(f"Model {self.name} has no column {key}") from None

    def family(self, prefix: str) -> Tuple[np.ndarray, np.ndarray]:
        """
        Columns of one variable kind and their key indices as a 2D array.
        """
        if prefix not in self._families:
            cols = [i for i, key in enumerate(self.keys) if key[0] == prefix]
            index = np.array([self.keys[i][1:] for i in cols], dtype=int) \
                .reshape(-1, KEY_WIDTH[prefix])
            self._families[prefix] = (np.array(cols, dtype=int), index)
        return self._families[prefix]

    def objectiveValue(self, values: np.ndarray) -> float:
        return float(self.objective @ values)

    def rowActivity(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def violation(self, values: np.ndarray) -> float:
        """
        Largest violation of a row or bound, scaled by max(1, |rhs|).
        """
        values = np.asarray(values, dtype=float)
        worst = 0.0
        if self.numVariables:
            worst = max(worst, float(np.max(self.lower - values, initial=0)),
                float(np.max(values - self.upper, initial=0)))
        if self.numRows:
            lhs = self.rowActivity(values)
            diff = lhs - self.rhs
            scale = np.maximum(1.0, np.abs(self.rhs))
            le = np.where(self.senses == "<=", diff, 0)
            ge = np.where(self.senses == ">=", -diff, 0)
            eq = np.where(self.senses == "=", np.abs(diff), 0)
            worst = max(worst, float(np.max(np.maximum(np.maximum(le, ge), eq) / scale)))
        return worst

    def isFeasible(self, values: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        return self.violation(values) <= tol

    def integralityViolation(self, values: np.ndarray) -> float:
        v = np.asarray(values, dtype=float)[self.binary]
        return float(np.max(np.abs(v - np.round(v)), initial=0.0))

    def relaxed(self) -> MilpModel:
        return MilpModel(self.name + "_relaxed", self.kind, self.varNames, self.keys,
            self.lower, self.upper, np.zeros_like(self.binary), self.objective,
            self.matrix, self.senses, self.rhs, self.rowNames, self.xCost,
            self.constants, dict(self.meta), self.tensors, self.costs)

    def withBounds(self, lower: np.ndarray, upper: np.ndarray) -> MilpModel:
        return MilpModel(self.name, self.kind, self.varNames, self.keys,
            lower, upper, self.binary, self.objective, self.matrix, self.senses,
            self.rhs, self.rowNames, self.xCost, self.constants, self.meta,
            self.tensors, self.costs, self._index, self._families)


class ModelBuilder:
    """
    Accumulates columns and rows in triplet form.
    """
    def __init__(self, name: str, kind: str):
        self.name = name
        self.kind = kind
        self._names, self._keys = [], []
        self._lower, self._upper, self._binary, self._obj, self._cost = [], [], [], [], []
        self._rowNames, self._senses, self._rhs = [], [], []
        self._r, self._c, self._v = [], [], []
        self.rows = 0

    @property
    def columns(self) -> int:
        return len(self._keys)

    def addVariables(self, keys, names, lower, upper, binary: bool,
                     objective=0.0, cost=0.0) -> np.ndarray:
        n = len(keys)
        start = len(self._keys)
        self._keys.extend(keys)
        self._names.extend(names)
        self._lower.append(np.broadcast_to(np.asarray(lower, dtype=float), (n,)))
        self._upper.append(np.broadcast_to(np.asarray(upper, dtype=float), (n,)))
        self._binary.append(np.full(n, binary))
        self._obj.append(np.broadcast_to(np.asarray(objective, dtype=float), (n,)))
        self._cost.append(np.broadcast_to(np.asarray(cost, dtype=float), (n,)))
        return np.arange(start, start + n)

    def addRows(self, names: Sequence[str], sense: str, rhs, terms) -> None:
        """
        Add len(names) rows. Every term is a (columns, coefficients) pair with
        columns of shape [n] or [n, m]; row r sums the r-th entries.
        Negative column indices are skipped.
        """
        n = len(names)
        for cols, coef in terms:
            cols = np.asarray(cols, dtype=int)
            if cols.ndim == 1:
                cols = cols[:, None]
            cols = np.broadcast_to(cols, (n, cols.shape[1]))
            coef = np.asarray(coef, dtype=float)
            if coef.ndim and coef.size == cols.size:
                coef = coef.reshape(cols.shape)
            coef = np.broadcast_to(coef, cols.shape)
            rows = np.broadcast_to(np.arange(n)[:, None], cols.shape)
            mask = (cols >= 0) & (coef != 0)
            self._r.append(rows[mask] + self.rows)
            self._c.append(cols[mask])
            self._v.append(coef[mask])
        self._finishRows(names, sense, rhs)

    def addTriplets(self, names: Sequence[str], sense: str, rhs,
                    rows, cols, vals) -> None:
        rows = np.asarray(rows, dtype=int)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape)
        self._r.append(rows + self.rows)
        self._c.append(np.asarray(cols, dtype=int))
        self._v.append(vals)
        self._finishRows(names, sense, rhs)

    def _finishRows(self, names, sense, rhs):
        if sense not in SENSES:
            raise ModelError(f"Unknown row sense '{sense}'")
        n = len(names)
        self._rowNames.extend(names)
        self._senses.extend([sense] * n)
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (n,)))
        self.rows += n

    def build(self, constants=None, meta=None, tensors=None, costs=None) -> MilpModel:
        cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)
        n = len(self._keys)
        r, c, v = cat(self._r).astype(int), cat(self._c).astype(int), cat(self._v)
        matrix = sparse.csr_matrix((v, (r, c)), shape=(self.rows, n))
        matrix.sum_duplicates()
        model = MilpModel(
            name=self.name, kind=self.kind,
            varNames=self._names, keys=self._keys,
            lower=cat(self._lower).astype(float), upper=cat(self._upper).astype(float),
            binary=cat(self._binary).astype(bool), objective=cat(self._obj).astype(float),
            matrix=matrix, senses=np.array(self._senses, dtype="<U2"),
            rhs=cat(self._rhs).astype(float), rowNames=self._rowNames,
            xCost=cat(self._cost).astype(float),
            constants=constants, meta=meta or {}, tensors=tensors, costs=costs)
        logger.info("Built %s: %d columns (%d binary), %d rows, %d nonzeros",
            model.name, model.numVariables, model.numBinaries, model.numRows, matrix.nnz)
        return model


class _Namer:
    def __init__(self, satellites, steps, slots=1, targets=1, stations=1, stages=1):
        self.width = {
            "s": max(2, len(str(stages))),
            "k": max(2, len(str(satellites))),
            "t": max(4, len(str(steps))),
            "i": max(3, len(str(slots))),
            "j": max(3, len(str(slots))),
            "p": max(2, len(str(targets))),
            "g": max(2, len(str(stations)))
        }

    def name(self, prefix: str, stage: int, sat: int, *rest) -> str:
        parts = [prefix]
        if stage:
            parts.append(f"s{stage:0{self.width['s']}d}")
        parts.append(f"k{sat + 1:0{self.width['k']}d}")
        for tag, value in rest:
            parts.append(f"{tag}{value + 1:0{self.width[tag]}d}")
        return "_".join(parts)


def _addTasks(builder: ModelBuilder, namer: _Namer, stage: int, sat: int,
              steps: int, P: int, G: int, c: PhysicalConstants,
              yUpper=1.0, qUpper=1.0, hUpper=1.0):
    """
    Task and storage columns of one satellite over `steps` steps.
    """
    tp = [(t, p) for t in range(steps) for p in range(P)]
    tg = [(t, g) for t in range(steps) for g in range(G)]
    ts = range(steps)
    y = builder.addVariables(
        [("y", stage, sat, t, p) for t, p in tp],
        [namer.name("y", stage, sat, ("t", t), ("p", p)) for t, p in tp],
        0, np.ravel(yUpper), True, 1.0).reshape(steps, P)
    q = builder.addVariables(
        [("q", stage, sat, t, g) for t, g in tg],
        [namer.name("q", stage, sat, ("t", t), ("g", g)) for t, g in tg],
        0, np.ravel(qUpper), True, c.C).reshape(steps, G)
    h = builder.addVariables(
        [("h", stage, sat, t) for t in ts],
        [namer.name("h", stage, sat, ("t", t)) for t in ts],
        0, np.ravel(hUpper), True)
    d = builder.addVariables(
        [("d", stage, sat, t) for t in ts],
        [namer.name("d", stage, sat, ("t", t)) for t in ts],
        c.at("dMin", sat), c.at("dMax", sat), False)
    b = builder.addVariables(
        [("b", stage, sat, t) for t in ts],
        [namer.name("b", stage, sat, ("t", t)) for t in ts],
        c.at("bMin", sat), c.at("bMax", sat), False)
    return {"y": y, "q": q, "h": h, "d": d, "b": b}

def _addStageRows(builder: ModelBuilder, namer: _Namer, stage: int, sat: int,
                  cols, c: PhysicalConstants, batteryFloorSteps: int) -> None:
    """
    Exclusivity, within-block tracking and storage limits of one block.
    """
    y, q, h, d, b = cols["y"], cols["q"], cols["h"], cols["d"], cols["b"]
    n = len(h)
    rowNames = lambda prefix, count: [namer.name(prefix, stage, sat, ("t", t)) for t in range(count)]

    builder.addRows(rowNames("excl", n), "<=", 1, [(y, 1), (q, 1), (h, 1)])

    builder.addRows(rowNames("dtrack", n - 1), "=", 0, [
        (d[1:], 1), (d[:-1], -1), (y[:-1], -c.dObs), (q[:-1], c.dComm)])
    builder.addRows(rowNames("dmax", n), "<=", c.at("dMax", sat), [(d, 1), (y, c.dObs)])
    builder.addRows(rowNames("dmin", n), ">=", c.at("dMin", sat), [(d, 1), (q, -c.dComm)])

    builder.addRows(rowNames("btrack", n - 1), "=", -c.bTime, [
        (b[1:], 1), (b[:-1], -1), (h[:-1], -c.bCharge),
        (y[:-1], c.bObs), (q[:-1], c.bComm)])
    builder.addRows(rowNames("bmax", n), "<=", c.at("bMax", sat), [(b, 1), (h, c.bCharge)])
    m = batteryFloorSteps
    builder.addRows(rowNames("bmin", m), ">=", c.at("bMin", sat) + c.bTime, [
        (b[:m], 1), (y[:m], -c.bObs), (q[:m], -c.bComm)])


def buildEossp(data) -> MilpModel:
    """
    Fixed-constellation model over the flat visibility view. Visibility
    enters as upper bounds of the task binaries.
    """
    tensors, c = data.tensors, data.constants
    if tensors is None or tensors.flatV is None:
        raise ModelError("Flat visibility tensors are missing")
    V, W, H = tensors.flatView()
    K, T, P = V.shape
    G = W.shape[2]
    namer = _Namer(K, T, targets=P, stations=G)
    builder = ModelBuilder("eossp", "eossp")
    for k in range(K):
        cols = _addTasks(builder, namer, 0, k, T, P, G, c,
            V[k].astype(float), W[k].astype(float), H[k].astype(float))
        _addStageRows(builder, namer, 0, k, cols, c, T)
        builder.addRows([namer.name("dinit", 0, k)], "=", c.at("dMin", k), [(cols["d"][:1], 1)])
        builder.addRows([namer.name("binit", 0, k)], "=", c.at("bMax", k), [(cols["b"][:1], 1)])
    meta = {
        "satellites": K, "targets": P, "stations": G, "totalSteps": T,
        "stages": tensors.stages, "stepsPerStage": tensors.stepsPerStage,
        "firstStage": 1, "lastStage": tensors.stages, "staged": False,
        "d1": c.perSatellite("dMin", K), "b1": c.perSatellite("bMax", K),
        "origins": [0] * K
    }
    return builder.build(c, meta, tensors)


def _arrivalRows(builder, namer, stage, sat, plane, tasks, targetCols, J, prefix, extra):
    """
    Rows Σ_arcs V[j] x_ij - task >= 0 for every (step, item), where
    `targetCols[j]` lists the incidence of slot j as a sparse matrix.
    """
    n = plane.shape[1]
    flat = plane.reshape(J, -1)
    items = flat.shape[1] // n if n else 0
    coupling = sparse.csr_matrix(flat.T.astype(float)) @ targetCols["incidence"]
    coupling = coupling.tocoo()
    taskCols = np.asarray(tasks).reshape(-1)
    count = len(taskCols)
    rows = np.concatenate([coupling.row, np.arange(count)])
    cols = np.concatenate([targetCols["columns"][coupling.col], taskCols])
    vals = np.concatenate([coupling.data, -np.ones(count)])
    if items == 1 and np.asarray(tasks).ndim == 1:
        names = [namer.name(prefix, stage, sat, ("t", t)) for t in range(n)]
    else:
        names = [namer.name(prefix, stage, sat, ("t", t), (extra, p))
            for t in range(n) for p in range(items)]
    builder.addTriplets(names, ">=", 0, rows, cols, vals)


def _buildStaged(data, name: str, kind: str, firstStage: int, lastStage: int,
                 carry: CarryState, arrivals: str) -> MilpModel:
    tensors, costs, c = data.tensors, data.costs, data.constants
    if arrivals not in ARRIVALS:
        raise ConfigurationError(f"Unknown arrival row layout '{arrivals}'")
    if tensors is None or costs is None:
        raise ModelError("Slot-resolved visibility and transfer costs are required")
    K, P, G, n = tensors.satellites, tensors.targets, tensors.stations, tensors.stepsPerStage
    if len(carry.origins) != K:
        raise ModelError(f"Carry state describes {len(carry.origins)} satellites, instance has {K}")
    maxJ = max(max(row) for row in tensors.slotCounts)
    namer = _Namer(K, n, maxJ, P, G, tensors.stages)
    builder = ModelBuilder(name, kind)

    for k in range(K):
        stageCols = {}
        for s in range(firstStage, lastStage + 1):
            J = tensors.slotCount(s, k)
            origins = [carry.origins[k]] if s == firstStage else None
            arcs = costs.arcs(s, k, budget=carry.residual[k], origins=origins)
            if not arcs:
                raise InfeasibleModelError(
                    f"Satellite {k + 1} has no transfer into stage {s} within its budget")
            ii = np.array([a[0] for a in arcs], dtype=int)
            jj = np.array([a[1] for a in arcs], dtype=int)
            cc = np.array([a[2] for a in arcs])
            x = builder.addVariables(
                [("x", s, k, int(i), int(j)) for i, j in zip(ii, jj)],
                [namer.name("x", s, k, ("i", i), ("j", j)) for i, j in zip(ii, jj)],
                0, 1, True, 0.0, cc)
            incidence = sparse.csr_matrix(
                (np.ones(len(jj)), (jj, np.arange(len(jj)))), shape=(J, len(jj)))
            if arrivals == "direct":
                target = {"incidence": incidence, "columns": x}
            else:
                o = builder.addVariables(
                    [("o", s, k, j) for j in range(J)],
                    [namer.name("o", s, k, ("j", j)) for j in range(J)], 0, 1, False)
                coo = incidence.tocoo()
                builder.addTriplets(
                    [namer.name("occ", s, k, ("j", j)) for j in range(J)], "=", 0,
                    np.concatenate([np.arange(J), coo.row]),
                    np.concatenate([o, x[coo.col]]),
                    np.concatenate([np.ones(J), -coo.data]))
                target = {"incidence": sparse.identity(J, format="csr"), "columns": o}

            tasks = _addTasks(builder, namer, s, k, n, P, G, c)
            _arrivalRows(builder, namer, s, k, tensors.targetVisibility(s, k),
                tasks["y"], target, J, "vis", "p")
            _arrivalRows(builder, namer, s, k, tensors.stationVisibility(s, k),
                tasks["q"], target, J, "comm", "g")
            _arrivalRows(builder, namer, s, k, tensors.sunVisibility(s, k)[:, :, None],
                tasks["h"], target, J, "sun", "h")
            _addStageRows(builder, namer, s, k, tasks, c, n if s == lastStage else n - 1)
            stageCols[s] = (ii, jj, x, tasks, J)

        # flow
        ii, jj, x, _, _ = stageCols[firstStage]
        builder.addRows([namer.name("flow", firstStage, k)], "=", 1, [(x[None, :], 1)])
        for s in range(firstStage, lastStage):
            _, jIn, xIn, _, J = stageCols[s]
            iOut, _, xOut, _, _ = stageCols[s + 1]
            builder.addTriplets(
                [namer.name("flow", s, k, ("i", i)) for i in range(J)], "=", 0,
                np.concatenate([iOut, jIn]), np.concatenate([xOut, xIn]),
                np.concatenate([np.ones(len(iOut)), -np.ones(len(jIn))]))
        allX = np.concatenate([stageCols[s][2] for s in range(firstStage, lastStage + 1)])
        allC = np.concatenate([costs.cost[(s, k)][stageCols[s][0], stageCols[s][1]]
            for s in range(firstStage, lastStage + 1)])
        builder.addRows([namer.name("budget", 0, k)], "<=", carry.residual[k],
            [(allX[None, :], allC[None, :])])

        # storage across stage gaps
        first = stageCols[firstStage][3]
        xFirst = stageCols[firstStage][2]
        builder.addRows([namer.name("dinit", firstStage, k)], "=", carry.d1[k],
            [(first["d"][:1], 1)])
        builder.addRows([namer.name("binit", firstStage, k)], "=", carry.b1[k],
            [(first["b"][:1], 1), (xFirst[None, :], c.bRecon)])
        builder.addRows([namer.name("bentry", firstStage, k)], ">=",
            c.at("bMin", k) - carry.b1[k], [(xFirst[None, :], -c.bRecon)])
        for s in range(firstStage, lastStage):
            cur, nxt = stageCols[s][3], stageCols[s + 1][3]
            xNext = stageCols[s + 1][2][None, :]
            builder.addRows([namer.name("dgap", s, k)], "=", 0, [
                (nxt["d"][:1], 1), (cur["d"][-1:], -1),
                (cur["y"][-1:], -c.dObs), (cur["q"][-1:], c.dComm)])
            builder.addRows([namer.name("bgap", s, k)], "=", -c.bTime, [
                (nxt["b"][:1], 1), (cur["b"][-1:], -1), (cur["h"][-1:], -c.bCharge),
                (cur["y"][-1:], c.bObs), (cur["q"][-1:], c.bComm), (xNext, c.bRecon)])
            builder.addRows([namer.name("bgapmin", s, k)], ">=", c.at("bMin", k) + c.bTime, [
                (cur["b"][-1:], 1), (cur["y"][-1:], -c.bObs), (cur["q"][-1:], -c.bComm),
                (xNext, -c.bRecon)])

    meta = {
        "satellites": K, "targets": P, "stations": G,
        "totalSteps": tensors.stages * n, "stages": tensors.stages,
        "stepsPerStage": n, "firstStage": firstStage, "lastStage": lastStage,
        "staged": True, "arrivals": arrivals,
        "d1": np.array(carry.d1, dtype=float), "b1": np.array(carry.b1, dtype=float),
        "origins": list(carry.origins)
    }
    return builder.build(c, meta, tensors, costs)


def buildReossp(data, arrivals: str = "direct") -> MilpModel:
    """
    Reconfigurable model over all stages. Transfers costing more than the
    budget or +inf get no column.
    """
    carry = initialCarry(data.constants, data.tensors.satellites)
    return _buildStaged(data, "reossp", "reossp", 1, data.tensors.stages, carry, arrivals)


def buildRhpSubproblem(data, stage: int, lookahead: int, carry: CarryState,
                       arrivals: str = "direct") -> MilpModel:
    """
    Subproblem over stages stage..stage+lookahead starting from the carried
    slot, budget and storage.
    """
    S = data.tensors.stages
    if not 1 <= stage <= S - lookahead or lookahead < 0:
        raise ModelError(f"Subproblem ({stage}, {lookahead}) does not fit {S} stages")
    if carry.stage != stage:
        raise ModelError(f"Carry state is for stage {carry.stage}, not {stage}")
    return _buildStaged(data, f"rhp_s{stage:02d}", "rhp", stage, stage + lookahead,
        carry, arrivals)


@dataclass
class CarryState:
    """
    State handed from one committed stage to the next subproblem: residual
    budget (m/s), occupied slot, data (MB) and battery (kJ) on entry. The
    entry battery excludes the maneuver of the stage itself.
    """
    stage: int
    residual: np.ndarray
    origins: List[int]
    d1: np.ndarray
    b1: np.ndarray

def initialCarry(constants: PhysicalConstants, satellites: int) -> CarryState:
    return CarryState(
        stage=1,
        residual=constants.perSatellite("cMax", satellites),
        origins=[0] * satellites,
        d1=constants.perSatellite("dMin", satellites),
        b1=constants.perSatellite("bMax", satellites))

def updateCarryState(carry: CarryState, schedule, constants: PhysicalConstants) -> CarryState:
    """
    Roll the carry over the committed stage carry.stage of `schedule`.
    """
    s = carry.stage
    K = len(carry.origins)
    n = schedule.stepsPerStage
    steps = slice((s - 1) * n, s * n)
    residual = carry.residual - schedule.deltaV[:, s]
    if np.any(residual < -1e-6):
        raise ModelError(f"Committed transfers of stage {s} exceed the residual budget")
    residual = np.maximum(residual, 0.0)
    observations = schedule.y[:, steps].sum(axis=(1, 2))
    downlinks = schedule.q[:, steps].sum(axis=(1, 2))
    charging = schedule.h[:, steps].sum(axis=1)
    d1 = carry.d1 + constants.dObs * observations - constants.dComm * downlinks
    b1 = carry.b1 - constants.bRecon + constants.bCharge * charging \
        - constants.bObs * observations - constants.bComm * downlinks - n * constants.bTime
    origins = [int(schedule.route[k, s]) for k in range(K)]
    return CarryState(s + 1, residual, origins, d1, b1)
