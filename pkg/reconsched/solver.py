"""
Exact solution of the scheduling MILPs: a bounded-variable revised simplex,
best-bound branch and bound with depth-first plunging, a HiGHS backend
through scipy, and an exhaustive oracle for tiny models.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import heapq
import logging
import math
import time
import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from reconsched.common import ConfigurationError, FEASIBILITY_TOL, INTEGRALITY_TOL
from reconsched.model import MilpModel

logger = logging.getLogger(__name__)

BACKENDS = ["bnb", "highs"]

OPTIMAL = "optimal"
FEASIBLE_LIMIT = "feasible_limit_hit"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NO_SOLUTION_LIMIT = "no_solution_limit_hit"

BRUTE_FORCE_LIMIT = 25
BRUTE_FORCE_BATCH = 4096

# Rounding steps of one dive from the root relaxation
DIVE_ROUNDS = 50

class SolverError(RuntimeError):
    pass

class BruteForceError(RuntimeError):
    pass


@dataclass
class SolveLimits:
    timeLimit: float = 60.0
    gapTolerance: float = 1e-4
    integralityTolerance: float = INTEGRALITY_TOL
    nodeLimit: Optional[int] = None
    backend: str = "bnb"

    def __post_init__(self):
        if self.timeLimit <= 0 or self.gapTolerance <= 0 or self.integralityTolerance <= 0:
            raise ConfigurationError("Solver limits have to be positive")
        if self.gapTolerance >= 1:
            raise ConfigurationError("Gap tolerance has to be below 1")
        if self.nodeLimit is not None and self.nodeLimit < 1:
            raise ConfigurationError("Node limit has to be positive")
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"Unknown solver backend '{self.backend}'")

    def scaled(self, factor: float) -> SolveLimits:
        return SolveLimits(self.timeLimit * factor, self.gapTolerance,
            self.integralityTolerance, self.nodeLimit, self.backend)


@dataclass
class MilpSolution:
    status: str
    values: Optional[np.ndarray]
    objective: Optional[float]
    bound: Optional[float]
    gap: Optional[float]
    nodes: int = 0
    wallTime: float = 0.0
    incumbents: List[float] = field(default_factory=list)

    @property
    def hasSolution(self) -> bool:
        return self.values is not None


@dataclass
class LpResult:
    status: str
    values: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int = 0


# Bounded-variable revised simplex -------------------------------------------

_BASIC, _AT_LOWER, _AT_UPPER, _FREE, _FIXED = range(5)
_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_REFACTOR_EVERY = 50
_DEGENERATE_STREAK = 50

class _Simplex:
    """
    Minimizes c x subject to A x + s = rhs and bounds. Slacks are bounded by
    the row sense; rows whose slack cannot absorb the starting residual get
    an artificial column for phase one.
    """
    def __init__(self, A, senses, rhs, lower, upper, maxIterations=None):
        A = sparse.csc_matrix(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        senses = np.asarray(senses)
        slackLo = np.where(senses == ">=", -np.inf, 0.0)
        slackUp = np.where(senses == "<=", np.inf, 0.0)
        self.lo = np.concatenate([np.asarray(lower, dtype=float), slackLo])
        self.up = np.concatenate([np.asarray(upper, dtype=float), slackUp])
        self.rhs = np.asarray(rhs, dtype=float)

        x = np.where(np.isfinite(self.lo[:n]), self.lo[:n],
            np.where(np.isfinite(self.up[:n]), self.up[:n], 0.0))
        residual = self.rhs - A @ x
        slack = np.clip(residual, slackLo, slackUp)
        gap = residual - slack
        needsArtificial = np.abs(gap) > 1e-12
        artRows = np.flatnonzero(needsArtificial)
        signs = np.sign(gap[artRows])
        artificial = sparse.csc_matrix((signs, (artRows, np.arange(len(artRows)))),
            shape=(m, len(artRows)))
        self.M = sparse.hstack([A, sparse.identity(m, format="csc"), artificial],
            format="csc")
        self.artStart = n + m
        self.total = self.M.shape[1]
        self.lo = np.concatenate([self.lo, np.zeros(len(artRows))])
        self.up = np.concatenate([self.up, np.full(len(artRows), np.inf)])
        self.x = np.concatenate([x, slack, np.abs(gap[artRows])])

        self.state = np.empty(self.total, dtype=int)
        self._setNonbasicState(np.arange(self.total))
        self.basis = np.arange(n, n + m)
        self.basis[artRows] = self.artStart + np.arange(len(artRows))
        self.state[self.basis] = _BASIC
        self.iterations = 0
        self.maxIterations = maxIterations or 50 * (m + self.total) + 1000
        self.lu = None
        self.etas = []

    def _setNonbasicState(self, cols):
        lo, up, x = self.lo[cols], self.up[cols], self.x[cols]
        state = np.full(len(cols), _FREE)
        state[np.isfinite(lo) & (np.abs(x - lo) <= 1e-12)] = _AT_LOWER
        state[np.isfinite(up) & (np.abs(x - up) <= 1e-12)] = _AT_UPPER
        state[lo == up] = _FIXED
        self.state[cols] = state

    def _refactor(self):
        B = self.M[:, self.basis]
        try:
            self.lu = splinalg.splu(sparse.csc_matrix(B), permc_spec="COLAMD")
        except RuntimeError as e:
            raise SolverError(f"Singular basis after {self.iterations} iterations: {e}")
        self.etas = []
        xN = self.x.copy()
        xN[self.basis] = 0.0
        self.x[self.basis] = self.lu.solve(self.rhs - self.M @ xN)

    def _ftran(self, a):
        v = self.lu.solve(a)
        for r, eta in self.etas:
            vr = v[r]
            if vr != 0.0:
                v += vr * eta
                v[r] = vr * eta[r]
        return v

    def _btran(self, c):
        w = c.copy()
        for r, eta in reversed(self.etas):
            w[r] = w @ eta
        return self.lu.solve(w, trans="T")

    def run(self, cost) -> str:
        """
        Iterate to optimality for `cost`; returns "optimal" or "unbounded".
        """
        self._refactor()
        degenerate = 0
        while True:
            self.iterations += 1
            if self.iterations > self.maxIterations:
                raise SolverError(
                    f"Simplex stalled after {self.iterations} iterations "
                    f"({self.m} rows, {self.total} columns, {len(self.etas)} updates)")
            if len(self.etas) >= _REFACTOR_EVERY:
                self._refactor()
            pi = self._btran(cost[self.basis])
            reduced = cost - self.M.T @ pi
            st = self.state
            increase = ((st == _AT_LOWER) | (st == _FREE)) & (reduced < -_COST_TOL)
            decrease = ((st == _AT_UPPER) | (st == _FREE)) & (reduced > _COST_TOL)
            eligible = np.flatnonzero(increase | decrease)
            if not len(eligible):
                return "optimal"
            bland = degenerate > _DEGENERATE_STREAK
            j = eligible[0] if bland else eligible[np.argmax(np.abs(reduced[eligible]))]
            direction = 1.0 if increase[j] else -1.0

            alpha = self._ftran(self.M[:, j].toarray().ravel())
            g = direction * alpha
            xB = self.x[self.basis]
            loB, upB = self.lo[self.basis], self.up[self.basis]
            ratios = np.full(self.m, np.inf)
            down = g > _PIVOT_TOL
            up = g < -_PIVOT_TOL
            finiteLo = down & np.isfinite(loB)
            finiteUp = up & np.isfinite(upB)
            ratios[finiteLo] = np.maximum(0.0, (xB[finiteLo] - loB[finiteLo]) / g[finiteLo])
            ratios[finiteUp] = np.maximum(0.0, (upB[finiteUp] - xB[finiteUp]) / -g[finiteUp])
            flip = self.up[j] - self.lo[j]
            thetaBasic = ratios.min() if self.m else np.inf
            if not np.isfinite(thetaBasic) and not np.isfinite(flip):
                return "unbounded"

            if flip <= thetaBasic:
                theta = flip
                self.x[self.basis] = xB - theta * g
                self.x[j] = self.up[j] if direction > 0 else self.lo[j]
                self.state[j] = _AT_UPPER if direction > 0 else _AT_LOWER
            else:
                theta = thetaBasic
                ties = np.flatnonzero(ratios <= theta + 1e-12)
                if bland:
                    r = ties[np.argmin(self.basis[ties])]
                else:
                    r = ties[np.argmax(np.abs(g[ties]))]
                leaving = self.basis[r]
                self.x[self.basis] = xB - theta * g
                self.x[j] += direction * theta
                self.x[leaving] = self.lo[leaving] if g[r] > 0 else self.up[leaving]
                self.basis[r] = j
                self.state[j] = _BASIC
                self._setNonbasicState(np.array([leaving]))
                eta = -alpha / alpha[r]
                eta[r] = 1.0 / alpha[r]
                self.etas.append((r, eta))
            degenerate = degenerate + 1 if theta <= 1e-12 else 0

    def solve(self, cost) -> Tuple[str, Optional[np.ndarray]]:
        artificial = np.arange(self.artStart, self.total)
        if len(artificial):
            phaseOne = np.zeros(self.total)
            phaseOne[artificial] = 1.0
            self.run(phaseOne)
            infeasibility = float(self.x[artificial].sum())
            if infeasibility > FEASIBILITY_TOL * max(1.0, float(np.abs(self.rhs).max(initial=0))):
                return INFEASIBLE, None
            self.up[artificial] = 0.0
            nonbasic = artificial[self.state[artificial] != _BASIC]
            self.x[nonbasic] = 0.0
            self.state[nonbasic] = _FIXED
        full = np.zeros(self.total)
        full[:self.n] = cost
        if self.run(full) == "unbounded":
            return UNBOUNDED, None
        return OPTIMAL, self.x[:self.n].copy()


def solveLpArrays(A, senses, rhs, objective, lower, upper,
                  maximize: bool = True) -> LpResult:
    """
    LP over explicit arrays; objective sense maximize by default.
    """
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    if np.any(lower > upper + 1e-12):
        return LpResult(INFEASIBLE, None, None)
    simplex = _Simplex(A, senses, rhs, lower, np.maximum(lower, upper))
    sign = -1.0 if maximize else 1.0
    status, values = simplex.solve(sign * np.asarray(objective, dtype=float))
    if status != OPTIMAL:
        return LpResult(status, None, None, simplex.iterations)
    return LpResult(OPTIMAL, values, float(np.asarray(objective) @ values), simplex.iterations)

def solveLp(model: MilpModel, lower=None, upper=None) -> LpResult:
    """
    Solve the LP relaxation of a model, optionally with tightened bounds.
    """
    return solveLpArrays(model.matrix, model.senses, model.rhs, model.objective,
        model.lower if lower is None else lower,
        model.upper if upper is None else upper)


# Branch and bound -----------------------------------------------------------

class _BranchAndBound:
    def __init__(self, model: MilpModel, limits: SolveLimits):
        self.model = model
        self.limits = limits
        self.binaries = np.flatnonzero(model.binary)
        obj = model.objective
        self.integralObjective = bool(np.all(obj[~model.binary] == 0)
            and np.all(obj[model.binary] == np.round(obj[model.binary])))
        self.incumbent = None
        self.incumbentValue = -math.inf
        self.history = []
        self.nodes = 0
        self.seq = 0
        self.start = time.monotonic()

    def _elapsed(self) -> float:
        return time.monotonic() - self.start

    def _limitHit(self) -> bool:
        if self._elapsed() > self.limits.timeLimit:
            return True
        return self.limits.nodeLimit is not None and self.nodes >= self.limits.nodeLimit

    def _bounds(self, fixings):
        lower, upper = self.model.lower.copy(), self.model.upper.copy()
        for col, value in fixings:
            lower[col] = upper[col] = value
        return lower, upper

    def _lp(self, fixings) -> LpResult:
        self.nodes += 1
        lower, upper = self._bounds(fixings)
        return solveLp(self.model, lower, upper)

    def _nodeBound(self, objective: float) -> float:
        if self.integralObjective:
            return math.floor(objective + 1e-6)
        return objective

    def _pruned(self, bound: float) -> bool:
        if self.incumbent is None:
            return False
        inc = self.incumbentValue
        return bound <= inc + self.limits.gapTolerance * max(1.0, abs(inc))

    def _fractional(self, values) -> Optional[int]:
        """Most fractional binary, lowest index on ties"""
        if not len(self.binaries):
            return None
        v = values[self.binaries]
        frac = np.round(np.minimum(v - np.floor(v), np.ceil(v) - v), 9)
        best = int(np.argmax(frac))
        if frac[best] <= self.limits.integralityTolerance:
            return None
        return int(self.binaries[best])

    def offer(self, values, source: str) -> None:
        """
        Accept a candidate after fixing its binaries and re-solving the
        continuous part.
        """
        if values is None:
            return
        rounded = np.round(values[self.binaries])
        lp = solveLp(self.model, *self._bounds(zip(self.binaries, rounded)))
        if lp.status != OPTIMAL:
            return
        candidate = lp.values
        candidate[self.binaries] = rounded
        if not self.model.isFeasible(candidate):
            return
        value = self.model.objectiveValue(candidate)
        if value > self.incumbentValue + 1e-9:
            self.incumbent, self.incumbentValue = candidate, value
            self.history.append(value)
            logger.info("New incumbent %.6g from %s after %d nodes", value, source, self.nodes)

    def dive(self, values) -> None:
        """
        Greedy rounding of a relaxation: fix every integral binary, round the
        least fractional one, re-solve and repeat until the point is integral.
        A rounding that makes the LP infeasible is flipped once; a second
        failure ends the dive. Dive LPs do not count as nodes.
        """
        fixings = {}
        for _ in range(DIVE_ROUNDS):
            if self._elapsed() > self.limits.timeLimit:
                return
            v = values[self.binaries]
            dist = np.abs(v - np.round(v))
            integral = dist <= self.limits.integralityTolerance
            if np.all(integral):
                self.offer(values, "diving")
                return
            for col, x in zip(self.binaries[integral], np.round(v[integral])):
                fixings[int(col)] = float(x)
            candidates = np.flatnonzero(~integral)
            pick = int(candidates[np.argmin(dist[candidates])])
            col, target = int(self.binaries[pick]), float(np.round(v[pick]))
            for value in (target, 1.0 - target):
                trial = dict(fixings)
                trial[col] = value
                lp = solveLp(self.model, *self._bounds(trial.items()))
                if lp.status == OPTIMAL:
                    break
            else:
                return
            fixings, values = trial, lp.values

    def _push(self, heap, node):
        bound, fixings, values = node
        heapq.heappush(heap, (-bound, self.seq, fixings, values))
        self.seq += 1

    def _result(self, status, bound) -> MilpSolution:
        gap = None
        if self.incumbent is not None:
            bound = max(bound, self.incumbentValue)
            gap = (bound - self.incumbentValue) / max(1.0, abs(self.incumbentValue))
        return MilpSolution(status, self.incumbent,
            None if self.incumbent is None else self.incumbentValue,
            bound, gap, self.nodes, self._elapsed(), list(self.history))

    def run(self, warmStart=None) -> MilpSolution:
        root = self._lp(())
        if root.status == INFEASIBLE:
            return MilpSolution(INFEASIBLE, None, None, None, None, self.nodes, self._elapsed())
        if root.status == UNBOUNDED:
            return MilpSolution(UNBOUNDED, None, None, None, None, self.nodes, self._elapsed())
        if warmStart is not None:
            self.offer(np.asarray(warmStart, dtype=float), "warm start")
        self.offer(root.values, "root rounding")
        rootBound = self._nodeBound(root.objective)
        heap = []
        if self._fractional(root.values) is None:
            self.offer(root.values, "root")
        else:
            self.dive(root.values)
            if not self._pruned(rootBound):
                self._push(heap, (rootBound, (), root.values))

        limited = False
        while heap and not limited:
            negBound, _, fixings, values = heapq.heappop(heap)
            current = (-negBound, fixings, values)
            while current is not None:
                bound, fixings, values = current
                if self._pruned(bound):
                    break
                if self._limitHit():
                    self._push(heap, current)
                    limited = True
                    break
                j = self._fractional(values)
                first = 1.0 if values[j] >= 0.5 else 0.0
                children = []
                for value in (first, 1.0 - first):
                    childFixings = fixings + ((j, value),)
                    lp = self._lp(childFixings)
                    if lp.status != OPTIMAL:
                        continue
                    childBound = self._nodeBound(lp.objective)
                    if self._pruned(childBound):
                        continue
                    if self._fractional(lp.values) is None:
                        self.offer(lp.values, "integral node")
                        continue
                    children.append((childBound, childFixings, lp.values))
                current = children[0] if children else None
                for child in children[1:]:
                    self._push(heap, child)
                if self.nodes % 100 < 2:
                    openBound = max([-h[0] for h in heap] + [current[0] if current else -math.inf])
                    logger.info("Nodes %d, incumbent %s, bound %.6g", self.nodes,
                        None if self.incumbent is None else f"{self.incumbentValue:.6g}", openBound)
            heap = [h for h in heap if not self._pruned(-h[0])]
            heapq.heapify(heap)

        openBound = max([-h[0] for h in heap], default=-math.inf)
        if not limited or not heap:
            if self.incumbent is None:
                return MilpSolution(INFEASIBLE, None, None, None, None, self.nodes, self._elapsed())
            return self._result(OPTIMAL, self.incumbentValue)
        if self.incumbent is None:
            return MilpSolution(NO_SOLUTION_LIMIT, None, None, openBound, None,
                self.nodes, self._elapsed())
        result = self._result(FEASIBLE_LIMIT, openBound)
        if result.gap <= self.limits.gapTolerance:
            result.status = OPTIMAL
        return result


def _solveHighs(model: MilpModel, limits: SolveLimits) -> MilpSolution:
    from scipy.optimize import milp, LinearConstraint, Bounds

    start = time.monotonic()
    lb = np.where(model.senses == "<=", -np.inf, model.rhs)
    ub = np.where(model.senses == ">=", np.inf, model.rhs)
    options = {"time_limit": limits.timeLimit, "mip_rel_gap": limits.gapTolerance,
        "disp": logger.isEnabledFor(logging.DEBUG)}
    if limits.nodeLimit is not None:
        options["node_limit"] = limits.nodeLimit
    constraints = [LinearConstraint(model.matrix, lb, ub)] if model.numRows else []
    res = milp(-model.objective, constraints=constraints,
        integrality=model.binary.astype(int), bounds=Bounds(model.lower, model.upper),
        options=options)
    elapsed = time.monotonic() - start
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return MilpSolution(INFEASIBLE, None, None, None, None, nodes, elapsed)
    if res.status == 3:
        return MilpSolution(UNBOUNDED, None, None, None, None, nodes, elapsed)
    if res.x is None:
        if res.status == 1:
            return MilpSolution(NO_SOLUTION_LIMIT, None, None, None, None, nodes, elapsed)
        raise SolverError(f"HiGHS failed: {res.message}")
    values = np.asarray(res.x, dtype=float)
    values[model.binary] = np.round(values[model.binary])
    objective = model.objectiveValue(values)
    dualBound = getattr(res, "mip_dual_bound", None)
    bound = objective if dualBound is None else max(objective, -float(dualBound))
    gap = (bound - objective) / max(1.0, abs(objective))
    status = OPTIMAL if res.status == 0 or gap <= limits.gapTolerance else FEASIBLE_LIMIT
    return MilpSolution(status, values, objective, bound, gap, nodes, elapsed, [objective])


def solveMilp(model: MilpModel, limits: Optional[SolveLimits] = None,
              warmStart=None) -> MilpSolution:
    """
    Maximize the model within the limits. The built-in backend is seeded
    with the warm start (the greedy schedule when none is given), root
    rounding and a diving pass over the root relaxation.
    """
    limits = limits or SolveLimits()
    logger.info("Solving %s with %s (%d columns, %d rows)", model.name,
        limits.backend, model.numVariables, model.numRows)
    if limits.backend == "highs":
        solution = _solveHighs(model, limits)
    else:
        search = _BranchAndBound(model, limits)
        if warmStart is None and model.tensors is not None:
            greedy = greedyHeuristic(model)
            if greedy is not None:
                from reconsched.schedule import embedSchedule
                warmStart = embedSchedule(model, greedy)
        solution = search.run(warmStart)
    logger.info("%s: %s, objective %s, bound %s, %d nodes, %.2f s", model.name,
        solution.status, solution.objective, solution.bound, solution.nodes,
        solution.wallTime)
    return solution


# Exhaustive oracle ----------------------------------------------------------

@dataclass
class BruteForceResult:
    objective: Optional[float]
    values: Optional[np.ndarray]
    evaluated: int


def _singletonBounds(model: MilpModel):
    """
    Tighten bounds implied by rows with a single nonzero.
    """
    lower, upper = model.lower.copy(), model.upper.copy()
    A = model.matrix.tocsr()
    counts = np.diff(A.indptr)
    for r in np.flatnonzero(counts == 1):
        col = A.indices[A.indptr[r]]
        a = A.data[A.indptr[r]]
        bound = model.rhs[r] / a
        sense = model.senses[r]
        if sense == "=" or (sense == "<=") == (a > 0):
            upper[col] = min(upper[col], bound)
        if sense == "=" or (sense == ">=") == (a > 0):
            lower[col] = max(lower[col], bound)
    return lower, upper

def bruteForce(model: MilpModel) -> BruteForceResult:
    """
    Enumerate every assignment of the free binaries. Continuous columns must
    be determined by the equality rows; they are recovered by least squares
    and the point is kept only when it satisfies the whole model.
    """
    lower, upper = _singletonBounds(model)
    binaries = np.flatnonzero(model.binary)
    free = binaries[(np.ceil(lower[binaries] - 1e-9) < np.floor(upper[binaries] + 1e-9))]
    fixed = np.setdiff1d(binaries, free)
    if len(free) > BRUTE_FORCE_LIMIT:
        raise BruteForceError(
            f"{len(free)} free binaries exceed the enumeration limit of {BRUTE_FORCE_LIMIT}")
    if np.any(np.ceil(lower[fixed] - 1e-9) > np.floor(upper[fixed] + 1e-9)):
        return BruteForceResult(None, None, 0)
    continuous = np.flatnonzero(~model.binary)
    A = model.matrix.tocsc()
    equalities = np.flatnonzero(model.senses == "=")
    Aeq = A[equalities][:, continuous].toarray()
    if len(continuous) and np.linalg.matrix_rank(Aeq) < len(continuous):
        raise BruteForceError("Continuous columns are not determined by the equality rows")
    pinv = np.linalg.pinv(Aeq) if len(continuous) else np.zeros((0, len(equalities)))

    base = np.zeros(model.numVariables)
    base[fixed] = np.round(lower[fixed])
    best, bestValues, evaluated = None, None, 0
    total = 1 << len(free)
    for start in range(0, total, BRUTE_FORCE_BATCH):
        codes = np.arange(start, min(total, start + BRUTE_FORCE_BATCH), dtype=np.int64)
        bits = ((codes[:, None] >> np.arange(len(free))) & 1).astype(float)
        X = np.repeat(base[None, :], len(codes), axis=0)
        X[:, free] = bits
        if len(continuous):
            residual = model.rhs[equalities][None, :] - (A[equalities] @ X.T).T
            X[:, continuous] = residual @ pinv.T
        evaluated += len(codes)
        lhs = (A @ X.T).T
        scale = np.maximum(1.0, np.abs(model.rhs))[None, :]
        diff = (lhs - model.rhs[None, :]) / scale
        ok = np.all(np.where(model.senses == "<=", diff <= FEASIBILITY_TOL,
            np.where(model.senses == ">=", diff >= -FEASIBILITY_TOL,
                np.abs(diff) <= FEASIBILITY_TOL)), axis=1)
        ok &= np.all(X >= lower - FEASIBILITY_TOL, axis=1) & np.all(X <= upper + FEASIBILITY_TOL, axis=1)
        if not np.any(ok):
            continue
        objectives = np.where(ok, X @ model.objective, -np.inf)
        i = int(np.argmax(objectives))
        if best is None or objectives[i] > best + 1e-9:
            best, bestValues = float(objectives[i]), X[i].copy()
    return BruteForceResult(best, bestValues, evaluated)


# Greedy schedule ------------------------------------------------------------

def _stayRoute(model: MilpModel, schedule, k: int) -> bool:
    """
    Keep satellite k in its slot, or take the cheapest transfer where the
    slot does not continue. False when the route exceeds the budget.
    """
    m, c = model.meta, model.constants
    first, last = m["firstStage"], m["lastStage"]
    schedule.route[k, first - 1] = m["origins"][k]
    for s in range(first, last + 1):
        i = schedule.route[k, s - 1]
        row = model.costs.cost[(s, k)][i]
        j = i if i < len(row) and row[i] == 0 else int(np.argmin(row))
        schedule.route[k, s] = j
        schedule.deltaV[k, s] = row[j]
    return schedule.deltaV[k].sum() <= c.at("cMax", k) + 1e-9

def _windowPlanes(model: MilpModel, schedule, k: int):
    """Visibility of satellite k along its route, window steps concatenated"""
    m, tensors = model.meta, model.tensors
    planes = []
    for s in range(m["firstStage"], m["lastStage"] + 1):
        if m["staged"]:
            j = schedule.route[k, s]
            planes.append((tensors.targetVisibility(s, k)[j],
                tensors.stationVisibility(s, k)[j], tensors.sunVisibility(s, k)[j]))
        else:
            sl = schedule.stageSlice(s)
            planes.append((tensors.flatV[k, sl], tensors.flatW[k, sl], tensors.flatH[k, sl]))
    return [np.concatenate([p[i] for p in planes]) for i in range(3)]

def _greedyPass(model: MilpModel, withTasks: bool):
    from reconsched.schedule import emptySchedule

    m, c = model.meta, model.constants
    K, n = m["satellites"], m["stepsPerStage"]
    first, last, staged = m["firstStage"], m["lastStage"], m["staged"]
    schedule = emptySchedule(model.kind, K, m["stages"], n, m["targets"],
        m["stations"], staged, first, last)
    start = schedule.stageSlice(first).start
    recon = c.bRecon if staged else 0.0
    for k in range(K):
        if staged and not _stayRoute(model, schedule, k):
            return None
        V, W, H = _windowPlanes(model, schedule, k)
        N = len(H)
        # idle drain of every step, the maneuver into the next stage included
        drain = np.full(N, c.bTime)
        drain[n - 1:N - 1:n] += recon
        # battery to keep after a step for the idle steps up to the next sunlit one
        reserve = np.zeros(N)
        ahead = 0.0
        for u in range(N - 1, -1, -1):
            reserve[u] = ahead
            ahead = drain[u] if H[u] else ahead + drain[u]

        dMin, dMax = c.at("dMin", k), c.at("dMax", k)
        bMin, bMax = c.at("bMin", k), c.at("bMax", k)
        d, b = float(m["d1"][k]), float(m["b1"][k]) - recon
        if b < bMin:
            return None
        for u in range(N):
            def fits(obs, dl, ch):
                if d + c.dObs * obs > dMax or d - c.dComm * dl < dMin:
                    return False
                if b + c.bCharge * ch > bMax:
                    return False
                keep = reserve[u] if obs or dl else 0.0
                return b - c.bObs * obs - c.bComm * dl - drain[u] >= bMin + keep

            stations = np.flatnonzero(W[u])
            targets = np.flatnonzero(V[u])
            options = []
            if withTasks:
                if H[u] and b - bMin < 0.5 * (bMax - bMin):
                    options.append((0, 0, 1))
                if len(stations):
                    options.append((0, 1, 0))
                if len(targets):
                    options.append((1, 0, 0))
            if H[u]:
                options.append((0, 0, 1))
            options.append((0, 0, 0))
            choice = next((o for o in options if fits(*o)), None)
            if choice is None:
                return None
            obs, dl, ch = choice
            gt = start + u
            if obs:
                schedule.y[k, gt, targets[0]] = True
            if dl:
                schedule.q[k, gt, stations[0]] = True
            if ch:
                schedule.h[k, gt] = True
            d += c.dObs * obs - c.dComm * dl
            b += c.bCharge * ch - c.bObs * obs - c.bComm * dl - drain[u]
    return schedule

def greedyHeuristic(model: MilpModel):
    """
    Chronological pass keeping every satellite in its slot. At each step a
    downlink goes before an observation before charging whenever storage
    allows and enough battery stays for the idle steps up to the next sunlit
    one; charging jumps the queue while the battery is below half capacity.
    When that pass gets stuck, a second one only charges and idles.

    Returns None only when even the charge-or-idle pass breaks a constraint:
    the stay-put route exceeds the budget, or the battery cannot pay the
    housekeeping drain and the maneuvers of that route.
    """
    from reconsched.schedule import embedSchedule, extractSchedule

    if model.tensors is None or model.constants is None:
        return None
    for withTasks in (True, False):
        schedule = _greedyPass(model, withTasks)
        if schedule is None:
            logger.debug("Greedy pass %s tasks got stuck on %s",
                "with" if withTasks else "without", model.name)
            continue
        values = embedSchedule(model, schedule)
        if model.isFeasible(values):
            return extractSchedule(model, values)
    return None
