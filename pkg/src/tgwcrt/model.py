"""System and application model: processing elements, task graphs, tasks.

Times are integer ticks. A larger ``priority`` value means a higher
priority. Models are immutable once built; derived relations (successors,
ancestors, descendants, analysis order) are computed lazily and cached.

The on-disk format is a JSON document::

    {
      "pes": [{"id": "PE0", "policy": "preemptive"}, ...],
      "graphs": [
        {"id": "G0", "period": 100, "jitter": 0, "deadline": 100,
         "tasks": [{"id": "t0", "pe": "PE0", "priority": 3,
                    "bcet": 5, "wcet": 10, "preds": []}, ...]}
      ]
    }

``policy`` is ``"preemptive"`` or ``"non_preemptive"``. Unknown keys are
rejected. A top-level ``"comment"`` string is allowed and ignored, as is a
``"comment"`` key on any graph or task.
"""

from __future__ import annotations

import enum
import heapq
import json
from dataclasses import dataclass, field
from functools import cached_property


class Policy(enum.Enum):
    PREEMPTIVE = "preemptive"
    NON_PREEMPTIVE = "non_preemptive"


class ModelError(ValueError):
    """Raised when a model document cannot be turned into a valid model."""


@dataclass(frozen=True)
class ProcessingElement:
    id: str
    policy: Policy = Policy.PREEMPTIVE

    @property
    def preemptive(self) -> bool:
        return self.policy is Policy.PREEMPTIVE


@dataclass(frozen=True)
class Task:
    id: str
    graph: str
    pe: str
    priority: int
    bcet: int
    wcet: int
    preds: tuple[str, ...] = ()


@dataclass(frozen=True)
class TaskGraph:
    id: str
    period: int
    jitter: int
    deadline: int
    tasks: tuple[str, ...] = ()


@dataclass(frozen=True)
class Violation:
    rule: str
    entity: str
    message: str = ""

    def __str__(self) -> str:
        return f"{self.rule}({self.entity}): {self.message}" if self.message else f"{self.rule}({self.entity})"


@dataclass(frozen=True, eq=True)
class SystemModel:
    pes: tuple[ProcessingElement, ...]
    graphs: tuple[TaskGraph, ...]
    tasks: tuple[Task, ...] = field(default=())

    def __post_init__(self):
        # accept lists from callers but keep the model hashable/immutable
        object.__setattr__(self, "pes", tuple(self.pes))
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "tasks", tuple(self.tasks))

    # -- lookups ---------------------------------------------------------

    @cached_property
    def task_index(self) -> dict[str, int]:
        return {t.id: i for i, t in enumerate(self.tasks)}

    @cached_property
    def pe_map(self) -> dict[str, ProcessingElement]:
        return {p.id: p for p in self.pes}

    @cached_property
    def graph_map(self) -> dict[str, TaskGraph]:
        return {g.id: g for g in self.graphs}

    def task(self, task_id: str) -> Task:
        return self.tasks[self.task_index[task_id]]

    def graph_of(self, task_id: str) -> TaskGraph:
        return self.graph_map[self.task(task_id).graph]

    def is_preemptive(self, task_id: str) -> bool:
        return self.pe_map[self.task(task_id).pe].preemptive

    # -- derived relations -------------------------------------------------

    @cached_property
    def succs(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {t.id: [] for t in self.tasks}
        for t in self.tasks:
            for p in t.preds:
                if p in out:
                    out[p].append(t.id)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def ancestors(self) -> dict[str, frozenset[str]]:
        return {t.id: self._closure(t.id, lambda x: self.task(x).preds) for t in self.tasks}

    @cached_property
    def descendants(self) -> dict[str, frozenset[str]]:
        return {t.id: self._closure(t.id, lambda x: self.succs[x]) for t in self.tasks}

    def _closure(self, start: str, step) -> frozenset[str]:
        seen: set[str] = set()
        stack = [x for x in step(start) if x in self.task_index]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(y for y in step(x) if y in self.task_index and y not in seen)
        seen.discard(start)
        return frozenset(seen)

    def path(self, src: str, dst: str) -> frozenset[str]:
        """Tasks strictly between ``src`` and ``dst`` on some dependency path."""
        return self.descendants[src] & self.ancestors[dst]

    def is_source(self, task_id: str) -> bool:
        return not self.task(task_id).preds

    @cached_property
    def analysis_order(self) -> tuple[str, ...]:
        """Topological order; among ready tasks the highest priority goes first."""
        indeg = {t.id: len(t.preds) for t in self.tasks}
        heap = [(-t.priority, t.id) for t in self.tasks if indeg[t.id] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            _, tid = heapq.heappop(heap)
            order.append(tid)
            for s in self.succs[tid]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    heapq.heappush(heap, (-self.task(s).priority, s))
        if len(order) != len(self.tasks):
            raise ModelError("dependency graph contains a cycle")
        return tuple(order)

    def graph_tasks(self, graph_id: str) -> tuple[str, ...]:
        return tuple(t.id for t in self.tasks if t.graph == graph_id)


def validate(model: SystemModel) -> list[Violation]:
    """Check every structural rule of the model and return the violations found."""
    out: list[Violation] = []

    seen: set[str] = set()
    for kind, items in (("pe", model.pes), ("graph", model.graphs), ("task", model.tasks)):
        local: set[str] = set()
        for item in items:
            if item.id in local:
                out.append(Violation("DuplicateIdentifier", item.id, f"duplicate {kind} id"))
            local.add(item.id)
        seen |= local

    for g in model.graphs:
        if g.period <= 0:
            out.append(Violation("NonPositivePeriod", g.id))
        if g.deadline <= 0:
            out.append(Violation("NonPositiveDeadline", g.id))
        if g.jitter < 0:
            out.append(Violation("NegativeJitter", g.id))
        if g.deadline > g.period:
            out.append(Violation("DeadlineExceedsPeriod", g.id, f"{g.deadline} > {g.period}"))

    by_id = {t.id: t for t in model.tasks}
    for t in model.tasks:
        if t.pe not in model.pe_map:
            out.append(Violation("UnknownPE", t.id, t.pe))
        if t.graph not in model.graph_map:
            out.append(Violation("UnknownGraph", t.id, t.graph))
        if t.bcet < 0:
            out.append(Violation("NegativeExecutionTime", t.id))
        if t.bcet > t.wcet:
            out.append(Violation("ExecutionRangeInverted", t.id, f"bcet {t.bcet} > wcet {t.wcet}"))
        for p in t.preds:
            if p not in by_id:
                out.append(Violation("UnknownPredecessor", t.id, p))
            elif by_id[p].graph != t.graph:
                out.append(Violation("CrossGraphEdge", t.id, p))

    prio_seen: dict[tuple[str, int], str] = {}
    for t in model.tasks:
        key = (t.pe, t.priority)
        if key in prio_seen:
            out.append(Violation("DuplicatePriority", t.id, f"duplicate priority {t.priority} on {t.pe} (also {prio_seen[key]})"))
        else:
            prio_seen[key] = t.id

    for g in model.graphs:
        if _has_cycle(g.id, [t for t in model.tasks if t.graph == g.id]):
            out.append(Violation("CycleDetected", g.id))
    return out


def _has_cycle(graph_id: str, tasks: list[Task]) -> bool:
    ids = {t.id for t in tasks}
    indeg = {t.id: sum(1 for p in t.preds if p in ids) for t in tasks}
    succ: dict[str, list[str]] = {t.id: [] for t in tasks}
    for t in tasks:
        for p in t.preds:
            if p in ids:
                succ[p].append(t.id)
    ready = [k for k, v in indeg.items() if v == 0]
    n = 0
    while ready:
        x = ready.pop()
        n += 1
        for s in succ[x]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    return n != len(tasks)


# -- serialization ---------------------------------------------------------

_TOP_KEYS = {"pes", "graphs", "comment"}
_PE_KEYS = {"id", "policy", "comment"}
_GRAPH_KEYS = {"id", "period", "jitter", "deadline", "tasks", "comment"}
_TASK_KEYS = {"id", "pe", "priority", "bcet", "wcet", "preds", "comment"}


def _check_keys(obj, allowed: set[str], where: str, required: set[str]):
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ModelError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ModelError(f"{where}: missing key(s) {sorted(missing)}")


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ModelError(f"{where}: expected a non-negative integer, got {value!r}")
    return value


def from_dict(doc: dict) -> SystemModel:
    """Build a model from an already-decoded document. No semantic validation."""
    _check_keys(doc, _TOP_KEYS, "document", {"pes", "graphs"})
    pes = []
    for k, p in enumerate(doc["pes"]):
        _check_keys(p, _PE_KEYS, f"pes[{k}]", {"id"})
        try:
            policy = Policy(p.get("policy", "preemptive"))
        except ValueError:
            raise ModelError(f"pes[{k}]: unknown policy {p.get('policy')!r}") from None
        pes.append(ProcessingElement(str(p["id"]), policy))
    graphs, tasks = [], []
    for k, g in enumerate(doc["graphs"]):
        where = f"graphs[{k}]"
        _check_keys(g, _GRAPH_KEYS, where, {"id", "period", "deadline", "tasks"})
        gid = str(g["id"])
        ids = []
        for j, t in enumerate(g["tasks"]):
            tw = f"{where}.tasks[{j}]"
            _check_keys(t, _TASK_KEYS, tw, {"id", "pe", "priority", "wcet"})
            if isinstance(t["priority"], bool) or not isinstance(t["priority"], int):
                raise ModelError(f"{tw}: priority must be an integer")
            wcet = _int(t["wcet"], f"{tw}.wcet")
            tasks.append(Task(
                id=str(t["id"]), graph=gid, pe=str(t["pe"]), priority=t["priority"],
                bcet=_int(t.get("bcet", wcet), f"{tw}.bcet"), wcet=wcet,
                preds=tuple(str(x) for x in t.get("preds", ())),
            ))
            ids.append(str(t["id"]))
        graphs.append(TaskGraph(
            id=gid, period=_int(g["period"], f"{where}.period"),
            jitter=_int(g.get("jitter", 0), f"{where}.jitter"),
            deadline=_int(g["deadline"], f"{where}.deadline"), tasks=tuple(ids),
        ))
    return SystemModel(tuple(pes), tuple(graphs), tuple(tasks))


def parse_system(text: str) -> SystemModel:
    """Parse and validate a model document; raise ModelError on any problem."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    model = from_dict(doc)
    problems = validate(model)
    if problems:
        raise ModelError("; ".join(str(v) for v in problems))
    return model


def load_system(path) -> SystemModel:
    with open(path, encoding="utf-8") as fh:
        return parse_system(fh.read())


def to_dict(model: SystemModel) -> dict:
    graphs = []
    for g in model.graphs:
        graphs.append({
            "id": g.id, "period": g.period, "jitter": g.jitter, "deadline": g.deadline,
            "tasks": [
                {"id": t.id, "pe": t.pe, "priority": t.priority, "bcet": t.bcet,
                 "wcet": t.wcet, "preds": list(t.preds)}
                for t in (model.task(x) for x in g.tasks)
            ],
        })
    return {"pes": [{"id": p.id, "policy": p.policy.value} for p in model.pes], "graphs": graphs}


def serialize(model: SystemModel) -> str:
    return json.dumps(to_dict(model), indent=2)


def build(pes: dict[str, str], graphs: list[dict]) -> SystemModel:
    """Compact constructor used by tests and the generator.

    ``pes`` maps id to policy string; each graph dict holds period, jitter,
    deadline and ``tasks`` as tuples ``(id, pe, priority, bcet, wcet, preds)``.
    """
    doc = {
        "pes": [{"id": k, "policy": v} for k, v in pes.items()],
        "graphs": [
            {
                "id": g["id"], "period": g["period"], "jitter": g.get("jitter", 0),
                "deadline": g.get("deadline", g["period"]),
                "tasks": [
                    {"id": tid, "pe": pe, "priority": pri, "bcet": b, "wcet": w, "preds": list(preds)}
                    for tid, pe, pri, b, w, preds in g["tasks"]
                ],
            }
            for g in graphs
        ],
    }
    return from_dict(doc)
