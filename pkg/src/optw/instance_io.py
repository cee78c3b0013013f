"""Reading benchmark files and the canonical JSON instance format.

Benchmark text layout (the common OPTW distribution convention)::

    k v N t                       header; N = number of points of interest
    D Q                           ignored
    i x y d S f a [a ints] O C    one row per node, depot first (i = 0)

``d`` is the visit duration, ``S`` the score and ``[O, C]`` the window; the
depot window gives the tour's start and end times. Only ``x y d S`` and the
last two columns are read, so rows with any number of middle columns parse.
If the file lists a second depot row after the N points of interest it
becomes the end node, otherwise the start depot is duplicated.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import DayNormalization, GroupTag, Instance, Node

SCHEMA_VERSION = 1

ROUNDING = {GroupTag.SOLOMON: 1, GroupTag.CORDEAU: 2, GroupTag.GAVALAS: 2, GroupTag.CUSTOM: 2}


class FileFormat(str, enum.Enum):
    SOLOMON = "SolomonOPTW"
    CORDEAU = "CordeauOPTW"
    GAVALAS = "GavalasOPTW"
    CANONICAL = "CanonicalJSON"


_TAG = {FileFormat.SOLOMON: GroupTag.SOLOMON, FileFormat.CORDEAU: GroupTag.CORDEAU,
        FileFormat.GAVALAS: GroupTag.GAVALAS}


class MalformedFile(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownFormat(ValueError):
    pass


class SchemaVersionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkFile:
    path: Path
    format: FileFormat

    @classmethod
    def detect(cls, path: str | Path, fmt: FileFormat | str | None = None) -> "BenchmarkFile":
        path = Path(path)
        if fmt is not None:
            return cls(path, FileFormat(fmt))
        stem = path.stem.lower()
        if path.suffix.lower() == ".json":
            return cls(path, FileFormat.CANONICAL)
        if "solomon" in stem or re.fullmatch(r"(c|r|rc)\d{3}", stem):
            return cls(path, FileFormat.SOLOMON)
        if "cordeau" in stem or re.fullmatch(r"pr\d{2}", stem):
            return cls(path, FileFormat.CORDEAU)
        if "gavalas" in stem or re.fullmatch(r"t\d{3}", stem):
            return cls(path, FileFormat.GAVALAS)
        raise UnknownFormat(f"cannot infer benchmark format of {path.name}")


def _floats(tokens, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise MalformedFile(lineno, f"non-numeric field ({exc})") from None


def parse_text(text: str, group: GroupTag, name: str = "") -> Instance:
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if len(lines) < 3:
        raise MalformedFile(len(lines), "file too short")
    head_no, head = lines[0]
    header = _floats(head, head_no)
    if len(header) < 3:
        raise MalformedFile(head_no, "header needs at least 3 fields")
    n_poi = int(header[2])
    rows = lines[2:]
    if len(rows) < n_poi + 1:
        raise MalformedFile(rows[-1][0] if rows else head_no,
                            f"expected {n_poi + 1} node rows, found {len(rows)}")
    parsed = []
    for lineno, tok in rows[: n_poi + 2]:
        if len(tok) < 7:
            raise MalformedFile(lineno, f"node row has {len(tok)} fields, need at least 7")
        vals = _floats(tok, lineno)
        x, y, d, s = vals[1:5]
        o, c = vals[-2], vals[-1]
        parsed.append(Node(x, y, s, o, c, d))
    depot = parsed[0]
    pois = parsed[1: n_poi + 1]
    end = parsed[n_poi + 1] if len(parsed) > n_poi + 1 else depot
    t_start, t_end = depot.open, depot.close
    start_node = Node(depot.x, depot.y, 0.0, t_start, t_end, 0.0)
    end_node = Node(end.x, end.y, 0.0, t_start, t_end, 0.0)
    nodes = [start_node, *pois, end_node]
    norm = DayNormalization.for_region(t_end, [v.close for v in nodes])
    top = max(v.score for v in pois) if pois else 0.0
    return Instance(tuple(nodes), 0, len(nodes) - 1, t_start, t_end,
                    rounding_decimals=ROUNDING[group], t_max=norm.t_max,
                    score_upper=1.1 * top if top > 0 else 1.0, group_tag=group, name=name)


def parse_benchmark(file: BenchmarkFile | str | Path, fmt: FileFormat | str | None = None) -> Instance:
    if not isinstance(file, BenchmarkFile):
        file = BenchmarkFile.detect(file, fmt)
    if file.format is FileFormat.CANONICAL:
        return read_canonical(file.path)
    text = Path(file.path).read_text(encoding="utf-8")
    return parse_text(text, _TAG[file.format], name=Path(file.path).stem)


# canonical JSON -------------------------------------------------------------

def to_document(inst: Instance, best_known: float | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "group_tag": inst.group_tag.value,
        "rounding_decimals": inst.rounding_decimals,
        "start_index": inst.start_index,
        "end_index": inst.end_index,
        "t_start": inst.t_start,
        "t_end": inst.t_end,
        "t_max": inst.t_max,
        "score_upper": inst.score_upper,
        "best_known": best_known,
        "nodes": [[v.x, v.y, v.score, v.open, v.close, v.duration] for v in inst.nodes],
    }


def from_document(doc: dict) -> Instance:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"expected schema_version {SCHEMA_VERSION}, got {version}")
    nodes = tuple(Node(*(float(v) for v in row)) for row in doc["nodes"])
    return Instance(nodes, int(doc["start_index"]), int(doc["end_index"]), float(doc["t_start"]),
                    float(doc["t_end"]), int(doc["rounding_decimals"]), float(doc["t_max"]),
                    float(doc["score_upper"]), GroupTag(doc["group_tag"]), doc.get("name", ""))


def dumps_canonical(inst: Instance, best_known: float | None = None) -> str:
    return json.dumps(to_document(inst, best_known), indent=1) + "\n"


def write_canonical(inst: Instance, path: str | Path, best_known: float | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_canonical(inst, best_known).encode("utf-8"))
    return path


def read_canonical(path: str | Path) -> Instance:
    return from_document(json.loads(Path(path).read_text(encoding="utf-8")))


# validation -----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    rule: str
    node: int | None = None

    def __str__(self):
        return self.rule if self.node is None else f"{self.rule}({self.node})"


def validate_instance(inst: Instance) -> list[Violation]:
    out: list[Violation] = []
    if inst.t_start > inst.t_end:
        out.append(Violation("BudgetInverted"))
    if inst.rounding_decimals not in (1, 2):
        out.append(Violation("RoundingInvalid"))
    if inst.t_max < inst.t_end:
        out.append(Violation("TmaxBelowEnd"))
    if not inst.score_upper > 0:
        out.append(Violation("ScoreUpperNonPositive"))
    for idx in (inst.start_index, inst.end_index):
        if not 0 <= idx < inst.n:
            out.append(Violation("IndexOutOfRange", idx))
    if inst.start_index == inst.end_index:
        out.append(Violation("StartIsEnd", inst.start_index))
    for i, v in enumerate(inst.nodes):
        if v.open > v.close:
            out.append(Violation("WindowInverted", i))
        if v.duration < 0:
            out.append(Violation("NegativeDuration", i))
        if v.score < 0:
            out.append(Violation("NegativeScore", i))
    return out


# best-known sidecar -----------------------------------------------------------

def reference_scores() -> dict[str, dict[str, float]]:
    """Published best-known and ILS scores per benchmark instance name."""
    text = resources.files("optw").joinpath("data/reference_scores.json").read_text()
    return json.loads(text)


def dumps_benchmark_text(inst: Instance) -> str:
    """Benchmark text layout for ``inst`` (start depot, POIs, then end depot)."""
    pois = inst.poi_indices()
    lines = [f"1 1 {len(pois)} 0", "0 0"]
    order = [inst.start_index, *pois, inst.end_index]
    for k, i in enumerate(order):
        v = inst.nodes[i]
        lines.append(f"{k} {v.x:g} {v.y:g} {v.duration:g} {v.score:g} 0 0 {v.open:g} {v.close:g}")
    return "\n".join(lines) + "\n"


def write_benchmark_text(inst: Instance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_benchmark_text(inst))
    return path
