"""Reading meshes and per-vertex/per-edge arrays; writing reports and traces.

Accepted mesh inputs:

* OFF files (vertex coordinates are read past and ignored; faces must be
  triangles),
* JSON objects ``{"vertex_count": N, "faces": [[i, j, k], ...]}`` with 0-based
  indices,
* catalogue names such as ``tetrahedron`` or ``bipyramid-12``.

Array inputs are a scalar shorthand (``ones`` or a number), a JSON array, a
JSON object holding the array under ``values``/``radii``, or CSV rows
``index,value``.  Arrays follow the canonical vertex or edge order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .meshes import CATALOG, named_surface
from .surface import TriangulatedSurface, build_surface

SCHEMA_VERSION = 1


def read_off(path: Path) -> TriangulatedSurface:
    """Read the faces of an OFF file; coordinates and face colours are ignored."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split("#", 1)[0].split() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0][0].upper().endswith("OFF"):
        raise ValidationError(f"{path}: missing OFF header")
    # the counts may share the header line ("OFF 4 4 6")
    counts = lines[0][1:] if len(lines[0]) > 1 else lines[1]
    body = lines[1:] if len(lines[0]) > 1 else lines[2:]
    try:
        nv, nf = int(counts[0]), int(counts[1])
        faces = []
        for row in body[nv: nv + nf]:
            k = int(row[0])
            if k != 3:
                raise ValidationError(f"{path}: face with {k} vertices")
            faces.append([int(t) for t in row[1:4]])
    except (IndexError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed OFF ({exc})") from None
    if len(faces) != nf:
        raise ValidationError(f"{path}: expected {nf} faces, found {len(faces)}")
    return build_surface(faces, vertex_count=nv)


def write_off(surface: TriangulatedSurface, path: Path) -> None:
    """Write the combinatorics with dummy (zero) coordinates."""
    lines = ["OFF", f"{surface.vertex_count} {surface.face_count} {surface.edge_count}"]
    lines += ["0 0 0"] * surface.vertex_count
    lines += [f"3 {a} {b} {c}" for a, b, c in surface.faces]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_mesh(source: str) -> TriangulatedSurface:
    path = Path(source)
    if path.suffix.lower() == ".off":
        _require(path)
        return read_off(path)
    if path.suffix.lower() == ".json":
        _require(path)
        data = _load_json(path)
        try:
            return build_surface(data["faces"], vertex_count=data.get("vertex_count"))
        except (KeyError, TypeError):
            raise ValidationError(f"{path}: expected an object with 'faces'") from None
    if source in CATALOG or source.startswith("bipyramid-"):
        return named_surface(source)
    raise ValidationError(f"mesh file not found or unknown mesh name: {source}")


def _require(path: Path) -> None:
    if not path.is_file():
        raise ValidationError(f"file not found: {path}")


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def read_array(source: str, length: int, what: str = "values") -> np.ndarray:
    """Parse a scalar shorthand or load an array file of ``length`` entries."""
    text = str(source).strip()
    if text.lower() == "ones":
        return np.ones(length)
    try:
        return np.full(length, float(text))
    except ValueError:
        pass
    path = Path(text)
    _require(path)
    if path.suffix.lower() == ".csv":
        out = np.full(length, np.nan)
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    idx, val = int(row[0]), float(row[1])
                except (ValueError, IndexError):
                    continue  # header line
                if not 0 <= idx < length:
                    raise ValidationError(f"{path}: index {idx} out of range")
                out[idx] = val
        if np.isnan(out).any():
            raise ValidationError(f"{path}: missing entries for {what}")
        return out
    data = _load_json(path)
    if isinstance(data, dict):
        for key in ("values", "radii", what):
            if key in data:
                data = data[key]
                break
        else:
            raise ValidationError(f"{path}: no array found for {what}")
    arr = np.asarray(data, dtype=float)
    if arr.shape != (length,):
        raise ValidationError(
            f"{path}: expected {length} {what}, found shape {arr.shape}"
        )
    return arr


def header(surface: TriangulatedSurface) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "vertex_count": surface.vertex_count,
        "edge_count": surface.edge_count,
        "face_count": surface.face_count,
        "euler_characteristic": surface.euler_characteristic,
        "mesh_hash": surface.digest(),
    }


def dump_json(payload: dict, path: Path | None = None) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


TRACE_COLUMNS = ("t", "residual", "potential", "min_slack", "drift")


def write_trace_csv(trace, path: Path, surface: TriangulatedSurface) -> None:
    h = header(surface)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(
            f"# schema={h['schema']} N={h['vertex_count']} E={h['edge_count']} "
            f"mesh_hash={h['mesh_hash']} status={trace.status}\n"
        )
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in trace.rows():
            w.writerow([repr(float(v)) for v in row])


def write_snapshots(trace, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t, u in zip(trace.times, trace.snapshots):
            fh.write(json.dumps({"t": t, "u": u.tolist()}) + "\n")


def read_trace_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    cols = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return {c: data[:, k] for k, c in enumerate(cols)}


@dataclass
class ProblemInstance:
    surface: TriangulatedSurface
    inv_dist: np.ndarray
    radii: np.ndarray
    alpha: float
    provenance: dict = field(default_factory=dict)

    @classmethod
    def load(cls, mesh: str, inv_dist: str, radii: str, alpha: float):
        surface = read_mesh(mesh)
        I = read_array(inv_dist, surface.edge_count, "inversive distances")
        if np.any(I < 0):
            raise ValidationError("inversive distances must be >= 0")
        r = read_array(radii, surface.vertex_count, "radii")
        if np.any(r <= 0):
            raise ValidationError("radii must be strictly positive")
        return cls(
            surface=surface,
            inv_dist=I,
            radii=r,
            alpha=float(alpha),
            provenance={"mesh": mesh, "inv_dist": inv_dist, "radii": radii},
        )
