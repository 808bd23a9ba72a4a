"""OBJ/OFF reading and writing, decomposition export and run reports."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import MeshFormatError
from .mesh import TriMesh

OUTPUT_MODES = ("multi", "split")


def _fan(poly: list) -> list:
    return [(poly[0], poly[k], poly[k + 1]) for k in range(1, len(poly) - 1)]


def _obj_index(tok: str, n_vertices: int, lineno: int) -> int:
    try:
        idx = int(tok.split("/")[0])
    except ValueError:
        raise MeshFormatError(f"line {lineno}: bad face index {tok!r}") from None
    if idx == 0:
        raise MeshFormatError(f"line {lineno}: OBJ indices are 1-based, got 0")
    # negative indices count back from the last vertex read so far
    k = idx - 1 if idx > 0 else n_vertices + idx
    if not 0 <= k < n_vertices:
        raise MeshFormatError(f"line {lineno}: face index {idx} out of range ({n_vertices} vertices)")
    return k


def _read_obj(text: str) -> TriMesh:
    verts, tris = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshFormatError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise MeshFormatError(f"line {lineno}: bad vertex coordinate") from None
        elif parts[0] == "f":
            poly = [_obj_index(t, len(verts), lineno) for t in parts[1:]]
            if len(poly) < 3:
                raise MeshFormatError(f"line {lineno}: face needs at least 3 vertices")
            tris.extend(_fan(poly))
    return _finish(verts, tris)


def _read_off(text: str) -> TriMesh:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("OFF"):
        raise MeshFormatError("missing OFF header")
    head = lines[0][3:].split()
    body = lines[1:]
    if not head:
        if not body:
            raise MeshFormatError("missing OFF counts line")
        head, body = body[0].split(), body[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise MeshFormatError("bad OFF counts line") from None
    if len(body) < nv + nf:
        raise MeshFormatError("OFF file is truncated")
    try:
        verts = [[float(x) for x in body[k].split()[:3]] for k in range(nv)]
    except ValueError:
        raise MeshFormatError("bad OFF vertex line") from None
    if any(len(v) != 3 for v in verts):
        raise MeshFormatError("OFF vertex needs 3 coordinates")
    tris = []
    for k in range(nf):
        tok = body[nv + k].split()
        try:
            cnt = int(tok[0])
            poly = [int(t) for t in tok[1:1 + cnt]]
        except (ValueError, IndexError):
            raise MeshFormatError(f"bad OFF face line {k}") from None
        if cnt < 3 or len(poly) != cnt:
            raise MeshFormatError(f"bad OFF face line {k}")
        if min(poly) < 0 or max(poly) >= nv:
            raise MeshFormatError(f"OFF face {k} index out of range")
        tris.extend(_fan(poly))
    return _finish(verts, tris)


def _finish(verts, tris) -> TriMesh:
    if not tris or not verts:
        raise MeshFormatError("mesh has no triangles")
    v = np.asarray(verts, dtype=np.float64)
    if not np.isfinite(v).all():
        raise MeshFormatError("non-finite vertex coordinate")
    t = np.asarray(tris, dtype=np.int64)
    # faces that repeat a vertex carry no area; drop them rather than fail
    t = t[(t[:, 0] != t[:, 1]) & (t[:, 1] != t[:, 2]) & (t[:, 0] != t[:, 2])]
    if not len(t):
        raise MeshFormatError("mesh has no non-degenerate triangles")
    return TriMesh(v, t)


def load_mesh(path) -> TriMesh:
    """Read an OBJ or OFF file; polygons are fan-triangulated.

    Raises ``OSError`` when the file cannot be read and ``MeshFormatError``
    for malformed content.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8", errors="replace")
    suffix = path.suffix.lower()
    if suffix == ".off" or (suffix != ".obj" and text.lstrip().startswith("OFF")):
        return _read_off(text)
    return _read_obj(text)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def obj_text(meshes, names=None) -> str:
    lines = []
    base = 1
    for k, m in enumerate(meshes):
        if names is not None:
            lines.append(f"o {names[k]}")
        lines.extend("v " + " ".join(_fmt(c) for c in v) for v in m.vertices.tolist())
        lines.extend(f"f {a + base} {b + base} {c + base}" for a, b, c in m.triangles.tolist())
        base += m.n_vertices
    return "\n".join(lines) + "\n"


def save_mesh(mesh: TriMesh, path) -> Path:
    path = Path(path)
    if path.suffix.lower() == ".off":
        lines = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} 0"]
        lines += [" ".join(_fmt(c) for c in v) for v in mesh.vertices.tolist()]
        lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        path.write_text(obj_text([mesh]), encoding="utf-8")
    return path


@dataclass
class RunReport:
    input: str
    config: dict
    parts: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)
    cuts: list = field(default_factory=list)
    overlaps: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "config": self.config,
            "parts": self.parts,
            "totals": self.totals,
            "cuts": self.cuts,
            "overlaps": self.overlaps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def build_report(decomposition, input_path: str = "", evaluate: bool = True) -> RunReport:
    """Collect per-part records, totals and the cut log.

    Visibility concavity is filled in for parts that were never examined
    (for instance parts frozen by the part cap). Lengths and volumes are in
    the normalized frame.
    """
    from .decomposer import _edges

    d = decomposition
    parts = []
    for p in d.parts:
        _edges(p, d.config)
        parts.append({
            "id": p.id,
            "vertices": p.mesh.n_vertices,
            "hull_vertices": p.hull.mesh.n_vertices,
            "hull_volume": p.hull.volume,
            "concavity": p.concavity.combined,
            "hausdorff": p.concavity.hausdorff,
            "volume_radius": p.concavity.volume_radius,
            "visibility_concavity": p.visibility_concavity,
            "terminal_reason": p.reason,
        })
    overlaps = []
    boxes = [p.hull.mesh.aabb() for p in d.parts]
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            vol = boxes[a].overlap_volume(boxes[b])
            if vol > 0:
                overlaps.append({"parts": [d.parts[a].id, d.parts[b].id], "aabb_overlap_volume": vol})
    totals = {"parts": len(d.parts), "seconds": dict(d.timings)}
    if evaluate:
        ev = d.evaluation()
        totals["concavity"] = ev.combined
        totals["hausdorff"] = ev.hausdorff
        totals["volume_radius"] = ev.volume_radius
        totals["seconds"] = dict(d.timings)
    return RunReport(str(input_path), d.config.as_dict(), parts, totals, [c.as_dict() for c in d.cuts], overlaps)


def save_decomposition(decomposition, out_dir, mode: str = "split", input_path: str = "",
                       report: RunReport | None = None, raw_parts: bool = False) -> list:
    """Write the hulls (in input coordinates) and ``report.json``."""
    if mode not in OUTPUT_MODES:
        raise ValueError(f"output mode must be one of {OUTPUT_MODES}")
    if not len(decomposition.parts):
        raise ValueError("decomposition has no parts")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hulls = decomposition.world_hulls()
    written = []
    if mode == "split":
        for k, h in enumerate(hulls):
            written.append(save_mesh(h, out / f"part_{k:03d}.obj"))
    else:
        path = out / "hulls.obj"
        path.write_text(obj_text(hulls, [f"part_{k}" for k in range(len(hulls))]), encoding="utf-8")
        written.append(path)
    if raw_parts:
        for k, p in enumerate(decomposition.parts):
            written.append(save_mesh(p.mesh.transformed(decomposition.transform), out / f"raw_{k:03d}.obj"))
    report = report or build_report(decomposition, input_path)
    rpath = out / "report.json"
    rpath.write_text(report.to_json(), encoding="utf-8")
    written.append(rpath)
    return written


def load_hulls(directory) -> list:
    """Every ``*.obj`` in ``directory`` (sorted by name); multi-object files are split per ``o``."""
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"no such directory: {d}")
    meshes = []
    for path in sorted(d.glob("*.obj")):
        text = path.read_text(encoding="utf-8", errors="replace")
        chunks = _split_objects(text)
        meshes.extend(_read_obj(c) for c in chunks)
    return meshes


def _split_objects(text: str) -> list:
    """Split a multi-object OBJ into standalone texts with re-based indices."""
    if not any(ln.startswith("o ") for ln in text.splitlines()):
        return [text]
    chunks, cur, offset, count = [], [], 0, 0
    for ln in text.splitlines():
        if ln.startswith("o "):
            if cur:
                chunks.append("\n".join(cur))
            cur, offset = [], count
            continue
        tok = ln.split()
        if tok and tok[0] == "v":
            count += 1
            cur.append(ln)
        elif tok and tok[0] == "f":
            idx = [str(int(t.split("/")[0]) - offset) for t in tok[1:]]
            cur.append("f " + " ".join(idx))
        else:
            cur.append(ln)
    if cur:
        chunks.append("\n".join(cur))
    return [c for c in chunks if c.strip()]


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def ensure_writable(directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if not os.access(d, os.W_OK):
        raise PermissionError(f"cannot write to {d}")
    return d
