"""Readers and writers for Medit .mesh, Gmsh v2.2 .msh, and legacy VTK files.

Indices are 1-based on disk and 0-based in memory. Coordinates are written
with 17 significant digits so float64 values round-trip exactly through text.
"""

from __future__ import annotations

import os

import numpy as np

from .tetmesh import MeshError, TetMesh, TopologyError


class ParseError(MeshError):
    pass


FORMATS = ("medit", "gmsh2", "vtk")

_EXT_TO_FORMAT = {".mesh": "medit", ".msh": "gmsh2", ".vtk": "vtk"}


def format_from_path(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    if ext not in _EXT_TO_FORMAT:
        raise ParseError(f"cannot infer mesh format from extension {ext!r}")
    return _EXT_TO_FORMAT[ext]


def load_mesh(path: str, fmt: str | None = None) -> TetMesh:
    """Load a tetrahedral mesh, validating topology and orientation."""
    fmt = fmt or format_from_path(path)
    if fmt == "medit":
        vertices, tets = _read_medit(path)
    elif fmt == "gmsh2":
        vertices, tets = _read_gmsh2(path)
    else:
        raise ParseError(f"unsupported input format {fmt!r}")
    if len(tets) == 0:
        raise TopologyError(f"{path}: no tetrahedra found")
    return TetMesh.from_arrays(vertices, tets)


def save_mesh(path: str, vertices: np.ndarray, tets: np.ndarray,
              fmt: str | None = None) -> None:
    fmt = fmt or format_from_path(path)
    if fmt == "medit":
        _write_medit(path, vertices, tets)
    elif fmt == "gmsh2":
        _write_gmsh2(path, vertices, tets)
    elif fmt == "vtk":
        _write_vtk(path, vertices, tets)
    else:
        raise ParseError(f"unsupported output format {fmt!r}")


# -- Medit ---------------------------------------------------------------


def _tokens(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0]
            yield from line.split()


def _read_medit(path: str) -> tuple[np.ndarray, np.ndarray]:
    tok = _tokens(path)
    vertices: list[float] = []
    tets: list[int] = []
    try:
        for word in tok:
            key = word.lower()
            if key == "vertices":
                n = int(next(tok))
                for _ in range(n):
                    for _ in range(3):
                        vertices.append(float(next(tok)))
                    next(tok)  # reference tag
            elif key == "tetrahedra":
                n = int(next(tok))
                for _ in range(n):
                    for _ in range(4):
                        tets.append(int(next(tok)) - 1)
                    next(tok)
            elif key == "triangles":
                n = int(next(tok))
                for _ in range(4 * n):
                    next(tok)
            elif key == "edges":
                n = int(next(tok))
                for _ in range(3 * n):
                    next(tok)
            elif key == "end":
                break
    except (StopIteration, ValueError) as exc:
        raise ParseError(f"{path}: malformed Medit file ({exc})") from exc
    if not vertices:
        raise ParseError(f"{path}: no Vertices section")
    return (np.array(vertices, dtype=np.float64).reshape(-1, 3),
            np.array(tets, dtype=np.int64).reshape(-1, 4))


def _write_medit(path: str, vertices: np.ndarray, tets: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("MeshVersionFormatted 2\nDimension 3\n")
        fh.write(f"Vertices\n{len(vertices)}\n")
        for x, y, z in vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g} 0\n")
        fh.write(f"Tetrahedra\n{len(tets)}\n")
        for t in tets:
            fh.write(f"{t[0] + 1} {t[1] + 1} {t[2] + 1} {t[3] + 1} 0\n")
        fh.write("End\n")


# -- Gmsh v2.2 -------------------------------------------------------------


def _read_gmsh2(path: str) -> tuple[np.ndarray, np.ndarray]:
    vertices = None
    tets: list[list[int]] = []
    id_map: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = iter(fh.read().splitlines())
    try:
        for line in lines:
            tag = line.strip()
            if tag == "$MeshFormat":
                version = next(lines).split()[0]
                if not version.startswith("2"):
                    raise ParseError(f"{path}: unsupported Gmsh version {version}")
                next(lines)  # $EndMeshFormat
            elif tag == "$Nodes":
                n = int(next(lines))
                vertices = np.empty((n, 3), dtype=np.float64)
                for i in range(n):
                    parts = next(lines).split()
                    id_map[int(parts[0])] = i
                    vertices[i] = [float(parts[1]), float(parts[2]), float(parts[3])]
                next(lines)  # $EndNodes
            elif tag == "$Elements":
                n = int(next(lines))
                for _ in range(n):
                    parts = next(lines).split()
                    etype = int(parts[1])
                    ntags = int(parts[2])
                    nodes = parts[3 + ntags:]
                    if etype == 4:
                        tets.append([id_map[int(v)] for v in nodes[:4]])
                next(lines)  # $EndElements
    except (StopIteration, ValueError, KeyError, IndexError) as exc:
        raise ParseError(f"{path}: malformed Gmsh file ({exc})") from exc
    if vertices is None:
        raise ParseError(f"{path}: no $Nodes section")
    return vertices, np.array(tets, dtype=np.int64).reshape(-1, 4)


def _write_gmsh2(path: str, vertices: np.ndarray, tets: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write(f"$Nodes\n{len(vertices)}\n")
        for i, (x, y, z) in enumerate(vertices):
            fh.write(f"{i + 1} {x:.17g} {y:.17g} {z:.17g}\n")
        fh.write("$EndNodes\n")
        fh.write(f"$Elements\n{len(tets)}\n")
        for i, t in enumerate(tets):
            fh.write(f"{i + 1} 4 2 0 0 {t[0] + 1} {t[1] + 1} {t[2] + 1} {t[3] + 1}\n")
        fh.write("$EndElements\n")


# -- VTK legacy unstructured grid (output only) -----------------------------


def _write_vtk(path: str, vertices: np.ndarray, tets: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\nvolball mesh\nASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(vertices)} double\n")
        for x, y, z in vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        fh.write(f"CELLS {len(tets)} {5 * len(tets)}\n")
        for t in tets:
            fh.write(f"4 {t[0]} {t[1]} {t[2]} {t[3]}\n")
        fh.write(f"CELL_TYPES {len(tets)}\n")
        fh.write("10\n" * len(tets))


def read_population_csv(path: str, n_tets: int) -> np.ndarray:
    """Read per-tet populations from a CSV with header ``tet_index,population``."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().lower().replace(" ", "")
        if header != "tet_index,population":
            raise ParseError(f"{path}: expected header 'tet_index,population'")
        pop = np.full(n_tets, np.nan)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                idx_s, val_s = line.split(",")
                idx, val = int(idx_s), float(val_s)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: malformed row {line!r}") from exc
            if not 0 <= idx < n_tets:
                raise ParseError(f"{path}:{lineno}: tet index {idx} out of range")
            pop[idx] = val
    if np.any(np.isnan(pop)):
        raise ParseError(f"{path}: populations missing for some tets")
    if np.any(pop <= 0):
        raise ParseError(f"{path}: populations must be positive")
    return pop
