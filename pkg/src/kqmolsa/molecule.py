"""Reading V2000 molfiles and reducing molecules to genus-zero sphere sets.

Hydrogens are stripped, every ring of the smallest set of smallest rings is
collapsed to one sphere at its centroid, and the remaining heavy atoms keep
their van der Waals radii.
"""

from __future__ import annotations

import logging
import os
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

logger = logging.getLogger(__name__)

RING_RADIUS = 2.25
MAX_RING_SIZE = 12

# Bondi (1964) van der Waals radii, Angstrom
BONDI_RADII = {
    "H": 1.20,
    "C": 1.70,
    "N": 1.55,
    "O": 1.52,
    "F": 1.47,
    "P": 1.80,
    "S": 1.80,
    "Cl": 1.75,
    "Br": 1.85,
    "I": 1.98,
    "Si": 2.10,
    "Se": 1.90,
    "B": 1.92,
}

RADII_ENV_VAR = "KQ_RADII_TABLE"


class MoleculeError(ValueError):
    """Raised when a molecule cannot be turned into a sphere model."""


class SDFParseError(MoleculeError):
    pass


class MacrocycleError(MoleculeError):
    pass


@dataclass
class MoleculeRecord:
    name: str
    elements: list[str]
    positions: np.ndarray  # (n_atoms, 3), Angstrom
    bonds: list[tuple[int, int, int]]  # zero-based atom indices, bond order
    properties: dict[str, str] = field(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return len(self.elements)

    def heavy_atoms(self) -> list[int]:
        return [i for i, e in enumerate(self.elements) if e != "H"]


@dataclass
class SphereSet:
    centres: np.ndarray  # (N, 3)
    radii: np.ndarray  # (N,)
    provenance: list[str]  # "atom:<idx>" or "ring:<i,j,...>"
    name: str = ""

    def __post_init__(self):
        self.centres = np.asarray(self.centres, dtype=float).reshape(-1, 3)
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if len(self.radii) < 1:
            raise MoleculeError("a sphere set needs at least one sphere")
        if len(self.radii) != len(self.centres) or len(self.provenance) != len(self.radii):
            raise MoleculeError("centres, radii and provenance lengths differ")
        if np.any(self.radii <= 0) or not np.all(np.isfinite(self.centres)):
            raise MoleculeError("radii must be positive and centres finite")
        for i in range(len(self.radii)):
            for j in range(i):
                if self.radii[i] == self.radii[j] and np.array_equal(self.centres[i], self.centres[j]):
                    raise MoleculeError(f"spheres {j} and {i} are identical")

    @property
    def n_spheres(self) -> int:
        return len(self.radii)

    def subset(self, keep) -> "SphereSet":
        keep = list(keep)
        return SphereSet(
            self.centres[keep], self.radii[keep], [self.provenance[i] for i in keep], self.name
        )


# --- SDF ---------------------------------------------------------------------


def _parse_block(lines: list[str]) -> MoleculeRecord:
    if len(lines) < 4:
        raise SDFParseError("molfile block is shorter than its header")
    name = lines[0].strip()
    program_line = lines[1]
    counts = lines[3]
    if "V3000" in counts:
        raise SDFParseError("V3000 molfiles are not supported; convert to V2000")
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except ValueError:
        raise SDFParseError(f"malformed counts line: {counts!r}") from None

    atom_lines = lines[4 : 4 + n_atoms]
    bond_lines = lines[4 + n_atoms : 4 + n_atoms + n_bonds]
    if len(atom_lines) < n_atoms or len(bond_lines) < n_bonds:
        raise SDFParseError("counts line declares more atoms/bonds than the block holds")

    elements, coords = [], []
    for k, line in enumerate(atom_lines):
        try:
            xyz = [float(line[0:10]), float(line[10:20]), float(line[20:30])]
        except ValueError:
            raise SDFParseError(f"bad coordinates on atom line {k + 1}: {line!r}") from None
        element = line[31:34].strip()
        if not element or not element[0].isalpha() or line[30:31] not in (" ", ""):
            raise SDFParseError(f"bad element on atom line {k + 1}: {line!r}")
        elements.append(element[0].upper() + element[1:].lower())
        coords.append(xyz)

    bonds = []
    for k, line in enumerate(bond_lines):
        try:
            a, b, order = int(line[0:3]), int(line[3:6]), int(line[6:9])
        except ValueError:
            raise SDFParseError(f"malformed bond line {k + 1}: {line!r}") from None
        if not (1 <= a <= n_atoms and 1 <= b <= n_atoms) or a == b:
            raise SDFParseError(f"bond line {k + 1} references invalid atoms")
        bonds.append((a - 1, b - 1, order))

    # terminator of the connection table
    rest = lines[4 + n_atoms + n_bonds :]
    if rest and not any(line.startswith("M  END") for line in rest):
        # trailing non-M lines before data items indicate a count mismatch
        first = rest[0]
        if first.strip() and not first.startswith(("M  ", "A  ", "V  ", "G  ", "S  ", ">")):
            raise SDFParseError("atom/bond block longer than declared in the counts line")

    positions = np.array(coords, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(positions)):
        raise SDFParseError("non-finite coordinates")
    if n_atoms and np.all(positions[:, 2] == 0.0) and program_line[20:22] == "2D":
        raise SDFParseError("2D molfile: 3D coordinates are required")

    props = {}
    for idx, line in enumerate(rest):
        if line.startswith(">") and "<" in line:
            key = line[line.index("<") + 1 : line.rindex(">")] if line.rindex(">") > 0 else ""
            if idx + 1 < len(rest):
                props[key] = rest[idx + 1].strip()

    mol = MoleculeRecord(name=name, elements=elements, positions=positions, bonds=bonds, properties=props)
    if not mol.heavy_atoms():
        raise SDFParseError("molecule has no heavy atoms")
    return mol


def parse_sdf(data: bytes | str) -> MoleculeRecord:
    """Parse the first record of an SDF / MOL V2000 text."""
    records = list(iter_sdf(data))
    if not records:
        raise SDFParseError("no molfile record found")
    return records[0]


def iter_sdf(data: bytes | str) -> Iterator[MoleculeRecord]:
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    block: list[str] = []
    for line in data.splitlines():
        if line.startswith("$$$$"):
            if any(s.strip() for s in block):
                yield _parse_block(block)
            block = []
        else:
            block.append(line)
    if any(s.strip() for s in block):
        yield _parse_block(block)


def iter_sdf_blocks(data: bytes | str) -> Iterator[str]:
    """Raw record texts, for per-record error reporting."""
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    block: list[str] = []
    for line in data.splitlines():
        if line.startswith("$$$$"):
            if any(s.strip() for s in block):
                yield "\n".join(block)
            block = []
        else:
            block.append(line)
    if any(s.strip() for s in block):
        yield "\n".join(block)


def read_sdf(path: str | os.PathLike) -> list[MoleculeRecord]:
    return list(iter_sdf(Path(path).read_bytes()))


# --- radii --------------------------------------------------------------------


def load_radii_table(path: str | os.PathLike) -> dict[str, float]:
    """Plain text, one "SYMBOL radius" pair per line; '#' starts a comment."""
    table = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'SYMBOL value', got {raw!r}")
        value = float(parts[1])
        if value <= 0:
            raise ValueError(f"{path}:{lineno}: radius must be positive")
        table[parts[0]] = value
    return table


def default_radii(path: str | os.PathLike | None = None) -> dict[str, float]:
    """Bondi radii, overridden by `path` or else by $KQ_RADII_TABLE."""
    table = dict(BONDI_RADII)
    path = path or os.environ.get(RADII_ENV_VAR)
    if path:
        table.update(load_radii_table(path))
    return table


# --- rings --------------------------------------------------------------------


def _heavy_graph(mol: MoleculeRecord) -> dict[int, list[int]]:
    heavy = set(mol.heavy_atoms())
    adj: dict[int, set[int]] = {i: set() for i in heavy}
    for a, b, _ in mol.bonds:
        if a in heavy and b in heavy:
            adj[a].add(b)
            adj[b].add(a)
    return {i: sorted(n) for i, n in adj.items()}


def _bfs_paths(adj: dict[int, list[int]], root: int) -> dict[int, list[int]]:
    """Shortest path from root to every reachable vertex, lowest-index tie-break."""
    paths = {root: [root]}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in paths:
                paths[v] = paths[u] + [v]
                queue.append(v)
    return paths


def _n_components(adj: dict[int, list[int]]) -> int:
    seen: set[int] = set()
    count = 0
    for v in adj:
        if v not in seen:
            count += 1
            seen.update(_bfs_paths(adj, v))
    return count


def detect_rings(mol: MoleculeRecord) -> list[list[int]]:
    """Smallest set of smallest rings of the heavy-atom graph.

    Horton candidate cycles (shortest paths x->u, x->v closed by edge uv) are
    sorted by length then by sorted atom indices and accepted greedily when
    independent over GF(2). Each ring is returned as a closed walk order.
    """
    adj = _heavy_graph(mol)
    edges = sorted({(min(a, b), max(a, b)) for a in adj for b in adj[a]})
    n_cycles = len(edges) - len(adj) + _n_components(adj)
    if n_cycles == 0:
        return []
    edge_index = {e: k for k, e in enumerate(edges)}

    paths = {x: _bfs_paths(adj, x) for x in sorted(adj)}
    candidates = {}
    for x in sorted(adj):
        px = paths[x]
        for u, v in edges:
            if u not in px or v not in px:
                continue
            pu, pv = px[u], px[v]
            if set(pu) & set(pv) != {x}:
                continue
            cycle = pu + pv[::-1][:-1]
            if len(cycle) < 3:
                continue
            key = tuple(sorted(cycle))
            if key not in candidates or cycle < candidates[key]:
                candidates[key] = cycle
    ordered = sorted(candidates.items(), key=lambda kv: (len(kv[0]), kv[0]))

    basis: list[tuple[int, int]] = []  # (pivot, bitmask) rows in echelon form
    rings = []
    for _, cycle in ordered:
        mask = 0
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            mask |= 1 << edge_index[(min(a, b), max(a, b))]
        for pivot, row in basis:
            if mask >> pivot & 1:
                mask ^= row
        if mask:
            basis.append((mask.bit_length() - 1, mask))
            basis.sort(reverse=True)
            rings.append(cycle)
            if len(rings) == n_cycles:
                break
    return rings


# --- spheres -------------------------------------------------------------------


def build_sphere_set(
    mol: MoleculeRecord,
    radii_table: dict[str, float] | None = None,
    ring_radius: float = RING_RADIUS,
) -> SphereSet:
    radii_table = BONDI_RADII if radii_table is None else radii_table
    rings = detect_rings(mol)
    for ring in rings:
        if len(ring) > MAX_RING_SIZE:
            raise MacrocycleError(
                f"macrocycle: {mol.name or 'molecule'} has a {len(ring)}-membered ring"
            )
    in_ring = {a for ring in rings for a in ring}

    centres, radii, prov = [], [], []
    for i in mol.heavy_atoms():
        if i in in_ring:
            continue
        element = mol.elements[i]
        if element not in radii_table:
            raise MoleculeError(f"no van der Waals radius for element {element!r}")
        centres.append(mol.positions[i])
        radii.append(radii_table[element])
        prov.append(f"atom:{i}")
    for ring in rings:
        centres.append(mol.positions[ring].mean(axis=0))
        radii.append(ring_radius)
        prov.append("ring:" + ",".join(str(a) for a in sorted(ring)))
    return SphereSet(np.array(centres), np.array(radii), prov, mol.name)
