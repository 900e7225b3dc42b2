"""Inhomogeneous gaskets: labeled word trees, admissible words with their
weights, conductance networks, harmonic evaluation and Dirichlet problems.

A letter is a pair (i, l): cell index i (1-based, matching the textual
encoding "i^l") inside the level-l subdivision.  A word is a tuple of
letters; the empty tuple is the root.  A word is admissible when each
letter's level equals the label the spec assigns to its prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    BudgetExceededError,
    DisconnectedNetworkError,
    EmptyBoundaryError,
    InadmissibleWordError,
    InvalidParameterError,
    InvalidVertexError,
    SolverError,
    SpecSemanticError,
)
from .exactla import (
    back_substitute,
    connected_components,
    edge_energy,
    eliminate,
    identity,
    mat_mul,
)
from .harmonic import extension_matrices
from .subdivision import cell_count, subdivide

DEFAULT_WORD_BUDGET = 10_000_000
DEFAULT_EXACT_LIMIT = 50_000

Letter = tuple
Word = tuple


def encode_word(word: Word) -> str:
    """Textual form "i^l" joined by "."; the root is the empty string."""
    return ".".join(f"{i}^{l}" for i, l in word)


def parse_word(text: str) -> Word:
    if text == "":
        return ()
    letters = []
    for part in text.split("."):
        try:
            i_str, l_str = part.split("^")
            letters.append((int(i_str), int(l_str)))
        except ValueError as exc:
            raise InadmissibleWordError(f"malformed letter {part!r} in word {text!r}") from exc
    return tuple(letters)


# --- seeded labeling hash ----------------------------------------------------

_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    """The splitmix64 finalizer; a fixed, platform-independent 64-bit mix."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def word_hash_unit(seed: int, text: str) -> float:
    """Deterministic hash of (seed, word encoding) mapped into [0, 1)."""
    h = _mix64(seed & _MASK64)
    for b in text.encode("utf-8"):
        h = _mix64(h ^ b)
    return h / 2.0**64


class GasketSpec:
    """Labeling rule on the word tree defining one inhomogeneous gasket.

    labeling is one of
      {"type": "homogeneous"}                      (allowed iff one level)
      {"type": "explicit", "entries": {...}, "default": l}
      {"type": "seeded", "seed": s, "weights": {l: w}}
    measure is "natural" (mu of a cell is the product of 1/N(l) along the
    word) or {"per_letter": {l: [w_1..w_N(l)]}} with each level's weights
    summing to 1.
    """

    def __init__(self, d: int, levels, labeling=None, measure="natural"):
        if d < 2:
            raise SpecSemanticError(f"dimension must be >= 2, got {d}")
        levels = tuple(sorted(set(int(l) for l in levels)))
        if not levels or any(l < 2 for l in levels):
            raise SpecSemanticError(f"levels must be a nonempty set of integers >= 2, got {levels}")
        self.d = d
        self.levels = levels
        if labeling is None:
            labeling = {"type": "homogeneous"}
        self.labeling = self._check_labeling(labeling)
        self.measure = self._check_measure(measure)

    def _check_labeling(self, labeling: dict) -> dict:
        kind = labeling.get("type")
        if kind == "homogeneous":
            if len(self.levels) != 1:
                raise SpecSemanticError("homogeneous labeling needs exactly one level")
            return {"type": "homogeneous"}
        if kind == "explicit":
            entries = dict(labeling.get("entries", {}))
            default = labeling.get("default")
            if default is None or default not in self.levels:
                raise SpecSemanticError(f"explicit labeling default {default} not in levels {self.levels}")
            for text, label in entries.items():
                parse_word(text)
                if label not in self.levels:
                    raise SpecSemanticError(f"label {label} for word {text!r} not in levels {self.levels}")
            return {"type": "explicit", "entries": entries, "default": default}
        if kind == "seeded":
            seed = int(labeling.get("seed", 0))
            weights = labeling.get("weights") or {l: 1.0 for l in self.levels}
            weights = {int(l): float(w) for l, w in weights.items()}
            if set(weights) != set(self.levels):
                raise SpecSemanticError(f"seeded weights keys {sorted(weights)} != levels {self.levels}")
            if any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
                raise SpecSemanticError("seeded weights must be nonnegative with positive sum")
            total = sum(weights[l] for l in self.levels)
            cum = []
            acc = 0.0
            for l in self.levels:
                acc += weights[l] / total
                cum.append((l, acc))
            return {"type": "seeded", "seed": seed, "weights": weights, "_cum": cum}
        raise SpecSemanticError(f"unknown labeling type {kind!r}")

    def _check_measure(self, measure):
        if measure == "natural":
            return "natural"
        if isinstance(measure, dict) and "per_letter" in measure:
            table = {}
            for l, ws in measure["per_letter"].items():
                l = int(l)
                if l not in self.levels:
                    raise SpecSemanticError(f"measure weights for level {l} not in levels {self.levels}")
                ws = [Fraction(w) for w in ws]
                if len(ws) != cell_count(self.d, l):
                    raise SpecSemanticError(f"measure weights for level {l} must have N(l) entries")
                if any(w <= 0 for w in ws) or sum(ws) != 1:
                    raise SpecSemanticError(f"measure weights for level {l} must be positive and sum to 1")
                table[l] = ws
            if set(table) != set(self.levels):
                raise SpecSemanticError("per-letter measure must cover every level")
            return {"per_letter": table}
        raise SpecSemanticError(f"unknown measure {measure!r}")

    # -- pure word functions --------------------------------------------------

    def label_of(self, word: Word) -> int:
        """The subdivision level used below `word`; a pure function of the word."""
        kind = self.labeling["type"]
        if kind == "homogeneous":
            return self.levels[0]
        if kind == "explicit":
            return self.labeling["entries"].get(encode_word(word), self.labeling["default"])
        u = word_hash_unit(self.labeling["seed"], encode_word(word))
        for l, acc in self.labeling["_cum"]:
            if u < acc:
                return l
        return self.labeling["_cum"][-1][0]

    def validate_word(self, word: Word) -> None:
        prefix = ()
        for i, l in word:
            expect = self.label_of(prefix)
            if l != expect:
                raise InadmissibleWordError(
                    f"letter {i}^{l} after prefix {encode_word(prefix)!r} must have level {expect}"
                )
            if not 1 <= i <= cell_count(self.d, l):
                raise InadmissibleWordError(f"cell index {i} out of range for level {l}")
            prefix = prefix + ((i, l),)

    def cell_data(self, l: int):
        return extension_matrices(self.d, l)

    def r_of_letter(self, letter: Letter) -> Fraction:
        return extension_matrices(self.d, letter[1]).r

    def mu_of_letter(self, letter: Letter) -> Fraction:
        i, l = letter
        if self.measure == "natural":
            return Fraction(1, cell_count(self.d, l))
        return self.measure["per_letter"][l][i - 1]

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"dimension": self.d, "levels": list(self.levels)}
        kind = self.labeling["type"]
        if kind == "explicit":
            out["labeling"] = {
                "type": "explicit",
                "entries": [{"word": w, "label": l} for w, l in sorted(self.labeling["entries"].items())],
                "default": self.labeling["default"],
            }
        elif kind == "seeded":
            out["labeling"] = {
                "type": "seeded",
                "seed": self.labeling["seed"],
                "weights": {str(l): w for l, w in sorted(self.labeling["weights"].items())},
            }
        if self.measure == "natural":
            out["measure"] = "natural"
        else:
            out["measure"] = {
                "per_letter": {str(l): [str(w) for w in ws] for l, ws in self.measure["per_letter"].items()}
            }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GasketSpec":
        if not isinstance(data, dict):
            raise SpecSemanticError("spec must be a JSON object")
        if "dimension" not in data or "levels" not in data:
            raise SpecSemanticError("spec needs 'dimension' and 'levels'")
        labeling = data.get("labeling")
        if labeling is not None:
            labeling = dict(labeling)
            if labeling.get("type") == "explicit":
                entries = {}
                for item in labeling.get("entries", []):
                    entries[item["word"]] = int(item["label"])
                labeling["entries"] = entries
        measure = data.get("measure", "natural")
        if isinstance(measure, dict) and "per_letter" in measure:
            measure = {"per_letter": {int(l): list(ws) for l, ws in measure["per_letter"].items()}}
        return cls(int(data["dimension"]), data["levels"], labeling, measure)

    def describe(self) -> str:
        kind = self.labeling["type"]
        extra = ""
        if kind == "seeded":
            extra = f" seed={self.labeling['seed']}"
        elif kind == "explicit":
            extra = f" entries={len(self.labeling['entries'])}"
        return f"d={self.d} T={list(self.levels)} labeling={kind}{extra}"


# --- word enumeration ---------------------------------------------------------


def iter_words(spec: GasketSpec, m: int, budget: int = DEFAULT_WORD_BUDGET, root: Word = ()):
    """Yield (word, r_w, mu_w) for the admissible depth-m continuations of
    `root`, in depth-lexicographic order.  r and mu are relative to the root.
    """
    if m < 0:
        raise InvalidParameterError(f"depth must be >= 0, got {m}")
    spec.validate_word(root)
    count = 0

    def rec(word, depth, r, mu):
        nonlocal count
        if depth == m:
            count += 1
            if count > budget:
                raise BudgetExceededError(f"more than {budget} words at depth {m}")
            yield word[len(root):], r, mu
            return
        l = spec.label_of(word)
        rl = spec.r_of_letter((1, l))
        for i in range(1, cell_count(spec.d, l) + 1):
            letter = (i, l)
            yield from rec(word + (letter,), depth + 1, r * rl, mu * spec.mu_of_letter(letter))

    yield from rec(root, 0, Fraction(1), Fraction(1))


def enumerate_words(spec: GasketSpec, m: int, budget: int = DEFAULT_WORD_BUDGET) -> list:
    """All of the depth-m admissible words with their weights, as a list."""
    return list(iter_words(spec, m, budget))


def measure_total(spec: GasketSpec, m: int, budget: int = DEFAULT_WORD_BUDGET) -> Fraction:
    """Exact sum of mu over the depth-m words (streaming; no list is built)."""
    by_den: dict = {}
    for _, _, mu in iter_words(spec, m, budget):
        by_den[mu.denominator] = by_den.get(mu.denominator, 0) + mu.numerator
    return sum((Fraction(n, d) for d, n in sorted(by_den.items())), Fraction(0))


def measure_totals(spec: GasketSpec, m: int, budget: int = DEFAULT_WORD_BUDGET) -> list:
    """Exact per-depth mass sums [depth 0 .. m] from a single tree walk."""
    sums = [{} for _ in range(m + 1)]
    nodes = 0

    def add(depth, mu):
        acc = sums[depth]
        acc[mu.denominator] = acc.get(mu.denominator, 0) + mu.numerator

    def rec(word, depth, mu):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceededError(f"more than {budget} tree nodes to depth {m}")
        add(depth, mu)
        if depth == m:
            return
        l = spec.label_of(word)
        for i in range(1, cell_count(spec.d, l) + 1):
            rec(word + ((i, l),), depth + 1, mu * spec.mu_of_letter((i, l)))

    rec((), 0, Fraction(1))
    return [sum((Fraction(n, d) for d, n in sorted(acc.items())), Fraction(0)) for acc in sums]


def chain_matrix(spec: GasketSpec, word: Word):
    """Ordered extension-matrix product for a word; the empty word gives the
    identity.  Appending a letter multiplies on the left."""
    spec.validate_word(word)
    out = identity(spec.d + 1)
    for i, l in word:
        out = mat_mul(extension_matrices(spec.d, l).A[i - 1], out)
    return out


def harmonic_values(spec: GasketSpec, m: int, u, budget: int = DEFAULT_WORD_BUDGET) -> dict:
    """Values of the harmonic function with boundary data u on every depth-m
    cell: cell w carries the vector A_w u."""
    u = [Fraction(x) if not isinstance(x, float) else x for x in u]
    if len(u) != spec.d + 1:
        raise InvalidParameterError(f"boundary vector must have {spec.d + 1} entries")
    out = {}
    count = 0

    def rec(word, depth, vec):
        nonlocal count
        if depth == m:
            count += 1
            if count > budget:
                raise BudgetExceededError(f"more than {budget} words at depth {m}")
            out[word] = vec
            return
        l = spec.label_of(word)
        mats = extension_matrices(spec.d, l).A
        for i in range(1, cell_count(spec.d, l) + 1):
            nxt = [sum(row[j] * vec[j] for j in range(len(vec))) for row in mats[i - 1]]
            rec(word + ((i, l),), depth + 1, nxt)

    rec((), 0, list(u))
    return out


# --- conductance networks -----------------------------------------------------


@dataclass
class ConductanceNetwork:
    """Finite weighted graph built from the depth-m cells below a root word.

    Coordinates are exact barycentric rationals; conductances are exact
    rationals normalized so the root cell has weight 1 (the root's own r
    factor is divided out and recorded in root_r).
    """

    d: int
    coords: list = field(repr=False)            # id -> coordinate tuple
    coord_index: dict = field(repr=False)       # coordinate tuple -> id
    edges: dict = field(repr=False)             # (i, j) with i < j -> conductance
    boundary: list = field(default_factory=list)
    cells: list = field(default_factory=list, repr=False)  # (relative word, vertex ids, 1/r_w)
    root: Word = ()
    root_r: Fraction = Fraction(1)
    depth: int = 0

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    def adjacency(self) -> dict:
        adj = {v: {} for v in range(self.n_vertices)}
        for (i, j), c in self.edges.items():
            adj[i][j] = adj[i].get(j, 0) + c
            adj[j][i] = adj[j].get(i, 0) + c
        return adj

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return True
        return len(connected_components(self.adjacency())) == 1


def _root_affine(spec: GasketSpec, root: Word):
    """Compose the root word's affine map as (scale, offset) in barycentric
    coordinates; psi(x) = scale * x + offset."""
    scale = Fraction(1)
    offset = [Fraction(0)] * (spec.d + 1)
    for i, l in root:
        sub = subdivide(spec.d, l)
        alpha = sub.cells[i - 1]
        offset = [offset[k] + scale * alpha[k] for k in range(spec.d + 1)]
        scale = scale / l
    return scale, offset


def level_network(
    spec: GasketSpec, m: int, root: Word = (), budget: int = DEFAULT_WORD_BUDGET
) -> ConductanceNetwork:
    """The depth-m cell network below `root`: vertices are the distinct
    images of the simplex corners, each cell contributes complete-graph edges
    with conductance 1/r_w (relative to the root)."""
    spec.validate_word(root)
    d = spec.d
    root_scale, root_offset = _root_affine(spec, root)
    root_r = Fraction(1)
    for letter in root:
        root_r *= spec.r_of_letter(letter)

    coords: list = []
    coord_index: dict = {}
    edges: dict = {}
    cells: list = []

    def vid_of(coord) -> int:
        v = coord_index.get(coord)
        if v is None:
            v = len(coords)
            coord_index[coord] = v
            coords.append(coord)
        return v

    count = 0

    def rec(word, depth, scale, offset, r):
        nonlocal count
        if depth == m:
            count += 1
            if count > budget:
                raise BudgetExceededError(f"more than {budget} cells at depth {m}")
            ids = []
            for k in range(d + 1):
                coord = tuple(offset[t] + (scale if t == k else 0) for t in range(d + 1))
                ids.append(vid_of(coord))
            w = 1 / r
            for a in range(d + 1):
                for b in range(a + 1, d + 1):
                    i, j = ids[a], ids[b]
                    key = (i, j) if i < j else (j, i)
                    edges[key] = edges.get(key, Fraction(0)) + w
            cells.append((word, tuple(ids), w))
            return
        l = spec.label_of(root + word)
        sub = subdivide(d, l)
        rl = spec.r_of_letter((1, l))
        for i in range(1, cell_count(d, l) + 1):
            alpha = sub.cells[i - 1]
            noff = [offset[k] + scale * alpha[k] for k in range(d + 1)]
            rec(word + ((i, l),), depth + 1, scale / l, noff, r * rl)

    rec((), 0, root_scale, root_offset, Fraction(1))
    boundary = []
    for k in range(d + 1):
        coord = tuple(root_offset[t] + (root_scale if t == k else 0) for t in range(d + 1))
        boundary.append(vid_of(coord))
    return ConductanceNetwork(
        d=d,
        coords=coords,
        coord_index=coord_index,
        edges=edges,
        boundary=boundary,
        cells=cells,
        root=root,
        root_r=root_r,
        depth=m,
    )


# --- Dirichlet problems -------------------------------------------------------


def dirichlet_solve(
    net: ConductanceNetwork,
    boundary: dict,
    mode: str = "auto",
    exact_limit: int = DEFAULT_EXACT_LIMIT,
    rtol: float = 1e-12,
):
    """Minimize the conductance-weighted energy subject to boundary values.

    Returns (potentials, energy, used_mode); potentials is a dict over all
    vertex ids.  In exact mode the solve is a rational star-mesh elimination;
    in float mode a Jacobi-preconditioned conjugate gradient with relative
    residual <= rtol.
    """
    if not boundary:
        raise EmptyBoundaryError("no boundary vertices given")
    n = net.n_vertices
    for v in boundary:
        if not 0 <= v < n:
            raise InvalidVertexError(f"boundary vertex {v} not in network")
    if not net.is_connected():
        raise DisconnectedNetworkError("network is not connected")

    exact_values = all(isinstance(x, (int, Fraction)) for x in boundary.values())
    if mode == "auto":
        mode = "exact" if exact_values and n <= exact_limit else "float"
    if mode not in ("exact", "float"):
        raise InvalidParameterError(f"unknown mode {mode!r}")

    free = [v for v in range(n) if v not in boundary]
    if not free:
        values = {v: boundary[v] for v in range(n)}
        adj = net.adjacency()
        energy = edge_energy(adj, values)
        return values, energy, "direct"

    if mode == "exact":
        if not exact_values:
            raise InvalidParameterError("exact mode requires rational boundary values")
        adj = net.adjacency()
        _, steps = eliminate(adj, set(boundary))
        values = back_substitute(steps, {v: Fraction(x) for v, x in boundary.items()})
        energy = edge_energy(net.adjacency(), values)
        return values, energy, "exact"

    return _dirichlet_float(net, boundary, rtol)


def _dirichlet_float(net: ConductanceNetwork, boundary: dict, rtol: float):
    from scipy.sparse import coo_matrix
    from scipy.sparse.linalg import cg

    n = net.n_vertices
    free = [v for v in range(n) if v not in boundary]
    pos = {v: k for k, v in enumerate(free)}
    x = np.zeros(n)
    for v, val in boundary.items():
        x[v] = float(val)

    rows, cols, data = [], [], []
    rhs = np.zeros(len(free))
    diag = np.zeros(len(free))
    for (i, j), c in net.edges.items():
        c = float(c)
        fi, fj = i in pos, j in pos
        if fi:
            diag[pos[i]] += c
        if fj:
            diag[pos[j]] += c
        if fi and fj:
            rows.append(pos[i]); cols.append(pos[j]); data.append(-c)
            rows.append(pos[j]); cols.append(pos[i]); data.append(-c)
        elif fi:
            rhs[pos[i]] += c * x[j]
        elif fj:
            rhs[pos[j]] += c * x[i]
    rows.extend(range(len(free)))
    cols.extend(range(len(free)))
    data.extend(diag)
    L = coo_matrix((data, (rows, cols)), shape=(len(free), len(free))).tocsr()

    from scipy.sparse import diags

    M = diags(1.0 / diag)
    sol, info = cg(L, rhs, rtol=rtol, atol=0.0, maxiter=20 * len(free) + 1000, M=M)
    if info != 0:
        raise SolverError(f"conjugate gradient did not converge (info={info})")
    resid = np.linalg.norm(L @ sol - rhs)
    scale = np.linalg.norm(rhs)
    if scale > 0 and resid / scale > 10 * rtol:
        raise SolverError(f"residual {resid / scale:.2e} above tolerance")
    for v, val in zip(free, sol):
        x[v] = val
    values = {v: float(x[v]) for v in range(n)}
    energy = 0.0
    for (i, j), c in net.edges.items():
        dxy = x[i] - x[j]
        energy += float(c) * dxy * dxy
    return values, energy, "float"
