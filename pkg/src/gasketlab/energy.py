"""Per-cell energy measures, rank statistics, and the contraction lemmas.

The cell matrix of a tuple of harmonic directions (b_1..b_k) on the cell of a
word w is B_w[i][j] = (2/r_w) Q(A_w b_i, A_w b_j); its trace carries the
cell's share of the combined energy measure, and its eigenvalue ratios drive
the empirical index estimate.

Exact rational arithmetic is used for masses, traces and every decision that
the tests assert exactly; eigenvalues of the small symmetric matrices are
always floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    BudgetExceededError,
    DegenerateBasisError,
    InvalidParameterError,
    NotFoundError,
)
from .exactla import det, is_psd, mat_mul, mat_t, mat_vec, quad
from .gasket import DEFAULT_WORD_BUDGET, GasketSpec, Word
from .harmonic import (
    base_form,
    dual_vector,
    extension_matrices,
    ones_vector,
    principal_vector,
    secondary_vectors,
    theta,
)
from .subdivision import cell_count


# --- harmonic bases -----------------------------------------------------------


@dataclass
class EnergyBasis:
    """Harmonic directions used for energy-measure matrices.

    raw holds exact rational, Q-orthogonal vectors; norms their Q-norms.
    The normalized float vectors raw_i / sqrt(2 norms_i) make the combined
    energy mass exactly 1 at depth 0.
    """

    d: int
    raw: list = field(repr=False)
    norms: list = field(repr=False)
    label: str = "default"

    @property
    def size(self) -> int:
        return len(self.raw)

    def float_columns(self) -> np.ndarray:
        """(d+1, size) array with columns raw_i / sqrt(2 n_i)."""
        cols = []
        for g, n in zip(self.raw, self.norms):
            cols.append(np.array([float(x) for x in g]) / math.sqrt(2.0 * float(n)))
        return np.stack(cols, axis=1)

    def exact_columns(self) -> list:
        """(d+1) x size rational matrix with the raw vectors as columns."""
        return [[g[k] for g in self.raw] for k in range(self.d + 1)]


def default_basis(d: int) -> EnergyBasis:
    """Q-orthogonalized projections of the first d coordinate directions onto
    the complement of constants, scaled so the total mass at depth 0 is 1."""
    Q = base_form(d)
    vecs = []
    for k in range(d):
        g = [Fraction(-1, d + 1)] * (d + 1)
        g[k] += 1
        for prev in vecs:
            coef = Q(g, prev) / Q(prev, prev)
            g = [a - coef * b for a, b in zip(g, prev)]
        vecs.append(g)
    norms = [Q(g, g) for g in vecs]
    return EnergyBasis(d=d, raw=vecs, norms=norms, label="q-orthonormal standard directions")


def basis_from_vectors(d: int, vectors) -> EnergyBasis:
    """Wrap caller-provided boundary vectors; they must be independent modulo
    constants."""
    vecs = [[Fraction(x) for x in v] for v in vectors]
    if not vecs or any(len(v) != d + 1 for v in vecs):
        raise DegenerateBasisError(f"need vectors of length {d + 1}")
    Q = base_form(d)
    gram = [[Q(a, b) for b in vecs] for a in vecs]
    if det(gram) == 0:
        raise DegenerateBasisError("vectors are dependent modulo constants")
    return EnergyBasis(d=d, raw=vecs, norms=[Q(g, g) for g in vecs], label="user")


# --- cell energy matrices -----------------------------------------------------


@dataclass
class CellEnergyMatrix:
    """Energy-measure data of one cell for a fixed set of directions."""

    word: Word
    B: list = field(repr=False)
    nu_mass: Fraction | float = Fraction(0)
    eigenvalues: list = field(default_factory=list)
    mode: str = "exact"

    @property
    def ratio21(self) -> float:
        lam = self.eigenvalues
        if len(lam) < 2 or lam[0] <= 0:
            return 0.0
        return lam[1] / lam[0]


def _exact_cell_record(word, r_w, U, Q, basis: EnergyBasis, normalized: bool) -> CellEnergyMatrix:
    """Build a record from the exact transported columns U = A_w G."""
    k = basis.size
    Ut = mat_t(U)
    C = [[2 * quad(Q.M, Ut[i], Ut[j]) / r_w for j in range(k)] for i in range(k)]
    if normalized:
        # similarity-scale to the unit-mass basis; entries become floats
        scale = [1.0 / math.sqrt(2.0 * float(n)) for n in basis.norms]
        Bf = [[float(C[i][j]) * scale[i] * scale[j] for j in range(k)] for i in range(k)]
        mass = sum(C[i][i] / (2 * basis.norms[i]) for i in range(k)) / k
        eig = sorted(np.linalg.eigvalsh(np.array(Bf)).tolist(), reverse=True)
        return CellEnergyMatrix(word=word, B=Bf, nu_mass=mass, eigenvalues=eig, mode="exact")
    mass = sum(C[i][i] for i in range(k)) / k
    eig = sorted(np.linalg.eigvalsh(np.array([[float(x) for x in row] for row in C])).tolist(), reverse=True)
    return CellEnergyMatrix(word=word, B=C, nu_mass=mass, eigenvalues=eig, mode="exact")


def cell_energy_matrix(spec: GasketSpec, word: Word, basis) -> CellEnergyMatrix:
    """Exact energy-measure matrix of one cell.

    basis may be a list of boundary vectors (B is then exact rational in that
    basis) or an EnergyBasis / None for the normalized default (B is float,
    the mass stays exact).
    """
    spec.validate_word(word)
    if basis is None:
        basis = default_basis(spec.d)
        normalized = True
    elif isinstance(basis, EnergyBasis):
        normalized = basis.label != "user"
    else:
        basis = basis_from_vectors(spec.d, basis)
        normalized = False
    Q = base_form(spec.d)
    G = basis.exact_columns()
    r_w = Fraction(1)
    U = G
    for i, l in word:
        data = extension_matrices(spec.d, l)
        U = mat_mul(data.A[i - 1], U)
        r_w *= data.r
    return _exact_cell_record(word, r_w, U, Q, basis, normalized)


def kusuoka_distribution(
    spec: GasketSpec,
    m: int,
    basis=None,
    budget: int = DEFAULT_WORD_BUDGET,
) -> list:
    """One exact record per depth-m word; the masses sum to the depth-0 mass."""
    if basis is None:
        basis = default_basis(spec.d)
        normalized = True
    elif isinstance(basis, EnergyBasis):
        normalized = basis.label != "user"
    else:
        basis = basis_from_vectors(spec.d, basis)
        normalized = False
    Q = base_form(spec.d)
    out = []
    count = 0

    def rec(word, depth, U, r_w):
        nonlocal count
        if depth == m:
            count += 1
            if count > budget:
                raise BudgetExceededError(f"more than {budget} cells at depth {m}")
            out.append(_exact_cell_record(word, r_w, U, Q, basis, normalized))
            return
        l = spec.label_of(word)
        data = extension_matrices(spec.d, l)
        for i in range(1, cell_count(spec.d, l) + 1):
            rec(word + ((i, l),), depth + 1, mat_mul(data.A[i - 1], U), r_w * data.r)

    rec((), 0, basis.exact_columns(), Fraction(1))
    return out


# --- float scan over depths ---------------------------------------------------


def _float_letter_stacks(spec: GasketSpec) -> dict:
    stacks = {}
    for l in spec.levels:
        data = extension_matrices(spec.d, l)
        stacks[l] = (
            np.array([[[float(x) for x in row] for row in A] for A in data.A]),
            float(data.r),
        )
    return stacks


def _depth_scan(spec: GasketSpec, m: int, basis: EnergyBasis, budget: int):
    """Yield (depth, B_stack, mass_weights) for depths 1..m in float mode.

    B_stack is (ncells, k, k); the masses are normalized to sum to 1 at each
    depth.  Expansion batches the cells by their label, which keeps the order
    deterministic (grouped by level, then parent order, then cell index).
    """
    d = spec.d
    k = basis.size
    QM = np.array([[float(d) if i == j else -1.0 for j in range(d + 1)] for i in range(d + 1)])
    stacks = _float_letter_stacks(spec)
    chains = basis.float_columns()[None, :, :]
    inv_r = np.array([1.0])
    words: list = [()]
    for depth in range(1, m + 1):
        labels = [spec.label_of(w) for w in words]
        chunk_chains, chunk_inv_r, new_words = [], [], []
        for l in spec.levels:
            idx = [t for t, lab in enumerate(labels) if lab == l]
            if not idx:
                continue
            A_stack, rl = stacks[l]
            n_children = A_stack.shape[0]
            prod = np.einsum("cij,njk->ncik", A_stack, chains[idx])
            chunk_chains.append(prod.reshape(-1, d + 1, k))
            chunk_inv_r.append(np.repeat(inv_r[idx] / rl, n_children))
            for t in idx:
                w = words[t]
                new_words.extend(w + ((i, l),) for i in range(1, n_children + 1))
        chains = np.concatenate(chunk_chains, axis=0)
        inv_r = np.concatenate(chunk_inv_r)
        words = new_words
        if len(words) > budget:
            raise BudgetExceededError(f"more than {budget} cells at depth {depth}")
        B = 2.0 * inv_r[:, None, None] * np.einsum("nij,ik,nkl->njl", chains, QM, chains)
        masses = np.trace(B, axis1=1, axis2=2) / k
        yield depth, B, masses / masses.sum()


# --- rank reports ---------------------------------------------------------------


@dataclass
class RankReport:
    """Empirical index estimate and the decay diagnostics behind it."""

    depth: int
    eps: float
    delta: float
    estimated_index: int
    histogram: dict
    mean_ratio_trend: list
    max_ratio_trend: list
    rank2_fraction_trend: list
    sensitivity: dict
    cells_at_depth: int
    basis_label: str
    mode: str = "float"

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "eps": self.eps,
            "delta": self.delta,
            "estimated_index": self.estimated_index,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "mean_ratio_trend": self.mean_ratio_trend,
            "max_ratio_trend": self.max_ratio_trend,
            "rank2_fraction_trend": self.rank2_fraction_trend,
            "sensitivity": self.sensitivity,
            "cells_at_depth": self.cells_at_depth,
            "basis": self.basis_label,
            "arithmetic_mode": self.mode,
        }


def _index_from_fractions(rank_mass: dict, delta: float) -> int:
    """Largest rank attained by all but a delta sliver of the energy mass.

    rank_mass maps each rank_eps value to its mass fraction.
    """
    max_rank = max(rank_mass) if rank_mass else 0
    cum = 0.0  # mass fraction with rank >= k, accumulated downward
    for k in range(max_rank, 0, -1):
        cum += rank_mass.get(k, 0.0)
        if cum >= 1.0 - delta:
            return k
    return 0


def index_estimate(
    spec: GasketSpec,
    m: int,
    eps: float = 1e-8,
    delta: float = 1e-3,
    basis=None,
    budget: int = DEFAULT_WORD_BUDGET,
) -> RankReport:
    """Scan depths 1..m and estimate the index from eigenvalue-ratio ranks.

    rank_eps of a cell counts the eigenvalues above eps times the top one.
    The estimate is the largest k such that cells of total energy fraction at
    least 1 - delta have rank_eps >= k; the delta sliver absorbs the slowly
    contracting exceptional cells that any finite depth still carries.
    """
    if not 0 < eps < 1:
        raise InvalidParameterError(f"eps must be in (0,1), got {eps}")
    if not 0 < delta < 1:
        raise InvalidParameterError(f"delta must be in (0,1), got {delta}")
    if m < 0:
        raise InvalidParameterError(f"depth must be >= 0, got {m}")
    if basis is None:
        basis = default_basis(spec.d)
    elif not isinstance(basis, EnergyBasis):
        basis = basis_from_vectors(spec.d, basis)

    mean_trend, max_trend, rank2_trend = [], [], []
    d = spec.d
    QM = np.array([[float(d) if i == j else -1.0 for j in range(d + 1)] for i in range(d + 1)])
    G0 = basis.float_columns()
    B0 = 2.0 * (G0.T @ QM @ G0)[None, :, :]
    final = (np.sort(np.linalg.eigvalsh(B0), axis=1), None, np.array([1.0]))
    for depth, B, w in _depth_scan(spec, m, basis, budget):
        ev = np.linalg.eigvalsh(B)  # ascending
        lam1 = ev[:, -1]
        if basis.size >= 2:
            ratio = np.where(lam1 > 0, ev[:, -2] / np.where(lam1 > 0, lam1, 1.0), 0.0)
        else:
            ratio = np.zeros(len(B))
        mean_trend.append(float((w * ratio).sum()))
        max_trend.append(float(ratio.max()) if len(ratio) else 0.0)
        rank2_trend.append(float(w[ratio > eps].sum()))
        if depth == m:
            final = (ev, lam1, w)

    ev, lam1, w = final
    if lam1 is None:
        lam1 = ev[:, -1]
    ncells = len(lam1)

    def histogram_for(threshold: float) -> dict:
        counts = (ev > threshold * lam1[:, None]).sum(axis=1)
        counts = np.where(lam1 > 0, counts, 0)
        hist = {}
        for k in range(0, basis.size + 1):
            mass = float(w[counts == k].sum())
            if mass > 0:
                hist[int(k)] = mass
        return hist

    hist = histogram_for(eps)
    est = _index_from_fractions(hist, delta)
    sens = {
        "eps_x10": _index_from_fractions(histogram_for(eps * 10), delta),
        "eps_div10": _index_from_fractions(histogram_for(eps / 10), delta),
    }
    return RankReport(
        depth=m,
        eps=eps,
        delta=delta,
        estimated_index=est,
        histogram=hist,
        mean_ratio_trend=mean_trend,
        max_ratio_trend=max_trend,
        rank2_fraction_trend=rank2_trend,
        sensitivity=sens,
        cells_at_depth=ncells,
        basis_label=basis.label,
        mode="float",
    )


# --- corner decay and contraction ------------------------------------------------


def _quotient_frame(d: int, corner: int):
    """Basis of the complement of constants adapted to one corner: the
    principal direction first, then the secondary directions."""
    return [principal_vector(d, corner)] + secondary_vectors(d, corner)


def _corner_chain_ok(d: int, corner: int, labels, c: Fraction) -> bool:
    """Exact test: sup_u Q(A u, A u) / (r_chain Q(u, u)) <= c over nonconstant
    u, for the corner chain with the given label sequence.

    On the quotient modulo constants the chain acts diagonally in the adapted
    frame, so the test reduces to PSD-ness of c * r_chain * G - D G D.
    """
    Q = base_form(d)
    frame = _quotient_frame(d, corner)
    G = [[Q(a, b) for b in frame] for a in frame]
    r_chain = Fraction(1)
    s_chain = Fraction(1)
    for l in labels:
        data = extension_matrices(d, l)
        r_chain *= data.r
        s_chain *= data.s
    diag = [r_chain] + [s_chain] * (d - 1)
    DGD = [[diag[i] * G[i][j] * diag[j] for j in range(d)] for i in range(d)]
    M = [[c * r_chain * G[i][j] - DGD[i][j] for j in range(d)] for i in range(d)]
    return is_psd(M)


def _corner_chain_sup(d: int, corner: int, labels) -> float:
    """Float value of the same sup, for reporting."""
    Q = base_form(d)
    frame = _quotient_frame(d, corner)
    G = np.array([[float(Q(a, b)) for b in frame] for a in frame])
    r_chain, s_chain = 1.0, 1.0
    for l in labels:
        data = extension_matrices(d, l)
        r_chain *= float(data.r)
        s_chain *= float(data.s)
    D = np.diag([r_chain] + [s_chain] * (d - 1))
    from scipy.linalg import eigh

    vals = eigh(D @ G @ D, r_chain * G, eigvals_only=True)
    return float(vals[-1])


def corner_decay_N(spec_or_dims, c, max_N: int = 64) -> int:
    """Smallest N such that every corner chain of length N contracts the
    energy mass of harmonic functions by the factor c.

    Only the multiset of labels matters (the chain acts diagonally and the
    per-level factors commute), but every corner is checked.  The decision at
    each N is exact; floats appear only in the failure diagnostics.
    """
    if isinstance(spec_or_dims, GasketSpec):
        d, levels = spec_or_dims.d, spec_or_dims.levels
    else:
        d, levels = spec_or_dims
        levels = tuple(sorted(set(levels)))
    c = Fraction(c)
    if not 0 < c < 1:
        raise InvalidParameterError(f"contraction target must be in (0,1), got {c}")
    from itertools import combinations_with_replacement

    worst_sup = None
    for N in range(1, max_N + 1):
        ok = True
        worst_sup = 0.0
        for corner in range(1, d + 2):
            for labels in combinations_with_replacement(levels, N):
                if not _corner_chain_ok(d, corner, labels, c):
                    ok = False
                    worst_sup = max(worst_sup, _corner_chain_sup(d, corner, labels))
        if ok:
            return N
    raise NotFoundError(
        f"no N <= {max_N} achieves contraction {c}; worst sup at N={max_N} is {worst_sup:.6g}"
    )


@dataclass
class ContractionCurve:
    """Residuals of the rescaled corner-chain iteration toward its principal
    direction, with the geometric bound they must obey."""

    corner: int
    labels: list
    residuals: list
    residual_sq_exact: list
    bounds: list
    K: float
    K_sq_exact: Fraction
    theta: Fraction


def contraction_check(d: int, corner: int, tau, u) -> ContractionCurve:
    """Track || r_chain^{-1} P A_chain u - (u_i, u) P v_i || along the corner
    chain with label sequence tau; the residual is exactly the transported
    secondary component, so it is bounded by K theta^n with K the secondary
    component's norm."""
    if not 1 <= corner <= d + 1:
        raise InvalidParameterError(f"corner must be in 1..{d + 1}")
    tau = list(tau)
    u = [Fraction(x) for x in u]
    u_i = dual_vector(d, corner)
    v_i = principal_vector(d, corner)
    ones = ones_vector(d)
    x_i = sum(a * b for a, b in zip(u_i, u))

    def project(vec):
        mean = sum(vec) / len(vec)
        return [x - mean for x in vec]

    pv = project(v_i)
    target = [x_i * x for x in pv]

    # secondary component of u: subtract the span of {1, v_i} resolved exactly
    frame = [ones, v_i] + secondary_vectors(d, corner)
    from .exactla import solve_multi

    coords = solve_multi(mat_t(frame), [[x] for x in u])
    y_comp = [Fraction(0)] * (d + 1)
    for j in range(2, d + 1):
        coef = coords[j][0]
        for k in range(d + 1):
            y_comp[k] += coef * frame[j][k]
    K_sq = sum(x * x for x in project(y_comp))
    th = theta(d, sorted(set(tau)))

    residuals, exact_sq, bounds = [], [], []
    chain = None
    r_chain = Fraction(1)
    for n, l in enumerate(tau, start=1):
        data = extension_matrices(d, l)
        A = data.A[corner - 1]
        chain = A if chain is None else mat_mul(A, chain)
        r_chain *= data.r
        vec = mat_vec(chain, u)
        scaled = [x / r_chain for x in vec]
        resid_vec = [a - b for a, b in zip(project(scaled), target)]
        sq = sum(x * x for x in resid_vec)
        exact_sq.append(sq)
        residuals.append(math.sqrt(float(sq)))
        bounds.append(float(th) ** n * math.sqrt(float(K_sq)))
    return ContractionCurve(
        corner=corner,
        labels=tau,
        residuals=residuals,
        residual_sq_exact=exact_sq,
        bounds=bounds,
        K=math.sqrt(float(K_sq)),
        K_sq_exact=K_sq,
        theta=th,
    )
