"""N-particle states over the orbital span and their reduction to the system.

Each particle factor is represented in a low-rank frame: ``m_S`` orthonormal
system vectors and ``m_E`` orthonormal environment vectors spanning the split
parts of the orbitals, tensored with the internal alphabet. Inside one factor
the ``d_S = m_S * d_int`` system coordinates come first, followed by the
``d_E = m_E * d_int`` environment coordinates (spatial index major, internal
label minor).

Reduced states are block diagonal over sectors: a count ``k`` of particles in
the system for identical particles, or an assignment string in ``{S, E}^N``
for ordered products.
"""
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, PauliExclusionError, ResourceError

RANK_TOL = 1e-10
PAULI_TOL = 1e-12
PAULI_REL = 1e-13
N_MAX = 6
FACTOR_DIM_MAX = 12


class Statistics(str, Enum):
    BOSON = "boson"
    FERMION = "fermion"
    ORDERED = "ordered"


@dataclass(frozen=True, eq=False)
class EffectiveFrame:
    """Orthonormal system frame plus frame coordinates of every orbital.

    ``s_modes`` are Euclidean system coordinates (columns). The environment
    frame is kept implicit: ``e_combination`` expresses each environment
    frame vector as a combination of the orbitals' environment parts, and
    ``e_coords`` holds the orbitals' coordinates in that frame.
    """

    s_modes: np.ndarray
    s_coords: np.ndarray
    e_coords: np.ndarray
    e_combination: np.ndarray
    labels: tuple
    d_int: int

    @property
    def m_s(self):
        return self.s_modes.shape[1]

    @property
    def m_e(self):
        return self.e_coords.shape[0]

    @property
    def d_s(self):
        return self.m_s * self.d_int

    @property
    def d_e(self):
        return self.m_e * self.d_int

    @property
    def factor_dim(self):
        return self.d_s + self.d_e

    def factor_vectors(self):
        """Per-factor coordinates of each orbital, one column each."""
        n = len(self.labels)
        phi = np.zeros((self.factor_dim, n), dtype=np.complex128)
        for i, lab in enumerate(self.labels):
            phi[lab:self.d_s:self.d_int, i] = self.s_coords[:, i]
            phi[self.d_s + lab::self.d_int, i] = self.e_coords[:, i]
        return phi

    def e_modes(self, e_parts):
        """Materialise environment frame vectors from explicit parts (columns)."""
        return np.asarray(e_parts) @ self.e_combination


def orthonormalize(vectors, tol=RANK_TOL):
    """Modified Gram-Schmidt on columns, dropping residuals below ``tol``.

    Returns the orthonormal columns ``Q`` and coordinates ``Q^H vectors``.
    """
    vectors = np.asarray(vectors, dtype=np.complex128)
    dim, n = vectors.shape
    basis = []
    for i in range(n):
        v = vectors[:, i].copy()
        for _ in range(2):
            for q in basis:
                v -= np.vdot(q, v) * q
        nrm = np.linalg.norm(v)
        if nrm >= tol:
            basis.append(v / nrm)
    Q = np.stack(basis, axis=1) if basis else np.zeros((dim, 0), dtype=np.complex128)
    return Q, Q.conj().T @ vectors


GRAM_NOISE = 128 * np.finfo(np.float64).eps


def gram_orthonormalize(gram, tol=RANK_TOL, floor=0.0):
    """Gram-Schmidt carried out on a Gram matrix alone.

    Returns ``(T, C)``: frame vector k is ``sum_i T[i, k] x_i`` and
    ``C[k, i]`` is the coordinate of ``x_i`` along it. Residual squared norms
    below ``tol**2``, below ``floor`` (rounding noise of Gram matrices
    obtained by subtraction) or below ``GRAM_NOISE * |x_i|**2`` count as
    linearly dependent. Working from the Gram matrix alone, directions
    shorter than about ``sqrt(eps) * |x_i|`` cannot be resolved.
    """
    G = np.asarray(gram, dtype=np.complex128)
    n = G.shape[0]
    T_cols = []
    C_rows = []
    for i in range(n):
        g_ii = float(np.real(G[i, i]))
        r2 = g_ii
        if C_rows:
            C = np.array(C_rows)
            r2 -= float(np.sum(np.abs(C[:, i]) ** 2))
        # the subtraction above loses ~eps * g_ii, so tiny residuals are noise
        if r2 <= max(tol * tol, floor, GRAM_NOISE * g_ii):
            continue
        t = np.zeros(n, dtype=np.complex128)
        t[i] = 1.0
        for tk, ck in zip(T_cols, C_rows):
            t -= ck[i] * tk
        t /= math.sqrt(r2)
        # coordinates of every x_j along the new vector: sum_l conj(t_l) G[l, j]
        row = t.conj() @ G
        T_cols.append(t)
        C_rows.append(row)
    if not T_cols:
        return np.zeros((n, 0), dtype=np.complex128), np.zeros((0, n), dtype=np.complex128)
    return np.stack(T_cols, axis=1), np.array(C_rows)


def _labels(labels, d_int):
    labels = tuple(int(x) for x in labels)
    if any(not 0 <= lab < d_int for lab in labels):
        raise DomainError(f"internal labels {labels} outside alphabet of size {d_int}")
    return labels


def frame_from_parts(s_vectors, e_gram, labels, d_int, e_floor=0.0):
    """Frame from explicit system parts (columns) and the environment Gram."""
    labels = _labels(labels, d_int)
    Q, s_coords = orthonormalize(np.asarray(s_vectors, dtype=np.complex128))
    T, e_coords = gram_orthonormalize(e_gram, floor=e_floor)
    return EffectiveFrame(s_modes=Q, s_coords=s_coords, e_coords=e_coords,
                          e_combination=T, labels=labels, d_int=int(d_int))


def frame_from_vectors(s_vectors, e_vectors, labels, d_int):
    """Frame for synthetic orbitals given as explicit split vectors (Euclidean
    inner product on both sides)."""
    labels = _labels(labels, d_int)
    Q, s_coords = orthonormalize(np.asarray(s_vectors, dtype=np.complex128))
    E = np.asarray(e_vectors, dtype=np.complex128)
    P, e_coords = orthonormalize(E)
    T = np.linalg.lstsq(E, P, rcond=None)[0] if P.shape[1] else np.zeros((len(labels), 0))
    return EffectiveFrame(s_modes=Q, s_coords=s_coords, e_coords=e_coords,
                          e_combination=T, labels=labels, d_int=int(d_int))


# environment Gram obtained as total minus system is exact only to rounding
ENV_GRAM_FLOOR = 1e-13


def build_frame(orbitals, d_int=None):
    """Frame for evolved orbitals sharing one spectral basis."""
    from .propagation import system_coordinates

    labels = [o.internal for o in orbitals]
    if d_int is None:
        d_int = max(labels, default=0) + 1
    if not orbitals:
        return EffectiveFrame(s_modes=np.zeros((0, 0), dtype=np.complex128),
                              s_coords=np.zeros((0, 0), dtype=np.complex128),
                              e_coords=np.zeros((0, 0), dtype=np.complex128),
                              e_combination=np.zeros((0, 0), dtype=np.complex128),
                              labels=(), d_int=int(d_int))
    basis = orbitals[0].basis
    if any(o.basis is not basis for o in orbitals):
        raise DomainError("orbitals live on different spectral bases")
    S = system_coordinates(orbitals)
    A = np.stack([o.coefficients for o in orbitals], axis=1)
    g_total = A.conj().T @ A
    g_env = g_total - S.conj().T @ S
    return frame_from_parts(S, g_env, labels, d_int, e_floor=ENV_GRAM_FLOOR)


def permanent(A):
    """Permanent by Ryser's formula with Gray-code updates."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    row_sums = np.zeros(n, dtype=np.complex128)
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        diff = gray ^ prev
        j = diff.bit_length() - 1
        if gray & diff:
            row_sums += A[:, j]
        else:
            row_sums -= A[:, j]
        prev = gray
        sign = -1.0 if bin(gray).count("1") % 2 else 1.0
        total += sign * np.prod(row_sums)
    return total * (-1) ** n


def _perm_sign(p):
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _outer(vectors):
    out = np.array(1.0 + 0.0j)
    for v in vectors:
        out = np.multiply.outer(out, v)
    return out


@dataclass(frozen=True, eq=False)
class ManyBodyState:
    """Normalised first-quantised coefficient tensor of shape ``(D,) * N``."""

    statistics: Statistics
    frame: EffectiveFrame
    tensor: np.ndarray
    norm_constant: float
    orbitals: tuple = field(default=(), repr=False)

    @property
    def n_particles(self):
        return self.tensor.ndim


def check_resources(n, factor_dim):
    if n > N_MAX:
        raise ResourceError(f"N = {n} particles exceeds the guard N_max = {N_MAX}")
    if factor_dim > FACTOR_DIM_MAX:
        raise ResourceError(
            f"per-particle effective dimension {factor_dim} exceeds {FACTOR_DIM_MAX}"
        )


def assemble_state(frame, statistics, orbitals=()):
    """(Anti)symmetrised or ordered product of the frame-embedded orbitals."""
    statistics = Statistics(statistics)
    phi = frame.factor_vectors()
    n = phi.shape[1]
    check_resources(n, frame.factor_dim)
    if n == 0:
        return ManyBodyState(statistics, frame, np.array(1.0 + 0.0j), 1.0, tuple(orbitals))
    gram = phi.conj().T @ phi
    cols = [phi[:, i] for i in range(n)]
    if statistics is Statistics.ORDERED:
        norm_c = float(np.prod(np.real(np.diag(gram))))
        tensor = _outer(cols) / math.sqrt(norm_c)
        return ManyBodyState(statistics, frame, tensor, norm_c, tuple(orbitals))
    if statistics is Statistics.FERMION:
        norm_c = float(np.real(np.linalg.det(gram)))
        # det alone cannot see exact dependence through rounding (~eps), so
        # the smallest Gram eigenvalue is tested relative to the largest too
        lam = np.linalg.eigvalsh(gram)
        if not norm_c > PAULI_TOL ** 2 or lam[0] <= PAULI_REL * lam[-1]:
            raise PauliExclusionError(
                "fermionic orbitals are linearly dependent (Gram determinant "
                f"{norm_c:.3e}, smallest eigenvalue {lam[0]:.3e}); no antisymmetric state exists"
            )
    else:
        norm_c = float(np.real(permanent(gram)))
    product = _outer(cols)
    tensor = np.zeros_like(product)
    fermion = statistics is Statistics.FERMION
    for p in itertools.permutations(range(n)):
        term = np.transpose(product, p)
        if fermion and _perm_sign(p) < 0:
            tensor -= term
        else:
            tensor += term
    tensor /= math.sqrt(math.factorial(n) * norm_c)
    return ManyBodyState(statistics, frame, tensor, norm_c, tuple(orbitals))


@dataclass(frozen=True, eq=False)
class ReducedState:
    """Block-diagonal system state.

    ``blocks`` maps a sector label to ``(weight, block)`` where ``block`` has
    unit trace (a zero matrix when the weight vanishes) and acts on the
    k-fold product of ``s_modes (x) internal``. Labels are ints (particle
    counts) or strings over ``{'S', 'E'}``.
    """

    blocks: dict
    s_modes: np.ndarray
    d_int: int
    n_particles: int

    @property
    def by_count(self):
        return all(isinstance(k, int) for k in self.blocks)

    @property
    def d_s(self):
        return self.s_modes.shape[1] * self.d_int

    def weighted(self, label):
        w, blk = self.blocks[label]
        return w * blk

    def total_weight(self):
        return sum(w for w, _ in self.blocks.values())


def sector_count(label):
    return label if isinstance(label, int) else label.count("S")


def _normalized(U):
    w = float(np.real(np.trace(U)))
    if w > 0.0:
        return w, U / w
    return 0.0, np.zeros_like(U)


def _sector_block(tensor, pattern, d_s):
    """``tr_E`` of the projection of ``tensor`` onto one assignment string."""
    n = tensor.ndim
    index = tuple(slice(0, d_s) if c == "S" else slice(d_s, None) for c in pattern)
    sub = tensor[index]
    s_axes = [i for i, c in enumerate(pattern) if c == "S"]
    e_axes = [i for i, c in enumerate(pattern) if c == "E"]
    sub = np.transpose(sub, s_axes + e_axes)
    k = len(s_axes)
    rows = d_s ** k
    A = sub.reshape(rows, -1) if n else sub.reshape(1, 1)
    return A @ A.conj().T


def reduce_system(state):
    """Partial trace over the environment, sector by sector."""
    frame = state.frame
    n = state.n_particles
    d_s = frame.d_s
    blocks = {}
    if n == 0:
        blocks[0] = (1.0, np.ones((1, 1), dtype=np.complex128))
    elif state.statistics is Statistics.ORDERED:
        for pattern in itertools.product("SE", repeat=n):
            pattern = "".join(pattern)
            blocks[pattern] = _normalized(_sector_block(state.tensor, pattern, d_s))
    else:
        # permutation-equivalent strings give identical blocks; keep S-first
        for k in range(n, -1, -1):
            U = math.comb(n, k) * _sector_block(state.tensor, "S" * k + "E" * (n - k), d_s)
            blocks[k] = _normalized(U)
    return ReducedState(blocks=blocks, s_modes=frame.s_modes, d_int=frame.d_int, n_particles=n)


def number_distribution(reduced):
    """``P_k`` for k = 0..N."""
    p = np.zeros(reduced.n_particles + 1)
    for label, (w, _) in reduced.blocks.items():
        p[sector_count(label)] += w
    return p


def symmetrize_factors(X, d, k):
    """Average of ``P X P^dagger`` over all permutations P of the k factors."""
    if k <= 1:
        return X.copy()
    T = X.reshape((d,) * (2 * k))
    acc = np.zeros_like(T)
    perms = list(itertools.permutations(range(k)))
    for p in perms:
        acc += np.transpose(T, list(p) + [k + i for i in p])
    return (acc / len(perms)).reshape(X.shape)


def merge_orderings(reduced):
    """Count-labelled state of the uniform mixture over factor orderings.

    For an ordered product this is the state of distinguishable particles in
    the given orbitals, comparable with bosonic or fermionic states.
    """
    if reduced.by_count:
        return reduced
    d = reduced.d_s
    acc = {}
    for label, (w, blk) in reduced.blocks.items():
        k = sector_count(label)
        acc[k] = acc.get(k, 0) + w * blk
    blocks = {}
    for k in sorted(acc, reverse=True):
        blocks[k] = _normalized(symmetrize_factors(np.asarray(acc[k]), d, k))
    return ReducedState(blocks=blocks, s_modes=reduced.s_modes, d_int=reduced.d_int,
                        n_particles=reduced.n_particles)


def partial_trace_keep(X, d, k, keep):
    """Trace a ``d**k`` square matrix down to the factors listed in ``keep``."""
    keep = list(keep)
    T = X.reshape((d,) * (2 * k))
    letters = [chr(ord("a") + i) for i in range(2 * k)]
    ket = letters[:k]
    bra = letters[k:]
    for i in range(k):
        if i not in keep:
            bra[i] = ket[i]
    out = [ket[i] for i in keep] + [bra[i] for i in keep]
    spec = "".join(ket) + "".join(bra) + "->" + "".join(out)
    m = d ** len(keep)
    return np.einsum(spec, T).reshape(m, m)


def subset_average(X, d, k, kp):
    """Uniform average of the partial traces onto every kp-subset of factors."""
    if kp == k:
        return X.copy()
    subsets = list(itertools.combinations(range(k), kp))
    acc = 0
    for keep in subsets:
        acc = acc + partial_trace_keep(X, d, k, keep)
    return acc / len(subsets)


@dataclass(frozen=True, eq=False)
class Rspdm:
    """Vacuum weight plus the one-particle block on ``s_modes (x) internal``."""

    vacuum_weight: float
    one_particle_block: np.ndarray
    s_modes: np.ndarray
    d_int: int


def rspdm(reduced):
    d = reduced.d_s
    block = np.zeros((d, d), dtype=np.complex128)
    vac = 0.0
    for label, (w, blk) in reduced.blocks.items():
        k = sector_count(label)
        if k == 0:
            vac += w
        elif w > 0.0:
            block += w * subset_average(blk, d, k, 1)
    return Rspdm(vacuum_weight=vac, one_particle_block=block, s_modes=reduced.s_modes,
                 d_int=reduced.d_int)


@dataclass(frozen=True, eq=False)
class KParticleState:
    """Weighted kp-particle blocks per sector and the residual weight of
    sectors with fewer than kp particles in the system."""

    kp: int
    residual: float
    blocks: dict
    s_modes: np.ndarray
    d_int: int

    def merged(self):
        d = self.s_modes.shape[1] * self.d_int
        out = np.zeros((d ** self.kp, d ** self.kp), dtype=np.complex128)
        for blk in self.blocks.values():
            out += blk
        return out


def reduce_k_particles(reduced, kp):
    n = reduced.n_particles
    if not 1 <= kp <= max(n, 1):
        raise DomainError(f"kp = {kp} outside 1..{n}")
    d = reduced.d_s
    residual = 0.0
    blocks = {}
    for label, (w, blk) in reduced.blocks.items():
        k = sector_count(label)
        if k < kp:
            residual += w
        elif w > 0.0:
            blocks[label] = w * subset_average(blk, d, k, kp)
    return KParticleState(kp=kp, residual=residual, blocks=blocks,
                          s_modes=reduced.s_modes, d_int=reduced.d_int)


def trace_internal(reduced):
    """Reduced state with the internal labels traced out of every factor."""
    d_int = reduced.d_int
    m_s = reduced.s_modes.shape[1]
    blocks = {}
    for label, (w, blk) in reduced.blocks.items():
        k = sector_count(label)
        if k == 0:
            blocks[label] = (w, blk.copy())
            continue
        T = blk.reshape((m_s, d_int) * k + (m_s, d_int) * k)
        letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
        ket = []
        bra = []
        out = []
        for _ in range(k):
            sp, it = next(letters), next(letters)
            ket += [sp, it]
            out.append(sp)
        internal_letters = ket[1::2]
        out_bra = []
        for i in range(k):
            sp = next(letters)
            bra += [sp, internal_letters[i]]
            out_bra.append(sp)
        spec = "".join(ket) + "".join(bra) + "->" + "".join(out + out_bra)
        red = np.einsum(spec, T).reshape(m_s ** k, m_s ** k)
        blocks[label] = (w, red)
    return ReducedState(blocks=blocks, s_modes=reduced.s_modes, d_int=1,
                        n_particles=reduced.n_particles)


def vacuum_state(d_int=1, n_system_rows=0):
    """Reduced state with every particle in the environment."""
    return ReducedState(blocks={0: (1.0, np.ones((1, 1), dtype=np.complex128))},
                        s_modes=np.zeros((n_system_rows, 0), dtype=np.complex128),
                        d_int=int(d_int), n_particles=0)
