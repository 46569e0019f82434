"""Trace distances between reduced system states, number-statistics bounds,
the one-particle contractivity bound and the non-Markovianity witness."""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, ResourceError
from .manybody import (ReducedState, merge_orderings, orthonormalize,
                       reduce_k_particles, rspdm, sector_count)

HERMITIAN_TOL = 1e-10
EMBED_DIM_MAX = 4096


def householder_tridiagonal(A):
    """Reduce a Hermitian matrix to a real symmetric tridiagonal one.

    Returns ``(diag, off)``; the eigenvalues are those of ``A``.
    """
    A = np.array(A, dtype=np.complex128)
    n = A.shape[0]
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        # H = I - 2 v v^H applied from both sides to the trailing block
        sub = A[k + 1:, k:]
        sub -= 2.0 * np.outer(v, v.conj() @ sub)
        A[k + 1:, k:] = sub
        sub = A[k:, k + 1:]
        sub -= 2.0 * np.outer(sub @ v, v.conj())
        A[k:, k + 1:] = sub
    diag = np.real(np.diag(A)).copy()
    e = np.diag(A, 1)
    # a diagonal unitary makes the subdiagonal real and non-negative
    off = np.abs(e)
    return diag, off


def hermitian_eigenvalues(A, backend=None):
    impl = backend or kernels
    A = np.asarray(A)
    if A.shape[0] == 0:
        return np.zeros(0)
    if A.shape[0] == 1:
        return np.array([float(np.real(A[0, 0]))])
    d, e = householder_tridiagonal(A)
    return np.asarray(impl.tridiagonal_eigenvalues(np.ascontiguousarray(d), np.ascontiguousarray(e)))


def _check_hermitian(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    defect = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if defect > HERMITIAN_TOL * scale:
        raise DomainError(f"matrix is not Hermitian (defect {defect:.3e})")
    return 0.5 * (m + m.conj().T)


def _sign_canonical(m):
    # ||A|| and ||-A|| must agree bit for bit: flip so that the first nonzero
    # real component is positive (negation is exact; +0.0 clears signed zeros)
    flat = np.ascontiguousarray(m).view(np.float64).ravel() if np.iscomplexobj(m) else m.ravel()
    nz = np.flatnonzero(flat)
    if nz.size and flat[nz[0]] < 0:
        m = -m
    return m + 0.0


def trace_norm(m, backend=None):
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    m = _check_hermitian(m)
    if m.shape[0] == 0:
        return 0.0
    m = _sign_canonical(m)
    return float(np.sum(np.abs(hermitian_eigenvalues(m, backend=backend))))


def trace_distance(rho, sigma):
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DomainError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    return 0.5 * trace_norm(rho - sigma)


# -- common frame ----------------------------------------------------------

def _common_frame(modes_a, modes_b):
    """Orthonormal basis of the union of two system frames and the maps
    taking each frame's coordinates into it."""
    rows = max(modes_a.shape[0], modes_b.shape[0])
    a = modes_a if modes_a.shape[1] else np.zeros((rows, 0), dtype=np.complex128)
    b = modes_b if modes_b.shape[1] else np.zeros((rows, 0), dtype=np.complex128)
    if a.shape[0] != b.shape[0]:
        raise DomainError("system frames live on different meshes")
    Q, _ = orthonormalize(np.concatenate([a, b], axis=1))
    return Q.conj().T @ a, Q.conj().T @ b


def _alphabet(rho, sigma):
    da, db = rho.d_int, sigma.d_int
    if da == db:
        return da
    # a side without system modes carries no internal structure
    if rho.s_modes.shape[1] == 0:
        return db
    if sigma.s_modes.shape[1] == 0:
        return da
    raise DomainError(f"internal alphabets differ ({da} vs {db})")


def _embed(block, factor, k):
    """``F^{(x)k} B F^{(x)k}^H`` without forming the Kronecker power."""
    if k == 0:
        return block
    d_in = factor.shape[1]
    d_out = factor.shape[0]
    if d_out ** k > EMBED_DIM_MAX:
        raise ResourceError(f"embedded block dimension {d_out}^{k} exceeds {EMBED_DIM_MAX}")
    T = block.reshape((d_in,) * (2 * k))
    for axis in range(2 * k):
        F = factor if axis < k else factor.conj()
        T = np.moveaxis(np.tensordot(F, T, axes=([1], [axis])), 0, axis)
    n = d_out ** k
    return T.reshape(n, n)


def _factor_map(coords, d_int):
    return np.kron(coords, np.eye(d_int))


def _aligned_pair(rho, sigma):
    if rho.by_count != sigma.by_count:
        rho, sigma = merge_orderings(rho), merge_orderings(sigma)
    d_int = _alphabet(rho, sigma)
    ca, cb = _common_frame(rho.s_modes, sigma.s_modes)
    return rho, sigma, _factor_map(ca, d_int), _factor_map(cb, d_int)


def blockwise_distance(rho, sigma):
    """Sum over sectors of half the trace norm of the weighted block difference."""
    rho, sigma, fa, fb = _aligned_pair(rho, sigma)
    total = 0.0
    for label in set(rho.blocks) | set(sigma.blocks):
        k = sector_count(label)
        n = fa.shape[0] ** k
        diff = np.zeros((n, n), dtype=np.complex128)
        if label in rho.blocks:
            w, blk = rho.blocks[label]
            if w > 0.0:
                diff += w * _embed(blk, fa, k)
        if label in sigma.blocks:
            w, blk = sigma.blocks[label]
            if w > 0.0:
                diff -= w * _embed(blk, fb, k)
        if k == 0:
            total += 0.5 * abs(float(np.real(diff[0, 0])))
        else:
            total += 0.5 * trace_norm(diff)
    return total


def _count_weights(reduced):
    p = {}
    for label, (w, _) in reduced.blocks.items():
        k = sector_count(label)
        p[k] = p.get(k, 0.0) + w
    return p


def p_lower(rho, sigma):
    """Half the l1 distance of the particle-number distributions."""
    pa, pb = _count_weights(rho), _count_weights(sigma)
    return 0.5 * sum(abs(pa.get(k, 0.0) - pb.get(k, 0.0)) for k in set(pa) | set(pb))


def p_upper(rho, sigma):
    """Exact distance in the vacuum sector plus the maximal distance elsewhere."""
    c0 = _count_weights(rho).get(0, 0.0)
    d0 = _count_weights(sigma).get(0, 0.0)
    return 1.0 - 0.5 * (c0 + d0) + 0.5 * abs(c0 - d0)


def d_1p(rho, sigma):
    """Trace distance of two RSPDMs on vacuum (+) one-particle space.

    Accepts :class:`Rspdm` or :class:`ReducedState` arguments.
    """
    if isinstance(rho, ReducedState) and isinstance(sigma, ReducedState):
        if rho.by_count != sigma.by_count:
            rho, sigma = merge_orderings(rho), merge_orderings(sigma)
    if isinstance(rho, ReducedState):
        rho = rspdm(rho)
    if isinstance(sigma, ReducedState):
        sigma = rspdm(sigma)
    d_int = _alphabet(rho, sigma)
    ca, cb = _common_frame(rho.s_modes, sigma.s_modes)
    A = _embed(rho.one_particle_block, _factor_map(ca, d_int), 1)
    B = _embed(sigma.one_particle_block, _factor_map(cb, d_int), 1)
    return 0.5 * abs(rho.vacuum_weight - sigma.vacuum_weight) + 0.5 * trace_norm(A - B)


def d_kp(rho, sigma, kp):
    """Trace distance of the kp-particle reductions, including the weight of
    sectors with fewer than kp particles as a separate orthogonal block."""
    if rho.by_count != sigma.by_count:
        rho, sigma = merge_orderings(rho), merge_orderings(sigma)
    ka = reduce_k_particles(rho, kp)
    kb = reduce_k_particles(sigma, kp)
    d_int = _alphabet(rho, sigma)
    ca, cb = _common_frame(ka.s_modes, kb.s_modes)
    A = _embed(ka.merged(), _factor_map(ca, d_int), kp)
    B = _embed(kb.merged(), _factor_map(cb, d_int), kp)
    return 0.5 * abs(ka.residual - kb.residual) + 0.5 * trace_norm(A - B)


def block_diagonal_matrix(reduced, factor=None):
    """Dense block-diagonal assembly of a reduced state, sectors in label order."""
    d_int = reduced.d_int
    if factor is None:
        factor = _factor_map(np.eye(reduced.s_modes.shape[1]), d_int)
    parts = []
    for label in sorted(reduced.blocks, key=lambda x: (sector_count(x), str(x))):
        w, blk = reduced.blocks[label]
        parts.append(w * _embed(blk, factor, sector_count(label)))
    dim = sum(p.shape[0] for p in parts)
    out = np.zeros((dim, dim), dtype=np.complex128)
    pos = 0
    for p in parts:
        n = p.shape[0]
        out[pos:pos + n, pos:pos + n] = p
        pos += n
    return out


# -- time series and witnesses ---------------------------------------------

@dataclass(frozen=True)
class Witness:
    """A maximal run ``[t1_start, t1_end]`` of later times at which the
    distance exceeds an earlier upper bound.

    ``kind`` is ``bounds`` when somewhere in the run the lower estimator
    alone exceeds the earlier upper estimator, else ``mixed``; ``(t0, t1)``
    is the pair of largest excess for that kind.
    """

    t0: float
    t1: float
    kind: str
    t1_start: float
    t1_end: float
    excess: float


@dataclass
class DistanceReport:
    times: np.ndarray
    d_full: np.ndarray
    p_lower: np.ndarray
    p_upper: np.ndarray
    d_1p: np.ndarray
    d_kp: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    max_increase: float = 0.0
    extra: dict = field(default_factory=dict)


WITNESS_SLACK = 1e-10


def max_increase(series):
    """``max_{i<j} series[j] - series[i]`` (zero for nonincreasing series)."""
    s = np.asarray(series, dtype=np.float64)
    if s.size < 2:
        return 0.0
    running_min = np.minimum.accumulate(s[:-1])
    return float(max(0.0, np.max(s[1:] - running_min)))


def witness_scan(report, slack=WITNESS_SLACK):
    """Witness runs for ``p_upper(t0) < p_lower(t1)`` (bounds) or
    ``p_upper(t0) < d_full(t1)`` (mixed), ``t0 < t1``, merged into maximal
    runs of consecutive ``t1``."""
    t = np.asarray(report.times, dtype=np.float64)
    if t.size < 2:
        raise DomainError("witness scan needs at least two samples")
    up = np.asarray(report.p_upper, dtype=np.float64)
    lo = np.asarray(report.p_lower, dtype=np.float64)
    df = np.asarray(report.d_full, dtype=np.float64)
    # index of the smallest earlier upper bound for every t1
    arg = np.zeros(t.size, dtype=np.int64)
    best = 0
    for j in range(1, t.size):
        if up[j - 1] < up[best]:
            best = j - 1
        arg[j] = best
    ref = up[arg]
    ex_mixed = np.where(np.arange(t.size) > 0, df - ref, -np.inf)
    ex_bounds = np.where(np.arange(t.size) > 0, lo - ref, -np.inf)
    hit = ex_mixed > slack
    out = []
    j = 1
    while j < t.size:
        if not hit[j]:
            j += 1
            continue
        start = j
        while j + 1 < t.size and hit[j + 1]:
            j += 1
        run = slice(start, j + 1)
        if np.max(ex_bounds[run]) > slack:
            kind, ex = "bounds", ex_bounds
        else:
            kind, ex = "mixed", ex_mixed
        k = start + int(np.argmax(ex[run]))
        out.append(Witness(t0=float(t[arg[k]]), t1=float(t[k]), kind=kind,
                           t1_start=float(t[start]), t1_end=float(t[j]),
                           excess=float(ex[k])))
        j += 1
    return out


def pair_metrics(rho, sigma, kps=()):
    """All distances of one pair of reduced states, as a dict."""
    if rho.by_count != sigma.by_count:
        rho, sigma = merge_orderings(rho), merge_orderings(sigma)
    out = {
        "d_full": blockwise_distance(rho, sigma),
        "p_lower": p_lower(rho, sigma),
        "p_upper": p_upper(rho, sigma),
        "d_1p": d_1p(rho, sigma),
    }
    for kp in kps:
        out[f"d_{kp}p"] = d_kp(rho, sigma, kp)
    return out


def distance_report(times, pairs, kps=(), scan=True):
    """Metrics for a sequence of ``(rho, sigma)`` reduced-state pairs."""
    n = len(times)
    series = {name: np.empty(n) for name in ("d_full", "p_lower", "p_upper", "d_1p")}
    kp_series = {kp: np.empty(n) for kp in kps}
    for i, (rho, sigma) in enumerate(pairs):
        row = pair_metrics(rho, sigma, kps)
        for name in series:
            series[name][i] = row[name]
        for kp in kps:
            kp_series[kp][i] = row[f"d_{kp}p"]
    report = DistanceReport(times=np.asarray(times, dtype=np.float64), d_kp=kp_series, **series)
    if scan and n >= 2:
        report.witnesses = witness_scan(report)
        report.max_increase = max_increase(report.d_full)
    return report
