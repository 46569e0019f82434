"""Brute-force references used by several test modules.

Everything here works in the full single-particle space (spatial (x)
internal) and never touches the low-rank frames of the package.
"""
import itertools
import math

import numpy as np


def perm_sign(p):
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inv % 2 else 1


def dense_state(vectors, statistics):
    """Normalised N-particle tensor of explicit single-particle vectors."""
    n = len(vectors)
    psi = 0
    perms = [tuple(range(n))] if statistics == "ordered" else itertools.permutations(range(n))
    for p in perms:
        term = np.array(1.0 + 0j)
        for i in p:
            term = np.multiply.outer(term, vectors[i])
        sign = perm_sign(p) if statistics == "fermion" else 1
        psi = psi + sign * term
    return psi / np.linalg.norm(psi)


def dense_sector_blocks(psi, s_index, d_full):
    """Blocks by assignment string: system factors kept (in position order),
    environment factors traced."""
    n = psi.ndim
    s_index = np.asarray(s_index)
    e_index = np.setdiff1d(np.arange(d_full), s_index)
    out = {}
    for pattern in itertools.product("SE", repeat=n):
        sub = psi[np.ix_(*[s_index if c == "S" else e_index for c in pattern])]
        s_axes = [i for i, c in enumerate(pattern) if c == "S"]
        e_axes = [i for i, c in enumerate(pattern) if c == "E"]
        A = np.transpose(sub, s_axes + e_axes).reshape(len(s_index) ** len(s_axes), -1)
        out["".join(pattern)] = A @ A.conj().T
    return out


def dense_count_blocks(psi, s_index, d_full):
    out = {}
    for pattern, blk in dense_sector_blocks(psi, s_index, d_full).items():
        k = pattern.count("S")
        out[k] = out.get(k, 0) + blk
    return out


def kron_power(F, k):
    out = np.ones((1, 1), dtype=np.complex128)
    for _ in range(k):
        out = np.kron(out, F)
    return out


def embed_block(block, s_modes, d_int, k):
    F = np.kron(s_modes, np.eye(d_int))
    Fk = kron_power(F, k)
    return Fk @ block @ Fk.conj().T


def permanent_bruteforce(A):
    n = A.shape[0]
    return sum(math.prod(A[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))
