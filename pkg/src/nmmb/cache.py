"""On-disk cache of spectral bases.

Layout: the magic bytes ``NMMB1``; a header of six little-endian float64
(h, l, b, r, v0, e_cut with ``inf`` for the complete basis) and two
little-endian int64 (node count, mode count); the energies; the modes as a
row-major (node x mode) float64 array. A file whose header differs from the
requested key is ignored and rewritten.
"""
import hashlib
import logging
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .potential import SpectralBasis, assemble_fem, solve_modes

log = logging.getLogger(__name__)

MAGIC = b"NMMB1"
_HEADER = struct.Struct("<6d2q")
_ROW_CHUNK = 512


def cache_dir():
    env = os.environ.get("NMMB_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "nmmb"


def _key(fem, e_cut):
    s = fem.spec
    return (float(fem.h), float(s.l), float(s.b), float(s.r), float(s.v0),
            math.inf if e_cut is None else float(e_cut))


def cache_path(fem, e_cut, directory=None):
    key = _key(fem, e_cut)
    digest = hashlib.sha1(_HEADER.pack(*key, fem.n, 0)).hexdigest()[:16]
    return Path(directory or cache_dir()) / f"basis-{digest}.nmmb"


def write_basis(path, basis):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fem = basis.fem
    header = _HEADER.pack(*_key(fem, basis.e_cut), fem.n, basis.size)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".nmmb")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(header)
            fh.write(basis.energies.astype("<f8").tobytes())
            V = basis.vectors
            for start in range(0, fem.n, _ROW_CHUNK):
                block = np.ascontiguousarray(V[:, start:start + _ROW_CHUNK].T, dtype="<f8")
                fh.write(block.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_header(path):
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            return None
        raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        return None
    return _HEADER.unpack(raw)


def read_basis(path, fem, e_cut):
    """The cached basis, or ``None`` if the file is missing or keyed differently."""
    path = Path(path)
    if not path.exists():
        return None
    header = read_header(path)
    if header is None:
        return None
    key = _key(fem, e_cut)
    n, m = header[6], header[7]
    if tuple(header[:6]) != key or n != fem.n:
        return None
    offset = len(MAGIC) + _HEADER.size
    expected = offset + 8 * (m + n * m)
    if path.stat().st_size != expected:
        return None
    with open(path, "rb") as fh:
        fh.seek(offset)
        energies = np.fromfile(fh, dtype="<f8", count=m).astype(np.float64)
        modes = np.fromfile(fh, dtype="<f8", count=n * m).reshape(n, m)
    return SpectralBasis(energies=energies, vectors=modes.T, e_cut=key[5], fem=fem)


def load_or_solve(spec, h, e_cut=None, directory=None, use_cache=True):
    """Spectral basis for ``spec`` at spacing ``h``, through the disk cache."""
    fem = assemble_fem(spec, h)
    if not use_cache:
        return solve_modes(fem, e_cut)
    path = cache_path(fem, e_cut, directory)
    basis = read_basis(path, fem, e_cut)
    if basis is not None:
        log.info("loaded spectral basis from %s", path)
        return basis
    log.info("solving %d-node pencil (e_cut=%s)", fem.n, "complete" if e_cut is None else e_cut)
    basis = solve_modes(fem, e_cut)
    try:
        write_basis(path, basis)
    except OSError as exc:
        log.warning("could not write cache %s: %s", path, exc)
    return basis


def clear(directory=None):
    d = Path(directory or cache_dir())
    removed = 0
    if d.is_dir():
        for p in d.glob("*.nmmb"):
            p.unlink()
            removed += 1
    return removed
