"""Optional numba acceleration.

Hot kernels are written in the subset of Python/numpy that numba accepts and
are wrapped with :func:`jit`.  Setting ``APPROACHLAB_NUMBA=0`` (or running
without numba installed) leaves them as plain numpy functions.

Compiled kernels are cached on disk.  numba keys its cache on the file of
each kernel only, so a kernel calling into an edited module would keep the
stale machine code.  Unless ``NUMBA_CACHE_DIR`` is set, the cache therefore
lives in a directory named after a hash of the package sources.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

_flag = os.environ.get("APPROACHLAB_NUMBA", "1").strip().lower()
ENABLED = _flag not in ("0", "false", "no", "off")

if ENABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        ENABLED = False


def _source_digest() -> str:
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


def _cache_dir() -> str:
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    if not os.access(os.path.dirname(base) or ".", os.W_OK) and not os.path.isdir(base):
        base = tempfile.gettempdir()
    return os.path.join(base, "approachlab", "numba-" + _source_digest())


if ENABLED and not os.environ.get("NUMBA_CACHE_DIR"):
    numba.config.CACHE_DIR = _cache_dir()


def jit(fn):
    """Compile ``fn`` with numba in nopython mode when acceleration is on."""
    if not ENABLED:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def python_version(fn):
    """Return the uncompiled function behind a possibly jitted kernel."""
    return getattr(fn, "py_func", fn)
