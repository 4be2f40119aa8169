"""Numeric hot kernels with a numba fast path and a pure-numpy fallback.

Two inner loops dominate corpus-scale work: the edit-distance DP used by the
EL metric and the query-vs-matrix scoring used by k-NN retrieval.  Both ship
in two implementations selected once at import time:

* ``numba`` — ``@njit``-compiled loops (default when numba imports cleanly)
* ``numpy`` — vectorized fallback, no compilation step

Selection is controlled by the ``SPEECH2LATEX_BACKEND`` environment variable:
``auto`` (default), ``numba``, or ``numpy``.  Requesting ``numba`` when it is
not importable raises at import time rather than silently degrading.

Both paths are exact (integer DP, float64 arithmetic) and are cross-checked
against each other in the test suite.  ``benchmarks/bench_kernels.py``
compares their throughput.
"""

import os

import numpy as np

_ENV_VAR = "SPEECH2LATEX_BACKEND"


# --- pure-numpy implementations ---------------------------------------------


def _levenshtein_numpy(a: np.ndarray, b: np.ndarray) -> int:
    # Row-wise DP. Substitution/deletion are elementwise against the previous
    # row; the insertion chain is resolved with a running-minimum identity:
    # D[i][j] = min_{k<=j} (t[k] + (j - k)) = (cummin over (t - idx))[j] + idx[j].
    m = b.size
    idx = np.arange(m + 1, dtype=np.int64)
    prev = idx.copy()
    for i in range(a.size):
        t = np.empty(m + 1, dtype=np.int64)
        t[0] = i + 1
        t[1:] = np.minimum(prev[:-1] + (b != a[i]), prev[1:] + 1)
        prev = np.minimum.accumulate(t - idx) + idx
    return int(prev[m])


def _cosine_scores_numpy(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    # Row-wise reduce instead of BLAS gemv: gemv's blocked accumulation can
    # give bit-identical rows different results depending on row position,
    # which would break position-based tie-breaking for duplicate entries.
    norms = np.sqrt((matrix * matrix).sum(axis=1))
    qnorm = np.sqrt((query * query).sum())
    return (matrix * query).sum(axis=1) / (norms * qnorm)


def _euclidean_scores_numpy(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    diff = matrix - query
    return np.sqrt((diff * diff).sum(axis=1))


def _manhattan_scores_numpy(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    return np.abs(matrix - query).sum(axis=1)


NUMPY_IMPLS = {
    "levenshtein": _levenshtein_numpy,
    "cosine": _cosine_scores_numpy,
    "euclidean": _euclidean_scores_numpy,
    "manhattan": _manhattan_scores_numpy,
}


# --- numba implementations ---------------------------------------------------

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-free installs
    njit = None
    HAVE_NUMBA = False


NUMBA_IMPLS = {}

if HAVE_NUMBA:

    @njit(cache=False)
    def _levenshtein_numba(a, b):  # pragma: no cover - measured via dispatch
        m = b.size
        prev = np.arange(m + 1, dtype=np.int64)
        cur = np.empty(m + 1, dtype=np.int64)
        for i in range(a.size):
            cur[0] = i + 1
            ai = a[i]
            for j in range(1, m + 1):
                best = prev[j - 1] + (0 if b[j - 1] == ai else 1)
                if prev[j] + 1 < best:
                    best = prev[j] + 1
                if cur[j - 1] + 1 < best:
                    best = cur[j - 1] + 1
                cur[j] = best
            prev, cur = cur, prev
        return prev[m]

    @njit(cache=False)
    def _cosine_scores_numba(matrix, query):  # pragma: no cover
        n, d = matrix.shape
        out = np.empty(n, dtype=np.float64)
        qnorm = 0.0
        for j in range(d):
            qnorm += query[j] * query[j]
        qnorm = np.sqrt(qnorm)
        for i in range(n):
            dot = 0.0
            norm = 0.0
            for j in range(d):
                dot += matrix[i, j] * query[j]
                norm += matrix[i, j] * matrix[i, j]
            out[i] = dot / (np.sqrt(norm) * qnorm)
        return out

    @njit(cache=False)
    def _euclidean_scores_numba(matrix, query):  # pragma: no cover
        n, d = matrix.shape
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            for j in range(d):
                diff = matrix[i, j] - query[j]
                acc += diff * diff
            out[i] = np.sqrt(acc)
        return out

    @njit(cache=False)
    def _manhattan_scores_numba(matrix, query):  # pragma: no cover
        n, d = matrix.shape
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += abs(matrix[i, j] - query[j])
            out[i] = acc
        return out

    NUMBA_IMPLS = {
        "levenshtein": lambda a, b: int(_levenshtein_numba(a, b)),
        "cosine": _cosine_scores_numba,
        "euclidean": _euclidean_scores_numba,
        "manhattan": _manhattan_scores_numba,
    }


def _select_backend() -> str:
    requested = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy"):
        raise RuntimeError(
            f"{_ENV_VAR} must be one of auto/numba/numpy, got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    if requested == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        return "numba"
    return "numba" if HAVE_NUMBA else "numpy"


ACTIVE_BACKEND = _select_backend()
_IMPLS = NUMBA_IMPLS if ACTIVE_BACKEND == "numba" else NUMPY_IMPLS


def levenshtein_codes(a: np.ndarray, b: np.ndarray) -> int:
    """Edit distance between two int64 code-point arrays."""
    return int(_IMPLS["levenshtein"](a, b))


def cosine_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    return _IMPLS["cosine"](matrix, query)


def euclidean_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    return _IMPLS["euclidean"](matrix, query)


def manhattan_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    return _IMPLS["manhattan"](matrix, query)
