"""Pattern matrices, block structures, blown-up matrices and noise models.

A blown-up matrix is obtained from a small ``a x b`` pattern matrix ``P``
by expanding every entry ``p_ij`` into a constant ``m_i x n_j`` block.
The noisy observation is ``A = B + W`` with ``W`` a random matrix of
independent, zero-mean, bounded entries.

Random numbers come from NumPy's PCG64 generator (``np.random.default_rng``);
a given seed reproduces the same matrix bit for bit on one platform.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, ParameterError, StructuralError
from .validation import check_matrix, check_positive_int, check_positive_real

NOISE_KINDS = ("uniform", "bernoulli", "gaussian")


class PatternMatrix:
    """Nonnegative ``a x b`` matrix of block intensities.

    Parameters
    ----------
    entries : array-like of shape (a, b)
    check_support : bool, default=True
        Reject identically zero rows or columns. Correspondence analysis
        needs this; the Bernoulli sampler accepts degenerate patterns such
        as ``[[0]]``, so it can be switched off.
    """

    def __init__(self, entries, *, check_support=True):
        arr = check_matrix(entries, "pattern", nonnegative=True)
        if check_support:
            zero_rows = np.flatnonzero(arr.sum(axis=1) == 0)
            zero_cols = np.flatnonzero(arr.sum(axis=0) == 0)
            if zero_rows.size:
                raise DataError(f"pattern row {int(zero_rows[0])} is identically zero")
            if zero_cols.size:
                raise DataError(f"pattern column {int(zero_cols[0])} is identically zero")
        arr = arr.copy()
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self):
        return self._entries

    @property
    def shape(self):
        return self._entries.shape

    @property
    def a(self):
        return self._entries.shape[0]

    @property
    def b(self):
        return self._entries.shape[1]

    @property
    def is_probability(self):
        """True when every entry lies in [0, 1]."""
        return bool(np.all(self._entries <= 1.0))

    def rank(self):
        return int(np.linalg.matrix_rank(self._entries))

    def scaled(self, alpha):
        return PatternMatrix(self._entries * alpha, check_support=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, PatternMatrix):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __hash__(self):
        return hash(self._entries.tobytes())

    def __repr__(self):
        return f"PatternMatrix({self._entries.tolist()!r})"


def as_pattern(P, *, check_support=True):
    if isinstance(P, PatternMatrix):
        return P
    return PatternMatrix(P, check_support=check_support)


@dataclass(frozen=True)
class BlockStructure:
    """Row block sizes ``m_1..m_a`` and column block sizes ``n_1..n_b``."""

    row_sizes: tuple
    col_sizes: tuple

    def __post_init__(self):
        rows = tuple(check_positive_int(s, "row size") for s in self.row_sizes)
        cols = tuple(check_positive_int(s, "column size") for s in self.col_sizes)
        if not rows or not cols:
            raise StructuralError("a block structure needs at least one row and one column block")
        object.__setattr__(self, "row_sizes", rows)
        object.__setattr__(self, "col_sizes", cols)

    @classmethod
    def balanced(cls, m, n, a, b):
        """Split ``m`` rows into ``a`` and ``n`` columns into ``b`` near-equal blocks."""
        return cls(_balanced_sizes(m, a), _balanced_sizes(n, b))

    @property
    def a(self):
        return len(self.row_sizes)

    @property
    def b(self):
        return len(self.col_sizes)

    @property
    def m(self):
        return sum(self.row_sizes)

    @property
    def n(self):
        return sum(self.col_sizes)

    @property
    def c(self):
        """Row balance constant ``min_i m_i / m``."""
        return min(self.row_sizes) / self.m

    @property
    def d(self):
        """Column balance constant ``min_j n_j / n``."""
        return min(self.col_sizes) / self.n

    def row_labels(self):
        return np.repeat(np.arange(self.a), self.row_sizes)

    def col_labels(self):
        return np.repeat(np.arange(self.b), self.col_sizes)

    def rescaled(self, m, n):
        """Same block proportions, total sizes ``m`` and ``n`` (largest remainder)."""
        return BlockStructure(_proportional_sizes(self.row_sizes, m),
                              _proportional_sizes(self.col_sizes, n))

    def to_dict(self):
        return {"row_sizes": list(self.row_sizes), "col_sizes": list(self.col_sizes)}


def _balanced_sizes(total, parts):
    total = check_positive_int(total, "total size")
    parts = check_positive_int(parts, "block count", maximum=total)
    q, r = divmod(total, parts)
    return tuple(q + (i < r) for i in range(parts))


def _proportional_sizes(weights, total):
    total = check_positive_int(total, "total size", minimum=len(weights))
    w = np.asarray(weights, dtype=float)
    raw = w / w.sum() * total
    sizes = np.maximum(np.floor(raw).astype(int), 1)
    # largest remainder, ties broken by block index
    while sizes.sum() < total:
        i = int(np.argmax(raw - sizes))
        sizes[i] += 1
    while sizes.sum() > total:
        movable = np.where(sizes > 1, sizes - raw, -np.inf)
        sizes[int(np.argmax(movable))] -= 1
    return tuple(int(s) for s in sizes)


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of a noise law.

    ``uniform`` draws i.i.d. Uniform(-K, K) entries (variance K**2/3).
    ``gaussian`` draws N(0, variance) entries; it is unbounded and so not a
    bounded-noise model in the strict sense. ``bernoulli`` is the block 0-1
    model and is sampled by :func:`sample_bernoulli_noise`.
    """

    kind: str = "uniform"
    bound: float = 1.0
    variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ParameterError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.kind == "uniform":
            object.__setattr__(self, "bound", check_positive_real(self.bound, "bound K"))
        if self.kind == "gaussian":
            object.__setattr__(self, "variance", check_positive_real(self.variance, "variance"))
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ParameterError(f"seed must be an integer, got {self.seed!r}")

    @property
    def sigma(self):
        """Standard deviation of a single entry (uniform and gaussian kinds)."""
        if self.kind == "uniform":
            return self.bound / np.sqrt(3.0)
        if self.kind == "gaussian":
            return float(np.sqrt(self.variance))
        raise ParameterError("the bernoulli variance depends on the pattern")


def check_compatible(P, bs):
    if P.shape != (bs.a, bs.b):
        raise StructuralError(
            f"pattern has shape {P.shape} but the block structure has "
            f"{bs.a} row and {bs.b} column blocks"
        )


def blow_up(P, bs):
    """Expand ``P`` into the ``m x n`` matrix that is constant ``p_ij`` on block (i, j)."""
    P = as_pattern(P, check_support=False)
    check_compatible(P, bs)
    return P.entries[bs.row_labels()][:, bs.col_labels()]


def sample_noise(m, n, spec):
    """Draw an ``m x n`` noise matrix from a uniform or gaussian ``spec``."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "uniform":
        return rng.uniform(-spec.bound, spec.bound, size=(m, n))
    if spec.kind == "gaussian":
        return rng.normal(0.0, np.sqrt(spec.variance), size=(m, n))
    raise ParameterError("bernoulli noise depends on the pattern; use sample_bernoulli_noise")


def sample_bernoulli_noise(P, bs, seed):
    """Sample the 0-1 block model.

    Every entry of block (i, j) of ``A`` is 1 with probability ``p_ij``.
    Returns ``(A, W)`` with ``W = A - blow_up(P, bs)``, whose entries are
    ``1 - p_ij`` or ``-p_ij``.
    """
    P = as_pattern(P, check_support=False)
    if not P.is_probability:
        raise ParameterError("bernoulli noise needs pattern entries in [0, 1]")
    B = blow_up(P, bs)
    rng = np.random.default_rng(seed)
    A = (rng.random(B.shape) < B).astype(np.float64)
    return A, A - B


@dataclass(frozen=True)
class GrowthReport:
    """Balance constants per structure and whether the sizes obey the growth bounds."""

    c: tuple
    d: tuple
    gc2: bool
    constants: dict = field(default_factory=dict)

    @property
    def c_min(self):
        return min(self.c)

    @property
    def d_min(self):
        return min(self.d)


def check_gc(structures, C0=1.0, C=1.0, D0=1.0, D=1.0):
    """Report balance constants and test ``m <= C0 n**C`` and ``n <= D0 m**D``.

    ``structures`` is one :class:`BlockStructure` or a sweep of them.
    """
    if isinstance(structures, BlockStructure):
        structures = [structures]
    structures = list(structures)
    if not structures:
        raise ParameterError("need at least one block structure")
    if C < 1 or D < 1 or C0 <= 0 or D0 <= 0:
        raise ParameterError("growth bounds need C, D >= 1 and C0, D0 > 0")
    gc2 = all(bs.m <= C0 * bs.n ** C and bs.n <= D0 * bs.m ** D for bs in structures)
    return GrowthReport(
        c=tuple(bs.c for bs in structures),
        d=tuple(bs.d for bs in structures),
        gc2=gc2,
        constants={"C0": C0, "C": C, "D0": D0, "D": D},
    )


def planted_instance(P, bs, noise):
    """Return ``(A, B, W)`` for a pattern, structure and noise spec.

    ``noise`` is a :class:`NoiseSpec`, or ``None`` for a noiseless instance.
    For the bernoulli kind the spec's seed drives the 0-1 sampler.
    """
    P = as_pattern(P, check_support=False)
    B = blow_up(P, bs)
    if noise is None:
        return B.copy(), B, np.zeros_like(B)
    if noise.kind == "bernoulli":
        A, W = sample_bernoulli_noise(P, bs, noise.seed)
        return A, B, W
    W = sample_noise(bs.m, bs.n, noise)
    return B + W, B, W

