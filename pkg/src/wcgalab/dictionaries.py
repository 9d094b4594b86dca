"""Finite Haar and trigonometric dictionaries normalized in ``L^Phi``.

Atoms are rendered on the midpoint grid of a :class:`GridFunction`.  Every
dictionary carries an explicit dual family with ``int phi_i phi*_j = delta_ij``
and exposes vectorized analysis (``int K phi_i`` for all atoms at once) so that
greedy scans cost ``O(grid + size)`` or one FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DomainError, ResolutionError
from .orlicz import GridFunction, FunctionalKernel, YoungFunction, luxemburg_norm, orlicz_dual_norm

__all__ = [
    "Atom",
    "Dictionary",
    "HaarDictionary",
    "TrigDictionary",
    "build_haar",
    "build_trig",
    "fundamental_function",
    "democracy_estimate",
    "dirichlet_kernel",
    "dirichlet_value",
    "trig_frequency",
]


@dataclass(frozen=True)
class Atom:
    """Descriptor of one dictionary element.

    ``level``/``offset`` are set for Haar atoms (support
    ``[offset 2^-level, (offset+1) 2^-level)``), ``frequency`` for trig atoms.
    """

    id: int
    kind: str
    norm_constant: float
    level: int | None = None
    offset: int | None = None
    frequency: int | None = None


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


class Dictionary:
    """Common interface of the finite dictionaries.

    Subclasses provide ``_shapes(ids)`` (unnormalized atoms as columns),
    ``_shape_integrals(values, dual)`` (``int values * shape_i`` for every
    atom, with the dual shape when ``dual`` is true) and the per-atom factors
    ``_atom_factor`` / ``_dual_factor`` that turn shapes into atoms and duals.
    """

    kind: str
    space: YoungFunction
    domain: str
    width: float
    grid_size: int

    def __init__(self, space, domain, width, grid_size, atoms, atom_factor, dual_factor, scales=None):
        self.space = space
        self.domain = domain
        self.width = float(width)
        self.grid_size = int(grid_size)
        self.atoms = tuple(atoms)
        base_atom = np.asarray(atom_factor, dtype=float)
        base_dual = np.asarray(dual_factor, dtype=float)
        self.scales = np.ones(len(self.atoms)) if scales is None else np.asarray(scales, dtype=float)
        if self.scales.shape != (len(self.atoms),) or np.any(self.scales <= 0):
            raise DomainError("scales must be positive, one per atom")
        self._base_atom_factor, self._base_dual_factor = base_atom, base_dual
        self._atom_factor = base_atom * self.scales
        self._dual_factor = base_dual / self.scales
        for arr in (self.scales, self._atom_factor, self._dual_factor):
            arr.setflags(write=False)

    # -- structure ---------------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def step(self) -> float:
        return self.width / self.grid_size

    def __len__(self) -> int:
        return self.size

    def grid_function(self, samples) -> GridFunction:
        return GridFunction(self.domain, self.width, samples)

    def zeros(self) -> GridFunction:
        return self.grid_function(np.zeros(self.grid_size))

    def check_grid(self, f: GridFunction) -> None:
        self.zeros().check_grid(f)

    def rescaled(self, scales) -> "Dictionary":
        """Same dictionary with atom ``i`` multiplied by ``scales[i]``.

        The duals are divided by the same factors, so biorthogonality holds.
        """
        raise NotImplementedError

    # -- rendering ---------------------------------------------------------
    def _shapes(self, ids: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _dual_shapes(self, ids: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _shape_integrals(self, values: np.ndarray, dual: bool) -> np.ndarray:
        raise NotImplementedError

    def render_many(self, ids) -> np.ndarray:
        """Matrix whose columns are the sampled atoms ``ids``."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        return self._shapes(ids) * self._atom_factor[ids]

    def render(self, i: int) -> GridFunction:
        return self.grid_function(self.render_many([i])[:, 0])

    def render_dual(self, i: int) -> GridFunction:
        ids = np.array([i], dtype=np.int64)
        return self.grid_function((self._dual_shapes(ids) * self._dual_factor[ids])[:, 0])

    def synthesize(self, ids, coefficients) -> GridFunction:
        """``sum_j c_j phi_{ids_j}`` on the grid."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        if ids.size == 0:
            return self.zeros()
        return self.grid_function(self.render_many(ids) @ np.asarray(coefficients))

    def dual_synthesize(self, ids, coefficients) -> GridFunction:
        """``sum_j c_j phi*_{ids_j}`` on the grid."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        if ids.size == 0:
            return self.zeros()
        mat = self._dual_shapes(ids) * self._dual_factor[ids]
        return self.grid_function(mat @ np.asarray(coefficients))

    # -- analysis ----------------------------------------------------------
    def analyze(self, kernel: FunctionalKernel) -> np.ndarray:
        """``int K phi_i`` for every atom (the values ``F(phi_i)``)."""
        self.check_grid(kernel.base)
        return self._shape_integrals(kernel.base.samples, dual=False) * self._atom_factor

    def dual_coefficients(self, f: GridFunction) -> np.ndarray:
        """Biorthogonal coefficients ``int f phi*_i`` for every atom."""
        self.check_grid(f)
        return self._shape_integrals(f.samples, dual=True) * self._dual_factor

    def atom_norms(self) -> np.ndarray:
        """Luxemburg norms of all atoms, computed from the rendered samples."""
        return np.array([luxemburg_norm(self.render(i), self.space) for i in range(self.size)])

    def describe(self) -> dict:
        raise NotImplementedError


class HaarDictionary(Dictionary):
    """Haar functions ``h_I`` on dyadic ``I`` in ``[0, W)`` with ``|I| = 2^-j``, ``j <= J``."""

    kind = "haar"

    def __init__(self, space, width, max_level, grid_size, scales=None):
        cells_per_unit = grid_size // width
        self.max_level = int(max_level)
        levels, offsets = [], []
        for j in range(self.max_level + 1):
            count = width * 2 ** j
            levels.append(np.full(count, j, dtype=np.int64))
            offsets.append(np.arange(count, dtype=np.int64))
        self.levels = np.concatenate(levels)
        self.offsets = np.concatenate(offsets)
        self.half_cells = (cells_per_unit >> (self.levels + 1)).astype(np.int64)
        self.start_cells = self.offsets * 2 * self.half_cells
        h = width / grid_size
        # norm of |h_I| = 1_I, computed once per level on the grid
        level_norms = []
        for j in range(self.max_level + 1):
            cells = cells_per_unit >> j
            samples = np.zeros(grid_size)
            samples[:cells] = 1.0
            level_norms.append(luxemburg_norm(GridFunction.interval(width, samples), space))
        self.level_norms = np.array(level_norms)
        norms = self.level_norms[self.levels]
        lengths = 2.0 * self.half_cells * h
        atoms = [Atom(i, "haar", float(norms[i]), level=int(self.levels[i]), offset=int(self.offsets[i]))
                 for i in range(self.levels.size)]
        super().__init__(space, "interval", width, grid_size, atoms, 1.0 / norms, norms / lengths, scales)

    def rescaled(self, scales) -> "HaarDictionary":
        return HaarDictionary(self.space, int(self.width), self.max_level, self.grid_size,
                              self.scales * np.asarray(scales, dtype=float))

    def index(self, level: int, offset: int) -> int:
        """Atom id of ``h_I`` with ``I = [offset 2^-level, (offset+1) 2^-level)``."""
        if not 0 <= level <= self.max_level:
            raise DomainError(f"level {level} outside 0..{self.max_level}")
        per_level = int(self.width) * 2 ** level
        if not 0 <= offset < per_level:
            raise DomainError(f"offset {offset} outside 0..{per_level - 1}")
        return int(self.width) * (2 ** level - 1) + offset

    def level_ids(self, level: int) -> np.ndarray:
        first = self.index(level, 0)
        return np.arange(first, first + int(self.width) * 2 ** level)

    def support_mask(self, i: int) -> np.ndarray:
        mask = np.zeros(self.grid_size, dtype=bool)
        s = self.start_cells[i]
        mask[s:s + 2 * self.half_cells[i]] = True
        return mask

    def _shapes(self, ids):
        out = np.zeros((self.grid_size, ids.size))
        for col, i in enumerate(ids):
            s, hc = self.start_cells[i], self.half_cells[i]
            out[s:s + hc, col] = 1.0
            out[s + hc:s + 2 * hc, col] = -1.0
        return out

    _dual_shapes = _shapes

    def render_sparse(self, ids) -> sparse.csc_matrix:
        """Sparse version of :meth:`render_many`."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        hc = self.half_cells[ids]
        counts = 2 * hc
        cols = np.repeat(np.arange(ids.size), counts)
        starts = np.repeat(self.start_cells[ids], counts)
        local = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        rows = starts + local
        signs = np.where(local < np.repeat(hc, counts), 1.0, -1.0)
        data = signs * np.repeat(self._atom_factor[ids], counts)
        return sparse.csc_matrix((data, (rows, cols)), shape=(self.grid_size, ids.size))

    def _shape_integrals(self, values, dual):
        prefix = np.concatenate(([0.0], np.cumsum(values)))
        s, hc = self.start_cells, self.half_cells
        return self.step * (2 * prefix[s + hc] - prefix[s] - prefix[s + 2 * hc])

    def describe(self) -> dict:
        return {"kind": "haar", "width": int(self.width), "max_level": self.max_level,
                "grid_size": self.grid_size}


def trig_frequency(i):
    """Frequency of trig atom ``i`` in the order ``0, 1, -1, 2, -2, ...``."""
    i = np.asarray(i, dtype=np.int64)
    n = (i + 1) // 2
    return np.where(i % 2 == 1, n, -n)


class TrigDictionary(Dictionary):
    """Exponentials ``e^{inx}`` on the torus, ``|n| <= max_freq``."""

    kind = "trig"

    def __init__(self, space, max_freq, grid_size, scales=None):
        self.max_freq = int(max_freq)
        size = 2 * self.max_freq + 1
        self.frequencies = trig_frequency(np.arange(size))
        # all atoms have modulus 1/||1||; ||1|| = 1/Phi^{-1}(1/2pi)
        self.unit_norm = luxemburg_norm(GridFunction.torus(np.ones(grid_size)), space)
        atoms = [Atom(i, "trig", self.unit_norm, frequency=int(self.frequencies[i])) for i in range(size)]
        super().__init__(space, "torus", 2.0 * math.pi, grid_size, atoms,
                         np.full(size, 1.0 / self.unit_norm),
                         np.full(size, self.unit_norm / (2.0 * math.pi)), scales)
        self._x = GridFunction.torus(np.zeros(grid_size)).points

    def rescaled(self, scales) -> "TrigDictionary":
        return TrigDictionary(self.space, self.max_freq, self.grid_size,
                              self.scales * np.asarray(scales, dtype=float))

    def index(self, frequency: int) -> int:
        if abs(frequency) > self.max_freq:
            raise DomainError(f"frequency {frequency} outside the truncation")
        return 2 * frequency - 1 if frequency > 0 else -2 * frequency

    def _shapes(self, ids):
        return np.exp(1j * np.outer(self._x, self.frequencies[ids]))

    def _dual_shapes(self, ids):
        return np.exp(-1j * np.outer(self._x, self.frequencies[ids]))

    def _shape_integrals(self, values, dual):
        n, h = self.grid_size, self.step
        freqs = self.frequencies
        sign = -1.0 if dual else 1.0
        # sum_k v_k e^{i s m x_k} with x_k = -pi + (k + 1/2) h
        spectrum = np.fft.fft(values) if dual else n * np.fft.ifft(values)
        phase = np.exp(1j * sign * freqs * (-math.pi + 0.5 * h))
        return h * phase * spectrum[freqs % n]

    def describe(self) -> dict:
        return {"kind": "trig", "max_freq": self.max_freq, "grid_size": self.grid_size}


def build_haar(space: YoungFunction, width: int, max_level: int, grid_size: int) -> HaarDictionary:
    """Normalized Haar system on ``[0, width)`` down to intervals of length ``2^-max_level``."""
    if int(width) != width or width < 1:
        raise DomainError(f"width must be a positive integer, got {width!r}")
    if int(max_level) != max_level or max_level < 0:
        raise DomainError(f"max_level must be a non-negative integer, got {max_level!r}")
    if not _is_power_of_two(int(grid_size)):
        raise DomainError(f"grid_size must be a power of two, got {grid_size!r}")
    width, max_level, grid_size = int(width), int(max_level), int(grid_size)
    if grid_size < width * 2 ** (max_level + 1):
        raise ResolutionError(
            f"grid_size {grid_size} cannot resolve Haar level {max_level} on width {width}; "
            f"need at least {width * 2 ** (max_level + 1)}")
    if grid_size % (width * 2 ** (max_level + 1)):
        raise ResolutionError(f"grid cells do not align with dyadic intervals for width {width}")
    return HaarDictionary(space, width, max_level, grid_size)


def build_trig(space: YoungFunction, max_freq: int, grid_size: int) -> TrigDictionary:
    """Normalized exponentials ``e^{inx}``, ``|n| <= max_freq``, on the torus."""
    if int(max_freq) != max_freq or max_freq < 0:
        raise DomainError(f"max_freq must be a non-negative integer, got {max_freq!r}")
    if not _is_power_of_two(int(grid_size)):
        raise DomainError(f"grid_size must be a power of two, got {grid_size!r}")
    if 4 * max_freq > grid_size:
        raise ResolutionError(f"max_freq {max_freq} aliases on a grid of {grid_size}; need max_freq <= grid_size/4")
    return TrigDictionary(space, int(max_freq), int(grid_size))


def fundamental_function(space: YoungFunction, t):
    """``1 / Phi^{-1}(1/t)``, the norm of an indicator of measure ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr <= 0):
        raise DomainError("the fundamental function is defined for finite t > 0")
    out = space.fundamental(t_arr)
    return float(out) if np.ndim(out) == 0 else out


def _structured_sets(d: Dictionary, N: int):
    """Deterministic candidate index sets of size ``N``."""
    sets = []
    if isinstance(d, HaarDictionary):
        for j in range(d.max_level + 1):
            ids = d.level_ids(j)
            if ids.size >= N:
                sets.append(ids[:N])
        if N <= d.max_level + 1:
            for top in range(d.max_level + 2 - N):
                sets.append(np.array([d.index(j, 0) for j in range(top, top + N)]))
    else:
        sets.append(np.arange(N))
        pos = [d.index(n) for n in range(1, d.max_freq + 1)]
        if N <= len(pos):
            sets.append(np.array(pos[:N]))
        lac = [d.index(2 ** j) for j in range(int(math.log2(d.max_freq)) + 1)] if d.max_freq >= 1 else []
        if N <= len(lac):
            sets.append(np.array(lac[:N]))
    return sets


def democracy_estimate(d: Dictionary, N: int, trials: int, seed: int) -> float:
    """Sampled lower bound for ``sup ||sum_{j in A} e_j phi*_j||`` over ``|A| = N``.

    Candidates are ``trials`` random (set, sign) draws plus structured sets
    (same-level packs and nested chains for Haar; frequency blocks and
    lacunary sets for trig), each with all-plus signs.
    """
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    if N > d.size:
        raise DomainError(f"N = {N} exceeds the dictionary size {d.size}")
    rng = np.random.default_rng(seed)
    candidates = [(ids, np.ones(N)) for ids in _structured_sets(d, N)]
    for _ in range(trials):
        ids = np.sort(rng.choice(d.size, size=N, replace=False))
        candidates.append((ids, rng.choice([-1.0, 1.0], size=N)))
    best = 0.0
    for ids, signs in candidates:
        best = max(best, orlicz_dual_norm(d.dual_synthesize(ids, signs), d.space))
    return best


def dirichlet_value(N: int, x):
    """``D_N(x) = sin((N + 1/2) x) / sin(x / 2)``, with the limit ``2N + 1`` at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    s = np.sin(0.5 * x)
    small = np.abs(s) < 1e-12
    safe = np.where(small, 1.0, s)
    return np.where(small, 2.0 * N + 1.0, np.sin((N + 0.5) * x) / safe)


def dirichlet_kernel(N: int, grid_size: int) -> GridFunction:
    """``D_N = sum_{|n| <= N} e^{inx}`` sampled on the torus grid."""
    if int(N) != N or N < 0:
        raise DomainError(f"N must be a non-negative integer, got {N!r}")
    if not _is_power_of_two(int(grid_size)):
        raise DomainError(f"grid_size must be a power of two, got {grid_size!r}")
    if 4 * N > grid_size:
        raise ResolutionError(f"D_{N} aliases on a grid of {grid_size}; need N <= grid_size/4")
    x = GridFunction.torus(np.zeros(grid_size)).points
    return GridFunction.torus(dirichlet_value(int(N), x))
