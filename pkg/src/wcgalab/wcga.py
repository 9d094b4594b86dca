"""The Weak Chebyshev Greedy Algorithm.

Each step evaluates the norming functional of the current residual on every
atom, picks the first atom whose value is within a factor ``tau`` of the
largest, and then replaces the approximant by the best approximation from the
span of all picked atoms (the Chebyshev projection).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, sparse

from .dictionaries import Dictionary, HaarDictionary
from .errors import DomainError, ProjectionError, StagnationError
from .orlicz import FunctionalKernel, GridFunction, _kernel_from_norm, luxemburg_norm

__all__ = [
    "WcgaConfig",
    "SparseElement",
    "GreedyTrace",
    "ProjectionResult",
    "select_atom",
    "chebyshev_project",
    "run_wcga",
    "iterations_to_target",
    "first_reaching",
]


@dataclass(frozen=True)
class WcgaConfig:
    """Parameters of a WCGA run.

    ``projection_tolerance`` and ``stop_threshold`` are relative to ``||f||``:
    the projection stops once ``max_j |F_res(phi_j)| <= projection_tolerance
    * ||f||`` and a residual below ``stop_threshold * ||f||`` counts as zero.
    """

    tau: float = 1.0
    max_iterations: int = 1000
    projection_tolerance: float = 1e-9
    projection_max_inner: int = 100
    stop_threshold: float = 1e-10
    record_coefficients: bool = True
    timing: bool = False

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise DomainError(f"tau must lie in (0, 1], got {self.tau!r}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise DomainError(f"max_iterations must be a positive integer, got {self.max_iterations!r}")
        if int(self.projection_max_inner) != self.projection_max_inner or self.projection_max_inner < 1:
            raise DomainError("projection_max_inner must be a positive integer")
        if not (self.projection_tolerance > 0 and self.stop_threshold > 0):
            raise DomainError("tolerances must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SparseElement:
    """``sum_{j in support} a_j phi_j`` with no zero coefficients."""

    support: tuple
    coefficients: tuple

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        coefficients = tuple(complex(c) for c in self.coefficients)
        if len(support) != len(coefficients):
            raise DomainError("support and coefficients differ in length")
        if len(set(support)) != len(support):
            raise DomainError("support ids must be distinct")
        if any(c == 0 for c in coefficients):
            raise DomainError("zero coefficients are not stored")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def from_mapping(cls, mapping) -> "SparseElement":
        items = [(int(k), complex(v)) for k, v in mapping.items() if v != 0]
        return cls(tuple(k for k, _ in items), tuple(v for _, v in items))

    def restrict(self, ids) -> "SparseElement":
        keep = set(int(i) for i in ids)
        pairs = [(i, c) for i, c in zip(self.support, self.coefficients) if i in keep]
        return SparseElement(tuple(i for i, _ in pairs), tuple(c for _, c in pairs))

    def render(self, d: Dictionary) -> GridFunction:
        coeffs = np.array(self.coefficients)
        if not np.any(coeffs.imag):
            coeffs = coeffs.real
        return d.synthesize(list(self.support), coeffs)

    def scaled(self, factor: complex) -> "SparseElement":
        return SparseElement(self.support, tuple(c * factor for c in self.coefficients))


@dataclass
class GreedyTrace:
    """Record of a WCGA run.

    ``residual_norms[0] = ||f||`` and ``residual_norms[n]`` is ``||f_n||``.
    Per-step lists (``functional_sups``, ``picked_values``, ``certificates``,
    ``coefficients``, ``wall_times``) have one entry per selected atom.
    ``certificates[n]`` is ``max_{j <= n} |F_{f_n}(phi_j)|`` after the
    projection, or 0 when ``f_n`` was declared zero.
    """

    selected: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    functional_sups: list = field(default_factory=list)
    picked_values: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    coefficients: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    status: str = "ok"

    @property
    def steps(self) -> int:
        return len(self.selected)

    def iterations_to(self, target: float):
        return first_reaching(self.residual_norms, target)


@dataclass
class ProjectionResult:
    coefficients: np.ndarray
    residual: GridFunction
    norm: float
    certificate: float
    inner_iterations: int
    zero_residual: bool


def first_reaching(norms, target):
    """Smallest ``n`` with ``norms[n] <= target``, or ``None``."""
    for n, value in enumerate(norms):
        if value <= target:
            return n
    return None


def _pick(values: np.ndarray, tau: float, excluded) -> int:
    v = np.abs(values).astype(float)
    if excluded:
        v[np.fromiter(excluded, dtype=np.int64)] = -np.inf
    top = float(np.max(v))
    if not top > 0:
        raise StagnationError("the residual annihilates every admissible atom")
    return int(np.flatnonzero(v >= tau * top)[0])


def select_atom(residual_kernel: FunctionalKernel, d: Dictionary, tau: float, excluded=()) -> int:
    """Smallest id with ``|F(phi_i)| >= tau * max_j |F(phi_j)|`` over non-excluded atoms."""
    if not (0.0 < tau <= 1.0):
        raise DomainError(f"tau must lie in (0, 1], got {tau!r}")
    excluded = set(int(i) for i in excluded)
    if len(excluded) >= d.size:
        raise DomainError("every atom is excluded")
    return _pick(d.analyze(residual_kernel), tau, excluded)


def _span_matrix(d: Dictionary, ids, real: bool):
    if real and isinstance(d, HaarDictionary):
        return d.render_sparse(ids)
    return d.render_many(ids)


def _least_squares(mat, f: np.ndarray) -> np.ndarray:
    if sparse.issparse(mat):
        gram = (mat.T @ mat).toarray()
        return np.linalg.solve(gram, mat.T @ f)
    return np.linalg.lstsq(mat, f, rcond=None)[0]


NEWTON_FLOOR = 1e-14


def _newton_direction(mat, r, lam, space, step, real):
    """Newton step for ``c -> int Phi(|f - Bc| / lam)`` at the current point.

    Minimizing this modular at ``lam = ||f - Bc*||`` has the same solution as
    minimizing the norm, so the step is a Newton step toward the norm
    minimizer once ``lam`` settles.
    """
    mod = np.abs(r)
    t = mod / lam
    floor = NEWTON_FLOOR * float(t.max())
    tc = np.maximum(t, floor)
    d1 = space.derivative(tc)
    p, ap, c = space.p, space.alpha * space.p, space.c
    logs = np.log(c + tc)
    d2 = tc ** (p - 2.0) * logs ** (ap - 1.0) * ((p - 1.0) * logs + ap * tc / (c + tc))
    grad_w = step * space.derivative(t)
    unit = np.where(mod > 0, r / np.where(mod > 0, mod, 1.0), 1.0)
    if real:
        w1 = step * d2
        if sparse.issparse(mat):
            hess = (mat.T @ sparse.diags(w1) @ mat).toarray()
        else:
            hess = mat.T @ (w1[:, None] * mat)
        rhs = mat.T @ (np.real(unit) * grad_w)
    else:
        bu = np.conj(unit)[:, None] * (mat.toarray() if sparse.issparse(mat) else mat)
        a = np.hstack([bu.real, -bu.imag])
        b = np.hstack([bu.imag, bu.real])
        hess = a.T @ ((step * d2)[:, None] * a) + b.T @ ((step * d1 / tc)[:, None] * b)
        rhs = a.T @ grad_w
    k = hess.shape[0]
    hess = hess + (1e-14 * np.trace(hess) / k) * np.eye(k)
    try:
        x = lam * np.linalg.solve(hess, rhs)
    except np.linalg.LinAlgError:
        x = lam * rhs
    if not real:
        x = x[: k // 2] + 1j * x[k // 2:]
    return x


ROUNDING_FLOOR = 1e-13


def _clean_residual(fs: np.ndarray, approx: np.ndarray) -> np.ndarray:
    """``fs - approx`` with rounding-level entries set to exactly zero.

    Entries below ``ROUNDING_FLOOR`` times the larger of the two operands are
    cancellation noise.  For ``p < 2`` the norming kernel behaves like
    ``|r|^(p-1)``, so such noise would otherwise dominate the first-order
    optimality values.
    """
    r = fs - approx
    scale = max(float(np.max(np.abs(fs))), float(np.max(np.abs(approx))) if approx.size else 0.0)
    r[np.abs(r) <= ROUNDING_FLOOR * scale] = 0.0
    return r


def _span_values(mat, kernel_samples, step):
    """``int K phi_j`` for the span atoms."""
    return step * (mat.T @ kernel_samples)



def chebyshev_project(f: GridFunction, d: Dictionary, span_ids, warm_start=None,
                      cfg: WcgaConfig | None = None, f_norm: float | None = None) -> ProjectionResult:
    """Best approximation of ``f`` from ``span{phi_j : j in span_ids}`` in ``L^Phi``.

    Starts from the better of ``warm_start`` and the least-squares fit, then
    takes Newton steps with an exact line search on the norm.  Returns once
    ``max_j |F_res(phi_j)| <= projection_tolerance * ||f||`` or the residual
    is below ``stop_threshold * ||f||``; otherwise raises
    :class:`ProjectionError` carrying the final gap.
    """
    cfg = cfg or WcgaConfig()
    ids = np.asarray(list(span_ids), dtype=np.int64)
    if ids.size == 0:
        raise DomainError("span_ids must be nonempty")
    d.check_grid(f)
    space, step = d.space, d.step
    fs = f.samples
    real = not np.iscomplexobj(fs) and d.kind == "haar"
    mat = _span_matrix(d, ids, real)
    f_norm = luxemburg_norm(f, space) if f_norm is None else f_norm
    zero_level = cfg.stop_threshold * f_norm
    tol = cfg.projection_tolerance * f_norm

    def norm_of(coeffs, guess=None):
        r = _clean_residual(fs, mat @ coeffs)
        return r, luxemburg_norm(f.with_samples(r), space, guess=guess)

    candidates = [_least_squares(mat, fs)]
    if warm_start is not None:
        ws = np.asarray(warm_start)
        if ws.shape != (ids.size,):
            raise DomainError("warm_start length differs from span size")
        candidates.insert(0, ws.real if real else ws.astype(complex))
    best = None
    for coeffs in candidates:
        r, lam = norm_of(coeffs)
        if best is None or lam < best[2]:
            best = (coeffs, r, lam)
    coeffs, r, lam = best
    gap = math.inf
    for inner in range(cfg.projection_max_inner + 1):
        if lam <= zero_level:
            return ProjectionResult(coeffs, f.with_samples(r), lam, 0.0, inner, True)
        kernel = _kernel_from_norm(f.with_samples(r), space, lam).base.samples
        gap = float(np.max(np.abs(_span_values(mat, kernel, step))))
        if gap <= tol:
            return ProjectionResult(coeffs, f.with_samples(r), lam, gap, inner, False)
        if inner == cfg.projection_max_inner:
            break
        delta = _newton_direction(mat, r, lam, space, step, real)
        w = mat @ delta
        slope0 = -float(np.real(np.sum(kernel * w)) * step)
        if not slope0 < 0:
            g = _span_values(mat, kernel, step)
            delta = np.conj(g).real if real else np.conj(g)
            delta = delta * (lam / max(float(np.linalg.norm(g)), 1e-300))
            w = mat @ delta
        slope0 = -float(np.real(np.sum(kernel * w)) * step)
        t = _line_search(f, r, w, space, step, zero_level, fs, lam, slope0)
        new_coeffs = coeffs + t * delta
        new_r, new_lam = norm_of(new_coeffs, lam)
        if new_lam > lam * (1.0 + 1e-13):
            # near the optimum the norm changes below its rounding level
            break
        coeffs, r, lam = new_coeffs, new_r, new_lam
    raise ProjectionError(
        f"projection did not certify optimality: gap {gap:.3e} > {tol:.3e}", gap, coeffs)


LINE_SEARCH_ACCEPT = 1e-2
LINE_SEARCH_RTOL = 1e-8


def _line_search(f: GridFunction, r, w, space, step, zero_level, fs, lam0=None, s0=None) -> float:
    """Minimizer of ``t -> ||r - t w||`` for ``t >= 0`` (convex in ``t``).

    ``lam0 = ||r||`` seeds the norm evaluations and ``s0`` is the known
    slope at ``t = 0``.
    """
    approx = fs - r
    last = [lam0]

    def slope(t):
        rt = _clean_residual(fs, approx + t * w)
        lam = luxemburg_norm(f.with_samples(rt), space, guess=last[0])
        if lam <= zero_level:
            return 0.0
        last[0] = lam
        kernel = _kernel_from_norm(f.with_samples(rt), space, lam).base.samples
        return -float(np.real(np.sum(kernel * w)) * step)

    if s0 is None:
        s0 = slope(0.0)
    s1 = slope(1.0)
    if s1 == 0.0 or abs(s1) <= LINE_SEARCH_ACCEPT * abs(s0):
        return 1.0
    lo, hi = 0.0, 1.0
    if s1 < 0:
        lo = 1.0
        hi = 2.0
        while slope(hi) < 0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e8:
                return lo
    return optimize.brentq(slope, lo, hi, xtol=1e-14, rtol=LINE_SEARCH_RTOL)


def _now(cfg: WcgaConfig):
    return time.perf_counter() if cfg.timing else None


def run_wcga(f: GridFunction, d: Dictionary, cfg: WcgaConfig, steps: int | None = None,
             target: float | None = None, progress=None) -> GreedyTrace:
    """Run up to ``steps`` WCGA iterations on ``f``.

    Stops early when the residual falls below ``stop_threshold * ||f||`` or,
    if ``target`` is given, below ``target``.  A stagnating scan ends the
    trace with the ``stagnation`` flag; projection failures propagate.
    """
    steps = cfg.max_iterations if steps is None else steps
    if steps > cfg.max_iterations:
        raise DomainError(f"steps = {steps} exceeds max_iterations = {cfg.max_iterations}")
    d.check_grid(f)
    space = d.space
    trace = GreedyTrace(config=cfg.to_dict())
    f_norm = luxemburg_norm(f, space)
    trace.residual_norms.append(f_norm)
    if f_norm == 0:
        trace.flags.append("zero_input")
        return trace
    residual, lam = f, f_norm
    coeffs = np.zeros(0)
    selected: list[int] = []
    zero_level = cfg.stop_threshold * f_norm
    for n in range(steps):
        if lam <= zero_level:
            trace.flags.append("converged")
            break
        if target is not None and lam <= target:
            break
        t0 = _now(cfg)
        kernel = _kernel_from_norm(residual, space, lam)
        values = d.analyze(kernel)
        try:
            pick = _pick(values, cfg.tau, set(selected))
        except StagnationError:
            trace.flags.append("stagnation")
            trace.status = "stagnation"
            break
        selected.append(pick)
        warm = np.concatenate([coeffs, [0.0]])
        result = chebyshev_project(f, d, selected, warm, cfg, f_norm=f_norm)
        coeffs, residual, lam = result.coefficients, result.residual, result.norm
        trace.selected.append(pick)
        trace.functional_sups.append(float(np.max(np.abs(values))))
        trace.picked_values.append(float(abs(values[pick])))
        trace.certificates.append(result.certificate)
        trace.residual_norms.append(lam)
        if cfg.record_coefficients:
            trace.coefficients.append(np.array(coeffs, copy=True))
        trace.wall_times.append(None if t0 is None else time.perf_counter() - t0)
        if progress is not None:
            progress(n + 1, pick, lam)
    else:
        if lam <= zero_level:
            trace.flags.append("converged")
    return trace


def iterations_to_target(f: GridFunction, d: Dictionary, cfg: WcgaConfig, target_error: float):
    """Smallest ``n`` with ``||f_n|| <= target_error``, or ``None`` if not reached."""
    if not target_error > 0:
        raise DomainError("target_error must be positive")
    trace = run_wcga(f, d, cfg, target=target_error)
    return first_reaching(trace.residual_norms, target_error)
