"""End-to-end experiments: best N-term errors, Lebesgue sweeps, the
lower-bound construction and log-log scaling fits."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .analysis import PropertyProfile, phi_budget
from .dictionaries import Dictionary, HaarDictionary, build_haar
from .errors import DomainError, FitError, ProjectionError, ResolutionError
from .orlicz import GridFunction, YoungFunction, _kernel_from_norm, luxemburg_norm
from .wcga import SparseElement, WcgaConfig, chebyshev_project, first_reaching, run_wcga

__all__ = [
    "SigmaResult",
    "LowerBoundInstance",
    "FitReport",
    "EXHAUSTIVE_LIMIT",
    "SWEEP_COLUMNS",
    "random_sparse_target",
    "sigma_n_oracle",
    "lebesgue_sweep",
    "lower_bound_instance",
    "lower_bound_run",
    "scaling_fit",
    "thread_count",
]

EXHAUSTIVE_LIMIT = 2_000_000
BEAM_WIDTH = 64
SWEEP_COLUMNS = ("p", "alpha", "tau", "dict", "grid_size", "trunc", "N", "sigma_N",
                 "empirical_phi", "predicted_phi", "residual_at_phi", "flags")


def thread_count() -> int:
    """Worker threads for row-parallel experiments (``WCGALAB_THREADS``, default: all cores)."""
    raw = os.environ.get("WCGALAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise DomainError(f"WCGALAB_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def _ordered_map(fn, items):
    """``map`` over ``items`` on a thread pool; results keep input order."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def random_sparse_target(d: Dictionary, N: int, rng: np.random.Generator,
                         complex_valued: bool = False) -> tuple[SparseElement, GridFunction]:
    """A random ``N``-term combination of atoms with Gaussian coefficients."""
    if N > d.size:
        raise DomainError(f"N = {N} exceeds the dictionary size {d.size}")
    ids = np.sort(rng.choice(d.size, size=N, replace=False))
    coeffs = rng.standard_normal(N)
    if complex_valued:
        coeffs = coeffs + 1j * rng.standard_normal(N)
    element = SparseElement(tuple(ids.tolist()), tuple(coeffs.tolist()))
    return element, d.synthesize(ids, coeffs)


# ---------------------------------------------------------------------------
# best N-term approximation


@dataclass
class SigmaResult:
    N: int
    error: float
    support: tuple
    method: str
    requested: str = ""
    note: str = ""


def _projection_error(f, d, ids, cfg, f_norm, uncertified=None):
    """Distance from ``f`` to ``span(ids)``.

    A projection that cannot certify optimality still yields an upper bound
    on the distance (the norm at its last coefficients); such supports are
    counted in ``uncertified`` when given, and re-raised otherwise.
    """
    if not ids:
        return f_norm
    try:
        return chebyshev_project(f, d, list(ids), None, cfg, f_norm=f_norm).norm
    except ProjectionError as exc:
        if uncertified is None or exc.coefficients is None:
            raise
        uncertified.append(tuple(ids))
        r = f.samples - d.synthesize(list(ids), exc.coefficients).samples
        return luxemburg_norm(f.with_samples(r), d.space)


def _uncertified_note(note, uncertified):
    if not uncertified:
        return note
    extra = f"{len(uncertified)} support(s) scored by an uncertified projection"
    return f"{note}; {extra}" if note else extra


def _ranked_atoms(f: GridFunction, d: Dictionary) -> np.ndarray:
    coeffs = np.abs(d.dual_coefficients(f))
    return np.lexsort((np.arange(d.size), -coeffs))


def sigma_n_oracle(f: GridFunction, d: Dictionary, N: int, method: str = "threshold",
                   cfg: WcgaConfig | None = None, pool: int | None = None) -> SigmaResult:
    """Best ``N``-term error of ``f`` by ``exhaustive``, ``beam`` or ``threshold`` search.

    ``exhaustive`` falls back to ``beam`` when ``C(size, N)`` exceeds
    ``EXHAUSTIVE_LIMIT``; the fallback is recorded in ``note``.  ``beam``
    extends the ``BEAM_WIDTH`` best supports one atom at a time, drawing new
    atoms from the ``pool`` atoms with the largest dual coefficients
    (default ``max(4N + 16, 64)``).
    """
    if int(N) != N or N < 0:
        raise DomainError("N must be a non-negative integer")
    if N > d.size:
        raise DomainError(f"N = {N} exceeds the dictionary size {d.size}")
    if method not in ("exhaustive", "beam", "threshold"):
        raise DomainError(f"unknown method {method!r}")
    cfg = cfg or WcgaConfig()
    f_norm = luxemburg_norm(f, d.space)
    requested, note = method, ""
    if N == 0 or f_norm == 0:
        return SigmaResult(N, f_norm, (), method, requested)
    if method == "exhaustive" and math.comb(d.size, N) > EXHAUSTIVE_LIMIT:
        method = "beam"
        note = f"exhaustive search over C({d.size},{N}) supports exceeds {EXHAUSTIVE_LIMIT}; used beam"
    uncertified = []
    if method == "threshold":
        ids = tuple(sorted(_ranked_atoms(f, d)[:N].tolist()))
        err = _projection_error(f, d, ids, cfg, f_norm, uncertified)
        return SigmaResult(N, err, ids, method, requested, _uncertified_note(note, uncertified))
    if method == "exhaustive":
        best = (math.inf, ())
        for ids in combinations(range(d.size), N):
            err = _projection_error(f, d, ids, cfg, f_norm, uncertified)
            if err < best[0]:
                best = (err, ids)
        return SigmaResult(N, best[0], best[1], method, requested, _uncertified_note(note, uncertified))
    size = pool if pool is not None else max(4 * N + 16, BEAM_WIDTH)
    candidates = _ranked_atoms(f, d)[:min(size, d.size)].tolist()
    beam = [(f_norm, ())]
    for _ in range(N):
        scored = {}
        for _, ids in beam:
            for a in candidates:
                if a in ids:
                    continue
                key = tuple(sorted(ids + (a,)))
                if key not in scored:
                    scored[key] = _projection_error(f, d, key, cfg, f_norm, uncertified)
        beam = sorted(((e, k) for k, e in scored.items()))[:BEAM_WIDTH]
    err, ids = beam[0]
    return SigmaResult(N, err, ids, "beam", requested, _uncertified_note(note, uncertified))


# ---------------------------------------------------------------------------
# Lebesgue sweep


def _dict_label(d: Dictionary) -> tuple[str, str]:
    if isinstance(d, HaarDictionary):
        return "haar", f"W={int(d.width)};J={d.max_level}"
    return "trig", f"max_freq={d.max_freq}"


def lebesgue_sweep(space: YoungFunction, d: Dictionary, cfg: WcgaConfig, targets, N_list,
                   profile: PropertyProfile | None = None, sigma_method: str = "threshold",
                   paired: bool = False, return_traces: bool = False):
    """Empirical iteration counts to reach ``2 sigma_N(f)`` for each (target, N).

    With ``paired`` the i-th target is matched with the i-th ``N``; otherwise
    every target is combined with every ``N``.  The target error is
    ``max(2 sigma_N, stop_threshold ||f||)``, since a residual below the stop
    threshold counts as zero.  Rows that never reach it are flagged
    ``not_reached`` and kept.  With ``return_traces`` the WCGA traces (one
    per target) are returned too.
    """
    if space != d.space:
        raise DomainError("the dictionary is built for a different space")
    targets = list(targets)
    N_list = [int(n) for n in N_list]
    if paired:
        if len(targets) != len(N_list):
            raise DomainError("paired sweep needs one N per target")
        jobs = [(f, [n]) for f, n in zip(targets, N_list)]
    else:
        jobs = [(f, N_list) for f in targets]
    kind, trunc = _dict_label(d)

    def run(job):
        f, ns = job
        f_norm = luxemburg_norm(f, space)
        sigmas = [sigma_n_oracle(f, d, n, sigma_method, cfg) for n in ns]
        goals = [max(2.0 * s.error, cfg.stop_threshold * f_norm) for s in sigmas]
        trace = run_wcga(f, d, cfg, target=min(goals))
        rows = []
        for n, s, goal in zip(ns, sigmas, goals):
            flags = []
            if s.method != s.requested:
                flags.append("sigma_downgraded")
            if "uncertified" in s.note:
                flags.append("sigma_uncertified")
            k = first_reaching(trace.residual_norms, goal)
            if k is None:
                flags.append("not_reached")
            if trace.status != "ok":
                flags.append(trace.status)
            rows.append({
                "p": space.p, "alpha": space.alpha, "tau": cfg.tau, "dict": kind,
                "grid_size": d.grid_size, "trunc": trunc, "N": n, "sigma_N": s.error,
                "empirical_phi": k,
                "predicted_phi": phi_budget(profile, n) if profile is not None else None,
                "residual_at_phi": trace.residual_norms[k] if k is not None else None,
                "flags": ";".join(flags),
            })
        return rows, trace

    out = _ordered_map(run, jobs)
    rows = [row for chunk, _ in out for row in chunk]
    if return_traces:
        return rows, [trace for _, trace in out]
    return rows


# ---------------------------------------------------------------------------
# lower-bound construction


@dataclass
class LowerBoundInstance:
    """``f = sum_{I in A} h_I + b sum_{I in B} h_I`` with unit ``A`` and fine ``B``."""

    N: int
    M: int
    c1: float
    b: float
    f: GridFunction
    coarse_ids: tuple
    fine_ids: tuple
    dictionary: HaarDictionary
    c1_balanced: float
    functional_ratio: float
    metadata: dict = field(default_factory=dict)


def _amplitude(space: YoungFunction, M: int, c1: float) -> float:
    return c1 * math.log(math.e + M) ** (space.alpha * space.p_conj)


def _group_values(d, coarse, fine, f, space):
    values = np.abs(d.analyze(_kernel_from_norm(f, space, luxemburg_norm(f, space))))
    return values[list(coarse)], values[list(fine)]


def lower_bound_instance(space: YoungFunction, N: int, M: int, c1: float | None = None,
                         grid_size: int | None = None, bias: float = 0.10) -> LowerBoundInstance:
    """Build the two-scale function on ``[0, W)``, ``W`` the least power of two above ``N``.

    ``A = {[n, n+1) : n = 1..N}`` and ``B`` are the ``M`` dyadic intervals of
    length ``1/M`` in ``[0, 1)``.  Without ``c1`` the balancing constant
    (equal largest functional values on ``A`` and ``B``) is found by
    bisection and biased by ``bias`` so that ``A`` wins for ``alpha >= 0``
    and ``B`` wins for ``alpha < 0``.
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    if int(M) != M or M < 2 or M & (M - 1):
        raise DomainError("M must be a power of two >= 2")
    N, M = int(N), int(M)
    m = M.bit_length() - 1
    width = 1 << N.bit_length()  # least power of two > N
    need = width * 2 ** (m + 1)
    grid_size = need if grid_size is None else int(grid_size)
    if grid_size < need:
        raise ResolutionError(f"grid_size {grid_size} cannot resolve intervals of length 1/{M}; need {need}")
    d = build_haar(space, width, m, grid_size)
    coarse = tuple(d.index(0, n) for n in range(1, N + 1))
    fine = tuple(d.index(m, k) for k in range(M))
    base_a = d.synthesize(list(coarse), np.ones(N)).samples
    base_b = d.synthesize(list(fine), np.ones(M)).samples

    def build(c):
        return d.grid_function(base_a + _amplitude(space, M, c) * base_b)

    def balance(logc):
        va, vb = _group_values(d, coarse, fine, build(math.exp(logc)), space)
        return math.log(va.max() / vb.max())

    lo, hi = -1.0, 1.0
    while balance(lo) < 0:
        lo -= 2.0
    while balance(hi) > 0:
        hi += 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if balance(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    c1_bal = math.exp(0.5 * (lo + hi))
    if c1 is None:
        c1 = c1_bal * ((1.0 - bias) if space.alpha >= 0 else (1.0 + bias))
    f = build(c1)
    va, vb = _group_values(d, coarse, fine, f, space)
    values = np.concatenate([va, vb])
    ratio = float(values.max() / values.min())
    return LowerBoundInstance(N, M, float(c1), _amplitude(space, M, c1), f, coarse, fine, d,
                              c1_bal, ratio, {"width": width, "max_level": m, "grid_size": grid_size})


def lower_bound_sigma(inst: LowerBoundInstance, cfg: WcgaConfig) -> tuple[float, tuple]:
    """``sigma_M(f)`` over supports of ``j`` coarse plus ``M - j`` fine atoms."""
    d, space = inst.dictionary, inst.dictionary.space
    f_norm = luxemburg_norm(inst.f, space)
    best = (math.inf, ())
    for j in range(0, min(inst.N, inst.M) + 1):
        ids = inst.coarse_ids[:j] + inst.fine_ids[:inst.M - j]
        err = _projection_error(inst.f, d, ids, cfg, f_norm)
        if err < best[0]:
            best = (err, ids)
    return best


def lower_bound_run(inst: LowerBoundInstance, cfg: WcgaConfig) -> dict:
    """Run the WCGA on the instance and check the selection order.

    For ``alpha >= 0`` every coarse atom must precede every fine atom; for
    ``alpha < 0`` the first ``min(M/2, steps)`` picks must be fine.  Records
    the iterations needed to reach ``2 sigma_M(f)``.
    """
    if cfg.tau != 1.0:
        raise DomainError("the lower-bound run uses tau = 1")
    d, space = inst.dictionary, inst.dictionary.space
    sigma, sigma_support = lower_bound_sigma(inst, cfg)
    f_norm = luxemburg_norm(inst.f, space)
    goal = max(2.0 * sigma, cfg.stop_threshold * f_norm)
    trace = run_wcga(inst.f, d, cfg, target=goal)
    iterations = first_reaching(trace.residual_norms, goal)
    coarse, fine = set(inst.coarse_ids), set(inst.fine_ids)
    sel = trace.selected
    violation = None
    if space.alpha >= 0:
        head = sel[:inst.N]
        bad = [n for n, i in enumerate(head) if i not in coarse]
    else:
        bad = [n for n in range(min(inst.M // 2, len(sel))) if sel[n] not in fine]
    order_ok = not bad
    if bad:
        violation = bad[0]
    report = {
        "N": inst.N, "M": inst.M, "c1": inst.c1, "b": inst.b, "sigma_M": sigma,
        "iterations": iterations, "ratio_to_M": (iterations / inst.M) if iterations is not None else None,
        "order_ok": order_ok, "selected": list(sel), "trace": trace,
        "functional_ratio": inst.functional_ratio, "status": "ok" if order_ok else "calibration_failure",
    }
    if violation is not None:
        if violation == 0:
            residual = inst.f
        else:
            residual = inst.f - d.synthesize(sel[:violation], trace.coefficients[violation - 1])
        va, vb = _group_values(d, inst.coarse_ids, inst.fine_ids, residual, space)
        report["violation"] = {"step": violation, "coarse_max": float(va.max()), "fine_max": float(vb.max())}
    return report


# ---------------------------------------------------------------------------
# scaling fits


@dataclass
class FitReport:
    model: str
    exponent: float
    log_exponent: float
    constant: float
    max_relative_residual: float
    rows: int


def _column(table, name):
    if isinstance(table, dict):
        return np.asarray(table[name], dtype=float)
    return np.asarray([row[name] for row in table], dtype=float)


def scaling_fit(table, x_col: str, y_col: str, model: str = "power",
                log_exponent: float | None = None, min_rows: int = 5) -> FitReport:
    """Least squares in log space for ``y = C x^a`` or ``y = C x^a (log(e+x))^b``.

    A fixed ``log_exponent`` pins ``b`` and fits only ``C`` and ``a``.
    """
    if model not in ("power", "power_log"):
        raise FitError(f"unknown model {model!r}")
    try:
        x, y = _column(table, x_col), _column(table, y_col)
    except (KeyError, TypeError, ValueError) as exc:
        raise FitError(f"cannot read columns {x_col!r}, {y_col!r}: {exc}") from None
    if x.size < min_rows:
        raise FitError(f"need at least {min_rows} rows, got {x.size}")
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)) or np.any(x <= 0) or np.any(y <= 0):
        raise FitError("columns must be finite and positive")
    if np.ptp(np.log(x)) == 0:
        raise FitError("x column is constant")
    lx, ly = np.log(x), np.log(y)
    ll = np.log(np.log(math.e + x))
    b = 0.0
    if model == "power_log" and log_exponent is None:
        design = np.column_stack([np.ones_like(lx), lx, ll])
        if np.linalg.matrix_rank(design) < 3:
            raise FitError("columns are degenerate for the power-log model")
        coef = np.linalg.lstsq(design, ly, rcond=None)[0]
        logc, a, b = coef
    else:
        if model == "power_log":
            b = float(log_exponent)
        design = np.column_stack([np.ones_like(lx), lx])
        logc, a = np.linalg.lstsq(design, ly - b * ll, rcond=None)[0]
    pred = logc + a * lx + b * ll
    resid = float(np.max(np.abs(np.expm1(ly - pred))))
    return FitReport(model, float(a), float(b), float(math.exp(logc)), resid, int(x.size))
