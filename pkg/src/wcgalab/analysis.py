"""Structural constants of a (space, dictionary) pair and the iteration budget.

Estimators (moduli of smoothness, ``H(n)``, ``k_N``, the constant in ``Q``)
return sampled lower bounds.  Calibration turns them into a
:class:`PropertyProfile` by fitting a leading constant to the known
asymptotic shapes, and :func:`g_sequence` / :func:`phi_budget` turn a profile
into the number of greedy steps that guarantees a Lebesgue-type inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .dictionaries import Dictionary, HaarDictionary, TrigDictionary, democracy_estimate
from .errors import CalibrationError, DomainError
from .orlicz import GridFunction, YoungFunction, _kernel_from_norm, luxemburg_norm
from .wcga import GreedyTrace, SparseElement, WcgaConfig, chebyshev_project

__all__ = [
    "PropertyProfile",
    "IterationBudget",
    "DQReport",
    "q_function",
    "q_inverse",
    "modulus_smoothness_estimate",
    "figiel_transform",
    "d_q_check",
    "k_n_estimate",
    "h_shape",
    "kn_shape",
    "calibrate_profile",
    "c_tau",
    "g_sequence",
    "summing_sequence",
    "summing_table",
    "budget_formula",
    "phi_budget",
    "predicted_budget_shape",
    "quasi_convex_majorant",
    "quasi_convexity_violations",
    "lemma_dyadic_violations",
    "lemma_summing_bound_violations",
    "superadditivity_violations",
    "gqc_sequence",
    "iteration_inequality_check",
    "seminormalization_check",
    "interpolation_bound",
    "interpolation_slack",
]

# relative slack for comparisons that hold with equality for linear sequences
ROUNDING_SLACK = 1e-12


# ---------------------------------------------------------------------------
# profile records


@dataclass
class PropertyProfile:
    """Calibrated constants for one (space, dictionary) pair.

    ``H[n-1]`` and ``kN[n-1]`` hold ``H(n)`` and ``k_n`` for ``n = 1..len``.
    """

    space: YoungFunction
    q_c0: float
    H: np.ndarray
    kN: np.ndarray
    tau: float = 1.0
    lambda1: float = 2.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.kN = np.asarray(self.kN, dtype=float)
        if not self.q_c0 > 0:
            raise DomainError("q_c0 must be positive")
        if not self.lambda1 > 1:
            raise DomainError("lambda1 must exceed 1")
        if not (0 < self.tau <= 1):
            raise DomainError("tau must lie in (0, 1]")
        if np.any(np.diff(self.H) <= 0):
            raise DomainError("H must be increasing")
        if np.any(self.kN < 1):
            raise DomainError("kN must be >= 1")

    def H_at(self, n: int) -> float:
        if not 1 <= n <= self.H.size:
            raise DomainError(f"H is tabulated for n <= {self.H.size}, got {n}")
        return float(self.H[n - 1])

    def kN_at(self, n: int) -> float:
        if not 1 <= n <= self.kN.size:
            raise DomainError(f"kN is tabulated for n <= {self.kN.size}, got {n}")
        return float(self.kN[n - 1])


@dataclass
class IterationBudget:
    """``G(n)`` for ``n = 1..n_max`` with its summing sequence and budgets.

    ``phi_of_N[N-1]`` is the budget for ``N`` (defined while ``2N <= n_max``)
    and ``beta[N-1]`` the factor ``8 ln[8 (1 + lambda1) k_N / (sqrt(lambda1) - 1)]``.
    """

    G: np.ndarray
    G_tilde: np.ndarray
    beta: np.ndarray
    phi_of_N: np.ndarray
    raw_G: np.ndarray
    majorant_substituted: bool = False
    first_violation: int | None = None
    flags: list = field(default_factory=list)


@dataclass
class DQReport:
    worst_slack: float
    c0_max: float
    pairs: int
    violations: int
    ratios: np.ndarray


# ---------------------------------------------------------------------------
# Q and moduli


def _q_raw(space: YoungFunction, c0: float, s):
    s = np.asarray(s, dtype=float)
    if space.p > 2:
        return c0 * s * s
    q = space.p_conj
    return c0 * s ** q / np.log(math.e + 1.0 / s) ** (q * space.alpha_minus)


def q_function(space: YoungFunction, c0: float, s):
    """``Q(s)``: ``c0 s^p' / (log(e + 1/s))^(p' alpha_-)`` for ``p <= 2``, ``c0 s^2`` for ``p > 2``."""
    if not c0 > 0:
        raise DomainError("c0 must be positive")
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0)) or np.any(s_arr > 1):
        raise DomainError("Q is evaluated for s in (0, 1]")
    out = _q_raw(space, c0, s_arr)
    return float(out) if out.ndim == 0 else out


def q_inverse(space: YoungFunction, c0: float, y: float) -> float:
    """``Q^{-1}(y)`` with the formula for ``Q`` extended to all ``s > 0``."""
    if not (y > 0 and c0 > 0):
        raise DomainError("Q^{-1} needs y > 0 and c0 > 0")
    if space.p > 2:
        return math.sqrt(y / c0)
    g = lambda u: math.log(float(_q_raw(space, c0, math.exp(u)))) - math.log(y)
    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo *= 2
    while g(hi) < 0:
        hi *= 2
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-14))


def _template(obj) -> GridFunction:
    if isinstance(obj, Dictionary):
        return obj.zeros()
    if isinstance(obj, GridFunction):
        return obj
    raise DomainError("expected a Dictionary or a GridFunction template")


def _random_samples(rng, n: int, complex_valued: bool) -> np.ndarray:
    x = rng.standard_normal(n)
    if complex_valued:
        x = x + 1j * rng.standard_normal(n)
    return x


def modulus_smoothness_estimate(space: YoungFunction, template, t: float, trials: int, seed: int) -> float:
    """Sampled lower bound for ``rho(t) = sup (||f + tg|| + ||f - tg||)/2 - 1`` over unit ``f, g``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return 0.0
    base = _template(template)
    cplx = base.domain == "torus"
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        f = base.with_samples(_random_samples(rng, base.grid_size, cplx))
        g = base.with_samples(_random_samples(rng, base.grid_size, cplx))
        f = f * (1.0 / luxemburg_norm(f, space))
        g = g * (1.0 / luxemburg_norm(g, space))
        value = 0.5 * (luxemburg_norm(f + t * g, space) + luxemburg_norm(f - t * g, space)) - 1.0
        best = max(best, value)
    return best


def figiel_transform(rho_samples, s: float) -> float:
    """``max_t (s t / 2 - rho(t))`` over the sampled ``t`` (and ``t = 0``)."""
    if isinstance(rho_samples, dict):
        ts = np.fromiter(rho_samples.keys(), dtype=float)
        rho = np.fromiter(rho_samples.values(), dtype=float)
    else:
        ts, rho = (np.asarray(a, dtype=float) for a in rho_samples)
    if ts.size == 0:
        raise DomainError("rho_samples is empty")
    if s < 0:
        raise DomainError("s must be non-negative")
    return max(0.0, float(np.max(s * ts / 2.0 - rho)))


def _random_element(d: Dictionary, rng) -> GridFunction:
    """Either a random sparse combination plus noise or pure noise."""
    cplx = d.domain == "torus"
    if rng.random() < 0.5:
        k = int(rng.integers(1, min(8, d.size) + 1))
        ids = rng.choice(d.size, size=k, replace=False)
        f = d.synthesize(ids, _random_samples(rng, k, cplx))
        noise = _random_samples(rng, d.grid_size, cplx) * (0.1 * rng.random())
        return f.with_samples(f.samples + noise)
    return d.grid_function(_random_samples(rng, d.grid_size, cplx))


def d_q_check(space: YoungFunction, d: Dictionary, c0: float, trials: int, seed: int,
              cfg: WcgaConfig | None = None) -> DQReport:
    """Check ``dist(f, [phi]) <= ||f|| (1 - Q(|F_f(phi)|))`` on sampled pairs.

    Half of the pairs use the atom maximizing ``|F_f|`` (the pairs the greedy
    step produces), the rest a uniformly random atom.  ``c0_max`` is the
    largest constant for which every sampled pair passes, capped so that
    ``Q(1) <= 1``.
    """
    if space != d.space:
        raise DomainError("the dictionary is built for a different space")
    cfg = cfg or WcgaConfig(projection_tolerance=1e-10)
    rng = np.random.default_rng(seed)
    worst = math.inf
    ratios, violations = [], 0
    for _ in range(trials):
        f = _random_element(d, rng)
        fn = luxemburg_norm(f, space)
        values = d.analyze(_kernel_from_norm(f, space, fn))
        i = int(np.argmax(np.abs(values))) if rng.random() < 0.5 else int(rng.integers(d.size))
        F = float(abs(values[i]))
        dist = chebyshev_project(f, d, [i], None, cfg, f_norm=fn).norm
        gain = 1.0 - dist / fn
        if F > 0:
            q = float(_q_raw(space, c0, min(F, 1.0)))
            slack = fn * (1.0 - q) - dist
            ratios.append(gain / float(_q_raw(space, 1.0, min(F, 1.0))))
        else:
            slack = fn - dist
        worst = min(worst, slack / fn)
        violations += slack < -ROUNDING_SLACK * fn
    ratios = np.array(ratios)
    cap = 1.0 / float(_q_raw(space, 1.0, 1.0))
    c0_max = min(float(ratios.min()) if ratios.size else math.inf, cap)
    return DQReport(worst, c0_max, trials, violations, ratios)


# ---------------------------------------------------------------------------
# k_N and H


def _rudin_shapiro(n: int) -> np.ndarray:
    k = np.arange(n)
    pairs = np.zeros(n, dtype=np.int64)
    x = k.copy()
    while np.any(x):
        pairs += (x & 3) == 3
        x >>= 1
    return np.where(pairs % 2 == 0, 1.0, -1.0)


def _trig_structured(d: TrigDictionary, N: int, space: YoungFunction):
    """(A, B, coefficients on B) triples exhibiting large ``||S_A||``."""
    out = []
    length = min(2 * N, 2 * d.max_freq + 1)
    half = length // 2
    freqs = np.arange(-half, -half + length)
    ids = np.array([d.index(int(n)) for n in freqs])
    signs = _rudin_shapiro(length)
    positive = np.flatnonzero(signs > 0)[:N]
    # flat polynomial on B, keep its positive part: peaks like a Dirichlet kernel
    out.append((ids[positive], ids, signs))
    # Dirichlet kernel on B, keep a flat half
    out.append((ids[positive], ids, np.ones(length)))
    # shrink the rest of B to its norm-minimizing scale (convex in t)
    rest = np.ones(length, dtype=bool)
    rest[positive] = False
    if np.any(rest):
        head = d.synthesize(ids[~rest], signs[~rest])
        tail = d.synthesize(ids[rest], signs[rest])
        res = optimize.minimize_scalar(
            lambda t: luxemburg_norm(head.with_samples(head.samples + t * tail.samples), space),
            bounds=(0.0, 2.0), method="bounded", options={"xatol": 1e-4})
        out.append((ids[positive], ids, np.where(rest, res.x * signs, signs)))
    return out


def k_n_estimate(d: Dictionary, space: YoungFunction, N: int, trials: int, seed: int) -> float:
    """Sampled lower bound for ``k_N = sup ||sum_A a phi|| / ||sum_B a phi||`` over ``A subset B``, ``|A| <= N``."""
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    if N > d.size:
        raise DomainError(f"N = {N} exceeds the dictionary size {d.size}")
    cplx = d.domain == "torus"
    rng = np.random.default_rng(seed)
    candidates = []
    if isinstance(d, TrigDictionary):
        candidates.extend(_trig_structured(d, N, space))
    for _ in range(trials):
        size_b = int(rng.integers(N, min(d.size, 4 * N) + 1))
        b_ids = rng.choice(d.size, size=size_b, replace=False)
        size_a = int(rng.integers(1, N + 1))
        a_ids = rng.choice(b_ids, size=size_a, replace=False)
        candidates.append((a_ids, b_ids, _random_samples(rng, size_b, cplx)))
    best = 1.0
    for a_ids, b_ids, coeffs in candidates:
        lookup = dict(zip(b_ids.tolist(), coeffs))
        num = luxemburg_norm(d.synthesize(a_ids, np.array([lookup[i] for i in a_ids.tolist()])), space)
        den = luxemburg_norm(d.synthesize(b_ids, coeffs), space)
        if den > 0:
            best = max(best, num / den)
    return best


def h_shape(space: YoungFunction, kind: str, n):
    """Asymptotic shape of ``H(n)`` (without the leading constant)."""
    n = np.asarray(n, dtype=float)
    lg = np.log(math.e + n)
    if kind == "haar":
        return n ** (1.0 / space.p_conj) * lg ** space.alpha_plus
    if kind == "trig":
        return np.maximum(np.sqrt(n), n ** (1.0 / space.p) * lg ** (-space.alpha))
    raise DomainError(f"unknown dictionary kind {kind!r}")


def kn_shape(space: YoungFunction, kind: str, n):
    """Asymptotic shape of ``k_N``: constant for Haar, a power-log for trig."""
    n = np.asarray(n, dtype=float)
    if kind == "haar":
        return np.ones_like(n)
    if kind != "trig":
        raise DomainError(f"unknown dictionary kind {kind!r}")
    lg = np.log(math.e + n)
    p, a = space.p, space.alpha
    if p > 2 or (p == 2 and a >= 0):
        return n ** (0.5 - 1.0 / p) * lg ** a
    return n ** (1.0 / p - 0.5) * lg ** (-a)


def calibrate_profile(space: YoungFunction, d: Dictionary, tau: float = 1.0, lambda1: float = 2.0,
                      n_max: int = 1024, fit_points=(4, 16, 64), q_trials: int = 500,
                      h_trials: int = 8, k_trials: int = 8, seed: int = 0) -> PropertyProfile:
    """Fit ``Q``, ``H`` and ``k_N`` for ``(space, d)`` and tabulate them up to ``n_max``.

    ``c0`` is the largest constant passing :func:`d_q_check` on ``q_trials``
    pairs.  ``H`` and ``k_N`` are the closed-form shapes times the largest
    ratio estimate/shape over ``fit_points`` (points beyond the dictionary
    size are skipped); ``H(1) >= 1`` and ``k_N >= 1`` are enforced.
    """
    report = d_q_check(space, d, 1.0, q_trials, seed)
    if not report.c0_max > 0:
        raise CalibrationError("no positive c0 passes the sampled D(Q) check")
    points = [n for n in fit_points if n <= d.size]
    h_meas = {n: democracy_estimate(d, n, h_trials, seed + 1 + n) for n in points}
    k_meas = {n: k_n_estimate(d, space, n, k_trials, seed + 2 + n) for n in points}
    c_h = max([h_meas[n] / float(h_shape(space, d.kind, n)) for n in points] +
              [1.0 / float(h_shape(space, d.kind, 1))])
    c_k = max([k_meas[n] / float(kn_shape(space, d.kind, n)) for n in points] + [1.0])
    ns = np.arange(1, n_max + 1)
    H = c_h * h_shape(space, d.kind, ns)
    kN = np.maximum(c_k * kn_shape(space, d.kind, ns), 1.0)
    meta = {
        "seed": seed,
        "q_trials": q_trials,
        "h_trials": h_trials,
        "k_trials": k_trials,
        "fit_points": points,
        "H_constant": c_h,
        "kN_constant": c_k,
        "H_measured": {str(n): v for n, v in h_meas.items()},
        "kN_measured": {str(n): v for n, v in k_meas.items()},
        "dq_worst_slack": report.worst_slack,
        "dictionary": d.describe(),
    }
    return PropertyProfile(space, report.c0_max, H, kN, tau, lambda1, meta)


# ---------------------------------------------------------------------------
# budgets and sequences


def c_tau(tau: float, lam: float, sqrt: bool = True) -> float:
    """``tau/2 (1 - 1/sqrt(lam))`` (budget form) or ``tau/2 (1 - 1/lam)``."""
    return 0.5 * tau * (1.0 - 1.0 / (math.sqrt(lam) if sqrt else lam))


def _g_raw(profile: PropertyProfile, n_max: int, ctau: float) -> np.ndarray:
    if n_max > profile.H.size:
        raise DomainError(f"H is tabulated up to {profile.H.size}, need {n_max}")
    arg = ctau / profile.H[:n_max]
    if np.any(arg <= 0) or np.any(arg > 1):
        raise CalibrationError("Q argument c(tau)/H(n) leaves (0, 1]; H is too small")
    return 1.0 / _q_raw(profile.space, profile.q_c0, arg)


def quasi_convexity_violations(G, slack: float = ROUNDING_SLACK) -> np.ndarray:
    """Indices ``k`` (1-based) where ``G(k)/k > G(k+1)/(k+1)`` beyond rounding."""
    G = np.asarray(G, dtype=float)
    r = G / np.arange(1, G.size + 1)
    bad = r[:-1] > r[1:] * (1.0 + slack)
    return np.flatnonzero(bad) + 1


def quasi_convex_majorant(G) -> np.ndarray:
    """Smallest 1-quasi-convex majorant ``k max_{j <= k} G(j)/j``."""
    G = np.asarray(G, dtype=float)
    k = np.arange(1, G.size + 1)
    return k * np.maximum.accumulate(G / k)


def summing_table(w) -> np.ndarray:
    """``[tw(1), ..., tw(n)]`` with ``tw(n) = sum_{j <= n} w(j)/j``."""
    w = np.asarray(w, dtype=float)
    terms = w / np.arange(1, w.size + 1)
    out = np.empty_like(terms)
    acc = 0.0
    comp = 0.0
    # compensated running sum keeps every prefix as accurate as fsum
    for i, x in enumerate(terms):
        y = x - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        out[i] = acc
    return out


def summing_sequence(w, n: int) -> float:
    """``tw(n) = sum_{j=1}^n w(j)/j`` where ``w[0] = w(1)``."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if n > len(w):
        raise DomainError(f"w has {len(w)} terms, need {n}")
    w = np.asarray(w, dtype=float)[:n]
    if np.any(w <= 0):
        raise DomainError("w must be positive")
    return math.fsum(w / np.arange(1, n + 1))


def budget_formula(lambda1: float, k_n: float, g_2n: float) -> int:
    """``ceil(8 ln[8 (1 + lambda1) k_N / (sqrt(lambda1) - 1)] G(2N))``."""
    if not lambda1 > 1:
        raise DomainError("lambda1 must exceed 1")
    beta = 8.0 * math.log(8.0 * (1.0 + lambda1) * k_n / (math.sqrt(lambda1) - 1.0))
    return int(math.ceil(beta * g_2n))


def g_sequence(profile: PropertyProfile, n_max: int) -> IterationBudget:
    """``G(n) = 1 / Q(c(tau)/H(n))`` for ``n <= n_max`` plus budgets for ``2N <= n_max``.

    When the computed ``G`` is not 1-quasi-convex it is replaced by its
    quasi-convex majorant and the substitution is flagged.
    """
    if int(n_max) != n_max or n_max < 1:
        raise DomainError("n_max must be a positive integer")
    raw = _g_raw(profile, n_max, c_tau(profile.tau, profile.lambda1))
    flags = []
    bad = quasi_convexity_violations(raw)
    G = raw
    first = int(bad[0]) if bad.size else None
    if bad.size:
        G = quasi_convex_majorant(raw)
        flags.append("quasi_convex_majorant")
    if G[0] < 1:
        flags.append("G(1)<1")
    n_budget = n_max // 2
    beta = np.array([8.0 * math.log(8.0 * (1.0 + profile.lambda1) * profile.kN_at(N)
                                    / (math.sqrt(profile.lambda1) - 1.0))
                     for N in range(1, n_budget + 1)])
    phi = np.array([budget_formula(profile.lambda1, profile.kN_at(N), G[2 * N - 1])
                    for N in range(1, n_budget + 1)], dtype=np.int64)
    return IterationBudget(G, summing_table(G), beta, phi, raw, bool(bad.size), first, flags)


def phi_budget(profile: PropertyProfile, N: int) -> int:
    """``ceil(8 ln[8 (1 + lambda1) k_N / (sqrt(lambda1) - 1)] G(2N))``."""
    if not profile.lambda1 > 1:
        raise DomainError("lambda1 must exceed 1")
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    budget = g_sequence(profile, 2 * N)
    return int(budget.phi_of_N[N - 1])


def predicted_budget_shape(space: YoungFunction, kind: str, N):
    """Closed-form growth of the budget (no leading constant).

    Haar: ``N^(2/p') (log(e+N))^(2 alpha_+)`` for ``p > 2`` and
    ``N (log(e+N))^(p'|alpha|)`` for ``p <= 2``.  Trig: the five regimes of
    the trigonometric budget, with ``log`` evaluated at ``N >= 2``.
    """
    N = np.asarray(N, dtype=float)
    p, a, q = space.p, space.alpha, space.p_conj
    if kind == "haar":
        lg = np.log(math.e + N)
        if p > 2:
            return N ** (2.0 / q) * lg ** (2 * space.alpha_plus)
        return N * lg ** (q * abs(a))
    if kind != "trig":
        raise DomainError(f"unknown dictionary kind {kind!r}")
    if np.any(N < 2):
        raise DomainError("the trig shapes are stated for N >= 2")
    ln = np.log(N)
    if p > 2:
        return N * ln
    if p == 2 and a > 0:
        return N * np.log(ln)
    if p == 2 and a == 0:
        return N
    if p == 2:
        return N * ln ** (4 * space.alpha_minus) * np.log(ln)
    return N ** (q - 1) * ln ** (q * space.alpha_minus) / ln ** (q * a) * ln


def lemma_dyadic_violations(w, N_max: int, through_block: bool = False) -> list:
    """``N <= N_max`` where ``sum_{2^j <= N} w(2^j) < 2 tw(N)`` fails.

    The literal inequality can fail for non-decreasing ``w`` that grow faster
    than linearly (``w(n) = n^2``, ``N = 4``).  With ``through_block`` the
    right side is ``2 tw(2^(J+1) - 1)``, ``2^J <= N < 2^(J+1)``, which always
    holds; ``w`` then needs ``2^(J+1) - 1`` terms.
    """
    w = np.asarray(w, dtype=float)
    top = (1 << int(N_max).bit_length()) - 1 if through_block else N_max
    if w.size < top:
        raise DomainError(f"w needs {top} terms")
    tw = summing_table(w[:top])
    bad, dyadic, nxt, j = [], 0.0, 1, 0
    for N in range(1, N_max + 1):
        while nxt <= N:
            dyadic = math.fsum([dyadic, w[nxt - 1]])
            j += 1
            nxt = 2 ** j
        bound = tw[nxt - 2] if through_block else tw[N - 1]
        if not dyadic < 2.0 * bound:
            bad.append(N)
    return bad


def lemma_summing_bound_violations(w, N_max: int, slack: float = ROUNDING_SLACK) -> list:
    """``N <= N_max`` where ``tw(N) <= w(N)`` fails beyond rounding."""
    w = np.asarray(w, dtype=float)[:N_max]
    tw = summing_table(w)
    return (np.flatnonzero(tw > w * (1.0 + slack)) + 1).tolist()


def superadditivity_violations(w, n_max: int, slack: float = ROUNDING_SLACK) -> list:
    """Pairs ``(M, N)``, ``M, N <= n_max``, where ``tw(M+N) >= tw(M) + tw(N)`` fails."""
    w = np.asarray(w, dtype=float)
    if w.size < 2 * n_max:
        raise DomainError(f"w needs {2 * n_max} terms")
    tw = summing_table(w[:2 * n_max])
    m = np.arange(1, n_max + 1)
    lhs = tw[(m[:, None] + m[None, :]) - 1]
    rhs = tw[m - 1][:, None] + tw[m - 1][None, :]
    bad = np.argwhere(lhs < rhs * (1.0 - slack))
    return [(int(i) + 1, int(j) + 1) for i, j in bad]


def gqc_sequence(p: float, alpha: float, k_max: int, c: float | None = None) -> np.ndarray:
    """``G(k) = k^p (log(c + k))^alpha`` for ``k = 1..k_max``.

    The default ``c`` makes ``t -> t^(p-1) (log(c+t))^alpha`` non-decreasing,
    which is what 1-quasi-convexity needs.
    """
    if c is None:
        c = math.e if alpha >= 0 else math.exp(max(math.e, abs(alpha) / max(p - 1.0, 1e-12)))
    k = np.arange(1, k_max + 1, dtype=float)
    return k ** p * np.log(c + k) ** alpha


# ---------------------------------------------------------------------------
# diagnostics


def iteration_inequality_check(trace: GreedyTrace, target: SparseElement, profile: PropertyProfile,
                               m: int, M: int, A, B, f: GridFunction, d: Dictionary,
                               lam: float | None = None) -> dict:
    """Slack ``LHS / RHS`` of ``||f_{m+M}|| <= e^{-M/G(|A|)} ||f_m|| + lam (||f - Phi|| + ||Phi_B||)``.

    ``G`` uses ``c(tau) = tau/2 (1 - 1/lam)``.  ``A`` and ``B`` must split
    ``T \\ Gamma_k`` for some ``k < m``.  Reported, never asserted.
    """
    lam = profile.lambda1 if lam is None else lam
    if not lam > 1:
        raise DomainError("lam must exceed 1")
    n_steps = len(trace.residual_norms) - 1
    if m < 0 or M < 0 or m + M > n_steps:
        raise DomainError(f"m + M = {m + M} exceeds the trace length {n_steps}")
    A, B = set(int(i) for i in A), set(int(i) for i in B)
    if not A or A & B:
        raise DomainError("A must be nonempty and disjoint from B")
    support = set(target.support)
    ks = [k for k in range(m) if A | B == support - set(trace.selected[:k])]
    if not ks:
        raise DomainError("A and B do not split T minus Gamma_k for any k < m")
    space = d.space
    G = _g_raw(profile, len(A), c_tau(profile.tau, lam, sqrt=False))
    G = quasi_convex_majorant(G)[len(A) - 1]
    phi_el = target.render(d)
    err = luxemburg_norm(f - phi_el, space)
    phi_b = luxemburg_norm(target.restrict(B).render(d), space) if B else 0.0
    lhs = trace.residual_norms[m + M]
    rhs = math.exp(-M / G) * trace.residual_norms[m] + lam * (err + phi_b)
    return {"m": m, "M": M, "k": ks[0], "G": float(G), "lhs": lhs, "rhs": rhs,
            "slack": lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)}


def seminormalization_check(d: Dictionary, profile: PropertyProfile) -> dict:
    """Atoms whose norm leaves ``[1/H(1), Q^{-1}(1)]``."""
    norms = d.atom_norms()
    lower = 1.0 / profile.H_at(1)
    upper = q_inverse(profile.space, profile.q_c0, 1.0)
    bad = [(int(i), float(norms[i])) for i in range(norms.size)
           if norms[i] < lower * (1 - 1e-12) or norms[i] > upper * (1 + 1e-12)]
    return {"lower": lower, "upper": upper, "min_norm": float(norms.min()),
            "max_norm": float(norms.max()), "violations": bad, "ok": not bad}


# ---------------------------------------------------------------------------
# interpolation between L^2 and L^infinity


def interpolation_bound(f: GridFunction, space: YoungFunction, exponent: float | None = None) -> float:
    """``||f||_inf^(1-2/p) (log(c + (||f||_inf/||f||_2)^e))^alpha ||f||_2^(2/p)``.

    The exponent ``e`` inside the logarithm defaults to ``p/2``; passing
    ``2/p`` gives the variant produced by the substitution ``a(t) = t^(2/p)``.
    """
    p, alpha = space.p, space.alpha
    sup, l2 = f.sup_norm(), f.l2_norm()
    if sup == 0:
        return 0.0
    e = p / 2.0 if exponent is None else float(exponent)
    return sup ** (1.0 - 2.0 / p) * math.log(space.c + (sup / l2) ** e) ** alpha * l2 ** (2.0 / p)


def interpolation_slack(f: GridFunction, space: YoungFunction, exponent: float | None = None) -> float:
    """Relative slack ``(bound - ||f||) / bound`` of :func:`interpolation_bound` (0 for ``f = 0``)."""
    bound = interpolation_bound(f, space, exponent)
    if bound == 0:
        return 0.0
    return (bound - luxemburg_norm(f, space)) / bound
