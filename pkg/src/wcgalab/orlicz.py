"""Young functions of L^p(log L)^alpha type and norms of sampled functions.

The Young function is

    Phi(t) = int_0^t s^(p-1) (log(c + s))^(alpha p) ds,

whose derivative is available in closed form.  ``Phi`` itself is tabulated
once per ``(p, alpha, c)`` on a log-spaced grid and read back through a cubic
Hermite interpolant of ``log Phi`` against ``log t`` that uses the exact
slopes ``t Phi'(t) / Phi(t)``.  All norm computations go through that table;
:func:`young_eval` integrates directly and serves as the reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize

from .errors import DomainError, ShapeError, UndefinedFunctionalError

__all__ = [
    "YoungFunction",
    "GridFunction",
    "FunctionalKernel",
    "default_c",
    "young_eval",
    "young_complementary",
    "quadrature",
    "luxemburg_norm",
    "orlicz_dual_norm",
    "norming_functional",
    "pairing",
]

TABLE_SIZE = 4096
TABLE_LOG10_RANGE = (-12.0, 12.0)
_GAUSS_NODES, _GAUSS_WEIGHTS = leggauss(16)


def default_c(p: float, alpha: float) -> float:
    """Regularization constant inside the logarithm.

    ``e`` for ``alpha >= 0``.  For negative ``alpha`` the constant must make
    ``t^(p-1) (log(c+t))^(alpha p)`` non-decreasing, which holds as soon as
    ``(p-1) log c >= |alpha| p``.
    """
    if alpha >= 0:
        return math.e
    a = abs(alpha) * p
    return math.exp(max(math.e, 2.0 * a, a / (p - 1.0)))


class _LogTable:
    """Cubic Hermite table of ``log Phi`` on a uniform grid in ``log t``."""

    def __init__(self, p: float, alpha: float, c: float, size: int, log10_range):
        self.p, self.alpha, self.c = p, alpha, c
        lo, hi = (x * math.log(10.0) for x in log10_range)
        u = np.linspace(lo, hi, size)
        t = np.exp(u)
        a, b = t[:-1], t[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * _GAUSS_NODES[None, :]
        panels = (half[:, None] * _GAUSS_WEIGHTS[None, :] * self.dphi(nodes)).sum(axis=1)
        head = integrate.quad(self.dphi, 0.0, t[0], epsrel=1e-13, epsabs=0.0)[0]
        values = head + np.concatenate(([0.0], np.cumsum(panels)))
        self.u = u
        self.du = u[1] - u[0]
        self.y = np.log(values)
        self.m = t * self.dphi(t) / values
        self.dphi_nodes = self.dphi(t)

    def dphi(self, t):
        t = np.asarray(t, dtype=float)
        return t ** (self.p - 1.0) * np.log(self.c + t) ** (self.alpha * self.p)

    def _cell(self, uq):
        i = np.clip(((uq - self.u[0]) / self.du).astype(np.int64), 0, self.u.size - 2)
        s = (uq - self.u[i]) / self.du
        return i, s

    def log_phi(self, uq):
        uq = np.asarray(uq, dtype=float)
        i, s = self._cell(uq)
        du, y, m = self.du, self.y, self.m
        s2 = s * s
        out = ((1 + 2 * s) * (1 - s) ** 2 * y[i] + s * (1 - s) ** 2 * du * m[i]
               + s2 * (3 - 2 * s) * y[i + 1] + s2 * (s - 1) * du * m[i + 1])
        below, above = uq < self.u[0], uq > self.u[-1]
        if below.any():
            out = np.where(below, y[0] + m[0] * (uq - self.u[0]), out)
        if above.any():
            out = np.where(above, y[-1] + m[-1] * (uq - self.u[-1]), out)
        return out

    def log_phi_slope(self, uq):
        uq = np.asarray(uq, dtype=float)
        i, s = self._cell(uq)
        du, y, m = self.du, self.y, self.m
        out = ((6 * s * s - 6 * s) * (y[i] - y[i + 1]) / du
               + (3 * s * s - 4 * s + 1) * m[i] + (3 * s * s - 2 * s) * m[i + 1])
        out = np.where(uq < self.u[0], m[0], out)
        return np.where(uq > self.u[-1], m[-1], out)

    def inverse_log(self, v):
        """Solve ``log_phi(u) = v`` for ``u``."""
        v = np.asarray(v, dtype=float)
        u = np.interp(v, self.y, self.u)
        u = np.where(v < self.y[0], self.u[0] + (v - self.y[0]) / self.m[0], u)
        u = np.where(v > self.y[-1], self.u[-1] + (v - self.y[-1]) / self.m[-1], u)
        for _ in range(4):
            u = u - (self.log_phi(u) - v) / self.log_phi_slope(u)
        return u


@lru_cache(maxsize=64)
def _table(p: float, alpha: float, c: float) -> _LogTable:
    return _LogTable(p, alpha, c, TABLE_SIZE, TABLE_LOG10_RANGE)


@dataclass(frozen=True)
class YoungFunction:
    """The Young function of ``L^p(log L)^alpha`` with log offset ``c``."""

    p: float
    alpha: float
    c: float | None = None

    def __post_init__(self):
        p, alpha = float(self.p), float(self.alpha)
        if not (math.isfinite(p) and p > 1.0):
            raise DomainError(f"p must be a finite number > 1, got {self.p!r}")
        if not math.isfinite(alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha!r}")
        c = default_c(p, alpha) if self.c is None else float(self.c)
        if not (math.isfinite(c) and c >= math.e * (1 - 1e-15)):
            raise DomainError(f"c must be >= e, got {self.c!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "c", c)
        if np.any(np.diff(self._table.dphi_nodes) < 0):
            raise DomainError(
                f"Phi is not convex for (p, alpha, c) = ({p}, {alpha}, {c}); increase c")

    @cached_property
    def _table(self) -> _LogTable:
        return _table(self.p, self.alpha, self.c)

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def alpha_plus(self) -> float:
        return max(self.alpha, 0.0)

    @property
    def alpha_minus(self) -> float:
        return max(-self.alpha, 0.0)

    def derivative(self, t):
        """Closed-form ``Phi'(t) = t^(p-1) (log(c+t))^(alpha p)``."""
        return self._table.dphi(t)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        if np.all(pos):
            return np.exp(self._table.log_phi(np.log(t)))
        out[pos] = np.exp(self._table.log_phi(np.log(t[pos])))
        return out

    def inverse(self, y):
        """``Phi^{-1}(y)`` for ``y >= 0``."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(self._table.inverse_log(np.log(y[pos])))
        return out if out.ndim else float(out)

    def fundamental(self, t):
        """Fundamental function ``1 / Phi^{-1}(1/t)`` of ``L^Phi``."""
        t = np.asarray(t, dtype=float)
        return 1.0 / self.inverse(1.0 / t)

    def conjugate_derivative(self, s):
        """``(Phi')^{-1}(s)``, i.e. the maximizer ``t*`` in ``sup_t (ts - Phi(t))``."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        if not pos.any():
            return out
        ls = np.log(s[pos])
        p, ap, logc = self.p, self.alpha * self.p, math.log(self.c)
        # g(u) = (p-1) u + ap * log(log(c + e^u)) - log s is increasing in u
        u = (ls - ap * math.log(math.log(self.c + 1.0))) / (p - 1.0)
        for _ in range(60):
            lc = np.logaddexp(logc, u)
            g = (p - 1.0) * u + ap * np.log(lc) - ls
            dg = (p - 1.0) + ap * np.exp(u - lc) / lc
            step = g / dg
            u = u - step
            if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(u))):
                break
        out[pos] = np.exp(u)
        return out

    def conjugate(self, s):
        """Complementary function ``Psi(s) = sup_t (ts - Phi(t))``."""
        s = np.asarray(s, dtype=float)
        t = self.conjugate_derivative(s)
        return np.maximum(s * t - self(t), 0.0)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a complex function at the midpoints of a uniform grid.

    ``domain`` is ``"interval"`` (``[0, width)``, ``width`` a positive integer)
    or ``"torus"`` (``[-pi, pi)``).  Integrals use the midpoint rule.
    """

    domain: str
    width: float
    samples: np.ndarray

    def __post_init__(self):
        if self.domain not in ("interval", "torus"):
            raise DomainError(f"unknown domain {self.domain!r}")
        samples = np.array(self.samples)
        if samples.dtype.kind not in "fc":
            samples = samples.astype(float)
        if samples.ndim != 1:
            raise ShapeError("samples must be one-dimensional")
        n = samples.size
        if n < 1 or n & (n - 1):
            raise DomainError(f"grid_size must be a power of two, got {n}")
        if not np.all(np.isfinite(samples)):
            raise DomainError("samples must be finite")
        if self.domain == "torus":
            width = 2.0 * math.pi
        else:
            width = float(self.width)
            if width <= 0 or width != int(width):
                raise DomainError(f"interval width must be a positive integer, got {self.width!r}")
        samples.setflags(write=False)
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def interval(cls, width, samples) -> "GridFunction":
        return cls("interval", width, samples)

    @classmethod
    def torus(cls, samples) -> "GridFunction":
        return cls("torus", 2.0 * math.pi, samples)

    @classmethod
    def zeros(cls, domain: str, width: float, grid_size: int) -> "GridFunction":
        return cls(domain, width, np.zeros(grid_size))

    @property
    def grid_size(self) -> int:
        return self.samples.size

    @property
    def step(self) -> float:
        return self.width / self.samples.size

    @property
    def start(self) -> float:
        return -math.pi if self.domain == "torus" else 0.0

    @property
    def points(self) -> np.ndarray:
        return self.start + (np.arange(self.grid_size) + 0.5) * self.step

    def same_grid(self, other: "GridFunction") -> bool:
        return (self.domain == other.domain and self.width == other.width
                and self.grid_size == other.grid_size)

    def check_grid(self, other: "GridFunction") -> None:
        if not self.same_grid(other):
            raise ShapeError(
                f"grid mismatch: {self.domain}[{self.width}]x{self.grid_size} vs "
                f"{other.domain}[{other.width}]x{other.grid_size}")

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(self.domain, self.width, samples)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def l2_norm(self) -> float:
        return math.sqrt(self.step * float(np.sum(np.abs(self.samples) ** 2)))

    def __add__(self, other):
        self.check_grid(other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other):
        self.check_grid(other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, scalar):
        return self.with_samples(self.samples * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_samples(-self.samples)


@dataclass(frozen=True, eq=False)
class FunctionalKernel:
    """Integral kernel ``K`` of a norming functional, ``F(g) = int K g``."""

    base: GridFunction
    norm_of_source: float


def young_eval(phi: YoungFunction, t: float) -> float:
    """``Phi(t)`` by adaptive quadrature of the closed-form derivative."""
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"Phi is defined for finite t >= 0, got {t!r}")
    if t == 0:
        return 0.0
    # split at 1 so that quad resolves both the power behaviour and the tail
    pieces = [0.0, min(t, 1.0)] + ([t] if t > 1 else [])
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        total += integrate.quad(phi.derivative, a, b, epsrel=1e-13, epsabs=0.0, limit=200)[0]
    return total


def young_complementary(phi: YoungFunction, s: float) -> float:
    """``Psi(s) = sup_t (ts - Phi(t))`` via a bracketed root of ``Phi'(t) = s``."""
    s = float(s)
    if not math.isfinite(s) or s < 0:
        raise DomainError(f"Psi is defined for finite s >= 0, got {s!r}")
    if s == 0:
        return 0.0
    ls = math.log(s)

    def g(u):
        return float(np.log(phi.derivative(math.exp(u)))) - ls

    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo -= 2.0 * abs(lo)
    while g(hi) < 0:
        hi += 2.0 * abs(hi)
    t = math.exp(optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return t * s - young_eval(phi, t)


def quadrature(f: GridFunction, values=None) -> complex | float:
    """Midpoint-rule integral of ``values`` (default: ``f``'s samples) on ``f``'s grid."""
    v = f.samples if values is None else np.asarray(values)
    total = f.step * np.sum(v)
    return complex(total) if np.iscomplexobj(total) else float(total)


def _modular_root(a: np.ndarray, h: float, fun, dfun, w0: float) -> float:
    """Solve ``sum h fun(a e^{-w}) = 1`` for ``w`` by safeguarded Newton.

    ``a`` holds positive values only.  The left side is strictly decreasing
    in ``w``; the root is bracketed first, then refined with Newton steps on
    ``log`` of the left side, falling back to bisection when a step leaves the
    bracket.
    """

    def g(w):
        x = a * math.exp(-w)
        s = h * float(np.sum(fun(x)))
        ds = -h * float(np.sum(dfun(x) * x))
        return math.log(s), ds / s

    # log of the modular is convex and decreasing in w for these Young
    # functions, so plain Newton approaches the root from the left after its
    # first step; any sign of trouble falls through to the bracketed search
    w = w0
    gw, dgw = g(w)
    for k in range(40):
        if gw == 0:
            return w
        if not (dgw < 0 and math.isfinite(gw)) or (k > 0 and gw < 0):
            break
        wn = w - gw / dgw
        if abs(wn - w) <= 4e-16 * max(1.0, abs(w)):
            return wn
        w = wn
        gw, dgw = g(w)
    lo = hi = None
    step = 1.0
    while True:
        if gw > 0:
            lo = (w, gw)
            if hi is not None:
                break
            w += step
        elif gw < 0:
            hi = (w, gw)
            if lo is not None:
                break
            w -= step
        else:
            return w
        step *= 2.0
        gw, dgw = g(w)
    # start from the bracket end closer to the root
    w, gw = (lo if abs(lo[1]) < abs(hi[1]) else hi)
    wl, wh = lo[0], hi[0]
    gw, dgw = g(w)
    for _ in range(200):
        if gw == 0:
            return w
        if gw > 0:
            wl = w
        else:
            wh = w
        wn = w - gw / dgw if dgw < 0 else None
        if wn is None or not (min(wl, wh) < wn < max(wl, wh)):
            wn = 0.5 * (wl + wh)
        if abs(wn - w) <= 4e-16 * max(1.0, abs(w)):
            return wn
        w = wn
        gw, dgw = g(w)
    return w


def luxemburg_norm(f: GridFunction, phi: YoungFunction, guess: float | None = None) -> float:
    """``inf{lam > 0 : int Phi(|f| / lam) <= 1}`` on ``f``'s grid.

    ``guess`` is an optional starting value for the root search (the result
    does not depend on it).
    """
    a = np.abs(f.samples)
    if not np.all(np.isfinite(a)):
        raise DomainError("samples must be finite")
    a = a[a > 0]
    if a.size == 0:
        return 0.0
    if guess is None or not guess > 0:
        # power-law scale; the root search does not need a bracket to start
        guess = float(a.max()) * (a.size * f.step) ** (1.0 / phi.p)
    w = _modular_root(a, f.step, phi, phi.derivative, math.log(guess))
    return math.exp(w)


def _amemiya(a: np.ndarray, h: float, phi: YoungFunction, logk: float) -> float:
    k = math.exp(logk)
    return (1.0 + h * float(np.sum(phi.conjugate(k * a)))) / k


def orlicz_dual_norm(g: GridFunction, phi: YoungFunction) -> float:
    """Orlicz norm of ``g`` in ``L^Psi``: ``inf_k (1 + int Psi(k |g|)) / k``.

    This is the norm of ``h -> int g h`` as a functional on ``L^Phi`` with the
    Luxemburg norm.
    """
    a = np.abs(g.samples)
    if not np.all(np.isfinite(a)):
        raise DomainError("samples must be finite")
    a = a[a > 0]
    if a.size == 0:
        return 0.0
    # the Luxemburg norm in L^Psi gives the scale of the optimal k
    lam = math.exp(_modular_root(a, g.step, phi.conjugate, phi.conjugate_derivative,
                                 math.log(float(a.max()))))
    x0 = -math.log(lam)
    res = optimize.minimize_scalar(
        lambda x: _amemiya(a, g.step, phi, x), bracket=(x0 - 0.5, x0 + 0.5),
        method="golden", tol=1e-10)
    return float(res.fun)


def norming_functional(f: GridFunction, phi: YoungFunction) -> FunctionalKernel:
    """Kernel ``K`` with ``int K f = ||f||`` and unit dual norm.

    ``K = P(u) / A(u)`` where ``u = f / ||f||``, ``P(z) = |z|^(p-2) conj(z)
    (log(c+|z|))^(alpha p)`` and ``A(u) = int |u|^p (log(c+|u|))^(alpha p)``.
    """
    lam = luxemburg_norm(f, phi)
    if lam == 0:
        raise UndefinedFunctionalError("the zero element has no norming functional")
    return _kernel_from_norm(f, phi, lam)


def _kernel_from_norm(f: GridFunction, phi: YoungFunction, lam: float) -> FunctionalKernel:
    u = f.samples / lam
    mod = np.abs(u)
    weight = np.zeros_like(mod)
    nz = mod > 0
    weight[nz] = phi.derivative(mod[nz]) / mod[nz]
    kernel = weight * np.conj(u)
    amass = f.step * float(np.sum(weight * mod * mod))
    return FunctionalKernel(f.with_samples(kernel / amass), lam)


def pairing(kernel: FunctionalKernel, g: GridFunction) -> complex:
    """``int K g`` (no conjugation; ``K`` already carries the conjugate)."""
    kernel.base.check_grid(g)
    return complex(g.step * np.sum(kernel.base.samples * g.samples))
