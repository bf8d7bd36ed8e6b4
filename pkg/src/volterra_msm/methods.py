"""Linear multistep methods for the primitive problem ``phi' = psi``.

A method advances ``sum_j a_j phi_{r+j} = h sum_j b_j psi_{r+j}``. This
module holds the coefficient registry, the algebraic order check, the
root-based stability classification and the reflected sequences
(alpha, beta, gamma and their series inverses) the quadrature weights are
built from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from .errors import Inconsistent, MethodNotAdmitted, NotSchur, TailNotConverged, UnknownMethod
from .polyalg import Polynomial, SeriesCoeffs, roots, series_divide, series_inverse, solve_dense

ROOT_BAND = 1e-8
ORDER_RTOL = 1e-10
TAIL_RTOL = 1e-12


def _order_residuals(a, b, p_max):
    """Scaled residuals of sum_j a_j j^q - q sum_j b_j j^(q-1), q = 0..p_max+1."""
    j = np.arange(len(a), dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = []
    for q in range(p_max + 2):
        jq = j**q  # numpy gives 0**0 == 1
        lhs = a @ jq
        if q == 0:
            rhs, scale_b = 0.0, 0.0
        else:
            jq1 = j ** (q - 1)
            rhs = q * (b @ jq1)
            scale_b = q * (np.abs(b) @ jq1)
        scale = np.abs(a) @ jq + scale_b
        out.append(abs(lhs - rhs) / max(scale, 1.0))
    return out


def _max_order(a, b, p_max):
    res = _order_residuals(a, b, p_max)
    if res[0] > ORDER_RTOL or res[1] > ORDER_RTOL:
        return 0
    p = 1
    while p < p_max and res[p + 1] <= ORDER_RTOL:
        p += 1
    return p


@dataclass(frozen=True)
class MultistepMethod:
    """Coefficients of an m-step method plus derived indices.

    ``mu`` counts the trailing zeros of ``b`` (``b_{m-mu}`` is the last
    nonzero entry) and ``p0`` is the verified maximal order.
    """

    name: str
    a: tuple[float, ...]
    b: tuple[float, ...]
    m: int = field(init=False)
    mu: int = field(init=False)
    p0: int = field(init=False)

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if len(a) < 2 or len(a) != len(b):
            raise ValueError(f"{self.name}: a and b need equal length m+1 >= 2")
        m = len(a) - 1
        if a[m] == 0.0:
            raise ValueError(f"{self.name}: a_m must be nonzero")
        if a[0] == 0.0 and b[0] == 0.0:
            raise ValueError(f"{self.name}: |a_0| + |b_0| must be nonzero")
        nz = [j for j, v in enumerate(b) if v != 0.0]
        if not nz:
            raise ValueError(f"{self.name}: b is identically zero")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "mu", m - nz[-1])
        p0 = _max_order(a, b, 12)
        if p0 < 1:
            raise Inconsistent(f"{self.name}: order conditions fail already for p = 1")
        object.__setattr__(self, "p0", p0)

    @property
    def rho(self) -> Polynomial:
        return Polynomial(self.a)

    @property
    def sigma(self) -> Polynomial:
        return Polynomial(self.b[: self.m - self.mu + 1])

    @property
    def alpha(self) -> np.ndarray:
        """Reflected a: alpha_j = a_{m-j}."""
        return np.array(self.a[::-1])

    @property
    def beta(self) -> np.ndarray:
        """Reflected b: beta_j = b_{m-mu-j}, j = 0..m-mu."""
        return np.array(self.b[: self.m - self.mu + 1][::-1])


# -- constructions ------------------------------------------------------------


def _moment_solve(nodes, moments):
    V = np.vander(np.asarray(nodes, dtype=float), len(nodes), increasing=True).T
    return solve_dense(V, moments)


def interpolatory(m: int, tau: int, mu: int, name: str | None = None) -> MultistepMethod:
    """Method integrating phi' = psi over ``[x_{r+m-tau}, x_{r+m}]`` with the
    interpolant of psi on nodes ``x_r .. x_{r+m-mu}``.

    (tau, mu) = (1, 1) Adams-Bashforth, (1, 0) Adams-Moulton, (2, 1) Nystrom,
    (2, 0) Milne-Simpson.
    """
    if not (1 <= tau <= m and 0 <= mu <= m):
        raise ValueError("need 1 <= tau <= m and 0 <= mu <= m")
    q = m - mu
    nodes = np.arange(q + 1)
    moments = [(m ** (k + 1) - (m - tau) ** (k + 1)) / (k + 1) for k in range(q + 1)]
    b = np.zeros(m + 1)
    b[: q + 1] = _moment_solve(nodes, moments)
    a = np.zeros(m + 1)
    a[m] = 1.0
    a[m - tau] = -1.0
    return MultistepMethod(name or f"interp_m{m}_tau{tau}_mu{mu}", tuple(a), tuple(b))


def bdf(m: int, name: str | None = None) -> MultistepMethod:
    """m-step backward differentiation formula, normalised to b_m = 1."""
    nodes = np.arange(m + 1)
    moments = [0.0] + [k * float(m) ** (k - 1) for k in range(1, m + 1)]
    a = _moment_solve(nodes, moments)
    b = np.zeros(m + 1)
    b[m] = 1.0
    return MultistepMethod(name or f"bdf{m}", tuple(a), tuple(b))


F = Fraction
_REGISTRY_COEFFS = {
    "ab1": ((-1, 1), (1, 0)),
    "ab2": ((0, -1, 1), (F(-1, 2), F(3, 2), 0)),
    "ab3": ((0, 0, -1, 1), (F(5, 12), F(-16, 12), F(23, 12), 0)),
    "am1": ((-1, 1), (F(1, 2), F(1, 2))),
    "nystrom2": ((-1, 0, 1), (0, 2, 0)),
    "milne_simpson2": ((-1, 0, 1), (F(1, 3), F(4, 3), F(1, 3))),
    "bdf1": ((-1, 1), (0, 1)),
    "bdf2": ((F(1, 2), -2, F(3, 2)), (0, 0, 1)),
    "bdf3": ((F(-1, 3), F(3, 2), -3, F(11, 6)), (0, 0, 0, 1)),
    "bdf4": (tuple(F(v, 12) for v in (3, -16, 36, -48, 25)), (0, 0, 0, 0, 1)),
    "bdf5": (tuple(F(v, 60) for v in (-12, 75, -200, 300, -300, 137)), (0,) * 5 + (1,)),
    "bdf6": (tuple(F(v, 60) for v in (10, -72, 225, -400, 450, -360, 147)), (0,) * 6 + (1,)),
}

ALIASES = {"trapezoidal": "am1", "midpoint": "nystrom2", "simpson": "milne_simpson2"}

# (nullstable, sigma von Neumann, sigma Schur, p0) as known in closed form
CATALOGUE = {
    "ab1": (True, True, True, 1),
    "ab2": (True, True, True, 2),
    "ab3": (True, True, True, 3),
    "am1": (True, True, False, 2),
    "nystrom2": (True, True, True, 2),
    "milne_simpson2": (True, False, False, 4),
    "bdf1": (True, True, True, 1),
    "bdf2": (True, True, True, 2),
    "bdf3": (True, True, True, 3),
    "bdf4": (True, True, True, 4),
    "bdf5": (True, True, True, 5),
    "bdf6": (True, True, True, 6),
}

REGISTRY = tuple(_REGISTRY_COEFFS)


def builtin(name: str) -> MultistepMethod:
    key = ALIASES.get(name, name)
    try:
        a, b = _REGISTRY_COEFFS[key]
    except KeyError:
        raise UnknownMethod(f"unknown method {name!r}; known: {', '.join(REGISTRY)}") from None
    return MultistepMethod(key, tuple(float(v) for v in a), tuple(float(v) for v in b))


def verify_order(method: MultistepMethod, p_max: int = 12) -> int:
    """Largest p <= p_max satisfying the algebraic order conditions."""
    if p_max > 12 or p_max < 1:
        raise ValueError("p_max must lie in 1..12")
    p = _max_order(method.a, method.b, p_max)
    if p < 1:
        raise Inconsistent(f"{method.name} is not consistent")
    return p


# -- stability ---------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    nullstable: bool
    sigma_von_neumann: bool
    sigma_schur: bool
    rho_roots: tuple[complex, ...]
    sigma_roots: tuple[complex, ...]
    decay_rate_tau: float

    def as_dict(self) -> dict:
        def cplx(zs):
            return [[float(z.real), float(z.imag)] for z in zs]

        return {
            "nullstable": self.nullstable,
            "sigma_von_neumann": self.sigma_von_neumann,
            "sigma_schur": self.sigma_schur,
            "rho_roots": cplx(self.rho_roots),
            "sigma_roots": cplx(self.sigma_roots),
            "decay_rate_tau": self.decay_rate_tau,
        }


def _simple_von_neumann(poly: Polynomial, zs: np.ndarray) -> bool:
    if len(zs) == 0:
        return True
    mag = np.abs(zs)
    if np.any(mag > 1 + ROOT_BAND):
        return False
    circle = zs[mag > 1 - ROOT_BAND]
    dpoly = poly.deriv()
    return bool(np.all(np.abs(dpoly(circle)) > ROOT_BAND))


def classify_stability(method: MultistepMethod) -> StabilityReport:
    rho, sigma = method.rho, method.sigma
    rz = roots(rho)
    sz = roots(sigma) if sigma.degree >= 1 else np.zeros(0, dtype=complex)
    sig_vn = _simple_von_neumann(sigma, sz)
    sig_schur = bool(np.all(np.abs(sz) <= 1 - ROOT_BAND))
    rmax = float(np.abs(sz).max()) if len(sz) else 0.0
    tau = min(1.0, max(rmax, np.finfo(float).eps)) if sig_schur else 1.0
    return StabilityReport(
        nullstable=_simple_von_neumann(rho, rz),
        sigma_von_neumann=sig_vn,
        sigma_schur=sig_schur,
        rho_roots=tuple(complex(z) for z in rz),
        sigma_roots=tuple(complex(z) for z in sz),
        decay_rate_tau=tau,
    )


def check_admitted(method: MultistepMethod) -> StabilityReport:
    """Raise unless the method may drive the Volterra solver."""
    rep = classify_stability(method)
    if not rep.nullstable:
        raise MethodNotAdmitted(f"{method.name}: rho is not a simple von Neumann polynomial")
    if not rep.sigma_schur:
        raise NotSchur(f"{method.name}: sigma is not a Schur polynomial")
    if method.p0 > method.m:
        raise MethodNotAdmitted(f"{method.name}: maximal order {method.p0} exceeds m = {method.m}")
    return rep


# -- reflected sequences -------------------------------------------------------


class Reflected(NamedTuple):
    alpha: SeriesCoeffs
    beta: SeriesCoeffs
    alpha_inv: SeriesCoeffs
    gamma: SeriesCoeffs
    beta_inv: SeriesCoeffs | None
    gamma_inv: SeriesCoeffs | None


def _pad(v, n) -> SeriesCoeffs:
    out = np.zeros(n)
    k = min(n, len(v))
    out[:k] = v[:k]
    return SeriesCoeffs(out, n)


def reflected(method: MultistepMethod, n: int, with_inverses: bool = True) -> Reflected:
    """alpha, beta, 1/alpha, gamma = beta/alpha, 1/beta, 1/gamma to length n.

    The last two only make sense when sigma is Schur; :class:`NotSchur` is
    raised otherwise unless ``with_inverses=False``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = Polynomial(method.alpha)
    beta = Polynomial(method.beta)
    beta_inv = gamma_inv = None
    if with_inverses:
        if not classify_stability(method).sigma_schur:
            raise NotSchur(f"{method.name}: sigma is not Schur, 1/beta does not decay")
        beta_inv = series_inverse(beta, n)
        gamma_inv = series_divide(alpha, beta, n)
    return Reflected(
        alpha=_pad(method.alpha, n),
        beta=_pad(method.beta, n),
        alpha_inv=series_inverse(alpha, n),
        gamma=series_divide(beta, alpha, n),
        beta_inv=beta_inv,
        gamma_inv=gamma_inv,
    )


def fit_decay(values) -> float:
    """Root-test envelope max |c_k|^(1/k) over the back half of the prefix."""
    c = np.abs(np.asarray(values, dtype=float))
    n = len(c)
    k = np.arange(max(1, n // 2), n)
    nz = c[k] > 0
    if not np.any(nz):
        return np.finfo(float).eps
    return float(np.max(c[k][nz] ** (1.0 / k[nz])))


class TailBounds(NamedTuple):
    sum_abs: float
    sum_weighted: float
    tau: float


def tail_bounds(
    gamma_inv, extend: Callable[[int], SeriesCoeffs] | None = None, max_len: int = 1 << 20
) -> TailBounds:
    """sum |c_s|, sum s |c_s| and a fitted decay ratio for an exponentially
    decaying sequence.

    ``extend(n)`` (if given) must return the first ``n`` terms; the prefix is
    doubled until the geometric tail estimate drops below 1e-12 of the
    partial sums. Without it, the geometric tail estimate is added to the
    sums instead.
    """
    c = np.asarray(gamma_inv, dtype=float)
    while True:
        n = len(c)
        tau = fit_decay(c)
        if tau >= 1 - 1e-6:
            raise TailNotConverged(f"fitted decay ratio {tau:.6f} is not below one")
        a = np.abs(c)
        s_abs = float(a.sum())
        s_w = float(a @ np.arange(n))
        t_abs = tau**n / (1 - tau)
        t_w = tau**n * (n * (1 - tau) + tau) / (1 - tau) ** 2
        if t_abs <= TAIL_RTOL * s_abs and t_w <= TAIL_RTOL * max(s_w, 1.0):
            return TailBounds(s_abs, s_w, tau)
        if extend is None or 2 * n > max_len:
            if extend is not None:
                raise TailNotConverged(f"tail still above tolerance at length {n}")
            return TailBounds(s_abs + t_abs, s_w + t_w, tau)
        c = np.asarray(extend(2 * n), dtype=float)


def gamma_inv_bounds(method: MultistepMethod) -> TailBounds:
    """:func:`tail_bounds` for the method's own 1/gamma = alpha/beta."""
    check_schur = classify_stability(method)
    if not check_schur.sigma_schur:
        raise NotSchur(f"{method.name}: sigma is not Schur")
    alpha, beta = Polynomial(method.alpha), Polynomial(method.beta)
    return tail_bounds(series_divide(alpha, beta, 64), extend=lambda k: series_divide(alpha, beta, k))


def gamma_sup(method: MultistepMethod, n: int = 10_000) -> float:
    """sup_r |gamma_r| over a long prefix (gamma is eventually periodic-bounded
    for nullstable methods)."""
    return float(np.abs(series_divide(Polynomial(method.beta), Polynomial(method.alpha), n).values).max())
