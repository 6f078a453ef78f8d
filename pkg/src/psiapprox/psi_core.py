"""Generator functions and their halving characteristics.

A generator is a positive, nonincreasing, convex function psi on
[domain_start, inf) with psi(t) -> 0.  Everything downstream is driven by
two derived quantities:

    eta(t) = psi^{-1}(psi(t) / 2)     (where the value halves)
    mu(t)  = t / (eta(t) - t)         (halving distance relative to t)

All root finding runs on log(psi) so that families decaying below the
float64 underflow threshold (e.g. exp(-2 t^0.7) past t ~ 5000) still
resolve.  Closed forms for the exp-power family deliberately do NOT live
here; they sit in `bounds.exp_power_characteristics` so tests can compare
the two routes independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, InvalidPsiError, NumericError

LN2 = math.log(2.0)
_EPS = float(np.finfo(float).eps)

DEFAULT_TOL_INV = 1e-12
# floor guard: recompute eta at this tolerance before flooring
FLOOR_RECHECK_TOL = 1e-14
FLOOR_GUARD_BAND = 1e-9


@dataclass(frozen=True)
class PsiFunction:
    """A generator function with optional derivative/inverse capabilities.

    Construct via :meth:`exp_power`, :meth:`custom` or :meth:`from_table`.
    """

    family: str
    alpha: Optional[float] = None
    r: Optional[float] = None
    domain_start: float = 1.0
    _eval: Optional[Callable] = field(default=None, repr=False)
    _log_eval: Optional[Callable] = field(default=None, repr=False)
    _deriv: Optional[Callable] = field(default=None, repr=False)
    _inverse: Optional[Callable] = field(default=None, repr=False)

    @classmethod
    def exp_power(cls, alpha: float, r: float) -> "PsiFunction":
        """psi(t) = exp(-alpha * t^r), alpha > 0, r > 0."""
        if not (alpha > 0.0 and r > 0.0):
            raise DomainError(f"exp-power needs alpha > 0 and r > 0, got {alpha!r}, {r!r}")
        return cls(family="exp-power", alpha=float(alpha), r=float(r))

    @classmethod
    def custom(cls, eval_fn: Callable, right_derivative: Optional[Callable] = None,
               inverse: Optional[Callable] = None, log_eval: Optional[Callable] = None,
               domain_start: float = 1.0) -> "PsiFunction":
        """Wrap user callables.  `eval_fn` must be positive and strictly
        decreasing on [domain_start, inf); `right_derivative` and `inverse`
        are optional capabilities (operations needing them raise
        CapabilityError when absent).  `inverse`, when given, must satisfy
        eval_fn(inverse(y)) == y to the tolerance callers request."""
        return cls(family="custom", domain_start=float(domain_start), _eval=eval_fn,
                   _log_eval=log_eval, _deriv=right_derivative, _inverse=inverse)

    @classmethod
    def from_table(cls, ts: Sequence[float], values: Sequence[float]) -> "PsiFunction":
        """Custom generator from a monotone two-column sample table.

        Interpolation is log-linear in the value (linear in t against
        log psi), which keeps positivity and monotonicity; convexity of the
        interpolant is NOT guaranteed between samples of a convex function,
        so membership diagnostics on tabulated input are advisory.  Beyond
        the last sample the final segment's slope is extended.
        """
        t_arr = np.asarray(ts, dtype=float)
        v_arr = np.asarray(values, dtype=float)
        if t_arr.ndim != 1 or t_arr.shape != v_arr.shape or t_arr.size < 2:
            raise DomainError("table needs two equal-length 1-d columns with >= 2 rows")
        if np.any(np.diff(t_arr) <= 0.0):
            raise DomainError("table abscissae must be strictly increasing")
        if np.any(v_arr <= 0.0):
            raise InvalidPsiError("table values must be positive")
        if np.any(np.diff(v_arr) >= 0.0):
            raise InvalidPsiError("table values must be strictly decreasing")
        log_v = np.log(v_arr)
        slopes = np.diff(log_v) / np.diff(t_arr)
        t0 = float(t_arr[0])

        def log_eval(t):
            t = np.asarray(t, dtype=float)
            if np.any(t < t0 - 1e-12):
                raise DomainError(f"t below table start {t0}")
            idx = np.clip(np.searchsorted(t_arr, t, side="right") - 1, 0, t_arr.size - 2)
            out = log_v[idx] + slopes[idx] * (t - t_arr[idx])
            return out if out.ndim else float(out)

        def eval_fn(t):
            out = np.exp(log_eval(t))
            return out if isinstance(out, np.ndarray) else float(out)

        def right_derivative(t):
            t_s = np.asarray(t, dtype=float)
            idx = np.clip(np.searchsorted(t_arr, t_s, side="right") - 1, 0, t_arr.size - 2)
            out = np.exp(log_eval(t_s)) * slopes[idx]
            return out if out.ndim else float(out)

        return cls(family="custom", domain_start=t0, _eval=eval_fn,
                   _log_eval=log_eval, _deriv=right_derivative)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        if self.family == "exp-power":
            if isinstance(t, np.ndarray):
                return np.exp(-self.alpha * np.power(t, self.r))
            return math.exp(-self.alpha * float(t) ** self.r)
        return self._eval(t)

    def log_value(self, t):
        """log(psi(t)); exact for exp-power, never underflows."""
        if self.family == "exp-power":
            if isinstance(t, np.ndarray):
                return -self.alpha * np.power(t, self.r)
            return -self.alpha * float(t) ** self.r
        if self._log_eval is not None:
            return self._log_eval(t)
        val = self._eval(t)
        if isinstance(val, np.ndarray):
            if np.any(val <= 0.0):
                raise InvalidPsiError("psi must stay positive")
            return np.log(val)
        if val <= 0.0:
            raise InvalidPsiError(f"psi({t}) = {val} is not positive")
        return math.log(val)

    @property
    def has_derivative(self) -> bool:
        return self.family == "exp-power" or self._deriv is not None

    @property
    def has_inverse(self) -> bool:
        return self._inverse is not None

    def derivative(self, t):
        """psi'(t) (right derivative for piecewise generators)."""
        if self.family == "exp-power":
            if isinstance(t, np.ndarray):
                return -self.alpha * self.r * np.power(t, self.r - 1.0) * self(t)
            t = float(t)
            return -self.alpha * self.r * t ** (self.r - 1.0) * self(t)
        if self._deriv is None:
            raise CapabilityError("this generator has no derivative callable")
        return self._deriv(t)


def eval_psi(psi: PsiFunction, t):
    """psi(t); DomainError below domain_start."""
    t_min = np.min(t) if isinstance(t, np.ndarray) else t
    if t_min < psi.domain_start - 1e-12:
        raise DomainError(f"t = {t_min} below domain start {psi.domain_start}")
    return psi(t)


def eval_psi_prime(psi: PsiFunction, t):
    """psi'(t); CapabilityError when the generator carries no derivative."""
    t_min = np.min(t) if isinstance(t, np.ndarray) else t
    if t_min < psi.domain_start - 1e-12:
        raise DomainError(f"t = {t_min} below domain start {psi.domain_start}")
    return psi.derivative(t)


def finite_difference_psi_prime(psi: PsiFunction, t: float, h: Optional[float] = None) -> float:
    """Central-difference fallback for derivative-free generators.

    The step balances truncation against cancellation (~eps^(1/3) relative);
    at the domain edge a forward difference is used instead.
    """
    t = float(t)
    if h is None:
        h = 6e-6 * max(1.0, abs(t))
    if t - h >= psi.domain_start:
        return (float(psi(t + h)) - float(psi(t - h))) / (2.0 * h)
    return (float(psi(t + h)) - float(psi(t))) / h


# -- root finding on log(psi) ------------------------------------------------

def _solve_log_decreasing(log_eval: Callable[[float], float], target: float,
                          lo: float, tol: float, max_iter: int = 200) -> float:
    """Solve log_eval(x) == target for strictly decreasing log_eval, x >= lo.

    Bracket by doubling, then bisect.  Convergence is declared on the
    function value (|log_eval(x) - target| <= tol, i.e. relative tolerance
    on psi itself) or when the bracket hits float64 resolution, whichever
    comes first; only iteration exhaustion raises.
    """
    f_lo = float(log_eval(lo))
    if f_lo < target - tol:
        raise DomainError("target above psi at the bracket start")
    if abs(f_lo - target) <= tol:
        return lo
    step = 0.5
    a = lo
    for _ in range(max_iter):
        b = a + step
        f_b = float(log_eval(b))
        if f_b <= target:
            break
        a = b
        step *= 2.0
        if step > 1e13 * max(1.0, abs(lo)):
            raise NumericError("bracket growth exhausted; psi decays too slowly")
    else:
        raise NumericError("no upper bracket found")
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        f_mid = float(log_eval(mid))
        if abs(f_mid - target) <= tol:
            return mid
        if b - a <= 4.0 * _EPS * max(1.0, abs(mid)):
            return mid  # resolution-limited: best float64 can represent
        if f_mid > target:
            a = mid
        else:
            b = mid
    raise NumericError(f"bisection failed to converge after {max_iter} iterations")


def psi_inverse(psi: PsiFunction, y: float, tol_inv: float = DEFAULT_TOL_INV) -> float:
    """t >= domain_start with |psi(t) - y| <= tol_inv * y.

    Monotone bisection with bracket growth on log(psi); a user-supplied
    inverse callable (custom generators) short-circuits the search.
    """
    y = float(y)
    if not (y > 0.0):
        raise DomainError(f"inverse needs y > 0, got {y!r}")
    if psi.has_inverse:
        t = float(psi._inverse(y))
        if t < psi.domain_start - 1e-9:
            raise DomainError("supplied inverse returned a point below domain start")
        return t
    target = math.log(y)
    start_log = float(psi.log_value(psi.domain_start))
    if target > start_log + tol_inv:
        raise DomainError(f"y = {y} exceeds psi(domain_start) = {math.exp(start_log)}")
    return _solve_log_decreasing(psi.log_value, target, psi.domain_start, tol_inv)


def _solve_eta(psi: PsiFunction, t: float, tol_inv: float) -> float:
    """eta(t): the abscissa where psi halves, solved on log(psi)."""
    target = float(psi.log_value(t)) - LN2
    return _solve_log_decreasing(psi.log_value, target, float(t), tol_inv)


def guarded_eta_floor(psi: PsiFunction, t: float, eta: float,
                      tol_inv: float = DEFAULT_TOL_INV) -> int:
    """floor(eta(t)) with a near-integer guard.

    When eta lands within FLOOR_GUARD_BAND of an integer it is re-solved at
    tolerance FLOOR_RECHECK_TOL; if it still sits within the float64 noise
    band of that integer the floor is taken AT the integer (families like
    exp(-t ln 2) have eta(n) = n + 1 exactly, and truncating the solver's
    n + 1 - 1e-15 down to n would fabricate a degenerate taper).
    """
    nearest = round(eta)
    if abs(eta - nearest) <= FLOOR_GUARD_BAND:
        eta = _solve_eta(psi, float(t), min(tol_inv, FLOOR_RECHECK_TOL))
        nearest = round(eta)
        if abs(eta - nearest) <= max(1e-12, 64.0 * _EPS * max(1.0, abs(eta))):
            return int(nearest)
    return int(math.floor(eta))


@dataclass(frozen=True)
class CharacteristicProfile:
    """Halving characteristics of a generator at one abscissa."""

    t: float
    eta: float
    eta_gap: float          # eta(t) - t
    mu: float               # t / (eta(t) - t)
    floor_gap: Optional[int]  # floor(eta(t)) - t, only for integer t
    eta_eta: float          # eta(eta(t))

    @property
    def eta_floor(self) -> Optional[int]:
        if self.floor_gap is None:
            return None
        return self.floor_gap + int(round(self.t))


def characteristics(psi: PsiFunction, t: float,
                    tol_inv: float = DEFAULT_TOL_INV) -> CharacteristicProfile:
    """eta, eta - t, mu and floor(eta) - t at abscissa t.

    floor_gap is populated only for integer t (the taper construction is the
    sole consumer and only ever asks at integers).
    """
    t = float(t)
    if t < psi.domain_start - 1e-12:
        raise DomainError(f"t = {t} below domain start {psi.domain_start}")
    eta = _solve_eta(psi, t, tol_inv)
    gap = eta - t
    if gap <= 0.0:
        raise NumericError(f"eta({t}) did not exceed t; generator is not decreasing here")
    mu = t / gap
    eta_eta = _solve_eta(psi, eta, tol_inv)
    floor_gap = None
    if float(t).is_integer():
        floor_gap = guarded_eta_floor(psi, t, eta, tol_inv) - int(t)
    return CharacteristicProfile(t=t, eta=eta, eta_gap=gap, mu=mu,
                                 floor_gap=floor_gap, eta_eta=eta_eta)


def eta_derivative(psi: PsiFunction, t: float, h: float = 1e-5) -> float:
    """Forward-difference eta'(t) with tightened solver tolerance."""
    if h <= 0.0:
        raise DomainError("h must be positive")
    tol = 1e-13
    e0 = _solve_eta(psi, float(t), tol)
    e1 = _solve_eta(psi, float(t) + h, tol)
    return (e1 - e0) / h


@dataclass(frozen=True)
class Lemma2Margins:
    """Two-sided envelope of psi/|psi'| in units of the halving gap."""

    t: float
    b: float
    lower: float
    value: float
    upper: float
    used_finite_difference: bool

    @property
    def ordered(self) -> bool:
        slack = 1e-9 * (abs(self.value) + abs(self.upper))
        return self.lower <= self.value + slack and self.value <= self.upper + slack


def lemma2_margins(psi: PsiFunction, t: float, b: float,
                   tol_inv: float = DEFAULT_TOL_INV) -> Lemma2Margins:
    """lower = (1/2)(b/(b+1))^2 (eta-t) <= psi/|psi'| <= 4(1+1/b)(eta-t).

    Valid whenever mu >= b > 0 on the range swept by the halving; the caller
    is responsible for that precondition.  Ordering failure beyond float
    slack raises NumericError since under the precondition it signals broken
    numerics, not mathematics.  b = inf degenerates to the limit constants.
    """
    if not (b > 0.0):
        raise DomainError("lemma 2 needs b > 0")
    prof = characteristics(psi, t, tol_inv)
    used_fd = False
    try:
        deriv = float(eval_psi_prime(psi, t))
    except CapabilityError:
        deriv = finite_difference_psi_prime(psi, t)
        used_fd = True
    if deriv >= 0.0:
        raise InvalidPsiError(f"psi'({t}) = {deriv} is not negative")
    value = float(psi(t)) / abs(deriv)
    if math.isinf(b):
        lo_coef, hi_coef = 0.5, 4.0
    else:
        lo_coef = 0.5 * (b / (b + 1.0)) ** 2
        hi_coef = 4.0 * (1.0 + 1.0 / b)
    result = Lemma2Margins(t=float(t), b=float(b), lower=lo_coef * prof.eta_gap,
                           value=value, upper=hi_coef * prof.eta_gap,
                           used_finite_difference=used_fd)
    if not result.ordered:
        raise NumericError(
            f"psi/|psi'| = {value} escaped [{result.lower}, {result.upper}] at t = {t}; "
            "check that mu(t) >= b actually holds")
    return result


@dataclass(frozen=True)
class MembershipReport:
    """Diagnostics from probing characteristics along a dyadic grid.

    The flags summarize observed behaviour only (finite probes cannot prove
    limit statements): `gap_bounded_above`/`gap_bounded_below` carry the
    observed sup/inf of eta(t) - t when the tail-half trend is consistent
    with that bound being the binding one, else None.
    """

    in_M_plus_inf: bool
    gap_bounded_above: Optional[float]
    gap_bounded_below: Optional[float]
    probe_grid: tuple
    mu_values: tuple
    gap_values: tuple


def membership_probe(psi: PsiFunction, grid: Optional[Sequence[float]] = None,
                     tol_inv: float = DEFAULT_TOL_INV) -> MembershipReport:
    """Probe mu and eta - t along a grid (default 1, 2, 4, ..., 2^20)."""
    if grid is None:
        grid = [float(2 ** j) for j in range(21)]
        grid = [t for t in grid if t >= psi.domain_start]
        if not grid:
            grid = [psi.domain_start * 2.0 ** j for j in range(21)]
    grid = [float(t) for t in grid]
    if len(grid) < 3:
        raise DomainError("membership probe needs at least 3 grid points")
    mus, gaps = [], []
    for t in grid:
        prof = characteristics(psi, t, tol_inv)
        mus.append(prof.mu)
        gaps.append(prof.eta_gap)
    mu_arr = np.asarray(mus)
    gap_arr = np.asarray(gaps)
    rising = bool(np.all(np.diff(mu_arr) > -1e-9 * mu_arr[:-1]))
    in_m_plus = rising and mu_arr[-1] > 1.5 * mu_arr[0]
    tail = gap_arr[gap_arr.size // 2:]
    above = None
    below = None
    if np.all(np.diff(tail) <= 1e-9 * tail[:-1]):
        above = float(np.max(gap_arr))
    if np.all(np.diff(tail) >= -1e-9 * tail[:-1]):
        below = float(np.min(gap_arr))
    return MembershipReport(in_M_plus_inf=in_m_plus, gap_bounded_above=above,
                            gap_bounded_below=below, probe_grid=tuple(grid),
                            mu_values=tuple(float(m) for m in mus),
                            gap_values=tuple(float(g) for g in gaps))


def validate_psi_samples(psi: PsiFunction, grid: Sequence[float],
                         rel_tol: float = 1e-12) -> None:
    """Raise InvalidPsiError unless psi is positive, nonincreasing and
    midpoint-convex on the given grid (within relative tolerance)."""
    ts = np.sort(np.asarray(list(grid), dtype=float))
    if ts.size < 3:
        raise DomainError("validation grid needs at least 3 points")
    vals = np.asarray([float(psi(t)) for t in ts])
    if np.any(vals <= 0.0):
        raise InvalidPsiError("psi must be positive on the grid")
    if np.any(np.diff(vals) > rel_tol * vals[:-1]):
        raise InvalidPsiError("psi must be nonincreasing on the grid")
    mids = 0.5 * (ts[:-1] + ts[1:])
    mid_vals = np.asarray([float(psi(m)) for m in mids])
    chord = 0.5 * (vals[:-1] + vals[1:])
    if np.any(mid_vals > chord * (1.0 + rel_tol) + rel_tol * vals[0]):
        raise InvalidPsiError("psi failed the midpoint convexity check")
