"""2x2 coordination payoffs, pure Nash enumeration and limiting-equilibrium thresholds.

Actions are encoded 0 = C and 1 = D. Profiles serialize as bit strings with
agent 0 leftmost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .netgraph import Graph, cohesiveness

FLOAT_MARGIN = 1e-12
BRUTE_FORCE_CAP = 20


class PayoffError(ValueError):
    pass


class EnumerationCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class PayoffMatrix:
    """Row player's payoffs: z = (C,C), y = (C,D), x = (D,C), w = (D,D)."""
    z: float
    y: float
    x: float
    w: float

    @classmethod
    def symmetric(cls, h, l):
        return cls(z=h, y=l, x=l, w=h)

    @classmethod
    def from_config(cls, cfg: dict) -> "PayoffMatrix":
        if {"h", "l"} <= cfg.keys():
            return cls.symmetric(_parse_number(cfg["h"]), _parse_number(cfg["l"]))
        try:
            return cls(*(_parse_number(cfg[k]) for k in "zyxw"))
        except KeyError as exc:
            raise PayoffError(f"payoff config needs z, y, x, w or h, l: missing {exc}") from None

    def to_config(self) -> dict:
        return {k: _dump_number(getattr(self, k)) for k in "zyxw"}

    def as_tuple(self):
        return (self.z, self.y, self.x, self.w)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, Rational) for v in self.as_tuple())

    @property
    def is_symmetric(self) -> bool:
        return self.z == self.w and self.y == self.x

    @property
    def h(self):
        if not self.is_symmetric:
            raise PayoffError("h is only defined for symmetric-choice payoffs")
        return self.z

    @property
    def l(self):
        if not self.is_symmetric:
            raise PayoffError("l is only defined for symmetric-choice payoffs")
        return self.y

    def is_coordination(self) -> bool:
        z, y, x, w = self.as_tuple()
        return z > x and w > y and w > x and z > y and w > 0 and z > 0

    def has_risk_efficiency_conflict(self) -> bool:
        z, y, x, w = self.as_tuple()
        return z > w > x > y and w + x > z + y and w > 0 and z > 0


def _parse_number(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float) and v.is_integer():
        return int(v)
    return v


def _dump_number(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    return v


@dataclass(frozen=True)
class Classification:
    coordination: bool
    risk_efficiency_conflict: bool
    symmetric: bool
    regime: str  # "wz>xy", "wz<xy" or "regime-indeterminate"
    wz_minus_xy: float


def validate(payoff: PayoffMatrix) -> Classification:
    diff = payoff.w * payoff.z - payoff.x * payoff.y
    if diff > 0:
        regime = "wz>xy"
    elif diff < 0:
        regime = "wz<xy"
    else:
        regime = "regime-indeterminate"
    return Classification(
        coordination=payoff.is_coordination(),
        risk_efficiency_conflict=payoff.has_risk_efficiency_conflict(),
        symmetric=payoff.is_symmetric,
        regime=regime,
        wz_minus_xy=diff,
    )


def _require_coordination(payoff: PayoffMatrix):
    if not payoff.is_coordination():
        raise PayoffError(f"payoff {payoff.as_tuple()} is not a coordination game")


def _ratio(num, den):
    if isinstance(num, Rational) and isinstance(den, Rational):
        return Fraction(num) / Fraction(den)
    return num / den


def ne_threshold(payoff: PayoffMatrix):
    """Share of D-neighbours above which D is a best response."""
    _require_coordination(payoff)
    z, y, x, w = payoff.as_tuple()
    return _ratio(z - x, w - x + z - y)


def limiting_thresholds(payoff: PayoffMatrix, eta):
    """(r1, r2): D needs m/d > r1, C needs (d - m)/d > r2, in the accurate limit."""
    _require_coordination(payoff)
    z, y, x, w = payoff.as_tuple()
    if isinstance(eta, float) and payoff.is_exact and eta.is_integer():
        eta = int(eta)
    r1 = _ratio(eta * z - x, w - x + eta * z - eta * y)
    r2 = _ratio(eta * w - y, z - y + eta * w - eta * x)
    return r1, r2


@dataclass(frozen=True)
class PureProfile:
    s: tuple

    @classmethod
    def from_bits(cls, bits: str) -> "PureProfile":
        if set(bits) - {"0", "1"}:
            raise ValueError(f"profile string must be 0/1 only: {bits!r}")
        return cls(tuple(int(c) for c in bits))

    def to_bits(self) -> str:
        return "".join(str(b) for b in self.s)

    @property
    def n_c(self) -> frozenset:
        return frozenset(i for i, b in enumerate(self.s) if b == 0)

    @property
    def n_d(self) -> frozenset:
        return frozenset(i for i, b in enumerate(self.s) if b == 1)

    def __len__(self):
        return len(self.s)

    def __str__(self):
        return self.to_bits()


def all_profiles(n: int) -> np.ndarray:
    """All 2^n profiles as a (2^n, n) uint8 array; row k holds the bits of k, agent 0 most significant."""
    k = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((k[:, None] >> shifts) & 1).astype(np.uint8)


def _integer_payoffs(payoff: PayoffMatrix):
    """Scale exact payoffs to integers; comparisons are invariant under positive scaling."""
    vals = [Fraction(v) for v in payoff.as_tuple()]
    lcm = 1
    for v in vals:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    return [int(v * lcm) for v in vals]


def _check_cap(g: Graph, cap: int):
    if g.n > cap:
        raise EnumerationCapExceeded(f"{g.n} agents exceeds brute-force cap {cap}")
    if (g.degrees == 0).any():
        raise ValueError("enumeration needs every agent to have a neighbour")


def _d_neighbour_counts(g: Graph, profiles: np.ndarray) -> np.ndarray:
    return profiles.astype(np.int64) @ g.adjacency.T


def best_response_table(g: Graph, payoff: PayoffMatrix, profiles: np.ndarray):
    """Per (profile, agent): (gain of D over C) sign data, exact when payoffs are rational.

    Returns the payoff advantage of D over C given neighbours' actions.
    """
    m = _d_neighbour_counts(g, profiles)
    d = g.degrees[None, :]
    if payoff.is_exact:
        z, y, x, w = _integer_payoffs(payoff)
    else:
        z, y, x, w = payoff.as_tuple()
    return (m * w + (d - m) * x) - (m * y + (d - m) * z)


def _ne_by_best_response(g, payoff, profiles):
    gain = best_response_table(g, payoff, profiles)
    margin = 0 if payoff.is_exact else FLOAT_MARGIN
    plays_d = profiles.astype(bool)
    weak = np.where(plays_d, gain >= -margin, gain <= margin).all(axis=1)
    strict = np.where(plays_d, gain > margin, gain < -margin).all(axis=1)
    return weak, strict


def _ne_by_cohesion(g, payoff, profiles):
    """N_D must be r-cohesive and N_C (1 - r)-cohesive, checked via cross-multiplication."""
    r = ne_threshold(payoff)
    m = _d_neighbour_counts(g, profiles)
    d = g.degrees[None, :]
    plays_d = profiles.astype(bool)
    if isinstance(r, Fraction):
        a, b = r.numerator, r.denominator
        d_ok = m * b >= d * a
        c_ok = (d - m) * b >= d * (b - a)
    else:
        d_ok = m >= d * r - FLOAT_MARGIN
        c_ok = d - m >= d * (1 - r) - FLOAT_MARGIN
    return np.where(plays_d, d_ok, c_ok).all(axis=1)


def enumerate_pure_ne(g: Graph, payoff: PayoffMatrix, cap: int = BRUTE_FORCE_CAP) -> dict:
    """All weak pure Nash equilibria, mapped to their strictness flag.

    Checked twice, by direct best responses and by the cohesiveness
    characterisation; the two must agree.
    """
    _require_coordination(payoff)
    _check_cap(g, cap)
    profiles = all_profiles(g.n)
    weak, strict = _ne_by_best_response(g, payoff, profiles)
    by_cohesion = _ne_by_cohesion(g, payoff, profiles)
    if not np.array_equal(weak, by_cohesion):
        bad = profiles[np.flatnonzero(weak != by_cohesion)[0]]
        raise AssertionError(f"best-response and cohesion routes disagree at {bad}")
    return {PureProfile(tuple(int(b) for b in profiles[k])): bool(strict[k])
            for k in np.flatnonzero(weak)}


def is_ne_by_cohesiveness(g: Graph, payoff: PayoffMatrix, profile: PureProfile) -> bool:
    """Certificate check for a single profile using exact subset cohesiveness."""
    r = ne_threshold(payoff)
    if profile.n_d and cohesiveness(g, profile.n_d).value < r:
        return False
    if profile.n_c and cohesiveness(g, profile.n_c).value < 1 - r:
        return False
    return True


def _eta_vector(eta, n):
    eta = list(eta) if isinstance(eta, (list, tuple, np.ndarray)) else [eta] * n
    if len(eta) != n:
        raise ValueError(f"need {n} eta values, got {len(eta)}")
    for e in eta:
        if not 0 <= e <= 1:
            raise ValueError(f"eta must lie in [0, 1], got {e}")
    return eta


def limiting_be_mask(g: Graph, payoff: PayoffMatrix, eta: Sequence, profiles: np.ndarray) -> np.ndarray:
    """True for profiles whose D-set and C-set clear the strict limiting thresholds."""
    eta = _eta_vector(eta, g.n)
    m = _d_neighbour_counts(g, profiles)
    deg = g.degrees
    ok = np.ones(len(profiles), dtype=bool)
    exact = payoff.is_exact and all(isinstance(e, Rational) or float(e).is_integer() for e in eta)
    for i in range(g.n):
        mi, di = m[:, i], int(deg[i])
        r1, r2 = limiting_thresholds(payoff, Fraction(eta[i]) if exact else float(eta[i]))
        if exact:
            d_ok = mi * r1.denominator > di * r1.numerator
            c_ok = (di - mi) * r2.denominator > di * r2.numerator
        else:
            d_ok = mi / di > r1 + FLOAT_MARGIN
            c_ok = (di - mi) / di > r2 + FLOAT_MARGIN
        ok &= np.where(profiles[:, i] == 1, d_ok, c_ok)
    return ok


def enumerate_limiting_be(g: Graph, payoff: PayoffMatrix, eta, cap: int = BRUTE_FORCE_CAP) -> set:
    """Pure profiles that survive as behavioural equilibria when memory is long or accuracy high."""
    _require_coordination(payoff)
    _check_cap(g, cap)
    profiles = all_profiles(g.n)
    mask = limiting_be_mask(g, payoff, eta, profiles)
    return {PureProfile(tuple(int(b) for b in profiles[k])) for k in np.flatnonzero(mask)}
