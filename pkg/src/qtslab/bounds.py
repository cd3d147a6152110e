"""Closed-form success-probability bounds and tradeoff scaling curves.

Every asymptotic expression is evaluated with leading constant 1, so the
values are scalings rather than concrete lower bounds.  Logarithms are base 2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class BoundValue:
    value: float
    vacuous: bool  # True when the bound is at least 1 and says nothing

    def __float__(self) -> float:
        return self.value


def _bv(value: float) -> BoundValue:
    return BoundValue(value, value >= 1.0)


def binary_entropy(a: float) -> float:
    if not 0 <= a <= 1:
        raise BoundsError(f"entropy argument {a} outside [0, 1]")
    if a in (0, 1):
        return 0.0
    return -a * math.log2(a) - (1 - a) * math.log2(1 - a)


def entropy_margin(a: float) -> float:
    """``1 - a - H_2(a)``; the exponent gap used by both tail bounds."""
    return 1 - a - binary_entropy(a)


def matvec_success_bound(k: int, h: int, c, d: int, alpha: float, S: float | None = None) -> BoundValue:
    """``ceil(h/(ck)) * (2^H(alpha) / d^(1-alpha))^(ck)``, times ``2^(2S)``
    when a space bound S is supplied."""
    c = Fraction(c).limit_denominator(10**9) if isinstance(c, float) else Fraction(c)
    if not (0 < c <= 1) or k < 1 or h < 1 or d < 2 or not 0 < alpha < 1:
        raise BoundsError("need k, h >= 1, 0 < c <= 1, d >= 2, 0 < alpha < 1")
    ck = c * k
    lead = math.ceil(Fraction(h) / ck)
    log_val = math.log2(lead) + float(ck) * (binary_entropy(alpha) - (1 - alpha) * math.log2(d))
    if S is not None:
        log_val += 2 * S
    return _bv(2.0**log_val if log_val < 1000 else math.inf)


def matmul_success_bound(k: int, n: int, d: int, beta: float, simplified: bool = False) -> BoundValue:
    """``16 min(k,n)^sqrt(k/2) (2^H(4 beta) / d^(1-4 beta))^(k/4)``.

    The simplified form ``16 min(k,n)^sqrt(k/2) d^(-k/24)`` dominates the
    full one whenever ``1 - 4 beta - H_2(4 beta) >= 1/6``.
    """
    if k < 0 or n < 1 or d < 2 or not 0 < 4 * beta < 1:
        raise BoundsError("need k >= 0, n >= 1, d >= 2, 0 < 4 beta < 1")
    base = min(k, n)
    lead = 4 + (math.sqrt(k / 2) * math.log2(base) if base > 0 else 0.0)
    if simplified:
        tail = -k / 24 * math.log2(d)
    else:
        tail = k / 4 * (binary_entropy(4 * beta) - (1 - 4 * beta) * math.log2(d))
    log_val = lead + tail
    return _bv(2.0**log_val if log_val < 1000 else math.inf)


def sdpt_bound(k: int, n: int, model: str = "quantum", eps: float = 0.01,
               gamma: float = 0.1) -> tuple[float, float]:
    """``(query budget, success bound)`` of the direct product bound for k
    independent ORs of size n."""
    if model == "classical":
        budget = eps * k * n
    elif model == "quantum":
        budget = eps * k * math.sqrt(n)
    else:
        raise BoundsError(f"unknown model {model!r}")
    return budget, 2.0 ** (-gamma * k)


def coloring_number_bound(S: float) -> float:
    return math.sqrt(1.5) * S ** (2 / 3)


CURVES: dict[str, Callable[[float, float, float], float]] = {
    "matvec": lambda n, S, d: n**2 * math.log2(d) / S,
    "dft": lambda n, S, d: n**2 * math.log2(d) / S,
    "convolution": lambda n, S, d: n**2 * math.log2(d) / S,
    "binary_mult": lambda n, S, d: n**2 / (S * math.log2(n) ** 2),
    "triple_product": lambda n, S, d: n**4 * math.log2(d) / S,
    "cube": lambda n, S, d: n**4 * math.log2(d) / S,
    "inversion": lambda n, S, d: n**4 * math.log2(d) / S,
    "linear_system": lambda n, S, d: n**3 * math.log2(d) / S,
    "matmul": lambda n, S, d: n**3 * math.sqrt(math.log2(d) / S),
    "square": lambda n, S, d: n**3 * math.sqrt(math.log2(d) / S),
    "boolean_mm_ksdw": lambda n, S, d: n**2.5 / math.sqrt(S),
    "boolean_mm": lambda n, S, d: n**2.5 / S ** (1 / 3),
    "boolean_square": lambda n, S, d: n**2.5 / S ** (1 / 3),
    "boolean_mm_general": lambda n, S, d: n**2.5 / coloring_number_bound(S) ** 0.5,
    "boolean_mm_classical": lambda n, S, d: n**3 / S ** (2 / 3),
    "boolean_mm_classical_general": lambda n, S, d: n**3 / coloring_number_bound(S),
    "boolean_mv": lambda n, S, d: math.sqrt(n**3 / S),
}


def tradeoff_curve(problem: str, n: float, S: float, d: int = 2) -> float:
    """Constant-free lower-bound scaling of T for ``problem`` at (n, S, d)."""
    if problem not in CURVES:
        raise BoundsError(f"unknown problem {problem!r}; known: {', '.join(CURVES)}")
    if n < 2 or d < 2:
        raise BoundsError("need n >= 2 and d >= 2")
    if S < math.log2(n):
        raise BoundsError(f"space {S} is below log2(n) = {math.log2(n):.3f}")
    return CURVES[problem](n, S, d)


def curve_rows(problem: str, ns: Iterable[float], Ss: Iterable[float], d: int = 2) -> list[dict]:
    Ss = list(Ss)
    return [{"problem": problem, "n": n, "S": S, "d": d, "value": tradeoff_curve(problem, n, S, d)}
            for n in ns for S in Ss]


def curve_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["problem", "n", "S", "d", "value"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "value": repr(float(r["value"]))})
    return buf.getvalue()


def cm_bound(m: float, h1: float, K: float, T: float, delta: float, m_prime: float) -> float:
    """``min((m h1)^(1/(1-D)) log K / T^(D/(1-D)), m'^(1+D) h1 log K)``."""
    if not 0 <= delta < 1:
        raise BoundsError("delta must lie in [0, 1)")
    if K <= 1:
        raise BoundsError("K must exceed 1 for a meaningful bound")
    logK = math.log2(K)
    first = (m * h1) ** (1 / (1 - delta)) * logK / T ** (delta / (1 - delta))
    second = m_prime ** (1 + delta) * h1 * logK
    return min(first, second)


def cm_matvec(n: int, d: int, alpha: float = 0.1717, gamma: float = 0.25, T: float = 1.0) -> float:
    """Matrix-vector instantiation: m = n, h1 = alpha n, K = d^(1/6), m' = gamma n."""
    return cm_bound(n, alpha * n, d ** (1 / 6), T, 0.0, gamma * n)


def cm_matmul(n: int, d: int, T: float, h1_scale: float = 1.0, mprime_scale: float = 1.0) -> float:
    """Matrix multiplication instantiation: m = n^2, D = 1/2, h1 = Theta(n),
    K = d^(1/48), m' = Theta(n^2)."""
    return cm_bound(n**2, h1_scale * n, d ** (1 / 48), T, 0.5, mprime_scale * n**2)
