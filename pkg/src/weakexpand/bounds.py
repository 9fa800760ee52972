"""Closed-form error bounds for students trained on weak labels.

Every evaluator returns a :class:`BoundReport` listing its preconditions, the
applicability verdict, and the value (clamped to [0, 1], with the clamp
recorded).  Non-robust masses default to 0 when not supplied; ``strict=True``
refuses to evaluate without them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParameterError

FU_BASELINE = "fu-baseline"
WEI_APPLICABILITY = "wei-applicability"
PLC_MAIN = "plc-main"
PLC_SIMPLIFIED = "plc-simplified"
COVERAGE_MAIN = "coverage-main"
COVERAGE_WEAK = "coverage-weak"
WEI_PLC = "wei-plc"

THEOREMS = (FU_BASELINE, WEI_APPLICABILITY, PLC_MAIN, PLC_SIMPLIFIED, COVERAGE_MAIN,
            COVERAGE_WEAK, WEI_PLC)


@dataclass(frozen=True)
class Precondition:
    name: str
    value: float
    satisfied: bool

    def to_dict(self):
        return {"name": self.name, "value": self.value, "satisfied": self.satisfied}


@dataclass(frozen=True)
class BoundReport:
    theorem: str
    inputs: dict
    preconditions: tuple = ()
    applicable: bool = True
    value: float | None = None
    raw_value: float | None = None
    clamped: str | None = None  # "lower" | "upper"
    notes: tuple = field(default=())

    def precondition(self, name) -> Precondition:
        for p in self.preconditions:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "inputs": dict(self.inputs),
            "preconditions": [p.to_dict() for p in self.preconditions],
            "applicable": self.applicable,
            "value": self.value,
            "raw_value": self.raw_value,
            "clamped": self.clamped,
            "notes": list(self.notes),
        }


def _finish(theorem, inputs, pre, raw, notes=()):
    applicable = all(p.satisfied for p in pre)
    if not applicable:
        return BoundReport(theorem, inputs, tuple(pre), False, None, raw, None, tuple(notes))
    value, clamped = raw, None
    if raw < 0.0:
        value, clamped = 0.0, "lower"
    elif raw > 1.0:
        value, clamped = 1.0, "upper"
    return BoundReport(theorem, inputs, tuple(pre), True, value, raw, clamped, tuple(notes))


def _check_prob(name, v):
    if v is None or not 0.0 <= v <= 1.0:
        raise ParameterError(f"{name}={v!r} must lie in [0, 1]")


def _check_alpha(alpha):
    if not 0.0 < alpha < 0.5:
        raise ParameterError(f"alpha={alpha!r} must lie in (0, 1/2)")


def _check_positive(name, v):
    if not v > 0:
        raise ParameterError(f"{name}={v!r} must be positive")


def _robust_term(name, v, strict):
    if v is None:
        if strict:
            raise ParameterError(f"strict mode: {name} must be supplied")
        return 0.0
    _check_prob(name, v)
    return float(v)


def fu_baseline_bound(p_S: float, alpha: float) -> BoundReport:
    """P(S) * 4 alpha (1 - alpha) + P(T), the label-model baseline."""
    _check_prob("p_S", p_S)
    _check_prob("alpha", alpha)
    raw = p_S * 4.0 * alpha * (1.0 - alpha) + (1.0 - p_S)
    return _finish(FU_BASELINE, {"p_S": p_S, "alpha": alpha}, [], raw)


def wei_applicability(coverage: float) -> BoundReport:
    """Gate only: the full-coverage self-training bound needs P(S) >= 2/3."""
    _check_prob("coverage", coverage)
    pre = [Precondition("coverage >= 2/3", coverage, coverage >= 2.0 / 3.0)]
    return BoundReport(WEI_APPLICABILITY, {"coverage": coverage}, tuple(pre),
                       pre[0].satisfied, None)


def _gate_mass(err_weak, nonrobust, joint_mass):
    if joint_mass is not None:
        _check_prob("joint_mass", joint_mass)
        return float(joint_mass)
    return err_weak + nonrobust


def plc_bound(c: float, q: float, alpha: float, err_weak: float,
              nonrobust_mass: float | None = None, gate: str = "main",
              joint_mass: float | None = None, strict: bool = False) -> BoundReport:
    """Pseudolabel-correction bound on err(f, y | S_i).

    ``joint_mass`` is P(f != weak or f not robust | S_i) when the population
    is at hand; otherwise err_weak + nonrobust_mass stands in for it.
    """
    _check_alpha(alpha)
    _check_positive("c", c)
    _check_prob("q", q)
    _check_prob("err_weak", err_weak)
    nr = _robust_term("nonrobust_mass", nonrobust_mass, strict)
    inputs = {"c": c, "q": q, "alpha": alpha, "err_weak": err_weak, "nonrobust_mass": nr,
              "gate": gate}
    mass = _gate_mass(err_weak, nr, joint_mass)
    # 1 - alpha + c*alpha, arranged so that c = 1 gives exactly 1
    c_prime = c / (1.0 - alpha * (1.0 - c))
    denom = 1.0 - 2.0 * c_prime * alpha
    pre = [Precondition("q < 1", q, q < 1.0)]
    if gate == "main":
        pre.append(Precondition("gate mass <= 1 - q - alpha", mass, mass <= 1.0 - q - alpha))
    elif gate == "headline":
        pre.append(Precondition("gate mass <= (1 - alpha + 3 c alpha) / 4", mass,
                                mass <= (1.0 - alpha + 3.0 * c * alpha) / 4.0))
        pre.append(Precondition("q < 3/4 (1 - 2 alpha)", q, q < 0.75 * (1.0 - 2.0 * alpha)))
        pre.append(Precondition("gate mass <= 1 - q - alpha", mass, mass <= 1.0 - q - alpha))
    else:
        raise ValueError(f"unknown gate {gate!r}")
    pre.append(Precondition("1 - 2 c' alpha > 0", denom, denom > 0.0))
    raw = None
    if denom > 0.0:
        raw = (err_weak - alpha * (2.0 * c_prime - 1.0) + 2.0 * c_prime * alpha * nr) / denom
    inputs["c_prime"] = c_prime
    return _finish(PLC_MAIN, inputs, pre, raw)


def plc_simplified_bound(c: float, alpha: float, err_weak: float,
                         nonrobust_mass: float | None = None, delta_param: float = 0.75,
                         q: float = 0.0, joint_mass: float | None = None,
                         strict: bool = False) -> BoundReport:
    """Simplified pseudolabel-correction bound with slack parameter delta_param."""
    _check_alpha(alpha)
    _check_positive("c", c)
    _check_prob("err_weak", err_weak)
    _check_prob("q", q)
    if not 0.0 < delta_param <= 1.0:
        raise ParameterError("delta_param must lie in (0, 1]")
    nr = _robust_term("nonrobust_mass", nonrobust_mass, strict)
    inputs = {"c": c, "q": q, "alpha": alpha, "err_weak": err_weak, "nonrobust_mass": nr,
              "delta_param": delta_param}
    mass = _gate_mass(err_weak, nr, joint_mass)
    line = c * alpha * delta_param + (1.0 - alpha) * (1.0 - delta_param)
    pre = [
        Precondition("err_weak <= c alpha D + (1 - alpha)(1 - D)", err_weak, err_weak <= line),
        Precondition("c <= 1", c, c <= 1.0),
        Precondition("gate mass <= 1 - q - alpha", mass, mass <= 1.0 - q - alpha),
        Precondition("q < 1", q, q < 1.0),
    ]
    raw = (2.0 * alpha / (1.0 - 2.0 * alpha)) * nr + err_weak \
        + alpha * (1.0 - 2.0 * c * delta_param)
    return _finish(PLC_SIMPLIFIED, inputs, pre, raw)


def coverage_bound(c1: float, c2: float, q: float, alpha: float, err_weak: float,
                   nonrobust_T: float | None = None, strict: bool = False) -> BoundReport:
    """Coverage-expansion bound on err(f, y | T_i) with separate expansion
    into the good (c1) and bad (c2) covered sets."""
    _check_alpha(alpha)
    _check_positive("c1", c1)
    _check_positive("c2", c2)
    _check_prob("q", q)
    _check_prob("err_weak", err_weak)
    nr = _robust_term("nonrobust_T", nonrobust_T, strict)
    inputs = {"c1": c1, "c2": c2, "q": q, "alpha": alpha, "err_weak": err_weak,
              "nonrobust_T": nr}
    c_hi, c_lo = max(c1, c2), min(c1, c2)
    coef_den = c_lo / c_hi - 2.0 * alpha
    # equal constants use the single-c form c(1 - 2 alpha) so both agree exactly
    ratio_den = c1 * (1.0 - 2.0 * alpha) if c1 == c2 else c1 - (c1 + c2) * alpha
    lhs = err_weak + nr
    pre = [
        Precondition("err_weak + nonrobust_T < c1 (1 - q - alpha)", lhs,
                     lhs < c1 * (1.0 - q - alpha)),
        Precondition("c1 - (c1 + c2) alpha > 0", ratio_den, ratio_den > 0.0),
    ]
    notes = []
    if nr > 0.0:
        # the robustness coefficient and the c1 <= 1 step are only used when
        # the non-robust mass is nonzero
        pre.append(Precondition("min(c)/max(c) - 2 alpha > 0", coef_den, coef_den > 0.0))
        pre.append(Precondition("c1 <= 1", c1, c1 <= 1.0))
    elif coef_den <= 0.0:
        notes.append("robustness coefficient undefined; term vanishes since nonrobust_T = 0")
    raw = None
    if all(p.satisfied for p in pre):
        head = (1.0 + alpha / coef_den) * nr if nr > 0.0 else 0.0
        tail = max(q, max(0.0, err_weak - c2 * alpha) / ratio_den)
        raw = head + tail
    return _finish(COVERAGE_MAIN, inputs, pre, raw, notes)


def coverage_bound_weak(c: float, q: float, alpha: float, err_weak: float,
                        nonrobust_T: float | None = None, strict: bool = False) -> BoundReport:
    """Coverage bound that assumes expansion into the good covered set only."""
    _check_alpha(alpha)
    _check_positive("c", c)
    _check_prob("q", q)
    _check_prob("err_weak", err_weak)
    nr = _robust_term("nonrobust_T", nonrobust_T, strict)
    inputs = {"c": c, "q": q, "alpha": alpha, "err_weak": err_weak, "nonrobust_T": nr}
    raw = nr + max(q, err_weak / (c * (1.0 - alpha)))
    return _finish(COVERAGE_WEAK, inputs, [], raw)


def wei_plc_bound(c: float, q: float, alpha: float, err_weak: float,
                  nonrobust_mass: float | None = None, joint_mass: float | None = None,
                  strict: bool = False) -> BoundReport:
    """Pseudolabel correction from bad-to-good expansion (additive-style bound)."""
    _check_alpha(alpha)
    _check_positive("c", c)
    _check_prob("q", q)
    _check_prob("err_weak", err_weak)
    nr = _robust_term("nonrobust_mass", nonrobust_mass, strict)
    threshold = alpha / (1.0 - alpha)
    c_tilde = c * (1.0 - alpha) / alpha
    mass = _gate_mass(err_weak, nr, joint_mass)
    inputs = {"c": c, "q": q, "alpha": alpha, "err_weak": err_weak, "nonrobust_mass": nr,
              "c_tilde": c_tilde}
    pre = [
        Precondition("c > alpha / (1 - alpha)", c, c > threshold),
        Precondition("gate mass <= alpha (1 + q (c_tilde - 1))", mass,
                     mass <= alpha * (1.0 + q * (c_tilde - 1.0))),
    ]
    raw = 2.0 * (q * alpha + nr) + err_weak - alpha
    return _finish(WEI_PLC, inputs, pre, raw)


def evaluate(theorem: str, **kw) -> BoundReport:
    """Dispatch by theorem id (used by the CLI calculator)."""
    table = {
        FU_BASELINE: fu_baseline_bound,
        WEI_APPLICABILITY: wei_applicability,
        PLC_MAIN: plc_bound,
        PLC_SIMPLIFIED: plc_simplified_bound,
        COVERAGE_MAIN: coverage_bound,
        COVERAGE_WEAK: coverage_bound_weak,
        WEI_PLC: wei_plc_bound,
    }
    try:
        fn = table[theorem]
    except KeyError:
        raise ParameterError(f"unknown theorem {theorem!r}") from None
    return fn(**kw)
