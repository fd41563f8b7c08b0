"""Model data: external-field eigenvalues, multiplicities, coupling."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Number
from typing import Sequence

from .errors import (DuplicateEigenvalue, MultiplicityMismatch, NonPositiveInput,
                     ValidationError)


@dataclass(frozen=True)
class ModelSpec:
    """Input data of the quartic complex matrix model with two external fields.

    Parameters
    ----------
    eigenvalues_E : tuple of (e_n, r_n)
        Distinct eigenvalues of ``E`` with multiplicities.
    eigenvalues_Etilde : tuple of (et_k, rt_k)
        Distinct eigenvalues of ``Etilde`` with multiplicities.
    lam : number
        Coupling constant. Complex values are accepted when ``strict`` is off.
    N : int
        Matrix size, equal to both multiplicity sums.
    strict : bool
        Enforce positivity of eigenvalues and coupling.
    """

    eigenvalues_E: tuple
    eigenvalues_Etilde: tuple
    lam: Number
    N: int
    strict: bool = True

    @property
    def e(self) -> tuple:
        return tuple(v for v, _ in self.eigenvalues_E)

    @property
    def r(self) -> tuple:
        return tuple(m for _, m in self.eigenvalues_E)

    @property
    def et(self) -> tuple:
        return tuple(v for v, _ in self.eigenvalues_Etilde)

    @property
    def rt(self) -> tuple:
        return tuple(m for _, m in self.eigenvalues_Etilde)

    @property
    def d(self) -> int:
        return len(self.eigenvalues_E)

    @property
    def dt(self) -> int:
        return len(self.eigenvalues_Etilde)

    def with_lambda(self, lam) -> "ModelSpec":
        """Copy with another coupling (strictness dropped for complex values)."""
        strict = self.strict and not isinstance(lam, complex)
        return replace(self, lam=lam, strict=strict)

    def is_rational(self) -> bool:
        """True when all eigenvalues and the coupling are exact rationals or ints."""
        vals = list(self.e) + list(self.et) + [self.lam]
        return all(isinstance(v, (int, Fraction)) for v in vals)

    def to_json(self) -> dict:
        def num(v):
            return float(v) if isinstance(v, Fraction) else v
        return {"eigenvalues_E": [[num(e), r] for e, r in self.eigenvalues_E],
                "eigenvalues_Etilde": [[num(e), r] for e, r in self.eigenvalues_Etilde],
                "lambda": num(self.lam), "N": self.N}


def _pairs(raw, name) -> tuple:
    out = []
    for item in raw:
        if len(item) != 2:
            raise ValidationError(f"{name}: entries must be (eigenvalue, multiplicity)")
        v, m = item
        if isinstance(m, bool) or int(m) != m:
            raise ValidationError(f"{name}: multiplicity {m!r} is not an integer")
        out.append((v, int(m)))
    return tuple(out)


def make_spec(E: Sequence, Et: Sequence, lam, N: int | None = None,
              strict: bool = True) -> ModelSpec:
    """Build and validate a spec; ``N`` defaults to the multiplicity sum of ``E``."""
    E = _pairs(E, "eigenvalues_E")
    Et = _pairs(Et, "eigenvalues_Etilde")
    if N is None:
        N = sum(m for _, m in E)
    return validate(ModelSpec(E, Et, lam, int(N), strict))


def _order(pair):
    v = complex(pair[0])
    return (v.real, v.imag)


def validate(spec: ModelSpec) -> ModelSpec:
    """Check invariants and return the canonical spec (eigenvalues ascending).

    Raises
    ------
    MultiplicityMismatch
        If either multiplicity sum differs from ``N``.
    DuplicateEigenvalue
        If two eigenvalues of the same matrix coincide.
    NonPositiveInput
        In strict mode, for non-positive eigenvalues or coupling, and always
        for non-positive multiplicities or ``N``.
    """
    E = _pairs(spec.eigenvalues_E, "eigenvalues_E")
    Et = _pairs(spec.eigenvalues_Etilde, "eigenvalues_Etilde")
    if spec.N <= 0:
        raise NonPositiveInput("N must be positive")
    if not E or not Et:
        raise ValidationError("both eigenvalue lists must be nonempty")
    for name, pairs in (("E", E), ("Etilde", Et)):
        if any(m <= 0 for _, m in pairs):
            raise NonPositiveInput(f"{name}: multiplicities must be positive")
        if sum(m for _, m in pairs) != spec.N:
            raise MultiplicityMismatch(
                f"{name}: multiplicities sum to {sum(m for _, m in pairs)}, N = {spec.N}")
        vals = [v for v, _ in pairs]
        if len(set(vals)) != len(vals):
            raise DuplicateEigenvalue(f"{name}: eigenvalues must be pairwise distinct")
        if spec.strict and any(not (v > 0) for v in vals):
            raise NonPositiveInput(f"{name}: eigenvalues must be positive")
    lam = spec.lam
    if spec.strict and (isinstance(lam, complex) or not lam >= 0):
        raise NonPositiveInput("coupling must be non-negative in strict mode")
    E = tuple(sorted(E, key=_order))
    Et = tuple(sorted(Et, key=_order))
    return ModelSpec(E, Et, lam, spec.N, spec.strict)


def load_spec(path: str, strict: bool = True) -> ModelSpec:
    """Read a spec from the JSON layout documented in the README."""
    with open(path) as fh:
        raw = json.load(fh)
    return spec_from_json(raw, strict=strict)


def _num(v):
    """JSON number or rational string such as ``"1/2"``."""
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            raise ValidationError(f"cannot parse number {v!r}") from None
    return v


def spec_from_json(raw: dict, strict: bool = True) -> ModelSpec:
    """Build a spec from a decoded JSON object (numbers may be rational strings)."""
    try:
        E = [(_num(v), m) for v, m in raw["eigenvalues_E"]]
        Et = [(_num(v), m) for v, m in raw["eigenvalues_Etilde"]]
        return make_spec(E, Et, _num(raw["lambda"]), raw.get("N"), strict=strict)
    except KeyError as exc:
        raise ValidationError(f"missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None


def comb_limit_spec(e=Fraction(1, 2), et=Fraction(1, 2), lam=Fraction(1, 4), N: int = 1,
                    strict: bool = True) -> ModelSpec:
    """Fully degenerate spec ``E = e 1``, ``Etilde = et 1``."""
    return make_spec([(e, N)], [(et, N)], lam, N, strict=strict)
