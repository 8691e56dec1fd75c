"""Binary polynomials over named bit arrays, and their compilation to QUBO form.

The model layer is deliberately small: a registry mapping named binary
arrays onto a flat index space, exact polynomial arithmetic with the
``x*x = x`` reduction applied eagerly, and a compiler that refuses anything
above degree two.  Inequality constraints enter through the two slack
encodings at the bottom of the module.
"""
from __future__ import annotations

import math
from bisect import bisect_right

import numpy as np


class RegistryError(ValueError):
    """Duplicate names, bad shapes, or out-of-range indices."""


class DegreeError(ValueError):
    """Compilation attempted on a polynomial of degree greater than two."""


class VariableRegistry:
    """Flat index space shared by all polynomials of one model.

    Arrays are laid out row-major in registration order, so flat indices are
    contiguous ``0..total_count-1`` and stable once assigned.
    """

    def __init__(self):
        self._shapes: dict[str, tuple[int, ...]] = {}
        self._offsets: list[int] = []
        self._names: list[str] = []
        self.total_count = 0

    def register(self, name: str, shape) -> "VariableRegistry":
        if name in self._shapes:
            raise RegistryError(f"variable array {name!r} already registered")
        shape = tuple(int(s) for s in shape)
        if not shape:
            raise RegistryError("shape must have at least one dimension")
        if any(s < 1 for s in shape):
            raise RegistryError(f"shape entries must be >= 1, got {shape}")
        self._shapes[name] = shape
        self._offsets.append(self.total_count)
        self._names.append(name)
        self.total_count += math.prod(shape)
        return self

    def shape(self, name: str) -> tuple[int, ...]:
        try:
            return self._shapes[name]
        except KeyError:
            raise RegistryError(f"unknown variable array {name!r}") from None

    def offset(self, name: str) -> int:
        return self._offsets[self._names.index(name)]

    def index(self, name: str, multi) -> int:
        """Resolve (name, multi-index) to its flat variable index."""
        shape = self.shape(name)
        if isinstance(multi, int):
            multi = (multi,)
        multi = tuple(multi)
        if len(multi) != len(shape):
            raise RegistryError(f"{name!r} expects {len(shape)} indices, got {multi}")
        flat = 0
        for m, s in zip(multi, shape):
            if not 0 <= m < s:
                raise RegistryError(f"index {multi} out of range for {name!r} shape {shape}")
            flat = flat * s + m
        return self.offset(name) + flat

    def label(self, flat: int) -> tuple[str, tuple[int, ...]]:
        """Invert a flat index back to (name, multi-index)."""
        if not 0 <= flat < self.total_count:
            raise RegistryError(f"flat index {flat} out of range")
        pos = bisect_right(self._offsets, flat) - 1
        name = self._names[pos]
        shape = self._shapes[name]
        rem = flat - self._offsets[pos]
        multi = []
        for s in reversed(shape):
            multi.append(rem % s)
            rem //= s
        return name, tuple(reversed(multi))

    def names(self) -> list[str]:
        return list(self._names)


def register_binary_array(reg: VariableRegistry, name: str, shape) -> VariableRegistry:
    return reg.register(name, shape)


def _key(indices) -> tuple[int, ...]:
    # x*x = x: duplicate indices collapse
    return tuple(sorted(set(indices)))


class BinaryPolynomial:
    """Multilinear polynomial over binary variables of one registry.

    Terms map sorted duplicate-free index tuples to real coefficients; the
    empty tuple holds the constant.  Zero coefficients are dropped by every
    arithmetic operation.
    """

    __slots__ = ("registry", "terms")

    def __init__(self, registry: VariableRegistry, terms: dict | None = None):
        self.registry = registry
        self.terms: dict[tuple[int, ...], float] = {}
        if terms:
            for key, coeff in terms.items():
                c = float(coeff)
                if c != 0.0:
                    self.terms[_key(key)] = self.terms.get(_key(key), 0.0) + c

    @classmethod
    def constant(cls, registry: VariableRegistry, value: float) -> "BinaryPolynomial":
        return cls(registry, {(): value})

    @classmethod
    def variable(cls, registry: VariableRegistry, name: str, multi) -> "BinaryPolynomial":
        return cls(registry, {(registry.index(name, multi),): 1.0})

    @classmethod
    def linear_form(cls, registry, const: float, weights: dict[int, float]) -> "BinaryPolynomial":
        terms = {(i,): w for i, w in weights.items()}
        terms[()] = const
        return cls(registry, terms)

    def copy(self) -> "BinaryPolynomial":
        p = BinaryPolynomial(self.registry)
        p.terms = dict(self.terms)
        return p

    @property
    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def _check(self, other: "BinaryPolynomial"):
        if other.registry is not self.registry:
            raise RegistryError("polynomials belong to different registries")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = BinaryPolynomial.constant(self.registry, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k, 0.0) + c
            if v == 0.0:
                out.pop(k, None)
            else:
                out[k] = v
        p = BinaryPolynomial(self.registry)
        p.terms = out
        return p

    __radd__ = __add__

    def __neg__(self):
        p = BinaryPolynomial(self.registry)
        p.terms = {k: -c for k, c in self.terms.items()}
        return p

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            s = float(other)
            p = BinaryPolynomial(self.registry)
            if s != 0.0:
                p.terms = {k: c * s for k, c in self.terms.items()}
            return p
        self._check(other)
        out: dict[tuple[int, ...], float] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                k = _key(ka + kb)
                v = out.get(k, 0.0) + ca * cb
                if v == 0.0:
                    out.pop(k, None)
                else:
                    out[k] = v
        p = BinaryPolynomial(self.registry)
        p.terms = out
        return p

    __rmul__ = __mul__

    def square(self) -> "BinaryPolynomial":
        """Square, with a direct expansion for affine forms.

        ``(c + sum a_i x_i)^2 = c^2 + sum (a_i^2 + 2 c a_i) x_i
        + 2 sum_{i<j} a_i a_j x_i x_j`` after the ``x^2 = x`` reduction.
        """
        if self.degree <= 1:
            const = self.terms.get((), 0.0)
            idx = [k[0] for k in self.terms if k]
            coef = [self.terms[(i,)] for i in idx]
            out: dict[tuple[int, ...], float] = {}
            if const != 0.0:
                out[()] = const * const
            for i, a in zip(idx, coef):
                v = a * a + 2.0 * const * a
                if v != 0.0:
                    out[(i,)] = v
            for p in range(len(idx)):
                for q in range(p + 1, len(idx)):
                    v = 2.0 * coef[p] * coef[q]
                    if v != 0.0:
                        k = (idx[p], idx[q]) if idx[p] < idx[q] else (idx[q], idx[p])
                        out[k] = out.get(k, 0.0) + v
            res = BinaryPolynomial(self.registry)
            res.terms = {k: c for k, c in out.items() if c != 0.0}
            return res
        return self * self

    def __pow__(self, exponent):
        if exponent == 2:
            return self.square()
        if exponent == 1:
            return self.copy()
        raise ValueError("only squaring is supported")

    def evaluate(self, sample) -> float:
        """Direct polynomial evaluation at a 0/1 assignment."""
        total = 0.0
        for k, c in self.terms.items():
            if all(sample[i] for i in k):
                total += c
        return total

    def compile(self) -> "QuboCompiled":
        return compile_qubo(self)


def poly_sum(a: BinaryPolynomial, b: BinaryPolynomial) -> BinaryPolynomial:
    return a + b


def poly_product(a: BinaryPolynomial, b: BinaryPolynomial) -> BinaryPolynomial:
    return a * b


def poly_square(a: BinaryPolynomial) -> BinaryPolynomial:
    return a.square()


class QuboCompiled:
    """Degree-two coefficients in evaluable form.

    ``linear`` is a dense per-variable weight vector over the registry's
    whole index space; ``quadratic`` maps index pairs (i < j) to weights.
    """

    def __init__(self, variable_count: int, linear: np.ndarray, quadratic: dict, offset: float):
        self.variable_count = variable_count
        self.linear = linear
        self.quadratic = quadratic
        self.offset = offset
        self._adj = None

    def energy(self, sample) -> float:
        bits = np.asarray(sample, dtype=np.uint8)
        if bits.shape != (self.variable_count,):
            raise ValueError(
                f"sample length {bits.shape} does not match variable count {self.variable_count}"
            )
        e = self.offset + float(self.linear[bits != 0].sum())
        for (i, j), w in self.quadratic.items():
            if bits[i] and bits[j]:
                e += w
        return e

    def energies(self, samples: np.ndarray) -> np.ndarray:
        """Vectorized energies for a (num_samples, variable_count) bit matrix."""
        bits = np.asarray(samples, dtype=np.float64)
        e = bits @ self.linear + self.offset
        for (i, j), w in self.quadratic.items():
            e += w * bits[:, i] * bits[:, j]
        return e

    def is_zero(self) -> bool:
        return not self.quadratic and not self.linear.any()

    def adjacency(self):
        """CSR neighbor lists (ptr, idx, weight) over the symmetric couplings."""
        if self._adj is None:
            n = self.variable_count
            counts = np.zeros(n + 1, dtype=np.int64)
            for i, j in self.quadratic:
                counts[i + 1] += 1
                counts[j + 1] += 1
            ptr = np.cumsum(counts).astype(np.int64)
            idx = np.zeros(ptr[-1], dtype=np.int64)
            wgt = np.zeros(ptr[-1], dtype=np.float64)
            cursor = ptr[:-1].copy()
            for (i, j), w in self.quadratic.items():
                idx[cursor[i]] = j
                wgt[cursor[i]] = w
                cursor[i] += 1
                idx[cursor[j]] = i
                wgt[cursor[j]] = w
                cursor[j] += 1
            self._adj = (ptr, idx, wgt)
        return self._adj


def compile_qubo(p: BinaryPolynomial) -> QuboCompiled:
    """Lossless transfer of degree <= 2 coefficients into QUBO form."""
    n = p.registry.total_count
    linear = np.zeros(n, dtype=np.float64)
    quadratic: dict[tuple[int, int], float] = {}
    offset = 0.0
    for k, c in p.terms.items():
        if len(k) == 0:
            offset += c
        elif len(k) == 1:
            linear[k[0]] += c
        elif len(k) == 2:
            quadratic[k] = quadratic.get(k, 0.0) + c
        else:
            name, multi = p.registry.label(k[0])
            raise DegreeError(
                f"term of degree {len(k)} (e.g. involving {name}{list(multi)}) cannot compile to QUBO"
            )
    quadratic = {k: w for k, w in quadratic.items() if w != 0.0}
    return QuboCompiled(n, linear, quadratic, offset)


def energy(q: QuboCompiled, sample) -> float:
    return q.energy(sample)


def add_slack_unary(
    reg: VariableRegistry, name: str, upper: float, step: float
) -> tuple[VariableRegistry, BinaryPolynomial]:
    """Weighted unary slack: ceil(upper/step) bits with weights step, 2*step, ...

    Every multiple of ``step`` in [0, upper] is representable as a subset sum.
    """
    if step <= 0 or upper <= 0:
        raise ValueError(f"upper and step must be positive, got upper={upper}, step={step}")
    if upper < step:
        raise ValueError(f"upper must be >= step, got upper={upper}, step={step}")
    count = math.ceil(upper / step)
    reg.register(name, [count])
    base = reg.offset(name)
    form = BinaryPolynomial(
        reg, {(base + l,): (l + 1) * step for l in range(count)}
    )
    return reg, form


def add_slack_binary(
    reg: VariableRegistry, name: str, upper: int
) -> tuple[VariableRegistry, BinaryPolynomial]:
    """Bounded binary slack: weights 1, 2, 4, ..., remainder; range exactly [0, upper]."""
    if upper < 1:
        raise ValueError(f"upper must be >= 1, got {upper}")
    count = math.ceil(math.log2(upper + 1))
    weights = [1 << b for b in range(count - 1)]
    weights.append(upper - sum(weights))
    reg.register(name, [count])
    base = reg.offset(name)
    form = BinaryPolynomial(reg, {(base + i,): w for i, w in enumerate(weights)})
    return reg, form
