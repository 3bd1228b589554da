"""Exact and floating-point linear algebra shared by the geometry modules.

Arrays with ``dtype=object`` hold :class:`fractions.Fraction` (or ``int``)
entries and are treated as exact; every other dtype is treated as float64.
Each helper dispatches on that distinction: exact kernels go through sympy,
float kernels through numpy/scipy. Conversions between the two modes are
always explicit (:func:`exact`, :func:`as_float`, :func:`rationalize`).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from fractions import Fraction
from typing import Any

import numpy as np
import scipy.linalg
import sympy
from numpy.typing import NDArray
from sympy.matrices.normalforms import smith_normal_form
from sympy.polys.domains import ZZ

Array = NDArray[Any]
Scalar = Fraction | float

# Relative tolerance for float-mode equality tests on slice geometry.
FLOAT_RTOL = 1e-12


def is_exact(values: Array) -> bool:
    """True for object arrays, which carry exact rationals."""
    return bool(values.dtype == object)


def parse_rational(value: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, integer or decimal text into a Fraction."""
    if isinstance(value, bool):
        raise ValueError(f"not a rational number: {value!r}")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ValueError(f"not a rational number: {value!r}") from exc


def to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, sympy.Basic):
        raise TypeError(f"expected a rational sympy number, got {value!r}")
    return Fraction(value)


_to_fraction_ufunc = np.frompyfunc(to_fraction, 1, 1)


def exact(values: Any) -> Array:
    """Convert to an object array of Fractions (floats convert without rounding)."""
    arr = np.asarray(values, dtype=object)
    return np.asarray(_to_fraction_ufunc(arr), dtype=object)


def as_float(values: Any) -> Array:
    return np.asarray(values, dtype=float)


def same_mode(values: Any, reference: Array) -> Array:
    """Convert ``values`` to the numeric mode of ``reference``."""
    return exact(values) if is_exact(reference) else as_float(values)


def rationalize(values: Any, max_denominator: int) -> Array:
    """Closest fractions with bounded denominators to a float array."""
    arr = as_float(values)
    out = np.empty(arr.shape, dtype=object)
    for index, value in np.ndenumerate(arr):
        out[index] = Fraction(float(value)).limit_denominator(max_denominator)
    return out


def format_exact(values: Any) -> Any:
    """Render an exact scalar/array as nested lists of ``"p/q"`` strings."""
    if isinstance(values, np.ndarray):
        return [format_exact(v) for v in values]
    return str(to_fraction(values))


# ---------------- sympy bridge ----------------


def to_sympy(matrix: Array) -> sympy.Matrix:
    rows = np.atleast_2d(np.asarray(matrix, dtype=object))
    return sympy.Matrix(
        [[sympy.Rational(f.numerator, f.denominator) for f in map(to_fraction, row)] for row in rows]
    )


def from_sympy(matrix: sympy.Matrix) -> Array:
    out = np.empty(matrix.shape, dtype=object)
    for i in range(matrix.rows):
        for j in range(matrix.cols):
            out[i, j] = to_fraction(matrix[i, j])
    return out


# ---------------- dispatching kernels ----------------


def det(matrix: Array) -> Scalar:
    if is_exact(matrix):
        return to_fraction(to_sympy(matrix).det(method="bareiss"))
    return float(np.linalg.det(matrix))


def rank(matrix: Array, tol: float | None = None) -> int:
    if matrix.size == 0:
        return 0
    if is_exact(matrix):
        return int(to_sympy(matrix).rank())
    return int(np.linalg.matrix_rank(np.atleast_2d(matrix), tol=tol))


def null_space(matrix: Array) -> Array:
    """Basis of the right kernel, one vector per row."""
    matrix = np.atleast_2d(matrix)
    if is_exact(matrix):
        vectors = to_sympy(matrix).nullspace()
        if not vectors:
            return np.empty((0, matrix.shape[1]), dtype=object)
        return np.vstack([from_sympy(v.T) for v in vectors])
    return np.asarray(scipy.linalg.null_space(matrix).T)


def row_basis(matrix: Array) -> Array:
    """Basis of the row space, one vector per row."""
    matrix = np.atleast_2d(matrix)
    if is_exact(matrix):
        rows = to_sympy(matrix).rowspace()
        if not rows:
            return np.empty((0, matrix.shape[1]), dtype=object)
        return np.vstack([from_sympy(r) for r in rows])
    return np.asarray(scipy.linalg.orth(matrix.T).T)


def solve(a: Array, b: Array) -> Array:
    """Solve the square system ``a x = b``; raises ValueError when singular."""
    if is_exact(a) or is_exact(b):
        try:
            solution = to_sympy(exact(a)).LUsolve(to_sympy(exact(b).reshape(-1, 1)))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError("singular system") from exc
        return from_sympy(solution).reshape(-1)
    try:
        return np.asarray(np.linalg.solve(a, b))
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular system") from exc


def inverse(matrix: Array) -> Array:
    if is_exact(matrix):
        return from_sympy(to_sympy(matrix).inv())
    return np.asarray(np.linalg.inv(matrix))


def is_zero(values: Any, tol: float = 0.0) -> Any:
    """Elementwise zero test: exact equality for rationals, ``|x| <= tol`` otherwise."""
    arr = np.asarray(values)
    if is_exact(arr):
        return arr == 0
    return np.abs(arr) <= tol


def sign(value: Scalar, tol: float = 0.0) -> int:
    if isinstance(value, Fraction):
        return (value > 0) - (value < 0)
    if abs(value) <= tol:
        return 0
    return 1 if value > 0 else -1


# ---------------- integer lattice helpers ----------------


def primitive_integer(values: Iterable[Any]) -> tuple[int, ...]:
    """The primitive integer vector positively proportional to a rational vector."""
    fracs = [to_fraction(v) for v in values]
    scale = math.lcm(*(f.denominator for f in fracs))
    ints = [int(f * scale) for f in fracs]
    g = math.gcd(*ints)
    if g == 0:
        raise ValueError("the zero vector has no primitive multiple")
    return tuple(i // g for i in ints)


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def integer_kernel_basis(vector: Sequence[int]) -> list[tuple[int, ...]]:
    """A basis of the lattice {v in Z^n : <v, vector> = 0}.

    Column operations by 2x2 unimodular blocks bring ``vector`` to
    ``(g, 0, ..., 0)``; the transformed columns 1..n-1 then span the kernel.
    """
    values = [int(x) for x in vector]
    if not any(values):
        raise ValueError("kernel basis of the zero vector is not a hyperplane lattice")
    n = len(values)
    columns = [[int(i == j) for i in range(n)] for j in range(n)]
    for j in range(1, n):
        x, y = values[0], values[j]
        if y == 0:
            continue
        g, s, t = _ext_gcd(x, y)
        col0, colj = columns[0], columns[j]
        columns[0] = [s * u + t * v for u, v in zip(col0, colj, strict=True)]
        columns[j] = [(-y // g) * u + (x // g) * v for u, v in zip(col0, colj, strict=True)]
        values[0], values[j] = g, 0
    return [tuple(c) for c in columns[1:]]


def elementary_divisors(rows: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Nonzero Smith normal form divisors of an integer matrix."""
    snf = smith_normal_form(sympy.Matrix([list(r) for r in rows]), domain=ZZ)
    diagonal = (snf[i, i] for i in range(min(snf.shape)))
    return tuple(abs(int(d)) for d in diagonal if d != 0)
