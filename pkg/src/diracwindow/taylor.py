"""
Truncated Taylor series ("jets") arithmetic.

A jet of order ``N`` is a length ``N+1`` array ``c`` holding the Taylor
coefficients of a function about some point, ``f(x0 + h) = sum c[k] h**k``.
All operations truncate at the order of their inputs. Complex coefficients are
supported throughout.
"""

from math import factorial

import numpy as np


def _dtype(*arrays):
    return np.result_type(float, *arrays)


def variable(x0, order: int) -> np.ndarray:
    """Jet of the identity function about ``x0``."""
    c = np.zeros(order + 1, dtype=_dtype(np.asarray(x0)))
    c[0] = x0
    if order >= 1:
        c[1] = 1.0
    return c


def constant(value, order: int) -> np.ndarray:
    c = np.zeros(order + 1, dtype=_dtype(np.asarray(value)))
    c[0] = value
    return c


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = min(len(a), len(b))
    return np.convolve(a[:n], b[:n])[:n]


def reciprocal(a: np.ndarray) -> np.ndarray:
    if a[0] == 0:
        raise ZeroDivisionError("jet reciprocal of a series with zero constant term")
    n = len(a)
    out = np.zeros(n, dtype=_dtype(a))
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1:k + 1], out[k - 1::-1][:k]) / a[0]
    return out


def div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return mul(a, reciprocal(b))


def power(a: np.ndarray, p: int) -> np.ndarray:
    if p < 0:
        return power(reciprocal(a), -p)
    out = constant(1.0, len(a) - 1).astype(_dtype(a))
    base = a
    while p:
        if p & 1:
            out = mul(out, base)
        base = mul(base, base)
        p >>= 1
    return out


def exp(a: np.ndarray) -> np.ndarray:
    # f' = a' f  =>  k f_k = sum_{j=1..k} j a_j f_{k-j}
    n = len(a)
    out = np.zeros(n, dtype=_dtype(a))
    out[0] = np.exp(a[0])
    for k in range(1, n):
        j = np.arange(1, k + 1)
        out[k] = np.dot(j * a[1:k + 1], out[k - j]) / k
    return out


def sincos(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = len(a)
    s = np.zeros(n, dtype=_dtype(a))
    c = np.zeros(n, dtype=_dtype(a))
    s[0] = np.sin(a[0])
    c[0] = np.cos(a[0])
    for k in range(1, n):
        j = np.arange(1, k + 1)
        ja = j * a[1:k + 1]
        s[k] = np.dot(ja, c[k - j]) / k
        c[k] = -np.dot(ja, s[k - j]) / k
    return s, c


def compose(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Series of ``outer(inner(h))`` where ``inner[0]`` is the expansion
    point of ``outer``; only ``inner[1:]`` enters the composition."""
    n = len(inner)
    shift = np.array(inner, dtype=_dtype(inner, outer))
    shift[0] = 0.0
    out = np.zeros(n, dtype=_dtype(inner, outer))
    # Horner in the shifted jet
    for coef in outer[:n][::-1]:
        out = mul(out, shift)
        out[0] += coef
    return out


def derivative(a: np.ndarray) -> np.ndarray:
    """Jet of ``f'`` (one order lower)."""
    return a[1:] * np.arange(1, len(a))


def from_derivatives(derivs) -> np.ndarray:
    d = np.asarray(derivs)
    return d / np.array([factorial(k) for k in range(len(d))], dtype=float)


def to_derivatives(coeffs) -> np.ndarray:
    c = np.asarray(coeffs)
    return c * np.array([factorial(k) for k in range(len(c))], dtype=float)
