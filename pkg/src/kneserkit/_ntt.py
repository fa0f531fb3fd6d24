"""Exact cyclic convolution of integer grids via number-theoretic transforms.

Two NTT-friendly primes below 2**30 are used and recombined with CRT, so any
result below ~4.7e17 is reproduced exactly. Products of two residues stay
below 2**60 and never overflow int64.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# (prime, primitive root, largest power-of-two transform length)
PRIMES = ((998244353, 3, 1 << 23), (469762049, 3, 1 << 26))
EXACT_LIMIT = PRIMES[0][0] * PRIMES[1][0]


@lru_cache(maxsize=None)
def _bitrev(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _roots(p: int, g: int, n: int, invert: bool) -> np.ndarray:
    """w^j mod p for j < n/2, with w a primitive n-th root of unity (or its inverse)."""
    w = pow(g, (p - 1) // n, p)
    if invert:
        w = pow(w, p - 2, p)
    half = max(n // 2, 1)
    table = np.ones(1, dtype=np.int64)
    step = w
    while table.size < half:
        table = np.concatenate((table, table * step % p))
        step = step * step % p
    return table[:half]


def _ntt_last_axis(a: np.ndarray, p: int, g: int, invert: bool) -> np.ndarray:
    n = a.shape[-1]
    lead = a.shape[:-1]
    a = a[..., _bitrev(n)]
    roots = _roots(p, g, n, invert)
    length = 2
    while length <= n:
        half = length // 2
        w = roots[:: n // length][:half]
        blocks = a.reshape(lead + (n // length, length))
        u = blocks[..., :half].copy()
        v = blocks[..., half:]
        v *= w
        v %= p
        np.add(u, v, out=blocks[..., :half])
        np.subtract(u, v, out=blocks[..., half:])
        blocks %= p
        length *= 2
    if invert:
        a = a * pow(n, p - 2, p) % p
    return a


def _transform(a: np.ndarray, p: int, g: int, invert: bool) -> np.ndarray:
    for axis in range(a.ndim):
        moved = np.moveaxis(a, axis, -1)
        a = np.moveaxis(_ntt_last_axis(moved, p, g, invert), -1, axis)
    return a


def _crt(r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    (p1, _, _), (p2, _, _) = PRIMES
    inv = pow(p1, p2 - 2, p2)
    k = (r2 - r1) % p2 * inv % p2
    return r1 + p1 * k


def cyclic_convolve(a: np.ndarray, b: np.ndarray, bound: int | None = None) -> np.ndarray:
    """Cyclic convolution of two nonnegative integer grids of equal shape.

    ``bound`` is an upper bound on every entry of the linear convolution; when
    it is below the first prime a single transform suffices.
    """
    if a.shape != b.shape:
        raise ValueError("shapes differ")
    shape = a.shape
    padded = tuple(1 << max(1, (2 * n - 1).bit_length()) for n in shape)
    for (_, _, cap) in PRIMES:
        if max(padded) > cap:
            raise ValueError(f"axis too long for exact NTT: {max(shape)}")
    primes = PRIMES[:1] if bound is not None and bound < PRIMES[0][0] else PRIMES
    residues = []
    for p, g, _ in primes:
        fa = np.zeros(padded, dtype=np.int64)
        fb = np.zeros(padded, dtype=np.int64)
        region = tuple(slice(0, n) for n in shape)
        fa[region] = a % p
        fb[region] = b % p
        prod = _transform(fa, p, g, False) * _transform(fb, p, g, False) % p
        residues.append(_transform(prod, p, g, True))
    linear = residues[0] if len(residues) == 1 else _crt(*residues)
    # fold the linear convolution (length 2n-1 per axis) back onto the cycle
    out = linear
    for axis, n in enumerate(shape):
        head = np.take(out, np.arange(n), axis=axis)
        tail = np.take(out, np.arange(n, 2 * n), axis=axis)
        out = head + tail
    return out
