#!/usr/bin/env python3
"""Regenerates the embedded Schnorr-group parameter sets.

Procedure, fully deterministic:
  1. q is the first prime >= SHA-256-derived seed of q_bits bits (top bit forced).
  2. p = k*q + 1 where k is the first even value >= floor(2^(p_bits-1) / q)
     plus a SHA-256-derived offset of (p_bits - q_bits - 2) bits, such that p
     is prime (p then has exactly p_bits bits).
  3. g = h^((p-1)/q) mod p for the smallest h >= 2 with g != 1.

Seeds are expanded from the labels "lpp-params/<name>/q" and
"lpp-params/<name>/k" by concatenating SHA-256(label || counter_be32).
"""
import hashlib
import sys

import sympy


def expand(label: str, bits: int) -> int:
    out = b""
    ctr = 0
    while len(out) * 8 < bits:
        out += hashlib.sha256(label.encode() + ctr.to_bytes(4, "big")).digest()
        ctr += 1
    v = int.from_bytes(out, "big") >> (len(out) * 8 - bits)
    return v | (1 << (bits - 1))


def generate(name: str, p_bits: int, q_bits: int):
    q = sympy.nextprime(expand(f"lpp-params/{name}/q", q_bits) - 1)
    assert q.bit_length() == q_bits
    k = ((1 << (p_bits - 1)) // q + expand(f"lpp-params/{name}/k", p_bits - q_bits - 2)) & ~1
    while True:
        p = k * q + 1
        if p.bit_length() > p_bits:
            raise SystemExit("ran out of room")
        if p.bit_length() == p_bits and sympy.isprime(p):
            break
        k += 2
    h = 2
    while True:
        g = pow(h, (p - 1) // q, p)
        if g != 1:
            break
        h += 1
    return p, q, g


if __name__ == "__main__":
    for name, pb, qb in [("toy", 1024, 160), ("secure", 2048, 224)]:
        p, q, g = generate(name, pb, qb)
        print(f"{name}:")
        print(f"  p = {p:x}")
        print(f"  q = {q:x}")
        print(f"  g = {g:x}")
        sys.stdout.flush()
