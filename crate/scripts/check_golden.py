#!/usr/bin/env python3
"""Independent decoder for the stored fixture session transcript.

Parses every frame of crates/core/tests/golden/fixture_psi_session.hex,
checks the message order and field layout, and verifies that each group
element lies in the order-q subgroup of the toy parameter set.
"""
import pathlib
import sys

from gen_params import generate

ROOT = pathlib.Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "crates/core/tests/golden/fixture_psi_session.hex"


def frames(data: bytes):
    i = 0
    while i < len(data):
        n = int.from_bytes(data[i:i + 4], "big")
        yield data[i + 4], data[i + 5:i + 4 + n]
        i += 4 + n
    assert i == len(data), "trailing bytes"


def elements(body: bytes, p: int, q: int, width: int):
    count = int.from_bytes(body[:4], "big")
    out = [int.from_bytes(body[4 + j * width:4 + (j + 1) * width], "big") for j in range(count)]
    for e in out:
        assert 1 < e < p and pow(e, q, p) == 1, "element outside subgroup"
    return out, body[4 + count * width:]


def main() -> int:
    p, q, _ = generate("toy", 1024, 160)
    width = (p.bit_length() + 7) // 8
    data = bytes.fromhex(GOLDEN.read_text().strip())
    seen = []
    for ty, body in frames(data):
        seen.append(ty)
        if ty == 0x01:
            assert body[:3] == bytes([1, 0, 0]), "version/params/mode"
            assert body[3:] == b"\x00\x01x\x00\x01y"
        elif ty == 0x03:
            assert int.from_bytes(body, "big") == 2, "fixture local2 is 2"
        elif ty == 0x04:
            els, rest = elements(body[1:], p, q, width)
            assert rest == b""
        elif ty == 0x05:
            _, rest = elements(body[1:], p, q, width)
            tags = int.from_bytes(rest[:4], "big")
            assert len(rest) == 4 + 32 * tags
        else:
            assert body == b""
    assert seen == [1, 3, 4, 5, 4, 5, 4, 5, 6], seen
    print(f"ok: {len(seen)} frames, {len(data)} bytes")
    return 0


if __name__ == "__main__":
    sys.exit(main())
