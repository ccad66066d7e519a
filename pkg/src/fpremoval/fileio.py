"""Binary colouring files and seeded colouring generation.

Layout: ``b"FPNC"``, then one byte each for version (1), p, n and r, then
p^n payload bytes.  Byte k is the colour (1..r) of the point whose base-p
digits, least-significant first, are the coordinates.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np

from .counting import Colouring
from .gf import check_cap, check_prime

MAGIC = b"FPNC"
VERSION = 1


class FormatError(ValueError):
    pass


def encode_colouring(phi: Colouring) -> bytes:
    header = MAGIC + bytes([VERSION, phi.p, phi.n, phi.r])
    return header + phi.table.astype(np.uint8).tobytes()


def decode_colouring(data: bytes) -> Colouring:
    if len(data) < 8 or data[:4] != MAGIC:
        raise FormatError("not a colouring file (bad magic)")
    version, p, n, r = data[4], data[5], data[6], data[7]
    if version != VERSION:
        raise FormatError(f"unsupported colouring file version {version}")
    try:
        check_prime(p)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if r < 1:
        raise FormatError("colour count must be positive")
    size = p**n
    check_cap(size, "colouring file")
    payload = data[8:]
    if len(payload) != size:
        raise FormatError(f"payload has {len(payload)} bytes, expected {size}")
    table = np.frombuffer(payload, dtype=np.uint8)
    if size and (table.min() < 1 or table.max() > r):
        raise FormatError(f"payload colours must lie in 1..{r}")
    return Colouring.of(table, p, n, r)


def write_colouring(path, phi: Colouring) -> None:
    Path(path).write_bytes(encode_colouring(phi))


def read_colouring(path) -> Colouring:
    return decode_colouring(Path(path).read_bytes())


def parse_mode(mode: str, r: int):
    """``uniform`` or ``sparse:<colour>:<num/den>``."""
    if mode == "uniform":
        return ("uniform",)
    parts = mode.split(":")
    if len(parts) != 3 or parts[0] != "sparse":
        raise ValueError(f"unknown mode {mode!r}")
    try:
        colour = int(parts[1])
        density = Fraction(parts[2])
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad sparse mode {mode!r}") from exc
    if not 1 <= colour <= r:
        raise ValueError(f"sparse colour {colour} outside 1..{r}")
    if not 0 <= density <= 1:
        raise ValueError(f"density {density} outside [0, 1]")
    if density < 1 and r == 1:
        raise ValueError("a sparse colouring needs a second colour")
    return ("sparse", colour, density)


def generate_colouring(p: int, n: int, r: int, seed: int, mode: str = "uniform") -> Colouring:
    """Seeded colouring; sparse mode places round(density * p^n) cells of one colour."""
    check_prime(p)
    if r < 1 or r > 255:
        raise ValueError("r must lie in 1..255")
    size = p**n
    check_cap(size, "colouring generation")
    spec = parse_mode(mode, r)
    rng = np.random.default_rng(seed)
    if spec[0] == "uniform":
        table = rng.integers(1, r + 1, size=size)
        return Colouring.of(table, p, n, r)
    _, colour, density = spec
    count = int(density * size + Fraction(1, 2))
    positions = rng.choice(size, size=count, replace=False)
    others = [c for c in range(1, r + 1) if c != colour]
    table = np.array(others, dtype=np.int64)[rng.integers(0, len(others), size=size)] if others else np.full(size, colour)
    table[positions] = colour
    return Colouring.of(table, p, n, r)


__all__ = [
    "FormatError",
    "decode_colouring",
    "encode_colouring",
    "generate_colouring",
    "parse_mode",
    "read_colouring",
    "write_colouring",
]
