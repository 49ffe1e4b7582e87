"""Reed-Solomon codec over GF(2^8) and per-layer block partitioning.

Each layer of a symbol is an independent QR-style codeword sequence. The
payload segment assigned to a layer is framed as::

    payload || 0x80 || 0x00 ... || crc16(payload || 0x80 || 0x00 ...)

split into the QR block structure of the (version, level) pair and
protected block by block. Block counts follow the QR version tables, so a
40-L layer carries 2956 data codewords, i.e. 2953 payload bytes.
"""

from __future__ import annotations

import binascii
import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BlockDecodeFailure, CapacityExceeded, InvalidParameter

PRIMITIVE_POLY = 0x11D
FRAME_OVERHEAD = 3  # terminator byte + 16-bit CRC
TERMINATOR = 0x80


class EcLevel(enum.Enum):
    L = "L"
    M = "M"
    Q = "Q"

    @property
    def fraction(self) -> float:
        return {"L": 0.07, "M": 0.15, "Q": 0.25}[self.value]

    @classmethod
    def parse(cls, value: "EcLevel | str") -> "EcLevel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise InvalidParameter(f"unknown error-correction level {value!r}") from None


# QR version tables, indexed by version (entry 0 unused).
_ECC_PER_BLOCK = {
    "L": (-1, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18, 20, 24, 26, 30, 22, 24, 28, 30, 28, 28,
          28, 28, 30, 30, 26, 28, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30),
    "M": (-1, 10, 16, 26, 18, 24, 16, 18, 22, 22, 26, 30, 22, 22, 24, 24, 28, 28, 26, 26, 26,
          26, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28, 28),
    "Q": (-1, 13, 22, 18, 26, 18, 24, 18, 22, 20, 24, 28, 26, 24, 20, 30, 24, 28, 28, 26, 30,
          28, 30, 30, 30, 30, 28, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30, 30),
}
_NUM_BLOCKS = {
    "L": (-1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 4, 6, 6, 6, 6, 7, 8,
          8, 9, 9, 10, 12, 12, 12, 13, 14, 15, 16, 17, 18, 19, 19, 20, 21, 22, 24, 25),
    "M": (-1, 1, 1, 1, 2, 2, 4, 4, 4, 5, 5, 5, 8, 9, 9, 10, 10, 11, 13, 14, 16,
          17, 17, 18, 20, 21, 23, 25, 26, 28, 29, 31, 33, 35, 37, 38, 40, 43, 45, 47, 49),
    "Q": (-1, 1, 1, 2, 2, 4, 4, 6, 6, 8, 8, 8, 10, 12, 16, 12, 17, 16, 18, 21, 20,
          23, 23, 25, 27, 29, 34, 34, 35, 38, 40, 43, 45, 48, 51, 53, 56, 59, 62, 65, 68),
}


# --- GF(256) arithmetic ------------------------------------------------------

def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIMITIVE_POLY
    exp[255:510] = exp[:255]
    return exp, log


GF_EXP, GF_LOG = _build_tables()
_EXP = GF_EXP.tolist()
_LOG = GF_LOG.tolist()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return _EXP[(_LOG[a] - _LOG[b]) % 255]


def gf_pow(a: int, power: int) -> int:
    if a == 0:
        return 0
    return _EXP[(_LOG[a] * power) % 255]


def poly_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] ^= gf_mul(a, b)
    return out


def poly_eval(p: list[int], x: int) -> int:
    """Horner evaluation; ``p`` is highest-degree first."""
    y = 0
    for c in p:
        y = gf_mul(y, x) ^ c
    return y


@lru_cache(maxsize=None)
def generator_poly(nsym: int) -> tuple[int, ...]:
    g = [1]
    for i in range(nsym):
        g = poly_mul(g, [1, _EXP[i]])
    return tuple(g)


@lru_cache(maxsize=None)
def _feedback_table(nsym: int) -> list[list[int]]:
    gen = generator_poly(nsym)[1:]
    return [[gf_mul(f, g) for g in gen] for f in range(256)]


def rs_ecc(data: bytes | list[int], nsym: int) -> bytes:
    """ECC codewords: remainder of data(x)·x^nsym divided by the generator."""
    table = _feedback_table(nsym)
    rem = [0] * nsym
    for byte in data:
        fb = byte ^ rem[0]
        row = table[fb]
        rem = [r ^ t for r, t in zip(rem[1:] + [0], row)]
    return bytes(rem)


def syndromes(codeword: bytes | np.ndarray, nsym: int) -> np.ndarray:
    """S_i = c(alpha^i) for i < nsym, evaluated in one vectorized pass."""
    c = np.frombuffer(bytes(codeword), dtype=np.uint8).astype(np.int64)
    n = c.size
    nz = c != 0
    powers = (n - 1 - np.arange(n))[nz]
    logs = GF_LOG[c[nz]]
    i = np.arange(nsym)[:, None]
    terms = GF_EXP[(logs[None, :] + i * powers[None, :]) % 255]
    if terms.shape[1] == 0:
        return np.zeros(nsym, dtype=np.int64)
    return np.bitwise_xor.reduce(terms, axis=1)


def rs_correct(codeword: bytes, nsym: int) -> tuple[bytes, int]:
    """Correct up to nsym//2 symbol errors; returns (codeword, corrected_count).

    Berlekamp-Massey for the locator, Chien search for positions and Forney
    for magnitudes. Raises BlockDecodeFailure when the syndrome pattern is
    inconsistent with a correctable error set.
    """
    synd = syndromes(codeword, nsym)
    if not synd.any():
        return bytes(codeword), 0
    s = [int(v) for v in synd]
    n = len(codeword)

    # Berlekamp-Massey; polynomials stored lowest degree first.
    err_loc = [1]
    prev = [1]
    L, m, b = 0, 1, 1
    for k in range(nsym):
        d = s[k]
        for i in range(1, L + 1):
            if i < len(err_loc):
                d ^= gf_mul(err_loc[i], s[k - i])
        if d == 0:
            m += 1
            continue
        coef = gf_div(d, b)
        shifted = [0] * m + [gf_mul(coef, c) for c in prev]
        updated = err_loc + [0] * max(0, len(shifted) - len(err_loc))
        for i, c in enumerate(shifted):
            updated[i] ^= c
        if 2 * L <= k:
            prev, b = err_loc, d
            L = k + 1 - L
            m = 1
        else:
            m += 1
        err_loc = updated
    while len(err_loc) > 1 and err_loc[-1] == 0:
        err_loc.pop()
    n_err = len(err_loc) - 1
    if n_err != L or n_err * 2 > nsym:
        raise BlockDecodeFailure(f"too many errors (locator degree {n_err}, t = {nsym // 2})")

    # Chien search: position p (from the end) is an error iff Lambda(alpha^-p) = 0.
    loc_hi = err_loc[::-1]
    positions = [p for p in range(n) if poly_eval(loc_hi, _EXP[(255 - p) % 255]) == 0]
    if len(positions) != n_err:
        raise BlockDecodeFailure("error locator has roots outside the codeword")

    # Forney: Omega = S(x)·Lambda(x) mod x^nsym, e_p = X·Omega(X^-1)/Lambda'(X^-1).
    omega = [0] * nsym
    for i, si in enumerate(s):
        if si == 0:
            continue
        for j, lj in enumerate(err_loc):
            if i + j < nsym:
                omega[i + j] ^= gf_mul(si, lj)
    out = bytearray(codeword)
    for p in positions:
        x_inv = _EXP[(255 - p) % 255]
        num = 0
        for j in range(len(omega) - 1, -1, -1):
            num = gf_mul(num, x_inv) ^ omega[j]
        den = 0
        for j in range(1, len(err_loc), 2):
            den ^= gf_mul(err_loc[j], gf_pow(x_inv, j - 1))
        if den == 0:
            raise BlockDecodeFailure("zero derivative in Forney step")
        magnitude = gf_mul(gf_pow(_EXP[p % 255], 1), gf_div(num, den))
        out[n - 1 - p] ^= magnitude
    if syndromes(bytes(out), nsym).any():
        raise BlockDecodeFailure("correction did not yield a codeword")
    return bytes(out), n_err


# --- block layout --------------------------------------------------------------

def num_raw_data_modules(version: int) -> int:
    """Modules left for codewords after all function patterns are placed."""
    if not 1 <= version <= 40:
        raise InvalidParameter(f"version must be in 1..40, got {version}")
    result = (16 * version + 128) * version + 64
    if version >= 2:
        numalign = version // 7 + 2
        result -= (25 * numalign - 10) * numalign - 55
        if version >= 7:
            result -= 36
    return result


@dataclass(frozen=True)
class BlockLayout:
    version: int
    level: EcLevel
    num_blocks: int
    ecc_per_block: int
    total_codewords: int

    @property
    def num_short(self) -> int:
        return self.num_blocks - self.total_codewords % self.num_blocks

    @property
    def short_len(self) -> int:
        return self.total_codewords // self.num_blocks

    def data_len(self, block_id: int) -> int:
        extra = 0 if block_id < self.num_short else 1
        return self.short_len - self.ecc_per_block + extra

    @property
    def data_codewords(self) -> int:
        return self.total_codewords - self.ecc_per_block * self.num_blocks

    @property
    def max_payload(self) -> int:
        return self.data_codewords - FRAME_OVERHEAD

    @property
    def t(self) -> int:
        return self.ecc_per_block // 2


@lru_cache(maxsize=None)
def block_layout(version: int, level: EcLevel | str) -> BlockLayout:
    level = EcLevel.parse(level)
    total = num_raw_data_modules(version) // 8
    return BlockLayout(
        version=version,
        level=level,
        num_blocks=_NUM_BLOCKS[level.value][version],
        ecc_per_block=_ECC_PER_BLOCK[level.value][version],
        total_codewords=total,
    )


def max_payload(version: int, level: EcLevel | str) -> int:
    return block_layout(version, level).max_payload


@dataclass(frozen=True)
class RsBlock:
    data_codewords: bytes
    ecc_codewords: bytes
    block_id: int
    layer_id: int = 0

    @property
    def t(self) -> int:
        return len(self.ecc_codewords) // 2

    @property
    def codeword(self) -> bytes:
        return self.data_codewords + self.ecc_codewords


def frame_payload(payload: bytes, data_codewords: int) -> bytes:
    if len(payload) > data_codewords - FRAME_OVERHEAD:
        raise CapacityExceeded(
            f"payload of {len(payload)} bytes exceeds {data_codewords - FRAME_OVERHEAD}",
            max_payload=data_codewords - FRAME_OVERHEAD,
        )
    body = bytes(payload) + bytes([TERMINATOR])
    body += bytes(data_codewords - 2 - len(body))
    crc = binascii.crc_hqx(body, 0xFFFF)
    return body + crc.to_bytes(2, "big")


def unframe_payload(data: bytes) -> bytes | None:
    """Inverse of frame_payload; None when the checksum or terminator is wrong."""
    body, crc = data[:-2], int.from_bytes(data[-2:], "big")
    if binascii.crc_hqx(body, 0xFFFF) != crc:
        return None
    stripped = body.rstrip(b"\x00")
    if not stripped or stripped[-1] != TERMINATOR:
        return None
    return stripped[:-1]


def rs_encode(payload: bytes, level: EcLevel | str, version: int, layer_id: int = 0) -> list[RsBlock]:
    """Frame ``payload`` and split it into ECC-protected blocks."""
    layout = block_layout(version, level)
    if len(payload) > layout.max_payload:
        raise CapacityExceeded(
            f"payload of {len(payload)} bytes exceeds {layout.max_payload} "
            f"(version {version}, level {layout.level.value})",
            max_payload=layout.max_payload,
        )
    framed = frame_payload(payload, layout.data_codewords)
    blocks = []
    pos = 0
    for b in range(layout.num_blocks):
        n = layout.data_len(b)
        chunk = framed[pos:pos + n]
        pos += n
        blocks.append(RsBlock(chunk, rs_ecc(chunk, layout.ecc_per_block), b, layer_id))
    return blocks


def rs_decode_block(block: RsBlock) -> tuple[bytes, int]:
    """Return (data codewords, corrected count) or raise BlockDecodeFailure."""
    nsym = len(block.ecc_codewords)
    fixed, count = rs_correct(block.codeword, nsym)
    return fixed[: len(block.data_codewords)], count


def interleave(blocks: list[RsBlock]) -> bytes:
    """QR byte interleaving: data columns across blocks, then ECC columns."""
    out = bytearray()
    longest = max(len(b.data_codewords) for b in blocks)
    for i in range(longest):
        for b in blocks:
            if i < len(b.data_codewords):
                out.append(b.data_codewords[i])
    for i in range(len(blocks[0].ecc_codewords)):
        for b in blocks:
            out.append(b.ecc_codewords[i])
    return bytes(out)


@lru_cache(maxsize=None)
def codeword_owner(version: int, level: EcLevel | str) -> tuple[tuple[int, int], ...]:
    """For each interleaved codeword index: (block_id, index within block codeword)."""
    layout = block_layout(version, level)
    owners = []
    longest = max(layout.data_len(b) for b in range(layout.num_blocks))
    for i in range(longest):
        for b in range(layout.num_blocks):
            if i < layout.data_len(b):
                owners.append((b, i))
    for i in range(layout.ecc_per_block):
        for b in range(layout.num_blocks):
            owners.append((b, layout.data_len(b) + i))
    return tuple(owners)


def deinterleave(stream: bytes, version: int, level: EcLevel | str, layer_id: int = 0) -> list[RsBlock]:
    layout = block_layout(version, level)
    cw = [bytearray(layout.data_len(b) + layout.ecc_per_block) for b in range(layout.num_blocks)]
    for byte, (b, i) in zip(stream, codeword_owner(version, level)):
        cw[b][i] = byte
    return [
        RsBlock(bytes(c[: layout.data_len(b)]), bytes(c[layout.data_len(b):]), b, layer_id)
        for b, c in enumerate(cw)
    ]
