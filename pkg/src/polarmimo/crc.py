"""Bitwise CRC over numpy bit vectors (MSB first, no reflection)."""

from functools import lru_cache

import numpy as np

from ._validation import check_bits

__all__ = ["Crc", "CRC16_CCITT", "attach_crc", "check_crc"]


class Crc:
    """A CRC of ``width`` bits with generator ``poly`` (leading term implied).

    ``init`` preloads the shift register.  Long division is done once per
    payload length to build a GF(2) generator matrix, after which checksums
    of whole batches are a single matrix product.
    """

    def __init__(self, poly=0x1021, width=16, init=0):
        if width < 1:
            raise ValueError("crc width must be >= 1")
        self.poly = int(poly)
        self.width = int(width)
        self.init = int(init)

    def __repr__(self):
        return f"Crc(poly={self.poly:#x}, width={self.width}, init={self.init:#x})"

    def register(self, bits):
        """Shift-register reference implementation; returns an int."""
        top = 1 << (self.width - 1)
        mask = (1 << self.width) - 1
        reg = self.init
        for b in np.asarray(bits).ravel():
            fb = ((reg & top) != 0) ^ bool(b)
            reg = (reg << 1) & mask
            if fb:
                reg ^= self.poly
        return reg

    def _to_bits(self, value):
        return np.array(
            [(value >> (self.width - 1 - k)) & 1 for k in range(self.width)],
            dtype=np.uint8,
        )

    @lru_cache(maxsize=32)
    def _matrix(self, length):
        zero = Crc(self.poly, self.width, 0)
        gen = np.zeros((length, self.width), dtype=np.uint8)
        for i in range(length):
            e = np.zeros(length, dtype=np.uint8)
            e[i] = 1
            gen[i] = self._to_bits(zero.register(e))
        offset = self._to_bits(self.register(np.zeros(length, dtype=np.uint8)))
        return gen, offset

    def checksum(self, bits):
        """CRC bits over the last axis of ``bits``."""
        b = check_bits(bits, "bits")
        gen, offset = self._matrix(b.shape[-1])
        return ((b.astype(np.int64) @ gen + offset) % 2).astype(np.uint8)

    def attach(self, payload):
        b = check_bits(payload, "payload")
        return np.concatenate([b, self.checksum(b)], axis=-1)

    def check(self, bits):
        """True where the trailing ``width`` bits match the payload CRC."""
        b = check_bits(bits, "bits")
        payload, tail = b[..., : -self.width], b[..., -self.width:]
        return np.all(self.checksum(payload) == tail, axis=-1)


CRC16_CCITT = Crc(0x1021, 16, 0)


def attach_crc(info_bits, poly=0x1021, crc_len=16, init=0):
    """Append a ``crc_len``-bit checksum to ``info_bits``."""
    return Crc(poly, crc_len, init).attach(info_bits)


def check_crc(bits, poly=0x1021, crc_len=16, init=0):
    return Crc(poly, crc_len, init).check(bits)
