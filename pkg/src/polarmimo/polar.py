"""Polar transform, (sub)code encoding and min-sum SC / SCL decoding.

Codewords are ``c = u F^{(x)t}`` with ``F = [[1, 0], [1, 1]]`` and no bit
reversal, so phase ``i`` of the decoder is input ``u_i``.  Soft inputs follow
the LLR sign convention: a positive value favours bit 0.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._scl import scl_kernel
from ._validation import check_bits, check_finite, check_power_of_two

__all__ = [
    "CodeSpec",
    "SCLResult",
    "polar_transform",
    "encode",
    "llr_even",
    "llr_odd",
    "penalty",
    "phase_statistics",
    "sc_decode",
    "scl_decode_segment",
    "correlation_discrepancy",
]


def polar_transform(u):
    """Multiply ``u`` by ``F^{(x)t}`` over GF(2).

    Works on a single vector or on the last axis of a stack of vectors and
    runs the ``t``-stage butterfly.  The transform is its own inverse.
    """
    x = check_bits(u, "u").copy()
    n = check_power_of_two(x.shape[-1])
    lead = x.shape[:-1]
    s = 1
    while s < n:
        v = x.reshape(lead + (n // (2 * s), 2, s))
        v[..., 0, :] ^= v[..., 1, :]
        s *= 2
    return x


@dataclass(frozen=True)
class CodeSpec:
    """A polar subcode of length ``n``.

    Parameters
    ----------
    n : int
        Code length, a power of two.
    frozen : tuple of int
        Frozen input positions in ascending order.
    constraints : tuple of tuple of int
        One row per frozen position: the source positions whose parity
        defines that frozen symbol.  An empty row is a static zero.
    """

    n: int
    frozen: tuple = ()
    constraints: tuple = field(default=None)

    def __post_init__(self):
        n = check_power_of_two(self.n, "n")
        if n < 2:
            raise ValueError("code length must be at least 2")
        frozen = tuple(sorted(int(j) for j in self.frozen))
        if len(set(frozen)) != len(frozen):
            raise ValueError("duplicate frozen index")
        if frozen and (frozen[0] < 0 or frozen[-1] >= n):
            raise ValueError("frozen index out of range")
        rows = self.constraints
        if rows is None:
            rows = tuple(() for _ in frozen)
        elif isinstance(rows, dict):
            rows = tuple(tuple(rows.get(j, ())) for j in frozen)
        else:
            # rows arrive parallel to the caller's frozen order
            order = sorted(range(len(self.frozen)), key=lambda k: int(self.frozen[k]))
            rows = tuple(tuple(rows[k]) for k in order)
        if len(rows) != len(frozen):
            raise ValueError("need one constraint row per frozen index")
        clean = []
        for j, row in zip(frozen, rows):
            row = tuple(sorted(set(int(z) for z in row)))
            if row and (row[0] < 0 or row[-1] >= j):
                raise ValueError(f"constraint for u_{j} must only use earlier inputs")
            clean.append(row)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "frozen", frozen)
        object.__setattr__(self, "constraints", tuple(clean))

    @classmethod
    def polar(cls, n, frozen):
        """Classical polar code: every frozen symbol is a static zero."""
        return cls(n, tuple(frozen))

    @property
    def dimension(self):
        return self.n - len(self.frozen)

    @cached_property
    def info_set(self):
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.frozen)] = False
        return np.flatnonzero(mask)

    @cached_property
    def frozen_mask(self):
        mask = np.zeros(self.n, dtype=np.uint8)
        mask[list(self.frozen)] = 1
        return mask

    @cached_property
    def _csr(self):
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        rows = dict(zip(self.frozen, self.constraints))
        idx = []
        for i in range(self.n):
            idx.extend(rows.get(i, ()))
            ptr[i + 1] = len(idx)
        return ptr, np.asarray(idx, dtype=np.int64)

    def rows(self):
        return dict(zip(self.frozen, self.constraints))

    def is_dynamic(self):
        return any(self.constraints)

    def to_text(self):
        lines = [f"n {self.n}"]
        for j, row in zip(self.frozen, self.constraints):
            if row:
                lines.append(f"frozen {j} = " + " ".join(map(str, row)))
            else:
                lines.append(f"frozen {j}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        n, frozen, rows = parse_spec_text(text)
        return cls(n, tuple(frozen), tuple(rows))


def parse_spec_text(text):
    """Parse ``n <len>`` / ``frozen <j> [= <z> ...]`` lines.

    Returns ``(n, frozen, rows)``; ``#`` starts a comment.
    """
    n = None
    frozen, rows = [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "n":
            n = int(rest)
        elif head == "frozen":
            lhs, _, rhs = rest.partition("=")
            frozen.append(int(lhs))
            rows.append(tuple(int(z) for z in rhs.split()))
        else:
            raise ValueError(f"unrecognised line: {raw!r}")
    if n is None:
        raise ValueError("missing 'n <length>' line")
    return n, frozen, rows


def fill_frozen(u, spec):
    """Evaluate the frozen symbols of ``u`` in place, in ascending order."""
    for j, row in zip(spec.frozen, spec.constraints):
        u[..., j] = np.bitwise_xor.reduce(u[..., list(row)], axis=-1) if row else 0
    return u


def encode(info_bits, spec):
    """Encode ``info_bits`` (last axis) with ``spec``; returns the codeword."""
    info = check_bits(info_bits, "info_bits")
    if info.shape[-1] != spec.dimension:
        raise ValueError(
            f"expected {spec.dimension} information bits, got {info.shape[-1]}"
        )
    u = np.zeros(info.shape[:-1] + (spec.n,), dtype=np.uint8)
    u[..., spec.info_set] = info
    fill_frozen(u, spec)
    return polar_transform(u)


def llr_even(a, b):
    """Min-sum check-node update, ``sgn(a) sgn(b) min(|a|, |b|)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sign = np.where((a < 0) != (b < 0), -1.0, 1.0)
    out = sign * np.minimum(np.abs(a), np.abs(b))
    return out if out.ndim else float(out)


def llr_odd(a, b, u_prev):
    """Variable-node update ``(-1)^u_prev a + b``."""
    out = np.where(np.asarray(u_prev) != 0, -1.0, 1.0) * np.asarray(a, float) + b
    out = np.asarray(out, dtype=np.float64)
    return out if out.ndim else float(out)


def penalty(u, s):
    """Zero when bit ``u`` agrees with the sign of ``s``, else ``-|s|``."""
    s = np.asarray(s, dtype=np.float64)
    hard = (s < 0).astype(np.uint8)
    out = np.where(np.asarray(u) == hard, 0.0, -np.abs(s))
    return out if out.ndim else float(out)


def correlation_discrepancy(codeword, soft):
    """``-sum |soft_i|`` over positions where the codeword bit disagrees with
    the hard decision of ``soft``."""
    soft = np.asarray(soft, dtype=np.float64)
    hard = (soft < 0).astype(np.uint8)
    wrong = np.asarray(codeword) != hard
    return -np.sum(np.abs(soft) * wrong, axis=-1)


def phase_statistics(soft, u):
    """Phase statistics ``S^{(i)}`` when every earlier decision equals ``u``.

    This is genie-aided SC: ``soft`` and ``u`` are ``(batch, n)`` and the
    result holds the statistic seen at each phase.
    """
    soft = np.atleast_2d(np.asarray(soft, dtype=np.float64))
    u = np.atleast_2d(check_bits(u, "u"))
    n = soft.shape[-1]
    if n == 1:
        return soft.copy()
    h = n // 2
    a, b = soft[:, :h], soft[:, h:]
    left = phase_statistics(llr_even(a, b), u[:, :h])
    p = polar_transform(u[:, :h])
    right = phase_statistics(b + np.where(p != 0, -a, a), u[:, h:])
    return np.concatenate([left, right], axis=1)


def sc_decode(soft, spec, external=None):
    """Plain successive-cancellation decoding; returns the decided ``u``.

    ``external`` optionally XORs a fixed bit into each frozen symbol, the
    way cross-antenna constraints enter a per-antenna code.
    """
    soft = check_finite(soft, "soft")
    if soft.shape != (spec.n,):
        raise ValueError("soft input length does not match the code")
    ext = np.zeros(spec.n, np.uint8) if external is None else check_bits(external)
    frozen = spec.frozen_mask
    rows = spec.rows()
    u = np.zeros(spec.n, dtype=np.uint8)

    def rec(llr, offset):
        n = llr.shape[0]
        if n == 1:
            if frozen[offset]:
                v = ext[offset]
                for z in rows[offset]:
                    v ^= u[z]
            else:
                v = 1 if llr[0] < 0 else 0
            u[offset] = v
            return np.array([v], dtype=np.uint8)
        h = n // 2
        left = rec(llr_even(llr[:h], llr[h:]), offset)
        right = rec(llr[h:] + np.where(left != 0, -llr[:h], llr[:h]), offset + h)
        return np.concatenate([left ^ right, right])

    rec(soft, 0)
    return u


@dataclass
class SCLResult:
    """Surviving paths of one list-decoding segment, best score first.

    ``origin[k]`` is the input path that survivor ``k`` descends from.
    """

    origin: np.ndarray
    u: np.ndarray
    codewords: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return len(self.scores)


def scl_decode_segment(soft, spec, list_size, scores=None, external=None):
    """Min-sum SCL decoding of one code segment.

    Parameters
    ----------
    soft : array, shape (n,) or (P, n)
        Soft input per incoming path.  A single vector means one path.
    spec : CodeSpec
    list_size : int
    scores : array, shape (P,), optional
        Scores carried in by the incoming paths (default zeros).
    external : array, shape (P, n), optional
        Bits XORed into each path's frozen symbols.  Cross-antenna
        constraints are resolved by the caller and arrive here.

    Returns
    -------
    SCLResult
    """
    if list_size < 1:
        raise ValueError("list_size must be >= 1")
    soft = np.atleast_2d(check_finite(soft, "soft"))
    n_in, n = soft.shape
    if n != spec.n:
        raise ValueError(f"soft input has length {n}, code has length {spec.n}")
    if n_in > list_size:
        raise ValueError("more incoming paths than the list size")
    scores = np.zeros(n_in) if scores is None else np.asarray(scores, dtype=np.float64)
    if scores.shape != (n_in,):
        raise ValueError("scores must have one entry per incoming path")
    if external is None:
        ext = np.zeros((n_in, n), dtype=np.uint8)
    else:
        ext = np.atleast_2d(check_bits(external, "external"))
        if ext.shape != (n_in, n):
            raise ValueError("external must have shape (paths, n)")
    ptr, idx = spec._csr
    origin, u, c, sc = scl_kernel(
        np.ascontiguousarray(soft), scores, spec.frozen_mask, ptr, idx,
        np.ascontiguousarray(ext), int(list_size),
    )
    return SCLResult(origin, u, c, sc)

