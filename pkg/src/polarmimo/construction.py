"""Polar subcodes spanning all transmit antennas.

Global indices follow decoding order: block ``b`` (positions
``b*length .. (b+1)*length - 1``) belongs to physical antenna
``n_antennas - b``, since antennas are decoded from the last to the first
and each antenna's phases in ascending order.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import check_bits, check_random_state
from .detectors import SicFrontEnd, bit_soft_values
from .channel import modulate, sample_channel, snr_db_to_n0
from .polar import CodeSpec, parse_spec_text, phase_statistics, polar_transform

__all__ = [
    "ReliabilityProfile",
    "GlobalCodeSpec",
    "index_weight",
    "index_weights",
    "set_dfs_a",
    "select_frozen_and_dfs_b",
    "select_frozen_per_antenna",
    "build_constraints",
    "estimate_reliability",
    "allocate_rates",
    "construct_subcode",
    "construct_crc_code",
]


def index_weight(i, length, n_antennas=None):
    """Hamming weight of ``i mod length``."""
    i = int(i)
    if i < 0 or (n_antennas is not None and i >= n_antennas * length):
        raise ValueError(f"index {i} out of range")
    return bin(i % length).count("1")


def index_weights(n_antennas, length):
    idx = np.arange(n_antennas * length) % length
    w = np.zeros_like(idx)
    while idx.any():
        w += idx & 1
        idx = idx >> 1
    return w


@dataclass
class ReliabilityProfile:
    """Estimated first-error probability of every bit subchannel.

    ``error_prob`` is indexed by global (decoding-order) position.
    """

    error_prob: np.ndarray
    trials: int
    n_antennas: int = 1

    def __post_init__(self):
        self.error_prob = np.asarray(self.error_prob, dtype=np.float64)
        if self.error_prob.ndim != 1:
            raise ValueError("error_prob must be a vector")
        if ((self.error_prob < 0) | (self.error_prob > 1)).any():
            raise ValueError("error probabilities must lie in [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.error_prob.size % self.n_antennas:
            raise ValueError("profile length is not a multiple of n_antennas")

    @property
    def length(self):
        return self.error_prob.size // self.n_antennas

    def ranking(self):
        """Positions from least to most reliable.

        Equal probabilities rank the lower index as less reliable.
        """
        idx = np.arange(self.error_prob.size)
        return np.lexsort((idx, -self.error_prob))

    def block_means(self):
        return self.error_prob.reshape(self.n_antennas, -1).mean(axis=1)


@dataclass(frozen=True)
class GlobalCodeSpec:
    """All per-antenna codes of a frame, with cross-antenna constraints.

    Parameters
    ----------
    n_antennas : int
    length : int
        Per-antenna code length ``m * N``.
    frozen : tuple of int
        Global frozen positions.
    constraints : dict or tuple
        Parity sources of each frozen position, in global indices.
    """

    n_antennas: int
    length: int
    frozen: tuple
    constraints: tuple = None
    n_dfs_a: int = 0
    n_dfs_b: int = 0
    degraded: tuple = field(default=(), compare=False)

    def __post_init__(self):
        total = self.n_antennas * self.length
        frozen = tuple(sorted(int(j) for j in self.frozen))
        if len(set(frozen)) != len(frozen) or (frozen and (frozen[0] < 0 or frozen[-1] >= total)):
            raise ValueError("frozen positions must be distinct and in range")
        rows = self.constraints
        if rows is None:
            rows = {}
        if not isinstance(rows, dict):
            rows = dict(zip(self.frozen, rows))
        clean = []
        for j in frozen:
            row = tuple(sorted(set(int(z) for z in rows.get(j, ()))))
            if row and (row[0] < 0 or row[-1] >= j):
                raise ValueError(f"constraint for position {j} is not causal")
            clean.append(row)
        object.__setattr__(self, "frozen", frozen)
        object.__setattr__(self, "constraints", tuple(clean))
        # builds and validates every block
        self.blocks

    @property
    def total_length(self):
        return self.n_antennas * self.length

    @property
    def dimension(self):
        return self.total_length - len(self.frozen)

    @cached_property
    def info_positions(self):
        mask = np.ones(self.total_length, dtype=bool)
        mask[list(self.frozen)] = False
        return np.flatnonzero(mask)

    def rows(self):
        return dict(zip(self.frozen, self.constraints))

    def antenna_of_block(self, b):
        return self.n_antennas - b

    @cached_property
    def blocks(self):
        """Per-block ``(CodeSpec, cross rows)``.

        The CodeSpec carries the part of each constraint that lives inside
        the block (local indices); ``cross`` maps local frozen index to the
        global sources in earlier blocks.
        """
        out = []
        rows = self.rows()
        for b in range(self.n_antennas):
            lo, hi = b * self.length, (b + 1) * self.length
            frozen, local, cross = [], [], {}
            for j in self.frozen:
                if lo <= j < hi:
                    row = rows[j]
                    frozen.append(j - lo)
                    local.append(tuple(z - lo for z in row if z >= lo))
                    ext = tuple(z for z in row if z < lo)
                    if ext:
                        cross[j - lo] = ext
            out.append((CodeSpec(self.length, tuple(frozen), tuple(local)), cross))
        return tuple(out)

    def block_spec(self, b):
        return self.blocks[b][0]

    def cross_rows(self, b):
        return self.blocks[b][1]

    @cached_property
    def _cross_matrices(self):
        out = []
        for b in range(self.n_antennas):
            lo = b * self.length
            mat = np.zeros((lo, self.length))
            for j, row in self.cross_rows(b).items():
                mat[list(row), j] = 1
            out.append(mat)
        return tuple(out)

    def cross_bits(self, b, u):
        """External bits of block ``b`` for decided prefixes ``u`` (rows)."""
        lo = b * self.length
        u = np.asarray(u)
        if u.shape[-1] < lo:
            raise ValueError("constraint refers to an undecided symbol")
        if lo == 0 or not self.cross_rows(b):
            return np.zeros(u.shape[:-1] + (self.length,), dtype=np.uint8)
        # float product is exact here and runs through BLAS
        hits = u[..., :lo].astype(np.float64) @ self._cross_matrices[b]
        return (hits.astype(np.int64) & 1).astype(np.uint8)

    @property
    def cross_constraints(self):
        out = {}
        for b, (_, cross) in enumerate(self.blocks):
            for j, row in cross.items():
                out[b * self.length + j] = row
        return out

    @property
    def dimension_distribution(self):
        """``(K_1, ..., K_Nt)`` indexed by physical antenna."""
        per_block = [blk.dimension for blk, _ in self.blocks]
        return tuple(reversed(per_block))

    def fill(self, info_bits):
        """Global input vector(s) ``u`` for ``info_bits`` (last axis)."""
        info = check_bits(info_bits, "info_bits")
        if info.shape[-1] != self.dimension:
            raise ValueError(f"expected {self.dimension} information bits")
        u = np.zeros(info.shape[:-1] + (self.total_length,), dtype=np.uint8)
        u[..., self.info_positions] = info
        for j, row in self._dynamic:
            u[..., j] = np.bitwise_xor.reduce(u[..., row], axis=-1)
        return u

    @cached_property
    def _dynamic(self):
        # static frozen bits stay zero; rows only look backwards, so
        # increasing order resolves chains of dynamic bits
        return [(j, np.asarray(row)) for j, row in zip(self.frozen, self.constraints) if row]

    def encode(self, info_bits):
        """Codewords as ``(..., n_antennas, length)``, row ``j - 1`` for antenna ``j``."""
        u = self.fill(info_bits)
        blocks = u.reshape(u.shape[:-1] + (self.n_antennas, self.length))
        return polar_transform(blocks)[..., ::-1, :]

    def to_text(self):
        lines = [f"antennas {self.n_antennas}", f"n {self.total_length}"]
        if self.n_dfs_a or self.n_dfs_b:
            lines.append(f"# dfs_a {self.n_dfs_a} dfs_b {self.n_dfs_b}")
        for j, row in zip(self.frozen, self.constraints):
            lines.append(f"frozen {j} = " + " ".join(map(str, row)) if row else f"frozen {j}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        n_antennas = None
        counts = {"dfs_a": 0, "dfs_b": 0}
        body = []
        for raw in text.splitlines():
            line = raw.strip()
            if line.startswith("antennas"):
                n_antennas = int(line.split()[1])
            elif line.startswith("# dfs_a"):
                words = line[1:].split()
                counts.update(zip(words[::2], map(int, words[1::2])))
            else:
                body.append(raw)
        if n_antennas is None:
            raise ValueError("missing 'antennas <N_t>' header")
        total, frozen, rows = parse_spec_text("\n".join(body))
        if total % n_antennas:
            raise ValueError("total length is not divisible by the antenna count")
        return cls(
            n_antennas, total // n_antennas, tuple(frozen), dict(zip(frozen, rows)),
            n_dfs_a=counts["dfs_a"], n_dfs_b=counts["dfs_b"],
        )


def set_dfs_a(n_antennas, m, n_slots, nonfrozen, n_dfs_a):
    """Pick type-A dynamic frozen positions among ``nonfrozen``.

    Weights ``wt(i mod mN)`` are visited from the smallest one present in
    ``nonfrozen`` upwards.  For each weight the decoding-order blocks are
    scanned from the last one down, and positions inside a block from the
    largest down.  Returns the positions in the order they were picked.
    """
    length = m * n_slots
    nonfrozen = np.unique(np.asarray(list(nonfrozen), dtype=np.int64))
    n_dfs_a = int(n_dfs_a)
    if n_dfs_a > nonfrozen.size:
        raise ValueError("n_dfs_a exceeds the number of non-frozen positions")
    if n_dfs_a <= 0:
        return []
    total = n_antennas * length
    weights = index_weights(n_antennas, length)
    member = np.zeros(total, dtype=bool)
    member[nonfrozen] = True
    w = int(weights[nonfrozen].min())
    picked = []
    while True:
        for j in range(n_antennas, 0, -1):
            for k in range(j * length - 1, (j - 1) * length - 1, -1):
                if weights[k] == w and member[k]:
                    picked.append(int(k))
                    if len(picked) == n_dfs_a:
                        return picked
        w += 1


def select_frozen_and_dfs_b(profile, k, n_dfs_a=0, n_dfs_b=0):
    """Return ``(static_frozen, dfs_b)`` as sorted arrays.

    The frozen set is the ``total - k - n_dfs_a`` least reliable positions;
    its ``n_dfs_b`` most reliable members become type-B dynamic symbols.
    """
    total = profile.error_prob.size
    n_frozen = total - k - n_dfs_a
    if k < 0 or n_dfs_a < 0 or n_frozen < 0:
        raise ValueError("k + n_dfs_a exceeds the total length")
    if not 0 <= n_dfs_b <= n_frozen:
        raise ValueError("n_dfs_b exceeds the frozen set size")
    frozen = profile.ranking()[:n_frozen]
    dfs_b = frozen[n_frozen - n_dfs_b:]
    static = frozen[: n_frozen - n_dfs_b]
    return np.sort(static), np.sort(dfs_b)


def _split(total, weights):
    # largest-remainder apportionment, ties to the lower slot
    weights = np.asarray(weights, dtype=float)
    if total == 0 or weights.sum() == 0:
        return np.zeros(len(weights), dtype=int)
    share = total * weights / weights.sum()
    base = np.floor(share).astype(int)
    rest = total - base.sum()
    order = np.lexsort((np.arange(len(share)), -(share - base)))
    base[order[:rest]] += 1
    return base


def select_frozen_per_antenna(profile, distribution, n_dfs_a=0, n_dfs_b=0):
    """Frozen selection when the per-antenna dimensions are prescribed.

    ``distribution`` is ``(K_1, ..., K_Nt)`` by physical antenna.  Each
    block keeps its own most reliable positions; the ``n_dfs_a`` type-A
    symbols are apportioned to blocks in proportion to their dimension and
    placed by :func:`set_dfs_a` inside each block.

    Returns ``(static_frozen, dfs_b, dfs_a)``.
    """
    nt, length = profile.n_antennas, profile.length
    if len(distribution) != nt:
        raise ValueError("distribution must have one entry per antenna")
    per_block = np.asarray(distribution[::-1], dtype=int)
    quota = _split(n_dfs_a, per_block)
    if ((per_block + quota) > length).any() or (per_block < 0).any():
        raise ValueError("dimension distribution does not fit the code length")
    frozen, dfs_a = [], []
    for b in range(nt):
        lo = b * length
        sub = ReliabilityProfile(profile.error_prob[lo:lo + length], profile.trials)
        rank = sub.ranking()
        n_frozen = length - per_block[b] - quota[b]
        frozen.extend(lo + rank[:n_frozen])
        nonfrozen = rank[n_frozen:]
        dfs_a.extend(lo + np.asarray(set_dfs_a(1, 1, length, nonfrozen, quota[b]), dtype=int))
    frozen = np.asarray(frozen, dtype=int)
    if n_dfs_b > frozen.size:
        raise ValueError("n_dfs_b exceeds the frozen set size")
    rank = profile.ranking()
    pos = np.empty_like(rank)
    pos[rank] = np.arange(rank.size)
    by_rel = frozen[np.argsort(pos[frozen], kind="stable")]
    dfs_b = by_rel[by_rel.size - n_dfs_b:]
    static = by_rel[: by_rel.size - n_dfs_b]
    return np.sort(static), np.sort(dfs_b), np.sort(np.asarray(dfs_a, dtype=int))


def build_constraints(targets, info_positions, rng):
    """Random parity rows for dynamic frozen positions.

    Each target ``j`` gets a uniformly random non-empty subset of the
    information positions preceding it in decoding order.  Targets with no
    preceding information position stay static zeros.

    Returns ``(rows, degraded)``.
    """
    rng = check_random_state(rng)
    info = np.sort(np.asarray(info_positions, dtype=np.int64))
    rows, degraded = {}, []
    for j in sorted(int(x) for x in targets):
        preds = info[info < j]
        if preds.size == 0:
            rows[j] = ()
            degraded.append(j)
            continue
        while True:
            pick = rng.random(preds.size) < 0.5
            if pick.any():
                break
        rows[j] = tuple(int(z) for z in preds[pick])
    return rows, tuple(degraded)


def estimate_reliability(system, trials, rng, snr_db=None, batch=256):
    """Genie-aided Monte-Carlo estimate of every subchannel's error rate.

    ``system`` needs ``n_tx, n_rx, m, n_slots, detector`` and, unless
    ``snr_db`` is passed, ``snr_db``.  Random inputs are sent through the
    channel; each antenna is detected with the true symbols of the antennas
    already processed cancelled, and each phase sees the true earlier
    inputs.  A phase counts an error when its hard decision is wrong.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = check_random_state(rng)
    nt, nr, m, n_slots = system.n_tx, system.n_rx, system.m, system.n_slots
    snr_db = system.snr_db if snr_db is None else snr_db
    n0 = float(snr_db_to_n0(snr_db))
    length = m * n_slots
    counts = np.zeros(nt * length)
    done = 0
    while done < trials:
        bsz = min(batch, trials - done)
        u = rng.integers(0, 2, size=(bsz, nt, length), dtype=np.uint8)
        # block b carries antenna nt - b, i.e. column nt - 1 - b
        x = modulate(polar_transform(u)[:, ::-1, :], m)
        chan = sample_channel(rng, bsz * n_slots, nr, nt, n0)
        mats = chan.matrices.reshape(bsz, n_slots, nr, nt)
        noise = np.sqrt(n0 / 2) * (
            rng.standard_normal((bsz, n_slots, nr)) + 1j * rng.standard_normal((bsz, n_slots, nr))
        )
        y = np.einsum("bint,bti->bin", mats, x) + noise
        fe = SicFrontEnd(system.detector, mats, y, n0)
        residual = fe.initial
        for b in range(nt):
            col = nt - 1 - b
            if b:
                residual = fe.cancel(residual, col + 1, x[:, col + 1, :])
            s_i, s_q, _ = fe.statistics(residual, col)
            soft = bit_soft_values(s_i, s_q, m)
            stats = phase_statistics(soft, u[:, b, :])
            counts[b * length:(b + 1) * length] += ((stats < 0) != u[:, b, :]).sum(axis=0)
        done += bsz
    return ReliabilityProfile(counts / trials, trials, nt)


def allocate_rates(profile, k_total):
    """Per-antenna dimensions ``(K_1, ..., K_Nt)`` from the ``k_total`` most
    reliable subchannels."""
    total = profile.error_prob.size
    if not 0 <= k_total <= total:
        raise ValueError("k_total out of range")
    best = profile.ranking()[total - k_total:]
    per_block = np.bincount(best // profile.length, minlength=profile.n_antennas)
    return tuple(int(v) for v in per_block[::-1])


def construct_subcode(profile, k, n_dfs_a=8, n_dfs_b=24, rng=None, distribution=None):
    """Polar subcode with cross-antenna dynamic frozen symbols.

    Returns a :class:`GlobalCodeSpec` of dimension ``k``.
    """
    rng = check_random_state(rng)
    nt, length = profile.n_antennas, profile.length
    if distribution is None:
        static, dfs_b = select_frozen_and_dfs_b(profile, k, n_dfs_a, n_dfs_b)
        frozen = np.concatenate([static, dfs_b])
        nonfrozen = np.setdiff1d(np.arange(nt * length), frozen)
        dfs_a = np.asarray(set_dfs_a(nt, 1, length, nonfrozen, n_dfs_a), dtype=int)
    else:
        if sum(distribution) != k:
            raise ValueError("distribution does not sum to k")
        static, dfs_b, dfs_a = select_frozen_per_antenna(profile, distribution, n_dfs_a, n_dfs_b)
    all_frozen = np.concatenate([static, dfs_b, dfs_a])
    info = np.setdiff1d(np.arange(nt * length), all_frozen)
    rows, degraded = build_constraints(np.concatenate([dfs_b, dfs_a]), info, rng)
    return GlobalCodeSpec(
        nt, length, tuple(int(j) for j in all_frozen), rows,
        n_dfs_a=int(len(dfs_a)), n_dfs_b=int(len(dfs_b)), degraded=degraded,
    )


def construct_crc_code(profile, k, distribution=None):
    """Classical polar code per antenna (static frozen symbols only)."""
    nt, length = profile.n_antennas, profile.length
    if distribution is None:
        static, _ = select_frozen_and_dfs_b(profile, k)
    else:
        if sum(distribution) != k:
            raise ValueError("distribution does not sum to k")
        static, _, _ = select_frozen_per_antenna(profile, distribution)
    return GlobalCodeSpec(nt, length, tuple(int(j) for j in static))
