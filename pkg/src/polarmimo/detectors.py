"""QR (V-BLAST) and MMSE-SIC front ends.

All functions broadcast over leading axes: a frame is a stack of ``N``
per-slot matrices, and residuals may carry an extra leading path axis.
Antenna ``j`` (1-based) lives in column ``j - 1``; the ``col`` arguments
below are those 0-based column indices.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QRFactors",
    "MMSEFilter",
    "qr_decompose",
    "vblast_project",
    "vblast_cancel",
    "vblast_bit_statistics",
    "mmse_filter",
    "mmse_sic_filters",
    "mmse_cancel",
    "mmse_output",
    "mmse_bit_statistics",
    "mmse_objective",
    "SicFrontEnd",
    "bit_soft_values",
]

_RANK_TOL = 1e-12


@dataclass
class QRFactors:
    """Thin QR factors with a real, non-negative diagonal in ``r``.

    ``deficient[..., k]`` marks columns that were (numerically) dependent on
    earlier ones; their diagonal entry is zero.
    """

    q: np.ndarray
    r: np.ndarray
    deficient: np.ndarray

    @property
    def diag(self):
        return np.real(np.diagonal(self.r, axis1=-2, axis2=-1))


@dataclass
class MMSEFilter:
    """Rows ``w_j^H`` stacked as ``(..., n_tx, n_rx)`` with gains ``w_j^H h_j``."""

    w_h: np.ndarray
    gains: np.ndarray


def qr_decompose(h):
    """Householder QR of one matrix or a stack of ``n_rx x n_tx`` matrices."""
    a = np.array(h, dtype=np.complex128)
    if a.ndim < 2:
        raise ValueError("expected a matrix")
    lead = a.shape[:-2]
    nr, nt = a.shape[-2:]
    if nr < nt:
        raise ValueError("QR needs n_rx >= n_tx")
    a = a.reshape((-1, nr, nt))
    scale = np.linalg.norm(a, axis=(1, 2))
    vs = []
    for k in range(nt):
        x = a[:, k:, k]
        norm = np.linalg.norm(x, axis=1)
        x0 = x[:, 0]
        mag0 = np.abs(x0)
        phase = np.where(mag0 > 0, x0 / np.where(mag0 > 0, mag0, 1.0), 1.0)
        v = x.copy()
        v[:, 0] += phase * norm
        vn = np.linalg.norm(v, axis=1)
        live = vn > 0
        v = np.where(live[:, None], v / np.where(live, vn, 1.0)[:, None], 0.0)
        proj = np.einsum("bi,bij->bj", v.conj(), a[:, k:, k:])
        a[:, k:, k:] -= 2.0 * v[:, :, None] * proj[:, None, :]
        vs.append(v)
    r = np.triu(a[:, :nt, :])
    q = np.zeros((a.shape[0], nr, nt), dtype=np.complex128)
    q[:, np.arange(nt), np.arange(nt)] = 1.0
    for k in reversed(range(nt)):
        v = vs[k]
        proj = np.einsum("bi,bij->bj", v.conj(), q[:, k:, :])
        q[:, k:, :] -= 2.0 * v[:, :, None] * proj[:, None, :]
    d = np.diagonal(r, axis1=1, axis2=2)
    mag = np.abs(d)
    ph = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    r = ph.conj()[:, :, None] * r
    q = q * ph[:, None, :]
    idx = np.arange(nt)
    r[:, idx, idx] = r[:, idx, idx].real
    deficient = mag <= _RANK_TOL * np.maximum(scale, np.finfo(float).tiny)[:, None]
    return QRFactors(
        q.reshape(lead + (nr, nt)),
        r.reshape(lead + (nt, nt)),
        deficient.reshape(lead + (nt,)),
    )


def vblast_project(y, factors):
    """``Q^H y`` per slot; ``y`` is ``(..., N, n_rx)``."""
    return np.einsum("...ij,...i->...j", factors.q.conj(), y)


def vblast_cancel(residual, r, col, symbols):
    """Remove one decided antenna from transformed residuals.

    ``residual`` is ``(..., N, n_tx)``, ``r`` is ``(N, n_tx, n_tx)`` and
    ``symbols`` is ``(..., N)``.  Subtracts ``R[:, col] * x``.
    """
    return residual - r[..., :, col] * np.asarray(symbols)[..., None]


def vblast_bit_statistics(w, r_jj):
    """``(r_jj Re w, r_jj Im w)`` for the residual component ``w`` of a layer."""
    w = np.asarray(w)
    return r_jj * w.real, r_jj * w.imag


def _cholesky_solve(a, b):
    # a: (B, n, n) Hermitian positive definite; b: (B, n, k)
    chol = np.linalg.cholesky(a)
    n = a.shape[-1]
    z = np.empty_like(b)
    for i in range(n):
        acc = b[:, i, :] - np.einsum("bk,bkj->bj", chol[:, i, :i], z[:, :i, :])
        z[:, i, :] = acc / chol[:, i, i][:, None]
    x = np.empty_like(b)
    for i in reversed(range(n)):
        acc = z[:, i, :] - np.einsum(
            "bk,bkj->bj", chol[:, i + 1:, i].conj(), x[:, i + 1:, :]
        )
        x[:, i, :] = acc / chol[:, i, i].conj()[:, None]
    return x


def mmse_filter(h, snr_linear):
    """Solve ``(H^H H + I / SNR) W^H = H^H`` by a Cholesky factorisation."""
    if not snr_linear > 0:
        raise ValueError("snr_linear must be positive")
    h = np.asarray(h, dtype=np.complex128)
    lead = h.shape[:-2]
    nr, nt = h.shape[-2:]
    hb = h.reshape((-1, nr, nt))
    hh = np.conj(np.swapaxes(hb, -1, -2))
    gram = hh @ hb + np.eye(nt) / snr_linear
    w_h = _cholesky_solve(gram, hh)
    gains = np.real(np.einsum("bjr,brj->bj", w_h, hb))
    return MMSEFilter(w_h.reshape(lead + (nt, nr)), gains.reshape(lead + (nt,)))


def mmse_sic_filters(h, snr_linear):
    """Per-layer MMSE-SIC filters.

    Layer ``j`` is detected after antennas ``j+1 .. n_tx`` are cancelled, so
    its filter row comes from the reduced channel ``H[:, :j]``.  The reduced
    Gram matrices are leading blocks of the full one, and so are their
    Cholesky factors: with ``G = L L^H`` the layer-``j`` row of
    ``G_j^{-1} H_j^H`` is row ``j`` of ``L^{-1} H^H`` divided by ``L_jj``.
    One factorisation per slot therefore serves every layer.
    """
    if not snr_linear > 0:
        raise ValueError("snr_linear must be positive")
    h = np.asarray(h, dtype=np.complex128)
    lead = h.shape[:-2]
    nr, nt = h.shape[-2:]
    hb = h.reshape((-1, nr, nt))
    hh = np.conj(np.swapaxes(hb, -1, -2))
    chol = np.linalg.cholesky(hh @ hb + np.eye(nt) / snr_linear)
    z = np.empty_like(hh)
    for i in range(nt):
        acc = hh[:, i, :] - np.einsum("bk,bkj->bj", chol[:, i, :i], z[:, :i, :])
        z[:, i, :] = acc / chol[:, i, i][:, None]
    w_h = z / np.real(np.diagonal(chol, axis1=1, axis2=2))[:, :, None]
    gains = np.real(np.einsum("bjr,brj->bj", w_h, hb))
    return MMSEFilter(w_h.reshape(lead + (nt, nr)), gains.reshape(lead + (nt,)))


def mmse_cancel(residual, h, col, symbols):
    """``y' - h_col x`` per slot; ``residual`` is ``(..., N, n_rx)``."""
    return residual - h[..., :, col] * np.asarray(symbols)[..., None]


def mmse_output(filt, residual, col):
    """Filter output ``z = w_col^H y'`` per slot."""
    return np.einsum("...ir,...ir->...i", filt.w_h[..., col, :], residual)


def mmse_bit_statistics(filt, residual, col):
    """``(g Re z, g Im z)`` with ``z = w^H y'`` and real gain ``g = w^H h``."""
    z = mmse_output(filt, residual, col)
    g = filt.gains[..., col]
    return g * z.real, g * z.imag


def mmse_objective(w_h, h, n0):
    """Closed-form ``E ||x - W^H y||^2`` for unit-energy i.i.d. symbols."""
    nt = h.shape[-1]
    e = np.eye(nt) - w_h @ h
    return float(np.real(np.sum(np.abs(e) ** 2) + n0 * np.sum(np.abs(w_h) ** 2)))


class SicFrontEnd:
    """Per-frame detector state shared by every decoding path.

    Parameters
    ----------
    detector : {"vblast", "mmse"}
    matrices : array, shape (..., N, n_rx, n_tx)
    y : array, shape (..., N, n_rx)
    n0 : float
        Noise variance; the MMSE regulariser is ``n0 = 1 / SNR``.
    """

    def __init__(self, detector, matrices, y, n0):
        if detector not in ("vblast", "mmse"):
            raise ValueError(f"unknown detector {detector!r}")
        self.detector = detector
        matrices = np.asarray(matrices, dtype=np.complex128)
        if detector == "vblast":
            self.factors = qr_decompose(matrices)
            self.initial = vblast_project(y, self.factors)
            self._cols = self.factors.r
            self.gains = np.where(self.factors.deficient, 0.0, self.factors.diag)
        else:
            self.filter = mmse_sic_filters(matrices, 1.0 / n0)
            self.initial = np.asarray(y, dtype=np.complex128)
            self._cols = matrices
            self.gains = self.filter.gains

    def cancel(self, residual, col, symbols):
        if self.detector == "vblast":
            return vblast_cancel(residual, self._cols, col, symbols)
        return mmse_cancel(residual, self._cols, col, symbols)

    def layer_output(self, residual, col):
        """``w'`` (V-BLAST residual component) or ``z = w^H y'`` (MMSE)."""
        if self.detector == "vblast":
            return residual[..., col]
        return mmse_output(self.filter, residual, col)

    def statistics(self, residual, col):
        """Return ``(s_I, s_Q, out)`` for layer ``col``."""
        out = self.layer_output(residual, col)
        g = self.gains[..., col]
        return g * out.real, g * out.imag, out


def bit_soft_values(s_i, s_q, m):
    """Interleave per-slot statistics into one soft value per coded bit.

    Values are scaled by ``2a`` (``a`` the per-dimension symbol amplitude),
    which makes the min-sum path score and the squared-distance terms of
    the joint metric share one unit.  The scale is the same for every
    antenna, so it never changes a ranking.
    """
    amp2 = 2.0 if m == 1 else 2.0 * np.sqrt(0.5)
    if m == 1:
        return amp2 * np.asarray(s_i, dtype=np.float64)
    s = np.stack([s_i, s_q], axis=-1)
    return amp2 * s.reshape(s.shape[:-2] + (-1,))
