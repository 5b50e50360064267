"""Admittance-matrix view of the transmitter- and receiver-side MiLACs.

A MiLAC with admittance matrix ``Y`` realizes a linear map read off a block
of ``(Y / Y0 + I)^{-1}``:

* transmit side (ports ``L_T`` source, then ``N_T`` antenna): the precoder is
  the block at rows ``L_T+1 .. L_T+N_T`` and columns ``1 .. L_T``;
* receive side (ports ``N_R`` antenna, then ``L_R`` RF chains): the combiner
  is the block at rows ``N_R+1 .. N_R+L_R`` and columns ``1 .. N_R``.

Port indices in reports and in the CSV dump are 1-based.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._validation import SingularNetworkError, check_matrix, check_positive_float

__all__ = [
    "MilacNetwork",
    "LinearMap",
    "precoder_from_admittance",
    "combiner_from_admittance",
    "admittance_for_precoder",
    "admittance_for_combiner",
    "lower_triangular_inverse_block",
    "write_admittance_csv",
    "read_admittance_csv",
]

# reciprocal condition number below this is treated as singular
_RCOND_MIN = 1e-12


@dataclass(frozen=True, eq=False)
class MilacNetwork:
    admittance: np.ndarray
    side: str
    port_split: tuple
    ref_admittance: float

    def __post_init__(self):
        if self.side not in ("transmit", "receive"):
            raise ValueError(f"side must be 'transmit' or 'receive', got {self.side!r}")
        adm = check_matrix(self.admittance, "admittance")
        n = sum(self.port_split)
        if adm.shape != (n, n):
            raise ValueError(f"admittance shape {adm.shape} does not match port split {self.port_split}")
        adm.setflags(write=False)
        object.__setattr__(self, "admittance", adm)
        object.__setattr__(self, "port_split", tuple(int(p) for p in self.port_split))
        object.__setattr__(self, "ref_admittance", check_positive_float(self.ref_admittance, "ref_admittance"))

    @property
    def n_ports(self):
        return self.admittance.shape[0]


@dataclass(frozen=True, eq=False)
class LinearMap:
    matrix: np.ndarray
    role: str

    def __post_init__(self):
        if self.role not in ("precoder", "combiner"):
            raise ValueError(f"role must be 'precoder' or 'combiner', got {self.role!r}")
        object.__setattr__(self, "matrix", check_matrix(self.matrix, self.role))


def _inverse_block(net, rows, cols):
    """Block ``[(Y/Y0 + I)^{-1}]_{rows, cols}`` via one linear solve."""
    m = net.admittance / net.ref_admittance + np.eye(net.n_ports)
    rcond = 1.0 / np.linalg.cond(m)
    if not np.isfinite(rcond) or rcond < _RCOND_MIN:
        raise SingularNetworkError(f"Y/Y0 + I is singular (reciprocal condition {rcond:.3e})")
    rhs = np.eye(net.n_ports, dtype=complex)[:, cols]
    return np.linalg.solve(m, rhs)[rows, :]


def precoder_from_admittance(net, config=None):
    """Precoder ``F`` (``N_T x L_T``) realized by a transmit-side network."""
    if net.side != "transmit":
        raise ValueError("precoder requires a transmit-side network")
    l_tx, n_tx = net.port_split
    if config is not None and (l_tx, n_tx) != (config.l_tx, config.n_tx):
        raise ValueError(f"port split {net.port_split} does not match (l_tx, n_tx)=({config.l_tx}, {config.n_tx})")
    f = _inverse_block(net, slice(l_tx, l_tx + n_tx), slice(0, l_tx))
    return LinearMap(f, "precoder")


def combiner_from_admittance(net, config=None):
    """Combiner ``G`` (``L_R x N_R``) realized by a receive-side network."""
    if net.side != "receive":
        raise ValueError("combiner requires a receive-side network")
    n_rx, l_rx = net.port_split
    if config is not None and (n_rx, l_rx) != (config.n_rx, config.l_rx):
        raise ValueError(f"port split {net.port_split} does not match (n_rx, l_rx)=({config.n_rx}, {config.l_rx})")
    g = _inverse_block(net, slice(n_rx, n_rx + l_rx), slice(0, n_rx))
    return LinearMap(g, "combiner")


def lower_triangular_inverse_block(b):
    """``Q = [[I, 0], [B, I]]`` whose lower-left block is ``b``."""
    rows, cols = b.shape
    q = np.eye(rows + cols, dtype=complex)
    q[cols:, :cols] = b
    return q


def _synthesize(b, y0):
    # Q = [[I, 0], [B, I]] satisfies (Q - I)^2 = 0, so Q^{-1} = 2I - Q and
    # Y / Y0 = Q^{-1} - I = I - Q: only the lower-left block -B survives.
    q = lower_triangular_inverse_block(b)
    return y0 * (np.eye(q.shape[0]) - q)


def admittance_for_precoder(f, y0):
    """Transmit-side network whose precoder equals ``f``."""
    mat = f.matrix if isinstance(f, LinearMap) else check_matrix(f, "precoder")
    y0 = check_positive_float(y0, "ref_admittance")
    n_tx, l_tx = mat.shape
    return MilacNetwork(_synthesize(mat, y0), "transmit", (l_tx, n_tx), y0)


def admittance_for_combiner(g, y0):
    """Receive-side network whose combiner equals ``g``."""
    mat = g.matrix if isinstance(g, LinearMap) else check_matrix(g, "combiner")
    y0 = check_positive_float(y0, "ref_admittance")
    l_rx, n_rx = mat.shape
    return MilacNetwork(_synthesize(mat, y0), "receive", (n_rx, l_rx), y0)


def write_admittance_csv(net, path_or_buf):
    """Dump the admittance matrix as CSV, row-major, ``re,im`` per entry.

    The header names each column pair after its 1-based port index
    (``port1_re,port1_im,...``).
    """
    n = net.n_ports
    header = [f"port{c + 1}_{part}" for c in range(n) for part in ("re", "im")]
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", encoding="utf-8", newline="") if own else path_or_buf
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in net.admittance:
            writer.writerow([f"{v:.17g}" for z in row for v in (z.real, z.imag)])
    finally:
        if own:
            fh.close()


def read_admittance_csv(path_or_buf):
    """Inverse of :func:`write_admittance_csv`; returns the complex matrix."""
    if isinstance(path_or_buf, str) and "\n" in path_or_buf:
        path_or_buf = io.StringIO(path_or_buf)
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, encoding="utf-8", newline="") if own else path_or_buf
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    header, body = rows[0], rows[1:]
    if len(header) % 2 or len(body) != len(header) // 2:
        raise ValueError("malformed admittance CSV")
    vals = np.array(body, dtype=float)
    return vals[:, 0::2] + 1j * vals[:, 1::2]
