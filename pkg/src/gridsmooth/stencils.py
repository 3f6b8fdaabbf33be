"""Difference stencils: decorrelated (calibrated) and binomial.

A stencil of half-width ``L`` is a weight vector indexed by offsets
``-L..L``; applying it to a curve ``x`` gives

    (D x)(t) = sum_l w[l] * x[t + l]

at every location where the window is fully supported, so the output has
``len(x) - 2L`` entries.

The decorrelated family has unit-norm members that are mutually orthogonal
once zero-padded to a common width, so under white noise their outputs at a
common location are uncorrelated with unit variance.
"""
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import sparse

from .errors import (
    CurveTooShortError,
    InfeasibleWidthError,
    NonUniqueStencilError,
    UnsupportedOrderError,
)

MAX_ORDER = 4

# Unnormalized integer rows of the decorrelated operators, orders 0..4.
_CANONICAL_ROWS = {
    0: (1,),
    1: (1, 0, -1),
    2: (1, -1, 0, -1, 1),
    3: (2, -3, 0, 0, 0, 3, -2),
    4: (7, -16, 9, 0, 0, 0, 0, 0, 9, -16, 7),
}

MINIMAL_HALF_WIDTHS = (0, 1, 2, 3, 5)

# relative singular-value cutoff for the numerical null space
NULL_SPACE_RTOL = 1e-9
_ZERO_ATOL = 1e-12


@dataclass(frozen=True)
class Stencil:
    """Signed weights of a difference operator, indexed by offsets -L..L."""

    order: int
    half_width: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size != 2 * self.half_width + 1:
            raise ValueError(
                f"expected {2 * self.half_width + 1} weights for half-width "
                f"{self.half_width}, got shape {w.shape}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def offsets(self):
        return np.arange(-self.half_width, self.half_width + 1)

    @property
    def norm(self):
        return float(np.linalg.norm(self.weights))

    @property
    def support(self):
        return 2 * self.half_width + 1

    def moment(self, k):
        """Return ``sum_l w[l] * l**k``."""
        return float(np.sum(self.weights * self.offsets.astype(float) ** k))

    def padded(self, half_width):
        """Weights zero-padded (symmetrically) to a wider half-width."""
        if half_width < self.half_width:
            raise ValueError("cannot pad to a smaller half-width")
        extra = half_width - self.half_width
        return np.pad(self.weights, extra)

    def __eq__(self, other):
        if not isinstance(other, Stencil):
            return NotImplemented
        return (
            self.order == other.order
            and self.half_width == other.half_width
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.order, self.half_width, self.weights.tobytes()))

    def __repr__(self):
        w = ", ".join(f"{v:.6g}" for v in self.weights)
        return f"Stencil(order={self.order}, half_width={self.half_width}, weights=[{w}])"


@dataclass(frozen=True)
class StencilFamily:
    """Decorrelated stencils of orders 0..max_order."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        for r, s in enumerate(members):
            if s.order != r:
                raise ValueError(f"member {r} has order {s.order}")
        object.__setattr__(self, "members", members)

    @property
    def max_order(self):
        return len(self.members) - 1

    @property
    def half_widths(self):
        return tuple(s.half_width for s in self.members)

    def __getitem__(self, order):
        return self.members[order]

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def truncated(self, max_order):
        return StencilFamily(self.members[: max_order + 1])


def _unit_sign_fixed(order, half_width, w):
    w = np.asarray(w, dtype=float)
    w = w / np.linalg.norm(w)
    w[np.abs(w) < _ZERO_ATOL] = 0.0
    nz = np.flatnonzero(w)
    if nz.size and w[nz[0]] < 0:
        w = -w
    return Stencil(order, half_width, w + 0.0)


def canonical_family(max_order=MAX_ORDER):
    """Return the tabulated decorrelated stencils of orders ``0..max_order``.

    Each member is scaled to unit Euclidean norm with its first nonzero
    weight positive.

    Raises
    ------
    UnsupportedOrderError
        If ``max_order > 4``; the decorrelated stencil is not unique beyond
        order four.
    """
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    if max_order > MAX_ORDER:
        raise UnsupportedOrderError(
            f"decorrelated stencils are only defined up to order {MAX_ORDER}, "
            f"got {max_order}"
        )
    members = []
    for r in range(max_order + 1):
        row = _CANONICAL_ROWS[r]
        members.append(_unit_sign_fixed(r, (len(row) - 1) // 2, row))
    return StencilFamily(tuple(members))


def _null_space(a, n):
    if a.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    rank = int(np.sum(s > NULL_SPACE_RTOL * s[0]))
    return vt[rank:].T


def _constraint_rows(order, half_width, lower):
    n = 2 * half_width + 1
    offsets = np.arange(-half_width, half_width + 1)
    centre = half_width
    rows = []
    parity = (-1) ** order
    for ell in range(1, half_width + 1):
        row = np.zeros(n)
        row[centre + ell] = 1.0
        row[centre - ell] = -parity
        rows.append(row)
    if order % 2 == 1:
        row = np.zeros(n)
        row[centre] = 1.0
        rows.append(row)
    for s in lower:
        # inner product of zero-padded vectors only sees the common offsets
        common = min(s.half_width, half_width)
        row = np.zeros(n)
        row[centre - common: centre + common + 1] = s.weights[
            s.half_width - common: s.half_width + common + 1
        ]
        rows.append(row)
    for k in range(order):
        rows.append(offsets.astype(float) ** k)
    return np.array(rows).reshape(-1, n)


def solve_stencil(order, half_width, family_so_far=None, auto_width=False):
    """Solve for the order-``order`` decorrelated stencil at a given width.

    The stencil spans the null space of: parity ``w[l] = (-1)**order w[-l]``,
    orthogonality to every lower-order member of ``family_so_far``, zero sum
    and vanishing moments ``sum_l w[l] l**k = 0`` for ``k < order``. When that
    space has more than one dimension, zeros are imposed on the central
    offsets ``|l| <= m`` for increasing ``m`` until it becomes a line.

    Parameters
    ----------
    order : int
    half_width : int
    family_so_far : StencilFamily, optional
        Must hold orders ``0..order-1``. Built recursively at the minimal
        widths when omitted.
    auto_width : bool
        If the width is infeasible, retry with increasing half-widths.

    Returns
    -------
    Stencil
        Unit-norm, first nonzero weight positive.
    """
    if order < 0 or half_width < 0:
        raise ValueError("order and half_width must be nonnegative")
    if order > MAX_ORDER:
        raise UnsupportedOrderError(
            f"decorrelated stencils are only defined up to order {MAX_ORDER}"
        )
    if family_so_far is None:
        family_so_far = solve_family(order - 1) if order > 0 else StencilFamily(())
    if len(family_so_far) < order:
        raise ValueError(
            f"family_so_far must contain orders 0..{order - 1}, "
            f"has {len(family_so_far)} members"
        )
    lower = family_so_far.members[:order]

    if order == 0:
        w = np.zeros(2 * half_width + 1)
        w[half_width] = 1.0
        return Stencil(0, half_width, w)

    width = half_width
    while True:
        try:
            return _solve_at_width(order, width, lower)
        except InfeasibleWidthError:
            if not auto_width or width > 4 * MAX_ORDER + 8:
                raise
            width += 1


def _solve_at_width(order, half_width, lower):
    n = 2 * half_width + 1
    base = _constraint_rows(order, half_width, lower)
    basis = _null_space(base, n)
    dim = basis.shape[1]
    if dim == 0:
        raise InfeasibleWidthError(
            f"no order-{order} stencil exists at half-width {half_width}"
        )
    m = 0
    rows = base
    while dim > 1:
        if m >= half_width:
            raise NonUniqueStencilError(order, half_width, dim)
        central = np.zeros((2 * m + 1, n))
        for i, ell in enumerate(range(-m, m + 1)):
            central[i, half_width + ell] = 1.0
        candidate = _null_space(np.vstack([rows, central]), n)
        if candidate.shape[1] == 0:
            raise NonUniqueStencilError(order, half_width, dim)
        basis, dim = candidate, candidate.shape[1]
        m += 1
    w = basis[:, 0]
    # enforce exact parity before normalizing
    w = 0.5 * (w + (-1) ** order * w[::-1])
    return _unit_sign_fixed(order, half_width, w)


def solve_family(max_order=MAX_ORDER, half_widths=MINIMAL_HALF_WIDTHS):
    """Build the decorrelated family recursively with ``solve_stencil``."""
    members = []
    for r in range(max_order + 1):
        fam = StencilFamily(tuple(members))
        members.append(solve_stencil(r, half_widths[r], fam))
    return StencilFamily(tuple(members))


def binomial_stencil(order, normalize=True):
    """Classical difference stencil with weights ``(-1)**k * C(order, k)``.

    Even orders are centred. Odd orders occupy ``order + 1`` taps starting
    at offset ``-ceil(order / 2)``, padded with a trailing zero so the
    window stays symmetric (a forward difference).

    With ``normalize=False`` the raw integer weights are kept; the squared
    norm is then ``C(2 * order, order)``.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    raw = np.array([(-1) ** k * comb(order, k) for k in range(order + 1)], float)
    half_width = (order + 1) // 2
    w = np.zeros(2 * half_width + 1)
    w[: order + 1] = raw
    if normalize:
        w /= np.linalg.norm(w)
    return Stencil(order, half_width, w)


def apply(stencil, curve):
    """Apply a stencil at every fully supported location of ``curve``.

    Works on a single curve (shape ``(d,)``) or a batch (``(n, d)``).
    """
    x = np.asarray(curve, dtype=float)
    d = x.shape[-1]
    if d < stencil.support:
        raise CurveTooShortError(
            f"curve of length {d} is shorter than stencil support {stencil.support}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(x, stencil.support, axis=-1)
    return windows @ stencil.weights


def difference_matrix(stencil, dim):
    """Sparse ``(dim - 2L) x dim`` matrix whose rows are shifted stencils."""
    if dim < stencil.support:
        raise CurveTooShortError(
            f"dimension {dim} is smaller than stencil support {stencil.support}"
        )
    rows = dim - 2 * stencil.half_width
    offsets = np.arange(stencil.support)
    data = np.repeat(stencil.weights[:, None], dim, axis=1)
    return sparse.dia_matrix((data, offsets), shape=(rows, dim)).tocsr()


def cross_covariance(s1, s2):
    """Inner product of two stencils zero-padded to a common centred width.

    Under white noise this is the covariance of their outputs at the same
    location.
    """
    width = max(s1.half_width, s2.half_width)
    return float(np.dot(s1.padded(width), s2.padded(width)))


def format_stencil(stencil):
    """Serialize as ``order L w_-L ... w_L`` with 17 significant digits."""
    weights = " ".join(f"{v:.17g}" for v in stencil.weights)
    return f"{stencil.order} {stencil.half_width} {weights}"


def parse_stencil(line):
    parts = line.split()
    order, half_width = int(parts[0]), int(parts[1])
    return Stencil(order, half_width, np.array([float(v) for v in parts[2:]]))
