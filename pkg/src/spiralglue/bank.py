"""Banks of certified near-isometric linear maps and subsequence selection.

Each map in a bank satisfies the sandwich

    |v| <= |psi_n(v)| <= (1 + eps_n) |v|

on a designated finite certification set, with the per-map slacks eps_n split
uniformly so that prod(1 + eps_n) <= 1 + gamma. Downstream inequalities only
ever evaluate the maps on certification vectors and their two-term blends, so
finite certification is exactly as strong as the uses require.

The subsequence selection replaces an infinite extraction argument with a
bounded greedy scan over index pairs; when the bank cannot witness the
required lower bound the search fails loudly instead of degrading.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import BankExhausted, CertificationFailed, DimensionMismatch, NotStabilized
from .pointset import AnnulusDecomposition
from .spaces import LinearMap, Lp, Space, apply, blend_apply, norm

_TOL = 1e-12
_MAX_TUPLES = 20000


@dataclass(frozen=True)
class BlockShift:
    """psi_n writes the source coordinates into the n-th disjoint block of the target."""

    block_width: int | None = None


@dataclass(frozen=True)
class QuadratureL2toL1:
    """psi_n maps an l2 source into an l1 block via absolute-value quadrature.

    In dimension 2 the directions are equally spaced (rotated per map by a
    seeded offset) and the scale is calibrated in closed form, giving a
    certified ratio inside [1, sec(pi/directions)]. In higher dimension the
    directions are seeded samples of the unit sphere and the scale comes from
    a dense probe; certification may then fail honestly.
    """

    directions: int = 64
    seed: int = 0


@dataclass(frozen=True, eq=False)
class UserMatrices:
    """Caller-provided matrices, certified like any other strategy."""

    matrices: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "matrices", tuple(np.asarray(m, dtype=float) for m in self.matrices)
        )


BankStrategy = Union[BlockShift, QuadratureL2toL1, UserMatrices]


@dataclass(frozen=True, eq=False)
class EmbeddingBank:
    """An ordered family of certified near-isometries with a shared budget."""

    maps: tuple[LinearMap, ...]
    eps_n: tuple[float, ...]
    gamma: float
    strategy: BankStrategy
    cert_lower_margin: tuple[float, ...]  # min ratio - 1, per map
    cert_upper_margin: tuple[float, ...]  # (1 + eps_n) - max ratio, per map

    @property
    def size(self) -> int:
        return len(self.maps)

    @property
    def source(self) -> Space:
        return self.maps[0].source

    @property
    def target(self) -> Space:
        return self.maps[0].target


def _block_shift_matrices(source: Space, target: Space, count: int, width: int | None):
    bw = source.dim if width is None else int(width)
    if bw < source.dim:
        raise DimensionMismatch(f"block width {bw} smaller than source dim {source.dim}")
    if target.dim < count * bw:
        raise DimensionMismatch(
            f"target dim {target.dim} cannot hold {count} blocks of width {bw}"
        )
    mats = []
    eye = np.eye(source.dim)
    for n in range(count):
        m = np.zeros((target.dim, source.dim))
        m[n * bw : n * bw + source.dim, :] = eye
        mats.append(m)
    return mats


def _quadrature_matrices(source: Space, target: Space, count: int, spec: QuadratureL2toL1):
    if source.norm != Lp(2.0):
        raise ValueError("quadrature strategy requires an l2 source norm")
    if target.norm != Lp(1.0):
        raise ValueError("quadrature strategy requires an l1 target norm")
    nd = spec.directions
    if nd < 2:
        raise ValueError("directions must be >= 2")
    if target.dim < count * nd:
        raise DimensionMismatch(
            f"target dim {target.dim} cannot hold {count} blocks of {nd} directions"
        )
    d = source.dim
    rng = np.random.default_rng(spec.seed)
    mats = []
    for n in range(count):
        block = np.zeros((target.dim, d))
        if d == 1:
            rows = np.full((nd, 1), 1.0 / nd)
        elif d == 2:
            offset = rng.uniform(0.0, 2.0 * math.pi)
            phi = offset + 2.0 * math.pi * np.arange(nd) / nd
            # closed-form calibration: the quadrature sum of |cos| over equally
            # spaced angles lies in [ (pi/nd) cot(pi/nd), (pi/nd)/sin(pi/nd) ];
            # dividing by the minimum pins the certified ratio to [1, sec(pi/nd)]
            w = math.tan(math.pi / nd) / 2.0
            rows = w * np.column_stack([np.cos(phi), np.sin(phi)])
        else:
            theta = rng.standard_normal((nd, d))
            theta /= np.linalg.norm(theta, axis=1, keepdims=True)
            probe = rng.standard_normal((4096, d))
            probe /= np.linalg.norm(probe, axis=1, keepdims=True)
            sums = np.abs(probe @ theta.T).sum(axis=1)
            rows = ((1.0 + 1e-9) / float(sums.min())) * theta
        block[n * nd : (n + 1) * nd, :] = rows
        mats.append(block)
    return mats


def build_bank(
    strategy: BankStrategy,
    source: Space,
    target: Space,
    gamma: float,
    count: int,
    certify_set: Sequence,
) -> EmbeddingBank:
    """Construct `count` maps and certify each one on the given vector set.

    The per-map slack is the uniform split eps_n = (1+gamma)^(1/count) - 1.
    Raises CertificationFailed with the worst offending vector if any map
    falls outside its sandwich.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if gamma < 0.0:
        raise ValueError("gamma must be >= 0")
    vectors = [np.asarray(v, dtype=float) for v in certify_set]
    vectors = [v for v in vectors if norm(source, v) > 0.0]
    if not vectors:
        raise ValueError("certify_set must contain at least one nonzero vector")

    if isinstance(strategy, BlockShift):
        mats = _block_shift_matrices(source, target, count, strategy.block_width)
    elif isinstance(strategy, QuadratureL2toL1):
        mats = _quadrature_matrices(source, target, count, strategy)
    else:
        if len(strategy.matrices) < count:
            raise ValueError(f"strategy provides {len(strategy.matrices)} < count {count} maps")
        mats = [np.asarray(m, dtype=float) for m in strategy.matrices[:count]]

    eps_n = (1.0 + gamma) ** (1.0 / count) - 1.0
    maps = tuple(LinearMap(m, source, target) for m in mats)
    lo_margins = []
    hi_margins = []
    for n, lin in enumerate(maps):
        ratios = np.array([norm(target, apply(lin, v)) / norm(source, v) for v in vectors])
        k_lo = int(np.argmin(ratios))
        k_hi = int(np.argmax(ratios))
        if ratios[k_lo] < 1.0 - _TOL:
            raise CertificationFailed(n, k_lo, float(ratios[k_lo]))
        if ratios[k_hi] > (1.0 + eps_n) * (1.0 + _TOL):
            raise CertificationFailed(n, k_hi, float(ratios[k_hi]))
        lo_margins.append(float(ratios[k_lo]) - 1.0)
        hi_margins.append((1.0 + eps_n) - float(ratios[k_hi]))
    slots = (eps_n,) * count
    assert np.prod(1.0 + np.array(slots)) <= (1.0 + gamma) * (1.0 + _TOL)
    return EmbeddingBank(maps, slots, gamma, strategy, tuple(lo_margins), tuple(hi_margins))


def spreading_limit_estimate(
    bank: EmbeddingBank,
    u,
    a: Sequence[float],
    tol: float = 1e-9,
    max_start: int | None = None,
) -> float:
    """Estimate the stable value of |sum_k a_k psi_{n_k}(u)| over late index tuples.

    Scans every increasing index tuple whose first index is at least nu, for
    nu growing up to max_start, and returns the window midpoint once the
    window's oscillation drops below tol. Raises NotStabilized when the finite
    bank never settles at this tolerance.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (bank.source.dim,):
        raise DimensionMismatch(f"u has shape {u.shape}, expected ({bank.source.dim},)")
    nu_norm = norm(bank.source, u)
    if abs(nu_norm - 1.0) > 1e-9:
        raise ValueError(f"u must be a unit vector, got norm {nu_norm!r}")
    coeff = np.asarray(a, dtype=float)
    nz = np.nonzero(coeff)[0]
    if nz.size == 0:
        raise ValueError("coefficient list needs at least one nonzero entry")
    coeff = coeff[: nz.max() + 1]
    width = coeff.size
    size = bank.size
    if width > size:
        raise ValueError(f"coefficient list longer than the bank ({width} > {size})")
    if max_start is None:
        max_start = size - width + 1
    images = [apply(lin, u) for lin in bank.maps]
    last_osc = math.inf
    for nu in range(1, max_start + 1):
        avail = size - (nu - 1)
        if avail < width:
            break
        n_tuples = math.comb(avail, width)
        if n_tuples > _MAX_TUPLES:
            raise ValueError(
                f"window at start {nu} has {n_tuples} index tuples; "
                f"exhaustive scan capped at {_MAX_TUPLES}"
            )
        vals = [
            norm(bank.target, sum(c * images[k] for c, k in zip(coeff, combo)))
            for combo in itertools.combinations(range(nu - 1, size), width)
        ]
        last_osc = max(vals) - min(vals)
        # a single-tuple window cannot witness stability
        if len(vals) >= 2 and last_osc < tol:
            return 0.5 * (max(vals) + min(vals))
    raise NotStabilized(
        f"oscillation {last_osc!r} still >= tol {tol!r} at start {max_start}"
    )


@dataclass(frozen=True)
class SelectionResult:
    """Chosen bank indices (one per level plus one) and per-level worst margins.

    worst_margins[i] is min over all recorded (direction, angle) checks of the
    achieved blend norm minus the threshold sqrt(2)/(3(1+zeta)); math.inf when
    the level had nothing to check.
    """

    chosen_indices: tuple[int, ...]
    worst_margins: tuple[float, ...]
    zeta: float
    threshold: float


def _level_ok(bank, checks, n_lo, n_hi, threshold):
    """Worst margin of the blend norm over a level's checks for a candidate pair."""
    worst = math.inf
    worst_item = None
    for u, angle in checks:
        val = norm(
            bank.target,
            blend_apply(math.cos(angle), math.sin(angle), bank.maps[n_lo], bank.maps[n_hi], u),
        )
        if val - threshold < worst:
            worst = val - threshold
            worst_item = (u, angle, val)
    return worst, worst_item


def select_subsequence(
    bank: EmbeddingBank, decomp: AnnulusDecomposition, zeta: float
) -> SelectionResult:
    """Greedy diagonal search for indices witnessing the blend lower bound.

    Level 1 scans index pairs (n_1, n_2) lexicographically; each later level
    keeps its predecessor and scans only the next index. Raises BankExhausted
    with the worst witness when no candidate passes.
    """
    if zeta < 0.0:
        raise ValueError("zeta must be >= 0")
    m = decomp.levels
    if bank.size < m + 1:
        raise ValueError(f"bank size {bank.size} < levels + 1 = {m + 1}")
    threshold = math.sqrt(2.0) / (3.0 * (1.0 + zeta))
    per_level = [
        [(da.u, angle) for da in decomp.directions[i] for angle in da.angles] for i in range(m)
    ]

    chosen: list[int] = []
    margins: list[float] = []
    # first level fixes two indices at once
    first_checks = per_level[0]
    best = (-math.inf, None)
    found = None
    for n1, n2 in itertools.combinations(range(bank.size - m + 1), 2):
        worst, item = _level_ok(bank, first_checks, n1, n2, threshold)
        if worst >= 0.0:
            found = (n1, n2, worst)
            break
        if worst > best[0]:
            best = (worst, item)
    if found is None:
        _, item = best
        u, angle, val = item if item is not None else (None, math.nan, -math.inf)
        raise BankExhausted(1, u, angle, val if item else -math.inf, threshold)
    chosen.extend([found[0], found[1]])
    margins.append(found[2])

    for level in range(2, m + 1):
        checks = per_level[level - 1]
        n_prev = chosen[-1]
        best = (-math.inf, None)
        accepted = None
        # leave room for the remaining m - level indices
        for n in range(n_prev + 1, bank.size - (m - level)):
            worst, item = _level_ok(bank, checks, n_prev, n, threshold)
            if worst >= 0.0:
                accepted = (n, worst)
                break
            if worst > best[0]:
                best = (worst, item)
        if accepted is None:
            _, item = best
            u, angle, val = item if item is not None else (None, math.nan, -math.inf)
            raise BankExhausted(level, u, angle, val if item else -math.inf, threshold)
        chosen.append(accepted[0])
        margins.append(accepted[1])

    return SelectionResult(tuple(chosen), tuple(margins), float(zeta), threshold)
