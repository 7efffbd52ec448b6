"""Tier values, the three canonical-form predicates, and the reductions.

Tier t(2j) is the number of mu-iterations from 2j down to 1 (equal to
the count of M/R edges on the tree path to node 1, the root edge
included).  A tamed pair is the unique member of its signed-KM class
satisfying the four ordering clauses below; a reference pair is a tamed
pair whose left branches list all + nodes before all - nodes.
"""

from __future__ import annotations

from .errors import NotReference, NotTamed, OutOfRange
from .moves import MoveState, apply_signed_km, groups_of, is_allowable
from .pairs import CollapsingPair, TimePermutation
from .trees import (
    SignedTree,
    echelon_labeling,
    pair_from_tree,
    skeleton_of,
    tamed_labeling,
    tree_from_pair,
)


def tier(pair: CollapsingPair, label: int) -> int:
    """Minimal q with mu^q(label) = 1, the extension applied per step."""
    if label % 2 or not 2 <= label <= 2 * pair.k:
        raise OutOfRange(f"tier is defined on even labels 2..{2 * pair.k}")
    q = 0
    while label != 1:
        label = pair.mu_of(label)
        q += 1
    return q


def tier_table(pair: CollapsingPair) -> dict[int, int]:
    """t(2j) for every even label (t(2) = 1 by convention)."""
    table: dict[int, int] = {}
    for x in pair.even_labels:
        chain = []
        y = x
        while y != 1 and y not in table:
            chain.append(y)
            y = pair.mu_of(y)
        base = 0 if y == 1 else table[y]
        for i, z in enumerate(reversed(chain)):
            table[z] = base + i + 1
    return {x: table[x] for x in pair.even_labels}


def is_upper_echelon(pair: CollapsingPair) -> bool:
    return all(pair.mu[j - 1] <= pair.mu[j] for j in range(1, pair.k))


def _tamed_keys(pair: CollapsingPair):
    """(tier, mu^2, sgn(mu), mu) per even label; mu=1 parents get sentinels."""
    tiers = tier_table(pair)
    keys = {}
    for x in pair.even_labels:
        v = pair.mu_of(x)
        if v == 1:
            keys[x] = (tiers[x], 0, None, v)
        else:
            keys[x] = (tiers[x], pair.mu_of(v), pair.sgn_of(v), v)
    return keys


def _required_before(ka, kb) -> bool:
    """Must a node with key ``ka`` carry a smaller label than one with ``kb``?"""
    ta, m2a, sa, ma = ka
    tb, m2b, sb, mb = kb
    if ta != tb:
        return ta < tb
    if m2a == m2b:
        if sa == sb and ma < mb:
            return True
        return sa == "+" and sb == "-"
    return ma < mb


def is_tamed(pair: CollapsingPair) -> bool:
    """The four Definition clauses, checked pairwise over labels."""
    keys = _tamed_keys(pair)
    labels = list(pair.even_labels)
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            if _required_before(keys[b], keys[a]):
                return False
    return True


def is_reference(pair: CollapsingPair) -> bool:
    """Tamed, and every left branch is a + block followed by a - block."""
    if not is_tamed(pair):
        return False
    for members in groups_of(pair).values():
        signs = [pair.sgn_of(x) for x in members]
        if "-" in signs and "+" in signs[signs.index("-") :]:
            return False
    return True


def reduce_to_labeling(
    pair: CollapsingPair, target: SignedTree
) -> tuple[CollapsingPair, tuple[int, ...]]:
    """Carry ``pair`` onto a target labeling of the same signed skeleton.

    Walks the labels in order; the node that should carry label 2j is
    bubbled up from its current label 2l through the adjacent chain
    KM(2l-2,2l), ..., KM(2j,2j+2).  Every step is checked acceptable.
    Returns the final pair and the move indices in application order.
    """
    target_path = {lab: path for path, lab in target.positions().items()}
    state = MoveState.start(pair)
    moves: list[int] = []
    for j in range(1, pair.k + 1):
        positions = tree_from_pair(state.pair).positions()
        current = positions[target_path[2 * j]]
        for m in range(current // 2 - 1, j - 1, -1):
            state = apply_signed_km(state, m)
            moves.append(m)
    return state.pair, tuple(moves)


def to_tamed(pair: CollapsingPair) -> tuple[CollapsingPair, tuple[int, ...]]:
    """The unique tamed pair of the signed-KM class, with a move witness."""
    target = tamed_labeling(skeleton_of(tree_from_pair(pair), signed=True))
    return reduce_to_labeling(pair, target)


def to_echelon(pair: CollapsingPair) -> tuple[CollapsingPair, tuple[int, ...]]:
    """The unique upper-echelon member of the (unsigned) class."""
    seed = pair.unsigned()
    target = echelon_labeling(skeleton_of(tree_from_pair(seed), signed=False))
    return reduce_to_labeling(seed, target)


def echelon_pair(pair: CollapsingPair) -> CollapsingPair:
    """Upper-echelon form read straight off the skeleton labeling."""
    tree = echelon_labeling(skeleton_of(tree_from_pair(pair), signed=False))
    return pair_from_tree(tree)


def to_reference(pair: CollapsingPair) -> tuple[CollapsingPair, TimePermutation]:
    """Reference pair of the wild class and the allowable witness.

    Per left branch, the witness rho sends the block-leading labels to
    the + members (in order) and the rest to the - members (in order);
    then reference = W(rho)^-1 applied to the input, i.e.
    input = W(rho)(reference).
    """
    if not is_tamed(pair):
        raise NotTamed(f"reference reduction needs a tamed pair: {pair}")
    image = {}
    for members in groups_of(pair).values():
        plus = [x for x in members if pair.sgn_of(x) == "+"]
        minus = [x for x in members if pair.sgn_of(x) == "-"]
        for src, dst in zip(members, plus + minus):
            image[src] = dst
    rho = TimePermutation(pair.k, tuple(image[2 * j] for j in range(1, pair.k + 1)))
    rho_inv = rho.inverse()
    k = pair.k
    mu = tuple(
        1 if pair.mu[j - 1] == 1 else rho_inv.of(pair.mu[j - 1]) for j in range(1, k + 1)
    )
    sgn = tuple(pair.sgn_of(rho.of(2 * j)) for j in range(1, k + 1))
    reference = CollapsingPair(k, mu, sgn)
    if not is_reference(reference):
        raise NotReference(f"constructed pair is not a reference pair: {reference}")
    if not is_allowable(reference, rho):
        raise NotReference(f"witness {rho.image} is not allowable for {reference}")
    return reference, rho


__all__ = [
    "tier",
    "tier_table",
    "is_upper_echelon",
    "is_tamed",
    "is_reference",
    "to_tamed",
    "to_echelon",
    "echelon_pair",
    "to_reference",
    "reduce_to_labeling",
]
