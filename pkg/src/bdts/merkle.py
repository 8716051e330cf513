"""Binary Merkle tree over opaque byte strings.

Leaves and internal nodes are hashed with distinct domain-separation
prefixes (0x00 / 0x01) so a proof for an internal node can never be
replayed as a leaf.  Odd-width levels duplicate their last digest.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from . import metrics
from .errors import InvalidInput

DIGEST_SIZE = 32
_LEAF_PREFIX = b"\x00"
_NODE_PREFIX = b"\x01"


def _hash_leaf(data: bytes) -> bytes:
    return hashlib.sha256(_LEAF_PREFIX + data).digest()


def _hash_node(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(_NODE_PREFIX + left + right).digest()


@dataclass(frozen=True)
class MerkleProof:
    """Inclusion proof for one leaf: sibling digests from bottom to top.

    Each sibling carries a flag telling whether it sits to the right of
    the running hash.
    """

    index: int
    siblings: tuple[tuple[bytes, bool], ...]


class MerkleTree:
    """Immutable tree; ``levels[0]`` holds leaf digests, ``levels[-1]`` the root."""

    def __init__(self, leaves: list[bytes]):
        if not leaves:
            raise InvalidInput("merkle tree needs at least one leaf")
        self.leaf_count = len(leaves)
        levels = [[_hash_leaf(leaf) for leaf in leaves]]
        while len(levels[-1]) > 1:
            level = levels[-1]
            if len(level) % 2:
                level = level + [level[-1]]
            levels.append(
                [_hash_node(level[i], level[i + 1]) for i in range(0, len(level), 2)]
            )
        self.levels = levels
        metrics.record("tree_builds")

    @property
    def root(self) -> bytes:
        return self.levels[-1][0]


def mtree(leaves: list[bytes]) -> MerkleTree:
    """Build a tree over ``leaves``; deterministic for a given leaf list."""
    return MerkleTree(leaves)


def mproof(tree: MerkleTree, index: int) -> MerkleProof:
    """Produce the inclusion proof for leaf ``index``."""
    if not 0 <= index < tree.leaf_count:
        raise IndexError(f"leaf index {index} out of range [0, {tree.leaf_count})")
    siblings = []
    pos = index
    for level in tree.levels[:-1]:
        if len(level) % 2:
            level = level + [level[-1]]
        if pos % 2 == 0:
            siblings.append((level[pos + 1], True))
        else:
            siblings.append((level[pos - 1], False))
        pos //= 2
    return MerkleProof(index=index, siblings=tuple(siblings))


def mvrfy(index: int, root: bytes, leaf: bytes, proof: MerkleProof) -> bool:
    """True iff ``leaf`` at ``index`` reproduces ``root`` along ``proof``.

    Malformed proofs return False rather than raising.
    """
    metrics.record("proof_verifications")
    if proof.index != index or index < 0:
        return False
    acc = _hash_leaf(leaf)
    pos = index
    for sibling, is_right in proof.siblings:
        if not isinstance(sibling, bytes) or len(sibling) != DIGEST_SIZE:
            return False
        # side flags must agree with the claimed index path
        if is_right != (pos % 2 == 0):
            return False
        acc = _hash_node(acc, sibling) if is_right else _hash_node(sibling, acc)
        pos //= 2
    return acc == root
