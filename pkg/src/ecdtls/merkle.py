"""Merkle hash trees with audit proofs (RFC 6962 construction).

Leaf hash is H(0x00 || leaf); interior nodes are H(0x01 || left || right);
trees split at the largest power of two below the leaf count.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

from .sha256 import sha256

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"

# audit-path entry: (side, digest) where side is the sibling's position
LEFT = "l"
RIGHT = "r"


class MerkleError(Exception):
    pass


def _split(n: int) -> int:
    """Largest power of two strictly below n (n >= 2)."""
    k = 1
    while k * 2 < n:
        k *= 2
    return k


def leaf_hash(leaf: bytes) -> bytes:
    return sha256(LEAF_PREFIX + leaf)


def node_hash(left: bytes, right: bytes) -> bytes:
    return sha256(NODE_PREFIX + left + right)


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    if not leaves:
        raise MerkleError("need at least one leaf")
    if len(leaves) == 1:
        return leaf_hash(leaves[0])
    k = _split(len(leaves))
    return node_hash(merkle_root(leaves[:k]), merkle_root(leaves[k:]))


def merkle_prove(leaves: Sequence[bytes], index: int) -> List[Tuple[str, bytes]]:
    """Audit path for leaves[index], leaf-to-root order."""
    if not leaves:
        raise MerkleError("need at least one leaf")
    if not 0 <= index < len(leaves):
        raise MerkleError("leaf index out of range")
    if len(leaves) == 1:
        return []
    k = _split(len(leaves))
    if index < k:
        path = merkle_prove(leaves[:k], index)
        path.append((RIGHT, merkle_root(leaves[k:])))
    else:
        path = merkle_prove(leaves[k:], index - k)
        path.append((LEFT, merkle_root(leaves[:k])))
    return path


def merkle_verify(root: bytes, leaf: bytes, index: int,
                  path: Sequence[Tuple[str, bytes]]) -> bool:
    acc = leaf_hash(leaf)
    for side, digest in path:
        if side == LEFT:
            acc = node_hash(digest, acc)
        elif side == RIGHT:
            acc = node_hash(acc, digest)
        else:
            return False
    return acc == root
