"""Slot-sized sharding, per-shard encryption, and the provider re-encryption layer."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from . import crypto
from .errors import InvalidInput
from .merkle import MerkleTree, mtree

DEFAULT_SLOT = 1 << 20  # 1 MiB


def split(data: bytes, slot: int) -> list[bytes]:
    """Ceiling-division split; the last shard keeps its true length."""
    if slot < 1:
        raise InvalidInput("slot size must be >= 1")
    return [data[i : i + slot] for i in range(0, len(data), slot)] or [b""]


@dataclass(frozen=True)
class ShardSet:
    """A seller's data after sharding and per-shard encryption.

    ``tree_plain`` commits the plaintext shards (root r_d) and ``tree_enc``
    the encrypted shards (root r_ed).
    """

    n: int
    slot: int
    plain_shards: tuple[bytes, ...]
    enc_shards: tuple[bytes, ...]
    tree_plain: MerkleTree
    tree_enc: MerkleTree

    @property
    def root_plain(self) -> bytes:
        return self.tree_plain.root

    @property
    def root_enc(self) -> bytes:
        return self.tree_enc.root


@dataclass(frozen=True)
class ProviderPackage:
    """A provider's second encryption layer over the seller's encrypted shards."""

    key: bytes
    eed_shards: tuple[bytes, ...]
    tree_eed: MerkleTree

    @property
    def root(self) -> bytes:
        return self.tree_eed.root


def shard_encrypt(master: bytes, data: bytes, slot: int = DEFAULT_SLOT) -> ShardSet:
    """Split ``data`` into ceil(len/slot) shards and encrypt each under K_i."""
    if not data:
        raise InvalidInput("data must be non-empty")
    plain = split(data, slot)
    keys = crypto.derive_keys(master, len(plain))
    enc = [crypto.sym_encrypt(k, shard) for k, shard in zip(keys, plain)]
    return ShardSet(
        n=len(plain),
        slot=slot,
        plain_shards=tuple(plain),
        enc_shards=tuple(enc),
        tree_plain=mtree(plain),
        tree_enc=mtree(enc),
    )


def reassemble(shards: list[bytes]) -> bytes:
    """Concatenate shards in index order."""
    return b"".join(shards)


def provider_encrypt(enc_shards: list[bytes], sp_seed: bytes) -> ProviderPackage:
    """Re-encrypt the seller's shards under a provider key derived from ``sp_seed``."""
    if not enc_shards:
        raise InvalidInput("shard list must be non-empty")
    key = hashlib.sha256(b"provider-key" + sp_seed).digest()
    eed = [crypto.sym_encrypt(key, shard) for shard in enc_shards]
    return ProviderPackage(key=key, eed_shards=tuple(eed), tree_eed=mtree(eed))


def save_shards(base_dir: str | Path, data_id: str, shard_set: ShardSet) -> Path:
    """Persist encrypted shards as <data_id>/<index>.shard with a JSON manifest."""
    out = Path(base_dir) / data_id
    out.mkdir(parents=True, exist_ok=True)
    for i, shard in enumerate(shard_set.enc_shards):
        (out / f"{i}.shard").write_bytes(shard)
    manifest = {
        "n": shard_set.n,
        "slot": shard_set.slot,
        "r_d": shard_set.root_plain.hex(),
        "r_ed": shard_set.root_enc.hex(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2))
    return out


def load_shards(base_dir: str | Path, data_id: str) -> tuple[dict, list[bytes]]:
    """Load the manifest and encrypted shard bytes written by :func:`save_shards`."""
    base = Path(base_dir) / data_id
    manifest = json.loads((base / "manifest.json").read_text())
    shards = [(base / f"{i}.shard").read_bytes() for i in range(manifest["n"])]
    return manifest, shards
