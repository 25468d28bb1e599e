"""Partial-key / cluster-key derivation bound to the SIC decoding order.

Cluster keys are SHA-256 hash chains over partial keys, so the result depends
on the order in which the partial keys are combined.  ``seal`` and ``open``
wrap AES-256-GCM with the cluster key.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from typing import Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .scenario import SicOrder

KEY_SIZE = 32
NONCE_SIZE = 12
CHAIN_DOMAIN = hashlib.sha256(b"doma/cluster-key-chain/v1").digest()


class KeyDerivationError(ValueError):
    pass


class AuthenticationError(Exception):
    """Sealed data failed authentication under the supplied key."""


@dataclass(frozen=True)
class PartialKey:
    device_index: int  # 1-based
    key_bytes: bytes

    def __post_init__(self) -> None:
        if len(self.key_bytes) != KEY_SIZE:
            raise ValueError(f"partial key must be {KEY_SIZE} bytes, got {len(self.key_bytes)}")
        if self.device_index < 1:
            raise ValueError("device_index is 1-based")


@dataclass(frozen=True)
class ClusterKey:
    key_bytes: bytes
    order_fingerprint: bytes


def order_fingerprint(device_indices: Sequence[int]) -> bytes:
    packed = b"".join(struct.pack(">Q", d) for d in device_indices)
    return hashlib.sha256(b"doma/order/v1" + packed).digest()


def derive_cluster_key(partial_keys: Sequence[PartialKey]) -> ClusterKey:
    """Chain the partial keys in SIC decode order into one cluster key."""
    if not partial_keys:
        raise KeyDerivationError("at least one partial key is required")
    indices = [pk.device_index for pk in partial_keys]
    if len(set(indices)) != len(indices):
        raise KeyDerivationError(f"duplicate device index in {indices}")
    state = CHAIN_DOMAIN
    for pk in partial_keys:
        state = hashlib.sha256(state + pk.key_bytes).digest()
    return ClusterKey(state, order_fingerprint(indices))


def downlink_key_members(quality_ranks: SicOrder, target_device: int) -> list[int]:
    """Devices whose partial keys protect ``target_device``, best quality first.

    That is the target itself plus every device ranked strictly below it.
    """
    ranks = quality_ranks.rank_of_device
    if not 1 <= target_device <= ranks.size:
        raise KeyDerivationError(f"unknown target device {target_device}")
    own = ranks[target_device - 1]
    members = [d for d in range(1, ranks.size + 1) if ranks[d - 1] <= own]
    return sorted(members, key=lambda d: -ranks[d - 1])


def derive_downlink_key(partial_keys: Sequence[PartialKey], quality_ranks: SicOrder,
                        target_device: int) -> ClusterKey:
    by_index = {pk.device_index: pk for pk in partial_keys}
    if target_device not in by_index:
        raise KeyDerivationError(f"unknown target device {target_device}")
    members = downlink_key_members(quality_ranks, target_device)
    missing = [d for d in members if d not in by_index]
    if missing:
        raise KeyDerivationError(f"no partial key for devices {missing}")
    return derive_cluster_key([by_index[d] for d in members])


def seal(payload: bytes, key: ClusterKey) -> bytes:
    """Encrypt and authenticate ``payload``; output is ``nonce || ciphertext || tag``."""
    nonce = os.urandom(NONCE_SIZE)
    return nonce + AESGCM(key.key_bytes).encrypt(nonce, bytes(payload), key.order_fingerprint)


def open(sealed: bytes, key: ClusterKey) -> bytes:  # noqa: A001 - mirrors gzip.open style naming
    """Inverse of :func:`seal`; raises :class:`AuthenticationError` on any mismatch."""
    if len(sealed) < NONCE_SIZE + 16:
        raise AuthenticationError("sealed message too short")
    nonce, body = sealed[:NONCE_SIZE], sealed[NONCE_SIZE:]
    try:
        return AESGCM(key.key_bytes).decrypt(nonce, body, key.order_fingerprint)
    except InvalidTag:
        raise AuthenticationError("authentication failed: wrong cluster key") from None
