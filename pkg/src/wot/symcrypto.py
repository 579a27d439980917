"""Authenticated item encryption and XOR key splitting.

Ciphertext layout (also the wire and bundle-file format)::

    12-byte nonce || body || 16-byte GCM tag

The cipher is AES-128-GCM for 128-bit keys and AES-256-GCM for 256-bit
keys, so independently published bundles are bit-exact given the same key
and nonce. The ``context`` string is bound as associated data; it carries
the protocol mode, item id, and layer ordinal so a ciphertext cannot be
swapped for another item's and still authenticate.

A key split into ``p`` shares draws ``p - 1`` uniform share strings and
sets the last share to the XOR of the key with all of them: any proper
subset of shares is jointly uniform and reveals nothing about the key.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import AuthenticationError, CryptoError
from .instrument import Counters

NONCE_LEN = 12
TAG_LEN = 16
KEY_BITS_CHOICES = (128, 256)

_SYSTEM_RNG = random.SystemRandom()


def _check_key(key: bytes) -> bytes:
    if not isinstance(key, (bytes, bytearray)):
        raise CryptoError("key must be bytes")
    if len(key) * 8 not in KEY_BITS_CHOICES:
        raise CryptoError(f"key must be 16 or 32 bytes, got {len(key)}")
    return bytes(key)


def new_key(key_bits: int = 128, rng=None, counters: Counters | None = None) -> bytes:
    if key_bits not in KEY_BITS_CHOICES:
        raise CryptoError(f"unsupported key length {key_bits}")
    rng = rng or _SYSTEM_RNG
    if counters:
        counters.key_gens += 1
    return rng.randbytes(key_bits // 8)


def encrypt(key: bytes, plaintext: bytes, context: str = "",
            rng=None, counters: Counters | None = None) -> bytes:
    key = _check_key(key)
    rng = rng or _SYSTEM_RNG
    nonce = rng.randbytes(NONCE_LEN)
    if counters:
        counters.encryptions += 1
    return nonce + AESGCM(key).encrypt(nonce, bytes(plaintext), context.encode())


def decrypt(key: bytes, ciphertext: bytes, context: str = "",
            counters: Counters | None = None) -> bytes:
    key = _check_key(key)
    if len(ciphertext) < NONCE_LEN + TAG_LEN:
        raise CryptoError("malformed ciphertext: too short")
    if counters:
        counters.decryptions += 1
    nonce, rest = ciphertext[:NONCE_LEN], ciphertext[NONCE_LEN:]
    try:
        return AESGCM(key).decrypt(nonce, bytes(rest), context.encode())
    except InvalidTag:
        raise AuthenticationError() from None


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise CryptoError("xor length mismatch")
    return bytes(x ^ y for x, y in zip(a, b))


def split_key(key: bytes, parts: int, rng=None, counters: Counters | None = None) -> list[bytes]:
    """Split ``key`` into ``parts`` XOR shares; all of them recombine to the key.

    Exactly ``parts - 1`` random strings are drawn; the final share absorbs
    the key.
    """
    if parts < 1:
        raise CryptoError(f"share count must be >= 1, got {parts}")
    rng = rng or _SYSTEM_RNG
    shares = []
    last = bytes(key)
    for _ in range(parts - 1):
        share = rng.randbytes(len(key))
        if counters:
            counters.share_draws += 1
        shares.append(share)
        last = xor_bytes(last, share)
    shares.append(last)
    return shares


def combine_shares(shares, counters: Counters | None = None) -> bytes:
    if not shares:
        raise CryptoError("cannot combine zero shares")
    out = bytes(shares[0])
    for share in shares[1:]:
        out = xor_bytes(out, share)
    if counters:
        counters.shares_combined += len(shares)
    return out


@dataclass(frozen=True)
class KeyShareSet:
    """One item's key shares, positioned in the flat index space by the owner."""

    item_index: int
    shares: tuple[bytes, ...]

    def combined(self) -> bytes:
        return combine_shares(self.shares)


def _layer_context(context: str, layer: int) -> str:
    return f"{context}|layer{layer}"


def nested_encrypt(keys, plaintext: bytes, context: str = "",
                   rng=None, counters: Counters | None = None) -> bytes:
    """Encrypt under every key in turn; ``keys[0]`` ends up outermost."""
    keys = list(keys)
    if not keys:
        raise CryptoError("nested encryption needs at least one key")
    blob = bytes(plaintext)
    for layer in range(len(keys), 0, -1):
        blob = encrypt(keys[layer - 1], blob, _layer_context(context, layer), rng, counters)
    return blob


def nested_decrypt(keys, ciphertext: bytes, context: str = "",
                   counters: Counters | None = None) -> bytes:
    """Peel layers outermost-first; raises naming the first failing layer."""
    keys = list(keys)
    if not keys:
        raise CryptoError("nested decryption needs at least one key")
    blob = bytes(ciphertext)
    for layer in range(1, len(keys) + 1):
        try:
            blob = decrypt(keys[layer - 1], blob, _layer_context(context, layer), counters)
        except AuthenticationError:
            raise AuthenticationError(f"authentication failure at layer {layer}", layer=layer) from None
    return blob
