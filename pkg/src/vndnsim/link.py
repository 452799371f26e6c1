"""Identifiers and message/frame types shared by every layer of the simulator.

MAC addresses, content names, the two NDN message kinds and the link-layer
frame that carries them. Everything here is an immutable value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

# Serialization size model. NDN wire sizes are not given anywhere we could
# calibrate against, so these are declared constants; they only affect
# transmit delay.
NDN_BASE_BYTES = 64
LINK_HEADER_BYTES = 36
VARIANT_HEADER_BYTES = 12

DEFAULT_SEGMENT_BYTES = 1024
DEFAULT_CONTENT_BYTES = 1_752_000


class MacParseError(ValueError):
    pass


class MacAddress(bytes):
    """Six-octet link address. Renders as ``00:00:00:00:00:01``."""

    __slots__ = ()

    def __new__(cls, octets) -> "MacAddress":
        b = bytes(octets)
        if len(b) != 6:
            raise ValueError(f"MAC address needs 6 octets, got {len(b)}")
        return super().__new__(cls, b)

    @classmethod
    def from_int(cls, value: int) -> "MacAddress":
        return cls(value.to_bytes(6, "big"))

    @property
    def octets(self) -> Tuple[int, ...]:
        return tuple(self)

    @property
    def is_broadcast(self) -> bool:
        return self == BROADCAST

    def __str__(self) -> str:
        return ":".join(f"{o:02X}" for o in self)

    def __repr__(self) -> str:
        return f"MacAddress('{self}')"


BROADCAST = MacAddress(b"\xff" * 6)


def parse_mac(text: str) -> MacAddress:
    groups = text.strip().split(":")
    if len(groups) != 6:
        raise MacParseError(f"expected 6 colon-separated groups in {text!r}, got {len(groups)}")
    octets = []
    for g in groups:
        if len(g) != 2 or any(c not in "0123456789abcdefABCDEF" for c in g):
            raise MacParseError(f"bad MAC group {g!r} in {text!r}")
        octets.append(int(g, 16))
    return MacAddress(octets)


@dataclass(frozen=True, slots=True)
class ContentName:
    """A segmented content name: ``/comp1/comp2/seg=<n>``."""

    prefix: Tuple[str, ...]
    segment: int = 0
    _hash: int = field(init=False, compare=False, repr=False)
    _wire_len: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not self.prefix or any(not c for c in self.prefix):
            raise ValueError("name prefix needs at least one non-empty component")
        if self.segment < 0:
            raise ValueError("segment index must be non-negative")
        # names key every table lookup, so hash and size are computed once
        object.__setattr__(self, "_hash", hash((self.prefix, self.segment)))
        object.__setattr__(self, "_wire_len", len(str(self)))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def parse(cls, text: str) -> "ContentName":
        comps = [c for c in text.split("/") if c]
        seg = 0
        if comps and comps[-1].startswith("seg="):
            seg = int(comps.pop()[4:])
        return cls(tuple(comps), seg)

    def prefix_text(self) -> str:
        return "/" + "/".join(self.prefix)

    @property
    def wire_len(self) -> int:
        return self._wire_len

    def __str__(self) -> str:
        return f"{self.prefix_text()}/seg={self.segment}"


def as_prefix(prefix) -> Tuple[str, ...]:
    """Accept a ContentName, a ``/a/b`` string or a tuple of components."""
    if isinstance(prefix, ContentName):
        return prefix.prefix
    if isinstance(prefix, str):
        return tuple(c for c in prefix.split("/") if c)
    return tuple(prefix)


def name_matches(entry_prefix, name: ContentName) -> bool:
    """True iff ``entry_prefix`` is a component-wise prefix of the name's prefix."""
    p = as_prefix(entry_prefix)
    return len(p) <= len(name.prefix) and name.prefix[: len(p)] == p


def segment_count(content_bytes: int = DEFAULT_CONTENT_BYTES,
                  segment_bytes: int = DEFAULT_SEGMENT_BYTES) -> int:
    return math.ceil(content_bytes / segment_bytes)


def segment_payload(segment: int, content_bytes: int = DEFAULT_CONTENT_BYTES,
                    segment_bytes: int = DEFAULT_SEGMENT_BYTES) -> int:
    n = segment_count(content_bytes, segment_bytes)
    seg = segment % n
    if seg < n - 1:
        return segment_bytes
    return content_bytes - segment_bytes * (n - 1)


# (oma, tma) carried inside the NDN message by the MMM variant only
VariantHeader = Tuple[MacAddress, MacAddress]


@dataclass(frozen=True, slots=True)
class InterestMsg:
    name: ContentName
    lifetime_ms: int
    nonce: int
    variant_header: Optional[VariantHeader] = None
    # hops travelled so far; only read by the CODIE baseline
    hop_count: int = 0

    def __post_init__(self):
        if self.lifetime_ms <= 0:
            raise ValueError("lifetime_ms must be positive")

    @property
    def size_bytes(self) -> int:
        extra = VARIANT_HEADER_BYTES if self.variant_header else 0
        return NDN_BASE_BYTES + self.name.wire_len + extra


@dataclass(frozen=True, slots=True)
class DataMsg:
    name: ContentName
    payload_len_bytes: int
    hop_count: int = 0
    variant_header: Optional[VariantHeader] = None
    # link traversals so far; compared against hop_count by CODIE
    hops_traveled: int = 0

    def __post_init__(self):
        if self.payload_len_bytes <= 0:
            raise ValueError("payload_len_bytes must be positive")

    @property
    def size_bytes(self) -> int:
        extra = VARIANT_HEADER_BYTES if self.variant_header else 0
        return NDN_BASE_BYTES + self.name.wire_len + self.payload_len_bytes + extra


Message = Union[InterestMsg, DataMsg]


@dataclass(frozen=True, slots=True)
class Frame:
    """Link-layer envelope. ``src_mac`` is the OMA, ``dst_mac`` the TMA."""

    src_mac: MacAddress
    dst_mac: MacAddress
    channel: int
    body: Message
    header_overhead: int = field(default=LINK_HEADER_BYTES, compare=False)
    # derived once; frames are read by every node in range
    is_interest: bool = field(init=False, compare=False, repr=False)
    oma: MacAddress = field(init=False, compare=False, repr=False)
    tma: MacAddress = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        vh = self.body.variant_header
        if vh is not None and self.dst_mac != BROADCAST:
            raise ValueError("frames carrying an in-message (oma, tma) header must be broadcast")
        object.__setattr__(self, "is_interest", isinstance(self.body, InterestMsg))
        object.__setattr__(self, "oma", vh[0] if vh else self.src_mac)
        object.__setattr__(self, "tma", vh[1] if vh else self.dst_mac)

    @property
    def size_bytes(self) -> int:
        return self.header_overhead + self.body.size_bytes

    def describe(self) -> str:
        kind = "I" if self.is_interest else "D"
        return f"{kind} {self.body.name} oma={self.oma} tma={self.tma} ch={self.channel}"
