"""Names and indexing for the 15 so(4,2) generators.

The fixed basis order is

    L1 L2 L3  A1 A2 A3  B1 B2 B3  G1 G2 G3  S C D

with G short for Gamma.  Everything else in the package (structure
table, matrix representations, control amplitude vectors) indexes
against this order.
"""

from __future__ import annotations

NAMES = (
    "L1", "L2", "L3",
    "A1", "A2", "A3",
    "B1", "B2", "B3",
    "G1", "G2", "G3",
    "S", "C", "D",
)

INDEX = {name: i for i, name in enumerate(NAMES)}

# family index blocks
L_IDX = (0, 1, 2)
A_IDX = (3, 4, 5)
B_IDX = (6, 7, 8)
G_IDX = (9, 10, 11)
S_IDX = 12
C_IDX = 13
D_IDX = 14

N_GENERATORS = 15

# metric of the defining six-dimensional space
METRIC_SIGNATURE = (1, 1, 1, 1, -1, -1)

_ALIASES = {
    "GAMMA1": "G1",
    "GAMMA2": "G2",
    "GAMMA3": "G3",
}


def parse_generator(name: str) -> int:
    """Map a generator name to its basis index, case-insensitively.

    Accepts the long form of the Gamma components ("Gamma2" == "G2").
    Raises KeyError for anything unrecognized.
    """
    key = name.strip().upper()
    key = _ALIASES.get(key, key)
    if key not in INDEX:
        raise KeyError(f"unknown generator name: {name!r}")
    return INDEX[key]


def parse_generator_list(text: str) -> list[int]:
    """Parse a comma-separated list of generator names into indices."""
    items = [s for s in (p.strip() for p in text.split(",")) if s]
    if not items:
        raise KeyError("empty generator list")
    return [parse_generator(s) for s in items]
