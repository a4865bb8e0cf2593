"""Slow reference implementations used to cross-check the package.

Everything here is written the dumbest way that is obviously correct; the
package code must agree with these, never the other way around.
"""

from __future__ import annotations

from riverplan.basin import RiverNetwork


def downstream_walk_fragmentation(net: RiverNetwork, dams) -> dict[str, bool]:
    """Per-segment fragmentation by walking each segment down to the mouth.

    A segment is fragmented when the walk starting at it (itself included)
    meets a non-passable dam or a natural barrier.
    """
    blocked: set[str] = set()
    if hasattr(dams, "items"):
        entries = dams.items()
    else:
        entries = [(d, False) if isinstance(d, str) else d for d in dams]
    for sid, passable in entries:
        if not passable:
            blocked.add(sid)
    blocked |= {s.id for s in net.segments.values() if s.natural_barrier}

    out: dict[str, bool] = {}
    for sid in net.segments:
        frag = False
        cur: str | None = sid
        while cur is not None:
            if cur in blocked:
                frag = True
                break
            cur = net.segments[cur].downstream_id
        out[sid] = frag
    return out
