"""Pluggable congestion controllers keyed by protocol name."""

from __future__ import annotations

from typing import Dict, Optional, Type

from ccbench.cc.base import CongestionController
from ccbench.cc.bbr import Bbr, bbr_target_cwnd
from ccbench.cc.copa import Copa
from ccbench.cc.cubic import Cubic
from ccbench.cc.ledbat import Ledbat
from ccbench.cc.pcc import Allegro, Vivace
from ccbench.cc.reno import Reno
from ccbench.errors import UnknownProtocol

PROTOCOLS: Dict[str, Type[CongestionController]] = {
    cls.protocol: cls for cls in (Reno, Cubic, Bbr, Copa, Ledbat, Allegro, Vivace)
}


def make_controller(
    name: str, params: Optional[dict] = None, seed: Optional[int] = None
) -> CongestionController:
    """Build a fresh controller in its initial state."""
    try:
        cls = PROTOCOLS[name]
    except KeyError:
        raise UnknownProtocol(name) from None
    return cls(params, seed)


__all__ = [
    "CongestionController",
    "PROTOCOLS",
    "make_controller",
    "bbr_target_cwnd",
    "Reno",
    "Cubic",
    "Bbr",
    "Copa",
    "Ledbat",
    "Allegro",
    "Vivace",
]
