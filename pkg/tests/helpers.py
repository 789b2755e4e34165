"""Builders shared across the test modules."""

import numpy as np

from wbansim.channel import BodyLocation, ChannelSet, ChannelTrace, LinkId
from wbansim.network import NodeSpec, Role, WbanConfig

C = BodyLocation.CHEST
LH = BodyLocation.LEFT_HIP
RH = BodyLocation.RIGHT_HIP
HD = BodyLocation.HEAD
LW = BodyLocation.LEFT_WRIST


def make_wban(subject=1, sensor_locs=(HD,), sensor_power=0.0, relay_power=0.0,
              hub_power=0.0):
    """Star network with hub at the chest and relays on the hips."""
    return WbanConfig(
        subject,
        NodeSpec(Role.HUB, C, hub_power),
        (NodeSpec(Role.RELAY, LH, relay_power), NodeSpec(Role.RELAY, RH, relay_power)),
        tuple(NodeSpec(Role.SENSOR, loc, sensor_power) for loc in sensor_locs))


def constant_set(gains, n=4, period_ms=120.0):
    """Channel set of flat traces; gains maps link strings to dB values."""
    return ChannelSet(ChannelTrace(LinkId.parse(text), period_ms, np.full(n, gain))
                      for text, gain in gains.items())
