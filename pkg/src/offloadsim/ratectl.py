"""Receiver-side TCP rate control, simulated at flow level.

The receiver stamps every outgoing ACK with an advertisement window; since a
sender cannot have more than min(cwnd, rcv_wnd) bytes in flight, the window
is the actuator.  Every check interval the measured throughput is compared
against the target and the window nudged proportionally to the deficit,
damped by a smoothing factor so the rate does not oscillate:

    inc = adv_win * (target - throughput) / target * alpha

The window is clamped to [min_adv_win, rcv_buf_size].  The link model is
rate-based: in-flight bytes drain once per RTT (with optional jitter),
subject to link capacity, and loss shaves delivered throughput
multiplicatively.  Control engages only after a grace window so short flows
finish unthrottled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional

MIN_ADV_WIN = 512  # bytes
DEFAULT_CHECK_PERIOD = 0.2  # seconds
DEFAULT_ALPHA = 0.5
DEFAULT_RCV_BUF = 256 * 1024  # bytes
DEFAULT_GRACE = 5.0  # seconds


@dataclass
class ControllerState:
    target_bw: float  # bytes/sec
    adv_win: float = MIN_ADV_WIN
    min_adv_win: float = MIN_ADV_WIN
    rcv_buf_size: float = DEFAULT_RCV_BUF
    check_period: float = DEFAULT_CHECK_PERIOD
    alpha: float = DEFAULT_ALPHA
    bytes_accumulated: float = 0.0
    last_check_time: float = 0.0

    def __post_init__(self) -> None:
        if self.target_bw <= 0:
            raise ValueError("target bandwidth must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.check_period <= 0:
            raise ValueError("check_period must be positive")
        if not self.min_adv_win <= self.adv_win <= self.rcv_buf_size:
            raise ValueError("adv_win outside [min_adv_win, rcv_buf_size]")


def control_step(state: ControllerState, now: float, packet_len: float) -> ControllerState:
    """Account received bytes; on check-interval expiry, adjust the window."""
    if packet_len < 0:
        raise ValueError("packet length must be nonnegative")
    state = replace(state, bytes_accumulated=state.bytes_accumulated + packet_len)
    if now - state.last_check_time > state.check_period:
        interval = now - state.last_check_time
        throughput = state.bytes_accumulated / interval
        inc = state.adv_win * (state.target_bw - throughput) / state.target_bw * state.alpha
        win = state.adv_win + inc
        win = min(state.rcv_buf_size, max(state.min_adv_win, win))
        state = replace(state, adv_win=win, bytes_accumulated=0.0, last_check_time=now)
    return state


def ack_stamp(state: ControllerState) -> float:
    """Window value to write into the next outgoing ACK."""
    return state.adv_win


@dataclass(frozen=True)
class LinkModel:
    name: str
    rtt: float  # seconds
    rtt_jitter: float  # std dev, seconds
    loss_rate: float
    capacity: float  # bytes/sec

    def __post_init__(self) -> None:
        if self.rtt <= 0:
            raise ValueError("rtt must be positive")
        if not 0.0 <= self.loss_rate < 1.0:
            raise ValueError("loss_rate must lie in [0, 1)")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")


# Preset link conditions.  The wired preset is lossless and jitter-free; the
# 512-byte window floor bounds the lowest enforceable rate at min_adv_win/rtt,
# so the wired RTT is chosen high enough that a 100 Kbps target stays
# reachable.  The cellular preset is lossy with strong jitter.
LINK_PRESETS = {
    "ethernet": LinkModel("ethernet", rtt=0.060, rtt_jitter=0.0, loss_rate=0.0, capacity=12_500_000.0),
    "wifi": LinkModel("wifi", rtt=0.060, rtt_jitter=0.010, loss_rate=0.005, capacity=3_000_000.0),
    "cellular": LinkModel("cellular", rtt=0.150, rtt_jitter=0.030, loss_rate=0.01, capacity=1_000_000.0),
}


@dataclass(frozen=True)
class FlowSample:
    time: float
    throughput: float  # bytes/sec over the last check interval
    adv_win: float


def simulate_flow(
    target_bw: float,
    link: LinkModel,
    duration: float,
    grace: float = DEFAULT_GRACE,
    alpha: float = DEFAULT_ALPHA,
    rcv_buf_size: float = DEFAULT_RCV_BUF,
    cwnd: Optional[float] = None,
    seed: int = 0,
    check_period: float = DEFAULT_CHECK_PERIOD,
) -> list[FlowSample]:
    """Run one controlled flow and sample (time, throughput, window) per check.

    During the grace window ACKs are not rewritten, so the flow runs against
    the full receive buffer; afterwards the stamped window paces the sender.
    The sender's congestion window is treated as unbounded unless `cwnd` is
    given.
    """
    if not duration > grace >= 0:
        raise ValueError("need duration > grace >= 0")
    state = ControllerState(
        target_bw=target_bw,
        alpha=alpha,
        rcv_buf_size=rcv_buf_size,
        check_period=check_period,
        last_check_time=grace,
    )
    rng = random.Random(seed)
    tick = check_period / 10.0  # >= 10 delivery steps per check interval
    samples: list[FlowSample] = []
    acc = 0.0  # mirrors the controller's accumulator, for sampling
    steps = int(round(duration / tick))
    for step in range(1, steps + 1):
        now = step * tick
        window = rcv_buf_size if now <= grace else min(ack_stamp(state), rcv_buf_size)
        if cwnd is not None:
            window = min(window, cwnd)
        rtt = link.rtt
        if link.rtt_jitter > 0:
            rtt = max(1e-4, rng.gauss(link.rtt, link.rtt_jitter))
        offered = min(window / rtt, link.capacity)
        delivered = offered * (1.0 - link.loss_rate) * tick
        if now <= grace:
            continue
        acc += delivered
        before = state.last_check_time
        state = control_step(state, now, delivered)
        if state.last_check_time != before:  # a check fired
            samples.append(FlowSample(now, acc / (now - before), state.adv_win))
            acc = 0.0
    return samples


def steady_state(samples: list[FlowSample], since: float) -> list[FlowSample]:
    """Samples from `since` onward (the convergence-evaluation window)."""
    return [s for s in samples if s.time >= since]
