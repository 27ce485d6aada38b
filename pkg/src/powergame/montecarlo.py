"""Chip-level signal simulation: the empirical check on the SINR formulas.

Frames follow the received-signal model exactly: BPSK symbols, synchronous
chips, real baseband, white Gaussian noise per chip.  Frames are processed
in fixed-size chunks with child seeds spawned per chunk, so results are
identical no matter how many workers would process the chunks, as long as
partial sums are reduced in chunk order (they are).
"""
from dataclasses import dataclass

import numpy as np

from .receivers import receiver_filter

CHUNK_FRAMES = 4096
CHUNK_PACKETS = 64


@dataclass
class SinrEstimate:
    gamma: float
    stderr: float
    n_frames: int


@dataclass
class PacketSuccessEstimate:
    rate: float
    stderr: float
    n_packets: int


def _transmit_amplitudes(powers, gains_row, exclude):
    """Per-transmitter received amplitude sqrt(p_j) * h_j; the receiving
    node's own entry is zeroed (it cannot transmit while listening)."""
    powers = np.asarray(powers, dtype=np.float64).copy()
    if exclude is not None and exclude >= 0:
        powers[exclude] = 0.0
    return np.sqrt(powers) * np.asarray(gains_row, dtype=np.float64)


def empirical_sinr(kind, k, powers, gains_row, codes, sigma2, n_frames, seed,
                   exclude=None):
    """Monte Carlo SINR estimate from decomposed filter-output terms.

    The desired term's power is known exactly (BPSK symbols have unit
    magnitude); the interference-plus-noise term is zero-mean by
    construction, so its variance is estimated as a plain mean of squares.
    The standard error follows from the delta method on that variance.
    """
    if n_frames < 1000:
        raise ValueError("need at least 1000 frames for a stable estimate")
    c = receiver_filter(kind, k, codes, powers, gains_row, sigma2,
                        exclude=exclude).coefficients
    cts = codes.codes @ c
    amps = _transmit_amplitudes(powers, gains_row, exclude)
    desired_amp = amps[k] * cts[k]
    signal_weights = amps * cts
    signal_weights[k] = 0.0

    n_chunks = -(-n_frames // CHUNK_FRAMES)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sum_sq = 0.0
    sum_quad = 0.0
    done = 0
    for child in children:
        rng = np.random.default_rng(child)
        m = min(CHUNK_FRAMES, n_frames - done)
        b = rng.integers(0, 2, size=(codes.n_users, m)) * 2 - 1
        w = rng.normal(0.0, np.sqrt(sigma2),
                       size=(codes.processing_gain, m))
        x = signal_weights @ b + c @ w
        sum_sq += float(x @ x)
        sum_quad += float((x ** 2) @ (x ** 2))
        done += m

    var = sum_sq / n_frames
    m4 = sum_quad / n_frames
    gamma = desired_amp ** 2 / var
    var_of_var = max(m4 - var ** 2, 0.0) / n_frames
    stderr = gamma * np.sqrt(var_of_var) / var
    return SinrEstimate(gamma=float(gamma), stderr=float(stderr),
                        n_frames=n_frames)


def empirical_packet_success(kind, k, powers, gains_row, codes, sigma2,
                             n_packets, packet_bits, seed, exclude=None):
    """Fraction of packets whose bits are all detected correctly.

    Hard-decision detection, sign of the filter output per bit.  A packet
    succeeds only if all ``packet_bits`` bits are correct.
    """
    if n_packets < 1000:
        raise ValueError("need at least 1000 packets for a stable estimate")
    c = receiver_filter(kind, k, codes, powers, gains_row, sigma2,
                        exclude=exclude).coefficients
    cts = codes.codes @ c
    amps = _transmit_amplitudes(powers, gains_row, exclude)
    weights = amps * cts

    n_chunks = -(-n_packets // CHUNK_PACKETS)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    successes = 0
    done = 0
    for child in children:
        rng = np.random.default_rng(child)
        m = min(CHUNK_PACKETS, n_packets - done)
        bits = m * packet_bits
        b = rng.integers(0, 2, size=(codes.n_users, bits)) * 2 - 1
        w = rng.normal(0.0, np.sqrt(sigma2),
                       size=(codes.processing_gain, bits))
        y = weights @ b + c @ w
        correct = (np.sign(y) == b[k]).reshape(m, packet_bits)
        successes += int(correct.all(axis=1).sum())
        done += m

    rate = successes / n_packets
    stderr = np.sqrt(rate * (1.0 - rate) / n_packets)
    return PacketSuccessEstimate(rate=float(rate), stderr=float(stderr),
                                 n_packets=n_packets)


def empirical_sinr_for_user(kind, k, powers, scenario, codes, n_frames,
                            seed):
    """Scenario-level wrapper: pulls the gain row, noise power and the
    receiving-node exclusion for user k from the scenario."""
    return empirical_sinr(kind, k, powers, scenario.receive_gains(k), codes,
                          scenario.noise_power, n_frames, seed,
                          exclude=int(scenario.exclusions()[k]))


def empirical_packet_success_for_user(kind, k, powers, scenario, codes,
                                      config, n_packets, seed):
    return empirical_packet_success(kind, k, powers,
                                    scenario.receive_gains(k), codes,
                                    scenario.noise_power, n_packets,
                                    config.M, seed,
                                    exclude=int(scenario.exclusions()[k]))
