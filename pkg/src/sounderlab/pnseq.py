"""Programmable LFSR PN sequence generation.

The generator is a Fibonacci (external XOR) shift register of ``N`` stages,
``5 <= N <= 12``.  In output-chip terms it obeys

    a[n + N] = XOR_{t in taps} a[n + (t mod N)]

so the output stage ``N`` always takes part in the feedback and the register
is loaded with the first ``N`` output chips.  Programming words follow the IC:
``S<2:0>`` selects ``N = 5 + value`` and ``SW<12:1>`` (MSB first) selects the
feedback stages.
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

MIN_STAGES = 5
MAX_STAGES = 12

# validated maximal-length tap sets; see tests/test_pnseq.py
DEFAULT_TAPS = {
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
}


def _check_taps(taps, n_stages):
    taps = tuple(sorted({int(t) for t in taps}, reverse=True))
    if not taps:
        raise ValueError("tap set is empty")
    if taps[0] > n_stages or taps[-1] < 1:
        raise ValueError(f"taps {taps} must lie in 1..{n_stages}")
    return taps


def _tap_mask(taps, n_stages):
    mask = 0
    for t in taps:
        mask |= 1 << (t % n_stages)
    return mask


def _seed_int(seed, n_stages):
    """Register contents as an int; bit j is output chip j."""
    if seed is None:
        return (1 << n_stages) - 1
    if isinstance(seed, str):
        if len(seed) != n_stages or set(seed) - {"0", "1"}:
            raise ValueError(f"seed {seed!r} must be a {n_stages}-bit binary string")
        bits = [int(c) for c in seed]
    elif isinstance(seed, (int, np.integer)):
        if not 0 <= seed < (1 << n_stages):
            raise ValueError(f"seed {seed} does not fit in {n_stages} stages")
        return int(seed)
    else:
        bits = [int(b) for b in seed]
        if len(bits) != n_stages or set(bits) - {0, 1}:
            raise ValueError(f"seed must hold {n_stages} binary values")
    return sum(b << j for j, b in enumerate(bits))


@dataclass(frozen=True)
class PnConfig:
    """LFSR programming: stage count, feedback taps, seed and chip rate.

    ``seed`` may be ``None`` (all ones), a bit string or bit sequence giving
    the first ``n_stages`` output chips, or an int whose bit ``j`` is chip ``j``.
    It is stored normalised to the int form.
    """

    n_stages: int
    taps: tuple = None
    seed: object = None
    chip_rate_hz: float = 1e9

    def __post_init__(self):
        n = int(self.n_stages)
        if not MIN_STAGES <= n <= MAX_STAGES:
            raise ValueError(f"n_stages must be in {MIN_STAGES}..{MAX_STAGES}, got {n}")
        taps = DEFAULT_TAPS[n] if self.taps is None else _check_taps(self.taps, n)
        if max(taps) != n:
            raise ValueError(f"output stage {n} must be among the taps {taps}")
        seed = _seed_int(self.seed, n)
        if seed == 0:
            raise ValueError("all-zero seed locks the LFSR")
        if not self.chip_rate_hz > 0:
            raise ValueError("chip_rate_hz must be positive")
        object.__setattr__(self, "n_stages", n)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "seed", seed)

    @property
    def seed_value(self):
        return self.seed

    @property
    def max_length(self):
        return (1 << self.n_stages) - 1

    @classmethod
    def from_words(cls, s_word, sw_word, seed=None, chip_rate_hz=1e9):
        """Build a config from the ``S<2:0>`` and ``SW<12:1>`` switch words."""
        n = stages_from_length_word(s_word)
        return cls(n, taps_from_switch_word(sw_word, n), seed, chip_rate_hz)


@dataclass(frozen=True)
class ChipSequence:
    chips: np.ndarray
    config: PnConfig = field(repr=False)

    @property
    def length(self):
        return int(self.chips.size)

    def __len__(self):
        return self.length


def generate(config):
    """One full period of the LFSR output as a :class:`ChipSequence`.

    The period is measured by cycling the register, so a non-primitive tap
    set yields a sequence shorter than ``2**N - 1``.
    """
    chips = lfsr_sequence(config.taps, config.n_stages, config.seed_value)
    chips.flags.writeable = False
    return ChipSequence(chips, config)


def lfsr_sequence(taps, n_stages, seed=None):
    """One period of raw LFSR chips for any register length (uint8 array).

    Unlike :class:`PnConfig` this does not restrict ``n_stages`` to the IC's
    5..12 range, which makes it handy for small hand-checkable registers.
    """
    taps = _check_taps(taps, n_stages)
    seed = _seed_int(seed, n_stages)
    if seed == 0:
        raise ValueError("all-zero seed locks the LFSR")
    mask = _tap_mask(taps, n_stages)
    period = _kernels.lfsr_period(mask, n_stages, seed, 1 << n_stages)
    return _kernels.lfsr_run(mask, n_stages, seed, period)


def lfsr_period(taps, n_stages, seed=None):
    """Cycle length of the register from ``seed``."""
    taps = _check_taps(taps, n_stages)
    return int(_kernels.lfsr_period(_tap_mask(taps, n_stages), n_stages,
                                    _seed_int(seed, n_stages), 1 << n_stages))


def validate_maximal(taps, n_stages):
    """True iff the tap set produces a period of exactly ``2**n_stages - 1``.

    A single cycle through all nonzero states implies every nonzero seed
    lies on it, so one simulation from the all-ones state is enough.
    """
    taps = _check_taps(taps, n_stages)
    if max(taps) != n_stages:
        return False
    return lfsr_period(taps, n_stages) == (1 << n_stages) - 1


def taps_from_switch_word(word, n_stages):
    """Decode ``SW<12:1>`` (MSB first) into a tap set.

    Stage ``n_stages`` is always added: the published word ``000000101001``
    leaves bit 12 clear yet programs taps [12, 6, 4, 1].
    """
    if len(word) != 12 or set(word) - {"0", "1"}:
        raise ValueError(f"switch word {word!r} must be 12 binary digits")
    taps = {12 - i for i, c in enumerate(word) if c == "1"}
    high = sorted(t for t in taps if t > n_stages)
    if high:
        raise ValueError(f"switch word sets stages {high} above n_stages={n_stages}")
    return tuple(sorted(taps | {n_stages}, reverse=True))


def stages_from_length_word(s):
    """``S<2:0>`` to register length: ``N = 5 + value``."""
    if len(s) != 3 or set(s) - {"0", "1"}:
        raise ValueError(f"length word {s!r} must be 3 binary digits")
    return MIN_STAGES + int(s, 2)


def to_bipolar(seq):
    """Map chips 1 -> +1, 0 -> -1 (int8)."""
    chips = seq.chips if isinstance(seq, ChipSequence) else np.asarray(seq)
    return (2 * chips.astype(np.int8) - 1).astype(np.int8)


def circular_autocorrelation(seq):
    b = np.ascontiguousarray(to_bipolar(seq), dtype=np.int64)
    return _kernels.circ_autocorr(b)


def run_length_stats(seq):
    """Circular run-length histogram: ``{1: Counter, 0: Counter}``.

    Each counter maps run length to number of runs of that symbol.
    """
    chips = np.asarray(seq.chips if isinstance(seq, ChipSequence) else seq, dtype=np.uint8)
    stats = {0: Counter(), 1: Counter()}
    if chips.size == 0:
        return stats
    change = np.flatnonzero(chips != np.roll(chips, 1))
    if change.size == 0:
        stats[int(chips[0])][chips.size] += 1
        return stats
    lengths = np.diff(np.append(change, change[0] + chips.size))
    for start, length in zip(change, lengths):
        stats[int(chips[start])][int(length)] += 1
    return stats
