"""Sliding-correlator channel sounder simulation and analysis."""

from .analysis import (
    LinkBudget,
    MultipathEstimate,
    XpdRecord,
    detect_peaks,
    find_null_and_sidelobe,
    fit_ple,
    fspl,
    linearity_check,
    path_loss,
    power_spectrum,
    xpd,
    xpd_stats,
)
from .channel import ChannelModel, MultipathTap, add_awgn, apply_channel, fig6_scenario
from .pipeline import measure_pdp, simulate_received, sync_signal
from .pnseq import (
    ChipSequence,
    PnConfig,
    circular_autocorrelation,
    generate,
    run_length_stats,
    stages_from_length_word,
    taps_from_switch_word,
    to_bipolar,
    validate_maximal,
)
from .sounder import (
    Pdp,
    SounderConfig,
    SyncInfo,
    Waveform,
    detect_sync,
    discrete_correlation,
    slide_factor,
    sliding_correlate_direct,
    sliding_correlate_fast,
    sync_period,
    undilate,
    upsample,
)

__version__ = "0.1.0"
