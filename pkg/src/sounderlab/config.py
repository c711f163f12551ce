"""Scenario configuration: flat ``section.key = value`` text files.

Blank lines and ``#`` comments are ignored.  Every key is typed by SCHEMA;
unknown keys, malformed values and cross-field violations raise
ConfigError carrying the offending line and key.
"""

from dataclasses import dataclass
from importlib import resources

from .channel import ChannelModel, MultipathTap, fig6_scenario
from .pnseq import DEFAULT_TAPS, PnConfig, stages_from_length_word, taps_from_switch_word
from .sounder import SounderConfig


class ConfigError(Exception):
    def __init__(self, message, key=None, line=None, source=None):
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if key:
            where.append(key)
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.key = key
        self.line = line


EXPERIMENTS = ("sequence", "spectrum", "sync", "pdp", "xpd", "linearity")
MODES = ("tx", "rx", "analyze")
VALID_MODES = {
    "sequence": ("tx", "rx"),
    "spectrum": ("tx",),
    "sync": ("rx",),
    "pdp": ("rx",),
    "xpd": ("analyze",),
    "linearity": ("analyze",),
}


def _bits(width=None):
    def conv(text):
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"expected a binary word, got {text!r}")
        if width is not None and len(text) != width:
            raise ValueError(f"expected {width} bits, got {len(text)}")
        return text
    return conv


def _choice(*options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return conv


def _list(item):
    def conv(text):
        return [item(p.strip()) for p in text.split(",") if p.strip()]
    return conv


def _bool(text):
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# key -> (converter, default); None default means "unset"
SCHEMA = {
    "experiment": (_choice(*EXPERIMENTS), None),
    "mode": (_choice(*MODES), None),
    "seed": (int, 0),
    "pn.n_stages": (int, None),
    "pn.s_word": (_bits(3), None),
    "pn.taps": (_list(int), None),
    "pn.sw_word": (_bits(12), None),
    "pn.seed": (_bits(), None),
    "sounder.alpha_hz": (float, 1e9),
    "sounder.beta_hz": (float, 999.95e6),
    "sounder.oversample": (int, 10),
    "sounder.lpf_cutoff_hz": (float, None),
    "sounder.method": (_choice("fast", "direct"), "fast"),
    "sounder.periods": (int, 2),
    "channel.preset": (_choice("none", "fig6"), "none"),
    "channel.bulk_delay_ns": (float, 0.0),
    "channel.tap_delays_ns": (_list(float), [0.0]),
    "channel.tap_gains_db": (_list(float), None),
    "channel.tap_phases_rad": (_list(float), None),
    "channel.snr_db": (float, None),
    "channel.noise_seed": (int, None),
    "spectrum.resolution_hz": (float, None),
    "spectrum.periods": (int, 5),
    "sync.threshold_fraction": (float, 0.5),
    "analysis.threshold_db": (float, -15.0),
    "analysis.min_separation_ns": (float, None),
    "xpd.dataset": (str, "bundled"),
    "xpd.d0_m": (float, 1.0),
    "xpd.fc_hz": (float, 142e9),
    "linearity.attenuation_db": (_list(float), None),
    "linearity.power_dbm": (_list(float), None),
    "output.dilated": (_bool, False),
}


def parse_text(text, source=None):
    """Raw typed values, keyed as in SCHEMA, plus their line numbers."""
    values, lines = {}, {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=no, source=source)
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError("unknown key", key=key, line=no, source=source)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})",
                              key=key, line=no, source=source)
        try:
            values[key] = SCHEMA[key][0](val)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key, line=no, source=source) from None
        lines[key] = no
    return values, lines


@dataclass(frozen=True)
class Scenario:
    experiment: str
    mode: str
    values: dict
    pn: PnConfig = None
    sounder: SounderConfig = None
    channel: ChannelModel = None

    def get(self, key):
        return self.values[key]

    def echo(self):
        """Resolved settings in schema order, unset keys omitted."""
        return {k: self.values[k] for k in SCHEMA if self.values.get(k) is not None}


def _fail(exc, key, lines, source):
    return ConfigError(str(exc), key=key, line=lines.get(key), source=source)


def build(values, lines=None, experiment=None, seed=None, source=None):
    """Validate raw values and construct the module-level objects."""
    lines = lines or {}
    vals = {k: default for k, (_, default) in SCHEMA.items()}
    vals.update(values)

    if experiment is not None:
        if values.get("experiment") not in (None, experiment):
            raise ConfigError(f"config is for {values['experiment']!r}, not {experiment!r}",
                              key="experiment", line=lines.get("experiment"), source=source)
        vals["experiment"] = experiment
    exp = vals["experiment"]
    if exp is None:
        raise ConfigError("no experiment given", key="experiment", source=source)
    mode = vals["mode"] or VALID_MODES[exp][0]
    if mode not in VALID_MODES[exp]:
        raise ConfigError(f"experiment {exp!r} needs mode {' or '.join(VALID_MODES[exp])}",
                          key="mode", line=lines.get("mode"), source=source)
    vals["mode"] = mode
    if seed is not None:
        vals["seed"] = seed
    if vals["channel.noise_seed"] is None or seed is not None:
        vals["channel.noise_seed"] = vals["seed"]

    pn = sounder = channel = None
    if exp in ("sequence", "spectrum", "sync", "pdp"):
        pn = _build_pn(vals, lines, source)
    if exp in ("spectrum", "sync", "pdp"):
        sounder = _build_sounder(vals, lines, source, pn)
        if exp == "spectrum" and vals["spectrum.resolution_hz"] is None:
            vals["spectrum.resolution_hz"] = sounder.alpha_hz / 50
        if vals["spectrum.resolution_hz"] is not None and vals["spectrum.resolution_hz"] <= 0:
            raise ConfigError("must be positive", key="spectrum.resolution_hz",
                              line=lines.get("spectrum.resolution_hz"), source=source)
        for key in ("sounder.periods", "spectrum.periods"):
            if vals[key] < 1:
                raise ConfigError("must be >= 1", key=key, line=lines.get(key), source=source)
        if exp == "sync" and vals["sounder.periods"] < 2:
            raise ConfigError("sync detection needs at least 2 periods", key="sounder.periods",
                              line=lines.get("sounder.periods"), source=source)
        if not 0 < vals["sync.threshold_fraction"] < 1:
            raise ConfigError("must lie in (0, 1)", key="sync.threshold_fraction",
                              line=lines.get("sync.threshold_fraction"), source=source)
    if exp == "pdp":
        channel = _build_channel(vals, lines, source)
        if vals["analysis.threshold_db"] >= 0:
            raise ConfigError("must be negative", key="analysis.threshold_db",
                              line=lines.get("analysis.threshold_db"), source=source)
    if exp == "xpd" and vals["xpd.d0_m"] <= 0:
        raise ConfigError("must be positive", key="xpd.d0_m", line=lines.get("xpd.d0_m"),
                          source=source)
    if exp == "linearity":
        att, pw = vals["linearity.attenuation_db"], vals["linearity.power_dbm"]
        if att is None or pw is None:
            raise ConfigError("linearity needs attenuation_db and power_dbm lists",
                              key="linearity.attenuation_db", source=source)
        if len(att) != len(pw):
            raise ConfigError("attenuation_db and power_dbm differ in length",
                              key="linearity.power_dbm", line=lines.get("linearity.power_dbm"),
                              source=source)
        if len(att) < 3:
            raise ConfigError("at least 3 sweep points required", key="linearity.attenuation_db",
                              line=lines.get("linearity.attenuation_db"), source=source)
    return Scenario(exp, mode, vals, pn, sounder, channel)


def _build_pn(vals, lines, source):
    if vals["pn.n_stages"] is not None and vals["pn.s_word"] is not None:
        raise ConfigError("give pn.n_stages or pn.s_word, not both", key="pn.s_word",
                          line=lines.get("pn.s_word"), source=source)
    if vals["pn.taps"] is not None and vals["pn.sw_word"] is not None:
        raise ConfigError("give pn.taps or pn.sw_word, not both", key="pn.sw_word",
                          line=lines.get("pn.sw_word"), source=source)
    key = "pn.n_stages"
    try:
        if vals["pn.s_word"] is not None:
            key = "pn.s_word"
            n = stages_from_length_word(vals["pn.s_word"])
        else:
            n = vals["pn.n_stages"] if vals["pn.n_stages"] is not None else 12
        vals["pn.n_stages"] = n
        if vals["pn.sw_word"] is not None:
            key = "pn.sw_word"
            taps = taps_from_switch_word(vals["pn.sw_word"], n)
        elif vals["pn.taps"] is not None:
            key = "pn.taps"
            taps = vals["pn.taps"]
        else:
            taps = DEFAULT_TAPS.get(n)
        seed = vals["pn.seed"]
        if seed is not None and len(seed) != n:
            key = "pn.seed"
            raise ValueError(f"seed needs {n} bits, got {len(seed)}")
        key = "pn.n_stages"
        return PnConfig(n, taps, seed, chip_rate_hz=vals["sounder.alpha_hz"])
    except ValueError as exc:
        msg = str(exc)
        if key == "pn.n_stages":
            if "n_stages" in msg:
                key = "pn.s_word" if vals["pn.s_word"] is not None else "pn.n_stages"
            elif "seed" in msg:
                key = "pn.seed"
            elif "chip_rate" in msg:
                key = "sounder.alpha_hz"
            else:
                key = "pn.sw_word" if vals["pn.sw_word"] is not None else "pn.taps"
        raise _fail(exc, key, lines, source) from None


def _build_sounder(vals, lines, source, pn):
    try:
        return SounderConfig(vals["sounder.alpha_hz"], vals["sounder.beta_hz"], pn,
                             vals["sounder.oversample"], vals["sounder.lpf_cutoff_hz"])
    except ValueError as exc:
        msg = str(exc)
        key = "sounder.oversample" if "oversample" in msg else "sounder.beta_hz"
        raise _fail(exc, key, lines, source) from None


def _build_channel(vals, lines, source):
    try:
        if vals["channel.preset"] == "fig6":
            base = fig6_scenario()
            return ChannelModel(base.taps, base.bulk_delay_ns, vals["channel.snr_db"],
                                vals["channel.noise_seed"])
        delays = vals["channel.tap_delays_ns"]
        gains = vals["channel.tap_gains_db"] or [0.0] * len(delays)
        phases = vals["channel.tap_phases_rad"] or [0.0] * len(delays)
        if not len(delays) == len(gains) == len(phases):
            raise ValueError("tap_delays_ns, tap_gains_db and tap_phases_rad differ in length")
        taps = tuple(MultipathTap(d, g, p) for d, g, p in zip(delays, gains, phases))
        return ChannelModel(taps, vals["channel.bulk_delay_ns"], vals["channel.snr_db"],
                            vals["channel.noise_seed"])
    except ValueError as exc:
        raise _fail(exc, "channel.tap_delays_ns", lines, source) from None


def load(path, experiment=None, seed=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=path) from None
    values, lines = parse_text(text, source=path)
    return build(values, lines, experiment=experiment, seed=seed, source=path)


PRESETS = ("fig4", "fig5", "fig6_7", "fig9")


def preset_text(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("sounderlab.presets").joinpath(f"{name}.cfg").read_text("utf-8")


def load_preset(name, experiment=None, seed=None):
    values, lines = parse_text(preset_text(name), source=f"preset:{name}")
    return build(values, lines, experiment=experiment, seed=seed, source=f"preset:{name}")
