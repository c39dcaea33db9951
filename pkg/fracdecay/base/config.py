import os
import re
import logging
import collections.abc

from datetime import datetime
from os.path import join, isdir
from hydra import compose, initialize, initialize_config_dir
from hydra.errors import HydraException
from omegaconf import OmegaConf, DictConfig, open_dict
from schema import SchemaError

from .constants import (
    CONFIG_KEYS,
    PRESETS,
    TOUCHING_RADIUS,
    WINDOW_BAND_EDGE,
)
from .exceptions import ConfigError
from .validation import config_schema

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ["out_dir", "preset_name"]

_FLAT_LINE = re.compile(r"^(?P<key>[A-Za-z_]\w*(?:\.[^\s=]+)*)\s*=\s*(?P<value>.*)$")

def update_dict(d, u, l):
    for k, v in u.items():
        if k in l:
            if isinstance(v, collections.abc.Mapping):
                d[k] = update_dict(d.get(k, {}), v, l=v.keys())
            else:
                d[k] = v
    return d

def parse_flat_config(path):
    """Read a flat ``section.key = value`` file.

    Blank lines and ``#`` comments are ignored. Values are typed the way YAML
    types them, so ``0.3436`` is a float, ``[x, y]`` a list and ``True`` a bool.

    Args:
        path (str): Path to the text file.

    Returns:
        (tuple): The parsed ``DictConfig`` and a dict mapping each dotted key to
        the line it was read from.
    """
    cfg = OmegaConf.create({})
    origins = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            match = _FLAT_LINE.match(line)
            if match is None:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value', got {raw.strip()!r}")
            key, value = match.group("key"), match.group("value").strip()
            section = key.split(".", 1)[0]
            if section not in CONFIG_KEYS + TOP_LEVEL_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown section {section!r}")
            if section in CONFIG_KEYS and "." not in key:
                raise ConfigError(f"{path}:{lineno}: {section!r} is a section, give section.key = value")
            if key in origins:
                raise ConfigError(f"{path}:{lineno}: {key} already set on line {origins[key]}")
            try:
                entry = OmegaConf.from_dotlist([f"{key}={value}"])
            except Exception as e:
                raise ConfigError(f"{path}:{lineno}: cannot parse value for {key}: {e}") from None
            cfg = OmegaConf.merge(cfg, entry)
            origins[key] = lineno
    return cfg, origins

def load_user_config(path):
    """Load a user configuration file, YAML or flat text.

    YAML files are composed through hydra the same way the defaults are, so
    they may carry ``# @package _global_`` headers.
    """
    if not os.path.isfile(path):
        raise ConfigError(f"configuration file not found: {path}")
    path = os.path.abspath(path)
    cfgdir, cfg_file = os.path.split(path)
    name, ext = os.path.splitext(cfg_file)
    if ext in (".yaml", ".yml"):
        try:
            with initialize_config_dir(version_base=None, config_dir=cfgdir):
                user_cfg = compose(config_name=name)
        except Exception as e:
            raise ConfigError(f"{path}: cannot read configuration: {e}") from None
        return user_cfg, {}
    return parse_flat_config(path)

def load_config(preset=None, cfg=None, overrides=None):
    """Resolve the full run configuration.

    The packaged defaults are composed with the requested preset, the user
    file is merged on top and the result is validated.

    Args:
        preset (str): One of ``PRESETS`` or None.
        cfg (str): Path to a user configuration file (YAML or flat text).
        overrides (list): Extra hydra overrides, e.g. ``["run.threads=4"]``.

    Returns:
        (DictConfig): Validated configuration.
    """
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}, expected one of {PRESETS}")

    hydra_overrides = list(overrides or [])
    if preset is not None:
        hydra_overrides.append(f"preset={preset}")

    try:
        with initialize(version_base=None, config_path="../configs"):
            def_cfg = compose(config_name="default", overrides=hydra_overrides)
    except HydraException as e:
        raise ConfigError(f"invalid overrides {hydra_overrides}: {e}") from None

    user_cfg, origins = (None, {})
    if cfg is not None:
        user_cfg, origins = load_user_config(cfg)

    merged = update_config(def_cfg, user_cfg)
    try:
        return check_config(merged)
    except ConfigError as ce:
        msg = str(ce)
        for key, lineno in origins.items():
            if key in msg:
                raise ConfigError(f"{cfg}:{lineno}: {msg}") from None
        raise

def update_config(orig, update):
    OmegaConf.set_struct(orig, True)
    with open_dict(orig):
        if update is not None:
            update_keys = list(set(update.keys()) & set(CONFIG_KEYS + TOP_LEVEL_KEYS))
            unknown = set(update.keys()) - set(update_keys)
            if unknown:
                raise ConfigError(f"unknown configuration sections: {sorted(unknown)}")
            orig = update_dict(orig, update, l=update_keys)
    return orig

def check_config(cfg):
    cfg_dict = OmegaConf.to_container(cfg, resolve=True)

    try:
        config_schema.validate(cfg_dict)
    except SchemaError as se:
        raise ConfigError(se) from None

    lo, hi = cfg.dynamics.window
    if not 0 < lo < hi < cfg.dynamics.cutoff:
        raise ConfigError("dynamics.window: need 0 < lower < upper < dynamics.cutoff")

    if cfg.dynamics.window_model == WINDOW_BAND_EDGE and not lo < cfg.emitter.detuning < hi:
        raise ConfigError("emitter.detuning: the band edge must lie inside dynamics.window")

    dlo, dhi = cfg.dynamics.detuning_interval
    if not (lo < dlo and dhi < hi):
        raise ConfigError("dynamics.detuning_interval: must lie inside dynamics.window")

    if cfg.df_scan.stop < cfg.df_scan.start:
        raise ConfigError("df_scan.stop: must not be below df_scan.start")

    if len(cfg.loss.alpha_labels) != len(cfg.loss.delta_over_omega):
        raise ConfigError("loss.alpha_labels: need one label per loss.delta_over_omega entry")

    if cfg.lattice.r_over_a > TOUCHING_RADIUS:
        logger.warning("lattice.r_over_a = %s exceeds the touching radius %.5f, "
                       "Fourier coefficients will be computed on a real-space grid",
                       cfg.lattice.r_over_a, TOUCHING_RADIUS)
    return cfg

def print_config(cfg, keys=None):
    if keys is None:
        keys = TOP_LEVEL_KEYS + CONFIG_KEYS
    for k in keys:
        if k not in cfg:
            continue
        if isinstance(cfg[k], DictConfig):
            text = OmegaConf.to_yaml(cfg[k]).replace("\n", "\n  ").rstrip()
            print(f"{k}:\n  {text}")
        else:
            print(f"{k}: {cfg[k]}")

def save_config(cfg, out_dir, keys=None):
    run_time = datetime.now().strftime("%Y-%m-%d_%H%M%S")
    if keys is None:
        keys = CONFIG_KEYS
    save_cfg = {k: cfg[k] for k in keys if k in cfg}
    create_folder(out_dir)
    path = join(out_dir, 'config_{0}.yaml'.format(run_time))
    OmegaConf.save(OmegaConf.create(save_cfg), path)
    return path

def create_folder(dir_path):
    check_folder = isdir(dir_path)
    if not check_folder:
        os.makedirs(dir_path)

def flatten_config(cfg, keys=None):
    """Flatten the resolved configuration into ``section.key`` pairs for file headers."""
    if keys is None:
        keys = TOP_LEVEL_KEYS + CONFIG_KEYS
    flat = {}
    container = OmegaConf.to_container(cfg, resolve=True)
    for k in keys:
        if k not in container:
            continue
        value = container[k]
        if isinstance(value, dict):
            for sub, v in value.items():
                flat[f"{k}.{sub}"] = v
        else:
            flat[k] = value
    return flat
