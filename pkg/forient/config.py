"""Layered configuration with a printed modification tree.

The default configuration in ``constants/default.yaml`` holds every key.
User configurations, given as YAML files or dicts, only update values; each
leaf is tracked as ``(value, source)`` while updating so that the log shows
which layer set which value.

Later layers take precedence. The source of a value is the first layer that
changed it to its final value.
"""

# native imports
import copy
import json
import logging
import os
import typing

logger = logging.getLogger()

# third party imports
import pandas as pd
import yaml

DEFAULT_CONFIG_PATH = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "constants", "default.yaml"
)

GREEN = "\x1b[32;20m"
RESET = "\x1b[0m"


def get_tree_structure(last_item_arr: typing.List[bool]) -> str:
    tree_structure = ""
    for last in last_item_arr[:-1]:
        tree_structure += "    " if last else "│   "
    if len(last_item_arr) > 0:
        tree_structure += "└──" if last_item_arr[-1] else "├──"
    return tree_structure


def log_w_style(
    string: str, style: str = "auto", last_item_arr: typing.List[bool] = ()
) -> None:
    """Log one tree line, green if it carries a value from a non-default layer.

    Parameters
    ----------

    string : str
        Line content, a trailing ``(source)`` marks the layer of a value.

    style : str, default "auto"
        ``update`` for changed values, ``default`` for plain lines, ``auto``
        to decide from the source.

    last_item_arr : list of bool
        Whether each ancestor, and the line itself, is the last of its siblings.
    """
    if style == "auto":
        style = "default"
        if "(" in string:
            source = string[string.find("(") + 1 : string.find(")")]
            if source == "default":
                string = string[: string.find("(")].rstrip()
            else:
                style = "update"
    color, reset = (GREEN, RESET) if style == "update" else ("", "")
    logger.info(f"{get_tree_structure(list(last_item_arr))}{color}{string}{reset}")


def log_recursively(
    config: typing.Union[dict, list, tuple], last_item_arr: typing.List[bool] = ()
) -> None:
    last_item_arr = list(last_item_arr)
    if isinstance(config, tuple):
        log_w_style(f"{config[0]} ({config[1]})", last_item_arr=last_item_arr)
        return
    if isinstance(config, list):
        for i, value in enumerate(config):
            log_recursively(value, last_item_arr + [i == len(config) - 1])
        return
    if isinstance(config, dict):
        keys = list(config)
        for key in keys:
            value = config[key]
            branch = last_item_arr + [key == keys[-1]]
            if isinstance(value, tuple):
                log_w_style(f"{key}: {value[0]} ({value[1]})", last_item_arr=branch)
            elif isinstance(value, (dict, list)):
                log_w_style(f"{key}", last_item_arr=branch)
                log_recursively(value, branch)
            else:
                log_w_style(f"{key}: {value}", last_item_arr=branch)
        return
    log_w_style(f"{config}", last_item_arr=last_item_arr)


def translate_config(config: typing.Any, name: str) -> typing.Any:
    """Copy of `config` with every leaf replaced by ``(leaf, name)``."""
    if isinstance(config, dict):
        return {key: translate_config(value, name) for key, value in config.items()}
    if isinstance(config, list):
        return [translate_config(value, name) for value in config]
    return (config, name)


def translate_config_back(config: typing.Any) -> typing.Any:
    """Inverse of `translate_config`."""
    if isinstance(config, tuple):
        return config[0]
    if isinstance(config, dict):
        return {key: translate_config_back(value) for key, value in config.items()}
    if isinstance(config, list):
        return [translate_config_back(value) for value in config]
    return config


def update_recursive(
    default: typing.Any,
    updates: typing.List[typing.Any],
    key: str = "",
    print_output: bool = True,
    last_item_arr: typing.List[bool] = (),
) -> typing.Any:
    """Merge translated `updates` into translated `default`, logging the tree.

    Raises
    ------

    KeyError
        If an update introduces a key missing from the default configuration.
    """
    last_item_arr = list(last_item_arr)
    prefix = f"{key.split('.')[-1]}: " if key else ""

    if isinstance(default, tuple):
        new_value = default
        for update in updates:
            if isinstance(update, (dict, list)):
                raise KeyError(f"config key {key} takes a value, not a {type(update).__name__}")
            if update[0] != new_value[0]:
                new_value = update
        if print_output:
            log_w_style(f"{prefix}{default[0]} ({default[1]})", last_item_arr=last_item_arr)
            if new_value != default:
                log_w_style(
                    f"{prefix}{new_value[0]} ({new_value[1]})",
                    style="update",
                    last_item_arr=last_item_arr,
                )
        return new_value

    if isinstance(default, list):
        # lists are replaced as a whole
        new_value = default
        for update in updates:
            if translate_config_back(update) != translate_config_back(new_value):
                new_value = update
        if print_output:
            log_w_style(f"{key.split('.')[-1]}", last_item_arr=last_item_arr)
            log_recursively(new_value, last_item_arr)
        return new_value

    for update in updates:
        if not isinstance(update, dict):
            raise KeyError(f"config key {key or '<root>'} takes a mapping")
        unknown = set(update) - set(default)
        if unknown:
            raise KeyError(f"unknown config keys under {key or '<root>'}: {sorted(unknown)}")

    keys = list(default)
    merged = {}
    for child in keys:
        branch = last_item_arr + [child == keys[-1]]
        value = default[child]
        if print_output and isinstance(value, dict):
            log_w_style(f"{child}", last_item_arr=branch)
        merged[child] = update_recursive(
            value,
            [update[child] for update in updates if child in update],
            key=f"{key}.{child}" if key else child,
            print_output=print_output,
            last_item_arr=branch,
        )
    return merged


def _fill_table(rows: dict, column: str, key: str, value: typing.Any) -> None:
    if isinstance(value, dict):
        for child, child_value in value.items():
            _fill_table(rows, column, f"{key}.{child}" if key else child, child_value)
        return
    history = rows.setdefault(key, {})
    last = list(history.values())[-1] if history else None
    if not history or last != value:
        history[column] = value


def get_update_table(default_config: "Config", configs: typing.List["Config"]) -> pd.DataFrame:
    """Keys as rows and layers as columns, a cell is set where the layer changed the key.

    Nested keys are joined with dots, unchanged cells hold ``-``.
    """
    rows = {}
    columns = [default_config.experiment_name] + [c.experiment_name for c in configs]
    _fill_table(rows, default_config.experiment_name, "", default_config.config)
    for c in configs:
        _fill_table(rows, c.experiment_name, "", c.config)
    df = pd.DataFrame.from_dict(rows, orient="index", columns=columns)
    return df.astype(object).where(df.notna(), "-")


class Config:
    """Configuration layer read from YAML, JSON or a dict."""

    def __init__(self, experiment_name: str = "default", config: dict = None) -> None:
        self.experiment_name = experiment_name
        self.config = {} if config is None else config
        self.translated_config = {}

    @classmethod
    def default(cls) -> "Config":
        config = cls("default")
        config.from_yaml(DEFAULT_CONFIG_PATH)
        return config

    def from_yaml(self, path: str) -> None:
        with open(path, "r") as f:
            self.config = yaml.safe_load(f) or {}

    def from_json(self, path: str) -> None:
        with open(path, "r") as f:
            self.config = json.load(f)

    def to_yaml(self, path: str) -> None:
        with open(path, "w") as f:
            yaml.dump(self.config, f, sort_keys=False)

    def from_dict(self, config: dict) -> None:
        self.config = config

    def to_dict(self) -> dict:
        return self.config

    def __getitem__(self, key: str) -> typing.Any:
        return self.config[key]

    def __setitem__(self, key: str, value: typing.Any) -> None:
        self.config[key] = value

    def __contains__(self, key: str) -> bool:
        return key in self.config

    def get(self, path: str, default: typing.Any = None) -> typing.Any:
        """Value at a dotted path such as ``caps.oracle_max_nodes``."""
        node = self.config
        for key in path.split("."):
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
        return node

    def log(self) -> None:
        log_recursively(self.translated_config or self.config)

    def translate(self) -> dict:
        self.translated_config = translate_config(copy.deepcopy(self.config), self.experiment_name)
        return self.translated_config

    def update(self, experiments: typing.List["Config"], print_modifications: bool = True):
        """Apply the layers in `experiments` in order.

        Parameters
        ----------

        experiments : list of Config
            Update layers, later layers win.

        print_modifications : bool, default True
            Log the configuration tree with old and updated values.
        """
        self.translate()
        if experiments:
            self.translated_config = update_recursive(
                self.translated_config,
                [experiment.translate() for experiment in experiments],
                print_output=print_modifications,
            )
        self.config = translate_config_back(self.translated_config)
