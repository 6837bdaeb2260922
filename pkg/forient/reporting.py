# native imports
import base64
import json
import logging
import os
import time
import traceback
import typing
import warnings
from datetime import datetime, timedelta
from fractions import Fraction
from io import BytesIO

# forient imports

# third party imports
import matplotlib
import matplotlib.image
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

# set once the default logger has handlers attached
__is_initiated__ = False

# level 21 sits just above INFO (20); registered at import so that
# logger.progress() exists before any handler is configured
PROGRESS_LEVELV_NUM = 21
logging.PROGRESS = PROGRESS_LEVELV_NUM
logging.addLevelName(PROGRESS_LEVELV_NUM, "PROGRESS")


def progress(self, message, *args, **kws):
    if self.isEnabledFor(PROGRESS_LEVELV_NUM):
        self._log(PROGRESS_LEVELV_NUM, message, args, **kws)


logging.Logger.progress = progress


class DefaultFormatter(logging.Formatter):
    template = "%(levelname)s: %(message)s"

    colors = {
        logging.PROGRESS: "\x1b[32;20m",
        logging.WARNING: "\x1b[33;20m",
        logging.ERROR: "\x1b[31;20m",
        logging.CRITICAL: "\x1b[31;1m",
    }
    reset = "\x1b[0m"

    def __init__(self, use_ansi: bool = True):
        """Formatter prefixing the time elapsed since its creation.

        Parameters
        ----------

        use_ansi : bool, default True
            Color progress, warning and error records with ANSI escape codes.
        """
        super().__init__()
        self.start_time = time.time()
        self.plain = logging.Formatter(self.template)
        self.formatter = {}
        for level, color in self.colors.items():
            if use_ansi:
                self.formatter[level] = logging.Formatter(color + self.template + self.reset)
            else:
                self.formatter[level] = self.plain

    def format(self, record: logging.LogRecord) -> str:
        elapsed = timedelta(seconds=record.created - self.start_time)
        formatter = self.formatter.get(record.levelno, self.plain)
        return f"{elapsed} {formatter.format(record)}"


def init_logging(
    log_folder: str = None, log_level: int = logging.INFO, overwrite: bool = True
):
    """Attach a console handler and, with a folder, a ``log.txt`` file handler to the root logger.

    Parameters
    ----------

    log_folder : str, default None
        Folder receiving ``log.txt``. No file is written if None.

    log_level : int, default logging.INFO
        Level of the root logger and both handlers.

    overwrite : bool, default True
        Remove an existing ``log.txt`` first.
    """
    global __is_initiated__

    logger = logging.getLogger()
    logger.handlers = []
    logger.setLevel(log_level)

    console = logging.StreamHandler()
    console.setLevel(log_level)
    console.setFormatter(DefaultFormatter(use_ansi=True))
    logger.addHandler(console)

    if log_folder is not None:
        os.makedirs(log_folder, exist_ok=True)
        log_name = os.path.join(log_folder, "log.txt")
        if os.path.exists(log_name) and overwrite:
            os.remove(log_name)
        file_handler = logging.FileHandler(log_name, encoding="utf-8")
        file_handler.setLevel(log_level)
        file_handler.setFormatter(DefaultFormatter(use_ansi=False))
        logger.addHandler(file_handler)

    __is_initiated__ = True


def to_jsonable(value: typing.Any) -> typing.Any:
    """JSON representation with rationals as ``[numerator, denominator]`` pairs."""
    if isinstance(value, Fraction):
        return [value.numerator, value.denominator]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _figure_bytes(figure: typing.Any, savefig_kwargs: dict) -> typing.Optional[bytes]:
    buffer = BytesIO()
    if isinstance(figure, Figure):
        figure.savefig(buffer, **savefig_kwargs)
    elif isinstance(figure, np.ndarray):
        matplotlib.image.imsave(buffer, figure)
    else:
        warnings.warn(f"figures of type {type(figure)} are not supported")
        return None
    return buffer.getvalue()


class Backend:
    """Receiver of strings, metrics, events, tables and figures.

    Every method is a no-op; subclasses override the ones they handle.
    Backends with ``REQUIRES_CONTEXT`` are entered and exited by the
    `Pipeline` around a single command.
    """

    REQUIRES_CONTEXT = False

    def log_figure(self, name: str, figure: typing.Any, *args, **kwargs):
        pass

    def log_metric(self, name: str, value: typing.Any, *args, **kwargs):
        pass

    def log_string(self, value: str, *args, **kwargs):
        pass

    def log_data(self, name: str, value: typing.Any, *args, **kwargs):
        pass

    def log_event(self, name: str, value: typing.Any, *args, **kwargs):
        pass


class FigureBackend(Backend):
    FIGURE_PATH = "figures"

    def __init__(self, path: str = None, default_savefig_kwargs: dict = None) -> None:
        """Backend writing figures to ``<path>/figures``.

        Parameters
        ----------

        path : str
            Output folder, required.

        default_savefig_kwargs : dict, default {"dpi": 150}
            Passed to `matplotlib.figure.Figure.savefig`.
        """
        if path is None:
            raise ValueError("FigureBackend requires an output folder")
        self.path = path
        self.figures_path = os.path.join(self.path, self.FIGURE_PATH)
        os.makedirs(self.figures_path, exist_ok=True)
        self.default_savefig_kwargs = default_savefig_kwargs or {"dpi": 150}

    def log_figure(self, name: str, figure: typing.Any, extension: str = "png"):
        content = _figure_bytes(figure, self.default_savefig_kwargs)
        if content is None:
            return
        with open(os.path.join(self.figures_path, f"{name}.{extension}"), "wb") as f:
            f.write(content)


class TableBackend(Backend):
    def __init__(self, path: str = None) -> None:
        """Backend writing `pandas.DataFrame` data as ``<path>/<name>.tsv``."""
        if path is None:
            raise ValueError("TableBackend requires an output folder")
        self.path = path
        os.makedirs(self.path, exist_ok=True)

    def log_data(self, name: str, value: typing.Any):
        if not isinstance(value, pd.DataFrame):
            return
        value.to_csv(os.path.join(self.path, f"{name}.tsv"), sep="\t", index=False)


class JSONLBackend(Backend):
    EVENTS_PATH = "events.jsonl"
    REQUIRES_CONTEXT = True

    def __init__(
        self,
        path: str = None,
        enable_figure: bool = True,
        default_savefig_kwargs: dict = None,
    ) -> None:
        """Backend appending one JSON record per call to ``<path>/events.jsonl``.

        Records are only written inside the context, which starts with an
        empty file and a ``start`` event and ends with a ``stop`` event
        carrying the traceback of a failure.

        Parameters
        ----------

        path : str
            Output folder, required.

        enable_figure : bool, default True
            Embed figures as base64 encoded png.

        default_savefig_kwargs : dict, default {"dpi": 150}
            Passed to `matplotlib.figure.Figure.savefig`.
        """
        if path is None:
            raise ValueError("JSONLBackend requires an output folder")
        self.path = path
        self.events_path = os.path.join(self.path, self.EVENTS_PATH)
        self.enable_figure = enable_figure
        self.default_savefig_kwargs = default_savefig_kwargs or {"dpi": 150}
        self.entered_context = False
        self.start_time = 0

    def absolute_time(self) -> str:
        return datetime.now().isoformat()

    def relative_time(self) -> float:
        return datetime.now().timestamp() - self.start_time

    def __enter__(self):
        os.makedirs(self.path, exist_ok=True)
        self.entered_context = True
        self.start_time = datetime.now().timestamp()
        with open(self.events_path, "w"):
            pass
        self.log_event("start", {})
        return self

    def __exit__(self, exc_type, exc_value, exc_traceback):
        if exc_type is not None:
            error = "".join(traceback.format_exception(exc_type, exc_value, exc_traceback))
            self.log_event("stop", {"error": error})
        else:
            self.log_event("stop", {})
        self.entered_context = False
        self.start_time = 0

    def _write(self, kind: str, name: str, value: typing.Any, verbosity: typing.Any = 0):
        if not self.entered_context:
            return
        message = {
            "absolute_time": self.absolute_time(),
            "relative_time": self.relative_time(),
            "type": kind,
            "name": name,
            "value": to_jsonable(value),
            "verbosity": verbosity,
        }
        with open(self.events_path, "a") as f:
            f.write(json.dumps(message) + "\n")

    def log_event(self, name: str, value: typing.Any):
        self._write("event", name, value)

    def log_metric(self, name: str, value: typing.Any):
        self._write("metric", name, value)

    def log_string(self, value: str, verbosity: str = "info"):
        self._write("string", "string", value, verbosity)

    def log_figure(self, name: str, figure: typing.Any):
        if not self.enable_figure or not self.entered_context:
            return
        content = _figure_bytes(figure, self.default_savefig_kwargs)
        if content is None:
            return
        self._write("figure", name, base64.b64encode(content).decode("utf-8"))


class LogBackend(Backend):
    def __init__(self, path: str = None) -> None:
        """Backend forwarding strings to the root logger and metrics at debug level."""
        if not __is_initiated__ or path is not None:
            init_logging(path)
        self.logger = logging.getLogger()

    def log_string(self, value: str, verbosity: str = "info"):
        levels = {
            "progress": logging.PROGRESS,
            "info": logging.INFO,
            "debug": logging.DEBUG,
            "warning": logging.WARNING,
            "error": logging.ERROR,
            "critical": logging.CRITICAL,
        }
        if verbosity not in levels:
            raise ValueError(f"Unknown verbosity level {verbosity}")
        self.logger.log(levels[verbosity], value)

    def log_metric(self, name: str, value: typing.Any):
        self.logger.debug(f"{name} = {value}")

    def log_event(self, name: str, value: typing.Any):
        self.logger.debug(f"event {name}: {to_jsonable(value)}")


class Context:
    def __init__(self, parent: typing.Any) -> None:
        """Context manager handing entry and exit over to `parent`."""
        self.parent = parent

    def __enter__(self):
        return self.parent.__enter__()

    def __exit__(self, exc_type, exc_value, exc_traceback):
        return self.parent.__exit__(exc_type, exc_value, exc_traceback)


class Pipeline:
    def __init__(self, backends: typing.List[Backend] = None):
        """Fan out every logging call to several backends.

        Parameters
        ----------

        backends : typing.List[Backend], default None
            Instantiated backends; an empty pipeline swallows everything.
        """
        self.context = Context(self)
        self.backends = list(backends or [])

    def __enter__(self):
        for backend in self.backends:
            if backend.REQUIRES_CONTEXT:
                backend.__enter__()
        return self

    def __exit__(self, exc_type, exc_value, exc_traceback):
        for backend in self.backends:
            if backend.REQUIRES_CONTEXT:
                backend.__exit__(exc_type, exc_value, exc_traceback)

    def log_figure(self, name: str, figure: typing.Any, *args, **kwargs):
        for backend in self.backends:
            backend.log_figure(name, figure, *args, **kwargs)

    def log_metric(self, name: str, value: typing.Any, *args, **kwargs):
        for backend in self.backends:
            backend.log_metric(name, value, *args, **kwargs)

    def log_string(self, value: str, *args, verbosity="info", **kwargs):
        for backend in self.backends:
            backend.log_string(value, *args, verbosity=verbosity, **kwargs)

    def log_data(self, name: str, value: typing.Any, *args, **kwargs):
        for backend in self.backends:
            backend.log_data(name, value, *args, **kwargs)

    def log_event(self, name: str, value: typing.Any, *args, **kwargs):
        for backend in self.backends:
            backend.log_event(name, value, *args, **kwargs)


def output_pipeline(folder: str = None, figures: bool = True) -> Pipeline:
    """Log backend plus, with an output folder, events, tables and figures in it."""
    backends = [LogBackend(folder)]
    if folder is not None:
        backends.append(JSONLBackend(folder, enable_figure=False))
        backends.append(TableBackend(folder))
        if figures:
            backends.append(FigureBackend(folder))
    return Pipeline(backends)
