"""Streaming Bayesian forecasting and alarming for device telemetry.

Continuous series run through discounted dynamic linear models (trend,
optional seasonal block, optional scheduled-peak processes); discrete
series through a Dirichlet-Markov chain.  Fitted models keep only
sufficient statistics, forecast at short and long horizons, and raise
anomaly / warning / critical alarms against configured levels.
"""

from .alarms import Alarm, AlarmKind, Thresholds, ViolationWindow
from .config import Config
from .dlm import DlmBlock, DlmModel, Forecast, make_seasonal_block, make_trend_block
from .engine import IngestEvent, OutputRecord, SeriesModel, fit, run_stream, step
from .errors import (ConfigError, DecodeError, InputError, InsufficientDataError,
                     NumericalError, RejectedEventError, TsmonError)
from .identify import Blueprint, TrainingWindow, build_blueprint, classify, \
    detect_outbursts, detect_seasonality
from .markov import MarkovModel, stationary_distribution
from .outburst import OutburstProcess, SlotSpec

__version__ = "0.1.0"

__all__ = [
    "Alarm", "AlarmKind", "Blueprint", "Config", "ConfigError", "DecodeError",
    "DlmBlock", "DlmModel", "Forecast", "IngestEvent", "InputError",
    "InsufficientDataError", "MarkovModel", "NumericalError", "OutburstProcess",
    "OutputRecord", "RejectedEventError", "SeriesModel", "SlotSpec",
    "Thresholds", "TrainingWindow", "TsmonError", "ViolationWindow",
    "build_blueprint", "classify", "detect_outbursts", "detect_seasonality",
    "fit", "make_seasonal_block", "make_trend_block", "run_stream",
    "stationary_distribution", "step",
]
