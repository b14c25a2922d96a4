# Copyright 2022-2024 The rydgate authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Rydgate logger

Log records go to stderr by default, so that CSV written to stdout
(``--out -``) is never interleaved with diagnostics.
"""

import logging
import os
import sys
import time

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

LOG_FORMAT = " | ".join(
    [
        "%(asctime)s.%(msecs)03dZ",
        "%(levelname)s",
        "%(name)s:%(funcName)s:%(lineno)d",
        "%(message)s",
    ]
)

LOG_DATEFMT = "%Y-%m-%dT%H:%M:%S"


def _utc_formatter() -> logging.Formatter:
    log_formatter = logging.Formatter(LOG_FORMAT, LOG_DATEFMT)
    log_formatter.converter = time.gmtime
    return log_formatter


def get_stderr_handler() -> logging.StreamHandler:
    handler = logging.StreamHandler(sys.stderr)
    handler.formatter = _utc_formatter()
    return handler


def get_stdout_handler() -> logging.StreamHandler:
    handler = logging.StreamHandler(sys.stdout)
    handler.formatter = _utc_formatter()
    return handler


def get_logger(
    name: str = "rydgate",
    log_level: str = LOG_LEVEL,
    handler: logging.StreamHandler = None,
) -> logging.Logger:
    if handler is None:
        handler = get_stderr_handler()
    logger = logging.getLogger(name)
    if not any(isinstance(h, logging.StreamHandler) for h in logger.handlers):
        logger.addHandler(handler)
    logger.setLevel(log_level)
    logger.propagate = False
    return logger


def set_log_level(log_level: str) -> None:
    """
    Reset the level of every rydgate logger, e.g. from the ``--log-level``
    option of the command line or the ``LOG_LEVEL`` setting.

    :param log_level: a logging level name, like "DEBUG"
    """
    log_level = log_level.upper()
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith("rydgate") and isinstance(logger, logging.Logger):
            logger.setLevel(log_level)
