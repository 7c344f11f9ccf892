"""
Copyright Amazon.com, Inc. or its affiliates. All Rights Reserved.
SPDX-License-Identifier: MIT-0
"""
"""
Shared helpers: error types, exact rational formatting, bitset helpers, config loading
"""
import os
import json
import logging
import threading
from fractions import Fraction
from typing import Any, Dict, Iterable, Iterator, Optional
from dotenv import load_dotenv

logging.basicConfig(
    level=os.environ.get("LOG_LEVEL", "INFO"),
    format='%(asctime)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
)
logger = logging.getLogger(__name__)
load_dotenv()  # load env vars from .env

# guards caches shared between solver workers
cache_lock = threading.RLock()


class InputError(ValueError):
    """Malformed input or a violated user-facing precondition."""

    def __init__(self, msg: str, line: Optional[int] = None, report: Optional[Dict[str, Any]] = None):
        self.line = line
        self.report = report
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


class ResourceLimitError(RuntimeError):
    """A configured cap was exceeded."""


class ContractError(RuntimeError):
    """Internal consistency or inter-module precondition failure."""


def env_flag(name: str, default: str = "0") -> bool:
    return os.environ.get(name, default).strip().lower() in ("1", "true", "yes", "on")


def parse_fraction(text: str, line: Optional[int] = None) -> Fraction:
    """Parse `7/2`, `3` or `0.5` into an exact Fraction."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"invalid rational '{text}': {e}", line=line)
    return value


def format_fraction(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def mask_of(vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def load_config(path: str) -> Dict[str, Any]:
    """Load the json config file, an empty dict when no path is given."""
    if not path:
        return {}
    try:
        with open(path, 'r') as f:
            conf = json.load(f)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise InputError(f"config file {path} is not valid json: {e}", line=e.lineno)
    logger.info(f"loaded config from {path}")
    return conf
