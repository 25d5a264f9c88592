"""Logging for pxe: rich console on stderr, plain-text run log in <out>/logs"""

import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

RUN_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"


class PxeLogger:
    """Owns the 'pxe' logger and its two handlers"""

    def __init__(self, name: str = "pxe", log_dir: Optional[Path] = None):
        self.name = name
        self.log_file: Optional[Path] = None
        self.logger = logging.getLogger(name)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False
        self.logger.handlers.clear()

        self.console_handler = RichHandler(
            console=Console(stderr=True),
            show_time=False,
            show_path=False,
        )
        self.console_handler.setLevel(logging.INFO)
        self.console_handler.setFormatter(logging.Formatter("%(message)s"))
        self.logger.addHandler(self.console_handler)

        env_dir = os.environ.get("PXE_LOG_DIR")
        if log_dir is None and env_dir:
            log_dir = Path(env_dir)
        if log_dir is not None:
            self.attach_file(log_dir)

    def attach_file(self, log_dir: Path) -> Optional[Path]:
        """
        Route DEBUG and above to a fresh run log under log_dir

        A previously attached run log is closed first, so consecutive runs in
        one process (tests, notebooks) never write into each other's files.

        Returns:
            Path of the log file, or None when the directory is not writable
        """
        self.detach_file()
        log_dir = Path(log_dir)
        try:
            log_dir.mkdir(parents=True, exist_ok=True)
            log_file = log_dir / f"{self.name}_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
            handler = logging.FileHandler(log_file)
        except OSError:
            self.logger.warning(f"Cannot write run log under {log_dir}; console output only")
            return None

        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(RUN_LOG_FORMAT))
        self.logger.addHandler(handler)
        self.log_file = log_file
        return log_file

    def detach_file(self) -> None:
        for handler in list(self.logger.handlers):
            if isinstance(handler, logging.FileHandler):
                self.logger.removeHandler(handler)
                handler.close()
        self.log_file = None

    def set_console_level(self, level: int) -> None:
        self.console_handler.setLevel(level)


_logger_instance: Optional[PxeLogger] = None


def get_pxe_logger() -> PxeLogger:
    """Get or create the process-wide PxeLogger"""
    global _logger_instance

    if _logger_instance is None:
        _logger_instance = PxeLogger()

    return _logger_instance


logger = get_pxe_logger().logger


def log_system_info() -> None:
    """Log library versions and resources at the top of each run"""
    from .system import get_runtime_info

    runtime = get_runtime_info()
    logger.info(
        f"pxe on {runtime.platform}: Python {runtime.python}, numpy {runtime.numpy}, "
        f"scipy {runtime.scipy}, {runtime.cpu_count} CPUs, {runtime.memory_gb:.1f} GB"
    )


def setup_logging(debug_mode: bool = False, log_dir: Optional[Path] = None) -> None:
    """Console verbosity for this run, plus an optional run log"""
    pxe_logger = get_pxe_logger()
    if log_dir is not None:
        pxe_logger.attach_file(log_dir)
    pxe_logger.set_console_level(logging.DEBUG if debug_mode else logging.INFO)
    if debug_mode:
        logger.debug("Debug mode enabled")
