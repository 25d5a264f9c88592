"""Runtime detection and information for pxe"""

import os
import platform
import sys
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np
import psutil
import scipy

from .logger import logger


@dataclass
class RuntimeInfo:
    """Runtime information container"""
    platform: str
    python: str
    numpy: str
    scipy: str
    cpu_count: int
    memory_gb: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class RuntimeDetector:
    """Detect and gather runtime information"""

    def get_cpu_count(self) -> int:
        """Logical core count, falling back to os.cpu_count"""
        try:
            count = psutil.cpu_count(logical=True)
        except Exception as e:
            logger.debug(f"psutil cpu_count failed: {e}")
            count = None
        return int(count or os.cpu_count() or 1)

    def get_memory_info(self) -> float:
        """Get total memory in GB"""
        try:
            return psutil.virtual_memory().total / (1024 ** 3)
        except Exception as e:
            logger.debug(f"psutil virtual_memory failed: {e}")
            return 0.0

    def get_runtime_info(self) -> RuntimeInfo:
        """Get complete runtime information"""
        return RuntimeInfo(
            platform=platform.platform(),
            python=sys.version.split()[0],
            numpy=np.__version__,
            scipy=scipy.__version__,
            cpu_count=self.get_cpu_count(),
            memory_gb=self.get_memory_info(),
        )


# Global detector instance
_detector: Optional[RuntimeDetector] = None


def get_runtime_detector() -> RuntimeDetector:
    """Get or create global runtime detector"""
    global _detector
    if _detector is None:
        _detector = RuntimeDetector()
    return _detector


def get_runtime_info() -> RuntimeInfo:
    """Shortcut for the current runtime information"""
    return get_runtime_detector().get_runtime_info()


def default_worker_count() -> int:
    """Default size of the per-frequency worker pool"""
    return get_runtime_detector().get_cpu_count()
