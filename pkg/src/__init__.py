"""transducer-lab 的顶层包。"""

# 以模块方式运行时便于直接访问各子包。
from . import cli, transducer, utils  # noqa: F401

__all__ = ["cli", "transducer", "utils"]
