"""Reuse-sensitive control-flow recovery for EVM bytecode."""

from ._core import (
    AnalysisError,
    Cfg,
    InterpreterError,
    assemble,
    build_cfg,
    disassemble,
    generate,
    interpret,
    parse_hex,
    patterns,
)

__all__ = [
    "AnalysisError",
    "Cfg",
    "InterpreterError",
    "assemble",
    "build_cfg",
    "disassemble",
    "generate",
    "interpret",
    "parse_hex",
    "patterns",
]
