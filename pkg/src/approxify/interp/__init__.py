"""Cycle-counting interpreter for ApproxC."""

from .compiler import CompiledProgram, compile_program
from .inputs import InputCase, ProgramOutput
from .machine import (
    HALTED, RUNNING, TRIGGERED, Checkpoint, DivisionByZero, ExecState, Machine,
    OutOfBounds, RuntimeFault, StackOverflow, WatchdogExceeded, restore,
    run_continuous, snapshot,
)
from .platform import DEFAULT_CYCLE_COSTS, PRESETS, PlatformModel, get_platform, load_platform

__all__ = [
    "CompiledProgram", "compile_program", "InputCase", "ProgramOutput", "HALTED",
    "RUNNING", "TRIGGERED", "Checkpoint", "DivisionByZero", "ExecState", "Machine",
    "OutOfBounds", "RuntimeFault", "StackOverflow", "WatchdogExceeded", "restore",
    "run_continuous", "snapshot", "DEFAULT_CYCLE_COSTS", "PRESETS", "PlatformModel",
    "get_platform", "load_platform",
]
