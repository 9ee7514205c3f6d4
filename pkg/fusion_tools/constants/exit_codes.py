from enum import Enum


class ExitCodes(Enum):
    """Process exit codes of the command-line tool."""

    OK: int = 0
    INPUT: int = 1
    CONFIG: int = 2
    NUMERIC: int = 3
