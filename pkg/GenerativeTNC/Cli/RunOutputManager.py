import logging
import os
import sys
from typing import Optional, TextIO

from GenerativeTNC.Training.TrainConfig import SweepRecord


class _ForwardingHandler(logging.Handler):
    def __init__(self, output: "RunOutputManager") -> None:
        super().__init__()
        self.output = output

    def emit(self, record: logging.LogRecord) -> None:
        try:
            self.output.print(self.format(record))
        except Exception:
            self.handleError(record)


class RunOutputManager:
    """
    A class to manage output formatting and logging for experiment runs.
    Everything printed goes to the console and, if configured, to a log file;
    log records from the library are forwarded into the same stream.
    """

    LOGGER_NAME = "GenerativeTNC"

    def __init__(self, log_file_path: Optional[str] = None, quiet: bool = False):
        """
        Initialize the output manager.

        Args:
            log_file_path: Optional path to a log file. If provided, all output
                          will be written to this file in addition to the console.
            quiet: Suppress console output (the log file still receives it).
        """
        self.quiet = quiet
        self.log_file: Optional[TextIO] = None
        self._handler: Optional[_ForwardingHandler] = None
        if log_file_path:
            directory = os.path.dirname(log_file_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            self.log_file = open(log_file_path, "w", encoding="utf-8")

    def __del__(self) -> None:
        """Clean up resources on deletion."""
        self.close()

    def install_logging(self, level: int = logging.INFO) -> None:
        """Forward records of the ``GenerativeTNC`` loggers into this output."""
        if self._handler is not None:
            return
        self._handler = _ForwardingHandler(self)
        self._handler.setFormatter(
            logging.Formatter("[%(levelname)s] %(name)s: %(message)s")
        )
        logger = logging.getLogger(self.LOGGER_NAME)
        logger.addHandler(self._handler)
        logger.setLevel(level)

    def print(self, message: str) -> None:
        """
        Print a message to console and log file if configured.

        Args:
            message: The message to print
        """
        if not self.quiet:
            print(message)
        if self.log_file:
            self.log_file.write(message + "\n")
            self.log_file.flush()

    def print_error(self, module: str, message: str) -> None:
        """One ``error [module]: message`` line on stderr and in the log file."""
        line = f"error [{module}]: {message}"
        print(line, file=sys.stderr)
        if self.log_file:
            self.log_file.write(line + "\n")
            self.log_file.flush()

    def print_separator(self) -> None:
        """Print a separator line."""
        self.print("\n" + "=" * 40 + "\n")

    def print_header(self, header: str) -> None:
        """
        Print a formatted header.

        Args:
            header: The header text
        """
        self.print_separator()
        self.print(header)
        self.print_separator()

    def print_subheader(self, subheader: str) -> None:
        """
        Print a formatted subheader.

        Args:
            subheader: The subheader text
        """
        self.print("\n" + "-" * 30)
        self.print(subheader)
        self.print("-" * 30 + "\n")

    def print_dataset(self, name: str, size: int, num_pixels: int, counts: str) -> None:
        self.print(f"{name}: {size} samples, {num_pixels} pixels, per class [{counts}]")

    def print_sweep(self, owner: str, record: SweepRecord) -> None:
        """
        Print one line per training sweep.

        Args:
            owner: What is being trained, e.g. "class 3"
            record: The sweep record
        """
        status = "" if record.accepted else " (rolled back)"
        self.print(
            f"  {owner} sweep {record.sweep} {record.direction}: "
            f"cost {record.cost:.6f}, alpha {record.alpha:.3g}{status}"
        )

    def print_accuracy(self, name: str, accuracy: float, num_samples: int) -> None:
        self.print(f"{name} accuracy: {accuracy:.4f} on {num_samples} samples")

    def print_table_written(self, path: str, rows: int) -> None:
        self.print(f"  wrote {path} ({rows} rows)")

    def close(self) -> None:
        """Detach the log handler and close the log file if open."""
        handler = getattr(self, "_handler", None)
        if handler is not None:
            logging.getLogger(self.LOGGER_NAME).removeHandler(handler)
            self._handler = None
        log_file = getattr(self, "log_file", None)
        if log_file:
            log_file.close()
            self.log_file = None
