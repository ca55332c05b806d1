import contextlib
import logging
import re
import warnings

# The single application logger — import this in every module
logger = logging.getLogger("triple_lab")

FILE_FORMAT = "%(asctime)s [%(levelname)-7s] %(threadName)s: %(message)s"

# Marks handlers installed by setup_logging so a second call replaces them
_OWNED = "_triple_lab_handler"


class _RichMarkupStrippingFormatter(logging.Formatter):
    """Formatter that strips Rich markup tags (e.g. [bold], [/bold]) for plain-text output."""

    # Tags only: "[bold]", "[/red]", "[bold cyan]". Interval notation such as
    # "[0, inf)" or "[1e-3]" starts with a digit and is left alone.
    _MARKUP_RE = re.compile(r"\[/?[a-z][\w. ]*\]", re.IGNORECASE)

    def format(self, record):
        original_msg = record.msg
        if isinstance(record.msg, str):
            record.msg = self._MARKUP_RE.sub("", record.msg)
        result = super().format(record)
        record.msg = original_msg
        return result


def _console_level(verbose, quiet):
    if quiet:
        return logging.ERROR
    if verbose:
        return logging.DEBUG
    return logging.INFO


def setup_logging(verbose=False, quiet=False, log_file=None):
    """
    Configure logging for triple_lab. Call once from main() after arg parsing.

    The console handler writes to standard error; reports on standard output
    stay machine-readable. Calling again replaces the handlers from the
    previous call.

    Args:
        verbose: Show DEBUG messages (quadrature panels, branch decisions).
        quiet: Only show ERROR messages.
        log_file: Optional path to write a full DEBUG log (plain text, one
            line per record, tagged with the worker thread).
    """
    from rich.console import Console
    from rich.logging import RichHandler

    for handler in [h for h in logger.handlers if getattr(h, _OWNED, False)]:
        logger.removeHandler(handler)
        handler.close()

    level = _console_level(verbose, quiet)
    logger.setLevel(logging.DEBUG)

    console = RichHandler(
        level=level,
        console=Console(stderr=True),
        show_time=verbose,
        show_path=False,
        show_level=verbose,
        markup=True,
        rich_tracebacks=True,
        tracebacks_show_locals=verbose,
    )
    handlers = [console]

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(_RichMarkupStrippingFormatter(FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        handlers.append(file_handler)

    for handler in handlers:
        setattr(handler, _OWNED, True)
        logger.addHandler(handler)


def report_residual(label, value, limit):
    """Log a residual against its tolerance; returns True when it passes."""
    passed = value < limit
    if passed:
        logger.info("%s residual %.3e [green]ok[/green] (tolerance %.1e)", label, value, limit)
    else:
        logger.error("%s residual %.3e [red]above tolerance[/red] %.1e", label, value, limit)
    return passed


@contextlib.contextmanager
def warnings_to_log():
    """Re-emit Python warnings raised inside the block (numpy, scipy) as log warnings."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            yield
        finally:
            seen = set()
            for w in caught:
                key = (w.category, str(w.message))
                if key not in seen:
                    seen.add(key)
                    logger.warning("%s: %s", w.category.__name__, w.message)
