import sys
import time
import threading
from contextlib import contextmanager
from typing import Any, Callable, Optional, Sequence, TextIO, Union
from functools import wraps


class Colors:
    BLUE = "\033[94m"
    CYAN = "\033[96m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    RED = "\033[91m"
    ENDC = "\033[0m"
    BOLD = "\033[1m"
    DIM = "\033[2m"


# A success message may be fixed text or built from the step's result
DoneMessage = Union[str, Callable[[Any], str]]


def _elapsed(start: float) -> str:
    seconds = time.perf_counter() - start
    return f"{seconds * 1000:.0f} ms" if seconds < 1.0 else f"{seconds:.1f} s"


class Spinner:
    """
    Animated status line on stderr for long numerical steps.

    Replicate loops report through `tick`, which is safe to call from worker
    threads and renders "label (done/total)". Nothing is drawn when stderr is
    not a terminal or the CLI ran with --quiet.
    """

    # set by the CLI for --quiet
    silenced = False

    FRAMES = ["⠋", "⠙", "⠹", "⠸", "⠼", "⠴", "⠦", "⠧", "⠇", "⠏"]

    def __init__(self, message: str = "", total: Optional[int] = None, stream: Optional[TextIO] = None):
        self.label = message.rstrip(". ")
        self.message = message
        self.total = total
        self.done = 0
        self.stream = stream or sys.stderr
        self.enabled = not self.silenced and hasattr(self.stream, "isatty") and self.stream.isatty()
        self.running = False
        self.started = time.perf_counter()
        self._lock = threading.Lock()
        self.thread: Optional[threading.Thread] = None

    def _animate(self):
        idx = 0
        while self.running:
            frame = self.FRAMES[idx % len(self.FRAMES)]
            self.stream.write(f"\r{Colors.CYAN}{frame}{Colors.ENDC} {self.message}")
            self.stream.flush()
            time.sleep(0.08)
            idx += 1

    def start(self):
        self.started = time.perf_counter()
        if self.enabled and not self.running:
            self.running = True
            self.thread = threading.Thread(target=self._animate, daemon=True)
            self.thread.start()

    def tick(self, _replicate: Optional[int] = None):
        """Count one finished replicate."""
        with self._lock:
            self.done += 1
            total = f"/{self.total}" if self.total else ""
            self.message = f"{self.label} ({self.done}{total})..."

    def stop(self, final_message: str = "", failed: bool = False):
        if self.running:
            self.running = False
            if self.thread:
                self.thread.join()
            self.stream.write("\r" + " " * (len(self.message) + 10) + "\r")
        if final_message and self.enabled:
            symbol = f"{Colors.RED}✗" if failed else f"{Colors.GREEN}✓"
            self.stream.write(f"{symbol}{Colors.ENDC} {final_message} {Colors.DIM}[{_elapsed(self.started)}]{Colors.ENDC}\n")
        self.stream.flush()

    def update_message(self, message: str):
        self.message = message


def _done_text(done: DoneMessage, result: Any, fallback: str) -> str:
    if callable(done):
        return done(result)
    return done or fallback


def show_progress(message: str, success_message: DoneMessage = "", stream: Optional[TextIO] = None):
    """
    Decorator showing a spinner while a step runs.

    `success_message` may be a callable receiving the step's result, so a fit
    can report its iterations and log-likelihood.
    """
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            spinner = Spinner(message, stream=stream)
            spinner.start()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                spinner.stop(f"{spinner.label} failed: {e}", failed=True)
                raise
            spinner.stop(_done_text(success_message, result, spinner.label))
            return result
        return wrapper
    return decorator


class UI:
    """Terminal display for run progress, estimate tables and diagnostics summaries."""

    def __init__(self, quiet: bool = False, stream: Optional[TextIO] = None):
        self.quiet = quiet
        self.stream = stream or sys.stdout
        self.current_spinner: Optional[Spinner] = None

    def _print(self, text: str = ""):
        if not self.quiet:
            print(text, file=self.stream)

    @contextmanager
    def progress(self, message: str, success_message: str = "", total: Optional[int] = None):
        """Spinner for a block; with `total`, the yielded spinner counts replicates via `tick`."""
        spinner = Spinner(message, total=total)
        if self.quiet:
            spinner.enabled = False
        self.current_spinner = spinner
        spinner.start()
        try:
            yield spinner
        except Exception as e:
            spinner.stop(f"{spinner.label} failed: {e}", failed=True)
            raise
        else:
            counted = f" ({spinner.done}/{total} replicates)" if total else ""
            spinner.stop((success_message or spinner.label) + counted)
        finally:
            self.current_spinner = None

    def print_header(self, text: str):
        self._print(f"\n{Colors.BOLD}{Colors.BLUE}╭─ {text}{Colors.ENDC}")

    def print_command(self, command: str, config_path: str):
        self._print(f"\n{Colors.BOLD}{Colors.BLUE}simplexfit {command}{Colors.ENDC} {Colors.DIM}({config_path}){Colors.ENDC}\n")

    def print_table(self, header: Sequence[str], rows: Sequence[Sequence[str]]):
        """Boxed table with right-aligned columns."""
        widths = [max([len(str(h))] + [len(str(r[i])) for r in rows]) for i, h in enumerate(header)]
        line = "  ".join(str(h).rjust(w) for h, w in zip(header, widths))
        self._print(f"{Colors.BLUE}│{Colors.ENDC} {Colors.BOLD}{line}{Colors.ENDC}")
        for row in rows:
            self._print(f"{Colors.BLUE}│{Colors.ENDC} " + "  ".join(str(c).rjust(w) for c, w in zip(row, widths)))
        self._print(f"{Colors.BLUE}╰{'─' * (len(line) + 2)}{Colors.ENDC}")

    def print_convergence(self, converged: bool, iterations: int, loglik: float, max_score: float):
        status = f"{Colors.GREEN}converged" if converged else f"{Colors.RED}not converged"
        self._print(
            f"{status}{Colors.ENDC} after {iterations} iterations  "
            f"{Colors.DIM}loglik {loglik:.6f}  max|U| {max_score:.2e}{Colors.ENDC}"
        )

    def print_summary(self, title: str, text: str):
        """Word-wrapped summary box."""
        width = 80
        self._print(f"\n{Colors.BOLD}{Colors.BLUE}╔{'═' * (width - 2)}╗{Colors.ENDC}")
        padding = (width - len(title) - 2) // 2
        self._print(f"{Colors.BOLD}{Colors.BLUE}║{' ' * padding}{title}{' ' * (width - len(title) - padding - 2)}║{Colors.ENDC}")
        self._print(f"{Colors.BLUE}╠{'═' * (width - 2)}╣{Colors.ENDC}")
        for line in text.split("\n"):
            current_line = ""
            for word in line.split():
                if len(current_line) + len(word) + 1 <= width - 6:
                    current_line += word + " "
                else:
                    self._print(f"{Colors.BLUE}║{Colors.ENDC} {current_line.ljust(width - 4)} {Colors.BLUE}║{Colors.ENDC}")
                    current_line = word + " "
            self._print(f"{Colors.BLUE}║{Colors.ENDC} {current_line.ljust(width - 4)} {Colors.BLUE}║{Colors.ENDC}")
        self._print(f"{Colors.BOLD}{Colors.BLUE}╚{'═' * (width - 2)}╝{Colors.ENDC}\n")

    def print_info(self, message: str):
        self._print(f"{Colors.DIM}{message}{Colors.ENDC}")

    def print_error(self, message: str):
        """Errors go to stderr even in quiet mode."""
        print(f"{Colors.RED}✗ Error:{Colors.ENDC} {message}", file=sys.stderr)

    def print_warning(self, message: str):
        self._print(f"{Colors.YELLOW}⚠ Warning:{Colors.ENDC} {message}")

    def print_flagged(self, message: str):
        """Observations singled out by a diagnostic."""
        self._print(f"{Colors.RED}{Colors.BOLD}▲ Flagged:{Colors.ENDC} {message}")
