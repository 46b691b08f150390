from typing import Optional, Sequence

from simplexfit.utils.ui import UI


class Logger:
    """Logger that routes command progress and results through the terminal UI."""

    def __init__(self, quiet: bool = False):
        self.ui = UI(quiet=quiet)
        self.log = []

    def _log(self, msg: str):
        """Keep a plain-text record of everything shown."""
        self.log.append(msg)

    def log_header(self, msg: str):
        self._log(msg)
        self.ui.print_header(msg)

    def log_command(self, command: str, config_path: str):
        self._log(f"{command} {config_path}")
        self.ui.print_command(command, config_path)

    def log_estimates(self, rows: Sequence):
        """Print an inference table (rows with name, estimate, se, z, p_value)."""
        header = ("parameter", "estimate", "s.e.", "z", "p")
        body = [
            (r.name, f"{r.estimate:.5g}", f"{r.se:.3g}", f"{r.z:.3f}", f"{r.p_value:.4f}")
            for r in rows
        ]
        self._log("\n".join(" ".join(row) for row in body))
        self.ui.print_table(header, body)

    def log_table(self, header: Sequence[str], rows: Sequence[Sequence[str]]):
        self.ui.print_table(header, rows)

    def log_info(self, message: str):
        self._log(message)
        self.ui.print_info(message)

    def log_warning(self, message: str):
        self._log(f"WARNING: {message}")
        self.ui.print_warning(message)

    def log_error(self, message: str):
        self._log(f"ERROR: {message}")
        self.ui.print_error(message)

    def log_flagged(self, message: str):
        self._log(f"FLAGGED: {message}")
        self.ui.print_flagged(message)

    def log_summary(self, title: str, summary: str):
        self._log(summary)
        self.ui.print_summary(title, summary)

    def log_convergence(self, fitted):
        self._log(f"converged={fitted.converged} iterations={fitted.iterations} loglik={fitted.loglik:.10g}")
        self.ui.print_convergence(fitted.converged, fitted.iterations, fitted.loglik, fitted.max_score)

    def progress(self, message: str, success_message: str = "", total: Optional[int] = None):
        """Spinner context; pass `total` to count replicates with `spinner.tick`."""
        return self.ui.progress(message, success_message, total)
