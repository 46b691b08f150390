import sys

from simplexfit import __version__
from simplexfit.utils.ui import Colors


def print_intro():
    """Print the simplexfit banner to stderr."""

    ascii_art = f"""
{Colors.CYAN}{Colors.BOLD}
 ███████╗██╗███╗   ███╗██████╗ ██╗     ███████╗██╗  ██╗███████╗██╗████████╗
 ██╔════╝██║████╗ ████║██╔══██╗██║     ██╔════╝╚██╗██╔╝██╔════╝██║╚══██╔══╝
 ███████╗██║██╔████╔██║██████╔╝██║     █████╗   ╚███╔╝ █████╗  ██║   ██║
 ╚════██║██║██║╚██╔╝██║██╔═══╝ ██║     ██╔══╝   ██╔██╗ ██╔══╝  ██║   ██║
 ███████║██║██║ ╚═╝ ██║██║     ███████╗███████╗██╔╝ ██╗██║     ██║   ██║
 ╚══════╝╚═╝╚═╝     ╚═╝╚═╝     ╚══════╝╚══════╝╚═╝  ╚═╝╚═╝     ╚═╝   ╚═╝
{Colors.ENDC}"""

    subtitle = f"{Colors.DIM}Nonlinear simplex regression with varying dispersion  v{__version__}{Colors.ENDC}"

    info = f"""
{Colors.CYAN}━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━{Colors.ENDC}
{Colors.DIM}  Commands: fit | envelope | influence | mc-study | simulate{Colors.ENDC}
{Colors.DIM}  Pass --quiet to suppress this banner and progress output{Colors.ENDC}
{Colors.CYAN}━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━{Colors.ENDC}
"""

    print(ascii_art, file=sys.stderr)
    print(subtitle, file=sys.stderr)
    print(info, file=sys.stderr)
