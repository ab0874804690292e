"""Subprocess bridge to an external Mermaid compiler.

The executable is named by the ``MERMAID_CLI`` environment variable or an
explicit path.  Exit status 0 means the source compiled; nothing else
about the tool's behavior is assumed.  Rendering uses the same bridge
with a PNG output path.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import tempfile

from .errors import ConfigError

ENV_VAR = "MERMAID_CLI"
_TIMEOUT = 120


def cli_path(explicit: str | None = None) -> str | None:
    """Resolve the compiler executable from an argument or the environment."""
    return explicit or os.environ.get(ENV_VAR) or None


def _run(source: str, cli: str, out_name: str, extra_args=()):
    """Compile source into a temp dir; returns (rc, detail, produced path or None)."""
    tmp = tempfile.mkdtemp(prefix="diaforge-mmd-")
    try:
        src_path = os.path.join(tmp, "diagram.mmd")
        with open(src_path, "w", encoding="utf-8") as fh:
            fh.write(source if source.endswith("\n") else source + "\n")
        out_path = os.path.join(tmp, out_name)
        cmd = [cli, "-i", src_path, "-o", out_path, *extra_args]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=_TIMEOUT)
        except OSError as exc:
            raise ConfigError(f"cannot run Mermaid compiler {cli!r}: {exc}") from exc
        except subprocess.TimeoutExpired:
            return 124, "compiler timed out", None, tmp
        detail = (proc.stderr or proc.stdout or "").strip()[-500:]
        produced = out_path if proc.returncode == 0 and os.path.exists(out_path) else None
        return proc.returncode, detail, produced, tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def compile_check(source: str, cli: str) -> tuple[bool, str]:
    """True iff the external compiler exits 0 on the source."""
    rc, detail, _, tmp = _run(source, cli, "diagram.svg")
    shutil.rmtree(tmp, ignore_errors=True)
    return rc == 0, detail


def render_png(source: str, out_path, cli: str, scale: int = 2) -> bool:
    """Render source to a PNG file; returns False when compilation fails."""
    rc, _, produced, tmp = _run(source, cli, "diagram.png", ("-s", str(scale)))
    try:
        if rc != 0 or produced is None:
            return False
        shutil.move(produced, str(out_path))
        return True
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
