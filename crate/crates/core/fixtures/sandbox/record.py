"""Records reference outputs for the sandbox corpus.

Usage: python3 record.py > corpus.json
"""
import contextlib
import io
import json
import sys
import traceback
import types

from programs import PROGRAMS


def run(source):
    env = {"__name__": "__corpus__"}
    out = io.StringIO()
    status, error = "ok", None
    with contextlib.redirect_stdout(out):
        try:
            exec(compile(source, "<corpus>", "exec"), env)
        except Exception as e:
            status = "runtime_error"
            line = 0
            for frame in traceback.extract_tb(e.__traceback__):
                if frame.filename == "<corpus>":
                    line = frame.lineno
            error = {"kind": type(e).__name__, "line": line}
    bindings = {
        k: repr(v)
        for k, v in env.items()
        if not k.startswith("__") and not isinstance(v, types.FunctionType)
    }
    return {
        "status": status,
        "stdout": out.getvalue(),
        "bindings": dict(sorted(bindings.items())),
        "error": error,
    }


def main():
    cases = [{"name": n, "source": s, "expected": run(s)} for n, s in PROGRAMS]
    json.dump({"reference": sys.version.split()[0], "cases": cases}, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
