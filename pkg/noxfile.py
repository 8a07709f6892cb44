# Licensed under the MIT License.
"""All the action we need during development"""

import nox

TOOL_DIR = "./bundled/tool"
TESTS_DIR = "./src/test/python_tests"


def _update_pip_packages(session: nox.Session) -> None:
    session.run(
        "pip-compile",
        "--generate-hashes",
        "--resolver=backtracking",
        "--upgrade",
        "./requirements.in",
    )
    session.run(
        "pip-compile",
        "--generate-hashes",
        "--resolver=backtracking",
        "--upgrade",
        f"{TESTS_DIR}/requirements.in",
    )


@nox.session(python="3.10")
def install_bundled_libs(session: nox.Session) -> None:
    """Installs the runtime libraries into bundled/libs."""
    session.install("wheel")
    session.install(
        "-t",
        "./bundled/libs",
        "--no-cache-dir",
        "--upgrade",
        "-r",
        "./requirements.txt",
    )


@nox.session(python="3.10")
def setup(session: nox.Session) -> None:
    """Regenerates the pinned requirement files."""
    session.install("wheel", "pip-tools")
    _update_pip_packages(session)


@nox.session()
def tests(session: nox.Session) -> None:
    """Runs all the tests."""
    session.install("-r", f"{TESTS_DIR}/requirements.txt")
    session.run("pytest", TESTS_DIR, *session.posargs)


@nox.session()
def lint(session: nox.Session) -> None:
    """Runs linter and formatter checks on python files."""
    session.install("-r", "./requirements.txt")
    session.install("-r", f"{TESTS_DIR}/requirements.txt")

    session.install("flake8")
    session.run("flake8", TOOL_DIR)
    session.run("flake8", TESTS_DIR)
    session.run("flake8", "noxfile.py")

    # check formatting using black
    session.install("black")
    session.run("black", "--check", TOOL_DIR)
    session.run("black", "--check", TESTS_DIR)
    session.run("black", "--check", "noxfile.py")

    # check import sorting using isort
    session.install("isort")
    session.run("isort", "--check", TOOL_DIR)
    session.run("isort", "--check", TESTS_DIR)
    session.run("isort", "--check", "noxfile.py")


@nox.session()
def grid(session: nox.Session) -> None:
    """Runs the sample experiment grid and writes a JSON report."""
    session.install("-r", "./requirements.txt")
    output = session.posargs[0] if session.posargs else "grid.json"
    session.run(
        "python",
        f"{TOOL_DIR}/vr_cli.py",
        "run",
        "--config",
        f"{TESTS_DIR}/test_data/grid.cfg",
        "--format",
        "json",
        "--output",
        output,
    )
