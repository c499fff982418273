"""Version of collapse-lab.

The release number lives in ``version.info``. Outside a release build
(``COLLAPSE_LAB_RELEASE=1``) a ``.dev`` suffix with the short commit hash is
appended, so manifests written from a checkout name the code that wrote them.
"""

# This file is part of collapse-lab.

# Licensed under the MIT license:
# http://www.opensource.org/licenses/MIT-license

import os
import subprocess

_PACKAGE_DIR = os.path.dirname(__file__)
_VERSION_FILE = os.path.join(_PACKAGE_DIR, "version.info")


def _read_version_info() -> str:
    with open(_VERSION_FILE) as fopen:
        return fopen.read().strip()


def _dev_suffix() -> str:
    try:
        completed = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],  # noqa: S603, S607
            cwd=_PACKAGE_DIR,
            capture_output=True,
            text=True,
            check=True,
        )
    except (OSError, subprocess.CalledProcessError):
        return ".dev"
    commit = completed.stdout.strip()
    return f".dev+{commit}" if commit else ".dev"


__version__ = _read_version_info()
if os.getenv("COLLAPSE_LAB_RELEASE", "0") != "1":
    __version__ += _dev_suffix()


__all__ = ["__version__"]
