import os
import subprocess
import sys

from latticedn import _backend


def test_backend_is_reported():
    assert _backend.BACKEND in ("cython", "python")


def test_pure_python_fallback_selected_by_env():
    code = (
        "from latticedn import _backend, edge_ode;"
        "import math;"
        "assert _backend.BACKEND == 'python';"
        "print(edge_ode.dirichlet_eigenvalues(edge_ode.SymmetricPotential.zero(), 1)[0] - math.pi**2)"
    )
    env = dict(os.environ, LATTICEDN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert abs(float(out.stdout)) < 1e-9
