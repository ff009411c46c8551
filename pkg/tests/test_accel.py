import os
import subprocess
import sys

import numpy as np
import pytest

from qssa_cm import _accel
from qssa_cm import _kernels as K
from qssa_cm.solver import EXPLICIT, IMPLICIT, KernelRHS, OdeProblem, SolverConfig, integrate

CASES = [
    (K.FULL_MM, (1.0, 3.0, 1.0, 1.0), [1.0, 0.0], 20.0),
    (K.LUMPED, (1.0, 4.0, 89.0, 5.0), [100.0, 0.0], 2.0),
    (K.HTA_OUTER, (2.0, 1.0, 1e-3), [1.0, 0.0], 5.0),
    (K.TQ_OUTER, (1 / 6, 1 / 6, 2 / 3, 1e-2), [1.0, 0.0], 5.0),
    (K.TQSSA_REDUCED, (1.0, 1.0, 4.0), [1.0], 10.0),
]


@pytest.mark.skipif(not _accel.NUMBA_ENABLED, reason="numba disabled")
@pytest.mark.parametrize("method", [EXPLICIT, IMPLICIT])
@pytest.mark.parametrize("model, p, y0, T", CASES)
def test_jit_and_pure_paths_agree(method, model, p, y0, T):
    prob = OdeProblem(KernelRHS(model, p), 0.0, T, y0)
    cfg = SolverConfig(method=method, rtol=1e-9, atol=1e-12)
    fast = integrate(prob, cfg, accelerate=True)
    slow = integrate(prob, cfg, accelerate=False)
    assert fast.stats.accepted == slow.stats.accepted
    assert np.allclose(fast.times, slow.times, rtol=1e-12, atol=0)
    assert np.allclose(fast.states, slow.states, rtol=1e-11, atol=1e-14)


def test_python_version_unwraps():
    assert _accel.python_version(K.cminus_kernel)(1.0, 1.0, 4.0) == pytest.approx(0.17157287525, rel=1e-10)
    plain = lambda x: x  # noqa: E731
    assert _accel.python_version(plain) is plain


def test_disable_flag_selects_pure_numpy(tmp_path):
    code = ("import numpy as np; from qssa_cm import _accel, _kernels as K;"
            "from qssa_cm.models import full_mm_problem; from qssa_cm.kinetics import ParameterSet;"
            "from qssa_cm.solver import integrate, SolverConfig;"
            "assert not _accel.NUMBA_ENABLED;"
            "assert not hasattr(K.cminus_kernel, 'py_func');"
            "t = integrate(full_mm_problem(ParameterSet.of(1,3,1,1,1), 20.0), SolverConfig(rtol=1e-9, atol=1e-12));"
            "np.save(r'%s', t.states[-1])" % (tmp_path / "pure.npy"))
    env = dict(os.environ, QSSA_CM_DISABLE_NUMBA="1")
    subprocess.run([sys.executable, "-c", code], env=env, check=True)
    from qssa_cm.kinetics import ParameterSet
    from qssa_cm.models import full_mm_problem
    here = integrate(full_mm_problem(ParameterSet.of(1, 3, 1, 1, 1), 20.0),
                     SolverConfig(rtol=1e-9, atol=1e-12))
    assert np.allclose(np.load(tmp_path / "pure.npy"), here.states[-1], rtol=1e-11, atol=1e-14)
