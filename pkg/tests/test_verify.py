import numpy as np
import pytest

from curvregge import assembly, verify


@pytest.mark.parametrize("name", sorted(verify.PROPERTIES))
def test_property_passes(name):
    res = verify.PROPERTIES[name]()
    assert res.passed, res.line()


@pytest.mark.parametrize("name", ["angle-defect", "linearization", "consistency", "integral-formula"])
def test_fault_is_caught(name):
    with verify.injected_fault():
        assert assembly._EDGE_TERM_SIGN == -1.0
        assert not verify.PROPERTIES[name]().passed
    assert assembly._EDGE_TERM_SIGN == 1.0


def test_unknown_fault():
    with pytest.raises(ValueError):
        with verify.injected_fault("bit-flip"):
            pass


def test_run_properties_filter_and_unknown():
    lines = []
    res = verify.run_properties(["nsn", "frame"], echo=lines.append)
    assert [r.name for r in res] == ["nSn-identity", "frame-orthonormality"]
    assert all(ln.startswith("[PASS]") for ln in lines)
    with pytest.raises(KeyError):
        verify.run_properties(["bogus"])


def test_random_spd_is_spd(rng):
    g = verify.random_spd(rng, (1000,))
    lam = np.linalg.eigvalsh(g)
    assert lam.min() >= 1 / 3 - 1e-12 and lam.max() <= 3 + 1e-12
