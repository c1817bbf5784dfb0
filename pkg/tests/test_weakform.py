import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqweak.detector import MomentEstimate
from seqweak.errors import ConvergenceError, DegeneratePostselectionError, InvalidArgumentError
from seqweak.pointer import Moments
from seqweak.polarization import H, V, PolarizationState, linear_state
from seqweak.weakform import (
    CouplingConfig,
    WeaknessWarning,
    analytic_refs,
    approximation_error_scan,
    exact_report,
    invert_moments,
    predict_mean,
    predict_moments,
    predict_xy_joint,
    predict_xy_sequential,
)

G = 0.15
RATIOS = [0.3, 0.15, 0.075, 0.0375]


def cfg_for(pre, post, theta, g=G, sigma=1.0):
    return CouplingConfig(g, g, sigma, theta, pre, post)


def test_weakness_warning(hpost):
    pre, post = hpost
    with pytest.warns(WeaknessWarning):
        CouplingConfig(0.6, 0.1, 1.0, 0.0, pre, post)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        c = CouplingConfig(0.15, 0.15, 1.0, 0.0, pre, post)
    assert c.weakness == pytest.approx(0.15)


def test_predict_mean():
    assert predict_mean(0.15, 0) == 0
    assert predict_mean(0.15, 1.3435) == pytest.approx(0.2015, abs=1e-4)
    s = linear_state(0.7)
    assert predict_mean(1.0, math.sin(0.7) ** 2) == pytest.approx(abs(s.amp_v) ** 2)


def test_predict_xy_sequential_examples(hpost):
    assert predict_xy_sequential(cfg_for(H, H, 0.0)) == 0
    pre, post = hpost
    val = predict_xy_sequential(cfg_for(pre, post, math.pi / 4))
    # 1/2 g^2 (seq + conj(psi_w) * 0), seq = 0.5 * 0.809 / 0.588
    assert val == pytest.approx(0.5 * G**2 * (0.5 * 0.809 / 0.588), rel=1e-12)
    assert val == pytest.approx(0.00774, abs=1e-5)
    assert predict_xy_sequential(CouplingConfig(0.2, 0.3, 1.0, math.pi / 2, V, V)) == pytest.approx(0.06)


def test_predict_xy_joint_examples(anomalous):
    pre, post = anomalous
    c = cfg_for(V, V, math.pi / 2)
    assert predict_xy_joint(c) == pytest.approx(G * G)
    assert predict_xy_joint(c, symmetrized=False) == pytest.approx(G * G)
    c = cfg_for(pre, post, 0.0)
    assert predict_xy_joint(c) == pytest.approx(predict_xy_joint(c, symmetrized=False), abs=1e-15)
    # non-commuting: value from the definitions by direct 2x2 arithmetic
    c = cfg_for(pre, post, math.pi / 4)
    i, f = pre.vector.real, post.vector.real
    a = np.full((2, 2), 0.5)
    b = np.diag([0.0, 1.0])
    d = f @ i
    a_w, b_w = f @ a @ i / d, f @ b @ i / d
    anti = f @ (a @ b + b @ a) @ i / d
    assert predict_xy_joint(c) == pytest.approx(0.25 * G * G * (anti + 2 * a_w * b_w), rel=1e-12)


def test_degenerate_propagates():
    with pytest.raises(DegeneratePostselectionError):
        predict_xy_sequential(cfg_for(H, V, 0.3))


def test_invert_zero_moments():
    r = invert_moments(Moments(0, 0, 0), G, G)
    assert tuple(r.values()) == (0, 0, 0)


def test_invert_rejects_zero_coupling():
    with pytest.raises(InvalidArgumentError):
        invert_moments(Moments(0, 0, 0), 0.0, G)


def test_invert_rejects_elliptical():
    ell = PolarizationState.from_amplitudes(1, 1j)
    with pytest.raises(InvalidArgumentError):
        invert_moments(Moments(0.1, 0.1, 0.01), G, G, states=(ell, H))


def test_exact_inversion_hpost(hpost):
    pre, post = hpost
    rep, _ = exact_report(cfg_for(pre, post, math.pi / 4))
    assert abs(rep.seq_w - 0.5 * 0.809 / 0.588) < 5 * G**2
    assert abs(rep.seq_w - 0.5 * 0.809 / 0.588) > 0  # not exact off the commuting case


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, math.pi),
       st.floats(0.01, 0.5), st.floats(0.01, 0.5))
def test_round_trip_property(t_pre, t_post, theta, gx, gy):
    pre, post = linear_state(t_pre), linear_state(t_post)
    if abs(post.overlap(pre)) < 1e-2:
        return
    c = CouplingConfig(gx, gy, 1.0, theta, pre, post)
    rep = invert_moments(predict_moments(c), gx, gy)
    ref = np.array(analytic_refs(c))
    assert np.allclose(rep.values(), ref, rtol=1e-10, atol=1e-10 * (1 + np.abs(ref).max()))


def test_error_propagation_linearization():
    cov = np.array([[4e-6, 1e-7, 2e-7], [1e-7, 9e-6, 3e-7], [2e-7, 3e-7, 1e-6]])
    est = MomentEstimate(0.1, 0.2, 0.03, *np.sqrt(np.diag(cov)), n_events=10, n_frames=10, cov=cov)
    rep = invert_moments(est, 0.15, 0.12)
    # finite-difference Jacobian of the inversion map
    def f(m):
        a, b = m[0] / 0.15, m[1] / 0.12
        return np.array([a, b, 2 * m[2] / (0.15 * 0.12) - a * b])
    m0 = np.array([0.1, 0.2, 0.03])
    h = 1e-7
    jac = np.column_stack([(f(m0 + h * e) - f(m0 - h * e)) / (2 * h) for e in np.eye(3)])
    se = np.sqrt(np.diag(jac @ cov @ jac.T))
    np.testing.assert_allclose(rep.errors(), se, rtol=1e-6)


def test_scan_zero_ratio(hpost):
    pre, post = hpost
    scan = approximation_error_scan(cfg_for(pre, post, math.pi / 4), [0.0, 0.15, 0.075])
    assert tuple(scan.deviations[0]) == (0, 0, 0)


def test_scan_halving_quarters_deviation(hpost):
    pre, post = hpost
    scan = approximation_error_scan(cfg_for(pre, post, math.pi / 4), [0.15, 0.075])
    ratio = scan.deviations[0] / scan.deviations[1]
    assert np.all((ratio > 3.8) & (ratio < 4.2))


def test_scan_commuting_eigen_case_is_exact():
    scan = approximation_error_scan(cfg_for(V, linear_state(0.3), math.pi / 2), RATIOS)
    assert np.all(scan.deviations < 1e-13)
    assert all(scan.degenerate.values())


def test_scan_slopes_hpost(hpost):
    pre, post = hpost
    scan = approximation_error_scan(cfg_for(pre, post, math.pi / 4), RATIOS)
    for q, s in scan.slopes.items():
        assert 1.7 <= s <= 2.3, q


def test_scan_raises_on_bad_order(anomalous, monkeypatch):
    """A first-order error in the inversion must trip the slope check."""
    import seqweak.weakform as wf

    real = wf.invert_moments

    def biased(moments, g_x, g_y, **kw):
        rep = real(moments, g_x, g_y, **kw)
        return type(rep)(rep.pi_psi_w + g_x, rep.pi_v_w, rep.seq_w, analytic_refs=rep.analytic_refs)

    monkeypatch.setattr(wf, "invert_moments", biased)
    pre, post = anomalous
    with pytest.raises(ConvergenceError):
        approximation_error_scan(cfg_for(pre, post, math.pi / 4), RATIOS)


def test_scan_rejects_bad_ratios(hpost):
    pre, post = hpost
    with pytest.raises(InvalidArgumentError):
        approximation_error_scan(cfg_for(pre, post, 0.3), [-0.1])
    with pytest.raises(InvalidArgumentError):
        approximation_error_scan(cfg_for(pre, post, 0.3), [])
