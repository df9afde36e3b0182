import math

import numpy as np
import pytest
from scipy.integrate import quad

import kirchhoff4 as k4
from kirchhoff4.model import (
    KirchhoffSpec,
    NonlinearitySpec,
    RangeOverflowError,
    F_values,
    f_values,
    check_hypotheses,
    params_from_dict,
    params_to_dict,
)


def test_kirchhoff_affine_values():
    spec = KirchhoffSpec.affine(1.0, 1.0)
    assert k4.kirchhoff_g(spec, 2.0) == 3.0
    assert k4.kirchhoff_G(spec, 2.0) == 4.0
    assert k4.kirchhoff_G(spec, 0.0) == 0.0


def test_kirchhoff_log_type():
    spec = KirchhoffSpec.log_type()
    assert k4.kirchhoff_g(spec, 0.0) == 1.0
    assert abs(k4.kirchhoff_G(spec, 2.0) - 3.0 * math.log(3.0)) < 1e-14
    # derivative of G matches g
    for t in np.linspace(0.0, 10.0, 41):
        h = 1e-6 * (1 + t)
        fd = (k4.kirchhoff_G(spec, t + h) - k4.kirchhoff_G(spec, max(t - h, 0.0))) / (h + min(t, h))
        assert abs(fd - k4.kirchhoff_g(spec, t)) < 1e-6 * (1 + abs(fd))


def test_kirchhoff_G_derivative_matches_g():
    for spec in (KirchhoffSpec.affine(1.0, 1.0), KirchhoffSpec.affine(0.5, 2.0), KirchhoffSpec.log_type()):
        for t in np.linspace(0.05, 10.0, 60):
            h = 1e-5 * (1 + t)
            fd = (k4.kirchhoff_G(spec, t + h) - k4.kirchhoff_G(spec, t - h)) / (2 * h)
            g = k4.kirchhoff_g(spec, t)
            assert abs(fd - g) <= 1e-8 * (1 + abs(g)), (spec.kind, t)


def test_kirchhoff_superadditivity_identity():
    spec = KirchhoffSpec.affine(1.0, 1.0)
    rng = np.random.default_rng(0)
    for _ in range(100):
        s, t = rng.uniform(0, 10, 2)
        gap = k4.kirchhoff_G(spec, s + t) - k4.kirchhoff_G(spec, s) - k4.kirchhoff_G(spec, t)
        assert abs(gap - s * t) < 1e-10 * (1 + s * t)  # algebraic identity for a = 1
        assert gap >= 0.0


def test_kirchhoff_rejects():
    with pytest.raises(ValueError):
        KirchhoffSpec.affine(0.0, 1.0)
    with pytest.raises(ValueError):
        KirchhoffSpec.affine(1.0, -1.0)
    with pytest.raises(ValueError):
        k4.kirchhoff_G(KirchhoffSpec.affine(1.0, 1.0), -1.0)


def test_nonlinearity_point_value():
    spec = NonlinearitySpec(cp=2.0, p=6.0, alpha0=1.0, gamma=4.0)
    expect = 2 * 0.5**5 + 0.5**5 * math.exp(0.5**4)
    assert abs(k4.f_eval(spec, 0.5) - expect) < 1e-15
    assert abs(k4.f_eval(spec, 0.5) - 0.09576) < 1e-4
    assert k4.f_eval(spec, 0.0) == 0.0
    assert k4.F_eval(spec, 0.0) == 0.0


def test_nonlinearity_oddness_evenness():
    spec = NonlinearitySpec(cp=2.0, p=6.0, alpha0=1.0, gamma=4.0)
    ts = np.geomspace(1e-4, 4.0, 60)
    assert np.array_equal(f_values(spec, -ts), -f_values(spec, ts))
    assert np.array_equal(F_values(spec, -ts), F_values(spec, ts))


def test_nonlinearity_degenerate_polynomial_mode():
    spec = NonlinearitySpec(cp=3.0, p=6.0, alpha0=0.0, gamma=4.0)
    for t in (0.3, 1.7, -2.2):
        assert abs(k4.F_eval(spec, t) - (3.0 + 1.0) * abs(t) ** 6 / 6.0) < 1e-14 * (1 + abs(t) ** 6)


def test_F_prime_is_f():
    spec = NonlinearitySpec(cp=2.0, p=6.0, alpha0=1.0, gamma=4.0)
    ts = np.geomspace(1e-2, 3.5, 200)
    for t in ts:
        h = 1e-6 * (1 + t)
        fd = (k4.F_eval(spec, t + h) - k4.F_eval(spec, t - h)) / (2 * h)
        assert abs(fd - k4.f_eval(spec, t)) < 1e-6 * (1 + abs(fd))


def test_f_prime_matches_difference():
    spec = NonlinearitySpec(cp=2.0, p=6.0, alpha0=1.0, gamma=4.0)
    for t in np.geomspace(0.05, 3.0, 40):
        h = 1e-6 * (1 + t)
        fd = (k4.f_eval(spec, t + h) - k4.f_eval(spec, t - h)) / (2 * h)
        assert abs(fd - float(spec.f_prime(t))) < 1e-5 * (1 + abs(fd))


def test_exp_primitive_vector_matches_scalar_quadrature():
    spec = NonlinearitySpec(cp=2.0, p=6.0, alpha0=1.0, gamma=4.0)
    ts = np.array([1e-3, 0.2, 0.8, 1.9, 3.1, 4.4])
    vec = F_values(spec, ts)
    for t, v in zip(ts, vec):
        ref, _ = quad(lambda s: s**5 * math.exp(s**4), 0.0, t, epsabs=0.0, epsrel=1e-12, limit=300)
        ref += 2.0 * t**6 / 6.0
        assert abs(v - ref) <= 1e-9 * (1 + abs(ref)), t


def test_overflow_guard():
    spec = NonlinearitySpec(cp=2.0, p=6.0, alpha0=1.0, gamma=4.0)
    edge = (700.0) ** 0.25
    k4.f_eval(spec, edge * 0.999)  # inside the guard
    with pytest.raises(RangeOverflowError):
        k4.f_eval(spec, edge * 1.01)
    with pytest.raises(RangeOverflowError):
        k4.F_eval(spec, edge * 1.01)


def test_adams_constant():
    assert abs(k4.adams_constant(0.5) - 64 * np.pi**4) < 1e-9
    # continuity with the unweighted threshold as beta -> 0+
    assert abs(k4.adams_constant(1e-9) - 32 * np.pi**2) < 1e-5
    with pytest.raises(ValueError):
        k4.adams_constant(0.0)
    with pytest.raises(ValueError):
        k4.adams_constant(1.0)


def test_adams_constant_precision():
    import mpmath as mp

    mp.mp.dps = 30
    for beta in (0.25, 0.5, 0.75):
        ref = 4 * (8 * mp.pi**2 * (1 - beta)) ** (1 / mp.mpf(1 - beta))
        assert abs(k4.adams_constant(beta) - float(ref)) < 1e-12 * float(ref)


def test_growth_exponent():
    assert k4.growth_exponent(0.5) == 4.0
    assert k4.growth_exponent(0.0) == 2.0
    assert k4.growth_exponent(0.75) == 8.0
    with pytest.raises(ValueError):
        k4.growth_exponent(1.0)


def test_params_validation():
    p = k4.default_params()
    assert p.validate() == []
    assert p.theta == p.p
    bad = k4.ModelParams.create(0.5, 4.0, 6.0, 2.0, 1.0, 0.1, KirchhoffSpec.affine(1, 1))
    assert any("q must exceed 4" in msg for msg in bad.validate())


def test_params_roundtrip():
    p = k4.default_params(cp=3.7)
    d = params_to_dict(p)
    assert set(d) == {
        "beta", "q", "p", "Cp", "alpha0", "delta",
        "kirchhoff.kind", "kirchhoff.g0", "kirchhoff.a",
    }
    q = params_from_dict(d)
    assert q == p


def test_hypotheses_default_pass(params_cp2):
    report = check_hypotheses(params_cp2, 200)
    assert report.all_passed, [c.name for c in report.failed()]


def test_hypotheses_resolved_cp_pass(resolved_default):
    params, _, _ = resolved_default
    report = check_hypotheses(params, 200)
    assert report.all_passed, [c.name for c in report.failed()]


def test_hypotheses_log_kirchhoff(params_cp2):
    p = k4.ModelParams.create(0.5, 5.0, 6.0, 2.0, 1.0, 0.1, KirchhoffSpec.log_type())
    report = check_hypotheses(p, 150)
    assert report.all_passed, [c.name for c in report.failed()]


class _WeakenedNonlinearity(NonlinearitySpec):
    """Violates the lower power bound: f = 0.5 cp |t|^(p-2) t."""

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * self.cp * np.abs(t) ** (self.p - 2.0) * t


def test_hypotheses_detect_weakened_cp(params_cp2):
    broken = _WeakenedNonlinearity(cp=2.0, p=6.0, alpha0=1.0, gamma=4.0)
    params = k4.ModelParams(
        beta=0.5, q=5.0, p=6.0, delta=0.1,
        kirchhoff=KirchhoffSpec.affine(1.0, 1.0), nonlinearity=broken,
    )
    report = check_hypotheses(params, 150)
    assert not report["f-dominates-cp-power"].passed


def test_hypotheses_sample_count_guard(params_cp2):
    with pytest.raises(ValueError):
        check_hypotheses(params_cp2, 50)


def test_superlinearity_margin_positive(params_cp2):
    # p E(t) <= t^p exp(alpha0 t^gamma): strict inequality checked by quadrature
    spec = params_cp2.nonlinearity
    for t in np.geomspace(0.1, 4.0, 30):
        lhs = params_cp2.p * (k4.F_eval(spec, t) - spec.cp * t**6 / 6.0)
        rhs = t**6 * math.exp(t**4)
        assert lhs <= rhs * (1 + 1e-12)
