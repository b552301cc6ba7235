from fractions import Fraction

import pytest

from g2cert.exterior import DiffForm, VectorField, apply, d, pullback, span_coefficients, wedge
from g2cert.models import (
    AnnihilationFailure,
    MissingParam,
    UnknownModel,
    aux_identities,
    big_theta,
    builtin,
    c_from_a,
    a_from_c,
    engel_check,
    flat_chart,
    hc_recovery,
    lame_solution_checks,
    monge_model,
    reduction_checks,
    rescaling_check,
    residual_obstructions,
    seed_triple,
    symmetry_condition,
    theta_pullbacks,
    theta_span,
    z_fields,
)
from g2cert.models.base import DistributionModel, flat_c_context
from g2cert.models.chazy import chazy_k23, chazy_k23_free, chazy_k32, chazy_k32_free, k32_context
from g2cert.symcore import Context, UndeclaredSymbol

CATALOG = ["flat_cartan", "hilbert_cartan", "hc_family", "chazy_k32", "chazy_k23", "lame_spin32", "lame_spin4"]
_CACHE = {}


def model(name):
    if name not in _CACHE:
        _CACHE[name] = builtin(name)
    return _CACHE[name]


def same_field(a, b):
    return (a - b).is_zero()


# ------------------------------------------------------------ constructors
def test_monge_hilbert_cartan():
    m = model("hilbert_cartan")
    ctx = m.ctx
    p, q = ctx.syms("p q")
    dx = DiffForm.d(ctx, "x")
    assert m.omegas[0] == DiffForm.d(ctx, "y") - p * dx
    assert m.omegas[1] == DiffForm.d(ctx, "p") - q * dx
    assert m.omegas[2] == DiffForm.d(ctx, "z") - q**2 * dx


def test_monge_k32_spanning_field():
    m = chazy_k32()
    assert m.spanning[1] == m.displays["X"][1]


def test_monge_phi_zero_and_errors():
    ctx = Context(["x", "y", "z", "p", "q"])
    m = monge_model(ctx.zero)
    assert m.omegas[2] == DiffForm.d(ctx, "z")
    assert m.check_annihilation()
    with pytest.raises(ValueError):
        monge_model(Context(["x", "y"]).zero)
    with pytest.raises(UndeclaredSymbol):
        ctx.parse("q^2 + t")


def test_annihilation_failure_detected():
    ctx = Context(["x", "y", "z", "p", "q"])
    m = monge_model(ctx.parse("q^2"))
    bad = DistributionModel("bad", ctx, m.omegas, (m.spanning[0], VectorField.coordinate(ctx, "y")))
    with pytest.raises(AnnihilationFailure):
        bad.check_annihilation()


def test_flat_chart_examples():
    ch = flat_chart()
    t = ch.thetas
    assert d(t[3]).is_zero()
    assert d(t[0]) == wedge(t[2], t[3])
    ctx = ch.ctx
    a1, a2, a3, a4, a5 = ctx.syms("a1 a2 a3 a4 a5")
    b = [a1 + a3 * a4, a2 + a3 * a5, -a3, a4, a5]
    want = d(b[2]) + (b[3] / 2) * d(b[4]) - (b[4] / 2) * d(b[3])
    assert ch.tilde_thetas[2] == want


def test_c_from_a_examples():
    ctx = flat_chart().ctx
    zero = [ctx.zero] * 5
    assert list(c_from_a(zero)) == zero
    assert model("hilbert_cartan").cfuncs[0] == model("hilbert_cartan").ctx.parse("12*z - 32*p*q + 12*q^2*x")
    a = ctx.syms("a1 a2 a3 a4 a5")
    assert list(a_from_c(c_from_a(a))) == list(a)


def test_big_theta_in_theta_span():
    ch = flat_chart()
    ctx = ch.ctx
    a = ctx.syms("a1 a2 a3 a4 a5")
    T1, T2, T3 = big_theta(c_from_a(a), ctx)
    t1, t2, t3 = ch.thetas[:3]
    assert span_coefficients(T3, [t1, t2, t3]) == [0, 0, 2]
    assert T1 == 6 * t1 + 2 * a[3] * t3
    assert T2 == 6 * t2 + 2 * a[4] * t3


def test_big_theta_examples():
    ctx = flat_c_context()
    c = ctx.syms("c1 c2 c3 c4 c5")
    T3 = big_theta(c, ctx)[2]
    assert T3 == d(c[2]) + c[4] * d(c[3]) - c[3] * d(c[4])
    T1 = big_theta([c[0], c[1], 0, 0, 0], ctx)[0]
    assert T1 == d(c[0])


def test_big_theta_spin32_row():
    m = model("lame_spin32")
    T3 = big_theta(m.cfuncs, m.ctx)[2]
    rows = span_coefficients(T3, list(m.omegas))
    al, be, de, w = m.ctx.syms("alpha beta delta w")
    u, Y = m.params["u"], m.params["Y"]
    assert rows == [(al + 3 * be * w**2) / (2 * de), u / (de * Y), 0]


def test_engel_check():
    res = engel_check()
    assert all(res.values()) and len(res) == 3
    bad = engel_check({3: "c1"})
    assert not all(bad.values())


def test_z_fields_flat_c_chart():
    ctx = flat_c_context()
    c = ctx.syms("c1 c2 c3 c4 c5")
    Z1, Z2, Z3 = z_fields(c, ctx)
    dc = [VectorField.coordinate(ctx, n) for n in ctx.coordinates]
    assert Z1 == dc[2] + 2 * c[4] * dc[1] - 2 * c[3] * dc[0]
    assert Z2 == dc[3] + 4 * c[2] * dc[0] - 2 * c[4] * dc[2]
    assert Z3 == dc[4] - 4 * c[2] * dc[1] + 2 * c[3] * dc[2]


def test_z_fields_hc():
    m = model("hilbert_cartan")
    Z = z_fields(m)
    for got, want in zip(Z, m.displays["Z"]):
        assert got == want


def test_z_fields_spin4():
    m = model("lame_spin4")
    assert same_field(z_fields(m)[0], m.displays["Z1"])


def test_seed_triple_examples():
    hc = model("hilbert_cartan")
    S = seed_triple(hc)
    assert S[1] == hc.displays["S"][1]
    assert S[1] == -hc.spanning[1]
    k32 = chazy_k32()
    E, rho = k32.ctx.syms("E rho")
    assert seed_triple(k32)[1] == (E / (4 * rho)) * VectorField.coordinate(k32.ctx, "q")
    ctx = flat_c_context()
    c = ctx.syms("c1 c2 c3 c4 c5")
    fm = DistributionModel("flat_c", ctx, (), (), cfuncs=tuple(c))
    Z = z_fields(fm)
    assert seed_triple(fm)[0] == Z[1] + c[4] * Z[0]


@pytest.mark.parametrize("name", CATALOG)
def test_seeds_annihilated(name):
    m = model(name)
    S1, S2, _ = seed_triple(m)
    for w in m.omegas:
        for S in (S1, S2):
            assert sum((S.components[i] * w.coeffs.get((i,), m.ctx.zero) for i in range(5)), m.ctx.zero) == 0


def test_builtin_examples():
    k32 = chazy_k32()
    assert k32.ctx.rules["R"] == k32.ctx.parse("P*R + Q^2/15")
    assert model("lame_spin4").cfuncs[3] == model("lame_spin4").ctx.parse("-r/8")
    fam = builtin("hc_family", {"alpha": 0, "beta": "-1/2", "c": 0})
    assert fam.params["xi"] == 0
    with pytest.raises(UnknownModel):
        builtin("nope")
    with pytest.raises(MissingParam):
        builtin("hilbert_cartan", {"alpha": 1})
    with pytest.raises(MissingParam):
        builtin("hc_family", {"gamma": 1})
    with pytest.raises(MissingParam):
        builtin("lame_spin4", {"k": 2})


def test_chazy_rules():
    c = chazy_k23().ctx
    for name, rule in {"R": "P*R + Q^2/80", "xi": "Q/40 - xi^2", "eta": "xi*eta", "chi": "1/eta^2", "G": "P*G/2"}.items():
        assert c.rules[name] == c.parse(rule)
    c = k32_context()
    for name, rule in {"xi": "Q/45 - xi^2", "rho": "xi*rho", "chi": "1/rho^2", "E": "P*E/3"}.items():
        assert c.rules[name] == c.parse(rule)


def test_spin_chart_rates():
    m = model("lame_spin32")
    # d/dx = Y^2/(2u) d/dw
    assert m.ctx.sym("w").diff("w") == 1
    assert m.spanning[1].components[0] == m.params["Y"] ** 2 / (2 * m.params["u"])
    m4 = model("lame_spin4")
    k, r = m4.ctx.syms("k r")
    assert m4.spanning[1].components[0] == 2 * m4.params["Y"] ** 2 / (k * (r**3 + 1) ** 2)


# ------------------------------------------------------------ obstructions
def test_residual_obstructions_k32():
    m = chazy_k32_free()
    b1, b2 = residual_obstructions(m)
    want = m.ctx.parse("10*H2^2*Om2*Om0 - 20*H2^2*Om1^2 - 10*H2*H3*Om0*Om1 + 3*H2*H4*Om0^2 - 5*H3^2*Om0^2")
    assert b1 == want
    assert b2 == m.params["aux"].b2
    assert b1 == m.params["aux"].b1


def test_residual_obstructions_k23():
    m = chazy_k23_free()
    b1, b2 = residual_obstructions(m)
    want = m.ctx.parse("-10*F2^2*Om2*Om0 + 20*F2^2*Om1^2 - 4*F3^2*Om0^2 + 3*F2*F4*Om0^2")
    assert b1 == want
    assert b2 == m.params["aux"].b2


def test_residual_obstructions_vanish_under_constraints():
    for m in (chazy_k32(), chazy_k23()):
        aux = m.params["aux"]
        assert aux.b1.is_zero() and aux.b2.is_zero()


def test_residual_obstructions_rejects_constrained():
    with pytest.raises(ValueError):
        residual_obstructions(chazy_k32())


# ------------------------------------------------------------ report checks
def test_reduction_checks():
    rep = reduction_checks()
    assert rep.passed, [(i.key, i.detail) for i in rep.items if not i.passed]
    assert [i.key for i in rep.items] == ["i", "ii", "iii", "iv", "v", "vi"]
    assert rep["iii"].factor == "10*E^4"
    assert "P' = (P^2 - Q)/6" in rep["vi"].detail


def test_noth_trivial_solution():
    from g2cert.models.checks import chazy_expression, noth

    ctx = Context(["x"], [], name="const")
    assert noth([ctx.one] + [ctx.zero] * 4) == 0
    assert chazy_expression(ctx.zero, Fraction(3, 2)) == 0


def test_lame_solution_checks():
    rep = lame_solution_checks()
    assert rep.passed, [(i.key, i.detail) for i in rep.items if not i.passed]
    assert [i.key for i in rep.items] == list("abcdef")


@pytest.mark.parametrize("name", ["chazy_k32", "chazy_k23"])
def test_aux_identities_constrained(name):
    rep = aux_identities(model(name))
    assert rep.passed, [i.key for i in rep.items if not i.passed]
    assert len(rep.items) >= 4


@pytest.mark.parametrize("make", [chazy_k32_free, chazy_k23_free])
def test_aux_identities_free(make):
    rep = aux_identities(make())
    assert rep.passed and len(rep.items) == 3


@pytest.mark.parametrize("name", ["chazy_k32", "chazy_k23"])
def test_j_decomposition_matches_display(name):
    m = model(name)
    assert m.params["aux"].J == m.displays["J"]


@pytest.mark.parametrize("name", CATALOG)
def test_annihilation_and_independence(name):
    m = model(name)
    assert m.check_annihilation()
    assert m.check_independent()


@pytest.mark.parametrize("name", ["flat_cartan", "hilbert_cartan", "hc_family", "chazy_k32", "chazy_k23"])
def test_theta_pullbacks_in_span(name):
    m = model(name)
    rows = theta_span(m)
    assert len(rows) == 3 and all(len(r) == 3 for r in rows)
    if "theta_rows" in m.displays:
        assert [[rows[i][j] == m.displays["theta_rows"][i][j] for j in range(3)] for i in range(3)] == [[True] * 3] * 3


def test_hc_theta1_display():
    m = model("hilbert_cartan")
    q = m.ctx.sym("q")
    t1 = theta_pullbacks(m)[0]
    assert t1 == 2 * m.omegas[2] - 4 * q * m.omegas[1]


@pytest.mark.parametrize("name", ["hilbert_cartan", "hc_family", "chazy_k32", "chazy_k23"])
def test_recipe_matches_displays(name):
    m = model(name)
    D = m.displays
    S = seed_triple(m)
    if "c" in D:
        assert [(a - b).is_zero() for a, b in zip(m.cfuncs, D["c"])] == [True] * len(D["c"])
    if "Z" in D:
        assert all(same_field(a, b) for a, b in zip(D["_recipe_Z"], D["Z"]))
    assert all(same_field(a, b) for a, b in zip(S, D["S"]))


@pytest.mark.parametrize("name", ["lame_spin32", "lame_spin4"])
def test_spin_displays(name):
    m = model(name)
    D = m.displays
    rows = [span_coefficients(f, list(m.omegas)) for f in big_theta(m.cfuncs, m.ctx)]
    for i in range(3):
        for j in range(3):
            assert (rows[i][j] - D["Theta_rows"][i][j]).is_zero()
    S = seed_triple(m)
    assert same_field(D["_recipe_Z"][0], D["Z1"])
    assert all(same_field(a, b) for a, b in zip(S, D["S"]))


def test_hc_printed_c2_differs_only_in_c2():
    m = model("hilbert_cartan")
    printed = m.displays["c_printed"]
    assert [a == b for a, b in zip(m.cfuncs, printed)] == [True, False, True, True, True]


def test_rescaling():
    rep = rescaling_check()
    assert rep.passed
    assert [i.factor for i in rep.items] == ["k^3", "k^3", "k^2"]


def test_symmetry_condition():
    rep = symmetry_condition()
    assert rep.passed and len(rep.items) == 14
    assert rep.info["fields_preserving_theta"] == ["h1", "h2", "L1", "L2", "L3", "L6"]


def test_hc_recovery_constants():
    rep = hc_recovery()
    assert rep["proportional_set"].passed
    assert rep.info["matches"] == {"S1": ("S2", "2"), "S2": ("S1", "1"), "S3": ("S3", "-1/2")}
    # no single constant relates S_i(family) to S_i(HC) index by index
    assert not rep["global_constant"].passed
