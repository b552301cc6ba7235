from fractions import Fraction

import pytest

from g2cert import g2
from g2cert.exterior import VectorField
from g2cert.models import builtin, seed_triple, seeds_from_z, z_fields
from g2cert.models.base import DistributionModel, flat_c_context


@pytest.fixture(scope="module")
def flat_basis():
    return g2.generate(seed_triple(builtin("flat_cartan")))


@pytest.fixture(scope="module")
def flat_sc(flat_basis):
    return g2.structure_constants(flat_basis)


@pytest.fixture(scope="module")
def ref():
    return g2.reference_table()


@pytest.fixture(scope="module")
def c_basis():
    ctx = flat_c_context()
    c = ctx.syms("c1 c2 c3 c4 c5")
    return g2.generate(seeds_from_z(c, z_fields(c, ctx))), ctx, c


def test_generate_c_chart_displays(c_basis):
    b, ctx, c = c_basis
    d = {n: VectorField.coordinate(ctx, n) for n in ctx.coordinates}
    assert b["S4"] == 2 * (d["c3"] + c[3] * d["c1"] - c[4] * d["c2"])
    assert b["L1"] == -6 * d["c1"]
    assert len(b.fields) == 14
    assert b.provenance["h1"] == "(h-H)/4"
    assert ("S1", "S1") not in b.brackets


def test_schedule_fixed():
    assert [s[0] for s in g2.SCHEDULE] == ["S4", "S5", "S6", "L1", "L3", "L5", "L2", "L4", "L6", "H", "h"]
    assert all(a != b for _, a, b in g2.SCHEDULE)


def test_flat_structure_constants(flat_basis, flat_sc):
    assert flat_sc.all_verified()
    assert not flat_sc.failures
    s3 = flat_sc.cctx.sym("s3")
    i = g2.INDEX
    vec = flat_sc.coeff(i["S2"], i["S6"])
    assert {g2.NAMES[k]: c for k, c in enumerate(vec) if c} == {"h1": -2, "h2": 2 * s3}
    vec = flat_sc.coeff(i["S4"], i["S5"])
    assert {g2.NAMES[k]: c for k, c in enumerate(vec) if c} == {"S2": -8}
    assert all(not c for c in flat_sc.coeff(3, 3))
    assert flat_sc.coeff(5, 1) == [-c for c in flat_sc.coeff(1, 5)]


def test_structure_constants_needs_points(flat_basis):
    with pytest.raises(ValueError):
        g2.structure_constants(flat_basis, points=2)


def test_structure_constants_seed_independent(flat_basis, flat_sc):
    other = g2.structure_constants(flat_basis, points=4, seed=99)
    assert other.as_dict() == flat_sc.as_dict()


def test_verify_table_flat(flat_sc, ref):
    assert g2.verify_table(flat_sc, ref) == []


def test_verify_table_hilbert_cartan(ref):
    sc = g2.structure_constants(g2.generate(seed_triple(builtin("hilbert_cartan"))))
    assert sc.all_verified()
    assert g2.verify_table(sc, ref) == []


def test_verify_table_scaled_seed_fails(ref):
    S1, S2, S3 = seed_triple(builtin("flat_cartan"))
    sc = g2.structure_constants(g2.generate((S1, S2, 2 * S3)))
    bad = {m["pair"] for m in g2.verify_table(sc, ref)}
    assert "[S4,S5]" in bad


def test_seed_shift_by_inner_automorphism_keeps_table(ref):
    # S3 -> S3 + S1 is exp(ad L1/6): [L1, S3] = 6 S1 and L1 commutes with S1, S2,
    # so the shifted triple generates the same table
    S1, S2, S3 = seed_triple(builtin("flat_cartan"))
    i = g2.INDEX
    assert ref.coeff(i["L1"], i["S3"])[i["S1"]] == 6
    assert not any(ref.coeff(i["L1"], i["S1"])) and not any(ref.coeff(i["L1"], i["S2"]))
    sc = g2.structure_constants(g2.generate((S1, S2, S3 + S1)))
    assert g2.verify_table(sc, ref) == []


def test_verify_table_reports_parameters(flat_sc, ref):
    # a fake table with a parameter in one entry
    from g2cert.symcore import constant

    cctx = flat_sc.cctx.extend([constant("alpha")])
    table = {p: [cctx.lift(c) for c in v] for p, v in flat_sc.table.items()}
    table[(0, 1)] = list(table[(0, 1)])
    table[(0, 1)][3] = cctx.sym("alpha")
    fake = g2.StructureConstants(cctx, table, flat_sc.certificates)
    bad = g2.verify_table(fake, ref)
    assert len(bad) == 1 and bad[0]["pair"] == "[S1,S2]" and bad[0]["parameters"] == ["alpha"]


def test_jacobi(ref, flat_sc):
    assert g2.jacobi(ref)
    assert g2.jacobi(flat_sc)
    assert not g2.jacobi(g2.perturbed_table(ref, ("S1", "S2")))


def test_printed_table_errata(ref):
    printed = g2.reference_table(corrected=False)
    assert not g2.jacobi(printed)
    assert set(ref.errata) == {("h1", "L4")}
    i, j = g2.INDEX["h1"], g2.INDEX["L4"]
    assert ref.coeff(i, j)[j] == Fraction(-3, 2)
    assert printed.coeff(i, j)[j] == Fraction(3, 2)


def test_killing_form(ref):
    B, rank, sig = g2.killing_form(ref)
    assert rank == 14
    assert sig == (8, 6)
    assert all(B[i][j] == B[j][i] for i in range(14) for j in range(14))
    assert g2.killing_form(g2.abelian_table())[1] == 0


def test_cartan_weights(ref):
    w = g2.cartan_weights(ref)
    fig = g2.figure_weights(ref.cctx)
    assert len(w) == 12
    assert all(w[n] == fig[n] for n in g2.ROOTS)
    s3 = ref.cctx.sym("s3")
    assert w["S1"] == (1, 0)
    assert w["L2"] == (0, s3)
    assert w["S3"] == (Fraction(-1, 2), -s3 / 2)
    assert sum((v[0] for v in w.values()), ref.cctx.zero) == 0
    assert sum((v[1] for v in w.values()), ref.cctx.zero) == 0


def test_cartan_weights_not_eigen(ref):
    bad = dict(ref.table)
    i, j = g2.INDEX["h1"], g2.INDEX["S1"]
    vec = list(bad[(i, j)]) if (i, j) in bad else None
    i, j = sorted((i, j))
    vec = list(bad[(i, j)])
    vec[g2.INDEX["S2"]] = ref.cctx.one
    bad[(i, j)] = vec
    with pytest.raises(g2.NotEigen):
        g2.cartan_weights(g2.ReferenceTable(ref.cctx, bad, {}))


def test_sign_sqrt3(ref):
    ctx = ref.cctx
    s3 = ctx.sym("s3")
    assert g2.sign_sqrt3(2 - s3) == 1
    assert g2.sign_sqrt3(1 - s3) == -1
    assert g2.sign_sqrt3(-2 + s3) == -1
    assert g2.sign_sqrt3(ctx.zero) == 0
    with pytest.raises(ValueError):
        g2.sign_sqrt3(ctx.sym("_t"))


def test_signature_small(ref):
    ctx = ref.cctx
    one, zero = ctx.one, ctx.zero
    assert g2.signature([[zero, one], [one, zero]]) == (1, 1)
    assert g2.signature([[one, zero], [zero, 3 * one]]) == (2, 0)
