#include "helpers.hpp"

#include "vclink/energy_model.hpp"
#include "vclink/error.hpp"
#include "vclink/matrix_io.hpp"

#include <fstream>

using namespace vclink;

namespace {

SwitchingMatrix half_half()
{
    Matrix t(2, 2);
    t << 0.5, 0.5, 0.5, 0.5;
    return {t};
}

Matrix c2x2()
{
    Matrix c(2, 2);
    c << 100, 50, 50, 100;
    return c;
}

}  // namespace

TEST_CASE("template_2d_bus")
{
    const auto a = template_2d_bus(2, 100, 50, 1);
    CHECK(a.C == c2x2());
    const auto b = template_2d_bus(3, 0, 50, 1);
    CHECK(b.C(0, 0) == 0.0);
    CHECK(b.C(0, 1) == 50.0);
    CHECK(b.C(0, 2) == 0.0);
    const auto c = template_2d_bus(4, 100, 60, 2);
    CHECK(c.C(1, 3) == 30.0);
    CHECK(c.C(0, 3) == 0.0);
}

TEST_CASE("template_3d_tsv")
{
    const auto t = template_3d_tsv(2, 2, 40, -6, 30, -4);
    REQUIRE(t.width() == 4);
    for (int i = 0; i < 4; ++i) {
        int side = 0, diag = 0;
        for (int j = 0; j < 4; ++j) {
            if (i == j || t.C0(i, j) == 0.0) continue;
            (t.C0(i, j) == 40.0 ? side : diag) += 1;
        }
        CHECK(side == 2);
        CHECK(diag == 1);
    }
    const auto z = template_3d_tsv(2, 2, 40, 0, 30, 0);
    CHECK(z.dC.isZero());
    CHECK(template_3d_tsv(4, 4, 40, -6, 30, -4).width() == 16);
}

TEST_CASE("effective_tsv_capacitance")
{
    Capacitance3D m{Matrix::Constant(2, 2, 100), Matrix::Constant(2, 2, -20)};
    CHECK(effective_tsv_capacitance(m, Vector::Ones(2))(0, 1) == 60.0);
    CHECK(effective_tsv_capacitance(m, Vector::Zero(2)) == m.C0);
    CHECK(effective_tsv_capacitance(m, Vector::Constant(2, 0.5))(0, 1) == 80.0);
}

TEST_CASE("energy_2d")
{
    CHECK(energy_2d(half_half(), {c2x2()}) == doctest::Approx(150.0));
    CHECK(energy_2d(SwitchingMatrix::zero(2), {c2x2()}) == 0.0);
    Matrix diag = Matrix::Zero(3, 3);
    diag.diagonal() << 10, 20, 30;
    Matrix t = Matrix::Constant(3, 3, 0.7);
    t.diagonal() << 0.1, 0.2, 0.3;
    CHECK(energy_2d({t}, {diag}) == doctest::Approx(1 + 4 + 9));
}

TEST_CASE("energy_3d")
{
    const Matrix c0 = c2x2();
    SUBCASE("reduces to 2D without probability dependence")
    {
        const auto t = compute_sequential_switching(test::uniform(2, 1000, 1));
        const Capacitance3D m{c0, Matrix::Zero(2, 2)};
        CHECK(energy_3d(t, Vector::Constant(2, 0.3), m) == doctest::Approx(energy_2d(t, {c0})));
        const Capacitance3D d{c0, -0.2 * c0};
        CHECK(energy_3d(t, Vector::Zero(2), d) == doctest::Approx(energy_2d(t, {c0})));
    }
    SUBCASE("hand evaluation")
    {
        const Capacitance3D d{c0, -0.2 * c0};
        CHECK(energy_3d(half_half(), Vector::Ones(2), d) == doctest::Approx(90.0));
    }
}

TEST_CASE("capacitance files")
{
    test::TempDir dir("caps");
    const auto t3 = template_3d_tsv(4, 4, 40, -6, 30, -4);
    save_capacitance_model(dir.path / "c3.csv", t3);
    const auto back = load_capacitance_model(dir.path / "c3.csv", CapacitanceKind::Tsv3D);
    REQUIRE(std::holds_alternative<Capacitance3D>(back));
    CHECK(std::get<Capacitance3D>(back).C0 == t3.C0);
    CHECK(std::get<Capacitance3D>(back).dC == t3.dC);
    CHECK(width_of(back) == 16);

    write_matrix_csv(dir.path / "mm.ct0.csv", t3.C0, {});
    write_matrix_csv(dir.path / "mm.dct.csv", t3.dC.topLeftCorner(15, 15), {});
    CHECK_THROWS_WITH_AS(load_capacitance_model(dir.path / "mm", CapacitanceKind::Tsv3D),
                         doctest::Contains("dimension mismatch"), ValidationError);

    Matrix asym = c2x2();
    asym(0, 1) = 49;
    write_matrix_csv(dir.path / "asym.csv", asym, {});
    CHECK_THROWS_WITH_AS(load_capacitance_model(dir.path / "asym.csv", CapacitanceKind::Planar2D),
                         doctest::Contains("asymmetric capacitance matrix"), ValidationError);
}

TEST_CASE("TechnologyParams conversion")
{
    TechnologyParams t;
    CHECK(t.to_femtojoule(1000.0) == doctest::Approx(1.1 * 1.1 * 0.5));
    t.vdd = -1;
    CHECK_THROWS_AS(t.validate(), ValidationError);
}
