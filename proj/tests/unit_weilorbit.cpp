#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flcheck/weilorbit.hpp"

using namespace flcheck;

namespace {
Rat shell_point(int p, int shell, long unit) {
    if (shell >= 0) return Rat(unit, mpz_class(ipow(p, shell)));
    return Rat(unit) * Rat(mpz_class(ipow(p, -shell)));
}

// closed forms of the four-branch GL_n orbital
ExactScalar lem_basic_A(int p, const Rat& t1, const Rat& t2, int n) {
    long long v1 = val_p(t1, p), v2 = val_p(t2, p);
    ExactScalar mod = ExactScalar::q_pow(p, HalfInt(static_cast<int>(v1 - v2) * n));
    ExactScalar qn = ExactScalar(ball_volume(p, n));
    if (v1 <= 0 && v2 >= 0) return mod * (ExactScalar::one() - qn);
    if (v1 <= 0 && v2 == -1) return -(mod * qn);
    if (v1 == 1 && v2 >= 0) return -(mod * qn);
    if (v1 > 0 && v2 < 0 && v1 == -v2) {
        // int_{|x|^2 = |t2/t1|} psi^{-1}(1/(x t1/t2) + x) dx
        Rat r = t1 / t2;
        int m = static_cast<int>(val_p(r, p)) / 2;
        ShellDomain dom{p, -m, 2 * std::abs(m) + 2};
        ExactScalar sum = ExactScalar::zero();
        dom.for_each([&](const Rat& x) { sum += psi_rat(-(1 / (x * r) + x), p); });
        return sum * ExactScalar(dom.weight());
    }
    return ExactScalar::zero();
}
} // namespace

TEST_CASE("type A orbital matches the closed branch table") {
    for (int p : {3, 5}) {
        HermitianModel model = HermitianModel::standard(DTag::FxF, 2);
        BallFunction phi0 = BallFunction::unit_lattice(p, model.d);
        for (int n : {2, 3}) {
            HermitianModel m2 = HermitianModel::standard(DTag::FxF, n);
            BallFunction f2 = BallFunction::unit_lattice(p, m2.d);
            for (int v1 : {-2, -1, 0, 1, 2})
                for (int v2 : {-2, -1, 0, 1, 2})
                    for (long u : {1L, 2L}) {
                        Rat t1 = shell_point(p, -v1, u); // val(t1) = v1
                        Rat t2 = shell_point(p, -v2, 1);
                        WhittakerResult w =
                            regularized_whittaker(m2, f2, OrbitalPoint::gl2(t1, t2));
                        CHECK(w.value == lem_basic_A(p, t1, t2, n));
                    }
        }
        (void)phi0;
        (void)model;
    }
}

TEST_CASE("type D orbital branches") {
    for (int p : {3, 5})
        for (int n : {2, 3}) {
            HermitianModel model = HermitianModel::for_type(SphericalType::D, n);
            BallFunction phi0 = BallFunction::unit_lattice(p, model.d);
            for (int shell : {2, 1, 0}) { // |zeta| >= 1
                Rat z = shell_point(p, shell, 2);
                WhittakerResult w = regularized_whittaker(model, phi0, OrbitalPoint::sl2(z));
                ExactScalar expect = ExactScalar::q_pow(p, HalfInt::whole(static_cast<int>(val_p(z, p)) * n)) *
                                     (ExactScalar::one() - ExactScalar(ball_volume(p, n)));
                CHECK(w.value == expect);
            }
            // germ branch: int_{|x| = |zeta|^{-1}} psi^{-1}(1/(x zeta^2) + x) dx
            for (int shell : {-1, -2}) {
                Rat z = shell_point(p, shell, 1);
                WhittakerResult w = regularized_whittaker(model, phi0, OrbitalPoint::sl2(z));
                int v = static_cast<int>(val_p(z, p));
                ShellDomain dom{p, -v, 3 * v + 2};
                ExactScalar sum = ExactScalar::zero();
                dom.for_each([&](const Rat& x) { sum += psi_rat(-(1 / (x * z * z) + x), p); });
                CHECK(w.value == sum * ExactScalar(dom.weight()));
            }
        }
}

TEST_CASE("type B orbital equals the closed form") {
    for (int p : {3, 5})
        for (int n : {2, 3}) {
            HermitianModel model = HermitianModel::for_type(SphericalType::B, n);
            BallFunction phi0 = BallFunction::unit_lattice(p, model.d);
            for (int shell = -2; shell <= 2; ++shell)
                for (long u : {1L, 2L}) {
                    Rat z = shell_point(p, shell, u);
                    WhittakerResult w = regularized_whittaker(model, phi0, OrbitalPoint::sl2(z));
                    CHECK(w.value == orbital_closed_b(p, z, n));
                }
        }
}

TEST_CASE("stabilization index depends only on the test function") {
    int p = 3, n = 2;
    HermitianModel model = HermitianModel::for_type(SphericalType::D, n);
    BallFunction phi0 = BallFunction::unit_lattice(p, model.d);
    int k0 = regularized_whittaker(model, phi0, OrbitalPoint::sl2(Rat(1))).k_stab;
    for (int shell : {0, 1, 2})
        for (long u : {1L, 2L}) {
            int k = regularized_whittaker(model, phi0, OrbitalPoint::sl2(shell_point(p, shell, u)))
                        .k_stab;
            CHECK(k <= std::max(k0, 2));
        }
}

TEST_CASE("weil generator actions") {
    int p = 3, n = 2;
    HermitianModel model = HermitianModel::for_type(SphericalType::D, n);
    BallFunction phi0 = BallFunction::unit_lattice(p, model.d);
    // scalar
    BallFunction zphi = weil_act(model, GenScalar{ExactScalar(Rat(5))}, phi0);
    CHECK(zphi.eval(std::vector<Rat>(model.d, Rat(0))) == ExactScalar(Rat(5)));
    // unit torus preserves the lattice
    CHECK(weil_act(model, GenTorus{OrbitalPoint::sl2(Rat(2))}, phi0) == phi0);
    // Weyl element fixes the self-dual lattice
    CHECK(weil_act(model, GenWeyl{}, phi0) == phi0);
    // Weyl twice is the sign flip (trivial on the symmetric lattice)
    BallFunction shifted(p, model.d);
    {
        std::vector<Ball> axes(model.d, Ball{Rat(0), 0});
        axes[0] = Ball{Rat(1, 3), 1};
        shifted.add_term(axes, ExactScalar::one());
    }
    BallFunction w2 = weil_act(model, GenWeyl{}, weil_act(model, GenWeyl{}, shifted));
    // omega(w)^2 phi (y) = phi(-y)
    std::vector<Rat> at(model.d, Rat(0));
    at[0] = Rat(-1, 3);
    CHECK(w2.eval(at) == ExactScalar::one());
    // unipotent twist multiplies by psi(u Q(center)) on refined cosets
    BallFunction uphi = weil_act(model, GenUnipotent{Rat(1, 3)}, phi0);
    std::vector<Rat> pt(model.d, Rat(0));
    pt[0] = 1;
    pt[model.d - 1] = 1; // Q = 1
    CHECK(uphi.eval(pt) == psi_rat(Rat(1, 3), p));
    CHECK_THROWS_AS((void)weil_act(model, GenUnipotent{Rat(1, mpz_class(ipow(3, 12)))}, phi0),
                    PrecisionLoss);
}

TEST_CASE("orbital masses match tamagawa numbers") {
    for (int p : {3, 5}) {
        for (int n : {2, 3}) {
            // type A
            HermitianModel ma = HermitianModel::for_type(SphericalType::A, n);
            CHECK(orbital_mass(ma, BallFunction::unit_lattice(p, ma.d)) ==
                  ExactScalar::one() - ExactScalar(ball_volume(p, n)));
            // type D
            HermitianModel md = HermitianModel::for_type(SphericalType::D, n);
            CHECK(orbital_mass(md, BallFunction::unit_lattice(p, md.d)) ==
                  ExactScalar::one() - ExactScalar(ball_volume(p, n)));
        }
        // type C at n = 2
        HermitianModel mc = HermitianModel::for_type(SphericalType::C, 2);
        CHECK(orbital_mass(mc, BallFunction::unit_lattice(p, mc.d)) ==
              ExactScalar::one() - ExactScalar(ball_volume(p, 4)));
    }
}

TEST_CASE("orbital integral on disjoint support vanishes") {
    int p = 3;
    HermitianModel model = HermitianModel::for_type(SphericalType::D, 2);
    BallFunction phi(p, model.d);
    std::vector<Ball> axes(model.d, Ball{Rat(0), 2}); // deep ball: Q(v) in p^2 o
    phi.add_term(axes, ExactScalar::one());
    CHECK(orbital_I(model, phi, DElem::scalar(DTag::F, Rat(1, 3)), 8).is_zero());
    CHECK_THROWS_AS((void)orbital_I(model, phi, DElem::scalar(DTag::F, Rat(2)), 8),
                    SingularFiber);
}

TEST_CASE("point counts") {
    CHECK(count_sp(1, 3) == 24);
    CHECK(count_sp(2, 3) == mpz_class(3 * 3 * 3 * 3) * 8 * 80);
    CHECK(count_gl(2, 3) == (9 - 1) * (9 - 3));
    // brute force #Sp_2(kappa) = #SL_2(kappa) for q = 3
    {
        int q = 3;
        long count = 0;
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b)
                for (int c = 0; c < q; ++c)
                    for (int d = 0; d < q; ++d)
                        if (((a * d - b * c) % q + q) % q == 1) ++count;
        CHECK(mpz_class(count) == count_sp(1, 3));
    }
    TamagawaData ta = tamagawa_and_counts(SphericalType::A, 2, 3);
    CHECK(ta.tau_Xbar == ExactScalar(Rat(4, 3)));
    TamagawaData tc = tamagawa_and_counts(SphericalType::C, 2, 3);
    ExactScalar expect = ExactScalar(Rat(1) - Rat(1, 81)) *
                         ExactScalar(Rat(1) - Rat(1, 9)).quad_inverse();
    CHECK(tc.tau_Xbar == expect);
    TamagawaData td = tamagawa_and_counts(SphericalType::D, 2, 3);
    CHECK(td.points_Xbar == 27 - 3);
}

TEST_CASE("center integral A at the five branch points") {
    int p = 3, n = 2;
    ExactScalar pref = ExactScalar(Rat(1) - Rat(1, p));
    // |xi| = q^{-1}: (1-q^{-1})(-2 q^{-n/2})
    CHECK(center_integral_A(p, Rat(3), n) == pref * ExactScalar(Rat(-2, 3)));
    // |xi| = 1: (1-q^{-1})(1 - 3 q^{-n})
    CHECK(center_integral_A(p, Rat(1), n) ==
          pref * (ExactScalar::one() - ExactScalar(Rat(3, 9))));
    // |xi| = q: log branch value (1-1/q) q^{-n/2} ((1-q^{-n}) + (1-3q^{-n}))
    ExactScalar expect = pref * ExactScalar(Rat(1, 3)) *
                         ((ExactScalar::one() - ExactScalar(Rat(1, 9))) +
                          ExactScalar::one() - ExactScalar(Rat(3, 9)));
    CHECK(center_integral_A(p, Rat(1, 3), n) == expect);
    // odd germ shell: zero
    CHECK(center_integral_A(p, Rat(27), n).is_zero());
    // even germ shell: (1-1/q) |xi|^{-1} K(xi)
    Rat xi(9);
    CHECK(center_integral_A(p, xi, n) ==
          pref * ExactScalar(Rat(9)) * kloosterman_pgl2_rat(xi, p));
}

TEST_CASE("center integral C branch table") {
    int p = 3, n = 2;
    ExactScalar iwafac = ExactScalar(Rat(1) - Rat(1, p * p)) *
                         ExactScalar(Rat(1) - Rat(p)).quad_inverse();
    // |xi| = q^{-1}: (1-q^{-2})/(1-q) (-q^{-n} + q^{-n+2})
    ExactScalar expect = iwafac * (ExactScalar(Rat(-1, 9)) + ExactScalar::one());
    CHECK(center_integral_C(p, Rat(3), n) == expect);
    // |xi| = 1 branch of the closed form
    ExactScalar b1 = iwafac * ((ExactScalar::one() - ExactScalar(Rat(1, 81))) -
                               ExactScalar(Rat(3)) * (ExactScalar::one() - ExactScalar(Rat(1, 9))));
    CHECK(center_integral_C(p, Rat(1), n) == b1);
    // germ: (1-q^{-2}) int_{|u| = |xi|^{-1/2}} psi^{-1}(1/(xi u) + u) du
    Rat xi(9);
    ShellDomain dom{p, -1, 4};
    ExactScalar sum = ExactScalar::zero();
    dom.for_each([&](const Rat& u) { sum += psi_rat(-(1 / (xi * u) + u), p); });
    ExactScalar germ = ExactScalar(Rat(1) - Rat(1, 9)) * sum * ExactScalar(dom.weight());
    CHECK(center_integral_C(p, xi, n) == germ);
}
