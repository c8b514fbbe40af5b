#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flcheck/transfer.hpp"
#include "flcheck/verify.hpp"

namespace {

using namespace flcheck;

Rat parse_point(const std::string& s, int p) {
    // "shell:unit" meaning unit * p^{-shell}, or a plain rational "a/b"
    auto colon = s.find(':');
    if (colon != std::string::npos) {
        int shell = std::stoi(s.substr(0, colon));
        long unit = std::stol(s.substr(colon + 1));
        Rat x(unit);
        if (shell >= 0) x /= Rat(mpz_class(ipow(p, shell)));
        else x *= Rat(mpz_class(ipow(p, -shell)));
        return x;
    }
    Rat x;
    if (x.set_str(s, 10) != 0) throw ConfigError("bad rational: " + s);
    x.canonicalize();
    return x;
}

void print_scalar(const std::string& label, const ExactScalar& v) {
    auto z = v.embed();
    std::cout << label << " = " << v.str() << "   ~ (" << z.real() << ", " << z.imag()
              << ")\n";
}

int run_verify(const VerificationConfig& cfg) {
    VerificationReport report = verify_type(cfg);
    std::cout << emit_report(report, cfg.format);
    return report.all_equal() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact verification of rank-one fundamental lemmas"};
    app.require_subcommand(1);

    // ---- verify
    auto* verify = app.add_subcommand("verify", "run the pointwise fundamental-lemma check");
    std::string type_str = "A";
    VerificationConfig cfg;
    std::string shells = "-4..4";
    std::string format = "text";
    std::string perturb = "none";
    verify->add_option("--type", type_str, "spherical type A|B|C|D")->required();
    verify->add_option("--n", cfg.n, "rank parameter (>= 2)")->required();
    verify->add_option("--p", cfg.p, "odd prime residue cardinality")->required();
    verify->add_option("--prec", cfg.prec, "working precision K");
    verify->add_option("--shells", shells, "shell range LO..HI for |x| = q^shell");
    verify->add_option("--units", cfg.units, "units sampled per shell");
    verify->add_option("--format", format, "text|json|csv");
    verify->add_option("--seed", cfg.seed, "unit sampling seed");
    verify->add_option("--jobs", cfg.jobs, "worker threads (FLCHECK_JOBS overrides)");
    verify->add_option("--perturb", perturb,
                       "negative controls: none|constant|psi|iwasawa");

    // ---- eval-sum
    auto* esum = app.add_subcommand("eval-sum", "evaluate an exponential sum");
    std::string sum_kind, sum_point = "0:1";
    int sum_p = 3;
    int sum_level = 0;
    esum->add_option("--kind", sum_kind, "gauss|kloosterman|salie|count|dualgauss")->required();
    esum->add_option("--p", sum_p)->required();
    esum->add_option("--point", sum_point, "shell:unit or rational");
    esum->add_option("--level", sum_level, "enumeration level (0 = automatic)");

    // ---- eval-basic
    auto* ebasic = app.add_subcommand("eval-basic", "evaluate a basic-vector density");
    std::string basic_type = "A", basic_point = "0:1";
    int basic_p = 3, basic_n = 2, basic_trunc = -1;
    ebasic->add_option("--type", basic_type)->required();
    ebasic->add_option("--n", basic_n)->required();
    ebasic->add_option("--p", basic_p)->required();
    ebasic->add_option("--point", basic_point);
    ebasic->add_option("--series", basic_trunc, "also evaluate the series oracle to this cutoff");

    // ---- eval-orbital
    auto* eorb = app.add_subcommand("eval-orbital", "evaluate a Weil-side orbital integral");
    std::string orb_type = "A", orb_point = "0:1";
    int orb_p = 3, orb_n = 2;
    bool orb_center = false;
    eorb->add_option("--type", orb_type)->required();
    eorb->add_option("--n", orb_n)->required();
    eorb->add_option("--p", orb_p)->required();
    eorb->add_option("--point", orb_point);
    eorb->add_flag("--center", orb_center, "apply the center integration (types A, C)");

    // ---- eval-transfer
    auto* etr = app.add_subcommand("eval-transfer", "evaluate transfer-side quantities");
    std::string tr_what = "composite", tr_type = "A", tr_point = "0:1";
    int tr_p = 3, tr_n = 2;
    etr->add_option("--what", tr_what, "composite|kloo-rule|b-pipeline")->required();
    etr->add_option("--type", tr_type);
    etr->add_option("--n", tr_n);
    etr->add_option("--p", tr_p)->required();
    etr->add_option("--point", tr_point);

    // ---- constants
    auto* econst = app.add_subcommand("constants", "print the theorem constant");
    std::string const_type = "A";
    int const_p = 3, const_n = 2;
    econst->add_option("--type", const_type)->required();
    econst->add_option("--n", const_n)->required();
    econst->add_option("--p", const_p)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (verify->parsed()) {
            cfg.type = type_from_letter(type_str.at(0));
            auto dots = shells.find("..");
            if (dots == std::string::npos) throw ConfigError("bad shell range");
            cfg.shell_lo = std::stoi(shells.substr(0, dots));
            cfg.shell_hi = std::stoi(shells.substr(dots + 2));
            if (format == "json") cfg.format = ReportFormat::Json;
            else if (format == "csv") cfg.format = ReportFormat::Csv;
            else if (format == "text") cfg.format = ReportFormat::Text;
            else throw ConfigError("bad format: " + format);
            if (perturb == "none") cfg.perturb = Perturbation::None;
            else if (perturb == "constant") cfg.perturb = Perturbation::Constant;
            else if (perturb == "psi") cfg.perturb = Perturbation::Psi;
            else if (perturb == "iwasawa") cfg.perturb = Perturbation::Iwasawa;
            else throw ConfigError("bad perturbation: " + perturb);
            return run_verify(cfg);
        }
        if (esum->parsed()) {
            Rat x = parse_point(sum_point, sum_p);
            if (sum_kind == "gauss") {
                print_scalar("closed", gauss_quadratic_rat(x, sum_p));
                print_scalar("enum", gauss_quadratic_enum_rat(x, sum_p, sum_level));
            } else if (sum_kind == "kloosterman") {
                print_scalar("value", kloosterman_pgl2_rat(x, sum_p, sum_level));
            } else if (sum_kind == "salie") {
                print_scalar("value", salie_sl2_rat(x, sum_p, sum_level));
            } else if (sum_kind == "count") {
                long alpha = static_cast<long>(mpz_class(x.get_num()).get_si());
                std::cout << "count = " << count_quadric_pairs(alpha, sum_p) << "\n";
            } else if (sum_kind == "dualgauss") {
                long u = static_cast<long>(mpz_class(x.get_num()).get_si());
                print_scalar("value", dual_gauss_product_check(u, sum_p));
            } else {
                throw ConfigError("unknown sum kind: " + sum_kind);
            }
            return 0;
        }
        if (ebasic->parsed()) {
            LValueSpec spec = LValueSpec::standard(type_from_letter(basic_type.at(0)), basic_n);
            Rat x = parse_point(basic_point, basic_p);
            if (spec.dual == DualGroup::SL2) {
                print_scalar("closed", basic_std2(basic_p, x, spec.s1, spec.s2));
                if (basic_trunc >= 0)
                    print_scalar("series",
                                 basic_std2_series(basic_p, x, spec.s1, spec.s2, basic_trunc));
            } else {
                print_scalar("closed", basic_ad(basic_p, x, spec.s0));
                if (basic_trunc >= 0)
                    print_scalar("series", basic_ad_series(basic_p, x, spec.s0, basic_trunc));
            }
            return 0;
        }
        if (eorb->parsed()) {
            SphericalType t = type_from_letter(orb_type.at(0));
            Rat x = parse_point(orb_point, orb_p);
            if (orb_center) {
                if (t == SphericalType::A)
                    print_scalar("center integral", center_integral_A(orb_p, x, orb_n));
                else if (t == SphericalType::C)
                    print_scalar("center integral", center_integral_C(orb_p, x, orb_n));
                else throw ConfigError("center integration applies to types A and C");
                return 0;
            }
            HermitianModel model = HermitianModel::for_type(t, orb_n);
            BallFunction phi0 = BallFunction::unit_lattice(orb_p, model.d);
            OrbitalPoint pt = (t == SphericalType::A)
                ? OrbitalPoint::gl2(x, Rat(1))
                : (t == SphericalType::C ? OrbitalPoint::sp(x) : OrbitalPoint::sl2(x));
            WhittakerResult w = regularized_whittaker(model, phi0, pt);
            print_scalar("orbital", w.value);
            std::cout << "k_stab = " << w.k_stab << "\n";
            return 0;
        }
        if (etr->parsed()) {
            Rat x = parse_point(tr_point, tr_p);
            if (tr_what == "kloo-rule") {
                print_scalar("rule", fourier_kloo_rule(tr_p, x));
                print_scalar("enum", fourier_kloo_enum(tr_p, x));
            } else if (tr_what == "b-pipeline") {
                print_scalar("F(f1)", b_pipeline_F_f1(tr_p, tr_n, x));
                print_scalar("F(f2)", b_pipeline_F_f2(tr_p, tr_n, x));
                print_scalar("pipeline", b_pipeline_value(tr_p, tr_n, x));
            } else if (tr_what == "composite") {
                CompositeRelation rel = composite_relation(type_from_letter(tr_type.at(0)));
                ExactScalar lhs = rel.apply_lhs(tr_p, tr_n, x);
                ExactScalar rhs = rel.apply_rhs(tr_p, tr_n, x);
                print_scalar("lhs", lhs);
                print_scalar("rhs", rhs);
                std::cout << (lhs == rhs ? "equal\n" : "MISMATCH\n");
                return lhs == rhs ? 0 : 1;
            } else {
                throw ConfigError("unknown transfer evaluation: " + tr_what);
            }
            return 0;
        }
        if (econst->parsed()) {
            SphericalType t = type_from_letter(const_type.at(0));
            ExactScalar c = fl_constant(t, const_n, const_p);
            ExactScalar cc = fl_constant_closed(t, const_n, const_p);
            print_scalar("constant", c);
            print_scalar("closed form", cc);
            std::cout << (c == cc ? "consistent\n" : "MISMATCH\n");
            return c == cc ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
