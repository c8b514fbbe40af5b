#pragma once

#include <string>
#include <vector>

#include "flcheck/lfactor.hpp"
#include "flcheck/weilorbit.hpp"

namespace flcheck {

enum class Perturbation { None, Constant, Psi, Iwasawa };
enum class ReportFormat { Text, Json, Csv };

struct VerificationConfig {
    SphericalType type = SphericalType::A;
    int n = 2;
    int p = 3;
    int prec = 10;           // K
    int shell_lo = -4, shell_hi = 4;
    int units = 3;
    int jobs = 1;
    ReportFormat format = ReportFormat::Text;
    unsigned long seed = 1;
    Perturbation perturb = Perturbation::None;

    void validate() const; // throws ConfigError
};

struct VerificationRecord {
    int shell = 0;
    long long unit = 1;
    ExactScalar lhs, rhs;
    bool equal = false;
    int k_stab = 0;
    double elapsed_sec = 0.0;
};

struct VerificationReport {
    VerificationConfig config;
    std::vector<VerificationRecord> records;
    int total() const { return static_cast<int>(records.size()); }
    int passed() const;
    bool all_equal() const { return passed() == total(); }
};

// theorem constant q^{dim X}/(#X(kappa) zeta(2) zeta(s_X))
ExactScalar fl_constant(SphericalType type, int n, int q);
// the per-type closed forms it must specialize to
ExactScalar fl_constant_closed(SphericalType type, int n, int q);

// deterministic unit sample: powers of a fixed primitive root mod p^K
std::vector<long long> sample_units(int p, int prec, int count, unsigned long seed);

// one grid point: the Weil-orbital side and the transfer side of the
// fundamental lemma at xi = unit * p^{-shell}
VerificationRecord verify_point(const VerificationConfig& cfg, int shell, long long unit);

VerificationReport verify_type(const VerificationConfig& cfg);

std::string emit_report(const VerificationReport& report, ReportFormat format);

} // namespace flcheck
