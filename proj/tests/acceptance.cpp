// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status is non-zero if any
// criterion fails. Tolerances are fixed here and nowhere else.

#include <geocorr/autocorr.hpp>
#include <geocorr/energy.hpp>
#include <geocorr/helmholtz.hpp>
#include <geocorr/region.hpp>
#include <geocorr/slope.hpp>
#include <geocorr/sphere.hpp>
#include <geocorr/variation.hpp>

#include "cli.hpp"
#include "oracles/closed_forms.hpp"
#include "oracles/spectral_s2.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

using namespace geocorr;
namespace orc = geocorr::oracle;

namespace {

constexpr double pi = std::numbers::pi;

// Pinned tolerances.
constexpr double kConstantsRel = 1e-12;
constexpr double kConstantsSeconds = 1.0;
constexpr double kSigmas = 4.0;
constexpr double kMatheronRel = 1e-12;
constexpr double kPerimeterRel = 0.02;
constexpr double kBvLimitRel = 0.02;
constexpr double kMollifierRel = 0.03;
constexpr double kMassAbs = 1e-8;
constexpr double kEigenRel = 1e-6;
constexpr double kSpectralRel = 1e-5;
constexpr double kM2Bound = 10.0;
constexpr double kKernelSeconds = 60.0;
constexpr double kGammaCritRel = 0.01;
constexpr double kPhiZeroRel = 1e-6;
constexpr double kPhiPiAbs = 1e-10;
constexpr double kPhiL1Rel = 1e-6;
constexpr double kHemisphereEnergyRel = 0.01;
constexpr double kGammaLimitRel = 0.03;
constexpr double kRescaleRel = 0.03;

constexpr std::int64_t kSamples = 10'000'000;
constexpr int kGrid = 513;
const std::vector<double> kSweep{0.16, 0.08, 0.04, 0.02};

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& s) {
        if (pass) detail += (detail.empty() ? "" : "; ") + s;
    }
};

std::string fmt(double v, const char* pattern = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

McConfig mc(std::uint64_t seed, std::int64_t samples = kSamples) {
    McConfig c;
    c.samples = samples;
    c.seed = seed;
    return c;
}

const SphereSpec s2(2);

struct Shared {
    std::map<int, AutocorrCurve> caps;  // keyed by 6a/pi
    std::map<int, Region> regions;
    std::map<double, RadialKernel> kernels;

    const AutocorrCurve& curve(int sixths) {
        auto it = caps.find(sixths);
        if (it == caps.end()) {
            regions.emplace(sixths, Region::cap({0, 0, 1}, sixths * pi / 6));
            it = caps.emplace(sixths, autocorr_estimate(s2, regions.at(sixths), kGrid, mc(100 + sixths))).first;
        }
        return it->second;
    }
    const Region& region(int sixths) {
        curve(sixths);
        return regions.at(sixths);
    }
    const RadialKernel& kernel(double eps) {
        auto it = kernels.find(eps);
        if (it == kernels.end()) it = kernels.emplace(eps, solve_kernel(s2, eps)).first;
        return it->second;
    }
};

Outcome constants() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int n = 2; n <= 12; ++n) {
        const auto f = sphere_volume_ratio_forms(n);
        const double ref = orc::volume_ratio(n);
        for (double v : {f.recursion, f.pi_ratio, f.gamma, sphere_volume_ratio(n)})
            worst = std::max(worst, std::abs(v / ref - 1.0));
    }
    o.require(worst <= kConstantsRel, "three forms agree, worst " + fmt(worst));
    o.require(std::abs(sphere_volume_ratio(2) / (2.0 / pi) - 1.0) <= kConstantsRel, "k_2 = 2/pi");
    o.require(std::abs(sphere_volume_ratio(3) / 0.5 - 1.0) <= kConstantsRel, "k_3 = 1/2");
    const double t = seconds_since(t0);
    o.require(t < kConstantsSeconds, "runtime " + fmt(t) + " s");
    o.note("worst relative spread " + fmt(worst) + ", " + fmt(t * 1e3) + " ms");
    return o;
}

Outcome hemisphere_curve(Shared& sh) {
    Outcome o;
    const AutocorrCurve& c = sh.curve(3);
    double worst_z = 0.0, worst_dev = 0.0, matheron = 0.0;
    for (std::size_t k = 0; k < c.values.size(); ++k) {
        const double dev = std::abs(c.values[k] - 2.0 * (pi - c.r_grid[k]));
        worst_dev = std::max(worst_dev, dev);
        const bool ok = dev <= kSigmas * c.std_errors[k] + 1e-12 * c.total_volume;
        if (c.std_errors[k] > 0) worst_z = std::max(worst_z, dev / c.std_errors[k]);
        o.require(ok, "grid point r = " + fmt(c.r_grid[k]));
        matheron = std::max(matheron, std::abs(2.0 * (c.values.front() - c.values[k]) - c.variation[k]));
    }
    o.require(matheron <= kMatheronRel * c.total_volume, "Matheron identity, worst " + fmt(matheron));
    o.require(c.samples >= kSamples, "sample count");
    o.note("samples " + std::to_string(c.samples) + ", max deviation " + fmt(worst_dev) + ", max z " + fmt(worst_z) +
           ", Matheron residual " + fmt(matheron));
    return o;
}

Outcome perimeter(Shared& sh) {
    Outcome o;
    const SlopeReport h = perimeter_from_curve(sh.curve(3), s2);
    const SlopeReport c = perimeter_from_curve(sh.curve(2), s2);
    const double ph = cap_perimeter(s2, pi / 2), pc = cap_perimeter(s2, pi / 3);
    o.require(std::abs(ph / (2 * pi) - 1.0) < 1e-12 && std::abs(pc / (pi * std::sqrt(3.0)) - 1.0) < 1e-12,
              "cap_perimeter oracle");
    const double eh = std::abs(h.perimeter / ph - 1.0), ec = std::abs(c.perimeter / pc - 1.0);
    o.require(eh <= kPerimeterRel, "hemisphere perimeter " + fmt(h.perimeter));
    o.require(ec <= kPerimeterRel, "cap perimeter " + fmt(c.perimeter));
    o.note("hemisphere " + fmt(h.perimeter, "%.8g") + " (rel " + fmt(eh) + "), cap pi/3 " + fmt(c.perimeter, "%.6g") +
           " +- " + fmt(c.perimeter_std_error, "%.2g") + " vs " + fmt(pc, "%.6g") + " (rel " + fmt(ec) + ")");
    return o;
}

Outcome bv_quotient() {
    Outcome o;
    // V[x_3] on S^2 by quadrature; the quotient limit is k_2 V = 2 pi.
    const double v = 2 * pi * orc::simpson([](double t) { return std::sin(t) * std::sin(t); }, 0.0, pi, 2000);
    o.require(std::abs(v / (pi * pi) - 1.0) < 1e-10, "quadrature of the variation");
    const double target = sphere_volume_ratio(2) * v;
    const std::vector<double> rs{0.4, 0.2, 0.1, 0.05};
    const LimitEstimate lim = variation_limit_smooth(s2, ScalarField::coordinate(2), rs, mc(41));
    const double e1 = std::abs(lim.value / target - 1.0);
    o.require(e1 <= kBvLimitRel, "x_3 limit " + fmt(lim.value));

    const ScalarField hemi = ScalarField::indicator(Region::cap({0, 0, 1}, pi / 2));
    const std::vector<double> hr{0.4, 0.2, 0.1, 0.05, 0.025};
    const VariationProfile p = variation_profile(s2, hemi, hr, mc(42));
    double worst_z = 0.0;
    for (std::size_t i = 0; i < hr.size(); ++i) {
        const double z = std::abs(p.quotient(i) - 4.0) / p.quotient_std_error(i);
        worst_z = std::max(worst_z, z);
        o.require(z <= kSigmas, "hemisphere Q at r = " + fmt(hr[i]));
    }
    const Estimate m = mollifier_variation(s2, ScalarField::coordinate(2), 0.1, mc(43));
    const double e2 = std::abs(m.value / target - 1.0);
    o.require(e2 <= kMollifierRel, "mollifier " + fmt(m.value));
    o.note("x_3 limit " + fmt(lim.value) + " vs " + fmt(target) + " (rel " + fmt(e1) + "), hemisphere max z " +
           fmt(worst_z) + ", mollifier " + fmt(m.value) + " (rel " + fmt(e2) + ")");
    return o;
}

Outcome kernel_identities(Shared& sh) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    double mass = 0.0, eig = 0.0, spectral = 0.0, m2 = 0.0;
    bool positive = true;
    for (double eps : kSweep) {
        const RadialKernel& k = sh.kernel(eps);
        mass = std::max(mass, std::abs(kernel_moment(k, 0) - 1.0));
        for (double val : k.values()) positive = positive && val >= 0.0;
        const double lam = 1.0 / (1.0 + 2.0 * eps * eps);
        eig = std::max(eig, std::abs(k.integrate([](double r) { return std::cos(r); }) / lam - 1.0));
        m2 = std::max(m2, kernel_moments(k).M2_scaled);
    }
    const RadialKernel k01 = solve_kernel(s2, 0.1);
    for (double r : {0.5, 1.0, 2.0}) spectral = std::max(spectral, std::abs(k01(r) / orc::spectral_kernel_s2(0.1, r) - 1.0));
    const double t = seconds_since(t0);
    o.require(mass <= kMassAbs, "M0 - 1 = " + fmt(mass));
    o.require(positive, "K >= 0 on the nodes");
    o.require(eig <= kEigenRel, "eigenfunction residual " + fmt(eig));
    o.require(spectral <= kSpectralRel, "spectral comparison " + fmt(spectral));
    o.require(m2 <= kM2Bound, "M2_scaled bound, max " + fmt(m2));
    o.require(t < kKernelSeconds, "runtime " + fmt(t) + " s");
    o.note("|M0-1| " + fmt(mass) + ", eigen " + fmt(eig) + ", spectral " + fmt(spectral) + ", max M2_scaled " + fmt(m2) +
           ", " + fmt(t) + " s");
    return o;
}

Outcome gamma_crit() {
    Outcome o;
    const GammaEpsSweep s = gamma_eps_sweep(s2, kSweep);
    const double e = std::abs(s.extrapolated - 1.0);
    o.require(e <= kGammaCritRel, "extrapolated gamma_crit " + fmt(s.extrapolated, "%.10g"));
    o.require(s.monotone, "|gamma_eps - 1| decreasing");
    std::string g;
    for (const auto& r : s.rows) g += (g.empty() ? "" : ", ") + fmt(r.gamma_eps, "%.8f");
    o.note("gamma_eps " + g + "; extrapolated " + fmt(s.extrapolated, "%.8f") + " (order " + fmt(s.order, "%.2f") + ")");
    return o;
}

Outcome integrated_kernel_identities(Shared& sh) {
    Outcome o;
    double z = 0.0, p = 0.0, l1 = 0.0;
    for (double eps : kSweep) {
        const RadialKernel& k = sh.kernel(eps);
        const IntegratedKernel phi = integrated_kernel(k);
        z = std::max(z, std::abs(phi.phi_at_zero * eps - 1.0));
        p = std::max(p, std::abs(phi.phi_at_pi));
        l1 = std::max(l1, std::abs(phi.L1_norm * sphere_volume_ratio(2) * gamma_eps(k) - 1.0));
    }
    o.require(z <= kPhiZeroRel, "Phi(0) eps - 1 = " + fmt(z));
    o.require(p <= kPhiPiAbs, "Phi(pi) = " + fmt(p));
    o.require(l1 <= kPhiL1Rel, "L1 norm " + fmt(l1));
    o.note("Phi(0) " + fmt(z) + ", Phi(pi) " + fmt(p) + ", L1 " + fmt(l1));
    return o;
}

Outcome decomposition(Shared& sh) {
    Outcome o;
    int cells = 0;
    double worst_ratio = 0.0;
    for (int sixths : {1, 2, 3})
        for (double gamma : {0.25, 0.5})
            for (double eps : kSweep) {
                const EnergyReport r = total_energy(s2, sh.region(sixths), sh.curve(sixths), sh.kernel(eps), gamma);
                ++cells;
                worst_ratio = std::max(worst_ratio, std::abs(r.decomposition_gap) / r.decomposition_tolerance);
                o.require(std::abs(r.decomposition_gap) <= r.decomposition_tolerance,
                          "a = " + std::to_string(sixths) + "pi/6, gamma " + fmt(gamma) + ", eps " + fmt(eps));
            }
    double worst_err = 0.0, worst_e = 0.0;
    for (double eps : kSweep) {
        const EnergyReport r = total_energy(s2, sh.region(3), sh.curve(3), sh.kernel(eps), 0.5);
        worst_err = std::max(worst_err, std::abs(r.error_term));
        o.require(std::abs(r.error_term) <= r.error_term_tolerance, "hemisphere error term at eps " + fmt(eps));
        const double e = std::abs(r.energy / (2 * pi * (1 - 0.5 / r.gamma_eps)) - 1.0);
        worst_e = std::max(worst_e, e);
        o.require(e <= kHemisphereEnergyRel, "hemisphere energy at eps " + fmt(eps));
    }
    o.note(std::to_string(cells) + " cells, worst |gap|/tol " + fmt(worst_ratio) + "; hemisphere |error term| " +
           fmt(worst_err) + ", energy rel " + fmt(worst_e));
    return o;
}

Outcome lower_bound(Shared& sh) {
    Outcome o;
    double worst = 0.0;
    for (int sixths : {1, 2, 3})
        for (double gamma : {0.25, 0.5})
            for (double eps : kSweep) {
                const EnergyReport r = total_energy(s2, sh.region(sixths), sh.curve(sixths), sh.kernel(eps), gamma);
                worst = std::min(worst, (r.energy - r.lower_bound) / r.lower_bound_tolerance);
                o.require(r.energy >= r.lower_bound - r.lower_bound_tolerance,
                          "a = " + std::to_string(sixths) + "pi/6, gamma " + fmt(gamma) + ", eps " + fmt(eps));
            }
    double sharp = 0.0;
    for (double eps : kSweep) {
        const EnergyReport r = total_energy(s2, sh.region(3), sh.curve(3), sh.kernel(eps), 0.5);
        sharp = std::max(sharp, std::abs(r.energy - r.lower_bound));
        o.require(std::abs(r.energy - r.lower_bound) <= r.lower_bound_tolerance, "hemisphere equality at eps " + fmt(eps));
    }
    o.note("most negative (E - LB)/tol " + fmt(worst) + ", hemisphere |E - LB| " + fmt(sharp));
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "geocorr_acceptance";
    std::filesystem::create_directories(dir);
    return dir / name;
}

Outcome gamma_limit() {
    Outcome o;
    const auto json_path = scratch("gamma_limit.json");
    std::ostringstream out, err;
    const int code = cli::run({"gamma-limit", "--dim", "2", "--region", "cap:a=1.0471976", "--gamma", "0.5", "--eps",
                               "0.16,0.08,0.04,0.02", "--samples", "10000000", "--seed", "7", "--json",
                               json_path.string()},
                              out, err);
    o.require(code == 0, "CLI exit " + std::to_string(code) + " " + err.str());
    if (code != 0) return o;
    const auto j = nlohmann::json::parse(slurp(json_path))["result"];
    const double ext = j["extrapolated_energy"].get<double>();
    const double target = 0.5 * pi * std::sqrt(3.0);
    const double e = std::abs(ext / target - 1.0);
    o.require(e <= kGammaLimitRel, "extrapolated " + fmt(ext));
    o.require(j["relative_gap"].get<double>() <= kGammaLimitRel, "reported relative gap");
    o.require(j["gap_decreasing"].get<bool>(), "gap decreasing along the sweep");
    std::string es;
    for (const auto& r : j["reports"]) es += (es.empty() ? "" : ", ") + fmt(r["energy"].get<double>());
    o.note("energies " + es + "; extrapolated " + fmt(ext) + " vs " + fmt(target) + " (rel " + fmt(e) + ")");
    return o;
}

Outcome rescaling(Shared& sh) {
    Outcome o;
    const double R = 2.0, gamma = 0.5;
    const Region& hemi = sh.region(3);
    const RescaledEnergy r = rescaled_energy(R, gamma, 0.08, s2, hemi, sh.curve(3));
    const double direct = 2.0 * total_energy(s2, hemi, sh.curve(3), sh.kernel(0.04), gamma).energy;
    o.require(r.energy == direct, "bit-exact R = 2 identity");
    const Region& cap = sh.region(2);
    std::vector<double> e;
    const std::vector<double> big_eps{0.32, 0.16, 0.08, 0.04};
    for (double eps : big_eps) e.push_back(rescaled_energy(R, gamma, eps, s2, cap, sh.curve(2)).energy);
    const double ext = extrapolate_first_order(big_eps[2], e[2], big_eps[3], e[3]);
    const double target = R * (1 - gamma) * cap_perimeter(s2, pi / 3);
    const double rel = std::abs(ext / target - 1.0);
    o.require(rel <= kRescaleRel, "extrapolated " + fmt(ext));
    o.note("R = 2: " + fmt(r.energy, "%.17g") + " == " + fmt(direct, "%.17g") + "; cap limit " + fmt(ext) + " vs " +
           fmt(target) + " (rel " + fmt(rel) + ")");
    return o;
}

Outcome determinism() {
    Outcome o;
    const std::vector<std::vector<std::string>> runs{
        {"gamma-limit", "--region", "cap:a=1.0471976", "--samples", "1000000", "--seed", "11", "--chunk", "16"},
        {"autocorr", "--region", "union(cap:a=0.5;cap:center=1,0,0,a=0.7)", "--samples", "1000000", "--seed", "11"},
        {"bv-quotient", "--field", "x3", "--samples", "200000", "--seed", "11", "--chunk", "4096"},
    };
    for (const auto& base : runs) {
        std::string bodies[3];
        for (int rep = 0; rep < 3; ++rep) {
            auto args = base;
            const auto json_path = scratch("det_" + std::to_string(rep) + ".json");
            args.insert(args.end(), {"--json", json_path.string(), "--workers", rep == 2 ? "3" : "1"});
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            o.require(code == 0, base.front() + " exit code");
            auto j = nlohmann::json::parse(slurp(json_path));
            j["config"].erase("workers");
            bodies[rep] = out.str() + j.dump();
        }
        o.require(bodies[0] == bodies[1], base.front() + " repeated run");
        o.require(bodies[0] == bodies[2], base.front() + " different worker count");
    }
    o.note("3 commands, CSV and JSON bodies identical across repeats and worker counts");
    return o;
}

}  // namespace

int main() {
    Shared shared;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"sphere volume ratio constants", constants},
        {"hemisphere autocorrelation and Matheron identity", [&] { return hemisphere_curve(shared); }},
        {"perimeter from the slope at zero", [&] { return perimeter(shared); }},
        {"difference quotient limit and mollifier", bv_quotient},
        {"Helmholtz kernel identities", [&] { return kernel_identities(shared); }},
        {"gamma_crit = 1", gamma_crit},
        {"integrated kernel", [&] { return integrated_kernel_identities(shared); }},
        {"energy decomposition", [&] { return decomposition(shared); }},
        {"pointwise lower bound", [&] { return lower_bound(shared); }},
        {"Gamma-limit shadow", gamma_limit},
        {"radius rescaling", [&] { return rescaling(shared); }},
        {"CLI determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::printf("%s criterion %2zu: %s [%.1f s] %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    seconds_since(t0), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
