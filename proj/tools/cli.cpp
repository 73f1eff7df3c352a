#include "cli.hpp"

#include <geocorr/autocorr.hpp>
#include <geocorr/energy.hpp>
#include <geocorr/errors.hpp>
#include <geocorr/format.hpp>
#include <geocorr/helmholtz.hpp>
#include <geocorr/region.hpp>
#include <geocorr/simd.hpp>
#include <geocorr/slope.hpp>
#include <geocorr/sphere.hpp>
#include <geocorr/variation.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

namespace geocorr::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

// Shortest round-trip text, so CSV bodies are stable across platforms.
std::string num(double v) { return format_double(v); }

json opt_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    try {
        return parse_double_list(text, flag);
    } catch (const std::exception& e) {
        throw UsageError(flag, e.what());
    }
}

std::uint64_t parse_seed(std::string_view text, const std::string& flag) {
    text = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        throw UsageError(flag, "expected a non-negative integer, got '" + std::string(text) + "'");
    return v;
}

void require_decreasing(const std::vector<double>& v, const std::string& flag) {
    if (v.empty()) throw UsageError(flag, "needs at least one value");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw UsageError(flag, "values must be positive and finite");
        if (i > 0 && !(v[i] < v[i - 1])) throw UsageError(flag, "values must be strictly decreasing");
    }
}

template <class T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

// ---- command plumbing -----------------------------------------------------

struct Output {
    std::string csv;
    json result = json::object();
};

class CsvTable {
public:
    explicit CsvTable(std::string header) { text_ = std::move(header) + '\n'; }
    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) text_ += ',';
            text_ += num(v);
            first = false;
        }
        text_ += '\n';
    }
    void pair(const std::string& name, double v) { text_ += name + ',' + num(v) + '\n'; }
    std::string str() const { return text_; }

private:
    std::string text_;
};

McConfig mc_config(const ExperimentConfig& c) {
    McConfig mc;
    mc.samples = c.samples;
    mc.seed = *c.seed;
    mc.workers = c.workers;
    mc.chunk_size = c.chunk;
    return mc;
}

FitConfig fit_config(const ExperimentConfig& c) {
    FitConfig f;
    f.r_min = c.r_min;
    f.r_max = c.r_max;
    f.richardson = c.richardson;
    return f;
}

Region region_of(const ExperimentConfig& c) {
    try {
        return parse_region(c.region, c.dim);
    } catch (const std::exception& e) {
        throw UsageError("--region", e.what());
    }
}

void check_volume_constraint(const ExperimentConfig& c, const SphereSpec& sphere, const Region& region) {
    if (!c.volume_constraint) return;
    const double theta = *c.volume_constraint;
    const double total = sphere.volume();
    if (!(theta > 0.0) || !(theta < total))
        throw UsageError("--volume-constraint", "must lie in (0, " + num(total) + "), got " + num(theta));
    if (const auto vol = region.analytic_volume(sphere)) {
        if (std::abs(*vol - theta) > 1e-9 * total)
            throw UsageError("--volume-constraint", "region volume " + num(*vol) + " differs from " + num(theta));
    }
}

void require_unit_radius(const ExperimentConfig& c) {
    if (c.radius != 1.0)
        throw UsageError("--radius", "this command works on the unit sphere; use 'rescale' for other radii");
}

double single_eps(const ExperimentConfig& c) {
    if (c.eps.size() != 1) throw UsageError("--eps", "this command takes exactly one value");
    return c.eps.front();
}

json curve_summary(const AutocorrCurve& curve) {
    return {{"n", curve.n},
            {"radius", curve.radius},
            {"region", curve.region_label},
            {"total_volume", curve.total_volume},
            {"volume_estimate", curve.volume_estimate()},
            {"volume_std_error", curve.std_errors.front()},
            {"grid_points", curve.r_grid.size()},
            {"samples", curve.samples},
            {"orbits", curve.orbits},
            {"orbit_points", curve.orbit_points},
            {"seed", curve.seed}};
}

json energy_json(const EnergyReport& r) {
    return {{"gamma", r.gamma},
            {"eps", r.eps},
            {"gamma_eps", r.gamma_eps},
            {"perimeter", r.perimeter},
            {"perimeter_std_error", r.perimeter_std_error},
            {"perimeter_analytic", r.perimeter_analytic},
            {"nonlocal_term", r.nonlocal_term},
            {"nonlocal_std_error", r.nonlocal_std_error},
            {"energy", r.energy},
            {"energy_std_error", r.energy_std_error},
            {"lower_bound", r.lower_bound},
            {"error_term", r.error_term},
            {"error_term_std_error", r.error_term_std_error},
            {"slope_at_zero", r.slope_at_zero},
            {"decomposition_energy", r.decomposition_energy},
            {"decomposition_gap", r.decomposition_gap},
            {"decomposition_tolerance", r.decomposition_tolerance},
            {"error_term_tolerance", r.error_term_tolerance},
            {"lower_bound_tolerance", r.lower_bound_tolerance},
            {"finite_difference_error", r.finite_difference_error},
            {"consistent", r.consistent},
            {"supercritical", r.supercritical}};
}

constexpr const char* kEnergyHeader = "eps,gamma,gamma_eps,perimeter,nonlocal_term,energy,lower_bound,error_term";

void energy_row(CsvTable& t, const EnergyReport& r, double eps, double scale) {
    t.row({eps, r.gamma, r.gamma_eps, scale * r.perimeter, scale * r.nonlocal_term, scale * r.energy,
           scale * r.lower_bound, scale * r.error_term});
}

ScalarField field_of(const ExperimentConfig& c) {
    const std::string& f = c.field;
    try {
        if (f.size() >= 2 && f[0] == 'x') {
            const double idx = parse_double(std::string_view(f).substr(1), "--field");
            const int i = static_cast<int>(idx);
            if (idx != static_cast<double>(i) || i < 1 || i > c.dim + 1)
                throw UsageError("--field", "coordinate index must be an integer in 1.." + std::to_string(c.dim + 1));
            return ScalarField::coordinate(i - 1);
        }
        if (f.rfind("const:", 0) == 0) return ScalarField::constant(parse_double(f.substr(6), "--field"));
        if (f.rfind("indicator:", 0) == 0) return ScalarField::indicator(parse_region(f.substr(10), c.dim));
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError("--field", e.what());
    }
    throw UsageError("--field", "expected x<i>, const:<c> or indicator:<region>, got '" + f + "'");
}

// ---- commands -------------------------------------------------------------

Output cmd_constants(const ExperimentConfig& c) {
    const int n = c.dim;
    const auto forms = sphere_volume_ratio_forms(n);
    const SphereSpec sphere(n, c.radius);
    CsvTable t("quantity,value");
    Output o;
    const std::vector<std::pair<std::string, double>> rows{
        {"sigma_" + std::to_string(n - 1), sphere_surface_volume(n - 1)},
        {"sigma_" + std::to_string(n), sphere_surface_volume(n)},
        {"k_" + std::to_string(n), sphere_volume_ratio(n)},
        {"k_" + std::to_string(n) + "_recursion", forms.recursion},
        {"k_" + std::to_string(n) + "_pi_ratio", forms.pi_ratio},
        {"k_" + std::to_string(n) + "_gamma", forms.gamma},
        {"volume", sphere.volume()}};
    for (const auto& [name, v] : rows) {
        t.pair(name, v);
        o.result[name] = v;
    }
    o.csv = t.str();
    return o;
}

AutocorrCurve curve_for(const ExperimentConfig& c, const SphereSpec& sphere, const Region& region) {
    return autocorr_estimate(sphere, region, c.grid, mc_config(c));
}

Output cmd_autocorr(const ExperimentConfig& c) {
    const SphereSpec sphere(c.dim, c.radius);
    const Region region = region_of(c);
    check_volume_constraint(c, sphere, region);
    const AutocorrCurve curve = curve_for(c, sphere, region);
    CsvTable t("r,c,stderr");
    for (std::size_t k = 0; k < curve.r_grid.size(); ++k)
        t.row({curve.r_grid[k], curve.values[k], curve.std_errors[k]});
    Output o;
    o.csv = t.str();
    o.result = curve_summary(curve);
    o.result["analytic_volume"] = opt_num(region.analytic_volume(sphere));
    o.result["r"] = curve.r_grid;
    o.result["c"] = curve.values;
    o.result["stderr"] = curve.std_errors;
    return o;
}

Output cmd_perimeter(const ExperimentConfig& c) {
    const SphereSpec sphere(c.dim, c.radius);
    const Region region = region_of(c);
    check_volume_constraint(c, sphere, region);
    const AutocorrCurve curve = curve_for(c, sphere, region);
    const SlopeReport s = perimeter_from_curve(curve, sphere, fit_config(c));
    const auto analytic = region.analytic_perimeter(sphere);
    CsvTable t("quantity,value");
    t.pair("slope", s.slope);
    t.pair("slope_std_error", s.slope_std_error);
    t.pair("perimeter", s.perimeter);
    t.pair("perimeter_std_error", s.perimeter_std_error);
    if (analytic) t.pair("perimeter_analytic", *analytic);
    t.pair("residual", s.residual);
    Output o;
    o.csv = t.str();
    o.result = {{"slope", s.slope},
                {"raw_slope", s.raw_slope},
                {"slope_std_error", s.slope_std_error},
                {"slope_systematic", s.slope_systematic},
                {"perimeter", s.perimeter},
                {"perimeter_std_error", s.perimeter_std_error},
                {"perimeter_analytic", opt_num(analytic)},
                {"window", {s.r_min, s.r_max}},
                {"residual", s.residual},
                {"extrapolation_order", s.extrapolation_order},
                {"window_points", s.window_points},
                {"positive_slope", s.positive_slope},
                {"samples", s.samples},
                {"seed", s.seed},
                {"curve", curve_summary(curve)}};
    return o;
}

Output cmd_bv_quotient(const ExperimentConfig& c) {
    const SphereSpec sphere(c.dim, c.radius);
    const ScalarField field = field_of(c);
    if (c.field.rfind("indicator:", 0) == 0)
        check_volume_constraint(c, sphere, parse_region(c.field.substr(10), c.dim));
    const McConfig mc = mc_config(c);
    const LimitEstimate lim = variation_limit_smooth(sphere, field, c.rs, mc, c.degree);
    const double kn = sphere_volume_ratio(c.dim);
    CsvTable t("r,Q,stderr");
    for (std::size_t i = 0; i < lim.r.size(); ++i) t.row({lim.r[i], lim.Q[i], lim.Q_std_errors[i]});
    Output o;
    o.csv = t.str();
    o.result = {{"field", field.label},
                {"r", lim.r},
                {"Q", lim.Q},
                {"stderr", lim.Q_std_errors},
                {"limit", lim.value},
                {"limit_std_error", lim.std_error},
                {"degree", lim.degree},
                {"unstable", lim.unstable},
                {"variation", lim.value / kn},
                {"variation_std_error", lim.std_error / kn},
                {"samples", lim.samples},
                {"seed", lim.seed}};
    if (c.mollifier_s) {
        const Estimate m = mollifier_variation(sphere, field, *c.mollifier_s, mc);
        o.result["mollifier"] = {{"s", *c.mollifier_s},
                                 {"limit", m.value},
                                 {"limit_std_error", m.std_error},
                                 {"variation", m.value / kn}};
    }
    return o;
}

Output cmd_kernel(const ExperimentConfig& c) {
    require_unit_radius(c);
    const SphereSpec sphere(c.dim);
    const RadialKernel k = solve_kernel(sphere, single_eps(c));
    const IntegratedKernel phi = integrated_kernel(k);
    const KernelMoments m = kernel_moments(k);
    CsvTable t("r,K,Phi");
    for (double r : k.nodes()) t.row({r, k(r), k.integrated(r)});
    Output o;
    o.csv = t.str();
    o.result = {{"n", m.n},
                {"eps", m.eps},
                {"M0", m.M0},
                {"M1_scaled", m.M1_scaled},
                {"M2_scaled", m.M2_scaled},
                {"gamma_eps", m.gamma_eps},
                {"normalization_residual", k.normalization_residual()},
                {"phi_at_zero", phi.phi_at_zero},
                {"phi_at_pi", phi.phi_at_pi},
                {"phi_L1_norm", phi.L1_norm},
                {"nodes", k.nodes().size()}};
    return o;
}

Output cmd_gamma_eps(const ExperimentConfig& c) {
    require_unit_radius(c);
    require_decreasing(c.eps, "--eps");
    const GammaEpsSweep sweep = gamma_eps_sweep(SphereSpec(c.dim), c.eps, {}, c.workers);
    CsvTable t("eps,M0,M1_scaled,M2_scaled,gamma_eps");
    json rows = json::array();
    for (const auto& m : sweep.rows) {
        t.row({m.eps, m.M0, m.M1_scaled, m.M2_scaled, m.gamma_eps});
        rows.push_back({{"n", m.n},
                        {"eps", m.eps},
                        {"M0", m.M0},
                        {"M1_scaled", m.M1_scaled},
                        {"M2_scaled", m.M2_scaled},
                        {"gamma_eps", m.gamma_eps}});
    }
    Output o;
    o.csv = t.str();
    o.result = {{"rows", rows},
                {"gamma_crit_extrapolated", sweep.extrapolated},
                {"extrapolation_order", sweep.order},
                {"monotone", sweep.monotone}};
    return o;
}

Output cmd_energy(const ExperimentConfig& c) {
    require_unit_radius(c);
    const double eps = single_eps(c);
    const SphereSpec sphere(c.dim);
    const Region region = region_of(c);
    check_volume_constraint(c, sphere, region);
    const AutocorrCurve curve = curve_for(c, sphere, region);
    const RadialKernel k = solve_kernel(sphere, eps);
    EnergyOptions opts;
    opts.fit = fit_config(c);
    const EnergyReport r = total_energy(sphere, region, curve, k, c.gamma, opts);
    CsvTable t(kEnergyHeader);
    energy_row(t, r, r.eps, 1.0);
    Output o;
    o.csv = t.str();
    o.result = {{"report", energy_json(r)},
                {"limit_energy", limit_energy(r.perimeter, c.gamma).value},
                {"curve", curve_summary(curve)}};
    return o;
}

Output cmd_gamma_limit(const ExperimentConfig& c) {
    require_unit_radius(c);
    require_decreasing(c.eps, "--eps");
    if (c.eps.size() < 2) throw UsageError("--eps", "the sweep needs at least two values");
    if (!(c.gamma < 1.0)) throw UsageError("--gamma", "the sweep needs gamma < 1");
    const SphereSpec sphere(c.dim);
    const Region region = region_of(c);
    check_volume_constraint(c, sphere, region);
    const AutocorrCurve curve = curve_for(c, sphere, region);
    EnergyOptions opts;
    opts.fit = fit_config(c);
    const GammaLimitSweep s = gamma_limit_sweep(sphere, region, c.gamma, c.eps, curve, opts, {}, c.workers);
    CsvTable t(kEnergyHeader);
    json reports = json::array();
    for (const auto& r : s.reports) {
        energy_row(t, r, r.eps, 1.0);
        reports.push_back(energy_json(r));
    }
    Output o;
    o.csv = t.str();
    o.result = {{"reports", reports},
                {"extrapolated_energy", s.extrapolated_energy},
                {"extrapolated_std_error", s.extrapolated_std_error},
                {"limit_energy", s.limit_energy},
                {"relative_gap", s.relative_gap},
                {"gap_decreasing", s.gap_decreasing},
                {"unstable", s.unstable},
                {"curve", curve_summary(curve)}};
    return o;
}

Output cmd_rescale(const ExperimentConfig& c) {
    const double R = c.radius;
    const SphereSpec unit(c.dim);
    const Region region = region_of(c);
    if (c.volume_constraint) {
        // theta refers to the sphere of radius R.
        const SphereSpec big(c.dim, R);
        check_volume_constraint(c, big, region);
    }
    if (c.eps.size() > 1) require_decreasing(c.eps, "--eps");
    const AutocorrCurve curve = curve_for(c, unit, region);
    EnergyOptions opts;
    opts.fit = fit_config(c);
    const double scale = std::pow(R, c.dim - 1);
    const auto results = run_chunks(static_cast<std::int64_t>(c.eps.size()), c.workers, [&](std::int64_t i) {
        return rescaled_energy(R, c.gamma, c.eps[static_cast<std::size_t>(i)], unit, region, curve, opts);
    });
    CsvTable t(kEnergyHeader);
    json rows = json::array();
    for (const auto& r : results) {
        energy_row(t, r.unit_report, r.eps, scale);
        rows.push_back({{"R", r.R}, {"eps", r.eps}, {"unit_eps", r.unit_eps}, {"energy", r.energy},
                        {"unit_report", energy_json(r.unit_report)}});
    }
    const double per = results.back().unit_report.perimeter;
    Output o;
    o.csv = t.str();
    o.result = {{"rows", rows}, {"limit_energy", scale * limit_energy(per, c.gamma).value}};
    if (results.size() >= 2) {
        const auto& a = results[results.size() - 2];
        const auto& b = results.back();
        const double ext = extrapolate_first_order(a.eps, a.energy, b.eps, b.energy);
        o.result["extrapolated_energy"] = ext;
        o.result["relative_gap"] = std::abs(ext - o.result["limit_energy"].get<double>()) /
                                   std::abs(o.result["limit_energy"].get<double>());
    }
    return o;
}

using Command = std::function<Output(const ExperimentConfig&)>;

struct CommandInfo {
    const char* name;
    const char* help;
    Command fn;
    bool region;
    bool energy;
};

const std::vector<CommandInfo>& commands() {
    static const std::vector<CommandInfo> list{
        {"constants", "sphere volumes and the volume ratio k_n", cmd_constants, false, false},
        {"autocorr", "autocorrelation curve c(r) of a region", cmd_autocorr, true, false},
        {"perimeter", "perimeter from the slope of c at r = 0", cmd_perimeter, true, false},
        {"bv-quotient", "mean geodesic difference quotients of a field", cmd_bv_quotient, false, false},
        {"kernel", "Helmholtz kernel K and integrated kernel Phi", cmd_kernel, false, true},
        {"gamma-eps", "kernel moments and gamma_eps over an eps list", cmd_gamma_eps, false, true},
        {"energy", "nonlocal energy at one eps", cmd_energy, true, true},
        {"gamma-limit", "energy sweep over eps with extrapolation", cmd_gamma_limit, true, true},
        {"rescale", "energy on a sphere of radius R via the unit sphere", cmd_rescale, true, true},
    };
    return list;
}

std::optional<std::string> prescan_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config", "missing path");
            return args[i + 1];
        }
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

void write_file(const std::string& path, const std::string& body, const std::string& flag) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError(flag, "cannot open '" + path + "' for writing");
    f << body;
    if (!f) throw UsageError(flag, "failed writing '" + path + "'");
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
    json j{{"command", c.command},
           {"dim", c.dim},
           {"radius", c.radius},
           {"region", c.region},
           {"gamma", c.gamma},
           {"eps", c.eps},
           {"samples", c.samples},
           {"grid", c.grid},
           {"workers", c.workers},
           {"chunk", c.chunk},
           {"window", {c.r_min, c.r_max}},
           {"richardson", c.richardson},
           {"field", c.field},
           {"rs", c.rs},
           {"degree", c.degree},
           {"mollifier_s", opt_num(c.mollifier_s)},
           {"volume_constraint", opt_num(c.volume_constraint)},
           {"simd", c.simd}};
    j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    return j;
}

void apply_config_json(const json& j, ExperimentConfig& c) {
    static const char* known[] = {"command", "dim",   "radius", "region",     "gamma", "eps",
                                  "samples", "grid",  "workers", "chunk",     "window", "richardson",
                                  "field",   "rs",    "degree", "mollifier_s", "volume_constraint",
                                  "simd",    "seed"};
    if (!j.is_object()) throw UsageError("--config", "expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw UsageError("--config", "unknown key '" + key + "'");
    }
    try {
        take(j, "dim", c.dim);
        take(j, "radius", c.radius);
        take(j, "region", c.region);
        take(j, "gamma", c.gamma);
        take(j, "eps", c.eps);
        take(j, "samples", c.samples);
        take(j, "grid", c.grid);
        take(j, "workers", c.workers);
        take(j, "chunk", c.chunk);
        if (j.contains("window")) {
            const auto w = j.at("window").get<std::vector<double>>();
            if (w.size() != 2) throw UsageError("--config", "window needs two values");
            c.r_min = w[0];
            c.r_max = w[1];
        }
        take(j, "richardson", c.richardson);
        take(j, "field", c.field);
        take(j, "rs", c.rs);
        take(j, "degree", c.degree);
        take(j, "simd", c.simd);
        if (j.contains("mollifier_s") && !j.at("mollifier_s").is_null())
            c.mollifier_s = j.at("mollifier_s").get<double>();
        if (j.contains("volume_constraint") && !j.at("volume_constraint").is_null())
            c.volume_constraint = j.at("volume_constraint").get<double>();
        if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw UsageError("--config", e.what());
    }
}

void resolve_and_validate(ExperimentConfig& c) {
    if (!c.seed) {
        if (const char* env = std::getenv("GEOCORR_SEED"); env && *env)
            c.seed = parse_seed(env, "GEOCORR_SEED");
        else
            c.seed = kDefaultSeed;
    }
    if (c.dim < 2 || c.dim > 64) throw UsageError("--dim", "must be an integer in 2..64");
    if (!(c.radius > 0.0) || !std::isfinite(c.radius)) throw UsageError("--radius", "must be positive");
    if (!(c.gamma >= 0.0) || !std::isfinite(c.gamma)) throw UsageError("--gamma", "must be >= 0");
    if (c.eps.empty()) throw UsageError("--eps", "needs at least one value");
    for (double e : c.eps)
        if (!(e > 0.0) || !std::isfinite(e)) throw UsageError("--eps", "values must be positive");
    if (c.samples < 1) throw UsageError("--samples", "must be >= 1");
    if (c.grid < 3) throw UsageError("--grid", "must be >= 3");
    if (c.workers < 0) throw UsageError("--workers", "must be >= 0 (0 uses every core)");
    if (c.chunk < 0) throw UsageError("--chunk", "must be >= 0 (0 picks the default)");
    if (!(c.r_min > 0.0) || !(c.r_min < c.r_max) || !(c.r_max <= std::numbers::pi))
        throw UsageError("--window", "needs 0 < rmin < rmax <= pi");
    require_decreasing(c.rs, "--rs");
    if (c.degree < 0 || c.degree > 4) throw UsageError("--degree", "must be in 0..4");
    if (c.mollifier_s && (!(*c.mollifier_s > 0.0) || !(*c.mollifier_s < 1.0)))
        throw UsageError("--mollifier-s", "must lie in (0, 1)");
    if (c.simd != "auto") {
        simd::Isa isa;
        try {
            isa = simd::parse_isa(c.simd);
        } catch (const std::exception& e) {
            throw UsageError("--simd", e.what());
        }
        if (!simd::isa_supported(isa)) throw UsageError("--simd", c.simd + " is not available on this machine");
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    try {
        if (const auto path = prescan_config(args)) {
            std::ifstream f(*path);
            if (!f) throw UsageError("--config", "cannot read '" + *path + "'");
            json j;
            try {
                j = json::parse(f);
            } catch (const json::exception& e) {
                throw UsageError("--config", e.what());
            }
            apply_config_json(j, cfg);
        }
    } catch (const UsageError& e) {
        err << "geocorr: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"Autocorrelation, perimeter and nonlocal isoperimetric energies on round spheres", "geocorr"};
    app.require_subcommand(1, 1);
    std::string eps_text, window_text, rs_text, config_path;
    std::uint64_t seed_value = 0;
    double mollifier_value = 0.0, theta_value = 0.0;
    bool no_richardson = false;
    struct Flags {
        CLI::Option* seed = nullptr;
        CLI::Option* eps = nullptr;
        CLI::Option* window = nullptr;
        CLI::Option* rs = nullptr;
        CLI::Option* mollifier = nullptr;
        CLI::Option* theta = nullptr;
    };
    std::vector<std::pair<CLI::App*, Flags>> subs;

    for (const auto& cmd : commands()) {
        CLI::App* s = app.add_subcommand(cmd.name, cmd.help);
        Flags f;
        s->add_option("--dim", cfg.dim, "sphere dimension n");
        s->add_option("--radius", cfg.radius, "sphere radius R");
        s->add_option("--config", config_path, "JSON config; explicit flags override it");
        s->add_option("--json", cfg.json_path, "write the JSON report here");
        s->add_option("--output", cfg.output_path, "write the CSV here instead of stdout");
        s->add_option("--workers", cfg.workers, "worker threads, 0 = all cores");
        s->add_option("--simd", cfg.simd, "scalar, avx2, neon or auto");
        if (cmd.energy || cmd.region || std::string(cmd.name) == "bv-quotient")
            f.eps = s->add_option("--eps", eps_text, "comma-separated eps values");
        if (cmd.region || std::string(cmd.name) == "bv-quotient") {
            s->add_option("--samples", cfg.samples, "Monte Carlo samples");
            f.seed = s->add_option("--seed", seed_value, "RNG seed (GEOCORR_SEED if absent)");
            s->add_option("--chunk", cfg.chunk, "work units per chunk, 0 = default");
            f.theta = s->add_option("--volume-constraint", theta_value, "expected region volume (checked only)");
        }
        if (cmd.region) {
            s->add_option("--region", cfg.region, "region literal, e.g. cap:a=1.0471976");
            s->add_option("--grid", cfg.grid, "autocorrelation grid points on [0, pi R]");
            f.window = s->add_option("--window", window_text, "slope fit window rmin,rmax");
            s->add_flag("--no-richardson", no_richardson, "disable the halved-window extrapolation");
        }
        if (cmd.energy || cmd.region) s->add_option("--gamma", cfg.gamma, "nonlocal strength gamma");
        if (std::string(cmd.name) == "bv-quotient") {
            s->add_option("--field", cfg.field, "x<i>, const:<c> or indicator:<region>");
            f.rs = s->add_option("--rs", rs_text, "decreasing radii for the quotient");
            s->add_option("--degree", cfg.degree, "polynomial degree of the r -> 0 fit");
            f.mollifier = s->add_option("--mollifier-s", mollifier_value, "also run the mollifier estimator");
        }
        subs.emplace_back(s, f);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        for (const auto& [s, f] : subs)
            if (s->parsed()) out << s->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "geocorr: " << e.what() << '\n';
        return 2;
    }

    try {
        const CommandInfo* chosen = nullptr;
        for (std::size_t i = 0; i < subs.size(); ++i) {
            auto& [s, f] = subs[i];
            if (!s->parsed()) continue;
            chosen = &commands()[i];
            if (f.seed && f.seed->count()) cfg.seed = seed_value;
            if (f.eps && f.eps->count()) cfg.eps = parse_list(eps_text, "--eps");
            if (f.rs && f.rs->count()) cfg.rs = parse_list(rs_text, "--rs");
            if (f.mollifier && f.mollifier->count()) cfg.mollifier_s = mollifier_value;
            if (f.theta && f.theta->count()) cfg.volume_constraint = theta_value;
            if (f.window && f.window->count()) {
                const auto w = parse_list(window_text, "--window");
                if (w.size() != 2) throw UsageError("--window", "expected rmin,rmax");
                cfg.r_min = w[0];
                cfg.r_max = w[1];
            }
            if (no_richardson) cfg.richardson = false;
        }
        cfg.command = chosen->name;
        resolve_and_validate(cfg);
        if (cfg.simd != "auto") simd::set_active_isa(simd::parse_isa(cfg.simd));

        Output o;
        try {
            o = chosen->fn(cfg);
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception& e) {
            err << "geocorr: " << cfg.command << ": " << e.what() << '\n';
            return 1;
        }

        if (!cfg.json_path.empty()) {
            json report{{"schema_version", kSchemaVersion},
                        {"command", cfg.command},
                        {"config", config_to_json(cfg)},
                        {"simd", std::string(simd::isa_name(simd::active_isa()))},
                        {"result", o.result}};
            write_file(cfg.json_path, report.dump(2) + '\n', "--json");
        }
        if (!cfg.output_path.empty())
            write_file(cfg.output_path, o.csv, "--output");
        else
            out << o.csv;
        return 0;
    } catch (const UsageError& e) {
        err << "geocorr: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace geocorr::cli
