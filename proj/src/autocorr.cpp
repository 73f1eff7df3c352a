#include <geocorr/autocorr.hpp>
#include <geocorr/errors.hpp>
#include <geocorr/fit.hpp>
#include <geocorr/simd.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geocorr {

namespace {

struct Sums {
    std::vector<std::uint64_t> both;
    std::vector<std::uint64_t> both_sq;
    std::vector<std::uint64_t> diff;
    std::vector<std::uint64_t> diff_sq;
    std::int64_t orbits = 0;

    explicit Sums(std::size_t m) : both(m), both_sq(m), diff(m), diff_sq(m) {}

    void add(const Sums& o) {
        for (std::size_t k = 0; k < both.size(); ++k) {
            both[k] += o.both[k];
            both_sq[k] += o.both_sq[k];
            diff[k] += o.diff[k];
            diff_sq[k] += o.diff_sq[k];
        }
        orbits += o.orbits;
    }
};

void check_region_dim(const SphereSpec& sphere, const Region& region) {
    const int d = region.ambient_dim();
    if (d != 0 && d != sphere.ambient_dim())
        throw DomainError("region lives in R^" + std::to_string(d) + " but the sphere is S^" +
                          std::to_string(sphere.n));
}

// Mean and standard error of per-orbit values scale * count.
void moments(std::uint64_t sum, std::uint64_t sum_sq, std::int64_t orbits, double scale, double& mean,
             double& std_error) {
    const double d = static_cast<double>(orbits);
    const double m = static_cast<double>(sum) / d;
    mean = scale * m;
    std_error = 0.0;
    if (orbits > 1) {
        const double var = (static_cast<double>(sum_sq) / d - m * m) * d / (d - 1.0);
        std_error = scale * std::sqrt(std::max(var, 0.0) / d);
    }
}

}  // namespace

double AutocorrCurve::batch_std_error(const std::function<double(std::span<const double>)>& functional) const {
    std::vector<double> per_batch;
    per_batch.reserve(batch_values.size());
    for (const auto& b : batch_values) per_batch.push_back(functional(b));
    return standard_error_of_mean(per_batch);
}

AutocorrCurve autocorr_estimate(const SphereSpec& sphere, const Region& region, int grid_points,
                                const McConfig& config) {
    if (grid_points < 2) throw DomainError("autocorrelation grid needs at least 2 points");
    if (config.samples < 1) throw DomainError("sample count must be at least 1");
    check_region_dim(sphere, region);

    const auto m = static_cast<std::size_t>(grid_points);
    const std::size_t period = 2 * (m - 1);
    const std::int64_t orbits =
        (config.samples + static_cast<std::int64_t>(period) - 1) / static_cast<std::int64_t>(period);
    const std::int64_t chunk = config.chunk_size > 0 ? config.chunk_size : kDefaultOrbitChunk;
    const std::int64_t chunks = (orbits + chunk - 1) / chunk;
    const int ambient = sphere.ambient_dim();
    const CircleTable table = CircleTable::uniform(period);
    const simd::KernelTable& kern = simd::kernels();

    const int pool = chunk_pool_size(chunks, config.workers);
    // Accumulators per worker and batch. Integer sums make the reduction order irrelevant.
    std::vector<std::vector<Sums>> acc(static_cast<std::size_t>(pool),
                                       std::vector<Sums>(kAutocorrBatches, Sums(m)));

    for_each_chunk(chunks, config.workers, [&](std::int64_t c, int worker) {
        RngStream rng(config.seed, static_cast<std::uint64_t>(c));
        Sums& sums = acc[static_cast<std::size_t>(worker)][static_cast<std::size_t>(c % kAutocorrBatches)];
        std::vector<double> x(static_cast<std::size_t>(ambient));
        std::vector<double> w(static_cast<std::size_t>(ambient));
        std::vector<std::uint8_t> mask(2 * period);
        std::vector<std::uint64_t> words(simd::cyclic_words(period), 0);
        std::vector<std::uint32_t> both(m);
        std::vector<std::uint32_t> diff(m);
        const std::int64_t end = std::min(orbits, (c + 1) * chunk);
        for (std::int64_t o = c * chunk; o < end; ++o) {
            draw_liouville(ambient, rng, x.data(), w.data());
            region.evaluate_on_circle(x, w, table, mask.data());
            std::copy(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(period),
                      mask.begin() + static_cast<std::ptrdiff_t>(period));
            kern.pack_bits(mask.data(), 2 * period, words.data());
            kern.cyclic_overlap(words.data(), period, m, both.data(), diff.data());
            for (std::size_t k = 0; k < m; ++k) {
                const std::uint64_t b = both[k];
                const std::uint64_t d = diff[k];
                sums.both[k] += b;
                sums.both_sq[k] += b * b;
                sums.diff[k] += d;
                sums.diff_sq[k] += d * d;
            }
            ++sums.orbits;
        }
    });

    std::vector<Sums> batches(kAutocorrBatches, Sums(m));
    for (const auto& worker : acc)
        for (std::size_t b = 0; b < batches.size(); ++b) batches[b].add(worker[b]);
    Sums total(m);
    for (const Sums& b : batches) total.add(b);

    AutocorrCurve curve;
    curve.n = sphere.n;
    curve.radius = sphere.R;
    curve.total_volume = sphere.volume();
    curve.samples = orbits * static_cast<std::int64_t>(period);
    curve.orbits = orbits;
    curve.orbit_points = static_cast<int>(period);
    curve.seed = config.seed;
    curve.region_label = region.literal();

    const double scale = curve.total_volume / static_cast<double>(period);
    const double step = std::numbers::pi * sphere.R / static_cast<double>(m - 1);
    curve.r_grid.resize(m);
    curve.values.resize(m);
    curve.std_errors.resize(m);
    curve.variation.resize(m);
    curve.variation_std_errors.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        curve.r_grid[k] = step * static_cast<double>(k);
        moments(total.both[k], total.both_sq[k], orbits, scale, curve.values[k], curve.std_errors[k]);
        moments(total.diff[k], total.diff_sq[k], orbits, scale, curve.variation[k],
                curve.variation_std_errors[k]);
    }
    curve.r_grid.back() = std::numbers::pi * sphere.R;

    for (const Sums& b : batches) {
        if (b.orbits == 0) continue;
        std::vector<double> v(m);
        const double d = static_cast<double>(b.orbits);
        for (std::size_t k = 0; k < m; ++k) v[k] = scale * (static_cast<double>(b.both[k]) / d);
        curve.batch_values.push_back(std::move(v));
    }
    return curve;
}

double interpolate_curve(const AutocorrCurve& curve, double r) {
    const auto& g = curve.r_grid;
    if (r < g.front() || r > g.back()) throw DomainError("radius outside the autocorrelation grid");
    const auto it = std::upper_bound(g.begin(), g.end(), r);
    if (it == g.end()) return curve.values.back();
    const std::size_t hi = static_cast<std::size_t>(it - g.begin());
    const std::size_t lo = hi - 1;
    const double t = (r - g[lo]) / (g[hi] - g[lo]);
    return curve.values[lo] + t * (curve.values[hi] - curve.values[lo]);
}

}  // namespace geocorr
