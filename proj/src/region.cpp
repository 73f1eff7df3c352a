#include <geocorr/errors.hpp>
#include <geocorr/format.hpp>
#include <geocorr/region.hpp>
#include <geocorr/simd.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geocorr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::int64_t kDefaultPointChunk = 1 << 16;

void check_cap_radius(double a) {
    if (!(a > 0.0) || !(a < kPi)) throw DomainError("cap radius must lie in (0, pi)");
}

// int_0^a sin^k(t) dt by the reduction formula.
double sine_power_integral(int k, double a) {
    double even = a;                  // k = 0
    double odd = 1.0 - std::cos(a);   // k = 1
    if (k == 0) return even;
    if (k == 1) return odd;
    double prev = (k % 2 == 0) ? even : odd;
    const double s = std::sin(a);
    const double c = std::cos(a);
    for (int m = (k % 2 == 0) ? 2 : 3; m <= k; m += 2) prev = -std::pow(s, m - 1) * c / m + (m - 1.0) / m * prev;
    return prev;
}

VolumeEstimate make_estimate(double volume, std::int64_t hits, std::int64_t n, std::uint64_t seed) {
    VolumeEstimate e;
    e.samples = n;
    e.seed = seed;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    e.value = volume * p;
    if (n > 1) {
        const double var = p * (1.0 - p) * static_cast<double>(n) / static_cast<double>(n - 1);
        e.std_error = volume * std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
    return e;
}

template <class Test>
VolumeEstimate count_points(const SphereSpec& sphere, const McConfig& config, Test&& test) {
    if (config.samples < 1) throw DomainError("sample count must be at least 1");
    const std::int64_t chunk = config.chunk_size > 0 ? config.chunk_size : kDefaultPointChunk;
    const std::int64_t chunks = (config.samples + chunk - 1) / chunk;
    const int m = sphere.ambient_dim();
    const auto counts = run_chunks(chunks, config.workers, [&](std::int64_t c) {
        RngStream rng(config.seed, static_cast<std::uint64_t>(c));
        const std::int64_t begin = c * chunk;
        const std::int64_t end = std::min(config.samples, begin + chunk);
        std::vector<double> x(static_cast<std::size_t>(m));
        std::int64_t hits = 0;
        for (std::int64_t i = begin; i < end; ++i) {
            draw_uniform_point(m, rng, x.data());
            if (test(std::span<const double>(x))) ++hits;
        }
        return hits;
    });
    std::int64_t hits = 0;
    for (const std::int64_t h : counts) hits += h;
    return make_estimate(sphere.volume(), hits, config.samples, config.seed);
}

}  // namespace

struct Region::Node {
    Kind kind = Kind::predicate;
    Point center;
    double radius = 0.0;
    double cos_radius = 0.0;
    std::vector<Region> children;
    Membership membership;
    std::string label;
    std::optional<bool> constant;  // set for full / empty
};

Region::Region(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

CircleTable CircleTable::uniform(std::size_t count) {
    CircleTable t;
    t.cos_t.resize(count);
    t.sin_t.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double phase = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(count);
        t.cos_t[j] = std::cos(phase);
        t.sin_t[j] = std::sin(phase);
    }
    return t;
}

Region Region::cap(Point center, double a) {
    check_cap_radius(a);
    const double nrm = std::sqrt(dot(center, center));
    if (center.size() < 3) throw DomainError("cap center needs at least 3 coordinates");
    if (std::abs(nrm - 1.0) > 1e-6) throw DomainError("cap center is not a unit vector");
    for (double& c : center) c /= nrm;
    auto node = std::make_shared<Node>();
    node->kind = Kind::cap;
    node->center = std::move(center);
    node->radius = a;
    node->cos_radius = std::cos(a);
    return Region(std::move(node));
}

Region Region::complement(Region inner) {
    auto node = std::make_shared<Node>();
    node->kind = Kind::complement;
    node->children.push_back(std::move(inner));
    return Region(std::move(node));
}

Region Region::union_of(std::vector<Region> parts) {
    if (parts.empty()) throw DomainError("union needs at least one region");
    auto node = std::make_shared<Node>();
    node->kind = Kind::union_of;
    node->children = std::move(parts);
    return Region(std::move(node));
}

Region Region::intersection_of(std::vector<Region> parts) {
    if (parts.empty()) throw DomainError("intersection needs at least one region");
    auto node = std::make_shared<Node>();
    node->kind = Kind::intersection_of;
    node->children = std::move(parts);
    return Region(std::move(node));
}

Region Region::predicate(Membership membership, std::string label) {
    if (!membership) throw DomainError("predicate region needs a membership function");
    auto node = std::make_shared<Node>();
    node->kind = Kind::predicate;
    node->membership = std::move(membership);
    node->label = std::move(label);
    return Region(std::move(node));
}

Region Region::full() {
    auto node = std::make_shared<Node>();
    node->kind = Kind::predicate;
    node->membership = [](std::span<const double>) { return true; };
    node->label = "full";
    node->constant = true;
    return Region(std::move(node));
}

Region Region::empty() {
    auto node = std::make_shared<Node>();
    node->kind = Kind::predicate;
    node->membership = [](std::span<const double>) { return false; };
    node->label = "empty";
    node->constant = false;
    return Region(std::move(node));
}

Region::Kind Region::kind() const noexcept { return node_->kind; }

const Point& Region::center() const {
    if (node_->kind != Kind::cap) throw DomainError("region is not a cap");
    return node_->center;
}

double Region::radius() const {
    if (node_->kind != Kind::cap) throw DomainError("region is not a cap");
    return node_->radius;
}

const std::vector<Region>& Region::children() const { return node_->children; }

bool Region::contains(std::span<const double> x) const {
    const Node& nd = *node_;
    switch (nd.kind) {
        case Kind::cap:
            return std::acos(std::clamp(dot(nd.center, x), -1.0, 1.0)) <= nd.radius;
        case Kind::complement:
            return !nd.children.front().contains(x);
        case Kind::union_of:
            return std::any_of(nd.children.begin(), nd.children.end(),
                               [&](const Region& r) { return r.contains(x); });
        case Kind::intersection_of:
            return std::all_of(nd.children.begin(), nd.children.end(),
                               [&](const Region& r) { return r.contains(x); });
        case Kind::predicate:
            return nd.membership(x);
    }
    return false;
}

std::string Region::literal() const {
    const Node& nd = *node_;
    auto join = [&](const char* name) {
        std::string s = name;
        s += '(';
        for (std::size_t i = 0; i < nd.children.size(); ++i) {
            if (i) s += ';';
            s += nd.children[i].literal();
        }
        return s + ')';
    };
    switch (nd.kind) {
        case Kind::cap: {
            std::string s = "cap:center=";
            for (std::size_t i = 0; i < nd.center.size(); ++i) {
                if (i) s += ',';
                s += format_double(nd.center[i]);
            }
            return s + ",a=" + format_double(nd.radius);
        }
        case Kind::complement:
            return "complement(" + nd.children.front().literal() + ")";
        case Kind::union_of:
            return join("union");
        case Kind::intersection_of:
            return join("intersection");
        case Kind::predicate:
            return nd.label;
    }
    return {};
}

int Region::ambient_dim() const {
    const Node& nd = *node_;
    if (nd.kind == Kind::cap) return static_cast<int>(nd.center.size());
    int dim = 0;
    for (const Region& c : nd.children) {
        const int d = c.ambient_dim();
        if (d != 0 && dim != 0 && d != dim) throw DomainError("region mixes cap centers of different dimension");
        if (d != 0) dim = d;
    }
    return dim;
}

std::optional<double> Region::analytic_volume(const SphereSpec& sphere) const {
    const Node& nd = *node_;
    if (nd.kind == Kind::cap) return cap_volume(sphere, nd.radius);
    if (nd.kind == Kind::complement) {
        if (auto v = nd.children.front().analytic_volume(sphere)) return sphere.volume() - *v;
        return std::nullopt;
    }
    if (nd.constant) return *nd.constant ? sphere.volume() : 0.0;
    return std::nullopt;
}

std::optional<double> Region::analytic_perimeter(const SphereSpec& sphere) const {
    const Node& nd = *node_;
    if (nd.kind == Kind::cap) return cap_perimeter(sphere, nd.radius);
    if (nd.kind == Kind::complement) return nd.children.front().analytic_perimeter(sphere);
    if (nd.constant) return 0.0;
    return std::nullopt;
}

void Region::evaluate_on_circle(std::span<const double> x, std::span<const double> w,
                                const CircleTable& table, std::uint8_t* out) const {
    const Node& nd = *node_;
    const std::size_t count = table.size();
    const simd::KernelTable& k = simd::kernels();
    switch (nd.kind) {
        case Kind::cap:
            k.cap_membership(dot(nd.center, x), dot(nd.center, w), nd.cos_radius, table.cos_t.data(),
                             table.sin_t.data(), count, out);
            return;
        case Kind::complement:
            nd.children.front().evaluate_on_circle(x, w, table, out);
            k.mask_not(out, count);
            return;
        case Kind::union_of:
        case Kind::intersection_of: {
            nd.children.front().evaluate_on_circle(x, w, table, out);
            std::vector<std::uint8_t> scratch(count);
            for (std::size_t i = 1; i < nd.children.size(); ++i) {
                nd.children[i].evaluate_on_circle(x, w, table, scratch.data());
                if (nd.kind == Kind::union_of)
                    k.mask_or(out, scratch.data(), count);
                else
                    k.mask_and(out, scratch.data(), count);
            }
            return;
        }
        case Kind::predicate: {
            if (nd.constant) {
                std::fill(out, out + count, static_cast<std::uint8_t>(*nd.constant ? 1 : 0));
                return;
            }
            Point p(x.size());
            for (std::size_t j = 0; j < count; ++j) {
                for (std::size_t i = 0; i < x.size(); ++i) p[i] = table.cos_t[j] * x[i] + table.sin_t[j] * w[i];
                out[j] = nd.membership(p) ? 1 : 0;
            }
            return;
        }
    }
}

namespace {

// Splits at separators that are not nested inside parentheses.
std::vector<std::string_view> split_top_level(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '(') ++depth;
        if (text[i] == ')') --depth;
        if (depth < 0) throw ParseError("unbalanced ')' in region literal");
        if (text[i] == sep && depth == 0) {
            parts.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    if (depth != 0) throw ParseError("unbalanced '(' in region literal");
    parts.push_back(text.substr(start));
    return parts;
}

Region parse_cap(std::string_view body, int n) {
    Point center;
    bool in_center = false;
    std::optional<double> radius;
    for (std::string_view token : split_top_level(body, ',')) {
        token = trim(token);
        if (token.starts_with("center=")) {
            center.clear();
            center.push_back(parse_double(token.substr(7), "cap center"));
            in_center = true;
        } else if (token.starts_with("a=")) {
            radius = parse_double(token.substr(2), "cap radius");
            in_center = false;
        } else if (in_center && token.find('=') == std::string_view::npos) {
            center.push_back(parse_double(token, "cap center"));
        } else {
            throw ParseError("unexpected cap parameter '" + std::string(token) + "'");
        }
    }
    if (!radius) throw ParseError("cap literal needs a=<radius>");
    if (!(*radius > 0.0) || !(*radius < kPi)) throw ParseError("cap radius must lie in (0, pi)");
    if (center.empty()) {
        center.assign(static_cast<std::size_t>(n + 1), 0.0);
        center.back() = 1.0;
    }
    if (static_cast<int>(center.size()) != n + 1)
        throw ParseError("cap center has " + std::to_string(center.size()) + " coordinates, expected " +
                         std::to_string(n + 1));
    const double nrm = std::sqrt(dot(center, center));
    if (!(nrm > 0.0)) throw ParseError("cap center must be nonzero");
    for (double& c : center) c /= nrm;
    return Region::cap(std::move(center), *radius);
}

Region parse_node(std::string_view text, int n) {
    text = trim(text);
    if (text.empty()) throw ParseError("empty region literal");
    if (text == "full") return Region::full();
    if (text == "empty") return Region::empty();
    if (text.starts_with("cap:")) return parse_cap(text.substr(4), n);
    const auto open = text.find('(');
    if (open == std::string_view::npos || text.back() != ')')
        throw ParseError("unrecognized region literal '" + std::string(text) + "'");
    const std::string_view name = trim(text.substr(0, open));
    const std::string_view inner = text.substr(open + 1, text.size() - open - 2);
    std::vector<Region> parts;
    for (std::string_view part : split_top_level(inner, ';')) parts.push_back(parse_node(part, n));
    if (name == "complement") {
        if (parts.size() != 1) throw ParseError("complement takes exactly one region");
        return Region::complement(std::move(parts.front()));
    }
    if (name == "union") return Region::union_of(std::move(parts));
    if (name == "intersection") return Region::intersection_of(std::move(parts));
    throw ParseError("unknown region operator '" + std::string(name) + "'");
}

}  // namespace

Region parse_region(std::string_view literal, int n) {
    if (n < 2) throw ParseError("region dimension must be at least 2");
    return parse_node(literal, n);
}

double cap_volume(const SphereSpec& sphere, double a) {
    check_cap_radius(a);
    return sphere_surface_volume(sphere.n - 1) * std::pow(sphere.R, sphere.n) * sine_power_integral(sphere.n - 1, a);
}

double cap_perimeter(const SphereSpec& sphere, double a) {
    check_cap_radius(a);
    return sphere_surface_volume(sphere.n - 1) * std::pow(std::sin(a) * sphere.R, sphere.n - 1);
}

VolumeEstimate volume_mc(const SphereSpec& sphere, const Region& region, const McConfig& config) {
    return count_points(sphere, config, [&](std::span<const double> x) { return region.contains(x); });
}

VolumeEstimate symdiff_volume(const SphereSpec& sphere, const Region& a, const Region& b,
                              const McConfig& config) {
    return count_points(sphere, config,
                        [&](std::span<const double> x) { return a.contains(x) != b.contains(x); });
}

}  // namespace geocorr
