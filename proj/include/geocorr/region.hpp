#pragma once

#include <geocorr/parallel.hpp>
#include <geocorr/sphere.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geocorr {

/// cos and sin of equally spaced phases 2 pi j / count, j = 0 .. count-1.
struct CircleTable {
    std::vector<double> cos_t;
    std::vector<double> sin_t;

    static CircleTable uniform(std::size_t count);
    std::size_t size() const noexcept { return cos_t.size(); }
};

/// Measurable subset of S^n: closed caps and their Boolean combinations, plus opaque
/// predicates. Values are immutable and cheap to copy.
class Region {
public:
    enum class Kind { cap, complement, union_of, intersection_of, predicate };
    using Membership = std::function<bool(std::span<const double>)>;

    /// Closed geodesic ball of angular radius a in (0, pi) about a unit center.
    static Region cap(Point center, double a);
    static Region complement(Region inner);
    static Region union_of(std::vector<Region> parts);
    static Region intersection_of(std::vector<Region> parts);
    /// `membership` must be a pure function of the point.
    static Region predicate(Membership membership, std::string label);
    static Region full();
    static Region empty();

    Kind kind() const noexcept;
    bool contains(std::span<const double> x) const;

    /// Literal text that parse_region maps back to an equivalent region. Predicates print their
    /// label.
    std::string literal() const;

    /// Ambient dimension fixed by cap centers, or 0 when unconstrained.
    int ambient_dim() const;

    /// Closed-form volume and perimeter for caps, complements of caps, full and empty.
    std::optional<double> analytic_volume(const SphereSpec& sphere) const;
    std::optional<double> analytic_perimeter(const SphereSpec& sphere) const;

    const Point& center() const;  ///< cap only
    double radius() const;        ///< cap only
    const std::vector<Region>& children() const;

    /// Membership of cos(t_j) x + sin(t_j) w for every phase of `table`, as 0/1 bytes.
    /// Caps are tested through the dot product against cos(a); this matches contains()
    /// except on the cap boundary, a null set.
    void evaluate_on_circle(std::span<const double> x, std::span<const double> w,
                            const CircleTable& table, std::uint8_t* out) const;

private:
    struct Node;
    explicit Region(std::shared_ptr<const Node> node);
    std::shared_ptr<const Node> node_;
};

/// Parses the region literal grammar
///   cap:center=<c0>,<c1>,...,a=<radius>   (center defaults to the north pole e_{n+1})
///   complement(<region>) | union(<r1>;<r2>;...) | intersection(<r1>;<r2>;...) | full | empty
Region parse_region(std::string_view literal, int n);

/// sigma_{n-1} R^n int_0^a sin^{n-1}(t) dt for angular radius a.
double cap_volume(const SphereSpec& sphere, double a);

/// sigma_{n-1} sin^{n-1}(a) R^{n-1}.
double cap_perimeter(const SphereSpec& sphere, double a);

struct VolumeEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
};

/// Vol(M) times the fraction of uniform points inside the region.
VolumeEstimate volume_mc(const SphereSpec& sphere, const Region& region, const McConfig& config);

/// Vol(M) times the fraction of uniform points in exactly one of a, b.
VolumeEstimate symdiff_volume(const SphereSpec& sphere, const Region& a, const Region& b,
                              const McConfig& config);

}  // namespace geocorr
