#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eitbox/geometry.hpp"

using namespace eitbox;

namespace {

std::vector<Box> two_layer_boxes() {
    return {Box{Vec3(0, 0, 0), Vec3(1, 1, 1)}, Box{Vec3(0.25, 0.25, 0.25), Vec3(0.75, 0.75, 0.75)}};
}

std::vector<FlatPortion> default_portions() {
    FlatPortion sigma;
    sigma.owner = 0;
    sigma.face = Face::ZMinus;
    sigma.rect_lo = Eigen::Vector2d(0.25, 0.25);
    sigma.rect_hi = Eigen::Vector2d(0.75, 0.75);
    FlatPortion sigma1;
    sigma1.owner = 1;
    sigma1.face = Face::ZMinus;
    sigma1.rect_lo = Eigen::Vector2d(0.375, 0.375);
    sigma1.rect_hi = Eigen::Vector2d(0.625, 0.625);
    return {sigma, sigma1};
}

LayeredDomain make_domain(double r0 = 0.375) {
    return build_layered_domain(two_layer_boxes(), default_portions(), 1.0 / 16.0, r0);
}

}  // namespace

TEST_CASE("unit box with nested cube builds") {
    const LayeredDomain dom = make_domain();
    CHECK(dom.n_layers() == 2);
    CHECK(dom.portions[0].plane == doctest::Approx(0.0));
    CHECK(dom.portions[1].plane == doctest::Approx(0.25));
}

TEST_CASE("nesting violations are rejected") {
    auto boxes = two_layer_boxes();
    boxes[1] = Box{Vec3(0, 0, 0), Vec3(0.5, 0.5, 0.5)};  // shares a corner
    CHECK_THROWS_AS(build_layered_domain(boxes, default_portions(), 1.0 / 16.0, 0.375),
                    NestingViolation);
}

TEST_CASE("grid misalignment is rejected") {
    auto boxes = two_layer_boxes();
    boxes[1].lo(0) = 0.3;  // not a multiple of 1/16
    CHECK_THROWS_AS(build_layered_domain(boxes, default_portions(), 1.0 / 16.0, 0.375),
                    GridMisaligned);
}

TEST_CASE("undersized portions are rejected") {
    auto portions = default_portions();
    portions[1].rect_lo = Eigen::Vector2d(0.4375, 0.4375);
    portions[1].rect_hi = Eigen::Vector2d(0.5, 0.5);  // side 1/16 < r0/3
    CHECK_THROWS_AS(build_layered_domain(two_layer_boxes(), portions, 1.0 / 16.0, 0.375),
                    PortionTooSmall);
}

TEST_CASE("layer_index classifies layers, slab, and interfaces") {
    const LayeredDomain dom = make_domain();
    const AugmentedDomain aug = augment(dom, 0.375, 0.375);

    CHECK(layer_index(aug, Vec3(0.5, 0.5, 0.5)).value() == 2);    // center of the core
    CHECK(layer_index(aug, Vec3(0.5, 0.5, 0.1)).value() == 1);    // shell layer
    CHECK(layer_index(aug, Vec3(0.5, 0.5, -0.2)).value() == 0);   // slab
    CHECK_FALSE(layer_index(aug, Vec3(0.5, 0.5, 0.25)).has_value());  // interface plane
    CHECK_FALSE(layer_index(aug, Vec3(0.5, 0.5, 0.0)).has_value());   // attach plane
    CHECK_THROWS_AS(layer_index(aug, Vec3(0.5, 0.5, 2.0)), OutsideDomain);
}

TEST_CASE("augment builds the slab and pole region") {
    const LayeredDomain dom = make_domain();
    const AugmentedDomain aug = augment(dom, 0.375, 0.375);
    CHECK(aug.slab.lo.isApprox(Vec3(0, 0, -0.375)));
    CHECK(aug.slab.hi.isApprox(Vec3(1, 1, 0)));
    CHECK(aug.in_pole_region(Vec3(0.5, 0.5, -0.25)));
    CHECK_FALSE(aug.in_pole_region(Vec3(0.5, 0.5, -0.1)));  // above the cutoff
    CHECK_FALSE(aug.pole_region_cells().empty());

    CHECK_THROWS_AS(augment(dom, 0.375 / 4.0, 0.375), SlabTooThin);

    const AugmentedDomain chim = augment(dom, 0.375, 0.375, SlabFootprint::Portion);
    CHECK(chim.slab.lo.isApprox(Vec3(0.25, 0.25, -0.375)));
    CHECK(chim.slab.hi.isApprox(Vec3(0.75, 0.75, 0)));
    // The cutoff measures distance to the conductor boundary: deep points
    // qualify even near the chimney wall, shallow ones never do.
    CHECK(chim.in_pole_region(Vec3(0.26, 0.5, -0.25)));
    CHECK_FALSE(chim.in_pole_region(Vec3(0.5, 0.5, -0.05)));
}

TEST_CASE("probe_point walks along the owner normal") {
    const LayeredDomain dom = make_domain();
    const AugmentedDomain aug = augment(dom, 0.375, 0.375);
    // Portion 1 sits on the z- face of the nested cube: outward normal -e3.
    const Vec3 p = probe_point(aug, 1, 1.0 / 16.0);
    CHECK(p.isApprox(Vec3(0.5, 0.5, 0.25 - 1.0 / 16.0)));
    const Vec3 q = probe_point(aug, 1, -1.0 / 16.0);
    CHECK(q.isApprox(Vec3(0.5, 0.5, 0.25 + 1.0 / 16.0)));
    CHECK_THROWS_AS(probe_point(aug, 1, 0.375), OffsetOutOfRange);
}

TEST_CASE("layer indices partition the cell centers") {
    const LayeredDomain dom = make_domain();
    const AugmentedDomain aug = augment(dom, 0.375, 0.375);
    const double h = 1.0 / 32.0;
    const Vec3 lo = aug.bounding.lo;
    const Eigen::Vector3i n = ((aug.bounding.extent() / h).array() + 0.5).cast<int>();
    std::vector<std::int64_t> counts(dom.n_layers() + 1, 0);
    std::int64_t total = 0;
    for (int k = 0; k < n(2); ++k)
        for (int j = 0; j < n(1); ++j)
            for (int i = 0; i < n(0); ++i) {
                const Vec3 c = lo + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
                const auto li = layer_index(aug, c);
                REQUIRE(li.has_value());  // centers never sit on aligned planes
                ++counts[static_cast<std::size_t>(*li)];
                ++total;
            }
    std::int64_t sum = 0;
    for (auto c : counts) {
        CHECK(c > 0);
        sum += c;
    }
    CHECK(sum == total);
    // Exact counts: slab 32x32x12, core 16^3, shell = box minus core.
    CHECK(counts[0] == 32 * 32 * 12);
    CHECK(counts[2] == 16 * 16 * 16);
    CHECK(counts[1] == 32 * 32 * 32 - 16 * 16 * 16);
}

TEST_CASE("boundary distance matches a brute-force face minimum") {
    const LayeredDomain dom = make_domain();
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 x(rng.uniform(-0.3, 1.3), rng.uniform(-0.3, 1.3), rng.uniform(-0.5, 1.3));
        double brute = std::numeric_limits<double>::max();
        const int n = 60;
        for (int f = 0; f < 6; ++f) {
            const Face face = static_cast<Face>(f);
            const int axis = face_axis(face);
            const auto [ta, tb] = face_tangent_axes(face);
            const double plane = face_sign(face) < 0 ? dom.outer().lo(axis) : dom.outer().hi(axis);
            for (int a = 0; a <= n; ++a)
                for (int b = 0; b <= n; ++b) {
                    Vec3 p;
                    p(axis) = plane;
                    p(ta) = dom.outer().lo(ta) + (dom.outer().hi(ta) - dom.outer().lo(ta)) * a / n;
                    p(tb) = dom.outer().lo(tb) + (dom.outer().hi(tb) - dom.outer().lo(tb)) * b / n;
                    brute = std::min(brute, (x - p).norm());
                }
        }
        CHECK(dom.boundary_distance(x) == doctest::Approx(brute).epsilon(0.05));
    }
}
