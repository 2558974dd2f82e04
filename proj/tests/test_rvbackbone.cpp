#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "rvc/checkpoint.hpp"
#include "rvc/rvbackbone.hpp"

using namespace rvc;

namespace {

std::vector<double> dense_layer(const PfnLayerSpec& s, const std::vector<double>& x) {
  std::vector<double> y(s.out_channels);
  for (std::size_t o = 0; o < s.out_channels; ++o) {
    double acc = s.bias[o];
    for (std::size_t i = 0; i < s.in_channels; ++i) acc += s.weights[o * s.in_channels + i] * x[i];
    y[o] = std::max(acc, 0.0);
  }
  return y;
}

// Naive backbone: per pillar, gather members, run both stages by hand.
Matrix reference_backbone(const FdvFeatures& f, const PillarAssignment& a, const RvBackbone& net) {
  const std::size_t out = net.stages[1].out_channels;
  Matrix result(a.pillar_count(), out);
  for (std::size_t p = 0; p < a.pillar_count(); ++p) {
    std::vector<std::vector<double>> h1;
    for (std::size_t i = 0; i < f.features.rows; ++i) {
      if (a.feature_index.index[i] != p) continue;
      const auto row = f.features.row(i);
      h1.push_back(dense_layer(net.stages[0], {row.begin(), row.end()}));
    }
    std::vector<double> m1(net.stages[0].out_channels, -1e300);
    for (const auto& h : h1) {
      for (std::size_t c = 0; c < h.size(); ++c) m1[c] = std::max(m1[c], h[c]);
    }
    std::vector<double> m2(out, -1e300);
    for (const auto& h : h1) {
      std::vector<double> cat = h;
      cat.insert(cat.end(), m1.begin(), m1.end());
      const auto h2 = dense_layer(net.stages[1], cat);
      for (std::size_t c = 0; c < out; ++c) m2[c] = std::max(m2[c], h2[c]);
    }
    for (std::size_t c = 0; c < out; ++c) result(p, c) = m2[c];
  }
  return result;
}

struct Fixture {
  PointCloud cloud;
  GridConfig grid;
  PillarAssignment assignment;
  FdvFeatures features;
};

Fixture make_fixture(std::size_t n, std::uint64_t seed, std::uint32_t batches = 1) {
  Rng rng(seed);
  Fixture f;
  const CloudRange r{{-2, -2, -1}, {2, 2, 1}};
  f.cloud = oracle::random_cloud(n, r, batches, rng, 0.0);
  f.grid = compute_pillar_grid(r, 0.5, 0.5);
  f.assignment = assign_pillars(f.cloud, f.grid);
  f.features = fdv_features(f.cloud, f.assignment, f.grid);
  return f;
}

}  // namespace

TEST_CASE("identity PFN passes non-negative input through") {
  const Fixture fx = make_fixture(40, 1);
  Matrix x(fx.features.features.rows, 3);
  Rng rng(2);
  for (double& v : x.data) v = rng.uniform();
  PfnLayerSpec id{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}};
  const PfnOutput out = pfn_stage(x, fx.assignment, id);
  CHECK(out.per_point == x);
  const auto ref = oracle::scatter(x, fx.assignment.feature_index);
  for (std::size_t p = 0; p < fx.assignment.pillar_count(); ++p) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(out.per_pillar(p, c) == ref.max[p][c]);
  }
}

TEST_CASE("pfn_stage rejects a channel mismatch") {
  const Fixture fx = make_fixture(10, 3);
  Rng rng(1);
  CHECK_THROWS_AS(pfn_stage(fx.features.features, fx.assignment, random_pfn_layer(4, 8, rng)),
                  ShapeError);
}

TEST_CASE("single-point backbone by hand") {
  PointCloud c;
  c.push_back({0.3f, -0.2f, 0.1f, 0});
  const GridConfig g = compute_pillar_grid(CloudRange{{-1, -1, -1}, {1, 1, 1}}, 0.5, 0.5);
  const PillarAssignment a = assign_pillars(c, g);
  const FdvFeatures f = fdv_features(c, a, g);
  const RvBackbone net = make_backbone(5, 4, 3);
  const Matrix out = rv_backbone_forward(f, a, net);
  const auto row = f.features.row(0);
  auto h = dense_layer(net.stages[0], {row.begin(), row.end()});
  auto cat = h;
  cat.insert(cat.end(), h.begin(), h.end());
  const auto expect = dense_layer(net.stages[1], cat);
  REQUIRE(out.rows == 1);
  for (std::size_t c = 0; c < 3; ++c) CHECK(out(0, c) == expect[c]);
}

TEST_CASE("backbone matches the naive reference") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Fixture fx = make_fixture(300, seed, 2);
    const RvBackbone net = make_backbone(seed + 10, 8, 6);
    const Matrix out = rv_backbone_forward(fx.features, fx.assignment, net);
    const Matrix ref = reference_backbone(fx.features, fx.assignment, net);
    REQUIRE(out.rows == ref.rows);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      CHECK(std::abs(out.data[i] - ref.data[i]) < 1e-6);
    }
  }
}

TEST_CASE("point order does not change the backbone output") {
  const Fixture fx = make_fixture(500, 7);
  const RvBackbone net = make_backbone(3);
  const Matrix out = rv_backbone_forward(fx.features, fx.assignment, net);

  PointCloud shuffled;
  std::vector<std::size_t> perm(fx.cloud.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(99);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  for (auto i : perm) shuffled.push_back(fx.cloud.points[i], fx.cloud.batch_ids[i]);
  const PillarAssignment a2 = assign_pillars(shuffled, fx.grid);
  const Matrix out2 = rv_backbone_forward(fdv_features(shuffled, a2, fx.grid), a2, net);

  const auto o1 = canonical_order(fx.assignment), o2 = canonical_order(a2);
  REQUIRE(o1.size() == o2.size());
  for (std::size_t k = 0; k < o1.size(); ++k) {
    CHECK(fx.assignment.coords[o1[k]] == a2.coords[o2[k]]);
    for (std::size_t c = 0; c < out.cols; ++c) {
      // Pillar means are summed in a different order, so features may differ
      // in the last bits; the max reductions themselves are order-free.
      CHECK(out(o1[k], c) == doctest::Approx(out2(o2[k], c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("scatter_to_bev places one pillar") {
  PointCloud c;
  c.push_back({3.5f, 2.5f, 0.f, 0});
  const GridConfig g = compute_pillar_grid(CloudRange{{0, 0, -1}, {5, 5, 1}}, 1, 1);
  const PillarAssignment a = assign_pillars(c, g);
  Matrix feat(1, 1);
  feat(0, 0) = 7;
  const auto maps = scatter_to_bev(feat, a, g);
  REQUIRE(maps.size() == 1);
  CHECK(maps[0].at(0, 2, 3) == 7);
  CHECK(std::accumulate(maps[0].data.begin(), maps[0].data.end(), 0.0) == 7);
}

TEST_CASE("scatter_to_bev on an empty cloud is all zero") {
  const GridConfig g = compute_pillar_grid(CloudRange{{0, 0, -1}, {4, 4, 1}}, 1, 1);
  const PillarAssignment a = assign_pillars(PointCloud{}, g);
  const auto maps = scatter_to_bev(Matrix(0, 5), a, g);
  REQUIRE(maps.size() == 1);
  CHECK(maps[0].channels == 5);
  CHECK(std::all_of(maps[0].data.begin(), maps[0].data.end(), [](double v) { return v == 0; }));
}

TEST_CASE("BEV sums match pillar sums and occupancy is bounded") {
  const Fixture fx = make_fixture(800, 12, 2);
  const RvBackbone net = make_backbone(1);
  const Matrix pillars = rv_backbone_forward(fx.features, fx.assignment, net);
  const auto maps = scatter_to_bev(pillars, fx.assignment, fx.grid);
  REQUIRE(maps.size() == 2);
  double map_sum = 0;
  std::size_t nonzero_cells = 0;
  for (const FeatureMap& m : maps) {
    map_sum += std::accumulate(m.data.begin(), m.data.end(), 0.0);
    for (std::size_t r = 0; r < m.height; ++r) {
      for (std::size_t col = 0; col < m.width; ++col) {
        bool any = false;
        for (std::size_t ch = 0; ch < m.channels; ++ch) any = any || m.at(ch, r, col) != 0;
        nonzero_cells += any;
      }
    }
  }
  const double pillar_sum = std::accumulate(pillars.data.begin(), pillars.data.end(), 0.0);
  CHECK(map_sum == doctest::Approx(pillar_sum).epsilon(1e-12));
  std::size_t nonzero_pillars = 0;
  for (std::size_t p = 0; p < pillars.rows; ++p) {
    bool any = false;
    for (std::size_t c = 0; c < pillars.cols; ++c) any = any || pillars(p, c) != 0;
    nonzero_pillars += any;
  }
  CHECK(nonzero_cells <= fx.assignment.pillar_count());
  CHECK(nonzero_cells == nonzero_pillars);
}

TEST_CASE("voxel mode stacks layers into channels") {
  PointCloud c;
  c.push_back({0.5f, 0.5f, 0.75f, 0});
  const GridConfig g = compute_grid(CloudRange{{0, 0, 0}, {2, 2, 1}}, {1, 1, 0.5});
  const PillarAssignment a = assign_pillars(c, g);
  Matrix feat(1, 2);
  feat(0, 0) = 3;
  feat(0, 1) = 4;
  const auto maps = scatter_to_bev(feat, a, g);
  REQUIRE(maps[0].channels == 4);
  CHECK(maps[0].at(2, 0, 0) == 3);
  CHECK(maps[0].at(3, 0, 0) == 4);
}

TEST_CASE("forward output is identical across runs and worker counts") {
  const Fixture fx = make_fixture(20000, 4, 3);
  const RvBackbone net = make_backbone(8);
  set_thread_count(1);
  const Matrix a = rv_backbone_forward(fx.features, fx.assignment, net);
  const auto ma = scatter_to_bev(a, fx.assignment, fx.grid);
  set_thread_count(4);
  const Matrix b = rv_backbone_forward(fx.features, fx.assignment, net);
  const auto mb = scatter_to_bev(b, fx.assignment, fx.grid);
  set_thread_count(0);
  CHECK(a == b);
  CHECK(ma == mb);
  const RvBackbone net2 = make_backbone(8);
  CHECK(net2.stages[0].weights == net.stages[0].weights);
}

TEST_CASE("backbone checkpoint round trip rounds to float32") {
  const RvBackbone net = make_backbone(6);
  const auto bytes = encode_checkpoint(backbone_to_checkpoint(net));
  CHECK(std::equal(kCheckpointMagic, kCheckpointMagic + 8, bytes.begin()));
  const RvBackbone back = backbone_from_checkpoint(decode_checkpoint(bytes));
  for (std::size_t s = 0; s < 2; ++s) {
    REQUIRE(back.stages[s].weights.size() == net.stages[s].weights.size());
    for (std::size_t i = 0; i < net.stages[s].weights.size(); ++i) {
      CHECK(back.stages[s].weights[i] ==
            static_cast<double>(static_cast<float>(net.stages[s].weights[i])));
    }
  }
  CHECK(encode_checkpoint(backbone_to_checkpoint(back)) == bytes);
}

TEST_CASE("checkpoint decoding rejects corrupt input") {
  auto bytes = encode_checkpoint(backbone_to_checkpoint(make_backbone(1, 2, 2)));
  auto bad = bytes;
  bad[0] = 'x';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(std::span(bytes).first(bytes.size() - 3)), FormatError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  Checkpoint other;
  other.metadata = "kind=something-else";
  CHECK_THROWS_AS(backbone_from_checkpoint(other), FormatError);
}
