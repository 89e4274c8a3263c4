#include <cmath>
#include <numbers>
#include <sstream>

#include "ccs/errors.hpp"
#include "ccs/metrics/report.hpp"
#include "doctest.h"
#include "support/brute_force.hpp"

using namespace ccs::metrics;
using ccs::geometry::Quaternion;
using ccs::geometry::Vec3;
using ccs::nn::Rng;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n) {
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
  return PointCloud(pts);
}

std::vector<Pose> random_poses(Rng& rng, std::size_t n) {
  std::vector<Pose> out(n);
  for (auto& p : out) p = {ccs::geometry::random_rotation(rng), {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
  return out;
}

Pose about_z(double degrees) {
  return {ccs::geometry::quat_normalize(ccs::geometry::quat_from_axis_angle({0, 0, 1}, degrees * std::numbers::pi / 180)),
          {0, 0, 0}};
}

}  // namespace

TEST_CASE("min_matching_select") {
  CHECK(min_matching_select(std::vector<double>{4.0}) == 0);
  CHECK(min_matching_select(std::vector<double>{3, 1, 2}) == 1);
  CHECK(min_matching_select(std::vector<double>{2, 1, 1, 5}) == 1);
  CHECK_THROWS_AS(min_matching_select(std::vector<double>{}), ccs::ContractError);
}

TEST_CASE("shape_cd") {
  Rng rng(1);
  std::vector<PointCloud> parts{random_cloud(rng, 10), random_cloud(rng, 10)};
  const auto gt = random_poses(rng, 2);
  CHECK(shape_cd(gt, gt, parts) == 0.0);

  const auto pred = random_poses(rng, 2);
  const double cd = shape_cd(pred, gt, parts);
  const double brute = ccs::testing::brute_force_chamfer(ccs::geometry::assemble_shape(pred, parts),
                                                         ccs::geometry::assemble_shape(gt, parts));
  CHECK(cd == doctest::Approx(brute / 20).epsilon(1e-14));

  std::vector<PointCloud> doubled;
  for (const auto& p : parts) {
    std::vector<Vec3> pts(p.begin(), p.end());
    pts.insert(pts.end(), p.begin(), p.end());
    doubled.emplace_back(pts);
  }
  CHECK(shape_cd(pred, gt, doubled) == doctest::Approx(cd).epsilon(1e-14));
}

TEST_CASE("part_accuracy") {
  Rng rng(2);
  std::vector<PointCloud> parts{random_cloud(rng, 8), random_cloud(rng, 8)};
  const auto gt = random_poses(rng, 2);
  CHECK(part_accuracy(gt, gt, parts) == 1.0);
  auto pred = gt;
  pred[1].translation[0] += 5.0;
  CHECK(part_accuracy(pred, gt, parts) == 0.5);

  SUBCASE("threshold edge at 2τ") {
    const std::vector<PointCloud> one{PointCloud({{0, 0, 0}})};
    const std::vector<Pose> origin{Pose::identity()};
    // A single point shifted by δ gives δ² in each direction: 2δ² = 2τ.
    const std::vector<Pose> shifted{{Quaternion::identity(), {0.125, 0, 0}}};
    const double tau = 0.125 * 0.125;
    CHECK(part_accuracy(shifted, origin, one, 2 * tau) == 0.0);
    CHECK(part_accuracy(shifted, origin, one, 2 * tau * (1 + 1e-12)) == 1.0);
    CHECK(part_accuracy(shifted, origin, one, tau) == 0.0);
  }
  SUBCASE("monotone in τ") {
    std::vector<PointCloud> many;
    for (int i = 0; i < 6; ++i) many.push_back(random_cloud(rng, 8));
    const auto g = random_poses(rng, 6);
    auto p = g;
    for (auto& pose : p)
      for (auto& t : pose.translation) t += rng.uniform(-0.15, 0.15);
    double previous = 1.0;
    for (double tau : {1.0, 0.1, 0.03, 0.01, 0.003, 0.001, 1e-4}) {
      const double pa = part_accuracy(p, g, many, tau);
      CHECK(pa <= previous);
      previous = pa;
    }
  }
}

TEST_CASE("connectivity_accuracy") {
  const std::vector<Pose> gt{Pose::identity(), {Quaternion::identity(), {1, 0, 0}}};
  const std::vector<Contact> contacts{{0, 1, {0.5, 0, 0}, {-0.5, 0, 0}}, {0, 1, {0.5, 0.1, 0}, {-0.5, 0.1, 0}}};
  CHECK(connectivity_accuracy(gt, contacts).accuracy == 1.0);

  auto near = gt;
  near[1].translation[1] = 0.05;  // squared gap 0.0025
  CHECK(connectivity_accuracy(near, contacts).accuracy == 1.0);
  auto far = gt;
  far[1].translation[1] = 0.2;  // squared gap 0.04
  CHECK(connectivity_accuracy(far, contacts).accuracy == 0.0);
  CHECK(connectivity_accuracy(far, std::span(contacts).first(1), 0.05).accuracy == 1.0);

  const auto none = connectivity_accuracy(gt, {});
  CHECK(none.accuracy == 1.0);
  CHECK(none.vacuous);
  const std::vector<Contact> bad{{0, 3, {0, 0, 0}, {0, 0, 0}}};
  CHECK_THROWS_AS(connectivity_accuracy(gt, bad), ccs::ContractError);
}

TEST_CASE("rmse") {
  Rng rng(3);
  const auto g = random_poses(rng, 4);
  CHECK(rmse_rotation(g, g) == 0.0);
  CHECK(rmse_translation(g, g) == 0.0);

  const std::vector<Pose> id{Pose::identity()};
  const std::vector<Pose> z90{about_z(90)};
  CHECK(rmse_rotation(z90, id) == doctest::Approx(90 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(mean_geodesic_deg(z90, id) == doctest::Approx(90.0));
  CHECK(rmse_rotation(std::vector<Pose>{about_z(179)}, std::vector<Pose>{about_z(-179)}) ==
        doctest::Approx(2 / std::sqrt(3.0)).epsilon(1e-9));

  const std::vector<Pose> moved{{Quaternion::identity(), {1, 2, 2}}};
  CHECK(rmse_translation(moved, id) == doctest::Approx(std::sqrt(9.0 / 3)));
}

TEST_CASE("metrics are invariant to consistent re-indexing") {
  Rng rng(4);
  std::vector<PointCloud> parts{random_cloud(rng, 6), random_cloud(rng, 6), random_cloud(rng, 6)};
  const auto gt = random_poses(rng, 3);
  const auto pred = random_poses(rng, 3);
  const std::vector<Contact> contacts{{0, 1, {0.1, 0, 0}, {0, 0.1, 0}}, {1, 2, {0, 0, 0.1}, {0.1, 0.1, 0}}};
  const std::vector<std::size_t> perm{2, 0, 1};
  std::vector<std::size_t> inverse(3);
  for (std::size_t i = 0; i < 3; ++i) inverse[perm[i]] = i;
  std::vector<PointCloud> pp;
  std::vector<Pose> pg, ppred;
  for (auto p : perm) {
    pp.push_back(parts[p]);
    pg.push_back(gt[p]);
    ppred.push_back(pred[p]);
  }
  std::vector<Contact> pc;
  for (const auto& c : contacts) pc.push_back({inverse[c.i], inverse[c.j], c.on_i, c.on_j});
  const auto a = score_shape(pred, gt, parts, contacts, {0.5, 0.5});
  const auto b = score_shape(ppred, pg, pp, pc, {0.5, 0.5});
  CHECK(a.scd == doctest::Approx(b.scd).epsilon(1e-14));
  CHECK(a.pa == b.pa);
  CHECK(a.ca == b.ca);
  CHECK(a.rmse_r == doctest::Approx(b.rmse_r).epsilon(1e-14));
  CHECK(a.rmse_t == doctest::Approx(b.rmse_t).epsilon(1e-14));
}

TEST_CASE("perfect prediction is the fixed point") {
  Rng rng(5);
  std::vector<PointCloud> parts{random_cloud(rng, 6), random_cloud(rng, 6), random_cloud(rng, 6)};
  const auto gt = random_poses(rng, 3);
  const std::vector<Contact> true_contact{
      {0, 2, parts[0][0], ccs::geometry::pose_inverse(gt[2]).apply(gt[0].apply(parts[0][0]))}};
  const auto exact = score_shape(gt, gt, parts, true_contact, {});
  CHECK(exact.scd == 0.0);
  CHECK(exact.pa == 1.0);
  CHECK(exact.ca == 1.0);
  CHECK(exact.rmse_r == 0.0);
  CHECK(exact.rmse_t == 0.0);
}

TEST_CASE("min matching picks the lowest SCD candidate") {
  Rng rng(6);
  std::vector<PointCloud> parts{random_cloud(rng, 6), random_cloud(rng, 6)};
  const auto gt = random_poses(rng, 2);
  auto off = gt;
  off[0].translation[2] += 0.5;
  auto slightly = gt;
  slightly[1].translation[2] += 0.01;
  const std::vector<std::vector<Pose>> candidates{off, slightly, off};
  const auto m = score_min_matching(candidates, gt, parts, {}, {});
  CHECK(m.sample == 1);
  CHECK(m.scd == shape_cd(slightly, gt, parts));
}

TEST_CASE("report csv and table") {
  std::vector<ShapeMetrics> rows(3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].shape_id = "s" + std::to_string(i);
    rows[i].parts = 2 + i;
    rows[i].scd = 0.001 * (i + 1) / 3.0;
    rows[i].pa = 1.0 / (i + 1);
    rows[i].ca = 0.5;
    rows[i].rmse_r = 10.0 * i;
    rows[i].rmse_t = 0.1 / 7 * i;
  }
  rows[2].ca_vacuous = true;
  const auto report = make_report(rows, {});
  REQUIRE(report.warnings.size() == 1);

  std::ostringstream csv;
  report.write_csv(csv);
  std::istringstream in(csv.str());
  std::string line;
  std::vector<std::vector<std::string>> table;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    table.push_back(cells);
  }
  REQUIRE(table.size() == 5);
  CHECK(table[0][3] == "scd");
  for (std::size_t col = 3; col <= 8; ++col) {
    double sum = 0;
    for (std::size_t r = 1; r <= 3; ++r) sum += std::stod(table[r][col]);
    CHECK(std::stod(table[4][col]) == doctest::Approx(sum / 3).epsilon(1e-15));
  }
  CHECK(std::stod(table[1][3]) == rows[0].scd);

  std::ostringstream pretty;
  report.write_table(pretty);
  CHECK(pretty.str().find("SCD(x1e3)") != std::string::npos);
  CHECK(pretty.str().find("0.3333") != std::string::npos);
  CHECK(pretty.str().find("warning: shape s2") != std::string::npos);
}
