#include "ccs/dataset/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "ccs/errors.hpp"
#include "ccs/json_fields.hpp"
#include "ccs/nn/rng.hpp"

namespace ccs::dataset {

using geometry::Vec3;

void GenConfig::validate() const {
  if (primitives.empty()) throw ParameterError("gen config: primitives is empty");
  for (const auto& p : primitives) {
    if (p != "box" && p != "cylinder" && p != "sphere-shell") {
      throw ParameterError("gen config: unknown primitive '" + p + "'");
    }
  }
  if (min_cuts < 1) throw ParameterError("gen config: min_cuts must be at least 1");
  if (max_cuts < min_cuts || max_cuts > 64) throw ParameterError("gen config: max_cuts must be in [min_cuts, 64]");
  if (min_parts < 2 || max_parts < min_parts || max_parts > 20) {
    throw ParameterError("gen config: need 2 <= min_parts <= max_parts <= 20");
  }
  if (n_pc < 1) throw ParameterError("gen config: n_pc must be positive");
  if (dense_points != 0 && dense_points < max_parts * n_pc) {
    throw ParameterError("gen config: dense_points must be at least max_parts * n_pc");
  }
  if (!(jitter >= 0)) throw ParameterError("gen config: jitter must be non-negative");
  if (!(contact_distance > 0)) throw ParameterError("gen config: contact_distance must be positive");
  for (double f : split) {
    if (!(f >= 0)) throw ParameterError("gen config: split fractions must be non-negative");
  }
  if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) {
    throw ParameterError("gen config: split fractions must sum to 1");
  }
}

nlohmann::json to_json(const GenConfig& c) {
  return {{"primitives", c.primitives},
          {"min_cuts", c.min_cuts},
          {"max_cuts", c.max_cuts},
          {"min_parts", c.min_parts},
          {"max_parts", c.max_parts},
          {"n_pc", c.n_pc},
          {"dense_points", c.dense_points},
          {"jitter", c.jitter},
          {"contact_distance", c.contact_distance},
          {"count", c.count},
          {"split", c.split},
          {"seed", c.seed}};
}

GenConfig gen_config_from_json(const nlohmann::json& j) {
  namespace jf = json_fields;
  const std::string ctx = "data";
  jf::expect_object(j, ctx);
  jf::reject_unknown(j,
                     {"primitives", "min_cuts", "max_cuts", "min_parts", "max_parts", "n_pc", "dense_points", "jitter",
                      "contact_distance", "count", "split", "seed"},
                     ctx);
  GenConfig c;
  jf::read(j, "primitives", c.primitives, ctx);
  jf::read(j, "min_cuts", c.min_cuts, ctx);
  jf::read(j, "max_cuts", c.max_cuts, ctx);
  jf::read(j, "min_parts", c.min_parts, ctx);
  jf::read(j, "max_parts", c.max_parts, ctx);
  jf::read(j, "n_pc", c.n_pc, ctx);
  jf::read(j, "dense_points", c.dense_points, ctx);
  jf::read(j, "jitter", c.jitter, ctx);
  jf::read(j, "contact_distance", c.contact_distance, ctx);
  jf::read(j, "count", c.count, ctx);
  jf::read(j, "split", c.split, ctx);
  jf::read(j, "seed", c.seed, ctx);
  return c;
}

namespace {

constexpr double kGrid = 1.0 / 1048576.0;  // 2^-20
constexpr int kMaxAttempts = 16;

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // The smaller root survives, which keeps labels independent of call order.
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

// Uniform grid over [-1, 1]^3 keyed by packed cell coordinates.
class Grid {
 public:
  Grid(const std::vector<Vec3>& points, double cell) : cell_(cell) {
    for (std::uint32_t i = 0; i < points.size(); ++i) cells_[key(coords(points[i]))].push_back(i);
  }

  template <typename F>
  void for_neighbors(const Vec3& p, F&& f) const {
    const auto c = coords(p);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (auto j : it->second) f(j);
        }
  }

 private:
  std::array<std::int64_t, 3> coords(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p[0] / cell_)), static_cast<std::int64_t>(std::floor(p[1] / cell_)),
            static_cast<std::int64_t>(std::floor(p[2] / cell_))};
  }
  static std::int64_t key(const std::array<std::int64_t, 3>& c) {
    constexpr std::int64_t off = 1 << 20;
    return ((c[0] + off) << 42) | ((c[1] + off) << 21) | (c[2] + off);
  }

  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
};

// Dense solid sample normalized to a unit bounding box centered at the origin.
std::vector<Vec3> sample_primitive(const std::string& kind, std::size_t m, double jitter, nn::Rng& rng,
                                   double& volume) {
  std::vector<Vec3> pts;
  pts.reserve(m);
  if (kind == "box") {
    const Vec3 e{rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
    while (pts.size() < m) pts.push_back({rng.uniform(-e[0], e[0]) / 2, rng.uniform(-e[1], e[1]) / 2, rng.uniform(-e[2], e[2]) / 2});
  } else if (kind == "cylinder") {
    const double r = rng.uniform(0.15, 0.5), h = rng.uniform(0.3, 1.0);
    while (pts.size() < m) {
      const double x = rng.uniform(-r, r), y = rng.uniform(-r, r);
      const double z = rng.uniform(-h / 2, h / 2);
      if (x * x + y * y <= r * r) pts.push_back({x, y, z});
    }
  } else {
    const double outer = 0.5, inner = outer - rng.uniform(0.08, 0.2);
    while (pts.size() < m) {
      const Vec3 p{rng.uniform(-outer, outer), rng.uniform(-outer, outer), rng.uniform(-outer, outer)};
      const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
      if (r2 <= outer * outer && r2 >= inner * inner) pts.push_back(p);
    }
  }
  if (jitter > 0) {
    for (auto& p : pts)
      for (auto& c : p) c += jitter * rng.normal();
  }

  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& p : pts)
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  for (auto& p : pts)
    for (int k = 0; k < 3; ++k) p[k] = (p[k] - (lo[k] + hi[k]) / 2) / extent;
  volume = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]) / (extent * extent * extent);
  if (kind == "cylinder") volume *= std::numbers::pi / 4;
  if (kind == "sphere-shell") volume *= 0.5;  // rough: only sets the neighbor radius
  return pts;
}

using PairList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

// Connected components of points sharing a label; labels are renumbered in
// order of first appearance. Returns the component count.
std::size_t relabel_components(const PairList& pairs, std::vector<std::uint32_t>& label) {
  UnionFind uf(label.size());
  for (const auto& [a, b] : pairs)
    if (label[a] == label[b]) uf.unite(a, b);
  std::vector<std::uint32_t> id(label.size(), std::numeric_limits<std::uint32_t>::max());
  std::uint32_t next = 0;
  for (std::uint32_t i = 0; i < label.size(); ++i) {
    auto& r = id[uf.find(i)];
    if (r == std::numeric_limits<std::uint32_t>::max()) r = next++;
    label[i] = r;
  }
  return next;
}

// Cuts the largest piece with a random plane through its centroid, then
// splits every piece into its connected components.
void cut_largest(const std::vector<Vec3>& pts, const PairList& pairs, std::vector<std::uint32_t>& label,
                 std::size_t& pieces, nn::Rng& rng) {
  std::vector<std::size_t> size(pieces, 0);
  for (auto l : label) ++size[l];
  const auto largest = static_cast<std::uint32_t>(std::max_element(size.begin(), size.end()) - size.begin());
  Vec3 c{0, 0, 0};
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (label[i] == largest)
      for (int k = 0; k < 3; ++k) c[k] += pts[i][k] / static_cast<double>(size[largest]);

  Vec3 n;
  double len = 0;
  do {
    n = {rng.normal(), rng.normal(), rng.normal()};
    len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  } while (len < 1e-9);
  const auto fresh = static_cast<std::uint32_t>(pieces);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (label[i] != largest) continue;
    const auto& p = pts[i];
    if (n[0] * (p[0] - c[0]) + n[1] * (p[1] - c[1]) + n[2] * (p[2] - c[2]) > 0) label[i] = fresh;
  }
  pieces = relabel_components(pairs, label);
}

std::size_t count_at_least(const std::vector<std::uint32_t>& label, std::size_t pieces, std::size_t min_size) {
  std::vector<std::size_t> size(pieces, 0);
  for (auto l : label) ++size[l];
  return static_cast<std::size_t>(std::count_if(size.begin(), size.end(), [&](std::size_t s) { return s >= min_size; }));
}

// Merges pieces until at most `target` remain and each has at least
// `min_size` points: the smallest piece joins the neighbor it shares the most
// close point pairs with, or the nearest piece by centroid if it touches none.
std::vector<std::vector<std::uint32_t>> merge_pieces(const std::vector<Vec3>& pts, const PairList& pairs,
                                                     const std::vector<std::uint32_t>& label, std::size_t pieces,
                                                     std::size_t target, std::size_t min_size) {
  std::vector<std::size_t> size(pieces, 0);
  std::vector<Vec3> sum(pieces, Vec3{0, 0, 0});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ++size[label[i]];
    for (int k = 0; k < 3; ++k) sum[label[i]][k] += pts[i][k];
  }
  std::vector<std::map<std::uint32_t, std::size_t>> adj(pieces);
  for (const auto& [a, b] : pairs) {
    if (label[a] == label[b]) continue;
    ++adj[label[a]][label[b]];
    ++adj[label[b]][label[a]];
  }
  std::vector<std::uint32_t> owner(pieces);
  std::iota(owner.begin(), owner.end(), 0u);
  std::vector<std::uint32_t> live(pieces);
  std::iota(live.begin(), live.end(), 0u);

  while (live.size() > 1) {
    std::uint32_t small = live[0];
    for (auto c : live)
      if (size[c] < size[small]) small = c;
    if (live.size() <= target && size[small] >= min_size) break;

    std::uint32_t into = std::numeric_limits<std::uint32_t>::max();
    std::size_t best = 0;
    for (const auto& [other, count] : adj[small]) {
      if (count > best) {
        best = count;
        into = other;
      }
    }
    if (best == 0) {
      double nearest = std::numeric_limits<double>::infinity();
      const auto mean = [&](std::uint32_t c) {
        return Vec3{sum[c][0] / size[c], sum[c][1] / size[c], sum[c][2] / size[c]};
      };
      for (auto c : live) {
        if (c == small) continue;
        const double d = geometry::squared_distance(mean(c), mean(small));
        if (d < nearest) {
          nearest = d;
          into = c;
        }
      }
    }
    size[into] += size[small];
    for (int k = 0; k < 3; ++k) sum[into][k] += sum[small][k];
    for (const auto& [other, count] : adj[small]) {
      adj[other].erase(small);
      if (other == into) continue;
      adj[into][other] += count;
      adj[other][into] += count;
    }
    adj[small].clear();
    for (auto& o : owner)
      if (o == small) o = into;
    live.erase(std::find(live.begin(), live.end(), small));
  }

  std::vector<std::uint32_t> index(pieces, 0);
  for (std::uint32_t i = 0; i < live.size(); ++i) index[live[i]] = i;
  std::vector<std::vector<std::uint32_t>> out(live.size());
  for (std::uint32_t i = 0; i < pts.size(); ++i) out[index[owner[label[i]]]].push_back(i);
  return out;
}

// Rounds to the 2^-20 grid and nudges single grid steps until every axis sums
// to exactly zero.
std::vector<Vec3> quantize_zero_mean(const std::vector<Vec3>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::array<std::int64_t, 3>> q(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) q[i][k] = std::llround(pts[i][k] / kGrid);
  for (int k = 0; k < 3; ++k) {
    std::int64_t total = 0;
    for (const auto& v : q) total += v[k];
    for (std::size_t i = 0; total != 0; i = (i + 1) % n) {
      const std::int64_t step = total > 0 ? 1 : -1;
      q[i][k] -= step;
      total -= step;
    }
  }
  std::vector<Vec3> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) out[i][k] = static_cast<double>(q[i][k]) * kGrid;
  return out;
}

std::vector<Contact> find_contacts(const std::vector<Vec3>& pts, const std::vector<std::uint32_t>& owner,
                                   std::size_t parts, double distance) {
  const Grid grid(pts, distance);
  const double limit = distance * distance;
  std::vector<double> best(parts * parts, limit);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> arg(parts * parts, {0, 0});
  for (std::uint32_t a = 0; a < pts.size(); ++a) {
    grid.for_neighbors(pts[a], [&](std::uint32_t b) {
      if (owner[b] <= owner[a]) return;
      const double d = geometry::squared_distance(pts[a], pts[b]);
      const std::size_t slot = owner[a] * parts + owner[b];
      if (d < best[slot] || (d == best[slot] && d < limit && std::pair(a, b) < arg[slot])) {
        best[slot] = d;
        arg[slot] = {a, b};
      }
    });
  }
  std::vector<Contact> contacts;
  for (std::size_t i = 0; i < parts; ++i)
    for (std::size_t j = i + 1; j < parts; ++j) {
      const std::size_t slot = i * parts + j;
      if (best[slot] < limit) contacts.push_back({i, j, pts[arg[slot].first], pts[arg[slot].second]});
    }
  return contacts;
}

GeneratedShape try_generate(const GenConfig& config, std::uint64_t seed) {
  nn::Rng rng(seed);
  const std::string& kind = config.primitives[rng.below(config.primitives.size())];
  const std::size_t m = config.dense_points != 0 ? config.dense_points : 2 * config.max_parts * config.n_pc;
  double volume = 1.0;
  const auto pts = sample_primitive(kind, m, config.jitter, rng, volume);

  const double radius = 2.0 * std::cbrt(volume / static_cast<double>(m));
  PairList pairs;
  {
    const Grid grid(pts, radius);
    for (std::uint32_t i = 0; i < m; ++i) {
      grid.for_neighbors(pts[i], [&](std::uint32_t j) {
        if (j > i && geometry::squared_distance(pts[i], pts[j]) < radius * radius) pairs.push_back({i, j});
      });
    }
    std::sort(pairs.begin(), pairs.end());
  }

  const std::size_t target = config.min_parts + rng.below(config.max_parts - config.min_parts + 1);
  std::vector<std::uint32_t> label(m, 0);
  std::size_t pieces = relabel_components(pairs, label);
  for (std::size_t cuts = 0; cuts < config.max_cuts; ++cuts) {
    if (cuts >= config.min_cuts && count_at_least(label, pieces, config.n_pc) >= target) break;
    cut_largest(pts, pairs, label, pieces, rng);
  }
  const auto parts = merge_pieces(pts, pairs, label, pieces, target, config.n_pc);
  const std::size_t n = parts.size();
  if (n < config.min_parts) return {};

  GeneratedShape out;
  out.record.category = kind;
  std::vector<std::uint32_t> owner(m);
  std::vector<geometry::Quaternion> canon(n);
  std::vector<Vec3> centers(n);
  for (std::size_t p = 0; p < n; ++p) {
    auto idx = parts[p];
    for (auto i : idx) owner[i] = static_cast<std::uint32_t>(p);
    for (std::size_t i = 0; i < config.n_pc; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    std::vector<Vec3> world;
    for (std::size_t i = 0; i < config.n_pc; ++i) world.push_back(pts[idx[i]]);
    const PointCloud source(world);
    centers[p] = geometry::centroid(source);
    canon[p] = geometry::random_rotation(rng);

    const auto m3 = geometry::quat_to_matrix(canon[p]);
    std::vector<Vec3> local;
    for (const auto& w : world) {
      local.push_back(geometry::apply(m3, {w[0] - centers[p][0], w[1] - centers[p][1], w[2] - centers[p][2]}));
    }
    out.source_parts.push_back(source);
    out.record.parts.emplace_back(quantize_zero_mean(local));
    out.record.gt_poses.push_back({geometry::quat_conjugate(canon[p]), centers[p]});
  }

  for (auto c : find_contacts(pts, owner, n, config.contact_distance)) {
    const auto to_local = [&](std::size_t p, const Vec3& w) {
      return geometry::rotate(canon[p], {w[0] - centers[p][0], w[1] - centers[p][1], w[2] - centers[p][2]});
    };
    c.on_i = to_local(c.i, c.on_i);
    c.on_j = to_local(c.j, c.on_j);
    out.record.contacts.push_back(c);
  }
  return out;
}

}  // namespace

GeneratedShape generate_shape_with_source(const GenConfig& config, std::uint64_t seed) {
  config.validate();
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    auto shape = try_generate(config, attempt == 0 ? seed : nn::mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    if (shape.record.parts.size() >= config.min_parts) {
      shape.record.shape_id = "shape";
      return shape;
    }
  }
  throw ContractError("could not generate a shape with at least " + std::to_string(config.min_parts) +
                      " parts from seed " + std::to_string(seed));
}

ShapeRecord generate_shape(const GenConfig& config, std::uint64_t seed) {
  return generate_shape_with_source(config, seed).record;
}

std::vector<ShapeRecord> generate_dataset(const GenConfig& config, std::size_t threads) {
  config.validate();
  std::vector<ShapeRecord> records(config.count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(config.count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto work = [&] {
    for (std::size_t s = next++; s < config.count && !failed; s = next++) {
      try {
        records[s] = generate_shape(config, nn::mix_seed(config.seed, s));
        char id[32];
        std::snprintf(id, sizeof id, "shape_%05zu", s);
        records[s].shape_id = id;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace ccs::dataset
