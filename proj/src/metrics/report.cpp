#include "ccs/metrics/report.hpp"

#include <cstdio>
#include <string>

#include "ccs/errors.hpp"

namespace ccs::metrics {

ShapeMetrics score_shape(std::span<const Pose> pred, std::span<const Pose> gt, std::span<const PointCloud> parts,
                         std::span<const Contact> contacts, const Thresholds& thresholds) {
  ShapeMetrics m;
  m.parts = parts.size();
  m.scd = shape_cd(pred, gt, parts);
  m.pa = part_accuracy(pred, gt, parts, thresholds.part);
  const auto ca = connectivity_accuracy(pred, contacts, thresholds.contact);
  m.ca = ca.accuracy;
  m.ca_vacuous = ca.vacuous;
  m.rmse_r = rmse_rotation(pred, gt);
  m.rmse_t = rmse_translation(pred, gt);
  m.geodesic = mean_geodesic_deg(pred, gt);
  return m;
}

ShapeMetrics score_min_matching(std::span<const std::vector<Pose>> candidates, std::span<const Pose> gt,
                                std::span<const PointCloud> parts, std::span<const Contact> contacts,
                                const Thresholds& thresholds) {
  if (candidates.empty()) throw ContractError("score_min_matching: no candidates");
  std::vector<double> scds;
  for (const auto& c : candidates) scds.push_back(shape_cd(c, gt, parts));
  const std::size_t best = min_matching_select(scds);
  auto m = score_shape(candidates[best], gt, parts, contacts, thresholds);
  m.sample = best;
  return m;
}

MetricsReport make_report(std::vector<ShapeMetrics> shapes, const Thresholds& thresholds) {
  MetricsReport r;
  r.thresholds = thresholds;
  r.shapes = std::move(shapes);
  r.aggregate.shape_id = "mean";
  if (r.shapes.empty()) return r;
  for (const auto& s : r.shapes) {
    r.aggregate.parts += s.parts;
    r.aggregate.scd += s.scd;
    r.aggregate.pa += s.pa;
    r.aggregate.ca += s.ca;
    r.aggregate.rmse_r += s.rmse_r;
    r.aggregate.rmse_t += s.rmse_t;
    r.aggregate.geodesic += s.geodesic;
    if (s.ca_vacuous) r.warnings.push_back("shape " + s.shape_id + " has no contacts; CA counted as 1");
  }
  const double n = static_cast<double>(r.shapes.size());
  r.aggregate.scd /= n;
  r.aggregate.pa /= n;
  r.aggregate.ca /= n;
  r.aggregate.rmse_r /= n;
  r.aggregate.rmse_t /= n;
  r.aggregate.geodesic /= n;
  return r;
}

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void csv_row(std::ostream& os, const ShapeMetrics& m) {
  os << m.shape_id << ',' << m.parts << ',' << m.sample << ',' << g17(m.scd) << ',' << g17(m.pa) << ','
     << g17(m.ca) << ',' << g17(m.rmse_r) << ',' << g17(m.rmse_t) << ',' << g17(m.geodesic) << '\n';
}

}  // namespace

void MetricsReport::write_csv(std::ostream& os) const {
  os << "# scd=mean-form chamfer (mean_a + mean_b) of assembled shapes\n"
     << "# pa_tau=" << g17(thresholds.part) << " on per-part mean-form chamfer\n"
     << "# ca_tau=" << g17(thresholds.contact) << " on squared contact distance\n"
     << "# rmse_r=intrinsic XYZ euler degrees, wrapped to (-180,180]\n"
     << "shape_id,parts,sample,scd,pa,ca,rmse_r_deg,rmse_t,geodesic_deg\n";
  for (const auto& s : shapes) csv_row(os, s);
  csv_row(os, aggregate);
}

void MetricsReport::write_table(std::ostream& os) const {
  char line[256];
  os << "thresholds: tau=" << thresholds.part << " tau_c=" << thresholds.contact
     << " | euler: intrinsic XYZ (deg) | SCD: mean-form, x1e3\n";
  std::snprintf(line, sizeof line, "%-12s %5s %12s %8s %8s %12s %10s %12s\n", "shape", "parts", "SCD(x1e3)", "PA",
                "CA", "RMSE(R)deg", "RMSE(T)", "geodesic");
  os << line;
  const auto row = [&](const ShapeMetrics& m) {
    std::snprintf(line, sizeof line, "%-12s %5zu %12.4f %8.4f %8.4f %12.4f %10.5f %12.4f\n", m.shape_id.c_str(),
                  m.parts, m.scd * 1e3, m.pa, m.ca, m.rmse_r, m.rmse_t, m.geodesic);
    os << line;
  };
  for (const auto& s : shapes) row(s);
  row(aggregate);
  for (const auto& w : warnings) os << "warning: " << w << '\n';
}

}  // namespace ccs::metrics
