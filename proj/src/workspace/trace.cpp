#include "ccs/workspace/trace.hpp"

#include <fstream>

#include "ccs/errors.hpp"
#include "json.hpp"

namespace ccs::workspace {

void AttentionTrace::record(const std::string& op, std::size_t stage, std::size_t head, const nn::Tensor& weights) {
  if (weights.rank() != 2) throw ShapeError("attention trace expects a matrix, got " + nn::shape_to_string(weights.shape()));
  records_.push_back({block_, op, stage, head, weights.rows(), weights.cols(), weights.to_vector()});
}

void AttentionTrace::write_jsonl(std::ostream& os) const {
  for (const auto& r : records_) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.rows; ++i) {
      rows.push_back(std::vector<double>(r.weights.begin() + static_cast<std::ptrdiff_t>(i * r.cols),
                                         r.weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * r.cols)));
    }
    nlohmann::json line{{"block", r.block}, {"op", r.op},     {"stage", r.stage},
                        {"head", r.head},   {"rows", r.rows}, {"cols", r.cols},
                        {"weights", rows}};
    os << line.dump() << '\n';
  }
}

void AttentionTrace::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_jsonl(out);
}

}  // namespace ccs::workspace
