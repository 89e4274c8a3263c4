#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ccs/nn/tensor.hpp"

namespace ccs::workspace {

struct AttentionRecord {
  std::string block;  // "routing" or "workspace"
  std::string op;     // "write" or "read"
  std::size_t stage = 0;
  std::size_t head = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;  // row-major [rows×cols]
};

// Collects attention matrices during a forward pass. One JSON object per
// line: {"block","op","stage","head","rows","cols","weights":[[...],...]}.
class AttentionTrace {
 public:
  void set_block(std::string block) { block_ = std::move(block); }
  void record(const std::string& op, std::size_t stage, std::size_t head, const nn::Tensor& weights);

  const std::vector<AttentionRecord>& records() const { return records_; }
  void clear() { records_.clear(); }

  void write_jsonl(std::ostream& os) const;
  void write_jsonl(const std::filesystem::path& path) const;

 private:
  std::string block_ = "workspace";
  std::vector<AttentionRecord> records_;
};

}  // namespace ccs::workspace
