#include "ccs/dataset/storage.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ccs/errors.hpp"

namespace ccs::dataset {

namespace fs = std::filesystem;
using geometry::Vec3;

static_assert(std::endian::native == std::endian::little, "part files are written in native little-endian order");

const ShapeRecord& Dataset::find(const std::string& shape_id) const {
  for (const auto& s : shapes)
    if (s.shape_id == shape_id) return s;
  throw ContractError("no shape with id '" + shape_id + "'");
}

std::vector<ShapeRecord> Dataset::subset(const std::string& split) const {
  const auto it = splits.find(split);
  if (it == splits.end()) throw ContractError("dataset has no '" + split + "' split");
  std::vector<ShapeRecord> out;
  for (const auto& id : it->second) out.push_back(find(id));
  return out;
}

namespace {

std::string format_numbers(std::initializer_list<double> values) {
  std::string out;
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!out.empty()) out += ' ';
    out += buf;
  }
  return out;
}

std::vector<double> parse_numbers(const nlohmann::json& j, std::size_t count, const std::string& where) {
  if (!j.is_string()) throw ParseError(where + ": expected a string of " + std::to_string(count) + " numbers");
  std::istringstream in(j.get<std::string>());
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (*end != '\0' || !std::isfinite(v)) throw ParseError(where + ": bad number '" + token + "'");
    out.push_back(v);
  }
  if (out.size() != count) {
    throw ParseError(where + ": expected " + std::to_string(count) + " numbers, got " + std::to_string(out.size()));
  }
  return out;
}

void check_id(const std::string& id) {
  if (id.empty()) throw ContractError("shape id is empty");
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') {
      throw ContractError("shape id '" + id + "' contains '" + std::string(1, c) + "'");
    }
  }
}

void write_part(const fs::path& file, const PointCloud& part) {
  std::vector<float> values;
  values.reserve(part.size() * 3);
  for (const auto& p : part) {
    for (double c : p) {
      const auto f = static_cast<float>(c);
      if (static_cast<double>(f) != c) {
        throw ContractError(file.string() + ": coordinate " + format_numbers({c}) + " is not exact in float32");
      }
      values.push_back(f);
    }
  }
  std::ofstream out(file, std::ios::binary);
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw std::runtime_error("cannot write " + file.string());
}

PointCloud read_part(const fs::path& file, std::size_t n_pc) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(file.string() + ": cannot open part file");
  std::vector<float> values(n_pc * 3);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(float)) || in.peek() != EOF) {
    throw ParseError(file.string() + ": expected exactly " + std::to_string(n_pc) + " points");
  }
  std::vector<Vec3> pts(n_pc);
  for (std::size_t i = 0; i < n_pc; ++i) {
    for (int k = 0; k < 3; ++k) {
      const double v = values[i * 3 + k];
      if (!std::isfinite(v)) throw ParseError(file.string() + ": non-finite coordinate at point " + std::to_string(i));
      pts[i][k] = v;
    }
  }
  return PointCloud(std::move(pts));
}

const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + "." + key + ": missing");
  return *it;
}

std::size_t read_index(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number_unsigned()) throw ParseError(where + "." + key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

std::string read_string(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace

void save_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir / "parts");
  nlohmann::json shapes = nlohmann::json::array();
  std::set<std::string> seen;
  for (const auto& s : data.shapes) {
    check_id(s.shape_id);
    if (!seen.insert(s.shape_id).second) throw ContractError("duplicate shape id '" + s.shape_id + "'");
    if (s.gt_poses.size() != s.parts.size()) throw ContractError(s.shape_id + ": pose count differs from part count");
    nlohmann::json parts = nlohmann::json::array();
    for (std::size_t k = 0; k < s.parts.size(); ++k) {
      if (s.parts[k].size() != data.n_pc) {
        throw ContractError(s.shape_id + " part " + std::to_string(k) + " has " + std::to_string(s.parts[k].size()) +
                            " points, expected " + std::to_string(data.n_pc));
      }
      const std::string name = s.shape_id + "_" + std::to_string(k) + ".bin";
      write_part(dir / "parts" / name, s.parts[k]);
      const auto& q = s.gt_poses[k].rotation;
      const auto& t = s.gt_poses[k].translation;
      parts.push_back({{"file", "parts/" + name}, {"pose", format_numbers({q.w, q.x, q.y, q.z, t[0], t[1], t[2]})}});
    }
    nlohmann::json contacts = nlohmann::json::array();
    for (const auto& c : s.contacts) {
      contacts.push_back({{"i", c.i},
                          {"j", c.j},
                          {"on_i", format_numbers({c.on_i[0], c.on_i[1], c.on_i[2]})},
                          {"on_j", format_numbers({c.on_j[0], c.on_j[1], c.on_j[2]})}});
    }
    shapes.push_back({{"id", s.shape_id}, {"category", s.category}, {"parts", parts}, {"contacts", contacts}});
  }
  const nlohmann::json manifest{{"format", "ccs-fracture-dataset"},
                                {"version", kFormatVersion},
                                {"n_pc", data.n_pc},
                                {"shapes", shapes},
                                {"splits", data.splits}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(1) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

Dataset load_dataset(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const std::string file = path.string();
  if (read_string(manifest, "format", file) != "ccs-fracture-dataset") throw ParseError(file + ".format: unknown format");
  const auto& version = field(manifest, "version", file);
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    throw ParseError(file + ".version: expected " + std::to_string(kFormatVersion) + ", got " + version.dump());
  }

  Dataset data;
  data.n_pc = read_index(manifest, "n_pc", file);
  const auto& shapes = field(manifest, "shapes", file);
  if (!shapes.is_array()) throw ParseError(file + ".shapes: expected an array");
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const std::string where = file + ".shapes[" + std::to_string(s) + "]";
    const auto& js = shapes[s];
    ShapeRecord record;
    record.shape_id = read_string(js, "id", where);
    record.category = read_string(js, "category", where);
    const auto& parts = field(js, "parts", where);
    if (!parts.is_array()) throw ParseError(where + ".parts: expected an array");
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const std::string pw = where + ".parts[" + std::to_string(k) + "]";
      record.parts.push_back(read_part(dir / read_string(parts[k], "file", pw), data.n_pc));
      const auto v = parse_numbers(field(parts[k], "pose", pw), 7, pw + ".pose");
      record.gt_poses.push_back({geometry::Quaternion{v[0], v[1], v[2], v[3]}, {v[4], v[5], v[6]}});
    }
    const auto& contacts = field(js, "contacts", where);
    if (!contacts.is_array()) throw ParseError(where + ".contacts: expected an array");
    for (std::size_t c = 0; c < contacts.size(); ++c) {
      const std::string cw = where + ".contacts[" + std::to_string(c) + "]";
      Contact contact;
      contact.i = read_index(contacts[c], "i", cw);
      contact.j = read_index(contacts[c], "j", cw);
      if (contact.i >= record.parts.size() || contact.j >= record.parts.size() || contact.i == contact.j) {
        throw ParseError(cw + ": part indices out of range");
      }
      const auto a = parse_numbers(field(contacts[c], "on_i", cw), 3, cw + ".on_i");
      const auto b = parse_numbers(field(contacts[c], "on_j", cw), 3, cw + ".on_j");
      contact.on_i = {a[0], a[1], a[2]};
      contact.on_j = {b[0], b[1], b[2]};
      record.contacts.push_back(contact);
    }
    data.shapes.push_back(std::move(record));
  }

  if (manifest.contains("splits")) {
    const auto& splits = manifest["splits"];
    if (!splits.is_object()) throw ParseError(file + ".splits: expected an object");
    std::set<std::string> ids;
    for (const auto& s : data.shapes) ids.insert(s.shape_id);
    for (const auto& [name, list] : splits.items()) {
      if (!list.is_array()) throw ParseError(file + ".splits." + name + ": expected an array");
      for (const auto& id : list) {
        if (!id.is_string() || !ids.count(id.get<std::string>())) {
          throw ParseError(file + ".splits." + name + ": unknown shape id " + id.dump());
        }
        data.splits[name].push_back(id.get<std::string>());
      }
    }
  }
  return data;
}

}  // namespace ccs::dataset
