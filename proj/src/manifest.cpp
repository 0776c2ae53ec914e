#include "topohead/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "topohead/error.hpp"

namespace topohead::io {
namespace {

using nlohmann::json;

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedManifest,
              "manifest line " + std::to_string(line) + ": " + why);
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(line, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

SampleRecord parse_record(const json& obj, std::size_t line,
                          const std::filesystem::path& base_dir) {
  if (!obj.is_object()) malformed(line, "expected a JSON object");
  SampleRecord rec;

  auto id = optional_string(obj, "id", line);
  if (!id || id->empty()) malformed(line, "missing 'id'");
  rec.id = *id;

  auto label = optional_string(obj, "label", line);
  if (!label) malformed(line, "missing 'label'");
  rec.label = *label;

  rec.speaker = optional_string(obj, "speaker", line);
  rec.group = optional_string(obj, "group", line);

  if (auto it = obj.find("pair_of"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_string() ||
        !(*it)[1].is_string()) {
      malformed(line, "'pair_of' must be an array of two ids");
    }
    rec.pair_of = std::make_pair((*it)[0].get<std::string>(), (*it)[1].get<std::string>());
  }

  if (auto it = obj.find("duration_s"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) malformed(line, "'duration_s' must be a number");
    rec.duration_s = it->get<double>();
  }

  auto dir = optional_string(obj, "tensor_dir", line);
  if (!dir && !rec.pair_of) malformed(line, "missing 'tensor_dir'");
  if (dir) {
    std::filesystem::path p(*dir);
    rec.tensor_dir = p.is_absolute() ? p : base_dir / p;
  }
  return rec;
}

}  // namespace

std::vector<SampleRecord> parse_manifest(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  std::vector<SampleRecord> records;
  std::unordered_map<std::string, std::size_t> first_line;
  std::vector<std::size_t> line_of;

  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::parse_error& e) {
      malformed(line, e.what());
    }
    auto rec = parse_record(obj, line, base_dir);
    auto [it, inserted] = first_line.emplace(rec.id, line);
    if (!inserted) {
      throw Error(ErrorCode::DuplicateId,
                  "manifest line " + std::to_string(line) + ": duplicate id '" +
                      rec.id + "' (first seen on line " + std::to_string(it->second) + ")");
    }
    records.push_back(std::move(rec));
    line_of.push_back(line);
  }

  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& rec = records[k];
    if (!rec.pair_of) continue;
    for (const auto* ref : {&rec.pair_of->first, &rec.pair_of->second}) {
      if (!first_line.contains(*ref)) {
        throw Error(ErrorCode::DanglingReference,
                    "manifest line " + std::to_string(line_of[k]) + ": pair_of refers to unknown id '" +
                        *ref + "'");
      }
    }
  }
  return records;
}

std::vector<SampleRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  for (const auto& rec : records) {
    json obj;
    obj["id"] = rec.id;
    if (!rec.tensor_dir.empty()) obj["tensor_dir"] = rec.tensor_dir.string();
    obj["label"] = rec.label;
    if (rec.speaker) obj["speaker"] = *rec.speaker;
    if (rec.group) obj["group"] = *rec.group;
    if (rec.pair_of) obj["pair_of"] = {rec.pair_of->first, rec.pair_of->second};
    if (rec.duration_s) obj["duration_s"] = *rec.duration_s;
    out << obj.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace topohead::io
