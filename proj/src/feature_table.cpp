#include "topohead/feature_table.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "topohead/error.hpp"

namespace topohead {
namespace {

void append_field(std::string& out, const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) {
    out += field;
    return;
  }
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

/// Splits one CSV record starting at `pos`; advances `pos` past the line end.
std::vector<std::string> next_record(const std::string& text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          field += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::InvalidArgument,
                "features CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::size_t FeatureTable::column(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    throw Error(ErrorCode::InvalidArgument, "features CSV has no column '" + name + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

void FeatureTable::sort_by_id() {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FeatureRow& a, const FeatureRow& b) { return a.id < b.id; });
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string render_feature_csv(const FeatureTable& table) {
  std::string out;
  out.reserve(64 + table.rows.size() * (table.names.size() * 12 + 32));
  out += "id,label,speaker,group";
  for (const auto& name : table.names) {
    out += ',';
    append_field(out, name);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.values.size() != table.names.size()) {
      throw Error(ErrorCode::SizeMismatch, "row '" + row.id + "' has the wrong width");
    }
    append_field(out, row.id);
    out += ',';
    append_field(out, row.label);
    out += ',';
    append_field(out, row.speaker);
    out += ',';
    append_field(out, row.group);
    for (double v : row.values) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

FeatureTable parse_feature_csv(const std::string& text) {
  FeatureTable table;
  std::size_t pos = 0;
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "features CSV is empty");
  auto header = next_record(text, pos);
  constexpr std::size_t kMeta = std::size(kMetaColumns);
  if (header.size() < kMeta ||
      !std::equal(std::begin(kMetaColumns), std::end(kMetaColumns), header.begin())) {
    throw Error(ErrorCode::InvalidArgument,
                "features CSV header must start with id,label,speaker,group");
  }
  table.names.assign(header.begin() + kMeta, header.end());
  std::size_t line = 1;
  while (pos < text.size()) {
    ++line;
    auto fields = next_record(text, pos);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::SizeMismatch, "features CSV line " + std::to_string(line) +
                                               " has " + std::to_string(fields.size()) +
                                               " fields, header has " +
                                               std::to_string(header.size()));
    }
    FeatureRow row{fields[0], fields[1], fields[2], fields[3], {}};
    row.values.reserve(table.names.size());
    for (std::size_t k = kMeta; k < fields.size(); ++k) {
      row.values.push_back(parse_double(fields[k], line));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
  write_text_atomic(path, render_feature_csv(table));
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  return parse_feature_csv(read_text(path));
}

}  // namespace topohead
