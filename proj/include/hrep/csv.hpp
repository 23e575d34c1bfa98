#pragma once

// Datasets on disk are a directory holding schema.json and data.csv. The CSV
// has a header row naming the columns in schema order; a field is quoted only
// when it contains a comma, quote, CR or LF.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hrep/error.hpp"
#include "hrep/json_io.hpp"
#include "hrep/schema.hpp"
#include "hrep/workload.hpp"

namespace hrep {

namespace csv {

inline void put_field(std::string& out, std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

/// Reads one record; returns false at end of input. Quoted fields may span lines.
inline bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  if (quoted) throw Error(ErrorCode::InvalidArgument, "unterminated quoted CSV field");
  fields.push_back(std::move(field));
  return true;
}

}  // namespace csv

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Schema& schema) : schema_(schema), out_(path, std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    std::string line;
    for (std::size_t i = 0; i < schema.columns().size(); ++i) {
      if (i) line.push_back(',');
      csv::put_field(line, schema.column(i).name);
    }
    line.push_back('\n');
    out_ << line;
  }

  void write(const Row& row) {
    buf_.clear();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) buf_.push_back(',');
      csv::put_field(buf_, format_value(row[i]));
    }
    buf_.push_back('\n');
    out_ << buf_;
  }

  void close() {
    out_.flush();
    if (!out_) throw Error(ErrorCode::IoFailure, "CSV write failed");
    out_.close();
  }

 private:
  const Schema& schema_;
  std::ofstream out_;
  std::string buf_;
};

/// Streams rows of a dataset directory.
class CsvReader final : public RowGenerator {
 public:
  CsvReader(const std::filesystem::path& csv_path, Schema schema) : schema_(std::move(schema)), in_(csv_path) {
    if (!in_) throw Error(ErrorCode::IoFailure, "cannot open " + csv_path.string());
    if (!csv::read_record(in_, fields_)) throw Error(ErrorCode::EmptyDataset, csv_path.string() + " is empty");
    if (fields_.size() != schema_.columns().size())
      throw Error(ErrorCode::InvalidSchema, "CSV header has " + std::to_string(fields_.size()) + " columns, schema has " +
                                                std::to_string(schema_.columns().size()));
    for (std::size_t i = 0; i < fields_.size(); ++i)
      if (fields_[i] != schema_.column(i).name)
        throw Error(ErrorCode::InvalidSchema, "CSV column " + std::to_string(i) + " is '" + fields_[i] +
                                                  "', schema expects '" + schema_.column(i).name + "'");
    auto pos = in_.tellg();
    std::string line;
    while (std::getline(in_, line))
      if (!line.empty()) ++lines_;
    in_.clear();
    in_.seekg(pos);
  }

  const Schema& schema() const override { return schema_; }
  /// Line count after the header; exact unless quoted fields contain newlines.
  std::uint64_t size() const override { return lines_; }

  bool next(Row& row) override {
    while (true) {
      if (!csv::read_record(in_, fields_)) return false;
      ++line_;
      if (fields_.size() == 1 && fields_[0].empty()) continue;
      break;
    }
    if (fields_.size() != schema_.columns().size())
      throw Error(ErrorCode::TypeMismatch, "CSV record " + std::to_string(line_) + " has " +
                                               std::to_string(fields_.size()) + " fields");
    row.resize(fields_.size());
    for (std::size_t i = 0; i < fields_.size(); ++i) row[i] = parse_value(schema_.column(i).type, fields_[i]);
    return true;
  }

 private:
  Schema schema_;
  std::ifstream in_;
  std::vector<std::string> fields_;
  std::uint64_t lines_ = 0;
  std::uint64_t line_ = 0;
};

struct DatasetPaths {
  std::filesystem::path dir;
  std::filesystem::path schema() const { return dir / "schema.json"; }
  std::filesystem::path data() const { return dir / "data.csv"; }
};

inline Schema read_dataset_schema(const std::filesystem::path& dir) {
  DatasetPaths p{dir};
  if (!std::filesystem::exists(p.schema())) throw Error(ErrorCode::IoFailure, "no schema.json in " + dir.string());
  return json::schema_from_json(json::read_file(p.schema()));
}

inline CsvReader open_dataset(const std::filesystem::path& dir) {
  return CsvReader(DatasetPaths{dir}.data(), read_dataset_schema(dir));
}

/// Drains `gen` into a dataset directory; returns the number of rows written.
inline std::uint64_t write_dataset(const std::filesystem::path& dir, RowGenerator& gen) {
  std::filesystem::create_directories(dir);
  DatasetPaths p{dir};
  json::write_file(p.schema(), json::to_json(gen.schema()));
  CsvWriter w(p.data(), gen.schema());
  Row row;
  std::uint64_t n = 0;
  while (gen.next(row)) {
    w.write(row);
    ++n;
  }
  w.close();
  return n;
}

}  // namespace hrep
