#include "ureid/data_model.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ureid {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long long parse_int_field(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw DataError(where + ": not an integer: `" + s + "`");
  }
  return v;
}

double parse_float_field(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw DataError(where + ": not a number: `" + s + "`");
  }
  return v;
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::vector<SampleRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "sample_id" || header[1] != "domain" ||
      header[2] != "gt_label" || header[3] != "cam_id") {
    throw DataError(path + ": bad header, expected sample_id,domain,gt_label,cam_id,f0,...");
  }
  const int d_in = static_cast<int>(header.size()) - 4;
  for (int j = 0; j < d_in; ++j) {
    if (header[static_cast<std::size_t>(4 + j)] != "f" + std::to_string(j)) {
      throw DataError(path + ": bad feature column name at position " + std::to_string(4 + j));
    }
  }

  std::vector<SampleRecord> records;
  std::int64_t next_id[2] = {0, 0};  // dense re-indexing per domain
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 4 + d_in) {
      throw DataError(where + ": dimension mismatch, expected " + std::to_string(4 + d_in) +
                      " columns, got " + std::to_string(fields.size()));
    }
    SampleRecord rec;
    (void)parse_int_field(fields[0], where);  // original id is replaced by a dense one
    if (fields[1] == "src") {
      rec.domain = Domain::Source;
    } else if (fields[1] == "tgt") {
      rec.domain = Domain::Target;
    } else {
      throw DataError(where + ": domain must be src or tgt, got `" + fields[1] + "`");
    }
    rec.gt_label = static_cast<int>(parse_int_field(fields[2], where));
    rec.cam_id = static_cast<int>(parse_int_field(fields[3], where));
    if (rec.gt_label < -1 || rec.cam_id < -1) {
      throw DataError(where + ": gt_label/cam_id must be >= 0 or -1 for absent");
    }
    if (rec.domain == Domain::Source && rec.gt_label < 0) {
      throw DataError(where + ": source records must carry a ground-truth label");
    }
    rec.input = Vec(d_in);
    for (int j = 0; j < d_in; ++j) {
      rec.input[j] = parse_float_field(fields[static_cast<std::size_t>(4 + j)], where);
    }
    rec.sample_id = next_id[rec.domain == Domain::Target ? 1 : 0]++;
    records.push_back(std::move(rec));
  }
  return records;
}

void save_dataset(const std::string& path, const std::vector<SampleRecord>& records, int d_in) {
  if (d_in < 0) {
    if (records.empty()) throw DataError("save_dataset: empty record list needs an explicit dimension");
    d_in = static_cast<int>(records.front().input.size());
  }
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw DataError("cannot write dataset file: " + path);
  out << "sample_id,domain,gt_label,cam_id";
  for (int j = 0; j < d_in; ++j) out << ",f" << j;
  out << "\n";
  for (const auto& rec : records) {
    if (static_cast<int>(rec.input.size()) != d_in) {
      throw DataError("save_dataset: record dimension " + std::to_string(rec.input.size()) +
                      " does not match " + std::to_string(d_in));
    }
    out << rec.sample_id << ',' << (rec.domain == Domain::Source ? "src" : "tgt") << ','
        << rec.gt_label << ',' << rec.cam_id;
    for (int j = 0; j < d_in; ++j) out << ',' << fmt9(rec.input[j]);
    out << "\n";
  }
}

int PseudoLabelState::n_outliers() const {
  int n = 0;
  for (const int a : assignment) n += (a < 0);
  return n;
}

void PseudoLabelState::validate() const {
  std::vector<int> counts(static_cast<std::size_t>(n_clusters), 0);
  for (const int a : assignment) {
    if (a < -1 || a >= n_clusters) {
      throw ContractError("pseudo label out of range: " + std::to_string(a));
    }
    if (a >= 0) ++counts[static_cast<std::size_t>(a)];
  }
  for (int k = 0; k < n_clusters; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      throw ContractError("cluster ids not dense: cluster " + std::to_string(k) + " is empty");
    }
    if (counts[static_cast<std::size_t>(k)] < 2) {
      throw ContractError("cluster " + std::to_string(k) + " has fewer than 2 members");
    }
  }
}

PseudoSplit split_by_pseudo_label(const PseudoLabelState& state) {
  state.validate();
  PseudoSplit split;
  for (int i = 0; i < state.size(); ++i) {
    const int a = state.assignment[static_cast<std::size_t>(i)];
    if (a < 0) {
      split.outliers.push_back(i);
    } else {
      split.clusters[a].push_back(i);
    }
  }
  return split;
}

Mat training_inputs(const std::vector<SampleRecord>& records) {
  if (records.empty()) return Mat(0, 0);
  Mat m(static_cast<Eigen::Index>(records.size()), records.front().input.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].input.size() != m.cols()) {
      throw DataError("inconsistent input dimension at record " + std::to_string(i));
    }
    m.row(static_cast<Eigen::Index>(i)) = records[i].input.transpose();
  }
  return m;
}

std::vector<int> evaluation_labels(const std::vector<SampleRecord>& records) {
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& rec : records) labels.push_back(rec.gt_label);
  return labels;
}

}  // namespace ureid
