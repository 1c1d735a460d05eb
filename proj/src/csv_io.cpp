#include "ddstab/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ddstab/errors.hpp"

namespace ddstab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> split_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    rows.push_back(split_fields(t));
  }
  return rows;
}

double parse_number(const std::string& field, std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidInput,
                "CSV row " + std::to_string(line) + ": cannot parse '" + field +
                    "' as a number");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidInput,
                "CSV row " + std::to_string(line) + ": non-finite value '" +
                    field + "'");
  }
  return value;
}

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Trajectory parse_trajectory_csv(const std::string& text, int n, int m) {
  const auto rows = split_rows(text);
  if (rows.empty()) {
    throw Error(ErrorCode::kInvalidInput, "trajectory CSV is empty");
  }
  const auto& header = rows.front();
  if (header.empty() || header.front() != "k") {
    throw Error(ErrorCode::kInvalidInput,
                "trajectory CSV header must start with 'k'");
  }
  int hm = 0, hn = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const bool is_u = starts_with(header[c], "u_");
    const bool is_x = starts_with(header[c], "x_");
    if (is_u && hn == 0) {
      ++hm;
    } else if (is_x) {
      ++hn;
    } else {
      throw Error(ErrorCode::kInvalidInput,
                  "trajectory CSV header: unexpected column '" + header[c] +
                      "' (expected k,u_1..u_m,x_1..x_n)");
    }
  }
  if (hm < 1 || hn < 1) {
    throw Error(ErrorCode::kInvalidInput,
                "trajectory CSV needs at least one u_ and one x_ column");
  }
  if ((n > 0 && n != hn) || (m > 0 && m != hm)) {
    throw Error(ErrorCode::kInvalidInput,
                "trajectory CSV has m=" + std::to_string(hm) +
                    ", n=" + std::to_string(hn) + " but m=" +
                    std::to_string(m) + ", n=" + std::to_string(n) +
                    " was requested");
  }
  const std::size_t data_rows = rows.size() - 1;
  if (data_rows < 2) {
    throw Error(ErrorCode::kInvalidInput,
                "trajectory CSV needs at least two rows (T >= 1)");
  }
  const auto T = static_cast<Eigen::Index>(data_rows - 1);
  Matrix states(hn, T + 1);
  Matrix inputs(hm, T);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto k = static_cast<Eigen::Index>(r - 1);
    if (row.size() != header.size()) {
      throw Error(ErrorCode::kInvalidInput,
                  "CSV row " + std::to_string(r) + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    if (static_cast<Eigen::Index>(parse_number(row[0], r)) != k) {
      throw Error(ErrorCode::kInvalidInput,
                  "CSV row " + std::to_string(r) + ": k out of sequence");
    }
    const bool last = k == T;
    for (int i = 0; i < hm; ++i) {
      const auto& f = row[1 + i];
      if (last) {
        if (!f.empty()) {
          throw Error(ErrorCode::kInvalidInput,
                      "final trajectory row must leave u fields empty");
        }
      } else {
        inputs(i, k) = parse_number(f, r);
      }
    }
    for (int i = 0; i < hn; ++i) states(i, k) = parse_number(row[1 + hm + i], r);
  }
  return Trajectory(std::move(states), std::move(inputs));
}

Trajectory read_trajectory_csv(const std::string& path, int n, int m) {
  return parse_trajectory_csv(read_file(path), n, m);
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << 'k';
  for (int i = 1; i <= traj.input_dim(); ++i) out << ",u_" << i;
  for (int i = 1; i <= traj.state_dim(); ++i) out << ",x_" << i;
  out << '\n';
  for (int k = 0; k <= traj.horizon(); ++k) {
    out << k;
    for (int i = 0; i < traj.input_dim(); ++i) {
      out << ',';
      if (k < traj.horizon()) out << format(traj.inputs()(i, k));
    }
    for (int i = 0; i < traj.state_dim(); ++i) {
      out << ',' << format(traj.states()(i, k));
    }
    out << '\n';
  }
  return out.str();
}

Matrix parse_signal_csv(const std::string& text) {
  const auto rows = split_rows(text);
  if (rows.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "signal CSV needs a header and data");
  }
  const auto& header = rows.front();
  std::vector<std::size_t> cols;
  bool any_u = false;
  for (const auto& h : header) any_u = any_u || starts_with(h, "u_");
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "k") continue;
    if (any_u && !starts_with(header[c], "u_")) continue;
    cols.push_back(c);
  }
  if (cols.empty()) {
    throw Error(ErrorCode::kInvalidInput, "signal CSV has no signal columns");
  }
  std::vector<std::vector<double>> samples;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(ErrorCode::kInvalidInput,
                  "CSV row " + std::to_string(r) + " has " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    bool all_empty = true;
    for (auto c : cols) all_empty = all_empty && row[c].empty();
    if (all_empty && r + 1 == rows.size()) break;
    std::vector<double> sample;
    for (auto c : cols) sample.push_back(parse_number(row[c], r));
    samples.push_back(std::move(sample));
  }
  if (samples.empty()) {
    throw Error(ErrorCode::kInvalidInput, "signal CSV has no samples");
  }
  Matrix out(static_cast<Eigen::Index>(cols.size()),
             static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          samples[k][i];
    }
  }
  return out;
}

Matrix read_signal_csv(const std::string& path) {
  return parse_signal_csv(read_file(path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move output into '" + path + "'");
  }
}

}  // namespace ddstab
