// Copyright 2026 The btlcov Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BTLCOV_IO_HPP_
#define BTLCOV_IO_HPP_

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "btlcov/model.hpp"
#include "btlcov/types.hpp"

namespace btlcov {

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

inline std::string strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline long parse_long(const std::string& text, const std::string& file,
                       long line) {
  try {
    std::size_t used = 0;
    const long value = std::stol(strip(text), &used);
    if (used != strip(text).size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(line) +
                     ": expected an integer, got '" + strip(text) + "'");
  }
}

inline double parse_double(const std::string& text, const std::string& file,
                           long line) {
  try {
    std::size_t used = 0;
    const double value = std::stod(strip(text), &used);
    if (used != strip(text).size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(line) +
                     ": expected a number, got '" + strip(text) + "'");
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace detail

// Covariates CSV: header `item_id,x1,...,xd`, one row per item, ids
// 0-based and contiguous (any row order). Returns the raw matrix; callers
// rescale.
inline Matrix load_covariates_csv(const std::string& path) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty file");
  const auto header = detail::split_csv(lines[0]);
  if (header.empty() || detail::strip(header[0]) != "item_id") {
    throw ParseError(path + ":1: expected header starting with 'item_id'");
  }
  const int d = static_cast<int>(header.size()) - 1;
  for (int c = 0; c < d; ++c) {
    if (detail::strip(header[c + 1]) != "x" + std::to_string(c + 1)) {
      throw ParseError(path + ":1: expected covariate column 'x" +
                       std::to_string(c + 1) + "', got '" +
                       detail::strip(header[c + 1]) + "'");
    }
  }
  std::vector<std::pair<long, std::vector<double>>> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (detail::strip(lines[ln]).empty()) continue;
    const auto fields = detail::split_csv(lines[ln]);
    if (static_cast<int>(fields.size()) != d + 1) {
      throw ParseError(path + ":" + std::to_string(ln + 1) + ": expected " +
                       std::to_string(d + 1) + " fields, got " +
                       std::to_string(fields.size()));
    }
    const long id = detail::parse_long(fields[0], path, ln + 1);
    std::vector<double> values(d);
    for (int c = 0; c < d; ++c) {
      values[c] = detail::parse_double(fields[c + 1], path, ln + 1);
    }
    rows.emplace_back(id, std::move(values));
  }
  const long n = static_cast<long>(rows.size());
  if (n == 0) throw ParseError(path + ": no item rows");
  std::vector<bool> seen(n, false);
  Matrix x(n, d);
  for (const auto& [id, values] : rows) {
    if (id < 0 || id >= n) {
      throw ParseError(path + ": item_id " + std::to_string(id) +
                       " is outside 0.." + std::to_string(n - 1) +
                       "; ids must be 0-based and contiguous");
    }
    if (seen[id]) {
      throw ParseError(path + ": duplicate item_id " + std::to_string(id));
    }
    seen[id] = true;
    for (int c = 0; c < d; ++c) x(id, c) = values[c];
  }
  return x;
}

struct DatasetLoad {
  ComparisonDataset data;
  double covariate_scale = 1.0;  // the K divided out of the raw covariates
};

// Comparisons CSV, either aggregated (`item_i,item_j,wins_j,trials`,
// wins_j = trials won by item_j) or per-trial long format
// (`winner,loser`), which is aggregated by the loader. Duplicate pairs
// and self-pairs are rejected; ids must reference the covariates file.
// l_ref_override = 0 selects the median per-edge trial count as the
// reference (the common count, for homogeneous data).
inline DatasetLoad load_dataset(const std::string& covariates_path,
                                const std::string& comparisons_path,
                                long l_ref_override = 0) {
  const Matrix raw = load_covariates_csv(covariates_path);
  const long n = raw.rows();
  const auto lines = detail::read_lines(comparisons_path);
  if (lines.empty()) throw ParseError(comparisons_path + ": empty file");
  const auto header = detail::split_csv(lines[0]);
  std::vector<std::string> names;
  names.reserve(header.size());
  for (const auto& h : header) names.push_back(detail::strip(h));

  // Canonical pair (hi, lo) -> (wins of hi, trials), first seen line.
  std::map<std::pair<int, int>, Edge> edges;

  auto check_pair = [&](long a, long b, std::size_t ln) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw ParseError(comparisons_path + ":" + std::to_string(ln + 1) +
                       ": item id outside 0.." + std::to_string(n - 1));
    }
    if (a == b) {
      throw ParseError(comparisons_path + ":" + std::to_string(ln + 1) +
                       ": self-pair (" + std::to_string(a) + ", " +
                       std::to_string(b) + ") is not allowed");
    }
  };

  if (names == std::vector<std::string>{"item_i", "item_j", "wins_j",
                                        "trials"}) {
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      if (detail::strip(lines[ln]).empty()) continue;
      const auto fields = detail::split_csv(lines[ln]);
      if (fields.size() != 4) {
        throw ParseError(comparisons_path + ":" + std::to_string(ln + 1) +
                         ": expected 4 fields, got " +
                         std::to_string(fields.size()));
      }
      const long a = detail::parse_long(fields[0], comparisons_path, ln + 1);
      const long b = detail::parse_long(fields[1], comparisons_path, ln + 1);
      const long wins_j = detail::parse_long(fields[2], comparisons_path,
                                             ln + 1);
      const long trials = detail::parse_long(fields[3], comparisons_path,
                                             ln + 1);
      check_pair(a, b, ln);
      if (trials < 1) {
        throw ParseError(comparisons_path + ":" + std::to_string(ln + 1) +
                         ": trials must be >= 1");
      }
      if (wins_j < 0 || wins_j > trials) {
        throw ParseError(comparisons_path + ":" + std::to_string(ln + 1) +
                         ": wins_j outside [0, trials]");
      }
      const int hi = static_cast<int>(std::max(a, b));
      const int lo = static_cast<int>(std::min(a, b));
      // wins_j counts the wins of item_j; convert to wins of the
      // larger-index endpoint.
      const long wins_hi = (b == hi) ? wins_j : trials - wins_j;
      const auto [it, inserted] =
          edges.insert({{hi, lo}, Edge{hi, lo, wins_hi, trials}});
      if (!inserted) {
        throw ParseError(comparisons_path + ":" + std::to_string(ln + 1) +
                         ": duplicate pair (" + std::to_string(a) + ", " +
                         std::to_string(b) + ")");
      }
    }
  } else if (names == std::vector<std::string>{"winner", "loser"}) {
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      if (detail::strip(lines[ln]).empty()) continue;
      const auto fields = detail::split_csv(lines[ln]);
      if (fields.size() != 2) {
        throw ParseError(comparisons_path + ":" + std::to_string(ln + 1) +
                         ": expected 2 fields, got " +
                         std::to_string(fields.size()));
      }
      const long w = detail::parse_long(fields[0], comparisons_path, ln + 1);
      const long l = detail::parse_long(fields[1], comparisons_path, ln + 1);
      check_pair(w, l, ln);
      const int hi = static_cast<int>(std::max(w, l));
      const int lo = static_cast<int>(std::min(w, l));
      Edge& edge = edges
                       .insert({{hi, lo}, Edge{hi, lo, 0, 0}})
                       .first->second;
      edge.trials += 1;
      if (w == hi) edge.wins += 1;
    }
  } else {
    throw ParseError(comparisons_path +
                     ":1: unrecognized header; expected "
                     "'item_i,item_j,wins_j,trials' or 'winner,loser'");
  }

  if (edges.empty()) {
    throw ParseError(comparisons_path + ": no comparison rows");
  }
  std::vector<Edge> edge_list;
  edge_list.reserve(edges.size());
  for (const auto& [key, edge] : edges) edge_list.push_back(edge);
  std::sort(edge_list.begin(), edge_list.end(),
            [](const Edge& a, const Edge& b) {
              return std::make_pair(a.i, a.j) < std::make_pair(b.i, b.j);
            });

  long l_ref = l_ref_override;
  if (l_ref <= 0) {
    std::vector<long> trials;
    trials.reserve(edge_list.size());
    for (const Edge& e : edge_list) trials.push_back(e.trials);
    std::sort(trials.begin(), trials.end());
    l_ref = trials[(trials.size() - 1) / 2];
  }

  auto [scaled, k] = rescale_covariates(raw);
  return DatasetLoad{
      ComparisonDataset(std::move(scaled), std::move(edge_list), l_ref), k};
}

// Writes the dataset back out in the canonical CSV formats. Numeric
// covariates are printed with enough digits to round-trip exactly.
inline void write_dataset(const ComparisonDataset& data,
                          const std::string& covariates_path,
                          const std::string& comparisons_path) {
  {
    std::ofstream out(covariates_path);
    if (!out) throw ParseError("cannot write file: " + covariates_path);
    out << "item_id";
    for (int c = 0; c < data.d(); ++c) out << ",x" << (c + 1);
    out << "\n";
    for (int i = 0; i < data.n(); ++i) {
      out << i;
      for (int c = 0; c < data.d(); ++c) {
        out << "," << detail::format_double(data.covariates()(i, c));
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(comparisons_path);
    if (!out) throw ParseError("cannot write file: " + comparisons_path);
    out << "item_i,item_j,wins_j,trials\n";
    for (const Edge& e : data.edges()) {
      // Written with item_j as the larger-index endpoint, whose wins the
      // dataset stores, so a reload is bit-identical.
      out << e.j << "," << e.i << "," << e.wins << "," << e.trials << "\n";
    }
  }
}

// Plain-text run configuration, `key = value` per line, '#' comments.
// Unknown keys are rejected and all violations are reported together.
struct RunConfig {
  std::optional<std::string> covariates;
  std::optional<std::string> comparisons;
  std::optional<std::string> out_dir;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<double> eta;
  std::optional<long> max_iter;
  std::optional<double> grad_tol;
  std::optional<long> bootstrap_b;
  std::optional<double> alpha_level;
  std::optional<std::uint64_t> seed;
  std::optional<long> threads;
  std::optional<std::string> preset;
  std::optional<long> reps;
};

inline RunConfig read_config(const std::string& path) {
  const auto lines = detail::read_lines(path);
  RunConfig config;
  std::vector<std::string> errors;
  auto fail = [&](std::size_t ln, const std::string& message) {
    errors.push_back(path + ":" + std::to_string(ln + 1) + ": " + message);
  };
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = detail::strip(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ln, "expected 'key = value'");
      continue;
    }
    const std::string key = detail::strip(line.substr(0, eq));
    const std::string value = detail::strip(line.substr(eq + 1));
    try {
      if (key == "covariates") {
        config.covariates = value;
      } else if (key == "comparisons") {
        config.comparisons = value;
      } else if (key == "out_dir") {
        config.out_dir = value;
      } else if (key == "lambda") {
        config.lambda = detail::parse_double(value, path, ln + 1);
      } else if (key == "tau") {
        config.tau = detail::parse_double(value, path, ln + 1);
      } else if (key == "eta") {
        config.eta = detail::parse_double(value, path, ln + 1);
      } else if (key == "max_iter") {
        config.max_iter = detail::parse_long(value, path, ln + 1);
      } else if (key == "grad_tol") {
        config.grad_tol = detail::parse_double(value, path, ln + 1);
      } else if (key == "B") {
        config.bootstrap_b = detail::parse_long(value, path, ln + 1);
      } else if (key == "alpha") {
        config.alpha_level = detail::parse_double(value, path, ln + 1);
      } else if (key == "seed") {
        config.seed = static_cast<std::uint64_t>(
            detail::parse_long(value, path, ln + 1));
      } else if (key == "threads") {
        config.threads = detail::parse_long(value, path, ln + 1);
      } else if (key == "preset") {
        config.preset = value;
      } else if (key == "reps") {
        config.reps = detail::parse_long(value, path, ln + 1);
      } else {
        fail(ln, "unknown key '" + key + "'");
      }
    } catch (const ParseError& e) {
      errors.push_back(e.what());
    }
  }
  for (const auto& [key, value] :
       std::initializer_list<std::pair<std::string, std::optional<std::string>>>{
           {"covariates", config.covariates},
           {"comparisons", config.comparisons}}) {
    if (value && !std::filesystem::exists(*value)) {
      errors.push_back(path + ": " + key + " file does not exist: " + *value);
    }
  }
  if (!errors.empty()) {
    std::string message = "config errors:";
    for (const auto& e : errors) message += "\n  " + e;
    throw ParseError(message);
  }
  return config;
}

inline void write_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  auto emit = [&](const char* key, const auto& value) {
    if (value) {
      if constexpr (std::is_same_v<std::decay_t<decltype(*value)>,
                                   std::string>) {
        out << key << " = " << *value << "\n";
      } else if constexpr (std::is_same_v<std::decay_t<decltype(*value)>,
                                          double>) {
        out << key << " = " << detail::format_double(*value) << "\n";
      } else {
        out << key << " = " << *value << "\n";
      }
    }
  };
  emit("covariates", config.covariates);
  emit("comparisons", config.comparisons);
  emit("out_dir", config.out_dir);
  emit("lambda", config.lambda);
  emit("tau", config.tau);
  emit("eta", config.eta);
  emit("max_iter", config.max_iter);
  emit("grad_tol", config.grad_tol);
  emit("B", config.bootstrap_b);
  emit("alpha", config.alpha_level);
  emit("seed", config.seed);
  emit("threads", config.threads);
  emit("preset", config.preset);
  emit("reps", config.reps);
}

}  // namespace btlcov

#endif  // BTLCOV_IO_HPP_
