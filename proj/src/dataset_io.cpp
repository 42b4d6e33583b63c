#include "tiltedbb/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tiltedbb {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw InputError(source + ":" + std::to_string(line) + ": " + what);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

std::int64_t parse_count(const std::string& source, std::size_t line, const std::string& column,
                         const std::string& text) {
  double v = 0.0;
  if (!parse_double(text, v) || !std::isfinite(v) || v != std::floor(v)) {
    fail(source, line, "column '" + column + "' must hold an integer, got '" + text + "'");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

Dataset read_dataset(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(trim(line));
      break;
    }
  }
  if (header.empty()) throw InputError(source + ": empty file (no header row)");
  for (auto& h : header) h = strip_quotes(h);

  std::ptrdiff_t y_col = -1;
  std::ptrdiff_t n_col = -1;
  std::vector<std::string> covariates;
  std::vector<std::size_t> covariate_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "y") {
      y_col = static_cast<std::ptrdiff_t>(j);
    } else if (header[j] == "n") {
      n_col = static_cast<std::ptrdiff_t>(j);
    } else {
      if (header[j].empty()) fail(source, line_no, "empty column name in header");
      covariates.push_back(header[j]);
      covariate_cols.push_back(j);
    }
  }
  if (y_col < 0 || n_col < 0) {
    fail(source, line_no, "header must contain columns 'y' and 'n'");
  }

  Dataset data(covariates);
  std::vector<double> row(covariates.size());
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_csv(t);
    if (fields.size() != header.size()) {
      fail(source, line_no,
           "expected " + std::to_string(header.size()) + " fields, found " +
               std::to_string(fields.size()));
    }
    const auto y = parse_count(source, line_no, "y", fields[static_cast<std::size_t>(y_col)]);
    const auto n = parse_count(source, line_no, "n", fields[static_cast<std::size_t>(n_col)]);
    if (n < 1) fail(source, line_no, "n must be >= 1, got " + std::to_string(n));
    if (y < 0) fail(source, line_no, "y must be >= 0, got " + std::to_string(y));
    if (y > n) {
      fail(source, line_no,
           "y=" + std::to_string(y) + " exceeds n=" + std::to_string(n) + " (row " +
               std::to_string(data.size() + 1) + ")");
    }
    for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
      if (!parse_double(fields[covariate_cols[k]], row[k]) || !std::isfinite(row[k])) {
        fail(source, line_no,
             "covariate '" + covariates[k] + "' is not a finite number: '" +
                 fields[covariate_cols[k]] + "'");
      }
    }
    data.add_row(y, n, row);
  }
  if (data.empty()) throw InputError(source + ": no data rows");
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in, path.string());
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "y,n";
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.y(i) << ',' << data.trials(i);
    for (std::size_t j = 0; j < data.covariate_names().size(); ++j) {
      out << ',' << data.covariate(j, i);
    }
    out << '\n';
  }
}

void write_chain_csv(std::ostream& out, const PosteriorSample& posterior, std::size_t chain) {
  const auto& c = posterior.chains.at(chain);
  for (const auto& name : posterior.names) out << name << ',';
  out << "deviance,chain\n" << std::setprecision(17);
  const std::size_t p = posterior.n_params();
  const std::size_t rows = p == 0 ? 0 : c.draws.size() / p;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < p; ++j) out << c.draws[r * p + j] << ',';
    if (r < c.deviance.size()) out << c.deviance[r];
    out << ',' << chain + 1 << '\n';
  }
}

std::filesystem::path chain_csv_path(const std::filesystem::path& dir, std::size_t chain) {
  return dir / ("chains_" + std::to_string(chain + 1) + ".csv");
}

PosteriorSample read_chain_csvs(const std::filesystem::path& dir) {
  PosteriorSample sample;
  for (std::size_t k = 0;; ++k) {
    const auto path = chain_csv_path(dir, k);
    std::ifstream in(path);
    if (!in) break;
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty chain file");
    auto header = split_csv(trim(line));
    if (header.size() < 2 || header[header.size() - 2] != "deviance" ||
        header.back() != "chain") {
      throw InputError(path.string() + ":1: header must end with 'deviance,chain'");
    }
    header.resize(header.size() - 2);
    if (k == 0) {
      sample.names = header;
    } else if (header != sample.names) {
      throw InputError(path.string() + ":1: parameter columns differ from chains_1.csv");
    }
    ChainResult chain;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_csv(trim(line));
      if (fields.size() != header.size() + 2) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": wrong field count");
      }
      for (std::size_t j = 0; j < header.size(); ++j) {
        double v = 0.0;
        if (!parse_double(fields[j], v)) {
          throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                           fields[j] + "'");
        }
        chain.draws.push_back(v);
      }
      double dev = 0.0;
      if (parse_double(fields[header.size()], dev)) chain.deviance.push_back(dev);
    }
    sample.chains.push_back(std::move(chain));
  }
  if (sample.chains.empty()) {
    throw InputError("no chain files (chains_1.csv, ...) found in '" + dir.string() + "'");
  }
  const std::size_t rows = sample.chains.front().draws.size();
  for (const auto& c : sample.chains) {
    if (c.draws.size() != rows) throw InputError("chain files have different lengths");
  }
  return sample;
}

}  // namespace tiltedbb
