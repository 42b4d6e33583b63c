#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiltedbb/mcmc.hpp"
#include "tiltedbb/regression.hpp"

namespace tiltedbb {

/// Malformed input file; the message names the file and line.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV with a header row holding at least `y` and `n`; every other column is
/// a numeric covariate. Blank lines are skipped.
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);

/// Inverse of read_dataset, full precision.
void write_dataset(std::ostream& out, const Dataset& data);

/// One row per retained draw: parameter columns, deviance, chain id (1-based).
void write_chain_csv(std::ostream& out, const PosteriorSample& posterior, std::size_t chain);
std::filesystem::path chain_csv_path(const std::filesystem::path& dir, std::size_t chain);

/// Reads chains_1.csv, chains_2.csv, ... until one is missing.
PosteriorSample read_chain_csvs(const std::filesystem::path& dir);

}  // namespace tiltedbb
