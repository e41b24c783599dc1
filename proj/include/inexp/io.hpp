#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "inexp/cave.hpp"
#include "inexp/newton.hpp"

namespace inexp::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coordinate "real general" Matrix Market, 1-based, values with 17 digits.
void write_matrix_market(const std::filesystem::path& path, const CsrMatrix<double>& A);

/// Reads coordinate real/integer general files. Duplicate entries are summed.
CsrMatrix<double> read_matrix_market(const std::filesystem::path& path);

/**
 * Writes <stem>.mtx and <stem>.json, where stem is `out` without extension.
 * The sidecar holds n, density, seed, d, b, x_star and the matrix file name
 * relative to the sidecar.
 */
void save_instance(const std::filesystem::path& out, const cave::CaveInstance& inst);

/// Loads an instance from its JSON sidecar.
cave::CaveInstance load_instance(const std::filesystem::path& sidecar);

/// One object per iteration with every certificate field, plus the summary.
nlohmann::json trace_to_json(const SolveTrace<double>& trace);

/// Writes text to a file, throwing IoError if the stream fails.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace inexp::io
