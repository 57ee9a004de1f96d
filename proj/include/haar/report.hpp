#pragma once
// Run reports: deterministic JSON or CSV with 17 significant digits.

#include <string>

#include "haar/io.hpp"

namespace haar::report {

using json = io::json;

/// %.17g in the C locale; non-finite values become null.
std::string format_number(double value);

std::string dump_json(const json& doc);
/// One "path,value" row per leaf; paths join keys and array indices with '.'.
std::string dump_csv(const json& doc);

/// Lowercase hex SHA-256 of a file's bytes. Throws InputError if unreadable.
std::string sha256_file(const std::string& path);

/// {"value": v, "provenance": p, "tolerance": tol}.
json tagged(double value, const char* provenance, double tolerance);

}  // namespace haar::report
