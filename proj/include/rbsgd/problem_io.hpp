#pragma once

// Problem container: a magic line, a single-line JSON header naming every
// array with its shape, then the arrays as raw little-endian float64 in header
// order. Writing then reading reproduces every double bit for bit.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "rbsgd/problem.hpp"

namespace rbsgd {

inline constexpr const char* kProblemMagic = "RBSGD-PROBLEM 1";

void write_problem(std::ostream& out, const Problem& p);
Problem read_problem(std::istream& in);

void save_problem(const std::filesystem::path& path, const Problem& p);
Problem load_problem(const std::filesystem::path& path);

std::string serialize_problem(const Problem& p);

/// 64-bit FNV-1a over arbitrary bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
/// Digest of the serialized problem; equal digests for regenerated problems.
std::uint64_t problem_digest(const Problem& p);

}  // namespace rbsgd
