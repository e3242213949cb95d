#pragma once

#include "core/pomdp.hpp"

#include <istream>
#include <string>

namespace bsqz {

struct ParseOptions {
    /// Rows whose sums miss 1 by at most this much are rescaled; larger gaps are errors.
    double renormalise_tol = 1e-3;
};

/// Community POMDP text format: discount/values/states/actions/observations/start
/// headers and T:, O:, R: entries in single-value, row and matrix forms, with
/// `*` wildcards, names or indices, and the uniform/identity keywords.
/// Successor- and observation-dependent rewards are reduced to R(s,a) by taking the
/// expectation under T and Omega. Errors carry the offending line.
Pomdp parse_pomdp(std::istream& in, const ParseOptions& opt = {});
Pomdp parse_pomdp_string(const std::string& text, const ParseOptions& opt = {});

/// Loads a model file; files starting with the native artifact magic are read as
/// binary artifacts, anything else as the text format.
Pomdp load_pomdp(const std::string& path, const ParseOptions& opt = {});

}  // namespace bsqz
