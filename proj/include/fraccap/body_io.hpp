#pragma once

#include "fraccap/geometry.hpp"

#include <stdexcept>
#include <string>

namespace fraccap {

/// Error in a body or config file; `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, int line, const std::string& key, const std::string& message);
    std::string source;
    int line;
    std::string key;
};

/// Body files are flat `key = value` text, `#` starts a comment:
///
///     type = ball | polytope | support
///     dim = 2                      # optional, inferred from coordinates
///     center = 0, 0                # ball
///     radius = 1                   # ball
///     vertices = 1,1; -1,1; -1,-1  # polytope, points separated by ';'
///     directions = 256             # grid size (default 256 in 2D, 512 in 3D)
///     values = 1, 1, ...           # support: one value per grid direction
ConvexBody parse_body(const std::string& text, const std::string& source = "<body>");
ConvexBody load_body(const std::string& path);

/// Inverse of parse_body; sampled bodies are written with full precision.
std::string format_body(const ConvexBody& k);

}  // namespace fraccap
