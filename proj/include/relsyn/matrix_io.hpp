#pragma once

#include <iosfwd>
#include <string>

#include "relsyn/lti.hpp"

namespace relsyn {

// Text formats. Matrix: "rows cols" then rows of decimals. FIR: "p m T" then
// T+1 blocks in tap order. '#' starts a comment that runs to end of line.

Matrix parse_matrix(std::istream& in);
Matrix read_matrix(const std::string& path);
void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix(const std::string& path, const Matrix& m);

FirSystem parse_fir(std::istream& in);
FirSystem read_fir(const std::string& path);
void write_fir(std::ostream& out, const FirSystem& f);
void write_fir(const std::string& path, const FirSystem& f);

/// Plant file: named blocks "A", "B1", "B2", "C1", "D12", optional "D11" and
/// "C2", each a block name on its own line followed by a matrix literal.
/// Without a C2 block the plant measures the full state.
Plant read_plant(const std::string& path);
Plant parse_plant(std::istream& in);

/// Whitespace tokens of a stream with comments removed.
std::string strip_comments(std::istream& in);

}  // namespace relsyn
