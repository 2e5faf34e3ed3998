#pragma once

#include <stdexcept>
#include <string>

namespace apxsym {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text; carries the position of the offending token.
struct ParseError : Error {
    ParseError(std::string msg, int line_, int col_)
        : Error(std::move(msg)), line(line_), col(col_) {}
    int line = 0;
    int col = 0;
};

// Numeric evaluation outside a kernel domain (log of a negative sample,
// unsupported hypergeometric region, ...).
struct EvalDomainError : Error {
    using Error::Error;
};

// Structural failures: degenerate ansatz, cyclic rewrite systems,
// non-polynomial residual dependence, missed truncation.
struct StructureError : Error {
    using Error::Error;
};

} // namespace apxsym
