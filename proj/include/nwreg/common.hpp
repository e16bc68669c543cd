#ifndef NWREG_COMMON_HPP
#define NWREG_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace nwreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input contains NaN or infinity.
class NonFiniteError : public Error {
public:
    explicit NonFiniteError(const std::string& msg) : Error(msg) {}
};

/// A centered predictor column is identically zero.
class DegenerateColumnError : public Error {
public:
    explicit DegenerateColumnError(const std::string& msg) : Error(msg) {}
};

/// A Gram matrix is numerically singular.
class SingularGramError : public Error {
public:
    SingularGramError(const std::string& msg, double condition_estimate)
        : Error(msg), condition(condition_estimate) {}
    double condition;  ///< condition-number estimate that tripped the gate
};

class ZeroDenominatorError : public Error {
public:
    explicit ZeroDenominatorError(const std::string& msg) : Error(msg) {}
};

class ZeroSEError : public Error {
public:
    explicit ZeroSEError(const std::string& msg) : Error(msg) {}
};

/// Quantile solver did not reach its optimality certificate.
class SolverFailError : public Error {
public:
    SolverFailError(const std::string& msg, int iterations, double gap)
        : Error(msg), iterations(iterations), gap(gap) {}
    int iterations;
    double gap;
};

/// Too few residuals inside the density-estimation band.
class EmptyBandError : public Error {
public:
    explicit EmptyBandError(const std::string& msg) : Error(msg) {}
};

/// Simulation scale mode incompatible with the tail index.
class ModeMismatchError : public Error {
public:
    explicit ModeMismatchError(const std::string& msg) : Error(msg) {}
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line(line) {}
    long line;
};

class DuplicateRowError : public Error {
public:
    explicit DuplicateRowError(const std::string& msg) : Error(msg) {}
};

class MissingIndexError : public Error {
public:
    explicit MissingIndexError(const std::string& msg) : Error(msg) {}
};

}  // namespace nwreg

#endif
