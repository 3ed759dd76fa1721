#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rasr {

using Real = double;
using numvec = std::vector<Real>;
using indvec = std::vector<int32_t>;

/// Input failed structural validation (sizes, stochasticity, coverage).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A parameter lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// File could not be parsed; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    size_t line() const { return line_; }

private:
    size_t line_;
};

/// An enumeration-based oracle refused because the instance is too large.
class SizeGuardError : public std::runtime_error {
public:
    explicit SizeGuardError(const std::string& what) : std::runtime_error(what) {}
};

/// The requested tolerance would need more backups than the hard ceiling.
class HorizonCapError : public std::runtime_error {
public:
    explicit HorizonCapError(const std::string& what) : std::runtime_error(what) {}
};

/// Neumaier-compensated sum; keeps validation thresholds meaningful for
/// distributions with many atoms.
Real compensated_sum(const Real* values, size_t n);
inline Real compensated_sum(const numvec& values) {
    return compensated_sum(values.data(), values.size());
}

/// Maximum worker threads used by parallel loops. Initialized from the
/// RASR_THREADS environment variable, else hardware concurrency.
size_t max_threads();
void set_max_threads(size_t n);

/// Runs fn(lo, hi) over a static partition of [begin, end). Every index is
/// processed exactly once and writes must go to disjoint slots, so results
/// are identical for any thread count.
void parallel_chunks(size_t begin, size_t end, size_t grain,
                     const std::function<void(size_t, size_t)>& fn);

} // namespace rasr
