#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mimolab {

// Argument outside the domain of a function; carries the value that broke it.
class domain_error : public std::domain_error {
public:
    domain_error(const std::string& what, double offending)
        : std::domain_error(what), offending_(offending) {}
    double offending() const noexcept { return offending_; }

private:
    double offending_;
};

class range_error : public std::range_error {
public:
    using std::range_error::range_error;
};

class dimension_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An extremum could not be bracketed; the scanned (x, f(x)) grid is attached.
class extremum_error : public std::runtime_error {
public:
    extremum_error(const std::string& what, std::vector<std::pair<double, double>> grid)
        : std::runtime_error(what), grid_(std::move(grid)) {}
    const std::vector<std::pair<double, double>>& grid() const noexcept { return grid_; }

private:
    std::vector<std::pair<double, double>> grid_;
};

// An iteration ran out of budget; the per-iteration distance trace is attached.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace mimolab
