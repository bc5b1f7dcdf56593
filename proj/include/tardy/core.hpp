#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tardy {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CSV header / cell problems
struct SchemaError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};

// bad RunConfig / SynthConfig / HyperConfig values
struct ConfigError : Error {
    using Error::Error;
};

// non-finite loss or prediction during training
struct DivergenceError : Error {
    using Error::Error;
};

/// Dense row-major matrix of doubles. Small by design: the data sets here
/// are desk scale and every model works off contiguous rows.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) {
        return {values.data() + r * cols, cols};
    }

    Matrix take_rows(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < cols; ++c) out.at(i, c) = at(idx[i], c);
        return out;
    }
};

/// Per-row grouping factors (dataset-wide dense ids), used by the
/// multilevel models and carried alongside the feature matrix.
struct GroupStructure {
    std::vector<int> student;
    std::vector<int> course;

    GroupStructure take_rows(std::span<const std::size_t> idx) const {
        GroupStructure out;
        out.student.reserve(idx.size());
        out.course.reserve(idx.size());
        for (std::size_t i : idx) {
            out.student.push_back(student[i]);
            out.course.push_back(course[i]);
        }
        return out;
    }
};

inline std::vector<double> take_values(std::span<const double> v,
                                       std::span<const std::size_t> idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

inline double vec_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double vec_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double m = vec_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace tardy
