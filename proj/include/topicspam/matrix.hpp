#pragma once

#include <span>
#include <vector>

#include "topicspam/error.hpp"

namespace topicspam {

// Dense row-major matrix of doubles. Small and unclever on purpose; the
// pipeline never needs linear algebra beyond row/column walks.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::span<double> row(int r) {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    // row-subset copy, preserving the given order
    Matrix select_rows(std::span<const int> idx) const {
        Matrix out(static_cast<int>(idx.size()), cols);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto src = row(idx[i]);
            for (int c = 0; c < cols; ++c) out.at(static_cast<int>(i), c) = src[c];
        }
        return out;
    }
};

} // namespace topicspam
