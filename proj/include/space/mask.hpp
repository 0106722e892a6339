#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "space/errors.hpp"

namespace space {

// Boolean attention mask; entry (i, j) says whether query row i may attend
// to key column j.
struct AttnMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits;

    AttnMask() = default;
    AttnMask(std::size_t r, std::size_t c) : rows(r), cols(c), bits(r * c, 0) {}

    std::uint8_t& at(std::size_t i, std::size_t j) { return bits[i * cols + j]; }
    std::uint8_t at(std::size_t i, std::size_t j) const { return bits[i * cols + j]; }

    std::size_t row_sum(std::size_t i) const {
        std::size_t s = 0;
        for (std::size_t j = 0; j < cols; ++j) s += at(i, j);
        return s;
    }

    static AttnMask lower_triangular(std::size_t n) {
        AttnMask m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) m.at(i, j) = 1;
        }
        return m;
    }

    // Text grid, one row per line; '#' marks an allowed pair.
    std::string render() const {
        std::string out;
        out.reserve(rows * (cols + 1));
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                out.push_back(at(i, j) ? '#' : '.');
            }
            out.push_back('\n');
        }
        return out;
    }
};

}  // namespace space
