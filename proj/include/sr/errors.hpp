#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FileNotFound : Error {
    using Error::Error;
};

struct MissingColumn : Error {
    using Error::Error;
};

// row/col are zero-based positions in the file body (header row excluded).
struct NonNumericCell : Error {
    NonNumericCell(std::size_t row_, std::size_t col_, const std::string& detail)
        : Error("non-numeric cell at row " + std::to_string(row_) + ", column " +
                std::to_string(col_) + ": " + detail),
          row(row_),
          col(col_) {}
    std::size_t row;
    std::size_t col;
};

struct InvalidDataset : Error {
    using Error::Error;
};

struct RankDeficient : Error {
    RankDeficient(int rank_, int cols_)
        : Error("design matrix [X Z] is rank deficient: numerical rank " +
                std::to_string(rank_) + " of " + std::to_string(cols_) + " columns"),
          rank(rank_),
          cols(cols_) {}
    int rank;
    int cols;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct DegenerateStatistic : Error {
    using Error::Error;
};

struct LeverageOne : Error {
    using Error::Error;
};

struct UnsortedGrid : Error {
    using Error::Error;
};

struct MultidimensionalBeta : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

}  // namespace sr
